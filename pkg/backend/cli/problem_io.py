"""问题文件与内部实例互转"""

import json
import logging
from pathlib import Path
from typing import TypeVar

from pydantic import BaseModel, ValidationError

from backend.core.errors import InvalidProblemError
from backend.lift.scf import SCFInstance, scf_normalize
from backend.lift.snp import SNPInstance
from backend.models.schemas import DiscMap, Poly, ProblemFile, matrix_to_array

logger = logging.getLogger(__name__)

T = TypeVar("T", bound=BaseModel)


def json_pointer(loc: tuple[int | str, ...]) -> str:
    """pydantic 的 loc 转成 JSON Pointer，如 ("nodes", 0, "alpha") → /nodes/0/alpha"""
    return "/" + "/".join(str(part) for part in loc) if loc else "/"


def _parse(model: type[T], text: str) -> T:
    try:
        return model.model_validate_json(text)
    except ValidationError as e:
        first = e.errors()[0]
        raise InvalidProblemError(json_pointer(first["loc"]), first["msg"]) from e


def read_text(path: str) -> str:
    """读取输入文件

    Raises:
        InvalidProblemError: 文件不存在或不可读
    """
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InvalidProblemError("/", f"无法读取 {path}: {e}") from e


def load_problem(path: str) -> ProblemFile:
    """读取并校验问题文件

    Raises:
        InvalidProblemError: JSON 或结构错误，带出错字段路径
    """
    problem = _parse(ProblemFile, read_text(path))
    logger.debug(f"载入问题: kind={problem.kind}, n={problem.n}")
    return problem


def load_map(path: str) -> DiscMap:
    """读取先前 lift 输出的 DiscMap（可以是完整 lift 输出，取其中的 map 字段）"""
    text = read_text(path)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise InvalidProblemError("/", f"JSON 解析失败: {e.msg}") from e
    if isinstance(data, dict) and "map" in data:
        text = json.dumps(data["map"])
    return _parse(DiscMap, text)


def snp_instance(problem: ProblemFile) -> SNPInstance:
    if problem.kind != "snp" or not problem.nodes:
        raise InvalidProblemError("/kind", "需要 snp 问题")
    nodes = [(node.alpha, matrix_to_array(node.matrix)) for node in problem.nodes]
    return SNPInstance.create(problem.n, nodes)


def scf_instance(problem: ProblemFile) -> SCFInstance:
    if problem.kind != "scf" or problem.pair is None:
        raise InvalidProblemError("/kind", "需要 scf 问题")
    return scf_normalize(matrix_to_array(problem.pair.A), matrix_to_array(problem.pair.B))


def instance_of(problem: ProblemFile) -> SNPInstance | SCFInstance:
    return snp_instance(problem) if problem.kind == "snp" else scf_instance(problem)


def phi_of(problem: ProblemFile) -> list[Poly]:
    """问题文件中的 φ

    Raises:
        InvalidProblemError: 没有给出 φ
    """
    if problem.phi is None:
        raise InvalidProblemError("/phi", "该命令需要 φ")
    return [Poly(coeffs=list(c)) for c in problem.phi.components]


def problem_matrices(problem: ProblemFile) -> list[tuple[str, list]]:
    """(名称, 矩阵) 列表：snp 为各节点矩阵，scf 为 A 与 B"""
    if problem.kind == "snp" and problem.nodes:
        return [(f"node{j}", node.matrix) for j, node in enumerate(problem.nodes)]
    if problem.pair is not None:
        return [("A", problem.pair.A), ("B", problem.pair.B)]
    return []
