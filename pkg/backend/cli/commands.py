"""各子命令的实现

每个命令返回 CommandResult：写到标准输出的 JSON 载荷、退出码和一行摘要。
异常由 app.run 统一映射为退出码。
"""

import argparse
import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from backend.cli.generator import generate_problem
from backend.cli.problem_io import (
    instance_of,
    load_map,
    load_problem,
    phi_of,
    problem_matrices,
)
from backend.config import Settings, resolve_degree, resolve_verify_config
from backend.core.domains import in_G, in_spectral_ball
from backend.core.linalg import classify, sigma
from backend.lift.phi_builder import build_phi, membership_grid
from backend.lift.scf import SCFInstance, cf_conditions, cf_lift
from backend.lift.snp import SNPInstance, snp_conditions, snp_lift
from backend.lift.verifier import grid_points, verify_scf, verify_snp
from backend.models.schemas import (
    Certificate,
    ConditionReport,
    DiscMap,
    PhiData,
    Poly,
    ProblemFile,
    SymPoint,
    VerifyConfig,
    matrix_to_array,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONDITIONS_FAILED = 2
EXIT_CONSTRUCTION_FAILED = 3
EXIT_INVALID_INPUT = 4


@dataclass
class CommandResult:
    payload: dict[str, Any]
    code: int = EXIT_OK
    summary: str = ""


def _dump(model: Any) -> Any:
    return model.model_dump(mode="json", by_alias=True)


def _verify_config(
    args: argparse.Namespace, settings: Settings, problem: ProblemFile
) -> VerifyConfig:
    return resolve_verify_config(
        settings,
        problem.config,
        tol=args.tol,
        grid_radii=args.grid_radii,
        grid_angles=args.grid_angles,
        seed=args.seed,
    )


def _conditions(
    instance: SNPInstance | SCFInstance, phi: list[Poly], tol: float
) -> ConditionReport:
    if isinstance(instance, SNPInstance):
        return snp_conditions(instance, phi, tol)
    return cf_conditions(instance, phi, tol)


def _construct(instance: SNPInstance | SCFInstance, phi: list[Poly]) -> DiscMap:
    if isinstance(instance, SNPInstance):
        return snp_lift(instance, phi)
    return cf_lift(instance, phi)


def _certify(
    disc: DiscMap, phi: list[Poly], instance: SNPInstance | SCFInstance, config: VerifyConfig
) -> Certificate:
    if isinstance(instance, SNPInstance):
        return verify_snp(disc, phi, instance, config)
    return verify_scf(disc, phi, instance, config)


def _lift_pipeline(
    instance: SNPInstance | SCFInstance,
    phi: list[Poly],
    config: VerifyConfig,
    payload: dict[str, Any],
) -> CommandResult:
    """检查 → 构造 → 验证"""
    report = _conditions(instance, phi, config.tol)
    payload["report"] = _dump(report)
    if not report.passed:
        failed = report.failed_labels()
        return CommandResult(payload, EXIT_CONDITIONS_FAILED, f"❌ 条件不成立: {failed}")

    disc = _construct(instance, phi)
    certificate = _certify(disc, phi, instance, config)
    payload["map"] = _dump(disc)
    payload["certificate"] = _dump(certificate)
    if not certificate.passed:
        failed = [c.name for c in certificate.checks if not c.passed]
        return CommandResult(payload, EXIT_CONSTRUCTION_FAILED, f"❌ 证书未通过: {failed}")
    return CommandResult(payload, EXIT_OK, "✅ 提升构造完成，证书通过")


# ---------------------------------------------------------------------------
# 子命令
# ---------------------------------------------------------------------------


def cmd_classify(args: argparse.Namespace, settings: Settings) -> CommandResult:
    """各矩阵的类别；scf 问题另给出归一化约化"""
    problem = load_problem(args.input)
    items = []
    for name, rows in problem_matrices(problem):
        items.append({"name": name, "class": _dump(classify(matrix_to_array(rows)))})
    payload: dict[str, Any] = {"matrices": items}
    if problem.kind == "scf":
        instance = instance_of(problem)
        payload["reduction"] = _dump(instance.reduction())
        payload["notes"] = list(instance.notes)
    tags = ", ".join(f"{item['name']}={item['class']['tag']}" for item in items)
    return CommandResult(payload, EXIT_OK, f"📊 {tags}")


def cmd_sigma(args: argparse.Namespace, settings: Settings) -> CommandResult:
    """各矩阵的 σ"""
    problem = load_problem(args.input)
    items = [
        {"name": name, "sigma": _dump(SymPoint.from_array(sigma(matrix_to_array(rows))))}
        for name, rows in problem_matrices(problem)
    ]
    return CommandResult({"matrices": items}, EXIT_OK, f"📊 计算了 {len(items)} 个 σ")


def cmd_member(args: argparse.Namespace, settings: Settings) -> CommandResult:
    """矩阵的谱球隶属；给了 φ 时再统计 φ 在验证网格上的 G_n 隶属"""
    problem = load_problem(args.input)
    config = _verify_config(args, settings, problem)
    matrices = []
    inside = True
    for name, rows in problem_matrices(problem):
        if problem.kind == "scf" and name == "B":
            continue
        report = in_spectral_ball(matrix_to_array(rows))
        inside = inside and report.inside
        matrices.append({"name": name, "membership": _dump(report)})
    payload: dict[str, Any] = {"matrices": matrices}

    if problem.phi is not None:
        phi = phi_of(problem)
        grid, points = grid_points(config)
        values = np.stack([p(points) for p in phi], axis=-1)
        reports = [in_G(problem.n, s) for s in values]
        count = sum(r.inside for r in reports)
        payload["phi"] = {
            "grid": _dump(grid),
            "points": len(reports),
            "inside": count,
            "min_margin": min(r.margin for r in reports),
        }
        inside = inside and count == len(reports)
    code = EXIT_OK if inside else EXIT_CONDITIONS_FAILED
    return CommandResult(payload, code, "✅ 全部在域内" if inside else "⚠️ 有点不在域内")


def cmd_check(args: argparse.Namespace, settings: Settings) -> CommandResult:
    """只跑条件检查"""
    problem = load_problem(args.input)
    config = _verify_config(args, settings, problem)
    instance = instance_of(problem)
    report = _conditions(instance, phi_of(problem), config.tol)
    if report.passed:
        return CommandResult({"report": _dump(report)}, EXIT_OK, "✅ 条件全部成立")
    failed = report.failed_labels()
    return CommandResult({"report": _dump(report)}, EXIT_CONDITIONS_FAILED, f"❌ 不成立: {failed}")


def cmd_lift(args: argparse.Namespace, settings: Settings) -> CommandResult:
    problem = load_problem(args.input)
    config = _verify_config(args, settings, problem)
    return _lift_pipeline(instance_of(problem), phi_of(problem), config, {})


def cmd_verify(args: argparse.Namespace, settings: Settings) -> CommandResult:
    """对已有的 DiscMap 重新出证书"""
    problem = load_problem(args.input)
    config = _verify_config(args, settings, problem)
    disc = load_map(args.map)
    certificate = _certify(disc, phi_of(problem), instance_of(problem), config)
    code = EXIT_OK if certificate.passed else EXIT_CONSTRUCTION_FAILED
    summary = "✅ 证书通过" if certificate.passed else "❌ 证书未通过"
    return CommandResult({"certificate": _dump(certificate)}, code, summary)


def cmd_solve(args: argparse.Namespace, settings: Settings) -> CommandResult:
    """构造 φ 后走 lift 流程"""
    problem = load_problem(args.input)
    config = _verify_config(args, settings, problem)
    instance = instance_of(problem)
    degree = resolve_degree(problem.config, args.degree)
    points = membership_grid(config.grid_radii, config.grid_angles, config.max_radius)
    phi = build_phi(instance, degree=degree, seed=config.seed, points=points)
    payload: dict[str, Any] = {"phi": _dump(PhiData(components=[p.coeffs for p in phi]))}
    return _lift_pipeline(instance, phi, config, payload)


def cmd_gen(args: argparse.Namespace, settings: Settings) -> CommandResult:
    """随机问题文件；输出本身就是合法的问题文件"""
    strata = [s.strip() for s in (args.strata or "").split(",") if s.strip()]
    seed = args.seed if args.seed is not None else settings.seed
    problem = generate_problem(
        args.kind, args.n, strata, seed, nodes=args.nodes, degree=args.degree
    )
    payload = problem.model_dump(mode="json", exclude_none=True)
    return CommandResult(payload, EXIT_OK, f"📊 生成 {args.kind} 问题，分层 {problem.stratum}")


COMMANDS = {
    "classify": cmd_classify,
    "sigma": cmd_sigma,
    "member": cmd_member,
    "check": cmd_check,
    "lift": cmd_lift,
    "verify": cmd_verify,
    "solve": cmd_solve,
    "gen": cmd_gen,
}
