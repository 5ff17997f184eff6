"""命令行入口：参数解析、分发、异常到退出码的映射

标准输出只写 JSON；--verbose 时在标准错误输出摘要。
"""

import argparse
import json
import logging
import sys
from typing import Any

from pydantic import ValidationError

from backend.cli.commands import (
    COMMANDS,
    EXIT_CONSTRUCTION_FAILED,
    EXIT_INVALID_INPUT,
    CommandResult,
)
from backend.cli.generator import SCF_STRATA, SNP_STRATA
from backend.cli.problem_io import json_pointer
from backend.config import load_settings
from backend.core.errors import (
    IllConditionedError,
    InvalidProblemError,
    NotDivisibleError,
    RetriesExhaustedError,
)

logger = logging.getLogger(__name__)

_CONSTRUCTION_ERRORS = (NotDivisibleError, RetriesExhaustedError, IllConditionedError)


def _common_parser() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--tol", type=float, default=None, help="条件与证书的容差（默认 1e-9）")
    parent.add_argument("--grid-radii", type=int, default=None, help="验证网格的半径数")
    parent.add_argument("--grid-angles", type=int, default=None, help="验证网格的角度数")
    parent.add_argument("--seed", type=int, default=None, help="随机种子")
    parent.add_argument(
        "--degree", type=int, default=None, help="φ 的多项式次数（solve 使用，gen 写入问题文件）"
    )
    parent.add_argument("--verbose", action="store_true", help="在标准错误输出摘要")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spectral-lift",
        description="谱 Nevanlinna–Pick / Carathéodory–Fejér 提升：检查、构造、验证",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common_parser()

    helps = {
        "classify": "矩阵分类（scf 问题另给出约化）",
        "sigma": "计算 σ",
        "member": "谱球与 G_n 隶属",
        "check": "检查提升条件",
        "lift": "检查、构造并验证",
        "verify": "对已有的提升重新出证书",
        "solve": "构造 φ 后提升",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--input", required=True, help="问题文件路径")
        if name == "verify":
            p.add_argument("--map", required=True, help="lift 输出的 DiscMap 文件")

    gen = sub.add_parser("gen", parents=[common], help="生成随机问题文件")
    gen.add_argument("--kind", choices=["snp", "scf"], default="snp")
    gen.add_argument("--n", type=int, choices=[2, 3], default=3)
    gen.add_argument(
        "--strata",
        default=None,
        help=f"逗号分隔；snp: {','.join(SNP_STRATA)}；scf: {','.join(SCF_STRATA)}",
    )
    gen.add_argument("--nodes", type=int, default=None, help="snp 节点数")
    return parser


def _error_payload(e: Exception, pointer: str | None = None) -> dict[str, Any]:
    payload: dict[str, Any] = {"error": type(e).__name__, "message": str(e)}
    if pointer is not None:
        payload["pointer"] = pointer
    if isinstance(e, NotDivisibleError):
        payload["label"] = e.label
    return payload


def _execute(args: argparse.Namespace) -> CommandResult:
    try:
        settings = load_settings()
        return COMMANDS[args.command](args, settings)
    except ValidationError as e:
        pointer = json_pointer(e.errors()[0]["loc"])
        summary = f"❌ 输入无效: {pointer}"
        return CommandResult(_error_payload(e, pointer), EXIT_INVALID_INPUT, summary)
    except InvalidProblemError as e:
        return CommandResult(_error_payload(e, e.pointer), EXIT_INVALID_INPUT, f"❌ {e}")
    except _CONSTRUCTION_ERRORS as e:
        return CommandResult(_error_payload(e), EXIT_CONSTRUCTION_FAILED, f"❌ 构造失败: {e}")
    except ValueError as e:
        return CommandResult(_error_payload(e), EXIT_INVALID_INPUT, f"❌ {e}")


def run(argv: list[str] | None = None) -> int:
    """解析参数并执行子命令，JSON 写到标准输出

    Returns:
        退出码：0 通过，2 条件不成立，3 构造失败，4 输入无效
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID_INPUT if e.code else 0

    if args.verbose:
        logging.getLogger().setLevel(logging.INFO)
    logger.info(f"🚀 执行 {args.command}")

    result = _execute(args)
    sys.stdout.write(json.dumps(result.payload, sort_keys=True, ensure_ascii=False, indent=2))
    sys.stdout.write("\n")
    if args.verbose and result.summary:
        print(result.summary, file=sys.stderr)
    return result.code
