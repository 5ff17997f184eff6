"""随机问题生成（gen 子命令）

同一个种子总是生成同一个问题文件。
"""

import logging
from collections.abc import Callable, Sequence

import numpy as np

from backend.core.linalg import (
    amu,
    companion,
    noncyclic_canonical,
    rational_canonical,
    sigma,
)
from backend.models.schemas import (
    ProblemConfig,
    ProblemFile,
    SCFPair,
    SNPNode,
    array_to_matrix,
)

logger = logging.getLogger(__name__)

SNP_STRATA = ("scalar", "noncyclic", "cyclic")
SCF_STRATA = (
    "zero-cyclic",
    "zero-scalar",
    "zero-noncyclic",
    "amu-generic",
    "amu-special",
    "amu-degenerate",
)
# 需要 n=3 的分层
_N3_ONLY = {"noncyclic", "zero-noncyclic", "amu-generic", "amu-special", "amu-degenerate"}

MAX_NODES = 6
# 特征值模的上限
EIG_RADIUS = 0.2
# 节点模的上限与最小伪双曲距离 |a − b| / |1 − āb|
NODE_RADIUS = 0.75
NODE_SEPARATION = 0.5
# 相似变换扰动幅度，奇异值落在 [1 − s, 1 + s]
_SIMILARITY_SPREAD = 0.25
# SNP 目标矩阵相对规范形的扰动幅度
_NODE_SPREAD = 0.1
_MIN_GAP = 0.05
_MAX_ATTEMPTS = 1000
_PLACEMENT_ROUNDS = 200


def _complex_in_disc(rng: np.random.Generator, radius: float) -> complex:
    r = radius * np.sqrt(rng.uniform())
    return complex(r * np.exp(2j * np.pi * rng.uniform()))


def _complex_on_annulus(rng: np.random.Generator, low: float, high: float) -> complex:
    r = rng.uniform(low, high)
    return complex(r * np.exp(2j * np.pi * rng.uniform()))


def _well_conditioned(
    rng: np.random.Generator, n: int, spread: float = _SIMILARITY_SPREAD
) -> np.ndarray:
    """I + s·G/‖G‖₂，条件数不超过 (1+s)/(1−s)"""
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return np.eye(n) + spread * G / np.linalg.norm(G, 2)


def _conjugate(
    rng: np.random.Generator, D: np.ndarray, spread: float = _SIMILARITY_SPREAD
) -> np.ndarray:
    S = _well_conditioned(rng, D.shape[0], spread)
    return np.linalg.solve(S, D @ S)


def pseudo_hyperbolic(a: complex, b: complex) -> float:
    """圆盘上的伪双曲距离"""
    return float(abs(a - b) / abs(1 - np.conj(a) * b))


def _distinct(rng: np.random.Generator, count: int, radius: float) -> list[complex]:
    for _ in range(_MAX_ATTEMPTS):
        values = [_complex_in_disc(rng, radius) for _ in range(count)]
        gaps = [abs(a - b) for i, a in enumerate(values) for b in values[i + 1 :]]
        if not gaps or min(gaps) >= _MIN_GAP:
            return values
    raise ValueError(f"无法生成 {count} 个互相分开的值")


def _alphas(rng: np.random.Generator, count: int) -> list[complex]:
    """逐个撒点，卡住时整轮重来"""
    for _ in range(_PLACEMENT_ROUNDS):
        alphas: list[complex] = []
        for _ in range(_MAX_ATTEMPTS):
            candidate = _complex_in_disc(rng, NODE_RADIUS)
            if all(pseudo_hyperbolic(candidate, a) >= NODE_SEPARATION for a in alphas):
                alphas.append(candidate)
                if len(alphas) == count:
                    return alphas
    raise ValueError(
        f"无法在 |α| ≤ {NODE_RADIUS} 内放下 {count} 个伪双曲间距 ≥ {NODE_SEPARATION} 的节点"
    )


# ---------------------------------------------------------------------------
# SNP
# ---------------------------------------------------------------------------


def _snp_matrix(rng: np.random.Generator, n: int, stratum: str) -> np.ndarray:
    """规范形的近单位共轭，提升里的共轭链因此保持温和"""
    match stratum:
        case "scalar":
            return _complex_in_disc(rng, EIG_RADIUS) * np.eye(n, dtype=np.complex128)
        case "noncyclic":
            lam, mu = _distinct(rng, 2, EIG_RADIUS)
            return _conjugate(rng, noncyclic_canonical(lam, mu), _NODE_SPREAD)
        case _:
            roots = np.diag(_distinct(rng, n, EIG_RADIUS)).astype(np.complex128)
            return _conjugate(rng, companion(sigma(roots)), _NODE_SPREAD)


def generate_snp(
    rng: np.random.Generator, n: int, strata: Sequence[str], nodes: int
) -> list[SNPNode]:
    """节点 j 取 strata[j mod len(strata)] 分层"""
    alphas = _alphas(rng, nodes)
    result = []
    for j, alpha in enumerate(alphas):
        matrix = _snp_matrix(rng, n, strata[j % len(strata)])
        result.append(SNPNode(alpha=alpha, matrix=array_to_matrix(matrix)))
    return result


# ---------------------------------------------------------------------------
# SCF
# ---------------------------------------------------------------------------


def _scalar_base(rng: np.random.Generator, n: int) -> np.ndarray:
    return _complex_in_disc(rng, EIG_RADIUS) * np.eye(n, dtype=np.complex128)


def _zero_cyclic(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    B = _conjugate(rng, np.diag(_distinct(rng, n, 0.3)).astype(np.complex128))
    return _scalar_base(rng, n), B


def _zero_scalar(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    # n=3 的标量构造要求 B ≠ 0
    b = _complex_on_annulus(rng, 0.1, 0.3)
    return _scalar_base(rng, n), b * np.eye(n, dtype=np.complex128)


def _zero_noncyclic(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    lam = _complex_on_annulus(rng, 0.1, 0.3)
    for _ in range(_MAX_ATTEMPTS):
        mu = _complex_in_disc(rng, 0.3)
        if abs(mu - lam) >= 0.1:
            break
    B = _conjugate(rng, np.diag([lam, lam, mu]).astype(np.complex128))
    return _scalar_base(rng, n), B


def _amu_pair(rng: np.random.Generator, case: str) -> tuple[np.ndarray, np.ndarray]:
    """A 与 A_μ 相似；B 先在规范坐标里按情形取值，再用同一个变换搬回去"""
    mu = _complex_on_annulus(rng, 0.1, 0.4)
    A = _conjugate(rng, amu(mu))
    S = rational_canonical(A).transform

    b = 0.1 * (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
    if case == "amu-generic":
        if abs(b[0, 1]) < _MIN_GAP:
            b[0, 1] = _MIN_GAP
    else:
        b[0, 1] = 0
        b[2, 0] = mu * b[1, 0]
        if case == "amu-degenerate":
            b[2, 1] = mu * (b[1, 1] - b[0, 0])
        elif abs(b[2, 1] - mu * b[1, 1] + mu * b[0, 0]) < _MIN_GAP:
            b[2, 1] += _MIN_GAP
    B = np.linalg.solve(S, b @ S)
    return A, B


def generate_scf(rng: np.random.Generator, n: int, stratum: str) -> SCFPair:
    builders: dict[str, Callable[[], tuple[np.ndarray, np.ndarray]]] = {
        "zero-cyclic": lambda: _zero_cyclic(rng, n),
        "zero-scalar": lambda: _zero_scalar(rng, n),
        "zero-noncyclic": lambda: _zero_noncyclic(rng, n),
        "amu-generic": lambda: _amu_pair(rng, stratum),
        "amu-special": lambda: _amu_pair(rng, stratum),
        "amu-degenerate": lambda: _amu_pair(rng, stratum),
    }
    A, B = builders[stratum]()
    return SCFPair(A=array_to_matrix(A), B=array_to_matrix(B))


def generate_problem(
    kind: str,
    n: int,
    strata: Sequence[str],
    seed: int,
    nodes: int | None = None,
    degree: int | None = None,
) -> ProblemFile:
    """生成随机问题文件

    Args:
        kind: "snp" 或 "scf"
        n: 2 或 3
        strata: 分层名称；snp 按节点轮流使用，scf 随机取一个
        seed: 随机种子
        nodes: snp 节点数，默认等于分层数
        degree: 写入 config.degree，供 solve 使用

    Raises:
        ValueError: 分层名称未知、与 n 不匹配或节点数越界
    """
    if n not in (2, 3):
        raise ValueError(f"只支持 n=2/3，收到 n={n}")
    known = SNP_STRATA if kind == "snp" else SCF_STRATA
    strata = list(strata) or list(known if n == 3 else [s for s in known if s not in _N3_ONLY])
    for stratum in strata:
        if stratum not in known:
            raise ValueError(f"未知分层: {stratum}，可选 {', '.join(known)}")
        if n == 2 and stratum in _N3_ONLY:
            raise ValueError(f"分层 {stratum} 只用于 n=3")

    rng = np.random.default_rng(seed)
    if kind == "snp":
        count = nodes if nodes is not None else len(strata)
        if not 1 <= count <= MAX_NODES:
            raise ValueError(f"节点数必须在 1..{MAX_NODES} 之间，收到 {count}")
        problem = ProblemFile(
            kind="snp",
            n=n,
            stratum=",".join(strata),
            nodes=generate_snp(rng, n, strata, count),
            config=ProblemConfig(seed=seed, degree=degree),
        )
    else:
        stratum = strata[int(rng.integers(len(strata)))]
        problem = ProblemFile(
            kind="scf",
            n=n,
            stratum=stratum,
            pair=generate_scf(rng, n, stratum),
            config=ProblemConfig(seed=seed, degree=degree),
        )
    logger.info(f"📊 生成问题: kind={kind}, n={n}, 分层={problem.stratum}, seed={seed}")
    return problem
