"""构造满足提升条件的多项式 φ

条件全部是 φ 系数的线性方程，解集是特解加零空间。按顺序尝试几个候选：

1. SNP 的对角提升 φ = σ(diag(u₁, …, u_n))，u_i 插值各节点的特征值；
   它本身就是提升，条件自动成立，裕度就是 1 − max|u_i|。
2. 零空间内的加权极小极大（Lawson 迭代），压低 φ_k / C(n, k) 在网格上的峰值。
3. 最小范数特解。

默认次数时再把次数加 n、加 2n 各试一轮。都不在 G_n 内时，围绕最好的候选沿
零空间随机方向扰动，幅度按 1/2 几何缩小。
"""

import itertools
import logging
import math
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from backend.core.domains import g_margin_batch
from backend.core.errors import RetriesExhaustedError
from backend.core.linalg import eigenvalues
from backend.lift.conditions import LinearCondition
from backend.lift.scf import SCFInstance, cf_condition_list
from backend.lift.snp import SNPInstance, snp_condition_list
from backend.models.schemas import MatrixClassTag, Poly

logger = logging.getLogger(__name__)

MAX_RETRIES = 40
# 扰动初始幅度（相对候选系数范数）
INITIAL_SCALE = 0.1
# 方程组相容性判定
CONSISTENCY_TOL = 1e-10
# minimal_degree 的搜索上限
_DEGREE_CAP = 40
# 默认次数下对角提升的 u_i 比插值所需多出的次数
DIAGONAL_EXTRA = 4
# 默认次数时尝试的轮数，每轮次数加 n
_DEGREE_ROUNDS = 3
_LAWSON_STEPS = 20
_ORDER_SWEEPS = 3


@dataclass(frozen=True)
class ConstraintSystem:
    """φ 系数上的线性方程组 M·c = rhs，c 按分量依次排列"""

    n: int
    degree: int
    matrix: np.ndarray
    rhs: np.ndarray
    labels: list[str]

    def particular(self) -> np.ndarray:
        """最小范数最小二乘解"""
        if self.matrix.shape[0] == 0:
            return np.zeros(self.matrix.shape[1], dtype=np.complex128)
        solution, *_ = scipy.linalg.lstsq(self.matrix, self.rhs)
        return np.asarray(solution, dtype=np.complex128)

    def residual(self, coeffs: np.ndarray) -> float:
        if self.matrix.shape[0] == 0:
            return 0.0
        return float(np.max(np.abs(self.matrix @ coeffs - self.rhs)))

    def null_space(self) -> np.ndarray:
        """零空间的正交基（列）"""
        if self.matrix.shape[0] == 0:
            return np.eye(self.matrix.shape[1], dtype=np.complex128)
        return scipy.linalg.null_space(self.matrix)

    def unpack(self, coeffs: np.ndarray) -> list[Poly]:
        size = self.degree + 1
        return [Poly.from_array(coeffs[c * size : (c + 1) * size]) for c in range(self.n)]

    def tolerance(self) -> float:
        return CONSISTENCY_TOL * (1.0 + float(np.max(np.abs(self.rhs), initial=0.0)))

    def is_consistent(self) -> bool:
        return self.residual(self.particular()) <= self.tolerance()


def _condition_list(problem: SNPInstance | SCFInstance) -> list[LinearCondition]:
    if isinstance(problem, SNPInstance):
        return snp_condition_list(problem)
    return cf_condition_list(problem)


def _system(problem: SNPInstance | SCFInstance, degree: int) -> ConstraintSystem:
    conds = _condition_list(problem)
    n = problem.n
    width = n * (degree + 1)
    if conds:
        matrix = np.vstack([c.row(n, degree) for c in conds])
    else:
        matrix = np.zeros((0, width), dtype=np.complex128)
    rhs = np.array([c.rhs for c in conds], dtype=np.complex128)
    return ConstraintSystem(n, degree, matrix, rhs, [c.label for c in conds])


def minimal_degree(problem: SNPInstance | SCFInstance) -> int:
    """使方程组相容的最小次数

    Raises:
        ValueError: 在搜索上限内都不相容
    """
    for degree in range(_DEGREE_CAP + 1):
        if _system(problem, degree).is_consistent():
            return degree
    raise ValueError(f"次数不超过 {_DEGREE_CAP} 时条件方程组都不相容")


def assemble_constraints(problem: SNPInstance | SCFInstance, degree: int) -> ConstraintSystem:
    """把检查器的每条条件转成一行线性方程

    Raises:
        ValueError: 次数太小，方程组不相容（消息给出所需最小次数）
    """
    if degree < 0:
        raise ValueError(f"次数必须非负: {degree}")
    system = _system(problem, degree)
    if not system.is_consistent():
        required = minimal_degree(problem)
        raise ValueError(f"次数 {degree} 不足，方程组不相容，至少需要 {required}")
    logger.debug(f"条件方程组: {system.matrix.shape[0]} 行, 次数 {degree}")
    return system


def membership_grid(radii: int = 8, angles: int = 32, max_radius: float = 0.95) -> np.ndarray:
    """采样点：radii 个半径 × angles 个角度"""
    rs = np.linspace(0.1, max_radius, radii)
    thetas = 2 * np.pi * np.arange(angles) / angles
    return (rs[:, None] * np.exp(1j * thetas)[None, :]).ravel()


def min_margin(phi: list[Poly], points: np.ndarray) -> float:
    """φ 在采样点上 G_n 隶属裕度的最小值；有点不在 G_n 内时为负"""
    values = np.stack([np.asarray(p(points), dtype=np.complex128) for p in phi], axis=-1)
    return float(np.min(g_margin_batch(values)))


# ---------------------------------------------------------------------------
# 候选
# ---------------------------------------------------------------------------


def default_degree(problem: SNPInstance | SCFInstance) -> int:
    """最小相容次数 + 2；SNP 还要容得下对角提升"""
    degree = minimal_degree(problem) + 2
    if isinstance(problem, SNPInstance):
        nodes = len(problem.alphas)
        degree = max(degree, problem.n * (nodes - 1 + DIAGONAL_EXTRA))
    return degree


def _eigen_table(instance: SNPInstance) -> np.ndarray:
    """每个节点一行特征值；重特征值放在前面"""
    n = instance.n
    rows = []
    for A, cls in zip(instance.matrices, instance.classes, strict=True):
        if cls.tag == MatrixClassTag.SCALAR:
            rows.append([complex(cls.lam)] * n)
        elif cls.tag == MatrixClassTag.NONCYCLIC:
            rows.append([complex(cls.lam), complex(cls.lam), complex(cls.mu)])
        else:
            rows.append(list(eigenvalues(A)))
    return np.array(rows, dtype=np.complex128)


def _order_slots(table: np.ndarray, vandermonde: np.ndarray) -> np.ndarray:
    """逐节点重排特征值，使各 u_i 的最小插值范数之和最小

    范数平方为 Σ_i v_iᴴ (V·Vᴴ)⁻¹ v_i，v_i 是第 i 列。
    """
    gram = np.linalg.pinv(vandermonde @ vandermonde.conj().T, hermitian=True)

    def energy(values: np.ndarray) -> float:
        return float(np.real(np.trace(values.conj().T @ gram @ values)))

    n = table.shape[1]
    perms = [list(p) for p in itertools.permutations(range(n))]
    values = table.copy()
    best = energy(values)
    for _ in range(_ORDER_SWEEPS):
        improved = False
        for j in range(values.shape[0]):
            for perm in perms:
                trial = values.copy()
                trial[j] = values[j, perm]
                cost = energy(trial)
                if cost < best * (1 - 1e-12):
                    values, best, improved = trial, cost, True
        if not improved:
            break
    return values


def _elementary_symmetric(columns: list[np.ndarray]) -> list[np.ndarray]:
    """u₁…u_n（升幂系数）的初等对称多项式 e₁…e_n"""
    P = np.polynomial.polynomial
    sym = [np.ones(1, dtype=np.complex128)]
    for u in columns:
        updated = [sym[0]]
        for m in range(1, len(sym) + 1):
            previous = sym[m] if m < len(sym) else np.zeros(1, dtype=np.complex128)
            updated.append(P.polyadd(previous, P.polymul(u, sym[m - 1])))
        sym = updated
    return sym[1:]


def _lawson_steps(Ep: np.ndarray, EN: np.ndarray, groups: int) -> Iterator[np.ndarray]:
    """min_y max_p ‖(Ep + EN·y)_p‖ 的 Lawson 迭代

    行按 groups 个分块排列，每块对每个采样点一行；权重逐步向峰值点集中。
    """
    count = Ep.shape[0] // groups
    weights = np.full(count, 1.0 / count)
    for _ in range(_LAWSON_STEPS):
        root = np.tile(np.sqrt(weights), groups)
        y, *_ = scipy.linalg.lstsq(root[:, None] * EN, -root * Ep)
        yield y
        size = np.sqrt(np.sum(np.abs((Ep + EN @ y).reshape(groups, -1)) ** 2, axis=0))
        weights = weights * size
        total = float(np.sum(weights))
        if not np.isfinite(total) or total <= 0:
            return
        weights /= total


def _smallest_interpolant(
    vandermonde: np.ndarray, values: np.ndarray, grid: np.ndarray
) -> np.ndarray:
    """过节点值、在网格上峰值最小的多项式系数"""
    start, *_ = scipy.linalg.lstsq(vandermonde, values)
    basis = scipy.linalg.null_space(vandermonde)
    best, best_peak = start, float(np.max(np.abs(grid @ start)))
    if basis.shape[1] == 0:
        return best
    for y in _lawson_steps(grid @ start, grid @ basis, 1):
        coeffs = start + basis @ y
        peak = float(np.max(np.abs(grid @ coeffs)))
        if peak < best_peak:
            best, best_peak = coeffs, peak
    return best


def diagonal_candidate(
    instance: SNPInstance, degree: int, points: np.ndarray | None = None
) -> np.ndarray | None:
    """对角提升的系数；次数容不下插值时返回 None

    u_i 取次数 ⌊degree/n⌋，在采样点上压低 max|u_i|，φ 的裕度即 1 − max|u_i|。
    """
    n = instance.n
    nodes = len(instance.alphas)
    u_degree = degree // n
    if u_degree < nodes - 1:
        return None
    points = membership_grid() if points is None else points
    powers = np.arange(u_degree + 1)
    alphas = np.array(instance.alphas, dtype=np.complex128)
    vandermonde = alphas[:, None] ** powers
    grid = np.asarray(points, dtype=np.complex128)[:, None] ** powers
    values = _order_slots(_eigen_table(instance), vandermonde)
    columns = [_smallest_interpolant(vandermonde, values[:, i], grid) for i in range(n)]
    coeffs = np.zeros(n * (degree + 1), dtype=np.complex128)
    for m, poly in enumerate(_elementary_symmetric(columns)):
        start = m * (degree + 1)
        coeffs[start : start + len(poly)] = poly
    return coeffs


def _lawson_candidates(
    system: ConstraintSystem, points: np.ndarray, particular: np.ndarray, basis: np.ndarray
) -> Iterator[np.ndarray]:
    """零空间内压低 φ_k / C(n, k) 在采样点上的峰值"""
    if basis.shape[1] == 0:
        return
    n = system.n
    vandermonde = points[:, None] ** np.arange(system.degree + 1)
    E = scipy.linalg.block_diag(*[vandermonde / math.comb(n, k + 1) for k in range(n)])
    for y in _lawson_steps(E @ particular, E @ basis, n):
        yield particular + basis @ y


def _candidates(
    problem: SNPInstance | SCFInstance, system: ConstraintSystem, points: np.ndarray
) -> Iterator[tuple[str, np.ndarray]]:
    particular = system.particular()
    if isinstance(problem, SNPInstance):
        diagonal = diagonal_candidate(problem, system.degree, points)
        if diagonal is not None:
            yield "diagonal", diagonal
    for coeffs in _lawson_candidates(system, points, particular, system.null_space()):
        yield "lawson", coeffs
    yield "particular", particular


def build_phi(
    problem: SNPInstance | SCFInstance,
    degree: int | None = None,
    seed: int | None = 0,
    max_retries: int = MAX_RETRIES,
    points: np.ndarray | None = None,
) -> list[Poly]:
    """构造满足全部条件且在采样点上落在 G_n 内的 φ

    Args:
        problem: SNP 或 SCF 实例
        degree: 多项式次数；默认见 default_degree，并会再试更高的次数
        seed: 随机种子，固定时结果确定
        max_retries: 扰动缩小的最大次数
        points: 隶属检查的采样点，默认 8×32 网格

    Raises:
        RetriesExhaustedError: 扰动缩到最后仍不在 G_n 内
    """
    if degree is None:
        base = default_degree(problem)
        degrees = [base + problem.n * r for r in range(_DEGREE_ROUNDS)]
    else:
        degrees = [degree]
    points = membership_grid() if points is None else points

    best, best_coeffs, best_system = -np.inf, None, None
    for d in degrees:
        system = assemble_constraints(problem, d)
        for name, coeffs in _candidates(problem, system, points):
            if system.residual(coeffs) > system.tolerance():
                logger.debug(f"候选 {name} 不满足条件方程，跳过")
                continue
            phi = system.unpack(coeffs)
            margin = min_margin(phi, points)
            if margin > best:
                best, best_coeffs, best_system = margin, coeffs, system
            if margin > 0:
                logger.info(f"✅ φ 构造成功: 次数={d}, 候选={name}, 裕度={margin:.3e}")
                return phi

    # 围绕最好的候选沿零空间随机扰动
    system = best_system if best_system is not None else assemble_constraints(problem, degrees[0])
    center = best_coeffs if best_coeffs is not None else system.particular()
    basis = system.null_space()
    rng = np.random.default_rng(seed)
    if basis.shape[1]:
        weights = rng.standard_normal(basis.shape[1]) + 1j * rng.standard_normal(basis.shape[1])
        direction = basis @ weights
        direction /= np.linalg.norm(direction)
    else:
        direction = np.zeros_like(center)

    center_norm = float(np.linalg.norm(center))
    t = INITIAL_SCALE * (center_norm if center_norm > 0 else 1.0)
    for attempt in range(max_retries):
        phi = system.unpack(center + t / 2**attempt * direction)
        margin = min_margin(phi, points)
        best = max(best, margin)
        if margin > 0:
            logger.info(
                f"✅ φ 构造成功: 次数={system.degree}, 扰动 {attempt + 1} 次, 裕度={margin:.3e}"
            )
            return phi
    logger.warning(f"❌ φ 构造失败: {max_retries} 次扰动后最佳裕度 {best:.3e}")
    raise RetriesExhaustedError(max_retries, best)
