"""小复矩阵代数

2×2 / 3×3 复矩阵上的 σ、特征值、分类、规范形、exp/log、
Möbius 自同构 Φ_λ 以及 σ 的 Gâteaux 导数。

σ 的符号约定：det(tI − A) = Σ_j (−1)^j σ_j(A) t^{n−j}，即 σ₁ = tr A，σ_n = det A。
"""

import cmath
import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from backend.core.errors import IllConditionedError, UnsupportedCaseError
from backend.models.schemas import MatrixClass, MatrixClassTag

logger = logging.getLogger(__name__)

# 特征值视为重合的相对容差
EIG_TOL = 1e-8
# 数值秩阈值（相对 ‖A‖）
RANK_TOL = 1e-8
# 标量矩阵判定容差（相对 1 + ‖A‖）
SCALAR_TOL = 1e-9
# 规范形变换矩阵允许的最大条件数
COND_LIMIT = 1e8
# 重根合并时 p'(c) 的阈值（相对系数尺度）
_CLUSTER_TOL = 1e-13
_OMEGA = cmath.exp(2j * cmath.pi / 3)
# 规范形搜索用的固定候选向量
_CANDIDATE_RNG_SEED = 2024
# 相似变换空间（Sylvester 算子零空间）的相对奇异值阈值
_INTERTWINE_RCOND = 1e-10
# 最近变换的条件数最多可比 Krylov 基差这么多倍
_NEAREST_COND_SLACK = 10.0


@dataclass(frozen=True)
class CanonicalPair:
    """规范形与变换矩阵：A = S⁻¹·canonical·S"""

    canonical: np.ndarray
    transform: np.ndarray


@dataclass(frozen=True)
class GateauxResult:
    """σ 在 A 处沿 B 的一阶导数，以及 σ₃ 的二阶导数（除以 2）"""

    first: np.ndarray
    sigma3_second: complex | None


def as_matrix(A: np.ndarray | list) -> np.ndarray:
    """校验并转换为 complex128 方阵

    Raises:
        ValueError: 维数不是 2/3 或含非有限元素
    """
    arr = np.asarray(A, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] not in (2, 3):
        raise ValueError(f"只支持 2×2 或 3×3 矩阵，收到形状 {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("矩阵含有非有限元素")
    return arr


# ---------------------------------------------------------------------------
# σ 与特征值
# ---------------------------------------------------------------------------


def sigma_batch(M: np.ndarray) -> np.ndarray:
    """对形状 (..., n, n) 的矩阵批量计算 σ，返回 (..., n)"""
    M = np.asarray(M, dtype=np.complex128)
    n = M.shape[-1]
    tr = np.trace(M, axis1=-2, axis2=-1)
    if n == 2:
        det = M[..., 0, 0] * M[..., 1, 1] - M[..., 0, 1] * M[..., 1, 0]
        return np.stack([tr, det], axis=-1)
    a, b, c = M[..., 0, 0], M[..., 0, 1], M[..., 0, 2]
    d, e, f = M[..., 1, 0], M[..., 1, 1], M[..., 1, 2]
    g, h, k = M[..., 2, 0], M[..., 2, 1], M[..., 2, 2]
    s2 = (a * e - b * d) + (a * k - c * g) + (e * k - f * h)
    det = a * (e * k - f * h) - b * (d * k - f * g) + c * (d * h - e * g)
    return np.stack([tr, s2, det], axis=-1)


def sigma(A: np.ndarray) -> np.ndarray:
    """特征多项式系数 (σ₁, …, σ_n)"""
    return sigma_batch(as_matrix(A))


def char_poly(s: np.ndarray) -> np.ndarray:
    """t^n − σ₁t^{n−1} + σ₂t^{n−2} − … 的系数（升幂）"""
    s = np.asarray(s, dtype=np.complex128)
    n = len(s)
    coeffs = np.empty(n + 1, dtype=np.complex128)
    coeffs[n] = 1.0
    for j in range(1, n + 1):
        coeffs[n - j] = (-1) ** j * s[j - 1]
    return coeffs


def _cbrt(z: complex) -> complex:
    """主值立方根"""
    r, phi = cmath.polar(z)
    return cmath.rect(r ** (1.0 / 3.0), phi / 3.0)


def _quadratic_roots(a: complex, b: complex) -> list[complex]:
    """t² + a·t + b 的根（避免相消的写法）"""
    sd = cmath.sqrt(a * a - 4 * b)
    q = (-a + sd) / 2 if abs(-a + sd) >= abs(-a - sd) else (-a - sd) / 2
    if q == 0:
        return [0j, 0j]
    return [q, b / q]


def _cubic_roots(a: complex, b: complex, c: complex) -> list[complex]:
    """t³ + a·t² + b·t + c 的根（Cardano）"""
    shift = a / 3
    p = b - a * a / 3
    q = 2 * a**3 / 27 - a * b / 3 + c
    sd = cmath.sqrt((q / 2) ** 2 + (p / 3) ** 3)
    w = -q / 2 + sd if abs(-q / 2 + sd) >= abs(-q / 2 - sd) else -q / 2 - sd
    u = _cbrt(w)
    if abs(u) <= 1e-300:
        return [-shift] * 3
    v = -p / (3 * u)
    return [_OMEGA**k * u + _OMEGA ** (-k) * v - shift for k in range(3)]


def _polish(coeffs: np.ndarray, roots: list[complex]) -> list[complex]:
    """对每个根做一步 Newton 修正（只在残差下降时接受）"""
    deriv = np.polynomial.polynomial.polyder(coeffs)
    scale = 1.0 + float(np.max(np.abs(coeffs)))
    polished = []
    for r in roots:
        pr = np.polynomial.polynomial.polyval(r, coeffs)
        dpr = np.polynomial.polynomial.polyval(r, deriv)
        if abs(dpr) > 1e-14 * scale:
            candidate = r - pr / dpr
            if abs(np.polynomial.polynomial.polyval(candidate, coeffs)) <= abs(pr):
                r = candidate
        polished.append(complex(r))
    return polished


def _merge_clusters(coeffs: np.ndarray, roots: list[complex], s1: complex) -> list[complex]:
    """把数值上分裂的重根合并为精确均值"""
    scale = 1.0 + float(np.max(np.abs(coeffs)))
    deriv = np.polynomial.polynomial.polyder(coeffs)
    n = len(roots)
    spread = 1e-5 * (1.0 + max(abs(r) for r in roots))

    def is_multiple(c: complex) -> bool:
        return abs(np.polynomial.polynomial.polyval(c, deriv)) <= _CLUSTER_TOL * scale

    if n == 3 and max(abs(roots[i] - roots[j]) for i in range(3) for j in range(i)) <= spread:
        c = s1 / 3
        if is_multiple(c):
            return [c, c, c]
    for i in range(n):
        for j in range(i + 1, n):
            if abs(roots[i] - roots[j]) <= spread:
                others = [roots[k] for k in range(n) if k not in (i, j)]
                c = (s1 - sum(others)) / 2
                if is_multiple(c):
                    merged = list(roots)
                    merged[i] = merged[j] = c
                    return merged
    return roots


def roots_from_sigma(s: np.ndarray) -> np.ndarray:
    """特征多项式 t^n − σ₁t^{n−1} + … 的根，按 (实部, 虚部) 排序"""
    s = np.asarray(s, dtype=np.complex128)
    coeffs = char_poly(s)
    if len(s) == 2:
        roots = _quadratic_roots(-s[0], s[1])
    elif len(s) == 3:
        roots = _cubic_roots(-s[0], s[1], -s[2])
    else:
        raise ValueError(f"只支持 n=2/3，收到 n={len(s)}")
    roots = _polish(coeffs, roots)
    roots = _merge_clusters(coeffs, roots, complex(s[0]))
    return np.array(sorted(roots, key=lambda z: (z.real, z.imag)), dtype=np.complex128)


def eigenvalues(A: np.ndarray) -> np.ndarray:
    """特征值（含重数）"""
    return roots_from_sigma(sigma(A))


def spectral_radius(A: np.ndarray) -> float:
    """谱半径 r(A)，也等于 l_{Ω_n}(A, 0)"""
    return float(np.max(np.abs(eigenvalues(A))))


# ---------------------------------------------------------------------------
# 分类与规范形
# ---------------------------------------------------------------------------


def _norm(A: np.ndarray) -> float:
    return float(np.linalg.norm(A, 2))


def _numerical_rank(M: np.ndarray, scale: float) -> int:
    singular = scipy.linalg.svdvals(M)
    return int(np.sum(singular > RANK_TOL * max(scale, 1e-300)))


def is_scalar(A: np.ndarray) -> bool:
    A = as_matrix(A)
    n = A.shape[0]
    lam = np.trace(A) / n
    return bool(
        np.linalg.norm(A - lam * np.eye(n)) <= SCALAR_TOL * (1.0 + np.linalg.norm(A))
    )


def classify(A: np.ndarray) -> MatrixClass:
    """分类为 Scalar / NonCyclicNonScalar / Cyclic

    n=3 时，若某特征值几何重数 ≥ 2 且 A 非标量，则为非循环；
    n=2 时只会出现标量与循环两类。
    """
    A = as_matrix(A)
    n = A.shape[0]
    if is_scalar(A):
        return MatrixClass(tag=MatrixClassTag.SCALAR, lam=complex(np.trace(A) / n))
    if n == 2:
        return MatrixClass(tag=MatrixClassTag.CYCLIC)

    eigs = eigenvalues(A)
    tol = EIG_TOL * (1.0 + float(np.max(np.abs(eigs))))
    scale = _norm(A)
    for i in range(3):
        for j in range(i + 1, 3):
            if abs(eigs[i] - eigs[j]) > tol:
                continue
            lam = (eigs[i] + eigs[j]) / 2
            if _numerical_rank(A - lam * np.eye(3), scale) <= 1:
                mu = complex(np.trace(A) - 2 * lam)
                return MatrixClass(tag=MatrixClassTag.NONCYCLIC, lam=complex(lam), mu=mu)
    return MatrixClass(tag=MatrixClassTag.CYCLIC)


def companion(s: np.ndarray) -> np.ndarray:
    """伴随矩阵：超对角线为 1，末行为 (…, σ₃, −σ₂, σ₁)"""
    s = np.asarray(s, dtype=np.complex128)
    n = len(s)
    C = np.zeros((n, n), dtype=np.complex128)
    for i in range(n - 1):
        C[i, i + 1] = 1.0
    for j in range(n):
        # 末行第 j 列对应 (−1)^{n−j−1}·σ_{n−j}
        C[n - 1, j] = (-1) ** (n - j - 1) * s[n - j - 1]
    return C


def noncyclic_canonical(lam: complex, mu: complex) -> np.ndarray:
    """非循环非标量矩阵的块规范形 [λ] ⊕ companion((t−λ)(t−μ))"""
    return np.array(
        [[lam, 0, 0], [0, 0, 1], [0, -lam * mu, lam + mu]],
        dtype=np.complex128,
    )


def noncyclic_jordan_form(lam: complex, mu: complex) -> tuple[np.ndarray, np.ndarray]:
    """[[λ,0,0],[0,λ,1],[0,0,μ]] 及 T，满足 noncyclic_canonical = T·J·T⁻¹"""
    J = np.array([[lam, 0, 0], [0, lam, 1], [0, 0, mu]], dtype=np.complex128)
    T = np.array([[1, 0, 0], [0, 1, 0], [0, lam, 1]], dtype=np.complex128)
    return J, T


def _candidate_rows(n: int) -> list[np.ndarray]:
    rng = np.random.default_rng(_CANDIDATE_RNG_SEED)
    rows = [np.eye(n, dtype=np.complex128)[i] for i in range(n)]
    rows.append(np.ones(n, dtype=np.complex128))
    for _ in range(6):
        rows.append(rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return rows


def _normalize_transform(S: np.ndarray) -> np.ndarray:
    n = S.shape[0]
    det = np.linalg.det(S)
    return S / det ** (1.0 / n)


def intertwiner_basis(A: np.ndarray, C: np.ndarray) -> np.ndarray:
    """{T : T·A = C·T} 的正交基，每列是按行展开的 T

    T·A − C·T 按行展开后等于 (I ⊗ Aᵀ − C ⊗ I)·vec(T)。
    """
    n = A.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    K = np.kron(eye, A.T) - np.kron(C, eye)
    return np.asarray(scipy.linalg.null_space(K, rcond=_INTERTWINE_RCOND), dtype=np.complex128)


def nearest_transform(A: np.ndarray, C: np.ndarray) -> np.ndarray | None:
    """满足 T·A = C·T 且 Frobenius 意义下最接近单位阵的 T

    即 vec(I) 在相似变换空间上的正交投影；投影奇异时返回 None。
    """
    basis = intertwiner_basis(A, C)
    if basis.shape[1] == 0:
        return None
    n = A.shape[0]
    eye = np.eye(n, dtype=np.complex128).ravel()
    T = (basis @ (basis.conj().T @ eye)).reshape(n, n)
    cond = float(np.linalg.cond(T))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        return None
    return T


def _cyclic_transform(A: np.ndarray) -> np.ndarray:
    """S = [v; vA; vA²]，满足 S·A = C·S"""
    n = A.shape[0]
    best, best_cond = None, np.inf
    for v in _candidate_rows(n):
        rows = [v]
        for _ in range(n - 1):
            rows.append(rows[-1] @ A)
        S = np.vstack(rows)
        cond = np.linalg.cond(S)
        if cond < best_cond:
            best, best_cond = S, cond
    return best


def _noncyclic_transform(A: np.ndarray, lam: complex) -> np.ndarray:
    """S = [r₁; r₂; r₂A]，r₁ 为 λ 的左特征向量"""
    _, _, vh = scipy.linalg.svd((A - lam * np.eye(3)).T)
    u, w = vh[-1].conj(), vh[-2].conj()
    eigen_rows = [u, w, u + w, u - w, u + 1j * w]
    best, best_cond = None, np.inf
    for r2 in _candidate_rows(3):
        for r1 in eigen_rows:
            S = np.vstack([r1, r2, r2 @ A])
            cond = np.linalg.cond(S)
            if cond < best_cond:
                best, best_cond = S, cond
    return best


def rational_canonical(A: np.ndarray) -> CanonicalPair:
    """有理规范形

    Returns:
        CanonicalPair，满足 A = S⁻¹·canonical·S

    Raises:
        IllConditionedError: 变换矩阵条件数过大
    """
    A = as_matrix(A)
    n = A.shape[0]
    cls = classify(A)
    if cls.tag == MatrixClassTag.SCALAR:
        return CanonicalPair(canonical=A.copy(), transform=np.eye(n, dtype=np.complex128))
    if cls.tag == MatrixClassTag.CYCLIC:
        canonical = companion(sigma(A))
        S = _cyclic_transform(A)
    else:
        canonical = noncyclic_canonical(cls.lam, cls.mu)
        S = _noncyclic_transform(A, cls.lam)

    cond = float(np.linalg.cond(S))
    # 相似变换在中心化子内可任意选取，优先最接近 I 的那个
    T = nearest_transform(A, canonical)
    if T is not None:
        cond_T = float(np.linalg.cond(T))
        if cond_T <= _NEAREST_COND_SLACK * max(cond, 1.0):
            S, cond = T, cond_T
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditionedError(cond)
    S = _normalize_transform(S)
    residual = np.linalg.norm(np.linalg.solve(S, canonical @ S) - A)
    if residual > 1e-6 * (1.0 + np.linalg.norm(A)):
        raise IllConditionedError(cond)
    logger.debug(f"规范形: {cls.tag}, cond(S)={cond:.3e}, 残差={residual:.3e}")
    return CanonicalPair(canonical=canonical, transform=S)


# ---------------------------------------------------------------------------
# Möbius 自同构、exp / log
# ---------------------------------------------------------------------------


def mobius(lam: complex, X: np.ndarray) -> np.ndarray:
    """Φ_λ(X) = (X − λI)(I − λ̄X)⁻¹

    Raises:
        ValueError: |λ| ≥ 1 或 I − λ̄X 奇异
    """
    X = as_matrix(X)
    if abs(lam) >= 1:
        raise ValueError(f"Möbius 参数必须在单位圆盘内: {lam}")
    n = X.shape[0]
    eye = np.eye(n, dtype=np.complex128)
    M = eye - np.conj(lam) * X
    if np.linalg.cond(M) > 1e12:
        raise ValueError("I − λ̄X 奇异，Φ_λ 无定义")
    # X − λI 与 (I − λ̄X)⁻¹ 可交换
    return np.linalg.solve(M, X - lam * eye)


def mexp(M: np.ndarray) -> np.ndarray:
    """矩阵指数（scaling-and-squaring Padé）"""
    return np.asarray(scipy.linalg.expm(np.asarray(M, dtype=np.complex128)), dtype=np.complex128)


def mlog(S: np.ndarray) -> np.ndarray:
    """矩阵对数（可逆矩阵，任取一支）

    Raises:
        ValueError: S 奇异
    """
    S = as_matrix(S)
    n = S.shape[0]
    if abs(np.linalg.det(S)) <= 1e-14 * (1.0 + np.linalg.norm(S)) ** n:
        raise ValueError("奇异矩阵没有对数")
    L = np.asarray(scipy.linalg.logm(S), dtype=np.complex128)
    error = np.linalg.norm(mexp(L) - S) / np.linalg.norm(S)
    if error > 1e-10:
        logger.warning(f"⚠️ mlog 回代误差偏大: {error:.3e}")
    return L


# ---------------------------------------------------------------------------
# Gâteaux 导数与交换子约化
# ---------------------------------------------------------------------------


def adjugate(A: np.ndarray) -> np.ndarray:
    """伴随矩阵 adj(A)，满足 A·adj(A) = det(A)·I"""
    A = as_matrix(A)
    n = A.shape[0]
    if n == 2:
        return np.array([[A[1, 1], -A[0, 1]], [-A[1, 0], A[0, 0]]], dtype=np.complex128)
    adj = np.empty((3, 3), dtype=np.complex128)
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(A, j, axis=0), i, axis=1)
            adj[i, j] = (-1) ** (i + j) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    return adj


def amu(mu: complex) -> np.ndarray:
    """A_μ = [[0,0,0],[0,0,1],[0,0,μ]]"""
    return np.array([[0, 0, 0], [0, 0, 1], [0, 0, mu]], dtype=np.complex128)


def amu_parameter(A: np.ndarray, tol: float = 1e-12) -> complex | None:
    """若 A 形如 A_μ 则返回 μ，否则 None"""
    A = as_matrix(A)
    if A.shape[0] != 3:
        return None
    mu = complex(A[2, 2])
    if np.max(np.abs(A - amu(mu))) <= tol * (1.0 + abs(mu)):
        return mu
    return None


def gateaux_sigma(A: np.ndarray, B: np.ndarray, with_second: bool = True) -> GateauxResult:
    """σ 在 A 处沿 B 的 Gâteaux 导数

    first 为 d/dt σ(A+tB)|₀；n=3 时 sigma3_second 为 (d²/dt²)σ₃(A_μ+tB)|₀ / 2，
    即 μ·det[[b11,b12],[b21,b22]] − det[[b11,b12],[b31,b32]]。

    Raises:
        UnsupportedCaseError: n=3、需要二阶项但 A 不是 A_μ 形式
    """
    A = as_matrix(A)
    B = as_matrix(B)
    if A.shape != B.shape:
        raise ValueError("A 与 B 维数不一致")
    n = A.shape[0]
    tr_b = np.trace(B)
    det_prime = np.trace(adjugate(A) @ B)
    if n == 2:
        return GateauxResult(first=np.array([tr_b, det_prime]), sigma3_second=None)

    s2_prime = np.trace(A) * tr_b - np.trace(A @ B)
    first = np.array([tr_b, s2_prime, det_prime], dtype=np.complex128)
    if not with_second:
        return GateauxResult(first=first, sigma3_second=None)
    mu = amu_parameter(A)
    if mu is None:
        raise UnsupportedCaseError("σ₃ 的二阶 Gâteaux 导数只在 A_μ 处提供")
    b = B
    second = mu * (b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0]) - (b[0, 0] * b[2, 1] - b[0, 1] * b[2, 0])
    return GateauxResult(first=first, sigma3_second=complex(second))


def commutator_reduce(B: np.ndarray, mu: complex) -> tuple[np.ndarray, np.ndarray]:
    """B̃ = B + [A_μ, X]，使 B̃ 第 2 行为零且 b̃₁₃ = 0

    X₃₁ = −b₂₁，X₃₂ = −b₂₂，X₃₃ = −b₂₃，X₁₂ = b₁₃，其余为 0。
    """
    B = as_matrix(B)
    if B.shape[0] != 3:
        raise ValueError("交换子约化只用于 n=3")
    X = np.zeros((3, 3), dtype=np.complex128)
    X[2, 0] = -B[1, 0]
    X[2, 1] = -B[1, 1]
    X[2, 2] = -B[1, 2]
    X[0, 1] = B[0, 2]
    A = amu(mu)
    Btilde = B + A @ X - X @ A
    # 消去舍入残留
    Btilde[1, :] = 0
    Btilde[0, 2] = 0
    return Btilde, X
