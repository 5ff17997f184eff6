"""区域隶属判定：单位圆盘、对称多圆盘 G_n、谱球 Ω_n"""

import logging

import numpy as np

from backend.core.linalg import as_matrix, char_poly, roots_from_sigma, spectral_radius
from backend.models.schemas import MembershipReport

logger = logging.getLogger(__name__)

# |max 根| 与 1 的差在此以内视为边界点
BOUNDARY_TOL = 1e-10
# cf_solvable_at_zero 的闭不等式容差
_CLOSED_TOL = 1e-12


def schur_cohn_stable(coeffs: np.ndarray) -> bool:
    """Schur–Cohn 递推：升幂系数多项式的全部根是否在开单位圆盘内

    每一步要求 |a₀| < |a_d|，然后降阶为
    q_k = conj(a_d)·a_{k+1} − a₀·conj(a_{d−k−1})，k = 0..d−1。
    """
    a = np.asarray(coeffs, dtype=np.complex128)
    scale = float(np.max(np.abs(a)))
    if scale == 0:
        return False
    a = a / scale
    while len(a) > 1:
        d = len(a) - 1
        if abs(a[0]) >= abs(a[d]):
            return False
        q = np.conj(a[d]) * a[1:] - a[0] * np.conj(a[d - 1 :: -1])
        a = q / np.max(np.abs(q))
    return True


def in_G(n: int, s: np.ndarray) -> MembershipReport:
    """s = (σ₁, …, σ_n) 是否属于 G_n

    Args:
        n: 维数 2 或 3
        s: 对称点

    Raises:
        ValueError: 维数与 s 长度不一致
    """
    s = np.asarray(s, dtype=np.complex128)
    if n not in (2, 3) or len(s) != n:
        raise ValueError(f"对称点长度 {len(s)} 与 n={n} 不一致")
    stable = schur_cohn_stable(char_poly(s))
    radius = float(np.max(np.abs(roots_from_sigma(s))))
    margin = 1.0 - radius
    if abs(margin) <= BOUNDARY_TOL:
        return MembershipReport(inside=False, margin=margin, method="schur-cohn", boundary=True)
    if stable != (margin > 0):
        logger.debug(f"Schur–Cohn 与根半径不一致: s={s}, margin={margin:.3e}")
    return MembershipReport(inside=stable, margin=margin, method="schur-cohn")


def g_margin_batch(s: np.ndarray) -> np.ndarray:
    """一批对称点的根半径裕度 1 − max|root|，s 形如 (..., n)

    用伴随矩阵的特征值求根，正值表示在 G_n 内。
    """
    s = np.asarray(s, dtype=np.complex128)
    n = s.shape[-1]
    C = np.zeros((*s.shape[:-1], n, n), dtype=np.complex128)
    for i in range(n - 1):
        C[..., i, i + 1] = 1.0
    for j in range(n):
        C[..., n - 1, j] = (-1) ** (n - j - 1) * s[..., n - j - 1]
    roots = np.linalg.eigvals(C)
    return 1.0 - np.max(np.abs(roots), axis=-1)


def in_spectral_ball(A: np.ndarray) -> MembershipReport:
    """A 是否属于 Ω_n，即 r(A) < 1"""
    A = as_matrix(A)
    margin = 1.0 - spectral_radius(A)
    if abs(margin) <= BOUNDARY_TOL:
        return MembershipReport(
            inside=False, margin=margin, method="spectral-radius", boundary=True
        )
    return MembershipReport(inside=margin > 0, margin=margin, method="spectral-radius")


def cf_solvable_at_zero(B: np.ndarray) -> bool:
    """基点 A = 0 时 Carathéodory–Fejér 问题可解当且仅当 r(B) ≤ 1"""
    return spectral_radius(as_matrix(B)) <= 1.0 + _CLOSED_TOL


def in_disc(z: complex) -> bool:
    return abs(z) < 1.0
