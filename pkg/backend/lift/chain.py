"""DiscMap 的求值：核心矩阵逐元求值，然后依次作用共轭链"""

import logging
from collections.abc import Callable, Sequence
from typing import Any

import numpy as np

from backend.core.holo import evaluate
from backend.core.linalg import mexp, mobius
from backend.models.schemas import (
    CMatrix,
    DiscMap,
    ExpLinearFactor,
    ExpPolyFactor,
    HoloNode,
    MobiusFactor,
    SimilarityFactor,
    TransposeFactor,
)

logger = logging.getLogger(__name__)


def make_map(entries: Sequence[Sequence[HoloNode]], chain: Sequence[Any] = ()) -> DiscMap:
    """由表达式矩阵和共轭链组装 DiscMap"""
    n = len(entries)
    return DiscMap(n=n, entries=[list(row) for row in entries], conj_chain=list(chain))


def evaluate_core(disc: DiscMap, z: Any) -> np.ndarray:
    """核心矩阵 ψ̃(z)，z 为标量时返回 (n, n)，为数组时返回 (..., n, n)"""
    z = np.asarray(z, dtype=np.complex128)
    n = disc.n
    out = np.empty(z.shape + (n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            out[..., i, j] = evaluate(disc.entries[i][j], z)
    return out


def _poly_matrix(entries: list[list[Any]], z: complex) -> np.ndarray:
    return np.array(
        [[np.polynomial.polynomial.polyval(z, p.to_array()) for p in row] for row in entries],
        dtype=np.complex128,
    )


def _apply_factor(factor: Any, M: np.ndarray, z: complex) -> np.ndarray:
    match factor:
        case ExpLinearFactor():
            E = mexp(factor.weight * z * factor.matrix.to_array())
            return np.linalg.solve(E, M @ E)
        case ExpPolyFactor():
            E = mexp(_poly_matrix(factor.entries, z))
            return np.linalg.solve(E, M @ E)
        case SimilarityFactor():
            S = factor.matrix.to_array()
            return np.linalg.solve(S, M @ S)
        case TransposeFactor():
            return M.T.copy()
        case MobiusFactor():
            return mobius(factor.lam, M)
    raise TypeError(f"未知共轭因子: {type(factor).__name__}")


def conjugate_chain_apply(disc: DiscMap, z: complex, base_only: bool = False) -> np.ndarray:
    """ψ(z)：先求核心矩阵，再按顺序作用共轭链

    Args:
        disc: 提升映射
        z: 单位圆盘内的点
        base_only: 为 True 时在第一个 Möbius 因子处停止（归一化坐标）
    """
    M = evaluate_core(disc, complex(z))
    for factor in disc.conj_chain:
        if base_only and isinstance(factor, MobiusFactor):
            break
        M = _apply_factor(factor, M, complex(z))
    return M


def evaluate_map(disc: DiscMap, points: np.ndarray, base_only: bool = False) -> np.ndarray:
    """在一组点上求值，返回 (len(points), n, n)"""
    points = np.asarray(points, dtype=np.complex128).ravel()
    if not disc.conj_chain:
        return evaluate_core(disc, points)
    return np.stack([conjugate_chain_apply(disc, z, base_only) for z in points])


def as_callable(disc: DiscMap, base_only: bool = False) -> Callable[[complex], np.ndarray]:
    """ζ ↦ ψ(ζ)，供 Cauchy 积分求导使用"""
    return lambda z: conjugate_chain_apply(disc, z, base_only)


def exp_linear(X: np.ndarray, weight: float = 1.0) -> ExpLinearFactor:
    return ExpLinearFactor(matrix=CMatrix.from_array(X), weight=weight)


def similarity(S: np.ndarray) -> SimilarityFactor:
    return SimilarityFactor(matrix=CMatrix.from_array(S))
