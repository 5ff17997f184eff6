"""线性条件

所有提升条件都是 φ 各分量在固定点处导数的线性组合：
Σ w·φ_c^{(k)}(a) = rhs。检查器用它逐条求残差，phi_builder 用它组装系数方程。
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from backend.models.schemas import ConditionItem, ConditionReport, Poly


@dataclass(frozen=True)
class Term:
    """w·φ_component^{(order)}(point)，component 从 0 开始"""

    component: int
    order: int
    weight: complex = 1.0


@dataclass(frozen=True)
class LinearCondition:
    label: str
    point: complex
    terms: tuple[Term, ...]
    rhs: complex
    node: int | None = None

    def lhs(self, phi: Sequence[Poly]) -> complex:
        """条件左端在给定 φ 上的取值"""
        total = 0j
        for term in self.terms:
            coeffs = phi[term.component].to_array()
            deriv = np.polynomial.polynomial.polyder(coeffs, term.order) if term.order else coeffs
            if deriv.size == 0:
                continue
            total += term.weight * complex(np.polynomial.polynomial.polyval(self.point, deriv))
        return total

    def row(self, n: int, degree: int) -> np.ndarray:
        """φ 系数向量上的线性泛函，按分量依次排列，每个分量 degree+1 个系数

        φ_c 的 ζ^m 系数贡献 w·m!/(m−k)!·a^{m−k}。
        """
        row = np.zeros(n * (degree + 1), dtype=np.complex128)
        for term in self.terms:
            offset = term.component * (degree + 1)
            k = term.order
            for m in range(k, degree + 1):
                falling = math.factorial(m) / math.factorial(m - k)
                row[offset + m] += term.weight * falling * self.point ** (m - k)
        return row


def value_condition(
    label: str, point: complex, component: int, target: complex, node: int | None = None
) -> LinearCondition:
    """φ_c(a) = target"""
    return LinearCondition(label, complex(point), (Term(component, 0),), complex(target), node)


def derivative_condition(
    label: str,
    point: complex,
    component: int,
    order: int,
    target: complex,
    node: int | None = None,
) -> LinearCondition:
    """φ_c^{(k)}(a)/k! = target"""
    weight = 1.0 / math.factorial(order)
    return LinearCondition(
        label, complex(point), (Term(component, order, weight),), complex(target), node
    )


def condition_scale(phi: Sequence[Poly], data: Sequence[np.ndarray] = ()) -> float:
    """判定阈值的尺度：φ 系数与数据矩阵元素的最大模"""
    scale = 0.0
    for p in phi:
        scale = max(scale, float(np.max(np.abs(p.to_array()))))
    for arr in data:
        if np.size(arr):
            scale = max(scale, float(np.max(np.abs(arr))))
    return scale


def evaluate_conditions(
    conditions: Sequence[LinearCondition],
    phi: Sequence[Poly],
    tol: float,
    scale: float,
    case: str | None = None,
    notes: Sequence[str] = (),
) -> ConditionReport:
    """逐条求残差并汇总成报告"""
    threshold = tol * (1.0 + scale)
    items = []
    for cond in conditions:
        lhs = cond.lhs(phi)
        residual = abs(lhs - cond.rhs)
        items.append(
            ConditionItem(
                label=cond.label,
                point=cond.point,
                node=cond.node,
                lhs=lhs,
                rhs=cond.rhs,
                residual=residual,
                passed=residual <= threshold,
            )
        )
    return ConditionReport(
        case=case,
        items=items,
        tol=tol,
        passed=all(item.passed for item in items),
        notes=list(notes),
    )
