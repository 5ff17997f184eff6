"""全纯表达式代数

构造中出现的函数都属于 {多项式 × exp(多项式)、和、积、可去奇点的商}。
这里提供它们的逐点求值、截断 Taylor（喷射）运算、精确除法、
插值以及 Cauchy 积分求导。
"""

import logging
import math
from collections.abc import Callable, Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.linalg

from backend.core.errors import NotDivisibleError
from backend.models.schemas import (
    Add,
    Constant,
    Div,
    ExpNode,
    HoloNode,
    Monomial,
    Mul,
    Neg,
    Poly,
    PolyNode,
    Singularity,
    as_expr,
)

logger = logging.getLogger(__name__)

# 喷射系数视为零的相对容差
DIV_TOL = 1e-9
# derivative_at / order_of_vanishing 默认的阶数上限
JET_ORDER_CAP = 8
# 奇点附近改用局部 Taylor 展开求值的半径与阶数
NEAR_RADIUS = 0.05
LOCAL_ORDER = 14
# 节点重合判定
_NODE_TOL = 1e-12


# ---------------------------------------------------------------------------
# 构造辅助
# ---------------------------------------------------------------------------


def zeta(power: int = 1) -> Monomial:
    """ζ^power"""
    return Monomial(power=power)


def const(value: complex) -> Constant:
    return Constant(value=complex(value))


def poly(coeffs: Sequence[complex] | np.ndarray) -> PolyNode:
    """升幂系数构造多项式节点"""
    return PolyNode(poly=Poly.from_array(coeffs))


def exp_of(arg: Any) -> ExpNode:
    return ExpNode(arg=as_expr(arg))


def poly_from_roots(roots: Sequence[complex]) -> Poly:
    """首一多项式 Π(ζ − r)"""
    if len(roots) == 0:
        return Poly(coeffs=[1])
    return Poly.from_array(np.polynomial.polynomial.polyfromroots(list(roots)))


# ---------------------------------------------------------------------------
# 喷射
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Jet:
    """center 处的截断 Taylor 展开 a₀ + a₁h + … + a_K h^K"""

    center: complex
    coeffs: np.ndarray

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def _align(self, other: "Jet | complex") -> tuple[np.ndarray, np.ndarray]:
        if not isinstance(other, Jet):
            b = np.zeros_like(self.coeffs)
            b[0] = other
            return self.coeffs, b
        k = min(self.order, other.order)
        return self.coeffs[: k + 1], other.coeffs[: k + 1]

    def __add__(self, other: "Jet | complex") -> "Jet":
        a, b = self._align(other)
        return Jet(self.center, a + b)

    __radd__ = __add__

    def __sub__(self, other: "Jet | complex") -> "Jet":
        a, b = self._align(other)
        return Jet(self.center, a - b)

    def __neg__(self) -> "Jet":
        return Jet(self.center, -self.coeffs)

    def __mul__(self, other: "Jet | complex") -> "Jet":
        if not isinstance(other, Jet):
            return Jet(self.center, self.coeffs * other)
        a, b = self._align(other)
        return Jet(self.center, np.convolve(a, b)[: len(a)])

    __rmul__ = __mul__

    def exp(self) -> "Jet":
        """b = exp(a)：k·b_k = Σ_{j=1..k} j·a_j·b_{k−j}"""
        a = self.coeffs
        b = np.zeros_like(a)
        b[0] = np.exp(a[0])
        for k in range(1, len(a)):
            j = np.arange(1, k + 1)
            b[k] = np.sum(j * a[1 : k + 1] * b[k - 1 :: -1][: k]) / k
        return Jet(self.center, b)

    def shift(self, m: int) -> "Jet":
        """去掉前 m 个系数（除以 h^m）"""
        return Jet(self.center, self.coeffs[m:])

    def divide(self, other: "Jet") -> "Jet":
        """级数除法，要求 other.a₀ ≠ 0"""
        n, d = self._align(other)
        if d[0] == 0:
            raise ZeroDivisionError("除数喷射常数项为零")
        q = np.zeros_like(n)
        for k in range(len(n)):
            q[k] = (n[k] - np.dot(d[1 : k + 1], q[k - 1 :: -1][:k])) / d[0]
        return Jet(self.center, q)

    def truncate(self, order: int) -> "Jet":
        return Jet(self.center, self.coeffs[: order + 1])

    def __call__(self, z: Any) -> Any:
        return np.polynomial.polynomial.polyval(np.asarray(z) - self.center, self.coeffs)


def _poly_jet(coeffs: np.ndarray, center: complex, order: int) -> np.ndarray:
    """p(center + h) 的前 order+1 个系数"""
    out = np.zeros(order + 1, dtype=np.complex128)
    current = np.asarray(coeffs, dtype=np.complex128)
    for k in range(order + 1):
        if current.size == 0:
            break
        out[k] = np.polynomial.polynomial.polyval(center, current) / math.factorial(k)
        current = np.polynomial.polynomial.polyder(current) if current.size > 1 else np.zeros(0)
    return out


def _matching_singularity(e: Div, center: complex) -> Singularity | None:
    for s in e.singularities:
        if abs(s.point - center) <= _NODE_TOL:
            return s
    return None


def jet_eval(e: HoloNode, center: complex, order: int, strict: bool = True) -> Jet:
    """表达式在 center 处的喷射

    Args:
        e: 表达式
        center: 展开点
        order: 截断阶 K
        strict: 是否校验 Div 分子在声明奇点处的消没阶

    Raises:
        NotDivisibleError: 分子没有消没到声明的阶
    """
    center = complex(center)
    match e:
        case Constant():
            coeffs = np.zeros(order + 1, dtype=np.complex128)
            coeffs[0] = e.value
            return Jet(center, coeffs)
        case Monomial():
            coeffs = np.zeros(e.power + 1, dtype=np.complex128)
            coeffs[e.power] = 1.0
            return Jet(center, _poly_jet(coeffs, center, order))
        case PolyNode():
            return Jet(center, _poly_jet(e.poly.to_array(), center, order))
        case ExpNode():
            return jet_eval(e.arg, center, order, strict).exp()
        case Neg():
            return -jet_eval(e.arg, center, order, strict)
        case Add():
            total = Jet(center, np.zeros(order + 1, dtype=np.complex128))
            for term in e.terms:
                total = total + jet_eval(term, center, order, strict)
            return total
        case Mul():
            prod = Jet(center, np.zeros(order + 1, dtype=np.complex128))
            prod.coeffs[0] = 1.0
            for factor in e.factors:
                prod = prod * jet_eval(factor, center, order, strict)
            return prod
        case Div():
            return _div_jet(e, center, order, strict)
    raise TypeError(f"未知表达式节点: {type(e).__name__}")


def _div_jet(e: Div, center: complex, order: int, strict: bool) -> Jet:
    sing = _matching_singularity(e, center)
    m = sing.order if sing else 0
    num = jet_eval(e.numer, center, order + m, strict)
    den = jet_eval(e.denom, center, order + m, strict)
    if m:
        scale = 1.0 + float(np.max(np.abs(num.coeffs)))
        residual = float(np.max(np.abs(num.coeffs[:m])))
        if strict and residual > DIV_TOL * scale:
            raise NotDivisibleError(e.label or f"分子消没阶 ≥ {m}", center, residual)
        num, den = num.shift(m), den.shift(m)
    if abs(den.coeffs[0]) <= 1e-300:
        raise NotDivisibleError(e.label or "分母零点未声明", center, 0.0)
    return num.divide(den)


def derivative_at(e: HoloNode, a: complex, k: int, cap: int = JET_ORDER_CAP) -> complex:
    """k 阶导数 e^{(k)}(a)"""
    if k < 0 or k > cap:
        raise ValueError(f"导数阶 {k} 超出范围 [0, {cap}]")
    jet = jet_eval(e, a, k)
    return complex(math.factorial(k) * jet.coeffs[k])


def order_of_vanishing(
    e: HoloNode, a: complex, cap: int = JET_ORDER_CAP, tol: float = DIV_TOL
) -> int:
    """a 处的消没阶；返回 cap+1 表示"≥ cap+1"""
    jet = jet_eval(e, a, cap)
    scale = 1.0 + float(np.max(np.abs(jet.coeffs)))
    for k, c in enumerate(jet.coeffs):
        if abs(c) > tol * scale:
            return k
    return cap + 1


# ---------------------------------------------------------------------------
# 逐点求值
# ---------------------------------------------------------------------------


def evaluate(e: HoloNode, z: Any) -> np.ndarray:
    """逐点求值，z 可以是标量或数组"""
    z = np.asarray(z, dtype=np.complex128)
    match e:
        case Constant():
            return np.full(z.shape, e.value, dtype=np.complex128)
        case Monomial():
            return z**e.power
        case PolyNode():
            return np.polynomial.polynomial.polyval(z, e.poly.to_array())
        case ExpNode():
            return np.exp(evaluate(e.arg, z))
        case Neg():
            return -evaluate(e.arg, z)
        case Add():
            total = np.zeros(z.shape, dtype=np.complex128)
            for term in e.terms:
                total = total + evaluate(term, z)
            return total
        case Mul():
            prod = np.ones(z.shape, dtype=np.complex128)
            for factor in e.factors:
                prod = prod * evaluate(factor, z)
            return prod
        case Div():
            return _evaluate_div(e, z)
    raise TypeError(f"未知表达式节点: {type(e).__name__}")


def _evaluate_div(e: Div, z: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = evaluate(e.numer, z) / evaluate(e.denom, z)
    for sing in e.singularities:
        near = np.abs(z - sing.point) < NEAR_RADIUS
        if np.any(near):
            local = jet_eval(e, sing.point, LOCAL_ORDER, strict=False)
            out = np.where(near, local(z), out)
    return out


def evaluate_scalar(e: HoloNode, z: complex) -> complex:
    return complex(evaluate(e, z))


# ---------------------------------------------------------------------------
# 插值与精确除法
# ---------------------------------------------------------------------------


def hermite_poly(
    points: Sequence[complex],
    values: Sequence[complex],
    derivs: Sequence[complex | None] | None = None,
) -> Poly:
    """最低次 Hermite 插值多项式

    Args:
        points: 互异节点
        values: 节点函数值
        derivs: 可选的一阶导数值（None 表示不约束）
    """
    rows: list[np.ndarray] = []
    rhs: list[complex] = []
    derivs = list(derivs) if derivs is not None else [None] * len(points)
    n_cond = len(points) + sum(d is not None for d in derivs)
    if n_cond == 0:
        return Poly(coeffs=[0])
    powers = np.arange(n_cond)
    for a, v, d in zip(points, values, derivs, strict=True):
        rows.append(np.asarray(complex(a)) ** powers)
        rhs.append(complex(v))
        if d is not None:
            row = np.zeros(n_cond, dtype=np.complex128)
            row[1:] = powers[1:] * complex(a) ** (powers[1:] - 1)
            rows.append(row)
            rhs.append(complex(d))
    V = np.array(rows, dtype=np.complex128)
    coeffs, *_ = scipy.linalg.lstsq(V, np.array(rhs, dtype=np.complex128))
    return Poly.from_array(coeffs)


def _check_distinct(nodes: Sequence[complex]) -> None:
    for i in range(len(nodes)):
        for j in range(i + 1, len(nodes)):
            if abs(nodes[i] - nodes[j]) <= _NODE_TOL:
                raise ValueError(f"插值节点重复: {nodes[i]}")


def entire_interpolant(
    nodes: Sequence[complex],
    values: Sequence[complex],
    jet_constraints: Sequence[complex | None] | None = None,
) -> HoloNode:
    """整函数插值 h = Z·exp(g)

    Z 为取零值节点上的首一乘积，g 为在非零节点插值 log(value/Z) 的多项式。
    h 在 C 中的零点恰为取零值的节点，且都是单零点。

    Args:
        nodes: 互异节点
        values: 节点值
        jet_constraints: 可选的一阶导数值

    Raises:
        ValueError: 节点重复，或零值节点上要求的导数为 0
    """
    nodes = [complex(a) for a in nodes]
    values = [complex(v) for v in values]
    _check_distinct(nodes)
    constraints = list(jet_constraints) if jet_constraints is not None else [None] * len(nodes)
    scale = 1.0 + max((abs(v) for v in values), default=0.0)
    zero_nodes = [a for a, v in zip(nodes, values, strict=True) if abs(v) <= 1e-14 * scale]
    Z = poly_from_roots(zero_nodes)
    dZ = np.polynomial.polynomial.polyder(Z.to_array()) if Z.degree > 0 else np.zeros(1)

    g_points, g_values, g_derivs = [], [], []
    for a, v, d in zip(nodes, values, constraints, strict=True):
        z_a = Z(a)
        dz_a = np.polynomial.polynomial.polyval(a, dZ)
        if a in zero_nodes:
            if d is None:
                continue
            if abs(d) <= 1e-14 * scale:
                raise ValueError(f"零值节点 {a} 是单零点，导数不能为 0")
            g_points.append(a)
            g_values.append(np.log(complex(d) / dz_a))
            g_derivs.append(None)
        else:
            g_points.append(a)
            g_values.append(np.log(v / z_a))
            g_derivs.append(None if d is None else complex(d) / v - dz_a / z_a)

    g = hermite_poly(g_points, g_values, g_derivs)
    if g.degree == 0:
        return PolyNode(poly=Poly.from_array(Z.to_array() * np.exp(g.coeffs[0])))
    if Z.degree == 0:
        return ExpNode(arg=PolyNode(poly=g))
    return Mul(factors=[PolyNode(poly=Z), ExpNode(arg=PolyNode(poly=g))])


def exact_div(
    numer: HoloNode,
    denom: HoloNode,
    zeros: Sequence[tuple[complex, int]],
    label: str = "",
    scale: float | None = None,
) -> Div:
    """numer / denom，zeros 列出 denom 的全部零点及阶

    Raises:
        NotDivisibleError: numer 在某个零点的消没阶不足
    """
    singularities = [Singularity(point=complex(p), order=int(k)) for p, k in zeros if k > 0]
    for sing in singularities:
        jet = jet_eval(numer, sing.point, sing.order + 2)
        ref = scale if scale is not None else 1.0 + float(np.max(np.abs(jet.coeffs)))
        residual = float(np.max(np.abs(jet.coeffs[: sing.order])))
        if residual > DIV_TOL * ref:
            logger.debug(f"不可整除: {label} @ {sing.point}, 余项 {residual:.3e}")
            raise NotDivisibleError(label or f"分子消没阶 ≥ {sing.order}", sing.point, residual)
    return Div(numer=numer, denom=denom, singularities=singularities, label=label)


def require_jet(
    e: HoloNode,
    point: complex,
    target: Sequence[complex],
    label: str,
    scale: float | None = None,
) -> None:
    """核对 e 在 point 处的前若干 Taylor 系数

    Raises:
        NotDivisibleError: 任一系数偏离目标超过容差
    """
    target = np.asarray(target, dtype=np.complex128)
    jet = jet_eval(e, point, len(target) - 1)
    residual = float(np.max(np.abs(jet.coeffs - target)))
    ref = scale
    if ref is None:
        ref = 1.0 + max(float(np.max(np.abs(target))), float(np.max(np.abs(jet.coeffs))))
    if residual > DIV_TOL * ref:
        raise NotDivisibleError(label, point, residual)


# ---------------------------------------------------------------------------
# Cauchy 积分求导
# ---------------------------------------------------------------------------


def cauchy_derivatives(
    f: Callable[[complex], Any],
    center: complex,
    radius: float,
    count: int,
    samples: int = 256,
) -> list[Any]:
    """梯形法离散 Cauchy 积分，返回 0..count 阶导数

    f^{(k)}(c) ≈ k!/(N r^k) Σ_j f(c + r w_j) w_j^{−k}，w_j = e^{2πij/N}。

    Raises:
        ValueError: samples < 4·count
    """
    if samples < 4 * count:
        raise ValueError(f"采样数 {samples} 不足，至少需要 {4 * count}")
    if radius <= 0:
        raise ValueError("积分半径必须为正")
    w = np.exp(2j * np.pi * np.arange(samples) / samples)
    values = np.array([np.asarray(f(center + radius * wj), dtype=np.complex128) for wj in w])
    spectrum = np.fft.fft(values, axis=0) / samples
    return [math.factorial(k) * spectrum[k] / radius**k for k in range(count + 1)]


# ---------------------------------------------------------------------------
# 结构检查
# ---------------------------------------------------------------------------


def _zero_multiset(e: HoloNode) -> list[tuple[complex, int]] | None:
    """分母的零点（点, 重数）；无法判定时返回 None"""
    match e:
        case Constant():
            return [] if e.value != 0 else None
        case Monomial():
            return [(0j, e.power)] if e.power else []
        case PolyNode():
            if e.poly.degree == 0:
                return [] if e.poly.coeffs[0] != 0 else None
            roots = np.polynomial.polynomial.polyroots(e.poly.to_array())
            merged: list[tuple[complex, int]] = []
            for r in roots:
                for i, (p, k) in enumerate(merged):
                    if abs(p - r) <= 1e-6:
                        merged[i] = (p, k + 1)
                        break
                else:
                    merged.append((complex(r), 1))
            return merged
        case ExpNode():
            return []
        case Neg():
            return _zero_multiset(e.arg)
        case Mul():
            total: list[tuple[complex, int]] = []
            for factor in e.factors:
                part = _zero_multiset(factor)
                if part is None:
                    return None
                total.extend(part)
            return total
    return None


def entire_on_plane(e: HoloNode) -> bool:
    """每个 Div 的分母零点都已声明且阶数足够，即 e 在整个 C 上全纯"""
    match e:
        case Constant() | Monomial() | PolyNode():
            return True
        case ExpNode() | Neg():
            return entire_on_plane(e.arg)
        case Add():
            return all(entire_on_plane(t) for t in e.terms)
        case Mul():
            return all(entire_on_plane(f) for f in e.factors)
        case Div():
            if not (entire_on_plane(e.numer) and entire_on_plane(e.denom)):
                return False
            zeros = _zero_multiset(e.denom)
            if zeros is None:
                return False
            for point, mult in zeros:
                declared = sum(
                    s.order for s in e.singularities if abs(s.point - point) <= 1e-6
                )
                if declared < mult:
                    return False
            return True
    return False
