"""谱 Carathéodory–Fejér 问题：情形归一化、条件检查与提升构造

归一化把 (A, B) 化为以下两类基点之一：
    A = 0：按 B 的类别（循环 / 标量 / 非循环）分情形；
    A = A_μ：先做交换子约化，必要时再做转置约化。
φ 始终以归一化坐标给出；构造出的 ψ̃ 经逆向共轭链还原到原坐标。
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from backend.core.errors import UnsupportedCaseError
from backend.core.holo import cauchy_derivatives, exact_div, exp_of, poly, require_jet, zeta
from backend.core.linalg import (
    amu,
    as_matrix,
    classify,
    commutator_reduce,
    gateaux_sigma,
    mobius,
    noncyclic_jordan_form,
    rational_canonical,
    sigma,
    spectral_radius,
)
from backend.lift.chain import exp_linear, make_map, similarity
from backend.lift.conditions import (
    LinearCondition,
    Term,
    condition_scale,
    derivative_condition,
    evaluate_conditions,
    value_condition,
)
from backend.models.schemas import (
    ConditionReport,
    DiscMap,
    MatrixClassTag,
    MobiusFactor,
    Poly,
    PolyNode,
    SCFCase,
    SCFReduction,
    TransposeFactor,
    array_to_matrix,
)

logger = logging.getLogger(__name__)

# 约化中"为零"的判定（相对 1 + ‖B‖）
ZERO_TOL = 1e-10
# Möbius 参数视为 0 的阈值
_SHIFT_TOL = 1e-14


def _transpose_similarity(mu: complex) -> tuple[np.ndarray, np.ndarray]:
    T = np.array([[1, 0, 0], [0, 0, 1], [0, 1, mu]], dtype=np.complex128)
    T_inv = np.array([[1, 0, 0], [0, -mu, 1], [0, 1, 0]], dtype=np.complex128)
    return T, T_inv


@dataclass
class SCFInstance:
    """归一化后的 Carathéodory–Fejér 实例"""

    n: int
    A: np.ndarray
    B: np.ndarray
    case: SCFCase
    base_A: np.ndarray
    base_B: np.ndarray
    # 作用在核心 ψ̃ 上的逆向共轭链（按顺序）
    chain: list = field(default_factory=list)
    mobius_lam: complex = 0j
    similarity: np.ndarray | None = None
    commutator: np.ndarray | None = None
    transposed: bool = False
    # B 的特征值参数（标量 / 非循环情形）或 A_μ 的 μ
    lam: complex = 0j
    mu: complex = 0j
    degenerate: bool = False
    notes: list[str] = field(default_factory=list)

    def reduction(self) -> SCFReduction:
        return SCFReduction(
            case=self.case,
            mobius_lam=self.mobius_lam,
            similarity=None if self.similarity is None else array_to_matrix(self.similarity),
            commutator=None if self.commutator is None else array_to_matrix(self.commutator),
            transposed=self.transposed,
            base_A=array_to_matrix(self.base_A),
            base_B=array_to_matrix(self.base_B),
            degenerate=self.degenerate,
        )


def _is_zero(z: complex, scale: float) -> bool:
    return abs(z) <= ZERO_TOL * (1.0 + scale)


def mobius_derivative(lam: complex, A: np.ndarray, B: np.ndarray, samples: int = 128) -> np.ndarray:
    """dΦ_λ(A)[B]：对 ζ ↦ Φ_λ(A + ζB) 做 Cauchy 积分求一阶导"""
    radius = 0.25 * (1.0 - abs(lam)) / (1.0 + float(np.linalg.norm(B, 2)))
    derivs = cauchy_derivatives(lambda z: mobius(lam, A + z * B), 0j, radius, 1, samples)
    D = np.asarray(derivs[1], dtype=np.complex128)
    # 闭式核对：B(I−λ̄A)⁻¹ + (A−λI)(I−λ̄A)⁻¹·λ̄B·(I−λ̄A)⁻¹
    n = A.shape[0]
    M_inv = np.linalg.inv(np.eye(n) - np.conj(lam) * A)
    exact = B @ M_inv + (A - lam * np.eye(n)) @ M_inv @ (np.conj(lam) * B) @ M_inv
    error = float(np.linalg.norm(D - exact))
    if error > 1e-8 * (1.0 + float(np.linalg.norm(exact))):
        logger.warning(f"⚠️ Möbius 导数积分与闭式不一致: {error:.3e}")
    return D


# ---------------------------------------------------------------------------
# 归一化
# ---------------------------------------------------------------------------


def scf_normalize(A: np.ndarray, B: np.ndarray) -> SCFInstance:
    """把 (A, B) 化为归一化情形

    Raises:
        ValueError: r(A) ≥ 1 或维数不一致
    """
    A = as_matrix(A)
    B = as_matrix(B)
    n = A.shape[0]
    if B.shape != A.shape:
        raise ValueError("A 与 B 维数不一致")
    if spectral_radius(A) >= 1:
        raise ValueError(f"A 不在谱球内: r(A) = {spectral_radius(A):.6g}")

    cls = classify(A)
    if cls.tag == MatrixClassTag.CYCLIC:
        logger.info("⚠️ 循环基点不在支持范围内")
        return SCFInstance(
            n=n, A=A, B=B, case=SCFCase.CYCLIC_UNSUPPORTED, base_A=A.copy(), base_B=B.copy()
        )

    lam = complex(cls.lam)
    shifted = abs(lam) > _SHIFT_TOL
    if cls.tag == MatrixClassTag.SCALAR:
        A1 = np.zeros((n, n), dtype=np.complex128)
    else:
        A1 = mobius(lam, A) if shifted else A.copy()
    B1 = mobius_derivative(lam, A, B) if shifted else B.copy()
    tail = [MobiusFactor(lam=-lam)] if shifted else []

    if cls.tag == MatrixClassTag.SCALAR:
        instance = _normalize_zero_base(n, B1)
    else:
        instance = _normalize_amu_base(A1, B1)
    instance.A, instance.B = A, B
    instance.mobius_lam = lam if shifted else 0j
    instance.chain.extend(tail)
    logger.info(f"📊 SCF 归一化: {instance.case.value}, λ={instance.mobius_lam:.4g}")
    return instance


def _normalize_zero_base(n: int, B1: np.ndarray) -> SCFInstance:
    zero = np.zeros((n, n), dtype=np.complex128)
    cls = classify(B1)
    common = {"n": n, "A": zero, "B": B1, "base_A": zero}
    if cls.tag == MatrixClassTag.CYCLIC:
        pair = rational_canonical(B1)
        return SCFInstance(
            **common,
            case=SCFCase.ZERO_B_CYCLIC,
            base_B=pair.canonical,
            chain=[similarity(pair.transform)],
            similarity=pair.transform,
        )
    if cls.tag == MatrixClassTag.SCALAR:
        lam = complex(cls.lam)
        base_B = lam * np.eye(n, dtype=np.complex128)
        if n == 2:
            return SCFInstance(**common, case=SCFCase.ZERO_B_SCALAR_N2, base_B=base_B, lam=lam)
        degenerate = _is_zero(lam, 0.0)
        notes = []
        if degenerate:
            notes.append("B = 0：超出标量 B 构造要求的 λ ≠ 0，改用 ζ² 伴随型构造，条件为 ord φ_j ≥ 2j")
        return SCFInstance(
            **common,
            case=SCFCase.ZERO_B_SCALAR_N3,
            base_B=np.zeros((n, n), dtype=np.complex128) if degenerate else base_B,
            lam=0j if degenerate else lam,
            degenerate=degenerate,
            notes=notes,
        )
    pair = rational_canonical(B1)
    J, T = noncyclic_jordan_form(cls.lam, cls.mu)
    S = np.linalg.solve(T, pair.transform)
    return SCFInstance(
        **common,
        case=SCFCase.ZERO_B_NONCYCLIC_N3,
        base_B=J,
        chain=[similarity(S)],
        similarity=S,
        lam=complex(cls.lam),
        mu=complex(cls.mu),
    )


def _normalize_amu_base(A1: np.ndarray, B1: np.ndarray) -> SCFInstance:
    pair = rational_canonical(A1)
    S = pair.transform
    mu = complex(np.trace(A1))
    A_mu = amu(mu)
    B2 = S @ B1 @ np.linalg.inv(S)
    scale = float(np.linalg.norm(B1))
    Bt, X = commutator_reduce(B2, mu)

    chain: list = []
    transposed = False
    if _is_zero(Bt[0, 1], scale) and not _is_zero(Bt[2, 0], scale):
        T, T_inv = _transpose_similarity(mu)
        Bt2, X2 = commutator_reduce(T @ Bt.T @ T_inv, mu)
        if np.any(X2 != 0):
            chain.append(exp_linear(X2, weight=-1.0))
        chain.extend([similarity(T), TransposeFactor()])
        Bt, transposed = Bt2, True
    if np.any(X != 0):
        chain.append(exp_linear(X, weight=-1.0))
    chain.append(similarity(S))

    b = Bt
    if not _is_zero(b[0, 1], scale):
        case = SCFCase.AMU_GENERIC
    elif not _is_zero(b[2, 1] + mu * b[0, 0], scale):
        case = SCFCase.AMU_SPECIAL
    else:
        case = SCFCase.AMU_DEGENERATE
    return SCFInstance(
        n=3,
        A=A1,
        B=B1,
        case=case,
        base_A=A_mu,
        base_B=Bt,
        chain=chain,
        similarity=S,
        commutator=X,
        transposed=transposed,
        mu=mu,
    )


# ---------------------------------------------------------------------------
# 条件
# ---------------------------------------------------------------------------


def _bullets_scalar_n2(lam: complex) -> list[LinearCondition]:
    p = "b-scalar-n2"
    return [
        derivative_condition(f"{p}.1", 0, 0, 1, 2 * lam),
        derivative_condition(f"{p}.2", 0, 1, 1, 0),
        derivative_condition(f"{p}.3", 0, 1, 2, lam**2),
        # φ₂''' = 3λφ₁''
        LinearCondition(f"{p}.4", 0j, (Term(1, 3), Term(0, 2, -3 * lam)), 0j),
    ]


def _bullets_scalar_n3(lam: complex) -> list[LinearCondition]:
    if lam == 0:
        raise UnsupportedCaseError("标量 B 的 n=3 判据要求 λ ≠ 0")
    p = "b-scalar-n3"
    return [
        derivative_condition(f"{p}.1", 0, 0, 1, 3 * lam),
        derivative_condition(f"{p}.2", 0, 1, 1, 0),
        derivative_condition(f"{p}.3", 0, 1, 2, 3 * lam**2),
        derivative_condition(f"{p}.4a", 0, 2, 1, 0),
        derivative_condition(f"{p}.4b", 0, 2, 2, 0),
        derivative_condition(f"{p}.5", 0, 2, 3, lam**3),
        # φ₂'''/3! = λφ₁''
        LinearCondition(f"{p}.6", 0j, (Term(1, 3, 1 / 6), Term(0, 2, -lam)), 0j),
        # φ₃⁽⁴⁾/4! = λ²φ₁''/2
        LinearCondition(f"{p}.7", 0j, (Term(2, 4, 1 / 24), Term(0, 2, -(lam**2) / 2)), 0j),
        # φ₃⁽⁵⁾/5! − λφ₂⁽⁴⁾/4! + λ²φ₁'''/3! = 0
        LinearCondition(
            f"{p}.8",
            0j,
            (Term(2, 5, 1 / 120), Term(1, 4, -lam / 24), Term(0, 3, lam**2 / 6)),
            0j,
        ),
    ]


def _bullets_zero_n3() -> list[LinearCondition]:
    return [
        derivative_condition(f"b-zero-n3.ord.{j}.{k}", 0, j - 1, k, 0)
        for j in (1, 2, 3)
        for k in range(1, 2 * j)
    ]


def _bullets_noncyclic(lam: complex, mu: complex) -> list[LinearCondition]:
    p = "b-noncyclic"
    return [
        derivative_condition(f"{p}.1", 0, 0, 1, 2 * lam + mu),
        derivative_condition(f"{p}.2", 0, 1, 1, 0),
        derivative_condition(f"{p}.3", 0, 1, 2, lam**2 + 2 * lam * mu),
        derivative_condition(f"{p}.4a", 0, 2, 1, 0),
        derivative_condition(f"{p}.4b", 0, 2, 2, 0),
        derivative_condition(f"{p}.5", 0, 2, 3, lam**2 * mu),
        # φ₃⁽⁴⁾/4! − λφ₂'''/3! + λ²φ₁''/2 = 0
        LinearCondition(
            f"{p}.6",
            0j,
            (Term(2, 4, 1 / 24), Term(1, 3, -lam / 6), Term(0, 2, lam**2 / 2)),
            0j,
        ),
    ]


def _bullets_cyclic(n: int, B: np.ndarray) -> list[LinearCondition]:
    s = sigma(B)
    conds = []
    for j in range(1, n + 1):
        for k in range(1, j):
            conds.append(derivative_condition(f"b-cyclic.ord.{j}.{k}", 0, j - 1, k, 0))
        conds.append(derivative_condition(f"b-cyclic.top.{j}", 0, j - 1, j, s[j - 1]))
    return conds


def _bullets_amu(instance: SCFInstance) -> list[LinearCondition]:
    b, mu = instance.base_B, instance.mu
    gateaux = gateaux_sigma(amu(mu), b)
    first = gateaux.first
    conds = [derivative_condition(f"first.{j + 1}", 0, j, 1, first[j]) for j in range(3)]
    if instance.case == SCFCase.AMU_DEGENERATE:
        conds.extend(
            [
                derivative_condition("amu-degenerate.1", 0, 2, 2, mu * b[0, 0] ** 2),
                # φ₃'''/3! = b₁₁(φ₂''/2 − b₁₁b₃₃)
                LinearCondition(
                    "amu-degenerate.2",
                    0j,
                    (Term(2, 3, 1 / 6), Term(1, 2, -b[0, 0] / 2)),
                    complex(-b[0, 0] ** 2 * b[2, 2]),
                ),
            ]
        )
    else:
        label = "amu-generic.1" if instance.case == SCFCase.AMU_GENERIC else "amu-special.1"
        conds.append(derivative_condition(label, 0, 2, 2, gateaux.sigma3_second))
    return conds


def cf_condition_list(instance: SCFInstance) -> list[LinearCondition]:
    """全部条件行：φ(0) 的取值 + 对应情形的导数条件

    Raises:
        UnsupportedCaseError: 循环基点
    """
    if instance.case == SCFCase.CYCLIC_UNSUPPORTED:
        raise UnsupportedCaseError("循环基点的 Carathéodory–Fejér 提升不在支持范围内")
    s0 = sigma(instance.base_A)
    conds = [value_condition(f"value.{j + 1}", 0, j, s0[j]) for j in range(instance.n)]
    match instance.case:
        case SCFCase.ZERO_B_CYCLIC:
            conds.extend(_bullets_cyclic(instance.n, instance.base_B))
        case SCFCase.ZERO_B_SCALAR_N2:
            conds.extend(_bullets_scalar_n2(instance.lam))
        case SCFCase.ZERO_B_SCALAR_N3 if instance.degenerate:
            conds.extend(_bullets_zero_n3())
        case SCFCase.ZERO_B_SCALAR_N3:
            conds.extend(_bullets_scalar_n3(instance.lam))
        case SCFCase.ZERO_B_NONCYCLIC_N3:
            conds.extend(_bullets_noncyclic(instance.lam, instance.mu))
        case _:
            conds.extend(_bullets_amu(instance))
    return conds


def cf_conditions(
    instance: SCFInstance, phi: Sequence[Poly], tol: float = 1e-9
) -> ConditionReport:
    """检查归一化坐标下 φ 的提升条件"""
    phi = [p if isinstance(p, Poly) else Poly.from_array(p) for p in phi]
    if len(phi) != instance.n:
        raise ValueError(f"φ 有 {len(phi)} 个分量，应为 {instance.n}")
    scale = condition_scale(phi, [instance.base_A, instance.base_B])
    report = evaluate_conditions(
        cf_condition_list(instance),
        phi,
        tol,
        scale,
        case=instance.case.value,
        notes=instance.notes,
    )
    if report.passed:
        logger.info(f"✅ SCF 条件全部满足: {instance.case.value}")
    else:
        logger.info(f"⚠️ SCF 条件不满足: {report.failed_labels()}")
    return report


# ---------------------------------------------------------------------------
# 构造
# ---------------------------------------------------------------------------


def _coeff(p: Poly, k: int) -> complex:
    return p.coeffs[k] if k < len(p.coeffs) else 0j


def _lift_cyclic(n: int, phi: list[PolyNode]) -> list[list]:
    tilde = [phi[0]] + [
        exact_div(phi[j], zeta(j), [(0, j)], label=f"ord φ{j + 1} ≥ {j}") for j in range(1, n)
    ]
    z, zero = zeta(1), _zero()
    if n == 2:
        return [[zero, z], [-tilde[1], tilde[0]]]
    return [[zero, z, zero], [zero, zero, z], [tilde[2], -tilde[1], tilde[0]]]


def _lift_scalar_n2(lam: complex, phi: list[PolyNode]) -> list[list]:
    f11 = poly([0, lam])
    f22 = phi[0] - f11
    f21 = exact_div(f11 * f22 - phi[1], zeta(2), [(0, 2)], label="ord(λζf₂₂ − φ₂) ≥ 2")
    return [[f11, zeta(2)], [f21, f22]]


def _lift_scalar_n3(lam: complex, phi: list[PolyNode]) -> list[list]:
    f11 = f22 = poly([0, lam])
    f12 = f23 = zeta(2)
    f33 = phi[0] - f11 - f22
    g = f11 * f22 + f22 * f33 + f33 * f11 - phi[1]
    f32 = exact_div(g, zeta(2), [(0, 2)], label="ord g̃ ≥ 2")
    h = phi[2] - f11 * f22 * f33 + f11 * f23 * f32
    f31 = exact_div(h, zeta(4), [(0, 4)], label="ord h̃ ≥ 4")
    zero = _zero()
    return [[f11, f12, zero], [zero, f22, f23], [f31, f32, f33]]


def _lift_zero_n3(phi: list[PolyNode]) -> list[list]:
    z2, zero = zeta(2), _zero()
    f32 = -exact_div(phi[1], zeta(2), [(0, 2)], label="ord φ₂ ≥ 2")
    f31 = exact_div(phi[2], zeta(4), [(0, 4)], label="ord φ₃ ≥ 4")
    return [[zero, z2, zero], [zero, zero, z2], [f31, f32, phi[0]]]


def _lift_noncyclic(lam: complex, phi: list[PolyNode]) -> list[list]:
    f11 = f22 = poly([0, lam])
    f33 = phi[0] - f11 - f22
    f32 = exact_div(
        poly([0, 0, lam**2]) + poly([0, 2 * lam]) * f33 - phi[1],
        zeta(1),
        [(0, 1)],
        label="ord(λ²ζ² + 2λζf₃₃ − φ₂) ≥ 1",
    )
    f31 = exact_div(
        phi[2] - poly([0, 0, lam**2]) * f33 + poly([0, 0, lam]) * f32,
        zeta(3),
        [(0, 3)],
        label="ord(φ₃ − λ²ζ²f₃₃ + λζ²f₃₂) ≥ 3",
    )
    zero = _zero()
    return [[f11, zeta(2), zero], [zero, f22, zeta(1)], [f31, f32, f33]]


def _lift_amu(instance: SCFInstance, phi_polys: list[Poly], phi: list[PolyNode]) -> list[list]:
    b, mu = instance.base_B, instance.mu
    E = exp_of(zeta(2))
    E_inv = exp_of(poly([0, 0, -1]))
    if instance.case == SCFCase.AMU_GENERIC:
        f11 = poly([0, b[0, 0]])
        f12 = poly([0, b[0, 1]])
        order = 1
    else:
        c = 0j
        if instance.case == SCFCase.AMU_SPECIAL:
            c = (
                b[0, 0] * (_coeff(phi_polys[1], 2) - b[0, 0] * b[2, 2]) - _coeff(phi_polys[2], 3)
            ) / (b[2, 1] + mu * b[0, 0])
        f11 = poly([0, b[0, 0], c])
        f12 = zeta(2)
        order = 2
    f33 = phi[0] - f11
    f32 = E * (f11 * f33 - phi[1])
    f31 = exact_div(
        f11 * f32 + E * phi[2], f12, [(0, order)], label=f"ord(f₁₁f₃₂ + e^(ζ²)φ₃) ≥ {order}"
    )
    zero = _zero()
    return [[f11, f12, zero], [zero, zero, E_inv], [f31, f32, f33]]


def _zero() -> PolyNode:
    return PolyNode(poly=Poly(coeffs=[0]))


def cf_lift(instance: SCFInstance, phi: Sequence[Poly]) -> DiscMap:
    """按归一化情形构造 ψ̃，核对 ψ̃(0)、ψ̃'(0) 后接上逆向共轭链

    Raises:
        NotDivisibleError: 某个消没阶或导数条件不成立
        UnsupportedCaseError: 循环基点
    """
    if instance.case == SCFCase.CYCLIC_UNSUPPORTED:
        raise UnsupportedCaseError("循环基点的 Carathéodory–Fejér 提升不在支持范围内")
    polys = [p if isinstance(p, Poly) else Poly.from_array(p) for p in phi]
    if len(polys) != instance.n:
        raise ValueError(f"φ 有 {len(polys)} 个分量，应为 {instance.n}")
    nodes = [PolyNode(poly=p) for p in polys]

    match instance.case:
        case SCFCase.ZERO_B_CYCLIC:
            entries = _lift_cyclic(instance.n, nodes)
        case SCFCase.ZERO_B_SCALAR_N2:
            entries = _lift_scalar_n2(instance.lam, nodes)
        case SCFCase.ZERO_B_SCALAR_N3 if instance.degenerate:
            entries = _lift_zero_n3(nodes)
        case SCFCase.ZERO_B_SCALAR_N3:
            if instance.lam == 0:
                raise UnsupportedCaseError("标量 B 的 n=3 构造要求 λ ≠ 0")
            entries = _lift_scalar_n3(instance.lam, nodes)
        case SCFCase.ZERO_B_NONCYCLIC_N3:
            entries = _lift_noncyclic(instance.lam, nodes)
        case _:
            entries = _lift_amu(instance, polys, nodes)

    n = instance.n
    for p in range(n):
        for q in range(n):
            require_jet(
                entries[p][q],
                0j,
                [instance.base_A[p, q], instance.base_B[p, q]],
                f"jet.{p + 1}{q + 1}",
            )
    logger.info(f"✅ SCF 提升完成: {instance.case.value}")
    return make_map(entries, instance.chain)


# ---------------------------------------------------------------------------
# κ = 0 判定
# ---------------------------------------------------------------------------


def kappa_zero_at_A0(B: np.ndarray) -> bool:
    """A₀ = [[0,0,0],[0,0,1],[0,0,0]] 处 κ(A₀; B) = 0 的判定

    条件：tr B = b₃₂ = b₁₂b₃₁ = 0，且不满足 (b₁₁ ≠ 0, b₁₂ = b₃₁ = 0)。
    """
    B = as_matrix(B)
    if B.shape[0] != 3:
        raise ValueError("κ 判定只用于 n=3")
    tol = 1e-12 * (1.0 + float(np.linalg.norm(B)))

    def zero(z: complex) -> bool:
        return abs(z) <= tol

    in_first = zero(np.trace(B)) and zero(B[2, 1]) and zero(B[0, 1] * B[2, 0])
    in_second = not zero(B[0, 0]) and zero(B[0, 1]) and zero(B[2, 0])
    return bool(in_first and not in_second)
