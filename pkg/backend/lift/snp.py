"""谱 Nevanlinna–Pick 问题：条件检查与提升构造（n=2, 3）"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from backend.core.domains import in_spectral_ball
from backend.core.holo import (
    entire_interpolant,
    exact_div,
    hermite_poly,
    poly_from_roots,
    require_jet,
)
from backend.core.linalg import as_matrix, classify, is_scalar, mlog, rational_canonical, sigma
from backend.lift.chain import make_map
from backend.lift.conditions import (
    LinearCondition,
    Term,
    condition_scale,
    evaluate_conditions,
    value_condition,
)
from backend.models.schemas import (
    ConditionReport,
    DiscMap,
    ExpPolyFactor,
    HoloNode,
    MatrixClass,
    MatrixClassTag,
    Poly,
    PolyNode,
)

logger = logging.getLogger(__name__)

_NODE_TOL = 1e-12


@dataclass
class SNPInstance:
    """插值数据：节点 α_j 与目标矩阵 A_j"""

    n: int
    alphas: list[complex]
    matrices: list[np.ndarray]
    classes: list[MatrixClass] = field(default_factory=list)

    @classmethod
    def create(cls, n: int, nodes: Sequence[tuple[complex, np.ndarray]]) -> "SNPInstance":
        """校验并构造实例

        Raises:
            ValueError: 节点重复、不在圆盘内、矩阵维数不对或不在谱球内
        """
        if n not in (2, 3):
            raise ValueError(f"只支持 n=2/3，收到 n={n}")
        if not nodes:
            raise ValueError("至少需要一个节点")
        alphas, matrices = [], []
        for alpha, A in nodes:
            alpha = complex(alpha)
            A = as_matrix(A)
            if A.shape[0] != n:
                raise ValueError(f"节点 {alpha} 的矩阵维数 {A.shape[0]} 与 n={n} 不一致")
            if abs(alpha) >= 1:
                raise ValueError(f"节点 {alpha} 不在单位圆盘内")
            if any(abs(alpha - other) <= _NODE_TOL for other in alphas):
                raise ValueError(f"节点重复: {alpha}")
            if not in_spectral_ball(A).inside:
                raise ValueError(f"节点 {alpha} 的矩阵不在谱球内")
            alphas.append(alpha)
            matrices.append(A)
        return cls(n=n, alphas=alphas, matrices=matrices, classes=[classify(A) for A in matrices])

    def indices(self, tag: MatrixClassTag) -> list[int]:
        return [j for j, c in enumerate(self.classes) if c.tag == tag]


def _as_polys(phi: Sequence[Poly | Sequence[complex]]) -> list[Poly]:
    return [p if isinstance(p, Poly) else Poly.from_array(p) for p in phi]


# ---------------------------------------------------------------------------
# 条件
# ---------------------------------------------------------------------------


def snp_condition_list(instance: SNPInstance) -> list[LinearCondition]:
    """全部条件行：节点值 + 标量节点与非循环节点的导数条件"""
    conds: list[LinearCondition] = []
    for j, (alpha, A, cls) in enumerate(
        zip(instance.alphas, instance.matrices, instance.classes, strict=True)
    ):
        s = sigma(A)
        for i in range(instance.n):
            conds.append(value_condition(f"node{j}.value.{i + 1}", alpha, i, s[i], node=j))
        lam = cls.lam
        if cls.tag == MatrixClassTag.SCALAR and instance.n == 2:
            # φ₂' = λφ₁'
            conds.append(
                LinearCondition(
                    f"node{j}.scalar.1", alpha, (Term(1, 1), Term(0, 1, -lam)), 0j, node=j
                )
            )
        elif cls.tag == MatrixClassTag.SCALAR:
            conds.extend(
                [
                    # φ₂' = 2λφ₁'
                    LinearCondition(
                        f"node{j}.scalar.1", alpha, (Term(1, 1), Term(0, 1, -2 * lam)), 0j, j
                    ),
                    # φ₃' = λ²φ₁'
                    LinearCondition(
                        f"node{j}.scalar.2", alpha, (Term(2, 1), Term(0, 1, -(lam**2))), 0j, j
                    ),
                    # φ₃'' − λφ₂'' + λ²φ₁'' = 0
                    LinearCondition(
                        f"node{j}.scalar.3",
                        alpha,
                        (Term(2, 2), Term(1, 2, -lam), Term(0, 2, lam**2)),
                        0j,
                        j,
                    ),
                ]
            )
        elif cls.tag == MatrixClassTag.NONCYCLIC:
            # φ₃' − λφ₂' + λ²φ₁' = 0
            conds.append(
                LinearCondition(
                    f"node{j}.noncyclic.1",
                    alpha,
                    (Term(2, 1), Term(1, 1, -lam), Term(0, 1, lam**2)),
                    0j,
                    j,
                )
            )
    return conds


def snp_conditions(
    instance: SNPInstance, phi: Sequence[Poly], tol: float = 1e-9
) -> ConditionReport:
    """检查提升条件；不成立的条件记录在报告里，不抛异常

    Raises:
        ValueError: φ 的分量数与 n 不一致
    """
    phi = _as_polys(phi)
    if len(phi) != instance.n:
        raise ValueError(f"φ 有 {len(phi)} 个分量，应为 {instance.n}")
    scale = condition_scale(phi, instance.matrices)
    report = evaluate_conditions(snp_condition_list(instance), phi, tol, scale, case="snp")
    if report.passed:
        logger.info(f"✅ SNP 条件全部满足 (n={instance.n}, 节点数={len(instance.alphas)})")
    else:
        logger.info(f"⚠️ SNP 条件不满足: {report.failed_labels()}")
    return report


# ---------------------------------------------------------------------------
# 构造
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _NodeForm:
    canonical: np.ndarray
    transform: np.ndarray


def _canonical_forms(instance: SNPInstance) -> list[_NodeForm]:
    forms = []
    for A in instance.matrices:
        pair = rational_canonical(A)
        forms.append(_NodeForm(canonical=pair.canonical, transform=pair.transform))
    return forms


def _conjugation_chain(alphas: list[complex], forms: list[_NodeForm]) -> list[ExpPolyFactor]:
    """e^{−F}·M·e^{F}，F 为多项式矩阵，e^{F(α_j)} = S_j

    标量节点对任意共轭不变，只在非标量节点上插值；
    log S_j 去掉迹部分（与 M 可交换），F 保持较小。
    """
    n = forms[0].transform.shape[0]
    eye = np.eye(n)
    picked = [
        (alpha, f)
        for alpha, f in zip(alphas, forms, strict=True)
        if not is_scalar(f.canonical)
    ]
    if all(np.allclose(f.transform, eye, atol=1e-14) for _, f in picked):
        return []
    points = [alpha for alpha, _ in picked]
    logs = []
    for _, f in picked:
        L = mlog(f.transform)
        logs.append(L - (np.trace(L) / n) * eye)
    entries = [[hermite_poly(points, [L[p, q] for L in logs]) for q in range(n)] for p in range(n)]
    return [ExpPolyFactor(entries=entries)]


def _zero_poly(points: list[complex]) -> PolyNode:
    return PolyNode(poly=poly_from_roots(points))


def _pin_nodes(
    entries: list[list[HoloNode]], alphas: list[complex], forms: list[_NodeForm]
) -> None:
    """核对 ψ̃(α_j) 等于第 j 个规范形"""
    n = len(entries)
    for j, (alpha, form) in enumerate(zip(alphas, forms, strict=True)):
        for p in range(n):
            for q in range(n):
                require_jet(
                    entries[p][q], alpha, [form.canonical[p, q]], f"node{j}.entry.{p + 1}{q + 1}"
                )


def snp_lift_n2(instance: SNPInstance, phi: Sequence[Poly]) -> DiscMap:
    """n=2 的提升 ψ̃ = [[P, Q], [R, φ₁ − P]]，R = (Pφ₁ − P² − φ₂)/Q

    P 在标量节点取 λ_j、其余节点取 0；Q 恰在标量节点为零、其余节点取 1。

    Raises:
        NotDivisibleError: 某个标量节点处分子消没阶不足
    """
    phi = _as_polys(phi)
    if instance.n != 2 or len(phi) != 2:
        raise ValueError("snp_lift_n2 只处理 n=2")
    alphas = instance.alphas
    forms = _canonical_forms(instance)
    scalar = instance.indices(MatrixClassTag.SCALAR)
    scalar_points = [alphas[j] for j in scalar]

    k = len(alphas)
    P = entire_interpolant(alphas, [instance.classes[j].lam if j in scalar else 0 for j in range(k)])
    Q = entire_interpolant(alphas, [0 if j in scalar else 1 for j in range(k)])
    phi1, phi2 = PolyNode(poly=phi[0]), PolyNode(poly=phi[1])
    numer = P * phi1 - P * P - phi2
    if scalar_points:
        Zs = _zero_poly(scalar_points)
        R = Zs * exact_div(
            numer, Q * Zs, [(a, 2) for a in scalar_points], label="ord(Pφ₁ − P² − φ₂) ≥ 2"
        )
    else:
        R = exact_div(numer, Q, [], label="R")
    entries = [[P, Q], [R, phi1 - P]]
    _pin_nodes(entries, alphas, forms)
    chain = _conjugation_chain(alphas, forms)
    logger.info(f"✅ n=2 提升完成: 节点数={len(alphas)}, 标量节点={len(scalar)}")
    return make_map(entries, chain)


def snp_lift_n3(instance: SNPInstance, phi: Sequence[Poly]) -> DiscMap:
    """n=3 的提升

    ψ̃ = [[f₁₁, f₁₂, 0], [0, f₂₂, f₂₃], [f₃₁, f₃₂, f₃₃]]，其中
    f₃₃ = φ₁ − f₁₁ − f₂₂，f₃₂ = g̃/f₂₃，f₃₁ = h̃/(f₁₂f₂₃)，
    g̃ = f₁₁f₂₂ + f₂₂f₃₃ + f₃₃f₁₁ − φ₂，h̃ = φ₃ + f₁₁(g̃ − f₂₂f₃₃)。

    Raises:
        NotDivisibleError: 标量节点处 ord g̃ < 2 或 ord h̃ < 3，非循环节点处 ord h̃ < 2
    """
    phi = _as_polys(phi)
    if instance.n != 3 or len(phi) != 3:
        raise ValueError("snp_lift_n3 只处理 n=3")
    alphas = instance.alphas
    forms = _canonical_forms(instance)
    tags = [c.tag for c in instance.classes]
    lams = [c.lam for c in instance.classes]
    scalar_points = [a for a, t in zip(alphas, tags, strict=True) if t == MatrixClassTag.SCALAR]
    noncyclic_points = [
        a for a, t in zip(alphas, tags, strict=True) if t == MatrixClassTag.NONCYCLIC
    ]

    # 各类节点规范形的 (f₁₁, f₂₂, f₁₂, f₂₃) 取值，None 表示取 λ
    patterns = {
        MatrixClassTag.SCALAR: (None, None, 0, 0),
        MatrixClassTag.NONCYCLIC: (None, 0, 0, 1),
        MatrixClassTag.CYCLIC: (0, 0, 1, 1),
    }

    def values(slot: int) -> list[complex]:
        out = []
        for tag, lam in zip(tags, lams, strict=True):
            v = patterns[tag][slot]
            out.append(lam if v is None else v)
        return out

    f11 = entire_interpolant(alphas, values(0))
    f22 = entire_interpolant(alphas, values(1))
    f12 = entire_interpolant(alphas, values(2))
    f23 = entire_interpolant(alphas, values(3))
    phi1, phi2, phi3 = (PolyNode(poly=p) for p in phi)
    f33 = phi1 - f11 - f22

    g = f11 * f22 + f22 * f33 + f33 * f11 - phi2
    if scalar_points:
        Zs = _zero_poly(scalar_points)
        f32 = Zs * exact_div(g, f23 * Zs, [(a, 2) for a in scalar_points], label="ord g̃ ≥ 2")
    else:
        f32 = exact_div(g, f23, [], label="g̃/f₂₃")

    h = phi3 + f11 * (g - f22 * f33)
    zeros = [(a, 3) for a in scalar_points] + [(a, 2) for a in noncyclic_points]
    if zeros:
        Z = _zero_poly(scalar_points + noncyclic_points)
        f31 = Z * exact_div(h, f12 * f23 * Z, zeros, label="ord h̃ ≥ 3（标量）/ ≥ 2（非循环）")
    else:
        f31 = exact_div(h, f12 * f23, [], label="h̃/(f₁₂f₂₃)")

    zero = PolyNode(poly=Poly(coeffs=[0]))
    entries = [[f11, f12, zero], [zero, f22, f23], [f31, f32, f33]]
    _pin_nodes(entries, alphas, forms)
    chain = _conjugation_chain(alphas, forms)
    logger.info(
        f"✅ n=3 提升完成: 节点数={len(alphas)}, 标量={len(scalar_points)}, "
        f"非循环={len(noncyclic_points)}"
    )
    return make_map(entries, chain)


def snp_lift(instance: SNPInstance, phi: Sequence[Poly]) -> DiscMap:
    """按维数分派"""
    if instance.n == 2:
        return snp_lift_n2(instance, phi)
    return snp_lift_n3(instance, phi)
