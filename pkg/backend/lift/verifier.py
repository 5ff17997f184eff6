"""数值证书与必要性检验

证书在极坐标网格上核对 σ∘ψ = φ、节点（或 0 点喷射）、谱半径、有界性以及 φ 的 G_n 隶属。
验证器从不抛异常，任何求值失败都记成未通过的检查项。
"""

import hashlib
import json
import logging
from collections.abc import Callable, Sequence

import numpy as np
import scipy.linalg

from backend.core.domains import in_G
from backend.core.errors import NotDivisibleError
from backend.core.holo import cauchy_derivatives
from backend.core.linalg import sigma_batch
from backend.lift.chain import as_callable, conjugate_chain_apply, evaluate_map
from backend.lift.conditions import LinearCondition
from backend.lift.phi_builder import minimal_degree
from backend.lift.scf import SCFInstance, cf_condition_list, cf_conditions, cf_lift
from backend.lift.snp import SNPInstance, snp_condition_list, snp_conditions, snp_lift
from backend.models.schemas import (
    Certificate,
    CheckRecord,
    DiscMap,
    GridSpec,
    Poly,
    NecessityReport,
    VerifyConfig,
)

logger = logging.getLogger(__name__)

# 求值失败时记录的残差
FAILED_RESIDUAL = 1e300
_EVAL_ERRORS = (ValueError, ArithmeticError, np.linalg.LinAlgError)
_PERTURB_DEGREE_STEPS = 12


def grid_points(config: VerifyConfig) -> tuple[GridSpec, np.ndarray]:
    radii = np.linspace(0.1, config.max_radius, config.grid_radii)
    thetas = 2 * np.pi * np.arange(config.grid_angles) / config.grid_angles
    points = (radii[:, None] * np.exp(1j * thetas)[None, :]).ravel()
    return GridSpec(radii=[float(r) for r in radii], angles=config.grid_angles), points


def _record(name: str, value: float, threshold: float, strict: bool = False) -> CheckRecord:
    passed = value < threshold if strict else value <= threshold
    return CheckRecord(name=name, max_residual=value, threshold=threshold, passed=passed)


def _guarded(
    name: str, threshold: float, fn: Callable[[], float], strict: bool = False
) -> CheckRecord:
    try:
        value = float(fn())
    except _EVAL_ERRORS as e:
        logger.warning(f"⚠️ 检查 {name} 求值失败: {e}")
        value = FAILED_RESIDUAL
    if not np.isfinite(value):
        value = FAILED_RESIDUAL
    return _record(name, value, threshold, strict)


def _phi_values(phi: Sequence[Poly], points: np.ndarray) -> np.ndarray:
    return np.stack([p(points) for p in phi], axis=-1)


def inputs_hash(disc: DiscMap, phi: Sequence[Poly], matrices: Sequence[np.ndarray]) -> str:
    """输入的 sha256 摘要"""
    payload = {
        "map": disc.model_dump(mode="json"),
        "phi": [[[c.real, c.imag] for c in p.coeffs] for p in phi],
        "matrices": [[[[z.real, z.imag] for z in row] for row in np.asarray(M)] for M in matrices],
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def _common_checks(
    disc: DiscMap, phi: Sequence[Poly], points: np.ndarray, config: VerifyConfig
) -> list[CheckRecord]:
    """σ 比对、谱半径、有界性、φ 的 G_n 隶属"""
    values = _phi_values(phi, points)
    magnitude = float(np.max(np.abs(values)))

    cache: dict[bool, np.ndarray] = {}

    def psi(base_only: bool) -> np.ndarray:
        if base_only not in cache:
            cache[base_only] = evaluate_map(disc, points, base_only=base_only)
        return cache[base_only]

    def sigma_match() -> float:
        return float(np.max(np.abs(sigma_batch(psi(True)) - values))) / (1.0 + magnitude)

    def spectral_radius_max() -> float:
        return float(np.max(np.abs(np.linalg.eigvals(psi(False)))))

    def sup_norm() -> float:
        return float(np.max(np.linalg.norm(psi(False), ord=2, axis=(-2, -1))))

    def phi_radius() -> float:
        worst = 0.0
        for s in values:
            report = in_G(len(phi), s)
            radius = 1.0 - report.margin
            if not report.inside:
                radius = max(radius, 1.0)
            worst = max(worst, radius)
        return worst

    return [
        _guarded("sigma-match", config.tol, sigma_match),
        _guarded("spectral-radius", 1.0, spectral_radius_max, strict=True),
        _guarded("boundedness", config.bound_cap, sup_norm),
        _guarded("phi-in-G", 1.0, phi_radius, strict=True),
    ]


def _certificate(
    kind: str,
    grid: GridSpec,
    checks: list[CheckRecord],
    config: VerifyConfig,
    digest: str,
) -> Certificate:
    passed = all(c.passed for c in checks)
    if passed:
        logger.info(f"✅ {kind} 证书通过")
    else:
        logger.warning(f"❌ {kind} 证书未通过: {[c.name for c in checks if not c.passed]}")
    return Certificate(
        kind=kind, grid=grid, checks=checks, passed=passed, config=config, inputs_hash=digest
    )


def verify_snp(
    disc: DiscMap,
    phi: Sequence[Poly],
    instance: SNPInstance,
    config: VerifyConfig | None = None,
) -> Certificate:
    """SNP 提升的证书：σ∘ψ = φ，ψ(α_j) = A_j"""
    config = config or VerifyConfig()
    grid, points = grid_points(config)
    checks = _common_checks(disc, phi, points, config)

    def node_match() -> float:
        worst = 0.0
        for alpha, A in zip(instance.alphas, instance.matrices, strict=True):
            diff = np.linalg.norm(conjugate_chain_apply(disc, alpha) - A)
            worst = max(worst, float(diff) / (1.0 + float(np.linalg.norm(A))))
        return worst

    checks.insert(1, _guarded("node-match", config.tol, node_match))
    digest = inputs_hash(disc, phi, instance.matrices)
    return _certificate("snp", grid, checks, config, digest)


def verify_scf(
    disc: DiscMap,
    phi: Sequence[Poly],
    instance: SCFInstance,
    config: VerifyConfig | None = None,
) -> Certificate:
    """SCF 提升的证书：σ∘ψ̃ = φ（归一化坐标），ψ(0) = A，ψ'(0) = B（原坐标）"""
    config = config or VerifyConfig()
    grid, points = grid_points(config)
    checks = _common_checks(disc, phi, points, config)

    def jet_value() -> float:
        diff = np.linalg.norm(conjugate_chain_apply(disc, 0j) - instance.A)
        return float(diff) / (1.0 + float(np.linalg.norm(instance.A)))

    def jet_deriv() -> float:
        derivs = cauchy_derivatives(
            as_callable(disc), 0j, config.quad_radius, 1, config.quad_samples
        )
        diff = np.linalg.norm(derivs[1] - instance.B)
        return float(diff) / (1.0 + float(np.linalg.norm(instance.B)))

    checks[1:1] = [
        _guarded("jet-value", config.tol, jet_value),
        _guarded("jet-deriv", config.deriv_tol, jet_deriv),
    ]
    digest = inputs_hash(disc, phi, [instance.A, instance.B])
    return _certificate("scf", grid, checks, config, digest)


# ---------------------------------------------------------------------------
# 必要性检验
# ---------------------------------------------------------------------------


def _conditions(problem: SNPInstance | SCFInstance) -> list[LinearCondition]:
    if isinstance(problem, SNPInstance):
        return snp_condition_list(problem)
    return cf_condition_list(problem)


def _perturbation(
    conds: list[LinearCondition], n: int, degree: int, target: int, magnitude: float
) -> np.ndarray | None:
    """δ 使目标行变化 magnitude、其余行不变；做不到时返回 None"""
    M = np.vstack([c.row(n, degree) for c in conds])
    e = np.zeros(len(conds), dtype=np.complex128)
    e[target] = magnitude
    delta, *_ = scipy.linalg.lstsq(M, e)
    if np.max(np.abs(M @ delta - e)) > 1e-9 * (1.0 + magnitude):
        return None
    return delta


def necessity_probe(
    problem: SNPInstance | SCFInstance,
    phi: Sequence[Poly],
    label: str,
    magnitude: float = 1e-3,
    tol: float = 1e-9,
) -> NecessityReport:
    """沿目标条件的法向扰动 φ，再跑检查器与构造器

    期望：检查器恰好只有目标条件不通过，构造器抛出 NotDivisibleError。

    Raises:
        ValueError: 未知的条件标签
    """
    phi = [p if isinstance(p, Poly) else Poly.from_array(p) for p in phi]
    conds = _conditions(problem)
    labels = [c.label for c in conds]
    if label not in labels:
        raise ValueError(f"未知条件标签: {label}")
    target = labels.index(label)
    n = problem.n

    degree = max(max(p.degree for p in phi), minimal_degree(problem)) + 2
    delta = None
    for _ in range(_PERTURB_DEGREE_STEPS):
        delta = _perturbation(conds, n, degree, target, magnitude)
        if delta is not None:
            break
        degree += 1
    if delta is None:
        raise ValueError(f"无法构造只改变条件 {label} 的扰动")
    size = degree + 1
    perturbed = []
    for c, p in enumerate(phi):
        coeffs = np.zeros(size, dtype=np.complex128)
        coeffs[: len(p.coeffs)] = p.to_array()
        perturbed.append(Poly.from_array(coeffs + delta[c * size : (c + 1) * size]))

    if isinstance(problem, SNPInstance):
        report = snp_conditions(problem, perturbed, tol)
        construct = snp_lift
    else:
        report = cf_conditions(problem, perturbed, tol)
        construct = cf_lift
    failed = report.failed_labels()
    targeted = next(item.residual for item in report.items if item.label == label)

    error: Exception | None = None
    try:
        construct(problem, perturbed)
    except ValueError as e:
        error = e

    if magnitude == 0:
        expected = not failed and error is None
    else:
        expected = failed == [label] and isinstance(error, NotDivisibleError)
    kind = type(error).__name__ if error else None
    logger.info(f"📊 必要性检验 {label}: 失败条件={failed}, 构造错误={kind}")
    return NecessityReport(
        label=label,
        magnitude=magnitude,
        targeted_residual=targeted,
        checker_failed=failed,
        construction_error=str(error) if error else None,
        expected=expected,
    )
