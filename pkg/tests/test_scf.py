"""谱 Carathéodory–Fejér 提升测试"""

import numpy as np
import pytest

from backend.cli.generator import generate_problem
from backend.cli.problem_io import instance_of
from backend.core.errors import NotDivisibleError, UnsupportedCaseError
from backend.core.holo import cauchy_derivatives
from backend.core.linalg import amu, mobius, sigma
from backend.lift.chain import as_callable, conjugate_chain_apply, evaluate_core
from backend.lift.phi_builder import build_phi
from backend.lift.scf import (
    cf_conditions,
    cf_lift,
    kappa_zero_at_A0,
    mobius_derivative,
    scf_normalize,
)
from backend.lift.verifier import verify_scf
from backend.models.schemas import Poly, SCFCase, TransposeFactor
from tests.conftest import random_similar

SAMPLE_POINTS = np.array([0.0, 0.3, -0.2 + 0.4j, 0.7j, -0.6])


def _derivative_at_zero(disc) -> np.ndarray:
    return cauchy_derivatives(as_callable(disc), 0j, 0.5, 1)[1]


def _homothety_phi() -> list[Poly]:
    """σ(0.25ζ·I)"""
    return [
        Poly.from_array([0, 0.75]),
        Poly.from_array([0, 0, 0.1875]),
        Poly.from_array([0, 0, 0, 0.015625]),
    ]


def _degenerate_phi() -> list[Poly]:
    """ord φ_j ≥ 2j"""
    return [
        Poly.from_array([0, 0, 0.5]),
        Poly.from_array([0, 0, 0, 0, 0.05]),
        Poly.from_array([0] * 6 + [0.001]),
    ]


class TestNormalize:
    """情形归一化测试"""

    def test_scalar_b_n3(self):
        """测试 A = 0、B = 0.25I 归为标量情形"""
        instance = scf_normalize(np.zeros((3, 3)), 0.25 * np.eye(3))
        assert instance.case == SCFCase.ZERO_B_SCALAR_N3
        assert instance.lam == pytest.approx(0.25)
        assert instance.chain == []

    def test_cyclic_b(self):
        """测试循环 B 带相似变换"""
        instance = scf_normalize(np.zeros((3, 3)), np.diag([0.5, -0.5, 0]))
        assert instance.case == SCFCase.ZERO_B_CYCLIC
        assert len(instance.chain) == 1

    def test_noncyclic_b(self, amu_half):
        """测试非循环 B"""
        instance = scf_normalize(np.zeros((3, 3)), amu_half)
        assert instance.case == SCFCase.ZERO_B_NONCYCLIC_N3
        assert instance.mu == pytest.approx(0.5)

    def test_amu_generic(self, amu_half, e12):
        """测试 A_0.5 与 e₁₂ 归为一般情形"""
        instance = scf_normalize(amu_half, e12)
        assert instance.case == SCFCase.AMU_GENERIC
        assert instance.mu == pytest.approx(0.5)

    def test_scalar_base_shift(self):
        """测试标量基点经 Möbius 平移到 0"""
        a = 0.2 + 0.1j
        B = np.diag([0.1, -0.2, 0.05]).astype(np.complex128)
        instance = scf_normalize(a * np.eye(3), B)
        assert instance.mobius_lam == pytest.approx(a)
        assert np.allclose(instance.B, B)
        assert instance.case == SCFCase.ZERO_B_CYCLIC
        assert instance.reduction().mobius_lam == pytest.approx(a)

    def test_cyclic_base_unsupported(self):
        """测试循环基点不支持"""
        instance = scf_normalize(np.diag([0.1, 0.2, 0.3]), np.eye(3))
        assert instance.case == SCFCase.CYCLIC_UNSUPPORTED
        with pytest.raises(UnsupportedCaseError):
            cf_conditions(instance, [Poly(), Poly(), Poly()])
        with pytest.raises(UnsupportedCaseError):
            cf_lift(instance, [Poly(), Poly(), Poly()])

    def test_base_outside_ball(self):
        """测试 r(A) ≥ 1 报错"""
        with pytest.raises(ValueError, match="谱球"):
            scf_normalize(1.2 * np.eye(2), np.eye(2))

    def test_mobius_derivative_closed_form(self, rng):
        """测试 Möbius 导数与闭式一致"""
        lam = 0.3 - 0.2j
        A = random_similar(rng, np.diag([0.1, 0.2j, -0.3]).astype(np.complex128))
        B = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        M_inv = np.linalg.inv(np.eye(3) - np.conj(lam) * A)
        exact = B @ M_inv + (A - lam * np.eye(3)) @ M_inv @ (np.conj(lam) * B) @ M_inv
        assert np.allclose(mobius_derivative(lam, A, B), exact, atol=1e-9)

    def test_mobius_derivative_scalar_base(self):
        """测试 A = aI 时导数为 B/(1 − |a|²)"""
        a = 0.4
        B = np.array([[1, 2], [3, 4]], dtype=np.complex128)
        D = mobius_derivative(a, a * np.eye(2), B)
        assert np.allclose(D, B / (1 - a**2), atol=1e-10)


class TestCFConditions:
    """条件检查测试"""

    def test_homothety(self):
        """测试 φ = σ(ζ·0.25I) 满足标量条件"""
        instance = scf_normalize(np.zeros((3, 3)), 0.25 * np.eye(3))
        phi = _homothety_phi()
        report = cf_conditions(instance, phi)
        assert report.passed
        assert report.case == "ZeroBase_Bscalar_n3"
        labels = [item.label for item in report.items]
        assert labels[:3] == ["value.1", "value.2", "value.3"]
        assert "b-scalar-n3.8" in labels

    def test_cyclic_b(self):
        """测试 B = diag(1/2, −1/2, 0)、φ = (0, −ζ²/4, 0)"""
        instance = scf_normalize(np.zeros((3, 3)), np.diag([0.5, -0.5, 0]))
        phi = [Poly(), Poly.from_array([0, 0, -0.25]), Poly()]
        report = cf_conditions(instance, phi)
        assert report.passed
        assert "b-cyclic.top.2" in [item.label for item in report.items]

    def test_cyclic_b_violated(self):
        """测试 φ₂ 的一阶导数不为零时 b-cyclic.ord.2.1 不成立"""
        instance = scf_normalize(np.zeros((3, 3)), np.diag([0.5, -0.5, 0]))
        phi = [Poly(), Poly.from_array([0, 0.1, -0.25]), Poly()]
        report = cf_conditions(instance, phi)
        assert report.failed_labels() == ["b-cyclic.ord.2.1"]

    def test_amu_generic(self, amu_half, e12):
        """测试 A_0.5、e₁₂、φ ≡ (0.5, 0, 0) 满足条件"""
        instance = scf_normalize(amu_half, e12)
        report = cf_conditions(instance, [Poly.from_array([0.5]), Poly(), Poly()])
        assert report.passed
        labels = [item.label for item in report.items]
        assert labels == [
            "value.1",
            "value.2",
            "value.3",
            "first.1",
            "first.2",
            "first.3",
            "amu-generic.1",
        ]

    def test_degenerate_zero_b(self):
        """测试 B = 0 时的消没阶条件与备注"""
        instance = scf_normalize(np.zeros((3, 3)), np.zeros((3, 3)))
        assert instance.degenerate
        phi = _degenerate_phi()
        report = cf_conditions(instance, phi)
        assert report.passed
        assert report.notes
        bad = [Poly.from_array([0, 0.1]), phi[1], phi[2]]
        assert cf_conditions(instance, bad).failed_labels() == ["b-zero-n3.ord.1.1"]


class TestCFLift:
    """构造测试"""

    def test_homothety(self):
        """测试标量 B 的 n=3 提升为 [[λζ, ζ², 0], [0, λζ, ζ²], [0, 0, λζ]]"""
        lam = 0.25
        instance = scf_normalize(np.zeros((3, 3)), lam * np.eye(3))
        phi = _homothety_phi()
        disc = cf_lift(instance, phi)
        for z in SAMPLE_POINTS:
            expected = np.array([[lam * z, z**2, 0], [0, lam * z, z**2], [0, 0, lam * z]])
            assert np.allclose(evaluate_core(disc, z), expected, atol=1e-12)
        certificate = verify_scf(disc, phi, instance)
        assert certificate.passed

    def test_scalar_n2(self):
        """测试 n=2 标量 B"""
        lam = 0.3j
        instance = scf_normalize(np.zeros((2, 2)), lam * np.eye(2))
        assert instance.case == SCFCase.ZERO_B_SCALAR_N2
        phi = [Poly.from_array([0, 2 * lam]), Poly.from_array([0, 0, lam**2])]
        assert cf_conditions(instance, phi).passed
        disc = cf_lift(instance, phi)
        assert np.allclose(_derivative_at_zero(disc), lam * np.eye(2), atol=1e-10)
        assert verify_scf(disc, phi, instance).passed

    def test_cyclic_b(self):
        """测试循环 B：ψ(0) = 0，ψ'(0) = B"""
        B = np.diag([0.5, -0.5, 0]).astype(np.complex128)
        instance = scf_normalize(np.zeros((3, 3)), B)
        phi = [Poly(), Poly.from_array([0, 0, -0.25]), Poly()]
        disc = cf_lift(instance, phi)
        assert np.allclose(conjugate_chain_apply(disc, 0), 0, atol=1e-12)
        assert np.allclose(_derivative_at_zero(disc), B, atol=1e-9)
        assert verify_scf(disc, phi, instance).passed

    def test_noncyclic_b(self, amu_half):
        """测试非循环 B，λ = 0、μ = 1/2"""
        instance = scf_normalize(np.zeros((3, 3)), amu_half)
        phi = [Poly.from_array([0, 0.5]), Poly(), Poly()]
        assert cf_conditions(instance, phi).passed
        disc = cf_lift(instance, phi)
        for z in SAMPLE_POINTS:
            expected = np.array([[0, z**2, 0], [0, 0, z], [0, 0, 0.5 * z]])
            assert np.allclose(evaluate_core(disc, z), expected, atol=1e-12)
        assert np.allclose(_derivative_at_zero(disc), amu_half, atol=1e-9)
        assert verify_scf(disc, phi, instance).passed

    def test_amu_generic(self, amu_half, e12):
        """测试 A_0.5、e₁₂：ψ(0) = A，ψ'(0) = B，σ∘ψ ≡ (0.5, 0, 0)"""
        instance = scf_normalize(amu_half, e12)
        phi = [Poly.from_array([0.5]), Poly(), Poly()]
        disc = cf_lift(instance, phi)
        assert np.allclose(conjugate_chain_apply(disc, 0), amu_half, atol=1e-12)
        assert np.allclose(_derivative_at_zero(disc), e12, atol=1e-9)
        for z in SAMPLE_POINTS:
            assert np.allclose(sigma(conjugate_chain_apply(disc, z)), [0.5, 0, 0], atol=1e-12)
        certificate = verify_scf(disc, phi, instance)
        assert certificate.passed
        assert certificate.check("jet-deriv").passed

    def test_degenerate_zero_b(self):
        """测试 B = 0 的 ζ² 伴随型构造"""
        instance = scf_normalize(np.zeros((3, 3)), np.zeros((3, 3)))
        phi = _degenerate_phi()
        disc = cf_lift(instance, phi)
        for z in SAMPLE_POINTS:
            assert np.allclose(sigma(evaluate_core(disc, z)), [p(z) for p in phi], atol=1e-12)
        assert verify_scf(disc, phi, instance).passed

    def test_scalar_base_shifted(self):
        """测试 A = aI 的 Möbius 平移：ψ(0) = aI，ψ'(0) = B"""
        a = 0.2
        B = np.diag([0.1, -0.2, 0.05]).astype(np.complex128)
        instance = scf_normalize(a * np.eye(3), B)
        Bn = instance.base_B
        s = sigma(Bn)
        # 归一化坐标下 φ_j = σ_j(B̃)ζ^j
        phi = [Poly.from_array([0] * j + [s[j - 1]]) for j in (1, 2, 3)]
        assert cf_conditions(instance, phi).passed
        disc = cf_lift(instance, phi)
        assert np.allclose(conjugate_chain_apply(disc, 0), a * np.eye(3), atol=1e-12)
        assert np.allclose(_derivative_at_zero(disc), B, atol=1e-8)
        image = mobius(-a, conjugate_chain_apply(disc, 0.3, base_only=True))
        assert np.allclose(image, conjugate_chain_apply(disc, 0.3), atol=1e-12)
        assert verify_scf(disc, phi, instance).passed

    def test_not_divisible(self):
        """测试条件不成立时构造失败"""
        instance = scf_normalize(np.zeros((3, 3)), np.diag([0.5, -0.5, 0]))
        with pytest.raises(NotDivisibleError):
            cf_lift(instance, [Poly(), Poly.from_array([0, 0.1, -0.25]), Poly()])


class TestAmuCases:
    """A_μ 基点的特殊、退化与转置情形"""

    MU = 0.3

    def _lift_and_certify(self, A, B, case):
        instance = scf_normalize(A, B)
        assert instance.case == case
        phi = build_phi(instance, seed=0)
        assert cf_conditions(instance, phi).passed
        disc = cf_lift(instance, phi)
        assert np.allclose(conjugate_chain_apply(disc, 0), A, atol=1e-10)
        assert verify_scf(disc, phi, instance).passed
        return instance, disc

    def test_special(self):
        """测试 b₁₂ = 0、b₃₁ = μb₂₁ 且 b₃₂ − μb₂₂ + μb₁₁ ≠ 0"""
        B = np.array([[0.1, 0, 0.05], [0.02, 0.1, 0.03], [0.006, 0.04, 0.1]])
        instance, _ = self._lift_and_certify(amu(self.MU), B, SCFCase.AMU_SPECIAL)
        assert not instance.transposed

    def test_degenerate(self):
        """测试 b₃₂ = μ(b₂₂ − b₁₁)"""
        B = np.array([[0.1, 0, 0.05], [0.02, 0.15, 0.03], [0.006, 0.015, 0.1]])
        self._lift_and_certify(amu(self.MU), B, SCFCase.AMU_DEGENERATE)

    def test_transposed_reduction(self):
        """测试 b₁₂ = 0 而 b̃₃₁ ≠ 0 时先转置，再按一般情形构造"""
        B = np.array([[0.1, 0, 0.05], [0.02, 0.1, 0.03], [0.2, 0.04, 0.1]])
        instance, disc = self._lift_and_certify(amu(self.MU), B, SCFCase.AMU_GENERIC)
        assert instance.transposed
        assert any(isinstance(f, TransposeFactor) for f in disc.conj_chain)

    def test_generated_strata(self):
        """测试随机生成的 amu-special / amu-degenerate 问题"""
        for stratum in ("amu-special", "amu-degenerate"):
            for seed in range(3):
                problem = generate_problem("scf", 3, [stratum], seed)
                instance = instance_of(problem)
                phi = build_phi(instance, seed=seed)
                disc = cf_lift(instance, phi)
                assert verify_scf(disc, phi, instance).passed, (stratum, seed)


class TestKappaZero:
    """κ(A₀; B) = 0 判定测试"""

    def test_examples(self):
        """测试 e₂₁、diag(1, −1, 0) 与 I"""
        e21 = np.zeros((3, 3))
        e21[1, 0] = 1
        assert kappa_zero_at_A0(e21)
        assert not kappa_zero_at_A0(np.diag([1.0, -1.0, 0.0]))
        assert not kappa_zero_at_A0(np.eye(3))

    def test_rejects_n2(self):
        """测试 n=2 报错"""
        with pytest.raises(ValueError, match="n=3"):
            kappa_zero_at_A0(np.eye(2))
