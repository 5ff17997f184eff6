"""区域隶属测试"""

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from backend.core.domains import (
    cf_solvable_at_zero,
    g_margin_batch,
    in_disc,
    in_G,
    in_spectral_ball,
    schur_cohn_stable,
)
from backend.core.linalg import char_poly

COEFF = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)


class TestSchurCohn:
    """Schur–Cohn 递推测试"""

    def test_simple_polynomials(self):
        """测试根位置明显的多项式"""
        assert schur_cohn_stable(np.array([-0.5, 1]))
        assert not schur_cohn_stable(np.array([-2.0, 1]))
        assert schur_cohn_stable(np.array([0, 0, 0, 1]))
        # (t − 0.5)(t − 1.5)
        assert not schur_cohn_stable(np.polynomial.polynomial.polyfromroots([0.5, 1.5]))

    def test_zero_polynomial(self):
        """测试零多项式不稳定"""
        assert not schur_cohn_stable(np.zeros(3))

    @settings(deadline=None, max_examples=200)
    @given(
        s=st.lists(
            st.tuples(COEFF, COEFF).map(lambda p: complex(p[0], p[1])), min_size=2, max_size=3
        )
    )
    def test_agrees_with_root_radius(self, s):
        """测试与根的最大模判定一致（离边界足够远时）"""
        coeffs = char_poly(np.array(s))
        radius = float(np.max(np.abs(np.roots(coeffs[::-1]))))
        assume(abs(1.0 - radius) > 1e-6)
        assert schur_cohn_stable(coeffs) == (radius < 1.0)


class TestInG:
    """G_n 隶属测试"""

    def test_origin(self):
        """测试原点在 G_3 内且裕度为 1"""
        report = in_G(3, np.zeros(3))
        assert report.inside
        assert report.margin == pytest.approx(1.0)

    def test_outside(self):
        """测试 (3,3,1) 是边界点，不在开域内"""
        report = in_G(3, np.array([3.0, 3.0, 1.0]))
        assert not report.inside

    def test_triple_root_inside(self):
        """测试三重根 0.9 的裕度"""
        report = in_G(3, np.array([2.7, 2.43, 0.729]))
        assert report.inside
        assert report.margin == pytest.approx(0.1, abs=1e-6)

    def test_boundary_flag(self):
        """测试边界点带 boundary 标记"""
        # 根为 1 和 0
        report = in_G(2, np.array([1.0, 0.0]))
        assert not report.inside
        assert report.boundary

    def test_far_outside(self):
        """测试根在圆外"""
        report = in_G(2, np.array([3.0, 2.0]))
        assert not report.inside
        assert report.margin < 0

    def test_length_mismatch(self):
        """测试长度与 n 不一致报错"""
        with pytest.raises(ValueError, match="不一致"):
            in_G(3, np.zeros(2))

    @pytest.mark.parametrize("n", [2, 3])
    def test_batch_matches_single(self, n):
        """测试批量裕度与逐点判定一致"""
        rng = np.random.default_rng(7)
        roots = rng.uniform(0, 1.3, (40, n)) * np.exp(2j * np.pi * rng.uniform(size=(40, n)))
        points = np.array([np.poly(r)[1:] * (-1) ** np.arange(1, n + 1) for r in roots])
        margins = g_margin_batch(points)
        assert margins.shape == (40,)
        for s, margin in zip(points, margins, strict=True):
            assert margin == pytest.approx(in_G(n, s).margin, abs=1e-8)


class TestSpectralBall:
    """谱球测试"""

    def test_outside(self):
        """测试 1.1I 在谱球外，裕度为 −0.1"""
        report = in_spectral_ball(1.1 * np.eye(3))
        assert not report.inside
        assert report.margin == pytest.approx(-0.1)

    def test_nilpotent_inside(self):
        """测试范数很大的幂零矩阵仍在谱球内"""
        report = in_spectral_ball(np.array([[0, 4], [0, 0]]))
        assert report.inside
        assert report.margin == pytest.approx(1.0)

    def test_boundary(self):
        """测试谱半径恰为 1 时是边界点"""
        report = in_spectral_ball(np.diag([1.0, 0.0]))
        assert not report.inside
        assert report.boundary


class TestCaratheodoryFejerAtZero:
    """基点为零时的可解性测试"""

    @pytest.mark.parametrize(
        ("value", "expected"),
        [(0.5, True), (1.0, True), (1.2, False)],
    )
    def test_scalar_b(self, value, expected):
        """测试 B = cI 时以 r(B) ≤ 1 为界"""
        assert cf_solvable_at_zero(value * np.eye(3)) is expected

    def test_disc(self):
        """测试单位圆盘"""
        assert in_disc(0.5j)
        assert not in_disc(1.0)
