"""全纯表达式代数测试"""

import numpy as np
import pytest

from backend.core.errors import NotDivisibleError
from backend.core.holo import (
    Jet,
    cauchy_derivatives,
    const,
    derivative_at,
    entire_interpolant,
    entire_on_plane,
    evaluate,
    evaluate_scalar,
    exact_div,
    exp_of,
    hermite_poly,
    jet_eval,
    order_of_vanishing,
    poly,
    poly_from_roots,
    require_jet,
    zeta,
)
from backend.models.schemas import Div, DiscMap, ExpNode, PolyNode


class TestJet:
    """喷射测试"""

    def test_monomial(self):
        """测试 ζ² 在 0 处的喷射"""
        assert np.allclose(jet_eval(zeta(2), 0, 3).coeffs, [0, 0, 1, 0])

    def test_shifted_center(self):
        """测试 ζ² 在 1 处的喷射为 1 + 2h + h²"""
        assert np.allclose(jet_eval(zeta(2), 1, 3).coeffs, [1, 2, 1, 0])

    def test_exp(self):
        """测试 exp(ζ²) 的前五个 Taylor 系数"""
        jet = jet_eval(exp_of(zeta(2)), 0, 4)
        assert np.allclose(jet.coeffs, [1, 0, 1, 0, 0.5])

    def test_div_removable(self):
        """测试 ζ³/ζ 在可去奇点处的喷射"""
        e = exact_div(zeta(3), zeta(1), [(0, 1)])
        assert np.allclose(jet_eval(e, 0, 2).coeffs, [0, 0, 1])

    def test_arithmetic(self):
        """测试加法、乘法与取负"""
        e = (zeta(1) + 2) * (zeta(1) - 1) + (-const(3))
        # ζ² + ζ − 5
        assert np.allclose(jet_eval(e, 0, 3).coeffs, [-5, 1, 1, 0])

    def test_jet_series_ops(self):
        """测试喷射的级数除法"""
        a = Jet(0j, np.array([1, 1, 0, 0], dtype=np.complex128))
        b = Jet(0j, np.array([1, -1, 0, 0], dtype=np.complex128))
        # (1 + h)/(1 − h) = 1 + 2h + 2h² + 2h³
        assert np.allclose(a.divide(b).coeffs, [1, 2, 2, 2])

    def test_derivative_at(self):
        """测试 k 阶导数"""
        assert derivative_at(exp_of(zeta(2)), 0, 2) == pytest.approx(2)
        assert derivative_at(zeta(3), 0.5, 1) == pytest.approx(0.75)

    def test_derivative_order_out_of_range(self):
        """测试导数阶越界报错"""
        with pytest.raises(ValueError, match="超出范围"):
            derivative_at(zeta(1), 0, 20)

    def test_order_of_vanishing(self):
        """测试消没阶"""
        assert order_of_vanishing(zeta(3), 0) == 3
        assert order_of_vanishing(poly([1, 1]), 0) == 0
        assert order_of_vanishing(poly([0]), 0, cap=4) == 5


class TestEvaluate:
    """逐点求值测试"""

    def test_array_evaluation(self):
        """测试数组求值"""
        z = np.array([0.1, 0.2j, -0.5])
        e = exp_of(zeta(1)) * poly([1, 2])
        assert np.allclose(evaluate(e, z), np.exp(z) * (1 + 2 * z))

    def test_div_near_singularity(self):
        """测试可去奇点附近用局部喷射求值"""
        e = exact_div(poly([0, 0, 1, 1]), zeta(2), [(0, 2)])
        for z in (0.0, 1e-9, 0.01, 0.3):
            assert evaluate_scalar(e, z) == pytest.approx(1 + z, abs=1e-12)

    def test_serialization_roundtrip_evaluates(self):
        """测试表达式序列化后求值不变"""
        e = exact_div(exp_of(zeta(2)) - 1, zeta(2), [(0, 2)], label="test")
        disc = DiscMap(n=2, entries=[[e, zeta(1)], [const(1), poly([0.5, 0.25])]])
        restored = DiscMap.model_validate_json(disc.model_dump_json())
        z = 0.3 + 0.2j
        assert evaluate_scalar(restored.entries[0][0], z) == pytest.approx(
            evaluate_scalar(e, z)
        )


class TestInterpolation:
    """插值测试"""

    def test_hermite_linear(self):
        """测试两点插值为直线"""
        p = hermite_poly([0, 1], [1, 3])
        assert np.allclose(p.to_array(), [1, 2])

    def test_hermite_with_derivative(self):
        """测试带导数约束的 Hermite 插值"""
        p = hermite_poly([0], [1], [2])
        assert np.allclose(p.to_array(), [1, 2])

    def test_entire_single_zero(self):
        """测试单个零值节点得到 ζ"""
        h = entire_interpolant([0], [0])
        assert isinstance(h, PolyNode)
        assert evaluate_scalar(h, 0.4) == pytest.approx(0.4)

    def test_entire_zero_and_one(self):
        """测试 0 处取 0、1/2 处取 1 得到 2ζ"""
        h = entire_interpolant([0, 0.5], [0, 1])
        assert evaluate_scalar(h, 0.25) == pytest.approx(0.5)
        assert evaluate_scalar(h, 0.8) == pytest.approx(1.6)

    def test_entire_nonzero_values(self):
        """测试非零值节点的插值"""
        nodes = [0, 0.5, -0.3j]
        values = [0.3, 0, 1 + 1j]
        h = entire_interpolant(nodes, values)
        for a, v in zip(nodes, values, strict=True):
            assert evaluate_scalar(h, a) == pytest.approx(v, abs=1e-12)
        assert entire_on_plane(h)

    def test_entire_only_nonzero(self):
        """测试全部非零时是 exp(g)，没有零点"""
        h = entire_interpolant([0.1, 0.2], [1.0, 2.0])
        assert isinstance(h, ExpNode)
        assert evaluate_scalar(h, 0.2) == pytest.approx(2.0)

    def test_entire_jet_constraint(self):
        """测试一阶导数约束"""
        h = entire_interpolant([0, 0.5], [1, 0], jet_constraints=[2, 3])
        assert derivative_at(h, 0, 1) == pytest.approx(2)
        assert derivative_at(h, 0.5, 1) == pytest.approx(3)

    def test_entire_duplicate_nodes(self):
        """测试节点重复报错"""
        with pytest.raises(ValueError, match="重复"):
            entire_interpolant([0.1, 0.1], [1, 2])

    def test_entire_zero_derivative_at_zero_node(self):
        """测试零值节点要求导数为 0 时报错"""
        with pytest.raises(ValueError, match="单零点"):
            entire_interpolant([0], [0], jet_constraints=[0])

    def test_poly_from_roots(self):
        """测试首一多项式"""
        p = poly_from_roots([1, 2])
        assert np.allclose(p.to_array(), [2, -3, 1])


class TestExactDivision:
    """精确除法测试"""

    def test_divisible(self):
        """测试 (ζ³ − ζ²)/ζ² = ζ − 1"""
        e = exact_div(poly([0, 0, -1, 1]), zeta(2), [(0, 2)])
        assert isinstance(e, Div)
        assert evaluate_scalar(e, 0.3) == pytest.approx(-0.7)
        assert entire_on_plane(e)

    def test_not_divisible(self):
        """测试 ζ/ζ² 不可整除"""
        with pytest.raises(NotDivisibleError) as exc_info:
            exact_div(zeta(1), zeta(2), [(0, 2)], label="ord ≥ 2")
        assert exc_info.value.label == "ord ≥ 2"
        assert exc_info.value.residual == pytest.approx(1.0)

    def test_undeclared_zero(self):
        """测试分母零点未声明时不是整函数"""
        e = Div(numer=zeta(1), denom=zeta(2))
        assert not entire_on_plane(e)

    def test_require_jet(self):
        """测试 Taylor 系数核对"""
        require_jet(poly([1, 2, 3]), 0, [1, 2], "ok")
        with pytest.raises(NotDivisibleError, match="jet.11"):
            require_jet(poly([1, 2.5]), 0, [1, 2], "jet.11")


class TestCauchyDerivatives:
    """Cauchy 积分求导测试"""

    def test_square(self):
        """测试 ζ² 的二阶导数为 2"""
        derivs = cauchy_derivatives(lambda z: z**2, 0, 0.5, 2)
        assert derivs[0] == pytest.approx(0, abs=1e-12)
        assert derivs[1] == pytest.approx(0, abs=1e-12)
        assert derivs[2] == pytest.approx(2)

    def test_exp(self):
        """测试 exp 在 0 处的各阶导数都是 1"""
        derivs = cauchy_derivatives(np.exp, 0, 0.5, 4)
        assert np.allclose(derivs, 1, atol=1e-10)

    def test_matrix_valued(self):
        """测试矩阵值函数"""
        M = np.array([[1, 2], [3, 4]], dtype=np.complex128)
        derivs = cauchy_derivatives(lambda z: np.eye(2) + z * M, 0.1, 0.3, 1)
        assert np.allclose(derivs[1], M, atol=1e-12)

    def test_too_few_samples(self):
        """测试采样数不足报错"""
        with pytest.raises(ValueError, match="采样数"):
            cauchy_derivatives(np.exp, 0, 0.5, 4, samples=8)

    def test_bad_radius(self):
        """测试半径非正报错"""
        with pytest.raises(ValueError, match="半径"):
            cauchy_derivatives(np.exp, 0, 0.0, 1)
