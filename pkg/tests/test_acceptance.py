"""端到端验收：随机生成 → 构造 φ → 提升 → 证书

默认不运行，用 `uv run pytest -m acceptance` 单独跑。
"""

import json

import numpy as np
import pytest

from backend.cli import run
from backend.cli.generator import generate_problem
from backend.cli.problem_io import instance_of
from backend.core.domains import schur_cohn_stable
from backend.core.errors import RetriesExhaustedError
from backend.core.linalg import amu, gateaux_sigma, mexp, mlog, sigma
from backend.lift.phi_builder import build_phi
from backend.lift.scf import SCFInstance, cf_condition_list, cf_lift, scf_normalize
from backend.lift.snp import snp_condition_list, snp_lift
from backend.lift.verifier import necessity_probe, verify_scf, verify_snp
from backend.models.schemas import Certificate, ProblemFile, SCFCase

pytestmark = pytest.mark.acceptance

# build_phi 的最低成功率
SUCCESS_RATE = 0.95

SNP_N2_MIXES = [["scalar"], ["cyclic"], ["scalar", "cyclic"], ["cyclic", "scalar"]]
SNP_N3_MIXES = [
    ["scalar"],
    ["noncyclic"],
    ["cyclic"],
    ["scalar", "noncyclic", "cyclic"],
    ["cyclic", "noncyclic"],
    ["noncyclic", "scalar"],
]
SCF_CASES = [
    (2, "zero-cyclic"),
    (2, "zero-scalar"),
    (3, "zero-cyclic"),
    (3, "zero-scalar"),
    (3, "zero-noncyclic"),
    (3, "amu-generic"),
    (3, "amu-special"),
    (3, "amu-degenerate"),
]


def _solve(problem: ProblemFile) -> Certificate | None:
    """φ 构造失败时返回 None"""
    instance = instance_of(problem)
    try:
        phi = build_phi(instance, seed=problem.config.seed)
    except RetriesExhaustedError:
        return None
    if isinstance(instance, SCFInstance):
        return verify_scf(cf_lift(instance, phi), phi, instance)
    return verify_snp(snp_lift(instance, phi), phi, instance)


def _assert_round_trips(problems: list[ProblemFile], checks: dict[str, float]) -> None:
    certificates = [_solve(p) for p in problems]
    solved = [c for c in certificates if c is not None]
    assert len(solved) >= SUCCESS_RATE * len(problems)
    for certificate in solved:
        assert certificate.passed
        for name, limit in checks.items():
            assert certificate.check(name).max_residual <= limit
        # 构造出的映射有界且落在谱球内
        assert certificate.check("spectral-radius").max_residual < 1.0
        assert certificate.check("boundedness").passed


class TestRoundTrip:
    """SNP 与 SCF 往返"""

    def test_snp_n2(self):
        """测试 n=2、1–4 个节点的 200 个实例"""
        problems = [
            generate_problem("snp", 2, SNP_N2_MIXES[seed % 4], seed, nodes=1 + seed % 4)
            for seed in range(200)
        ]
        _assert_round_trips(problems, {"sigma-match": 1e-9, "node-match": 1e-9})

    def test_snp_n3(self):
        """测试 n=3 三类节点混合的 200 个实例"""
        problems = [
            generate_problem("snp", 3, SNP_N3_MIXES[seed % 6], seed, nodes=1 + seed % 4)
            for seed in range(200)
        ]
        _assert_round_trips(problems, {"sigma-match": 1e-9, "node-match": 1e-9})

    @pytest.mark.parametrize("n,stratum", SCF_CASES)
    def test_scf(self, n, stratum):
        """测试每种约化情形 100 个实例"""
        problems = [generate_problem("scf", n, [stratum], seed) for seed in range(100)]
        _assert_round_trips(problems, {"jet-value": 1e-9, "jet-deriv": 1e-8})

    def test_gen_then_solve(self, tmp_path, capsys):
        """测试命令行 gen → solve 的成功率"""
        solved = 0
        total = 100
        for seed in range(total):
            kind = "snp" if seed % 2 else "scf"
            args = ["gen", "--kind", kind, "--n", str(2 + seed % 3 // 2), "--seed", str(seed)]
            if kind == "snp":
                args += ["--nodes", str(1 + seed % 3)]
            assert run(args) == 0
            path = tmp_path / f"problem_{seed}.json"
            path.write_text(capsys.readouterr().out, encoding="utf-8")
            code = run(["solve", "--input", str(path)])
            payload = json.loads(capsys.readouterr().out)
            if code == 0:
                assert payload["certificate"]["pass"] is True
                solved += 1
        assert solved >= SUCCESS_RATE * total


def _necessity_instances(kind: str, n: int, strata: list[str], count: int = 20):
    """前 count 个能构造出 φ 的 (实例, φ)"""
    found = []
    for seed in range(4 * count):
        nodes = len(strata) if kind == "snp" else None
        instance = instance_of(generate_problem(kind, n, strata, seed, nodes=nodes))
        try:
            found.append((instance, build_phi(instance, seed=seed)))
        except RetriesExhaustedError:
            continue
        if len(found) == count:
            break
    assert len(found) == count
    return found


class TestNecessity:
    """每一条条件都是构造所必需的"""

    @pytest.mark.parametrize(
        "kind,n,strata",
        [
            ("snp", 2, ["scalar", "cyclic"]),
            ("snp", 3, ["scalar", "noncyclic", "cyclic"]),
            *[("scf", n, [stratum]) for n, stratum in SCF_CASES],
        ],
    )
    def test_every_condition_is_necessary(self, kind, n, strata):
        """测试扰动任一条件后只有它不成立，且构造抛出 NotDivisibleError"""
        for instance, phi in _necessity_instances(kind, n, strata):
            conds = (
                cf_condition_list(instance)
                if isinstance(instance, SCFInstance)
                else snp_condition_list(instance)
            )
            for cond in conds:
                report = necessity_probe(instance, phi, cond.label, magnitude=1e-3)
                assert report.expected, (strata, cond.label, report.checker_failed)


class TestOracles:
    """与独立计算的比对"""

    def test_schur_cohn_against_roots(self):
        """测试 10⁴ 个随机三次多项式"""
        rng = np.random.default_rng(0)
        checked = 0
        for _ in range(10_000):
            roots = 1.3 * np.sqrt(rng.uniform(size=3)) * np.exp(2j * np.pi * rng.uniform(size=3))
            radius = float(np.max(np.abs(roots)))
            if abs(1.0 - radius) <= 1e-8:
                continue
            coeffs = np.polynomial.polynomial.polyfromroots(roots)
            assert schur_cohn_stable(coeffs) == (radius < 1.0)
            checked += 1
        assert checked > 9_900

    @pytest.mark.parametrize("n", [2, 3])
    def test_gateaux_first_order(self, n):
        """测试一阶 Gâteaux 导数与中心差分（步长 1e-5）"""
        rng = np.random.default_rng(n)
        h = 1e-5
        for _ in range(200):
            A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            B = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            expected = (sigma(A + h * B) - sigma(A - h * B)) / (2 * h)
            first = gateaux_sigma(A, B, with_second=False).first
            assert np.max(np.abs(first - expected) / (1 + np.abs(expected))) <= 1e-6

    def test_gateaux_second_order(self):
        """测试 A_μ 处 σ₃ 的二阶导数与中心二阶差分"""
        rng = np.random.default_rng(7)
        # σ₃(A+tB) 是 t 的三次多项式，中心二阶差分没有截断误差
        h = 1e-3
        for _ in range(200):
            mu = complex(rng.uniform(-0.9, 0.9), rng.uniform(-0.4, 0.4))
            A = amu(mu)
            B = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            det = [np.linalg.det(A + t * B) for t in (-h, 0, h)]
            expected = (det[0] - 2 * det[1] + det[2]) / (2 * h**2)
            second = gateaux_sigma(A, B).sigma3_second
            assert abs(second - expected) / (1 + abs(expected)) <= 1e-6

    def test_exp_log_round_trip(self):
        """测试 200 个随机可逆矩阵的 exp(log S) = S"""
        rng = np.random.default_rng(11)
        for _ in range(200):
            S = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
            assert np.linalg.norm(mexp(mlog(S)) - S) <= 1e-10 * np.linalg.norm(S)

    def test_amu_generic_rhs_is_second_derivative(self):
        """测试一般情形右端等于 det(A_μ + tB̃) 的 t² 系数"""
        rng = np.random.default_rng(13)
        roots = np.exp(2j * np.pi * np.arange(8) / 8)
        checked = 0
        for _ in range(200):
            mu = complex(rng.uniform(-0.9, 0.9), rng.uniform(-0.4, 0.4))
            B = 0.5 * (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
            B[0, 1] += 0.5
            instance = scf_normalize(amu(mu), B)
            if instance.case != SCFCase.AMU_GENERIC:
                continue
            Bt = instance.base_B
            # 单位圆上的 8 点 DFT 对三次多项式精确
            values = np.array([np.linalg.det(amu(mu) + w * Bt) for w in roots])
            coefficient = np.mean(values * roots**-2)
            rhs = next(c.rhs for c in cf_condition_list(instance) if c.label == "amu-generic.1")
            assert abs(rhs - coefficient) <= 1e-10 * (1 + abs(coefficient))
            checked += 1
        assert checked > 150
