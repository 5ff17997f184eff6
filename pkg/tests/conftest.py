"""公共测试夹具"""

import logging

import numpy as np
import pytest

from backend.core.linalg import amu, companion


@pytest.fixture(autouse=True)
def quiet_logging():
    """测试期间只保留警告以上日志"""
    logging.getLogger("backend").setLevel(logging.WARNING)
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def nilpotent3():
    """3×3 幂零 Jordan 块，即 σ = (0,0,0) 的伴随矩阵"""
    return companion(np.zeros(3))


@pytest.fixture
def amu_half():
    return amu(0.5)


@pytest.fixture
def e12():
    E = np.zeros((3, 3), dtype=np.complex128)
    E[0, 1] = 1
    return E


def random_similar(rng: np.random.Generator, D: np.ndarray) -> np.ndarray:
    """用条件数不大的随机矩阵做相似变换"""
    n = D.shape[0]
    G = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    S = np.eye(n) + 0.25 * G / np.linalg.norm(G, 2)
    return np.linalg.solve(S, D @ S)
