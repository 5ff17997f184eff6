"""配置测试"""

import logging
import os
from unittest.mock import patch

import pytest
from pydantic import ValidationError

from backend.config import Settings, load_settings, resolve_degree, resolve_verify_config
from backend.main import setup_logging
from backend.models.schemas import GridConfig, ProblemConfig


class TestLoadSettings:
    """环境变量测试"""

    def test_defaults(self):
        """测试没有环境变量时使用内置默认值"""
        with patch.dict(os.environ, {}, clear=True):
            settings = load_settings()
        assert settings.tol == 1e-9
        assert settings.grid_radii == 8
        assert settings.grid_angles == 32
        assert settings.seed == 0

    def test_env_overrides(self):
        """测试 SPECTRAL_LIFT_* 覆盖默认值"""
        env = {
            "SPECTRAL_LIFT_TOL": "1e-6",
            "SPECTRAL_LIFT_GRID_RADII": "4",
            "SPECTRAL_LIFT_SEED": "42",
            "SPECTRAL_LIFT_LOG_LEVEL": "INFO",
        }
        with patch.dict(os.environ, env, clear=True):
            settings = load_settings()
        assert settings.tol == 1e-6
        assert settings.grid_radii == 4
        assert settings.seed == 42
        assert settings.log_level == "INFO"

    def test_blank_value_ignored(self):
        """测试空白值不覆盖默认值"""
        with patch.dict(os.environ, {"SPECTRAL_LIFT_TOL": "  "}, clear=True):
            assert load_settings().tol == 1e-9

    def test_invalid_value(self):
        """测试越界值报错"""
        with patch.dict(os.environ, {"SPECTRAL_LIFT_TOL": "-1"}, clear=True):
            with pytest.raises(ValidationError):
                load_settings()


class TestResolve:
    """优先级测试"""

    def test_problem_overrides_env(self):
        """测试问题文件中的 config 优先于环境变量"""
        settings = Settings(tol=1e-6, seed=1)
        problem = ProblemConfig(tol=1e-7, grid=GridConfig(radii=3, angles=8), seed=5)
        config = resolve_verify_config(settings, problem)
        assert config.tol == 1e-7
        assert config.grid_radii == 3
        assert config.grid_angles == 8
        assert config.seed == 5

    def test_cli_overrides_problem(self):
        """测试命令行参数优先级最高"""
        settings = Settings(tol=1e-6)
        problem = ProblemConfig(tol=1e-7, grid=GridConfig(radii=3, angles=8))
        config = resolve_verify_config(settings, problem, tol=1e-8, grid_angles=16, seed=9)
        assert config.tol == 1e-8
        assert config.grid_radii == 3
        assert config.grid_angles == 16
        assert config.seed == 9

    def test_env_only(self):
        """测试没有问题配置时取环境设置"""
        config = resolve_verify_config(Settings(grid_radii=5, quad_samples=64))
        assert config.grid_radii == 5
        assert config.quad_samples == 64
        assert config.max_radius == 0.95

    def test_invalid_override(self):
        """测试命令行给出非法网格时报错"""
        with pytest.raises(ValidationError):
            resolve_verify_config(Settings(), grid_angles=2)

    @pytest.mark.parametrize(
        ("problem", "degree", "expected"),
        [
            (None, None, None),
            (ProblemConfig(degree=4), None, 4),
            (ProblemConfig(degree=4), 6, 6),
            (None, 3, 3),
        ],
    )
    def test_resolve_degree(self, problem, degree, expected):
        """测试次数的优先级"""
        assert resolve_degree(problem, degree) == expected


class TestLogging:
    """日志配置测试"""

    @pytest.fixture(autouse=True)
    def restore_root(self):
        root = logging.getLogger()
        level, handlers = root.level, list(root.handlers)
        yield
        for handler in root.handlers:
            if handler not in handlers:
                handler.close()
        root.handlers = handlers
        root.setLevel(level)

    def test_level_normalized(self):
        """测试日志级别不区分大小写"""
        with patch.dict(os.environ, {"SPECTRAL_LIFT_LOG_LEVEL": "debug"}, clear=True):
            assert load_settings().log_level == "DEBUG"

    def test_unknown_level(self):
        """测试未知日志级别报错"""
        with patch.dict(os.environ, {"SPECTRAL_LIFT_LOG_LEVEL": "LOUD"}, clear=True):
            with pytest.raises(ValidationError):
                load_settings()

    def test_setup_from_settings(self, tmp_path):
        """测试日志级别与日志文件取自配置"""
        log_file = tmp_path / "logs" / "lift.log"
        env = {"SPECTRAL_LIFT_LOG_LEVEL": "info", "SPECTRAL_LIFT_LOG_FILE": str(log_file)}
        with patch.dict(os.environ, env, clear=True):
            setup_logging(load_settings())
        root = logging.getLogger()
        assert root.level == logging.INFO
        assert any(isinstance(h, logging.FileHandler) for h in root.handlers)
        logging.getLogger("spectral_lift_test").info("写入日志文件")
        for handler in root.handlers:
            handler.flush()
        assert "写入日志文件" in log_file.read_text(encoding="utf-8")
