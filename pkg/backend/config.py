"""运行配置

默认值从环境变量读取（.env 由 main.py 预先加载）。
优先级：命令行参数 > 问题文件中的 config > 环境变量 > 内置默认值。
"""

import logging
import os

from pydantic import BaseModel, Field, field_validator

from backend.models.schemas import ProblemConfig, VerifyConfig

logger = logging.getLogger(__name__)

ENV_PREFIX = "SPECTRAL_LIFT_"


class Settings(BaseModel):
    """环境变量给出的默认设置"""

    tol: float = Field(default=1e-9, gt=0)
    grid_radii: int = Field(default=8, ge=1)
    grid_angles: int = Field(default=32, ge=4)
    max_radius: float = Field(default=0.95, gt=0, lt=1)
    deriv_tol: float = Field(default=1e-8, gt=0)
    quad_radius: float = Field(default=0.5, gt=0, lt=1)
    quad_samples: int = Field(default=256, ge=8)
    seed: int = 0
    log_level: str = "WARNING"
    log_file: str | None = None

    @field_validator("log_level", mode="after")
    @classmethod
    def _known_level(cls, value: str) -> str:
        level = value.upper()
        if level not in logging.getLevelNamesMapping():
            raise ValueError(f"未知日志级别: {value}")
        return level


def load_settings() -> Settings:
    """读取 SPECTRAL_LIFT_* 环境变量

    Raises:
        pydantic.ValidationError: 变量值无法解析或越界
    """
    values: dict[str, str] = {}
    for name in Settings.model_fields:
        raw = os.getenv(f"{ENV_PREFIX}{name.upper()}")
        if raw is not None and raw.strip():
            values[name] = raw.strip()
    settings = Settings.model_validate(values)
    logger.debug(f"配置: {settings.model_dump()}")
    return settings


def resolve_verify_config(
    settings: Settings,
    problem: ProblemConfig | None = None,
    tol: float | None = None,
    grid_radii: int | None = None,
    grid_angles: int | None = None,
    seed: int | None = None,
) -> VerifyConfig:
    """按优先级合成验证器配置"""
    merged = {
        "tol": settings.tol,
        "deriv_tol": settings.deriv_tol,
        "grid_radii": settings.grid_radii,
        "grid_angles": settings.grid_angles,
        "max_radius": settings.max_radius,
        "quad_radius": settings.quad_radius,
        "quad_samples": settings.quad_samples,
        "seed": settings.seed,
    }
    if problem is not None:
        if problem.tol is not None:
            merged["tol"] = problem.tol
        if problem.grid is not None:
            merged["grid_radii"] = problem.grid.radii
            merged["grid_angles"] = problem.grid.angles
        if problem.seed is not None:
            merged["seed"] = problem.seed
    overrides = {"tol": tol, "grid_radii": grid_radii, "grid_angles": grid_angles, "seed": seed}
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return VerifyConfig.model_validate(merged)


def resolve_degree(problem: ProblemConfig | None, degree: int | None) -> int | None:
    if degree is not None:
        return degree
    return problem.degree if problem is not None else None
