"""spectral-lift 命令行入口"""

import logging
import os
import sys

from dotenv import load_dotenv
from pydantic import ValidationError

# 加载环境变量（必须在读取配置之前）
load_dotenv()

from backend.cli import run  # noqa: E402
from backend.config import Settings, load_settings  # noqa: E402

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def setup_logging(settings: Settings) -> None:
    """日志输出到标准错误；设置了 log_file 时同时写文件"""
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if settings.log_file:
        directory = os.path.dirname(settings.log_file)
        if directory:
            os.makedirs(directory, exist_ok=True)
        handlers.append(logging.FileHandler(settings.log_file, encoding="utf-8"))
    root = logging.getLogger()
    root.setLevel(settings.log_level)
    formatter = logging.Formatter(LOG_FORMAT)
    for handler in handlers:
        handler.setFormatter(formatter)
        root.addHandler(handler)


def main() -> None:
    try:
        settings = load_settings()
    except ValidationError:
        # 配置错误由子命令按输入无效报告，这里先用默认日志设置
        settings = Settings()
    setup_logging(settings)
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
