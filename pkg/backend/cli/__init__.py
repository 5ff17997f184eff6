"""命令行外壳"""

from backend.cli.app import build_parser, run

__all__ = ["build_parser", "run"]
