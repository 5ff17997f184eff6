"""异常定义

所有异常都继承 ValueError，调用方可以统一按 ValueError 捕获。
"""


class NotDivisibleError(ValueError):
    """精确除法或喷射钉定失败

    出现即说明某个必要条件在容差内不成立。
    """

    def __init__(self, label: str, point: complex, residual: float) -> None:
        self.label = label
        self.point = complex(point)
        self.residual = float(residual)
        super().__init__(
            f"不可整除: {label}，位置 ζ={self.point:.6g}，余项 {self.residual:.3e}"
        )


class IllConditionedError(ValueError):
    """规范形变换矩阵病态"""

    def __init__(self, condition_number: float) -> None:
        self.condition_number = float(condition_number)
        super().__init__(
            f"相似变换病态（条件数 {self.condition_number:.3e}），建议对输入矩阵做微小扰动"
        )


class UnsupportedCaseError(ValueError):
    """不在构造范围内的情形"""


class RetriesExhaustedError(ValueError):
    """build_phi 重试次数耗尽"""

    def __init__(self, retries: int, best_margin: float) -> None:
        self.retries = retries
        self.best_margin = float(best_margin)
        super().__init__(
            f"重试 {retries} 次后 φ 仍未落入 G_n，最好的裕度为 {self.best_margin:.3e}"
        )


class InvalidProblemError(ValueError):
    """问题文件结构错误"""

    def __init__(self, pointer: str, message: str) -> None:
        self.pointer = pointer
        super().__init__(f"{pointer}: {message}")
