"""
错误类型模块

所有可预期的失败都以 PackingError 子类抛出，CLI 根据 exit_code 退出
"""
from typing import Optional


class PackingError(Exception):
    """流水线错误基类"""

    exit_code: int = 1

    def __init__(
        self,
        message: str,
        stage: str,
        error_type: str,
        details: Optional[str] = None
    ):
        self.message = message
        self.stage = stage
        self.error_type = error_type
        self.details = details
        super().__init__(self.message)


class InputError(PackingError):
    """输入数据或配置错误"""

    exit_code = 2


class DatasetError(InputError):
    """CSV 解析或数据集校验错误"""

    def __init__(
        self,
        message: str,
        error_type: str,
        row: Optional[int] = None,
        column: Optional[str] = None,
        details: Optional[str] = None
    ):
        self.row = row
        self.column = column
        super().__init__(message, "dataset", error_type, details)


class SolverError(PackingError):
    """线性规划求解失败"""

    exit_code = 3

    def __init__(
        self,
        message: str,
        alpha: Optional[float] = None,
        lambda_: Optional[float] = None,
        details: Optional[str] = None,
        error_type: str = "solver_failure"
    ):
        self.alpha = alpha
        self.lambda_ = lambda_
        super().__init__(message, "refine", error_type, details)


class EmptyEllipsoidError(SolverError):
    """h(x) >= 0 的区域为空，候选 pack 被丢弃"""

    def __init__(self, scale: float):
        self.scale = scale
        super().__init__(
            f"椭球为空 (s = {scale:.6g} <= 0)",
            error_type="empty_ellipsoid"
        )


class SchemaError(PackingError):
    """packing.json 结构或特征名不匹配"""

    exit_code = 4

    def __init__(self, message: str, details: Optional[str] = None):
        super().__init__(message, "schema", "schema_mismatch", details)
