"""
配置管理模块

使用 pydantic 进行类型安全的配置管理。优先级：
默认值 < 环境变量 (APX_*) < JSON 配置文件 < 命令行参数
"""
import json
import os
from pathlib import Path
from typing import Any, List, Optional

from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .errors import InputError


class Settings(BaseSettings):
    """流水线配置（对应 PipelineConfig）"""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="APX_",
        case_sensitive=False,
        extra="ignore",
    )

    # 区间种子
    quantiles: List[float] = Field(
        default=[80.0, 85.0, 90.0, 95.0],
        description="KDE 高密度区间的分位数阈值（百分比）"
    )

    # SubClus 阈值，None 表示取一维矩形的中位数
    mass_threshold: Optional[int] = Field(default=None, ge=1, description="质量阈值 ms")
    purity_threshold: Optional[int] = Field(default=None, ge=0, description="纯度阈值 mu")
    level_cap: int = Field(default=6, ge=1, le=32, description="格搜索的最高层数")

    # 细化
    alpha_grid: List[float] = Field(
        default=[1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0],
        description="邻近异常点的松弛惩罚 alpha"
    )
    lambda_grid: List[float] = Field(
        default=[1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3],
        description="正常点的松弛惩罚 lambda"
    )
    vicinity_margin: float = Field(default=1.0, ge=0.0, description="邻域扩展倍数")
    cap_pack_impurity: bool = Field(
        default=True,
        description="细化出的 pack 也须满足纯度阈值 mu（impurity <= mu）"
    )

    # 编码与选择
    log2_f: float = Field(default=10.0, gt=0.0, description="每个坐标的编码比特数")
    full_shape_cost: bool = Field(default=False, description="按满矩阵计算形状代价")
    k_cap: int = Field(default=25, ge=1, description="K 的扫描上限")
    seed: int = Field(default=42, description="随机种子")
    workers: Optional[int] = Field(default=None, ge=1, description="并行线程数")

    # 目录与日志
    output_dir: Path = Field(default=Path("apx_output"), description="输出目录")
    log_dir: Path = Field(default=Path("logs"), description="日志目录")
    log_level: str = Field(default="INFO", description="日志级别 (DEBUG/INFO/WARNING/ERROR)")
    log_to_file: bool = Field(default=False, description="是否写日志文件")
    debug_lattice: bool = Field(default=False, description="输出每层格的 JSON")

    @field_validator("quantiles")
    @classmethod
    def validate_quantiles(cls, v: List[float]) -> List[float]:
        """验证分位数"""
        if not v:
            raise ValueError("quantiles 不能为空")
        for q in v:
            if not 0.0 < q < 100.0:
                raise ValueError(f"分位数必须在 (0, 100) 内: {q}")
        return v

    @field_validator("alpha_grid", "lambda_grid")
    @classmethod
    def validate_grid(cls, v: List[float]) -> List[float]:
        """验证惩罚网格"""
        if not v:
            raise ValueError("惩罚网格不能为空")
        if any(x <= 0 for x in v):
            raise ValueError("惩罚网格的取值必须为正")
        return v

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        """验证日志级别"""
        valid_levels = ["DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"]
        v = v.upper()
        if v not in valid_levels:
            raise ValueError(f"log_level 必须是以下之一: {', '.join(valid_levels)}")
        return v

    @property
    def effective_workers(self) -> int:
        """实际使用的线程数"""
        return self.workers or os.cpu_count() or 1


def load_settings(config_file: Optional[Path] = None, **overrides: Any) -> Settings:
    """
    按优先级合并配置

    Args:
        config_file: JSON 配置文件路径
        **overrides: 命令行参数，值为 None 的项被忽略

    Returns:
        配置对象

    Raises:
        InputError: 配置文件无法读取或校验失败
    """
    values: dict = {}
    if config_file is not None:
        try:
            loaded = json.loads(Path(config_file).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise InputError(
                f"无法读取配置文件: {config_file}",
                "config",
                "config_unreadable",
                str(e)
            ) from e
        if not isinstance(loaded, dict):
            raise InputError("配置文件必须是 JSON 对象", "config", "config_invalid")
        values.update(loaded)
    values.update({k: v for k, v in overrides.items() if v is not None})

    try:
        return Settings(**values)
    except ValidationError as e:
        raise InputError("配置校验失败", "config", "config_invalid", str(e)) from e


# 全局配置实例
_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """获取配置实例（单例模式）"""
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


def reload_settings() -> Settings:
    """重新加载配置"""
    global _settings
    _settings = Settings()
    return _settings
