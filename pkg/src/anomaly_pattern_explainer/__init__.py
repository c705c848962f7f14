"""
Anomaly Pattern Explainer

用 MDL 选出的轴对齐超椭球（pack）概括数据集中的异常点
"""

__version__ = "1.0.0"
__author__ = "Anomaly Pattern Explainer Contributors"

from .config import Settings, get_settings, load_settings
from .dataset import LabeledDataset, load_csv, normalize
from .errors import DatasetError, InputError, PackingError, SchemaError, SolverError
from .processor import ExplanationResult, PackingPipeline

__all__ = [
    "Settings",
    "get_settings",
    "load_settings",
    "LabeledDataset",
    "load_csv",
    "normalize",
    "PackingError",
    "InputError",
    "DatasetError",
    "SolverError",
    "SchemaError",
    "ExplanationResult",
    "PackingPipeline",
]
