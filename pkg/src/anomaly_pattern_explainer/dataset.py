"""
数据集模块

负责 CSV 读取、校验、min-max 归一化和分层折划分。
点 ID 即行号（0..m-1），下游所有集合都是 ID 集合
"""
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple
import logging

import numpy as np
import pandas as pd

from .errors import DatasetError, SchemaError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """带异常标签的数值数据集"""
    points: np.ndarray
    is_anomaly: np.ndarray
    feature_names: Tuple[str, ...]
    normalization_record: Optional[np.ndarray] = None
    degenerate: np.ndarray = field(default=None)
    normalized: bool = False

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        labels = np.asarray(self.is_anomaly, dtype=bool)
        if points.ndim != 2:
            raise DatasetError("points 必须是二维矩阵", "invalid_shape")
        m, d = points.shape
        if labels.shape != (m,):
            raise DatasetError(f"标签数 {labels.shape} 与点数 {m} 不一致", "invalid_shape")
        if len(self.feature_names) != d:
            raise DatasetError(
                f"特征名数量 {len(self.feature_names)} 与列数 {d} 不一致", "invalid_shape"
            )
        if m == 0:
            raise DatasetError("数据集为空", "empty_dataset")
        if not labels.any() or labels.all():
            raise DatasetError("异常点和正常点都必须至少有一个", "missing_class")
        if self.normalized and (points.min() < 0.0 or points.max() > 1.0):
            raise DatasetError("归一化后的坐标必须在 [0, 1] 内", "out_of_range")

        degenerate = self.degenerate
        if degenerate is None:
            degenerate = np.zeros(d, dtype=bool)
        degenerate = np.asarray(degenerate, dtype=bool)

        for arr in (points, labels, degenerate):
            arr.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "is_anomaly", labels)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "degenerate", degenerate)
        if self.normalization_record is not None:
            record = np.asarray(self.normalization_record, dtype=float)
            record.setflags(write=False)
            object.__setattr__(self, "normalization_record", record)

    @property
    def m(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def a(self) -> int:
        return int(self.is_anomaly.sum())

    @property
    def n(self) -> int:
        return self.m - self.a

    @property
    def anomaly_ids(self) -> np.ndarray:
        return np.flatnonzero(self.is_anomaly)

    @property
    def normal_ids(self) -> np.ndarray:
        return np.flatnonzero(~self.is_anomaly)

    def denormalize(self, feature: int, value: float) -> float:
        """
        把归一化坐标还原为原始单位

        Args:
            feature: 特征下标
            value: 归一化后的值

        Returns:
            原始单位下的值
        """
        if self.normalization_record is None:
            return float(value)
        lo, hi = self.normalization_record[feature]
        return float(lo + value * (hi - lo))

    def subset(self, ids: Sequence[int]) -> "LabeledDataset":
        """按 ID 取子集（保留归一化记录，ID 重新编号）"""
        ids = np.asarray(ids, dtype=int)
        return LabeledDataset(
            points=self.points[ids],
            is_anomaly=self.is_anomaly[ids],
            feature_names=self.feature_names,
            normalization_record=self.normalization_record,
            degenerate=self.degenerate,
            normalized=self.normalized,
        )


def _read_frame(path: Path) -> pd.DataFrame:
    path = Path(path)
    if not path.exists():
        raise DatasetError(f"文件不存在: {path}", "missing_file")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as e:
        raise DatasetError(f"无法解析 CSV: {path}", "parse_error", details=str(e)) from e
    header = pd.read_csv(path, header=None, nrows=1, dtype=str).iloc[0].tolist()
    if len(set(header)) != len(header):
        raise DatasetError("CSV 表头存在重复列名", "ambiguous_column")
    frame.columns = header
    return frame


def _parse_numeric(frame: pd.DataFrame, columns: Sequence[str]) -> np.ndarray:
    """逐列转换为浮点数，遇到非法单元格时报告行号（1 起，不含表头）和列名"""
    matrix = np.empty((len(frame), len(columns)), dtype=float)
    for j, column in enumerate(columns):
        raw = frame[column].str.strip()
        values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
        bad = np.flatnonzero(~np.isfinite(values))
        if bad.size:
            row = int(bad[0])
            raise DatasetError(
                f"第 {row + 1} 行, 列 '{column}' 不是有效数值: '{frame[column].iloc[row]}'",
                "non_numeric",
                row=row + 1,
                column=column,
            )
        matrix[:, j] = values
    return matrix


def load_csv(path: Path, label_column: str, anomaly_value: str) -> LabeledDataset:
    """
    读取带标签的 CSV（未归一化）

    Args:
        path: CSV 路径，需要表头
        label_column: 标签列名
        anomaly_value: 标签等于该字符串的行视为异常

    Returns:
        原始数据集，行顺序即点 ID

    Raises:
        DatasetError: 文件缺失、标签列缺失、非数值单元格、空表或某一类为空
    """
    frame = _read_frame(path)
    if label_column not in frame.columns:
        raise DatasetError(f"缺少标签列: {label_column}", "missing_label_column", column=label_column)
    if len(frame) == 0:
        raise DatasetError("CSV 没有数据行", "empty_dataset")

    feature_names = [c for c in frame.columns if c != label_column]
    if not feature_names:
        raise DatasetError("CSV 中没有特征列", "no_features")
    points = _parse_numeric(frame, feature_names)
    labels = (frame[label_column].str.strip() == str(anomaly_value).strip()).to_numpy()

    dataset = LabeledDataset(points=points, is_anomaly=labels, feature_names=tuple(feature_names))
    logger.info(f"读取数据集 {path}: m={dataset.m}, d={dataset.d}, a={dataset.a}")
    return dataset


def read_feature_matrix(
    path: Path,
    feature_names: Sequence[str],
    label_column: Optional[str] = None,
    anomaly_value: Optional[str] = None
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    按给定特征顺序读取检测用的 CSV

    Args:
        path: CSV 路径
        feature_names: 需要的特征列（顺序与 packing 一致）
        label_column: 可选的标签列
        anomaly_value: 异常标签值

    Returns:
        (原始特征矩阵, 标签数组或 None)

    Raises:
        SchemaError: CSV 缺少 packing 中的特征
    """
    frame = _read_frame(path)
    missing = [name for name in feature_names if name not in frame.columns]
    if missing:
        raise SchemaError(f"CSV 缺少特征列: {', '.join(missing)}")
    matrix = _parse_numeric(frame, feature_names)

    labels = None
    if label_column is not None and label_column in frame.columns:
        labels = (frame[label_column].str.strip() == str(anomaly_value).strip()).to_numpy()
    return matrix, labels


def apply_normalization(matrix: np.ndarray, record: np.ndarray) -> np.ndarray:
    """用已有的 (min, max) 记录缩放矩阵；常量特征映射为 0，不裁剪"""
    lo, hi = record[:, 0], record[:, 1]
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    scaled = (np.asarray(matrix, dtype=float) - lo) / safe
    return np.where(span > 0, scaled, 0.0)


def normalize(dataset: LabeledDataset) -> LabeledDataset:
    """
    全局 min-max 归一化到 [0, 1]

    最值取自所有点（正常 + 异常）。常量特征全部映射为 0 并标记为退化。
    已归一化的数据集原样返回

    Args:
        dataset: 原始数据集

    Returns:
        归一化后的数据集
    """
    if dataset.normalized:
        return dataset

    lo = dataset.points.min(axis=0)
    hi = dataset.points.max(axis=0)
    record = np.column_stack([lo, hi])
    degenerate = hi <= lo
    if degenerate.any():
        names = [dataset.feature_names[i] for i in np.flatnonzero(degenerate)]
        logger.warning(f"常量特征不参与区间种子: {', '.join(names)}")

    scaled = np.clip(apply_normalization(dataset.points, record), 0.0, 1.0)
    return LabeledDataset(
        points=scaled,
        is_anomaly=dataset.is_anomaly,
        feature_names=dataset.feature_names,
        normalization_record=record,
        degenerate=degenerate,
        normalized=True,
    )


def stratified_folds(
    dataset: LabeledDataset,
    k: int,
    seed: int
) -> List[Tuple[np.ndarray, np.ndarray]]:
    """
    分层 k 折划分

    异常点少于 k 个时退化为对异常点的留一法：每个划分的测试集是
    一个异常点加上一份正常点，所有测试集的并仍覆盖全部点。
    只有 1 个异常点时只有一个划分，测试集是全部点，训练集为空

    Args:
        dataset: 数据集
        k: 折数 (>= 2)
        seed: 随机种子

    Returns:
        (训练 ID, 测试 ID) 列表，均为升序
    """
    if k < 2:
        raise DatasetError(f"折数必须 >= 2: {k}", "invalid_folds")
    if k > dataset.m:
        raise DatasetError(f"折数 {k} 大于点数 {dataset.m}", "invalid_folds")

    rng = np.random.default_rng(seed)
    anomalies = rng.permutation(dataset.anomaly_ids)
    normals = rng.permutation(dataset.normal_ids)

    if dataset.a < k:
        logger.info(f"异常点数 {dataset.a} < {k}，改用留一法")
        anomaly_chunks = [anomalies[i:i + 1] for i in range(dataset.a)]
        normal_chunks = np.array_split(normals, dataset.a)
    else:
        anomaly_chunks = np.array_split(anomalies, k)
        # 反向排列让多出来的正常点落在异常点较少的折里
        normal_chunks = np.array_split(normals, k)[::-1]

    all_ids = np.arange(dataset.m)
    folds = []
    for anomaly_chunk, normal_chunk in zip(anomaly_chunks, normal_chunks):
        test = np.sort(np.concatenate([anomaly_chunk, normal_chunk]))
        train = np.setdiff1d(all_ids, test)
        folds.append((train, test))
    return folds
