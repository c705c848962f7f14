"""
输出文件的读写

packing.json 由 pydantic 模型描述，加载时校验结构，
load → dump 与原文件逐字节一致
"""
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, ValidationError

from .dataset import LabeledDataset
from .errors import EmptyEllipsoidError, InputError, SchemaError
from .mdl import EncodingParams, PackingCostReport
from .refine import BoundaryParams, Pack, feature_rules, to_ellipsoid

FORMAT_VERSION = "1.0"


class _Record(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FeatureRange(_Record):
    """单个特征的归一化范围"""
    feature: str
    min: float
    max: float


class EncodingRecord(_Record):
    d: int
    m: int
    log2_f: float


class RuleRecord(_Record):
    """原始单位下的规则"""
    feature: str
    lower: float
    upper: float
    raw_lower: float
    raw_upper: float
    degenerate: bool


class PackRecord(_Record):
    key: str
    features: List[str]
    center: List[float]
    radii: List[float]
    u: List[float]
    w: List[float]
    w0: float
    mass: int
    impurity: int
    bits: float
    anomaly_ids: List[int]
    normal_exception_ids: List[int]
    rules: List[RuleRecord]


class PackingDocument(_Record):
    """packing.json 的完整结构"""
    version: str
    seed: int
    encoding: EncodingRecord
    normalization: List[FeatureRange]
    packs: List[PackRecord]
    outlier_ids: List[int]
    total_bits: float
    naive_bits: float
    savings_percent: float


def build_document(
    packing: Sequence[Pack],
    dataset: LabeledDataset,
    params: EncodingParams,
    report: PackingCostReport,
    seed: int
) -> PackingDocument:
    """
    由选择结果构造 packing.json 文档

    Args:
        packing: 选中的 pack
        dataset: 归一化后的数据集
        params: 编码参数
        report: 描述长度报告
        seed: 随机种子

    Returns:
        文档模型
    """
    names = dataset.feature_names
    record = dataset.normalization_record
    packs = []
    for pack, bits in zip(packing, report.per_pack_bits):
        signature = feature_rules(pack, record, names)
        packs.append(PackRecord(
            key=pack.key,
            features=[names[f] for f in pack.subspace],
            center=pack.center.tolist(),
            radii=pack.radii.tolist(),
            u=pack.params.u.tolist(),
            w=pack.params.w.tolist(),
            w0=pack.params.w0,
            mass=pack.mass,
            impurity=pack.impurity,
            bits=bits,
            anomaly_ids=pack.covered_anomalies.tolist(),
            normal_exception_ids=pack.enclosed_normals.tolist(),
            rules=[
                RuleRecord(
                    feature=rule.name,
                    lower=rule.lower,
                    upper=rule.upper,
                    raw_lower=rule.raw_lower,
                    raw_upper=rule.raw_upper,
                    degenerate=rule.degenerate,
                )
                for rule in signature.rules
            ],
        ))

    normalization = []
    if record is not None:
        normalization = [
            FeatureRange(feature=name, min=float(lo), max=float(hi))
            for name, (lo, hi) in zip(names, record)
        ]
    return PackingDocument(
        version=FORMAT_VERSION,
        seed=seed,
        encoding=EncodingRecord(d=params.d, m=params.m, log2_f=params.log2_f),
        normalization=normalization,
        packs=packs,
        outlier_ids=report.outlier_ids,
        total_bits=report.total_bits,
        naive_bits=report.naive_bits,
        savings_percent=report.savings_percent,
    )


def dump_document(document: PackingDocument) -> str:
    return document.model_dump_json(indent=2) + "\n"


def write_document(document: PackingDocument, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_document(document), encoding="utf-8")
    return path


def load_document(path: Path) -> PackingDocument:
    """
    读取并校验 packing.json

    Raises:
        InputError: 文件不存在
        SchemaError: 结构不合法
    """
    path = Path(path)
    if not path.exists():
        raise InputError(f"packing 文件不存在: {path}", "io", "file_not_found")
    try:
        return PackingDocument.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise SchemaError(f"packing 文件结构不合法: {path}", str(e)) from e


def normalization_record(document: PackingDocument) -> Tuple[Tuple[str, ...], np.ndarray]:
    """文档中的特征名与 (min, max) 记录"""
    if not document.normalization:
        raise SchemaError("packing 文件缺少归一化记录")
    names = tuple(r.feature for r in document.normalization)
    if len(names) != document.encoding.d:
        raise SchemaError(
            f"归一化记录的特征数 {len(names)} 与 encoding.d={document.encoding.d} 不一致"
        )
    record = np.array([[r.min, r.max] for r in document.normalization], dtype=float)
    return names, record


def packs_from_document(document: PackingDocument) -> List[Pack]:
    """
    从文档重建 pack（几何量由 u、w、w0 重新计算）

    Raises:
        SchemaError: 特征名未知、系数维度不一致或椭球为空
    """
    names, _ = normalization_record(document)
    index = {name: i for i, name in enumerate(names)}

    packs = []
    for rec in document.packs:
        unknown = [f for f in rec.features if f not in index]
        if unknown:
            raise SchemaError(f"pack {rec.key} 使用了未知特征: {', '.join(unknown)}")
        try:
            params = BoundaryParams(
                u=np.array(rec.u),
                w=np.array(rec.w),
                w0=rec.w0,
                subspace=tuple(index[f] for f in rec.features),
            )
            center, inv_shape, radii = to_ellipsoid(params)
        except (ValueError, EmptyEllipsoidError) as e:
            raise SchemaError(f"pack {rec.key} 的系数不合法", str(e)) from e
        packs.append(Pack(
            key=rec.key,
            params=params,
            center=center,
            inv_shape=inv_shape,
            radii=radii,
            covered_anomalies=np.array(rec.anomaly_ids, dtype=int),
            enclosed_normals=np.array(rec.normal_exception_ids, dtype=int),
        ))
    return packs


def write_cost_trace(trace: Sequence[Tuple[int, float]], path: Path) -> Path:
    """cost.csv：表头 K,bits"""
    path = Path(path)
    pd.DataFrame(list(trace), columns=["K", "bits"]).to_csv(path, index=False)
    return path


def write_scores(
    scores: np.ndarray,
    flags: np.ndarray,
    path: Path,
    labels: Optional[np.ndarray] = None
) -> Path:
    """scores.csv：表头 id,score,flag[,label]"""
    path = Path(path)
    frame = pd.DataFrame({
        "id": np.arange(len(scores)),
        "score": scores,
        "flag": np.asarray(flags, dtype=int),
    })
    if labels is not None:
        frame["label"] = np.asarray(labels, dtype=int)
    frame.to_csv(path, index=False)
    return path
