"""
异常模式解释处理器

串联 dataset → density → lattice → refine → mdl/select 各阶段，
并负责输出文件、检测打分和交叉验证
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple
import json
import logging

import numpy as np

from .config import Settings
from .dataset import LabeledDataset, apply_normalization, normalize, read_feature_matrix, stratified_folds
from .density import seed_rectangles
from .errors import DatasetError, SolverError
from .evaluation import (
    InterpretabilityReport,
    auprc,
    interpretability_report,
    score_points,
)
from .lattice import HyperRectangle, default_thresholds, dump_lattice, subclus
from .mdl import EncodingParams, PackingCostReport, description_length
from .packing_io import (
    PackingDocument,
    build_document,
    normalization_record,
    packs_from_document,
    write_cost_trace,
    write_document,
    write_scores,
)
from .refine import Pack, RectangleRefiner, RefinementOutcome, Signature, feature_rules, make_pack
from .selection import SelectionResult, select_packing
from .utils.format_utils import format_pack_block, format_report, sig4


@dataclass
class ExplanationResult:
    """一次完整解释的中间结果与最终结果"""
    dataset: LabeledDataset
    seeds: List[HyperRectangle]
    thresholds: Optional[Tuple[int, int]]
    rectangles: List[HyperRectangle]
    pool: List[Pack]
    params: EncodingParams
    selection: SelectionResult
    cost_report: PackingCostReport
    signatures: List[Signature]
    lattice_trace: List[dict] = field(default_factory=list)

    @property
    def packing(self) -> List[Pack]:
        return self.selection.packing


@dataclass
class DetectionResult:
    """检测打分结果"""
    scores: np.ndarray
    flags: np.ndarray
    labels: Optional[np.ndarray] = None
    auprc: Optional[float] = None


class PackingPipeline:
    """异常模式解释流水线"""

    def __init__(self, settings: Settings, logger: Optional[logging.Logger] = None):
        """
        初始化流水线

        Args:
            settings: 配置对象
            logger: 日志记录器
        """
        self.settings = settings
        self.logger = logger or logging.getLogger(__name__)

    def _map(self, func, items: list) -> list:
        workers = self.settings.effective_workers
        if workers <= 1 or len(items) <= 1:
            return [func(item) for item in items]
        with ThreadPoolExecutor(max_workers=workers) as executor:
            return list(executor.map(func, items))

    def _thresholds(self, seeds: List[HyperRectangle]) -> Tuple[int, int]:
        ms, mu = default_thresholds(seeds)
        if self.settings.mass_threshold is not None:
            ms = self.settings.mass_threshold
        if self.settings.purity_threshold is not None:
            mu = self.settings.purity_threshold
        return ms, mu

    def refine_all(
        self,
        dataset: LabeledDataset,
        rectangles: List[HyperRectangle],
        purity_cap: Optional[int] = None
    ) -> List[Pack]:
        """
        细化全部超矩形，拼接为候选池（按超矩形顺序）

        Args:
            dataset: 归一化后的数据集
            rectangles: SubClus 输出的超矩形
            purity_cap: pack 的 impurity 上限；None 表示不限制

        Raises:
            SolverError: 所有网格单元的线性规划均失败
        """
        refiner = RectangleRefiner(
            dataset,
            alpha_grid=self.settings.alpha_grid,
            lambda_grid=self.settings.lambda_grid,
            margin=self.settings.vicinity_margin,
            purity_cap=purity_cap,
            logger=self.logger,
        )
        outcomes: List[RefinementOutcome] = self._map(
            lambda item: refiner.refine(item[1], item[0]), list(enumerate(rectangles))
        )

        pool = [p for outcome in outcomes for p in outcome.packs]
        cells = sum(o.cells for o in outcomes)
        failures = sum(o.solver_failures for o in outcomes)
        empty = sum(o.empty_cells for o in outcomes)
        impure = sum(o.impure_cells for o in outcomes)
        resolves = sum(o.resolves for o in outcomes)
        bound_hits = sum(o.bound_hits for o in outcomes)
        self.logger.info(
            f"细化完成: {len(rectangles)} 个超矩形, {cells} 个网格单元, 追加约束重解 {resolves} 次, "
            f"空椭球 {empty}, 超出纯度 {impure}, 求解失败 {failures}, 候选池 {len(pool)}"
        )
        if bound_hits:
            self.logger.warning(f"共 {bound_hits} 个网格单元的系数触及上界")
        if not pool and cells > 0 and failures == cells:
            raise SolverError(f"全部 {cells} 次线性规划求解失败")
        return pool

    def explain(self, dataset: LabeledDataset) -> ExplanationResult:
        """
        完整的解释流程

        Args:
            dataset: 原始或已归一化的数据集

        Returns:
            解释结果；没有可压缩模式时 packing 为空
        """
        settings = self.settings
        dataset = normalize(dataset)
        self.logger.info(f"数据集: m={dataset.m}, d={dataset.d}, 异常点 {dataset.a}")

        seeds = seed_rectangles(dataset, settings.quantiles)
        thresholds = None
        rectangles: List[HyperRectangle] = []
        trace: List[dict] = []
        if seeds:
            thresholds = self._thresholds(seeds)
            self.logger.info(f"SubClus 阈值: ms={thresholds[0]}, mu={thresholds[1]}")
            rectangles = subclus(
                dataset, seeds, thresholds[0], thresholds[1],
                level_cap=settings.level_cap, trace=trace,
            )
        else:
            self.logger.warning("没有可用的区间种子")

        purity_cap = thresholds[1] if thresholds and settings.cap_pack_impurity else None
        pool = self.refine_all(dataset, rectangles, purity_cap) if rectangles else []
        params = EncodingParams.for_pool(
            dataset, pool, log2_f=settings.log2_f, full_shape_cost=settings.full_shape_cost
        )
        selection = select_packing(
            pool, dataset, params, settings.seed,
            k_cap=settings.k_cap,
            workers=settings.effective_workers,
            logger=self.logger,
        )
        report = description_length(selection.packing, dataset, params)
        signatures = [
            feature_rules(p, dataset.normalization_record, dataset.feature_names)
            for p in selection.packing
        ]
        if selection.best_K == 0:
            self.logger.info("未发现可压缩的模式")
        self.logger.info(
            f"编码长度 {report.total_bits:.1f} bits / 朴素编码 {report.naive_bits:.1f} bits, "
            f"节省 {report.savings_percent:.2f}%"
        )
        return ExplanationResult(
            dataset=dataset,
            seeds=seeds,
            thresholds=thresholds,
            rectangles=rectangles,
            pool=pool,
            params=params,
            selection=selection,
            cost_report=report,
            signatures=signatures,
            lattice_trace=trace,
        )

    def to_document(self, result: ExplanationResult) -> PackingDocument:
        return build_document(
            result.packing, result.dataset, result.params, result.cost_report, self.settings.seed
        )

    def render_report(self, result: ExplanationResult) -> str:
        """report.txt 的内容：每个 pack 一块，按 mass 降序"""
        dataset = result.dataset
        report = result.cost_report
        header = [
            f"数据集: m={dataset.m}, d={dataset.d}, 异常点 {dataset.a}, seed={self.settings.seed}",
            f"K = {report.K}, 编码 {sig4(report.total_bits)} bits, "
            f"朴素 {sig4(report.naive_bits)} bits, 节省 {sig4(report.savings_percent)}%",
        ]
        order = sorted(range(len(result.packing)), key=lambda i: (-result.packing[i].mass, i))
        blocks = [
            format_pack_block(rank + 1, result.packing[i].key, result.signatures[i], report.per_pack_bits[i])
            for rank, i in enumerate(order)
        ]
        return format_report(header, blocks, report.outlier_ids)

    def write_outputs(self, result: ExplanationResult, output_dir: Optional[Path] = None) -> Dict[str, Path]:
        """
        写出 packing.json、cost.csv、report.txt（以及可选的 lattice.json）

        Args:
            result: 解释结果
            output_dir: 输出目录，默认取配置

        Returns:
            文件名到路径的映射
        """
        output_dir = Path(output_dir or self.settings.output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)

        paths = {
            "packing": write_document(self.to_document(result), output_dir / "packing.json"),
            "cost": write_cost_trace(result.selection.per_K_trace, output_dir / "cost.csv"),
        }
        report_path = output_dir / "report.txt"
        report_path.write_text(self.render_report(result), encoding="utf-8")
        paths["report"] = report_path
        if self.settings.debug_lattice:
            paths["lattice"] = dump_lattice(result.lattice_trace, output_dir / "lattice.json")

        for name, path in paths.items():
            self.logger.debug(f"已写出 {name}: {path}")
        return paths

    def detect(
        self,
        document: PackingDocument,
        csv_path: Path,
        label_column: Optional[str] = None,
        anomaly_value: Optional[str] = None
    ) -> DetectionResult:
        """
        用已保存的 packing 给新数据打分

        Args:
            document: packing 文档
            csv_path: 待检测的 CSV
            label_column: 标签列（可选）
            anomaly_value: 异常标签值

        Returns:
            分数、判定及（有标签时的）AUPRC

        Raises:
            SchemaError: CSV 缺少 packing 中的特征
        """
        names, record = normalization_record(document)
        packs = packs_from_document(document)
        raw, labels = read_feature_matrix(csv_path, names, label_column, anomaly_value)
        scores = score_points(packs, apply_normalization(raw, record))
        flags = scores >= 0

        value = None
        if labels is not None and packs and labels.any():
            value = auprc(scores, labels)
        self.logger.info(
            f"检测完成: {len(scores)} 个点, 判为异常 {int(flags.sum())}"
            + (f", AUPRC={value:.4f}" if value is not None else "")
        )
        return DetectionResult(scores=scores, flags=flags, labels=labels, auprc=value)

    def write_detection(self, result: DetectionResult, path: Path) -> Dict[str, Path]:
        """写出 scores.csv 和 AUPRC（有标签时）"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        paths = {"scores": write_scores(result.scores, result.flags, path, result.labels)}
        if result.labels is not None:
            metrics_path = path.with_suffix(".metrics.json")
            metrics_path.write_text(
                json.dumps({"auprc": result.auprc if result.auprc is not None else "NA"}, indent=2),
                encoding="utf-8",
            )
            paths["metrics"] = metrics_path
        return paths

    def evaluate_packing(
        self,
        document: PackingDocument,
        csv_path: Path,
        label_column: str,
        anomaly_value: Optional[str] = None
    ) -> Tuple[PackingCostReport, InterpretabilityReport]:
        """
        在带标签的 CSV 上重新计算已保存 packing 的描述长度与可解释性指标

        坐标按文档中的归一化记录缩放，成员关系由椭球重新判定，
        与文档中保存的训练集成员无关

        Args:
            document: packing 文档
            csv_path: 带标签的 CSV
            label_column: 标签列
            anomaly_value: 异常标签值

        Returns:
            (编码代价报告, 可解释性报告)

        Raises:
            SchemaError: CSV 缺少 packing 中的特征
            DatasetError: 缺少标签列或标签只有一类
        """
        names, record = normalization_record(document)
        raw, labels = read_feature_matrix(csv_path, names, label_column, anomaly_value)
        if labels is None:
            raise DatasetError(f"缺少标签列: {label_column}", "missing_label_column", column=label_column)

        points = apply_normalization(raw, record)
        packs = [make_pack(p.key, p.params, points, labels) for p in packs_from_document(document)]
        # 超出训练范围的坐标只影响成员判定，统计用的数据集裁剪到 [0, 1]
        dataset = LabeledDataset(
            points=np.clip(points, 0.0, 1.0),
            is_anomaly=labels,
            feature_names=names,
            normalization_record=record,
            normalized=True,
        )
        params = EncodingParams(
            d=dataset.d, m=dataset.m, a=dataset.a,
            log2_f=document.encoding.log2_f,
            full_shape_cost=self.settings.full_shape_cost,
        )
        self.logger.info(f"评估 {len(packs)} 个 pack: m={dataset.m}, 异常点 {dataset.a}")
        return description_length(packs, dataset, params), interpretability_report(packs, dataset)

    def cross_validate_detection(self, dataset: LabeledDataset, folds: int) -> List[Optional[float]]:
        """
        分层交叉验证：每折在训练集上解释，在测试集上计算 AUPRC

        归一化在划分前对全数据集做一次

        Args:
            dataset: 数据集
            folds: 折数

        Returns:
            每折的 AUPRC；训练集没有得到 pack 的折记为 None
        """
        dataset = normalize(dataset)
        values: List[Optional[float]] = []
        splits = stratified_folds(dataset, folds, self.settings.seed)
        for index, (train, test) in enumerate(splits):
            self.logger.info(f"第 {index + 1}/{len(splits)} 折: 训练 {train.size}, 测试 {test.size}")
            if not dataset.is_anomaly[train].any() or dataset.is_anomaly[train].all():
                self.logger.warning(f"第 {index + 1} 折的训练集只有一类点，跳过")
                values.append(None)
                continue
            result = self.explain(dataset.subset(train))
            labels = dataset.is_anomaly[test]
            if not result.packing or not labels.any():
                values.append(None)
                continue
            values.append(auprc(score_points(result.packing, dataset.points[test]), labels))
        return values
