"""
命令行界面
"""
import json
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Iterator, List, Optional
import logging

import click
import numpy as np
import pandas as pd
from pydantic import ValidationError
from rich.console import Console
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from . import __version__
from .config import Settings, load_settings
from .dataset import load_csv
from .errors import InputError, PackingError
from .generators import SynthConfig, generate_synthetic
from .packing_io import load_document
from .processor import PackingPipeline
from .utils.format_utils import sig4
from .utils.logger import get_logger, setup_logger

console = Console()


def _parse_floats(value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError as e:
        raise click.BadParameter(f"需要逗号分隔的数字: {value}") from e


def _init_logger(settings: Settings) -> logging.Logger:
    return setup_logger(
        log_dir=settings.log_dir,
        log_level=settings.log_level,
        file_output=settings.log_to_file,
    )


@contextmanager
def _exit_on_error(logger: Optional[logging.Logger] = None) -> Iterator[None]:
    """把 PackingError 转换为带诊断信息的退出码"""
    try:
        yield
    except PackingError as e:
        console.print(f"[red]✗ {e.message}[/red]")
        if e.details:
            console.print(f"[dim]{e.details}[/dim]")
        (logger or get_logger()).error(f"[{e.stage}/{e.error_type}] {e.message}", exc_info=True)
        sys.exit(e.exit_code)


@click.group()
@click.version_option(version=__version__)
def cli():
    """异常模式解释器 - 用 MDL 选出的超椭球概括异常点"""
    pass


@cli.command()
@click.argument('input_csv', type=click.Path(path_type=Path))
@click.option('--label-column', required=True, help='标签列名')
@click.option('--anomaly-value', default='1', show_default=True, help='表示异常的标签值')
@click.option('--config', 'config_file', type=click.Path(exists=True, path_type=Path), help='JSON 配置文件')
@click.option('--output-dir', type=click.Path(path_type=Path), help='输出目录')
@click.option('--quantiles', help='分位数，逗号分隔，如 80,85,90,95')
@click.option('--mass-threshold', type=int, help='质量阈值 ms')
@click.option('--purity-threshold', type=int, help='纯度阈值 mu')
@click.option('--log2-f', type=float, help='每个坐标的编码比特数')
@click.option('--vicinity-margin', type=float, help='邻域扩展倍数')
@click.option('--level-cap', type=int, help='格搜索最高层数')
@click.option('--k-cap', type=int, help='K 的扫描上限')
@click.option('--seed', type=int, help='随机种子')
@click.option('--workers', type=int, help='并行线程数')
@click.option('--full-shape-cost', is_flag=True, default=None, help='按满矩阵计算形状代价')
@click.option('--debug-lattice', is_flag=True, default=None, help='输出每层格的 JSON')
def explain(
    input_csv: Path,
    label_column: str,
    anomaly_value: str,
    config_file: Optional[Path],
    quantiles: Optional[str],
    **overrides
):
    """
    解释 INPUT_CSV 中的异常点

    输出 packing.json、cost.csv 和 report.txt
    """
    with _exit_on_error():
        settings = load_settings(config_file, quantiles=_parse_floats(quantiles), **overrides)
    logger = _init_logger(settings)

    with _exit_on_error(logger):
        dataset = load_csv(input_csv, label_column, anomaly_value)
        pipeline = PackingPipeline(settings=settings, logger=logger)

        with Progress(
            SpinnerColumn(),
            TextColumn("[progress.description]{task.description}"),
            console=console,
            transient=True
        ) as progress:
            progress.add_task("[cyan]搜索异常模式...", total=None)
            result = pipeline.explain(dataset)
        paths = pipeline.write_outputs(result)

    report = result.cost_report
    if report.K == 0:
        console.print("[yellow]未发现可压缩的模式 (best_K = 0)[/yellow]")
    else:
        table = Table(title=f"选出 {report.K} 个 pack")
        table.add_column("pack")
        table.add_column("规则")
        table.add_column("mass", justify="right")
        table.add_column("impurity", justify="right")
        table.add_column("bits", justify="right")
        for pack, signature, bits in zip(result.packing, result.signatures, report.per_pack_bits):
            rules = "\n".join(
                f"{r.name} ∈ [{sig4(r.raw_lower)}, {sig4(r.raw_upper)}]" for r in signature.rules
            )
            table.add_row(pack.key, rules, str(pack.mass), str(pack.impurity), sig4(bits))
        console.print(table)

    console.print(
        f"编码长度 [bold]{sig4(report.total_bits)}[/bold] bits, "
        f"朴素编码 {sig4(report.naive_bits)} bits, 节省 [green]{sig4(report.savings_percent)}%[/green]"
    )
    for name, path in paths.items():
        console.print(f"  - {name}: {path}")


@cli.command()
@click.argument('packing_json', type=click.Path(path_type=Path))
@click.argument('input_csv', type=click.Path(path_type=Path))
@click.option('--label-column', help='标签列名（可选）')
@click.option('--anomaly-value', default='1', show_default=True, help='表示异常的标签值')
@click.option('--output', type=click.Path(path_type=Path), help='scores.csv 路径')
@click.option('--config', 'config_file', type=click.Path(exists=True, path_type=Path), help='JSON 配置文件')
def detect(
    packing_json: Path,
    input_csv: Path,
    label_column: Optional[str],
    anomaly_value: str,
    output: Optional[Path],
    config_file: Optional[Path]
):
    """用 PACKING_JSON 给 INPUT_CSV 打分"""
    with _exit_on_error():
        settings = load_settings(config_file)
    logger = _init_logger(settings)

    with _exit_on_error(logger):
        pipeline = PackingPipeline(settings=settings, logger=logger)
        document = load_document(packing_json)
        result = pipeline.detect(document, input_csv, label_column, anomaly_value)
        paths = pipeline.write_detection(result, output or settings.output_dir / "scores.csv")

    console.print(f"[green]✓ {len(result.scores)} 个点, 判为异常 {int(result.flags.sum())}[/green]")
    if result.labels is not None:
        console.print(f"AUPRC: {sig4(result.auprc) if result.auprc is not None else 'NA'}")
    for name, path in paths.items():
        console.print(f"  - {name}: {path}")


@cli.command()
@click.option('--m', 'm', type=int, default=2000, show_default=True, help='总点数')
@click.option('--d', 'd', type=int, default=20, show_default=True, help='特征数')
@click.option('--num-packs', type=int, default=3, show_default=True, help='植入模式数')
@click.option('--max-pack-dim', type=int, default=3, show_default=True, help='模式子空间最大维度')
@click.option('--anomaly-fraction', type=float, default=0.1, show_default=True, help='异常点比例')
@click.option('--range-width', type=float, default=0.1, show_default=True, help='植入区间宽度')
@click.option('--seed', type=int, default=0, show_default=True, help='随机种子')
@click.option('--output', type=click.Path(path_type=Path), required=True, help='输出 CSV 路径')
def synth(output: Path, **fields):
    """生成带植入模式的合成数据"""
    logger = get_logger()
    with _exit_on_error(logger):
        try:
            config = SynthConfig(**fields)
        except ValidationError as e:
            raise InputError("合成数据配置不合法", "synth", "invalid_config", str(e)) from e
        dataset, planted = generate_synthetic(config)

        output.parent.mkdir(parents=True, exist_ok=True)
        frame = pd.DataFrame(dataset.points, columns=list(dataset.feature_names))
        frame["label"] = dataset.is_anomaly.astype(int)
        frame.to_csv(output, index=False)
        truth_path = output.with_suffix(".truth.json")
        truth_path.write_text(
            json.dumps(
                {"config": config.model_dump(), "packs": [p.to_dict() for p in planted]},
                indent=2,
            ),
            encoding="utf-8",
        )

    console.print(f"[green]✓ 已生成 m={dataset.m}, d={dataset.d}, 异常点 {dataset.a}[/green]")
    console.print(f"  - data: {output}")
    console.print(f"  - truth: {truth_path}")


@cli.command()
@click.argument('packing_json', type=click.Path(path_type=Path))
@click.argument('input_csv', type=click.Path(path_type=Path))
@click.option('--label-column', required=True, help='标签列名')
@click.option('--anomaly-value', default='1', show_default=True, help='表示异常的标签值')
@click.option('--folds', type=int, default=0, show_default=True, help='交叉验证折数（>= 2 时启用）')
@click.option('--output', type=click.Path(path_type=Path), help='metrics.json 路径')
@click.option('--config', 'config_file', type=click.Path(exists=True, path_type=Path), help='JSON 配置文件')
def metrics(
    packing_json: Path,
    input_csv: Path,
    label_column: str,
    anomaly_value: str,
    folds: int,
    output: Optional[Path],
    config_file: Optional[Path]
):
    """计算 PACKING_JSON 在 INPUT_CSV 上的编码与可解释性指标"""
    with _exit_on_error():
        settings = load_settings(config_file)
    logger = _init_logger(settings)

    with _exit_on_error(logger):
        pipeline = PackingPipeline(settings=settings, logger=logger)
        document = load_document(packing_json)
        cost, interpretability = pipeline.evaluate_packing(document, input_csv, label_column, anomaly_value)
        payload = {"cost": cost.to_dict(), "interpretability": interpretability.to_dict()}

        if folds >= 2:
            dataset = load_csv(input_csv, label_column, anomaly_value)
            values = pipeline.cross_validate_detection(dataset, folds)
            valid = [v for v in values if v is not None]
            payload["cross_validation"] = {
                "folds": [v if v is not None else "NA" for v in values],
                "mean_auprc": float(np.mean(valid)) if valid else "NA",
            }

        path = Path(output or settings.output_dir / "metrics.json")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, ensure_ascii=False), encoding="utf-8")

    table = Table(title="指标")
    table.add_column("指标")
    table.add_column("值", justify="right")
    table.add_row("K", str(interpretability.num_packs))
    table.add_row("平均规则长度", sig4(interpretability.avg_rule_length))
    table.add_row("平均例外比例", sig4(interpretability.avg_impurity_fraction))
    table.add_row("平均区间宽度", sig4(interpretability.avg_interval_width))
    table.add_row("节省 (%)", sig4(cost.savings_percent))
    if "cross_validation" in payload:
        mean = payload["cross_validation"]["mean_auprc"]
        table.add_row("平均 AUPRC", mean if isinstance(mean, str) else sig4(mean))
    console.print(table)
    console.print(f"  - metrics: {path}")


@cli.command()
@click.option('--config', 'config_file', type=click.Path(exists=True, path_type=Path), help='JSON 配置文件')
def check(config_file: Optional[Path]):
    """检查环境配置"""
    console.print("[bold]检查环境配置...[/bold]\n")
    with _exit_on_error():
        settings = load_settings(config_file)
    console.print("[green]✓ 配置加载成功[/green]\n")

    table = Table(title="有效配置")
    table.add_column("字段")
    table.add_column("值")
    for name, value in settings.model_dump().items():
        table.add_row(name, str(value))
    table.add_row("effective_workers", str(settings.effective_workers))
    console.print(table)

    for module in ("numpy", "scipy", "pandas"):
        try:
            version = __import__(module).__version__
            console.print(f"[green]✓ {module} {version}[/green]")
        except ImportError:
            console.print(f"[red]✗ 缺少依赖: {module}[/red]")

    console.print("\n[bold green]环境检查完成！[/bold green]")


def main():
    """主入口"""
    cli()


if __name__ == '__main__':
    main()
