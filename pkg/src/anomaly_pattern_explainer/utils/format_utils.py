"""
报告格式化工具模块
"""
from typing import List, Sequence

from ..refine import Signature


def sig4(value: float) -> str:
    """保留 4 位有效数字"""
    return f"{value:.4g}"


def format_rule_line(name: str, lower: float, upper: float) -> str:
    """
    单条规则：name ∈ [lower, upper]

    Args:
        name: 特征名
        lower: 原始单位下界
        upper: 原始单位上界

    Returns:
        格式化后的行
    """
    return f"  {name} ∈ [{sig4(lower)}, {sig4(upper)}]"


def format_pack_block(index: int, key: str, signature: Signature, bits: float) -> str:
    """一个 pack 的报告块"""
    header = (
        f"Pack {index} [{key}]  mass={signature.mass}  "
        f"impurity={signature.impurity}  bits={sig4(bits)}"
    )
    lines = [header]
    for rule in signature.rules:
        line = format_rule_line(rule.name, rule.raw_lower, rule.raw_upper)
        if rule.degenerate:
            line += "  (退化)"
        lines.append(line)
    return "\n".join(lines)


def format_report(
    header_lines: Sequence[str],
    blocks: Sequence[str],
    outlier_ids: Sequence[int],
    max_outliers: int = 50
) -> str:
    """
    拼接完整报告

    Args:
        header_lines: 概要行
        blocks: 各 pack 的报告块（已按 mass 降序）
        outlier_ids: 离群点 ID
        max_outliers: 最多列出的离群点数

    Returns:
        报告文本（以换行结尾）
    """
    parts: List[str] = ["\n".join(header_lines)]
    if blocks:
        parts.extend(blocks)
    else:
        parts.append("未发现可压缩的模式 (best_K = 0)")

    shown = ", ".join(str(i) for i in outlier_ids[:max_outliers])
    if len(outlier_ids) > max_outliers:
        shown += f", ... (共 {len(outlier_ids)} 个)"
    parts.append(f"离群点 ({len(outlier_ids)}): {shown}" if outlier_ids else "离群点: 无")
    return "\n\n".join(parts) + "\n"
