"""
Utility modules for anomaly pattern explainer
"""
from .logger import setup_logger, get_logger
from .format_utils import sig4, format_rule_line, format_pack_block, format_report

__all__ = [
    'setup_logger',
    'get_logger',
    'sig4',
    'format_rule_line',
    'format_pack_block',
    'format_report',
]
