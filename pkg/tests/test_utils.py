"""
工具模块测试
"""
import logging

from anomaly_pattern_explainer.refine import FeatureRule, Signature
from anomaly_pattern_explainer.utils import format_pack_block, format_report, get_logger, setup_logger, sig4


def _rule(name: str, lower: float, upper: float, degenerate: bool = False) -> FeatureRule:
    return FeatureRule(
        feature=0,
        name=name,
        center=(lower + upper) / 2,
        radius=(upper - lower) / 2,
        lower=lower,
        upper=upper,
        raw_center=(lower + upper) / 2,
        raw_lower=lower,
        raw_upper=upper,
        degenerate=degenerate,
    )


class TestFormatting:
    def test_sig4(self):
        assert sig4(3.14159) == "3.142"
        assert sig4(123456.0) == "1.235e+05"

    def test_pack_block(self):
        signature = Signature(rules=(_rule("age", 20.0, 30.0), _rule("bmi", 25.0, 25.0, True)), mass=12, impurity=1)

        block = format_pack_block(1, "r0-a0-l0", signature, 55.5)

        lines = block.splitlines()
        assert lines[0] == "Pack 1 [r0-a0-l0]  mass=12  impurity=1  bits=55.5"
        assert lines[1] == "  age ∈ [20, 30]"
        assert lines[2].endswith("(退化)")

    def test_empty_report(self):
        text = format_report(["header"], [], [4, 9])

        assert "best_K = 0" in text
        assert "离群点 (2): 4, 9" in text
        assert text.endswith("\n")

    def test_truncates_outliers(self):
        text = format_report(["header"], ["block"], list(range(60)), max_outliers=3)

        assert "0, 1, 2, ... (共 60 个)" in text


class TestLogger:
    def test_setup_replaces_handlers(self, tmp_path):
        logger = setup_logger(log_dir=tmp_path, log_level="DEBUG", file_output=True)
        again = setup_logger(log_dir=tmp_path, log_level="WARNING")

        assert logger is again
        assert len(again.handlers) == 1
        assert again.level == logging.WARNING
        assert any(p.suffix == ".log" for p in tmp_path.iterdir())

    def test_get_logger_returns_package_logger(self):
        assert get_logger().name == "anomaly_pattern_explainer"
