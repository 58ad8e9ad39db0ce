import json
import math
from unittest.mock import patch

import pytest

from sgc_core.config import Config
from sgc_core.utils import (
    BackendNotFoundError,
    GraphFormatError,
    SoftClusteringError,
    SolverError,
    clamp,
    ensure_dir,
    round_binary,
    safe_ratio,
    write_json,
)


class TestNumericHelpers:
    """Test rounding and ratio helpers"""

    def test_round_binary(self):
        assert round_binary(0.9999999) == 1
        assert round_binary(1e-9) == 0
        assert round_binary(1.2) == 1
        assert round_binary(-0.3) == 0

    def test_fractional_binary_warns(self, caplog):
        assert round_binary(0.6, "y_0_0") == 1
        assert "y_0_0" in caplog.text

    def test_clamp(self):
        assert clamp(1.0000001, 0.0, 1.0) == 1.0
        assert clamp(-1e-9, 0.0, 1.0) == 0.0
        assert clamp(0.5, 0.0, 1.0) == 0.5

    @pytest.mark.parametrize(
        "numerator, denominator, expected",
        [(3.0, 6.0, 0.5), (0.0, 0.0, 0.0), (2.0, 0.0, math.inf)],
    )
    def test_safe_ratio(self, numerator, denominator, expected):
        assert safe_ratio(numerator, denominator) == expected


class TestErrors:
    """Test the exception hierarchy"""

    def test_hierarchy(self):
        assert issubclass(BackendNotFoundError, SolverError)
        assert issubclass(SolverError, SoftClusteringError)

    def test_graph_format_line(self):
        error = GraphFormatError("bad weight", line=4)
        assert error.line == 4
        assert str(error) == "line 4: bad weight"
        assert GraphFormatError("empty").line is None


class TestFileHelpers:
    """Test output directory and JSON helpers"""

    def test_ensure_dir_creates_parents(self, tmp_path):
        target = ensure_dir(tmp_path / "a" / "b")
        assert target.is_dir()

    def test_write_json_sorted(self, tmp_path):
        path = write_json({"b": 1, "a": [1, 2]}, tmp_path / "out.json")
        text = path.read_text()
        assert text.index('"a"') < text.index('"b"')
        assert json.loads(text) == {"a": [1, 2], "b": 1}


class TestConfig:
    """Test configuration defaults and environment overrides"""

    def test_defaults(self):
        with patch.dict("os.environ", {}, clear=True):
            cfg = Config()
        assert cfg.solver.backend == "cbc"
        assert cfg.solver.time_limit == 600.0
        assert cfg.defaults.k == 3
        assert cfg.defaults.break_symmetry
        assert cfg.sweep.steps == 10
        assert cfg.connectivity.max_rounds == 10

    def test_environment_overrides(self):
        env = {
            "SGC_BACKEND": "HiGHS",
            "SGC_SOLVER_PATH": "/opt/highs/bin/highs",
            "SGC_TIME_LIMIT": "30",
            "SGC_THREADS": "4",
            "SGC_BATCH_WORKERS": "2",
            "SGC_BREAK_SYMMETRY": "off",
            "LOG_LEVEL": "debug",
        }
        with patch.dict("os.environ", env, clear=True):
            cfg = Config()
        assert cfg.solver.backend == "highs"
        assert cfg.solver.executable == "/opt/highs/bin/highs"
        assert cfg.solver.time_limit == 30.0
        assert cfg.solver.threads == 4
        assert cfg.batch.workers == 2
        assert not cfg.defaults.break_symmetry
        assert cfg.logging.level == "DEBUG"

    def test_to_dict(self):
        data = Config().to_dict()
        assert set(data) == {"solver", "defaults", "connectivity", "sweep", "batch", "tolerance", "logging"}
