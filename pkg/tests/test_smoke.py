"""
Smoke tests - quick validation that basic functionality works.
These tests should run fast and validate core imports and basic functionality.
"""

import math

import pytest

from kato_toolkit.config import Config, MonteCarloConfig, SearchConfig, ToleranceConfig, get_config


@pytest.mark.smoke
class TestImports:
    """Test that all imports work correctly."""

    def test_high_level_api_imports(self):
        """Test high-level API imports."""
        from kato_toolkit import b0, classify_measure, exit_time, feynman_kac_at, kato_profile

        assert callable(classify_measure), "classify_measure should be importable"
        assert callable(kato_profile), "kato_profile should be importable"
        assert callable(b0), "b0 should be importable"
        assert callable(feynman_kac_at), "feynman_kac_at should be importable"
        assert callable(exit_time), "exit_time should be importable"

    def test_module_imports(self):
        """Test module-level operations."""
        from kato_toolkit.forms import dirichlet_eigenvalues, stollmann_voigt_check
        from kato_toolkit.kernels import green_kernel, heat_kernel, psi
        from kato_toolkit.potentials import classify, local_kato_profile

        for fn in (green_kernel, heat_kernel, psi, classify, local_kato_profile,
                   dirichlet_eigenvalues, stollmann_voigt_check):
            assert callable(fn), f"{fn.__name__} should be callable"

    def test_api_layer_imports(self):
        """Test API layer imports."""
        from kato_toolkit.api import ClassificationBuilder, kernel_for, path_config

        assert ClassificationBuilder is not None, "ClassificationBuilder should be importable"
        assert callable(kernel_for), "kernel_for should be importable"
        assert callable(path_config), "path_config should be importable"

    def test_cli_imports(self):
        """The typer app and the exit protocol load."""
        from kato_toolkit.cli import ExitCode, app

        assert app is not None, "CLI app should be importable"
        assert [int(c) for c in ExitCode] == [0, 1, 2, 3], "exit codes should be 0..3"

    def test_version(self):
        import kato_toolkit

        assert kato_toolkit.__version__ == "0.1.0"


@pytest.mark.smoke
class TestConfiguration:
    """Test configuration functionality."""

    def test_defaults(self):
        """Default tolerances and search limits."""
        config = Config()
        assert config.tolerances.rel_tol == 1e-6, "default relative tolerance should be 1e-6"
        assert config.tolerances.plateau_rel == 0.10
        assert config.monte_carlo.paths == 100_000
        assert config.threads == 1

    def test_env_overrides(self, monkeypatch):
        """KATO_* variables reach the config."""
        monkeypatch.setenv("KATO_SEED", "99")
        monkeypatch.setenv("KATO_PATHS", "500")
        monkeypatch.setenv("KATO_THREADS", "3")
        monkeypatch.setenv("KATO_LOG_LEVEL", " DEBUG ")
        config = get_config()
        assert config.seed == 99, "seed should come from KATO_SEED"
        assert config.monte_carlo.paths == 500, "paths should come from KATO_PATHS"
        assert config.threads == 3
        assert config.log_level == "DEBUG", "log level should be stripped"

    def test_invalid_values_rejected(self):
        with pytest.raises(ValueError):
            ToleranceConfig(rel_tol=0.0)
        with pytest.raises(ValueError):
            MonteCarloConfig(paths=0)
        with pytest.raises(ValueError):
            SearchConfig(refine_top=0)

    def test_angular_nodes_fallback(self):
        """Dimensions above 3 reuse the d=3 resolution."""
        tol = ToleranceConfig()
        assert tol.nodes_for(2) == 64
        assert tol.nodes_for(5) == tol.nodes_for(3)


@pytest.mark.smoke
class TestUtilities:
    """Formatting and record helpers."""

    def test_format_float(self):
        from kato_toolkit.utils import format_float

        assert format_float(math.inf) == "inf"
        assert format_float(-math.inf) == "-inf"
        assert format_float(1 / 3) == "0.333333", "six significant digits"
        assert format_float(None) == ""
        assert format_float(7) == "7"

    def test_render_csv_is_deterministic(self):
        from kato_toolkit.utils import render_csv

        text = render_csv(["r", "phi"], [[0.5, 1.0], [0.1, math.inf]])
        assert text == "r,phi\n0.5,1\n0.1,inf\n"

    def test_dumps_record_maps_infinity(self):
        from kato_toolkit.utils import dumps_record, loads_record

        record = loads_record(dumps_record({"b": math.inf, "a": [1.0, 2]}))
        assert record == {"a": [1.0, 2], "b": "inf"}

    def test_configuration_error_carries_path(self):
        from kato_toolkit.utils import ConfigurationError, ToolkitError

        err = ConfigurationError("must be positive", "monte_carlo.paths")
        assert isinstance(err, ToolkitError)
        assert err.field_path == "monte_carlo.paths"
        assert str(err) == "monte_carlo.paths: must be positive"

    def test_format_duration(self):
        from kato_toolkit.utils import format_duration

        assert format_duration(3725) == "1h 2m 5s"
        assert format_duration(0) == "0s"

    def test_parallel_map_keeps_order(self):
        from kato_toolkit.utils import parallel_map

        assert parallel_map(lambda x: x * x, [3, 1, 2], workers=3) == [9, 1, 4]

    def test_setup_logging_falls_back_to_info(self, tmp_path):
        import logging

        from kato_toolkit.utils import setup_logging

        log_file = tmp_path / "logs" / "run.log"
        logger = setup_logging("chatty", str(log_file))
        assert logger.level == logging.INFO, "unknown level names fall back to INFO"
        assert len(logger.handlers) == 2
        logging.getLogger("kato_toolkit.stochastic").warning("censored paths")
        for handler in logger.handlers:
            handler.flush()
        assert "kato_toolkit.stochastic - WARNING - censored paths" in log_file.read_text()
        setup_logging("WARNING")
        assert len(logger.handlers) == 1, "reconfiguring replaces the handlers"

    def test_progress_tracker_counts(self, caplog):
        import logging

        from kato_toolkit.utils import ProgressTracker

        tracker = ProgressTracker(4, "Paths", every=2)
        with caplog.at_level(logging.INFO, logger="kato_toolkit.utils"):
            for _ in range(4):
                tracker.update()
            tracker.complete()
        assert tracker.done == 4
        assert any("Paths: 4/4 (100%)" in r.getMessage() for r in caplog.records)
        assert "peak memory" in caplog.records[-1].getMessage()
