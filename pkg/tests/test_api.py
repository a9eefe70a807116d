"""
API tests - high-level calls with shorthand, the classification builder and kernel selection.
"""

import math

import numpy as np
import pytest

from kato_toolkit.api import (
    ClassificationBuilder,
    b0,
    classify_measure,
    compactness_study,
    embedding_spectrum,
    exit_time,
    feynman_kac_at,
    kernel_for,
    path_config,
    potential_at,
)
from kato_toolkit.kernels import ProcessSpec, resolvent_kernel
from kato_toolkit.potentials import MeasureClass
from kato_toolkit.profiles import Verdict
from kato_toolkit.utils import ConfigurationError, KernelError


@pytest.mark.unit
class TestHighLevel:
    """One call per question, shorthand text in."""

    def test_potential_at_ball_center(self, quick_config):
        res = potential_at("brownian:d=3", "lebesgue:ball(0,1)", [0, 0, 0], config=quick_config)
        assert res.value == pytest.approx(1.0, rel=1e-6)

    def test_b0_dichotomy(self, quick_config):
        strip = b0("strip:w=1,d=2", config=quick_config)
        horn = b0("horn:exp,rate=1,d=2", config=quick_config)
        assert strip.verdict == Verdict.OUT, "a strip keeps unit mass near every far point"
        assert horn.verdict == Verdict.IN, "an exponential horn thins out"

    def test_embedding_spectrum_interval(self, quick_config):
        report = embedding_spectrum("interval(0,1)", k=3, config=quick_config)
        assert report.kind == "singular_values"
        expected = [math.sqrt(2.0) / (k * math.pi) for k in (1, 2, 3)]
        np.testing.assert_allclose(report.values, expected, rtol=1e-3)

    def test_embedding_spectrum_jump_process(self, quick_config):
        report = embedding_spectrum("interval(-1,1)", k=3, process="stable:alpha=1,d=1", config=quick_config)
        assert len(report.values) == 3
        assert report.values == sorted(report.values, reverse=True) and report.values[-1] > 0

    def test_embedding_spectrum_needs_bounded_domain(self, quick_config):
        with pytest.raises(ConfigurationError) as exc:
            embedding_spectrum("strip:w=1,d=2", config=quick_config)
        assert exc.value.field_path == "domain"

    def test_feynman_kac_constant(self, quick_config):
        est = feynman_kac_at("brownian:d=1", "constant,scale=1", 1.0, [0.0], config=quick_config)
        assert est.value == pytest.approx(math.exp(-1.0), rel=1e-10)
        assert est.n == 4000 and est.seed == 2024

    def test_exit_time_interval(self, quick_config):
        est = exit_time("brownian:d=1", "interval(-1,1)", [0.0], config=quick_config)
        assert est.value == pytest.approx(1.0, rel=8e-2), f"E_0 tau = 1, got {est.value}"

    def test_compactness_study_of_interval_is_flat(self, quick_config):
        """A bounded domain is its own truncation: the singular values never move."""
        study = compactness_study("interval(0,1)", k=2, lengths=[1.0, 2.0], config=quick_config)
        assert study.changes == [pytest.approx(0.0, abs=1e-12)]
        assert study.verdict == Verdict.IN


@pytest.mark.unit
class TestClassificationBuilder:
    """Step-by-step classification runs."""

    def test_missing_process(self, quick_config):
        with pytest.raises(ConfigurationError) as exc:
            ClassificationBuilder(quick_config).measure("atoms:0@1").run()
        assert exc.value.field_path == "process"

    def test_missing_measure(self, quick_config):
        with pytest.raises(ConfigurationError) as exc:
            ClassificationBuilder(quick_config).process("brownian:d=1").resolved()
        assert exc.value.field_path == "measure"

    def test_exponent_below_one(self, quick_config):
        with pytest.raises(ConfigurationError) as exc:
            ClassificationBuilder(quick_config).exponent(0.5)
        assert exc.value.field_path == "p"

    def test_resolved_parses_measure_in_process_dimension(self, quick_config):
        spec, mu = (ClassificationBuilder(quick_config)
                    .process("brownian:d=3")
                    .measure("lebesgue:ball(0,1)")
                    .resolved())
        assert spec == ProcessSpec.brownian(3)
        assert mu.dimension == 3

    def test_dirac_mass_is_not_kato(self, quick_config):
        report = (ClassificationBuilder(quick_config)
                  .process("brownian:d=3")
                  .measure("atoms:0;0;0@1")
                  .radii(local=[1e-3, 1e-2, 1e-1], tail=[2.0, 4.0, 8.0])
                  .ladder([1.0, 4.0, 16.0])
                  .with_chen(False)
                  .run())
        assert report.verdicts[MeasureClass.S_K.value] == Verdict.OUT
        assert report.verdicts[MeasureClass.S_D0.value] == Verdict.OUT
        assert report.verdicts[MeasureClass.ZHAO.value] == Verdict.OUT
        assert report.warnings == [], f"implications should hold: {report.warnings}"
        assert "Chen search skipped" in report.notes

    def test_classify_measure_wrapper(self, quick_config):
        report = classify_measure("brownian:d=3", "atoms:0;0;0@1", chen=False, config=quick_config)
        assert report.verdicts[MeasureClass.S_K.value] == Verdict.OUT
        assert report.p == 1.0


@pytest.mark.unit
class TestLowLevel:
    """Kernel selection and path settings."""

    def test_kernel_for_transient_uses_green(self, processes):
        handle = kernel_for(processes["brownian3"])
        assert float(handle(np.array([1.0]))[0]) == pytest.approx(1.0 / (2.0 * math.pi))

    def test_kernel_for_recurrent_uses_r1(self, processes):
        handle = kernel_for(processes["brownian1"])
        expected = resolvent_kernel(processes["brownian1"], 1.0, [0.0], [1.0]).value
        assert float(handle(np.array([1.0]))[0]) == pytest.approx(expected, rel=1e-9)

    def test_kernel_for_order_zero_on_recurrent(self, processes):
        with pytest.raises(KernelError):
            kernel_for(processes["brownian2"], 0.0)

    def test_path_config_from_toolkit_config(self, quick_config):
        cfg = path_config("brownian:d=2", "ball(0,1)", config=quick_config)
        assert cfg.paths == 4000 and cfg.dt == 1e-2 and cfg.seed == 2024
        assert cfg.domain.radius == 1.0 and cfg.domain.dimension == 2
