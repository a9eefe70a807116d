"""
Dirichlet form tests - assembly, spectra, inequality checks and export.
"""

import math

import numpy as np
import pytest

from kato_toolkit.forms import (
    SpectralReport,
    assemble_local,
    assemble_nonlocal,
    check_symmetry,
    dirichlet_eigenvalues,
    discrete_green,
    embedding_singular_values,
    export_text,
    load_text,
    markov_contraction_check,
    near_diagonal_moment,
    nonlocal_form,
    semigroup_energy_check,
    stollmann_voigt_check,
    tightness_diagnostic,
)
from kato_toolkit.geometry import Domain
from kato_toolkit.kernels import stable_tail_constant
from kato_toolkit.profiles import Status
from kato_toolkit.utils import DiscretizationError, GeometryError


UNIT = Domain.interval(0.0, 1.0)


@pytest.mark.unit
class TestLocalAssembly:
    """Finite-difference form of (1/2) int |grad u|^2."""

    def test_energy_of_sine(self):
        """(1/2) int_0^1 (pi cos pi x)^2 dx = pi^2 / 4."""
        form = assemble_local(UNIT, 1 / 256)
        u = np.sin(math.pi * form.nodes[:, 0])
        assert form.energy(u) == pytest.approx(math.pi ** 2 / 4.0, rel=1e-2)
        assert form.norm(u) ** 2 == pytest.approx(0.5, rel=1e-3)

    def test_symmetric_and_positive(self, domains):
        form = assemble_local(domains["unit_square"], 1 / 16)
        asymmetry, lowest = check_symmetry(form, samples=50)
        assert asymmetry < 1e-8, f"energy matrix should be symmetric, got {asymmetry}"
        assert lowest > 0.0, "Dirichlet energy is positive definite"
        assert form.dirichlet_active

    def test_weights_are_cell_volumes(self, domains):
        form = assemble_local(domains["unit_square"], 1 / 16)
        np.testing.assert_allclose(form.mass_weights, 1 / 256)
        assert form.dimension == 2 and form.size == 15 * 15

    def test_coarse_grid_rejected(self):
        with pytest.raises(DiscretizationError, match="too coarse"):
            assemble_local(UNIT, 0.25)

    def test_unbounded_needs_box(self, domains):
        with pytest.raises(DiscretizationError):
            assemble_local(domains["strip"], 1 / 8)


@pytest.mark.unit
class TestNonlocalAssembly:
    """Jump-kernel forms on a grid."""

    def test_cauchy_form_on_interval(self, domains):
        form = assemble_nonlocal(1.0, 0.0, domains["interval"], 1 / 8)
        asymmetry, lowest = check_symmetry(form, samples=20)
        assert asymmetry < 1e-8 and lowest > 0.0
        assert form.kind == "nonlocal"
        assert any(note.startswith("tail weight") for note in form.notes)

    def test_relativistic_energy_below_stable(self, domains, rng):
        """Psi <= 1, so the relativistic jump weights never exceed the stable ones."""
        stable = assemble_nonlocal(1.5, 0.0, domains["interval"], 1 / 8)
        damped = assemble_nonlocal(1.5, 1.0, domains["interval"], 1 / 8)
        u = rng.standard_normal(stable.size)
        assert damped.energy(u) <= stable.energy(u) * (1.0 + 1e-9)

    def test_small_truncation_rejected(self, domains):
        with pytest.raises(DiscretizationError, match="truncation"):
            assemble_nonlocal(1.0, 0.0, domains["interval"], 1 / 8, truncation=0.5)
        with pytest.raises(DiscretizationError, match="tail weight"):
            assemble_nonlocal(1.0, 0.0, domains["interval"], 1 / 8, truncation=10.0)

    def test_alpha_range(self, domains):
        with pytest.raises(DiscretizationError):
            assemble_nonlocal(2.0, 0.0, domains["interval"], 1 / 8)

    def test_near_diagonal_moment_stable(self):
        """int_{|z|<rho} |z|^2 c |z|^{-1-alpha} dz = 2 c rho^{2-alpha}/(2-alpha) in d=1."""
        c = stable_tail_constant(1, 1.0)
        assert near_diagonal_moment(1.0, 0.0, 1, 0.1) == pytest.approx(2.0 * c * 0.1, rel=1e-12)
        assert near_diagonal_moment(1.0, 1.0, 3, 0.1) < near_diagonal_moment(1.0, 0.0, 3, 0.1)

    def test_form_without_killing_has_no_green(self):
        nodes = np.linspace(0.0, 1.0, 10)[:, None]
        form = nonlocal_form(1.0, 0.0, nodes, np.full(10, 0.1))
        assert not form.dirichlet_active
        with pytest.raises(DiscretizationError):
            discrete_green(form)
        report = stollmann_voigt_check(form, 1.0, [np.ones(10)])
        assert report.status == Status.SKIPPED and not report.holds


@pytest.mark.unit
class TestSpectra:
    """Dirichlet eigenvalues and embedding singular values."""

    def test_interval_eigenvalues(self):
        """lambda_k = (k pi)^2 / 2 on (0, 1)."""
        report = dirichlet_eigenvalues(UNIT, 3)
        expected = [(k * math.pi) ** 2 / 2.0 for k in (1, 2, 3)]
        np.testing.assert_allclose(report.values, expected, rtol=1e-3)
        assert report.converged, f"refinement should converge: {report.notes}"
        assert report.extrapolated is not None and len(report.level_values) == 3

    def test_disc_ground_state(self, domains):
        """lambda_1 = j_{0,1}^2 / 2 on the unit disc."""
        report = dirichlet_eigenvalues(domains["unit_disc"], 1)
        assert report.values[0] == pytest.approx(2.404826 ** 2 / 2.0, rel=1e-2)

    def test_singular_values(self):
        form = assemble_local(UNIT, 1 / 128)
        report = embedding_singular_values(form, 4)
        assert report.kind == "singular_values"
        assert report.values == sorted(report.values, reverse=True)
        assert report.values[0] == pytest.approx(math.sqrt(2.0) / math.pi, rel=1e-3)

    def test_too_many_modes(self):
        form = assemble_local(UNIT, 1 / 16)
        with pytest.raises(DiscretizationError):
            embedding_singular_values(form, form.size)

    def test_report_csv(self):
        report = SpectralReport(kind="eigenvalues", values=[1.0, 2.0], levels=[0.5],
                                level_values=[[1.1, 2.2]])
        lines = report.to_csv().splitlines()
        assert lines[0] == "k,value,extrapolated,h=0.5"
        assert lines[1] == "1,1,,1.1"


@pytest.mark.unit
class TestInequalities:
    """Stollmann-Voigt, Markov contraction, semigroup and tightness checks."""

    @pytest.mark.parametrize("p", [1.0, 2.0])
    def test_stollmann_voigt_random(self, rng, p):
        form = assemble_local(UNIT, 1 / 64)
        tests = [rng.standard_normal(form.size) for _ in range(50)]
        report = stollmann_voigt_check(form, p, tests)
        assert report.holds, f"min margin {report.min_margin}"
        assert report.potential_norm == pytest.approx(0.25 if p == 1 else 1 / 12, rel=5e-2)

    def test_stollmann_voigt_rejects_small_p(self):
        form = assemble_local(UNIT, 1 / 16)
        with pytest.raises(GeometryError):
            stollmann_voigt_check(form, 0.5, [np.ones(form.size)])

    def test_markov_contraction(self, rng, domains):
        local = assemble_local(domains["unit_square"], 1 / 16)
        nonlocal_ = assemble_nonlocal(1.0, 0.0, domains["interval"], 1 / 8)
        for form in (local, nonlocal_):
            for _ in range(10):
                check = markov_contraction_check(form, 3.0 * rng.standard_normal(form.size))
                assert check.holds, f"{form.label}: {check.lhs} > {check.rhs}"

    def test_semigroup_energy(self, rng):
        form = assemble_local(UNIT, 1 / 32)
        for t in (0.01, 0.1, 1.0):
            check = semigroup_energy_check(form, rng.standard_normal(form.size), t)
            assert check.holds, f"t={t}: {check.lhs} > {check.rhs}"
        with pytest.raises(GeometryError):
            semigroup_energy_check(form, np.ones(form.size), 0.0)

    def test_tightness_zero_energy(self):
        form = assemble_local(UNIT, 1 / 16)
        report = tightness_diagnostic(form, 1.0, 0.0, [1.0, 10.0])
        assert report.sups == [0.0, 0.0]

    def test_tightness_tail_vanishes_above_sup_bound(self):
        """E(u, u) <= 1 on (0, 1) forces u^2 <= 1/2, so the level 1 tail is empty."""
        form = assemble_local(UNIT, 1 / 32)
        report = tightness_diagnostic(form, 1.0, 1.0, [0.01, 1.0], samples=64, ascent_steps=10)
        assert report.sups[0] > 0.0
        assert report.sups[1] == 0.0


@pytest.mark.unit
class TestExport:
    """Plain-text dump of an assembled form."""

    def test_export_and_load(self, tmp_path, domains):
        form = assemble_local(domains["unit_square"], 1 / 16)
        path = export_text(form, tmp_path / "form.txt")
        again = load_text(path)
        assert again.size == form.size and again.kind == form.kind
        np.testing.assert_allclose(again.nodes, form.nodes)
        np.testing.assert_allclose(again.dense(), form.dense())
        np.testing.assert_array_equal(again.boundary, form.boundary)
