"""
Functional acceptance runs.
Closed-form oracles, class thresholds, embedding dichotomy and Monte Carlo checks end to end.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from kato_toolkit import (
    b0,
    classify_measure,
    compactness_study,
    embedding_spectrum,
    exit_time,
    feynman_kac_at,
    ground_state_energy,
    kato_profile,
)
from kato_toolkit.config import Config, MonteCarloConfig
from kato_toolkit.forms import assemble_local, stollmann_voigt_check
from kato_toolkit.geometry import Domain, MeasureSpec
from kato_toolkit.kernels import (
    ProcessKind,
    ProcessSpec,
    green_kernel,
    green_radial,
    heat_kernel_radial,
    psi,
    resolvent_kernel,
)
from kato_toolkit.potentials import ChenOutcome, chen_condition_check
from kato_toolkit.profiles import Verdict
from kato_toolkit.quadrature import unit_sphere_area


def mc_config(base: Config, paths: int, dt: float, seed: int = 2024) -> Config:
    return base.model_copy(update={"monte_carlo": MonteCarloConfig(paths=paths, dt=dt, batch_size=10_000),
                                   "seed": seed})


@pytest.mark.functional
class TestKernelOracles:
    """Closed forms and semigroup identities."""

    @pytest.mark.parametrize("r", [0.0, 0.5, 1.0, 3.0])
    def test_resolvent_d1(self, r):
        got = resolvent_kernel(ProcessSpec.brownian(1), 1.0, [0.0], [r]).value
        assert got == pytest.approx(math.exp(-math.sqrt(2.0) * r) / math.sqrt(2.0), rel=1e-6)

    @pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
    def test_newtonian_green(self, r):
        got = green_kernel(ProcessSpec.brownian(3), [0.0] * 3, [r, 0.0, 0.0]).value
        assert got == pytest.approx(1.0 / (2.0 * math.pi * r), rel=1e-6)

    @pytest.mark.slow
    @pytest.mark.parametrize("spec", [ProcessSpec.brownian(1), ProcessSpec.stable(1.0, 1), ProcessSpec.stable(1.5, 1),
                                      ProcessSpec.relativistic(1.0, 1.0, 1)],
                             ids=lambda s: s.label)
    def test_chapman_kolmogorov_grid(self, spec):
        """|p_{t+s}(r) - int p_s(z) p_t(r - z) dz| <= 1e-3 p_{t+s}(r) on a 3x3x3 grid."""
        # relativistic densities decay exponentially
        reach = 20.0 if spec.kind == ProcessKind.RELATIVISTIC else math.inf
        for t in (0.25, 0.5, 1.0):
            for s in (0.25, 0.5, 1.0):
                for r in (0.0, 0.5, 1.5):
                    f = lambda z: heat_kernel_radial(spec, s, abs(z)).value * heat_kernel_radial(spec, t, abs(r - z)).value
                    lhs = sum(integrate.quad(f, a, b, limit=400, epsabs=1e-13)[0]
                              for a, b in ((-reach, 0.0), (0.0, r), (r, r + reach)) if a != b)
                    rhs = heat_kernel_radial(spec, s + t, r).value
                    assert abs(lhs - rhs) <= 1e-3 * rhs, f"{spec.label} t={t} s={s} r={r}: {lhs} vs {rhs}"

    @pytest.mark.parametrize("spec", [ProcessSpec.brownian(1), ProcessSpec.stable(1.0, 1),
                                      ProcessSpec.stable(1.5, 2), ProcessSpec.stable(1.5, 3),
                                      ProcessSpec.relativistic(1.0, 1.0, 1)],
                             ids=lambda s: s.label)
    def test_sub_markov(self, spec):
        d = spec.dimension
        for t in (0.5, 1.0, 2.0):
            f = lambda r: unit_sphere_area(d) * r ** (d - 1) * heat_kernel_radial(spec, t, r).value
            mass = integrate.quad(f, 0.0, 1.0, limit=400)[0] + integrate.quad(f, 1.0, math.inf, limit=400)[0]
            assert mass <= 1.0 + 1e-6, f"{spec.label}: mass {mass} at t={t}"
            assert mass == pytest.approx(1.0, abs=1e-4), "catalogued processes are conservative"

    @pytest.mark.parametrize("d, alpha", [(1, 1.0), (2, 0.5), (3, 1.5)])
    def test_psi_suite(self, d, alpha):
        assert psi(0.0, d, alpha) == 1.0
        grid = np.linspace(0.0, 20.0, 50)
        values = [psi(float(r), d, alpha) for r in grid]
        assert all(a >= b for a, b in zip(values, values[1:])), "Psi is nonincreasing"
        band = [psi(float(r), d, alpha) * math.exp(r) / (1.0 + r ** ((d + alpha - 1.0) / 2.0))
                for r in np.geomspace(0.1, 20.0, 30)]
        assert max(band) / min(band) <= 10.0, f"Psi(r) e^r / (1 + r^((d+alpha-1)/2)) leaves a factor-10 band"


@pytest.mark.functional
class TestKatoThresholds:
    """Local Kato profiles against catalogued thresholds."""

    @pytest.mark.parametrize("p, expected", [(1.0, Verdict.IN), (2.0, Verdict.IN), (2.75, Verdict.IN),
                                             (3.0, Verdict.OUT), (3.5, Verdict.OUT)])
    def test_brownian_lebesgue_ball(self, quick_config, p, expected):
        profile = kato_profile("brownian:d=3", "lebesgue:ball(0,1)", p, config=quick_config)
        assert profile.verdict == expected, f"p={p}: {profile.values}"
        if p == 1.0:
            assert profile.fitted_exponent == pytest.approx(2.0, abs=0.1)

    @pytest.mark.parametrize("p, expected", [(1.0, Verdict.IN), (1.75, Verdict.IN),
                                             (2.0, Verdict.OUT), (2.5, Verdict.OUT)])
    def test_brownian_sphere_surface(self, quick_config, p, expected):
        profile = kato_profile("brownian:d=3", "sphere:r=1,d=3", p, config=quick_config)
        assert profile.verdict == expected, f"p={p}: {profile.values}"

    @pytest.mark.parametrize("p", [1.0, 4.0, 16.0])
    def test_stable_d1_every_p(self, quick_config, p):
        """d < alpha: the 1-resolvent is bounded and every p is in."""
        profile = kato_profile("stable:alpha=1.5,d=1", "lebesgue:box(-1,1)", p, config=quick_config)
        assert profile.verdict == Verdict.IN

    @pytest.mark.parametrize("p, expected", [(1.5, Verdict.IN), (2.5, Verdict.OUT)])
    def test_cauchy_d2(self, quick_config, p, expected):
        profile = kato_profile("stable:alpha=1,d=2", "lebesgue:ball(0,1)", p, config=quick_config)
        assert profile.verdict == expected

    @pytest.mark.slow
    def test_implication_audit(self, quick_config):
        runs = [
            ("brownian:d=3", "lebesgue:ball(0,1)", 1.0),
            ("brownian:d=3", "lebesgue:ball(0,1)", 2.0),
            ("brownian:d=3", "lebesgue:ball(0,1)", 3.5),
            ("brownian:d=3", "sphere:r=1,d=3", 1.0),
            ("brownian:d=3", "sphere:r=1,d=3", 2.5),
            ("brownian:d=3", "atoms:0;0;0@1", 1.0),
            ("stable:alpha=1,d=2", "lebesgue:ball(0,1)", 1.5),
            ("stable:alpha=1,d=2", "lebesgue:ball(0,1)", 2.5),
            ("stable:alpha=1,d=2", "sphere:r=1,d=2", 1.0),
            ("stable:alpha=1.5,d=1", "lebesgue:box(-1,1)", 1.0),
            ("stable:alpha=1.5,d=1", "lebesgue:box(-1,1)", 4.0),
            ("relativistic:alpha=1,m=1,d=3", "lebesgue:ball(0,1)", 1.0),
        ]
        violations = []
        for process, measure, p in runs:
            report = classify_measure(process, measure, p, chen=False, config=quick_config)
            violations += [f"{process} {measure} p={p}: {w}" for w in report.warnings]
        assert len(runs) >= 12
        assert violations == [], violations

    @pytest.mark.slow
    def test_chen_bound_for_small_balls(self, search):
        """Worst subset of mass delta is a ball of radius rho with value rho / pi for G^2."""
        measure_ball = Domain.ball([0.0] * 3, 1.0)
        mu = MeasureSpec.lebesgue(measure_ball)
        G = green_radial(ProcessSpec.brownian(3))
        delta = 1e-3
        bound = (3.0 * delta / (4.0 * math.pi)) ** (1.0 / 3.0) / math.pi
        holds = chen_condition_check(G, 2.0, mu, 2.0 * bound, measure_ball, delta, search)
        violated = chen_condition_check(G, 2.0, mu, 0.5 * bound, measure_ball, delta, search)
        assert holds.outcome == ChenOutcome.HOLDS, f"worst {holds.worst_value} on {holds.worst_subset}"
        assert violated.outcome == ChenOutcome.VIOLATED


@pytest.mark.functional
class TestFormsAcceptance:
    """Stollmann-Voigt margins and the embedding dichotomy."""

    @pytest.mark.parametrize("p", [1.0, 2.0])
    def test_stollmann_voigt_random(self, rng, p):
        for domain, h in ((Domain.interval(0.0, 1.0), 1 / 64), (Domain.box([0.0, 0.0], [1.0, 1.0]), 1 / 16)):
            form = assemble_local(domain, h)
            tests = [rng.standard_normal(form.size) for _ in range(200)]
            report = stollmann_voigt_check(form, p, tests)
            assert report.min_margin >= -1e-8, f"{domain.kind.value}: {report.min_margin}"

    def test_stollmann_voigt_sine(self):
        form = assemble_local(Domain.interval(0.0, 1.0), 1 / 128)
        report = stollmann_voigt_check(form, 1.0, [np.sin(math.pi * form.nodes[:, 0])])
        assert report.margins[0] == pytest.approx(math.pi ** 2 / 16.0 - 0.5, rel=2e-2)

    @pytest.mark.slow
    def test_embedding_dichotomy(self, quick_config):
        horn = compactness_study("horn:exp,rate=1,d=2", k=20, config=quick_config)
        strip = compactness_study("strip:w=1,d=2", k=20, config=quick_config)
        assert horn.verdict == Verdict.IN, f"horn changes {horn.changes}"
        assert strip.verdict == Verdict.OUT, f"strip changes {strip.changes}, counts {strip.counts}"
        assert horn.verdict != strip.verdict

    def test_b0_agrees_with_embedding(self, quick_config):
        assert b0("horn:exp,rate=1,d=2", config=quick_config).verdict == Verdict.IN
        assert b0("strip:w=1,d=2", config=quick_config).verdict == Verdict.OUT

    def test_interval_singular_values(self, quick_config):
        report = embedding_spectrum("interval(0,1)", k=5, config=quick_config)
        expected = [math.sqrt(2.0) / (k * math.pi) for k in range(1, 6)]
        np.testing.assert_allclose(report.values, expected, rtol=1e-2)


@pytest.mark.functional
@pytest.mark.slow
class TestMonteCarlo:
    """Exit times and Feynman-Kac decay."""

    @pytest.mark.parametrize("process, domain, x0, expected", [
        ("brownian:d=3", "ball(0,1)", [0.0, 0.0, 0.0], 1.0 / 3.0),
        ("brownian:d=1", "interval(-1,1)", [0.0], 1.0),
    ])
    def test_exit_times(self, quick_config, process, domain, x0, expected):
        est = exit_time(process, domain, x0, config=mc_config(quick_config, 100_000, 1e-3))
        assert est.value == pytest.approx(expected, rel=2e-2), f"{est.value} +- {est.standard_error}"

    def test_stable_exit_time_scaling(self, quick_config):
        """E_0 tau_{(-r, r)} scales like r^alpha; slope of log E against log r over r in {0.5, 1, 2}."""
        cfg = mc_config(quick_config, 20_000, 5e-4)
        radii = [0.5, 1.0, 2.0]
        means = [exit_time("stable:alpha=1.5,d=1", f"interval({-r:g},{r:g})", [0.0], config=cfg).value
                 for r in radii]
        exponent = np.polyfit(np.log(radii), np.log(means), 1)[0]
        assert exponent == pytest.approx(1.5, rel=5e-2), f"exit means {means}"

    @pytest.mark.parametrize("c, t", [(0.5, 1.0), (1.0, 2.0)])
    def test_constant_potential(self, quick_config, c, t):
        est = feynman_kac_at("brownian:d=2", f"constant,scale={c}", t, [0.0, 0.0], config=quick_config)
        assert abs(est.value - math.exp(-c * t)) <= 3.0 * est.standard_error + 1e-12

    @pytest.mark.parametrize("d, expected", [(1, 0.5), (2, 1.0)])
    def test_harmonic_ground_state(self, quick_config, d, expected):
        rate = ground_state_energy(f"brownian:d={d}", "harmonic", (1.0, 2.0, 4.0, 8.0),
                                   config=mc_config(quick_config, 100_000, 1e-2))
        assert rate.rate == pytest.approx(expected, rel=5e-2), f"{rate.rate} +- {rate.standard_error}"
