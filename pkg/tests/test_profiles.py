"""
Decay profile tests - fits and the three-way verdict rule.
"""

import math

import pytest

from kato_toolkit.profiles import Approach, DecayProfile, Verdict, decide_verdict, fit_decay


LOCAL = [1e-4, 1e-3, 1e-2, 1e-1, 0.5]
TAIL = [2.0, 4.0, 8.0, 16.0, 32.0]


@pytest.mark.unit
class TestVerdictRule:
    """IN / OUT / INCONCLUSIVE from the tail of the sequence."""

    def test_power_decay_is_in(self):
        """phi(r) = r^2 falls fast toward r -> 0."""
        profile = DecayProfile.build(LOCAL, [r * r for r in LOCAL], Approach.ZERO)
        assert profile.verdict == Verdict.IN, f"r^2 should be IN, got {profile.verdict}"
        assert profile.fit_kind == "power"
        assert profile.fitted_exponent == pytest.approx(2.0, abs=1e-9)

    def test_plateau_is_out(self):
        profile = DecayProfile.build(LOCAL, [1.0, 1.02, 1.05, 1.3, 2.0], Approach.ZERO)
        assert profile.verdict == Verdict.OUT, "values settling near 1 should be OUT"

    def test_growth_is_out(self):
        profile = DecayProfile.build(TAIL, [0.1, 0.2, 0.5, 1.0, 3.0], Approach.INFINITY)
        assert profile.verdict == Verdict.OUT

    def test_infinite_limit_is_out(self):
        profile = DecayProfile.build(LOCAL, [math.inf, 5.0, 2.0, 1.0, 0.5], Approach.ZERO)
        assert profile.verdict == Verdict.OUT, "an infinite value at the limit end should be OUT"

    def test_zero_limit_is_in(self):
        profile = DecayProfile.build(TAIL, [1.0, 0.5, 0.0, 0.0, 0.0], Approach.INFINITY)
        assert profile.verdict == Verdict.IN

    def test_slow_decay_is_inconclusive(self):
        """Halving every step but still far above 1e-3 of the first value."""
        profile = DecayProfile.build(TAIL, [1.0, 0.8, 0.5, 0.3, 0.2], Approach.INFINITY)
        assert profile.verdict == Verdict.INCONCLUSIVE

    def test_short_profile_is_inconclusive(self):
        profile = DecayProfile.build([1.0, 2.0], [1.0, 0.5], Approach.INFINITY)
        assert profile.verdict == Verdict.INCONCLUSIVE

    def test_abs_factor_is_respected(self):
        values = [1.0, 0.5, 0.1, 0.03, 0.01]
        loose = DecayProfile(abscissae=TAIL, values=values, approach=Approach.INFINITY)
        assert decide_verdict(loose, abs_factor=0.05) == Verdict.IN
        assert decide_verdict(loose, abs_factor=1e-3) == Verdict.INCONCLUSIVE


@pytest.mark.unit
class TestFits:
    """Power and exponential decay fits."""

    def test_exponential_fit_toward_infinity(self):
        values = [math.exp(-1.5 * R) for R in TAIL]
        exponent, kind, r2 = fit_decay(TAIL, values, Approach.INFINITY)
        assert kind == "exponential", "exp(-1.5 R) should fit better as an exponential"
        assert exponent == pytest.approx(1.5, rel=1e-9)
        assert r2 == pytest.approx(1.0)

    def test_power_fit_toward_infinity(self):
        values = [R ** -3.0 for R in TAIL]
        exponent, kind, _ = fit_decay(TAIL, values, Approach.INFINITY)
        assert kind == "power"
        assert exponent == pytest.approx(-3.0, rel=1e-9)

    def test_fit_needs_two_positive_values(self):
        assert fit_decay(TAIL, [0.0, 0.0, 0.0, math.inf, 1.0], Approach.INFINITY) == (None, None, None)


@pytest.mark.unit
class TestProfileModel:
    """Validation and ordering."""

    def test_build_sorts_abscissae(self):
        profile = DecayProfile.build([0.5, 0.1, 0.01], [1.0, 0.1, 0.01])
        assert profile.abscissae == [0.01, 0.1, 0.5]
        assert profile.values == [0.01, 0.1, 1.0]

    def test_toward_limit_orders_from_far_to_near(self):
        profile = DecayProfile(abscissae=[0.1, 0.5], values=[1.0, 2.0], approach=Approach.ZERO)
        assert profile.toward_limit() == [(0.5, 2.0), (0.1, 1.0)]

    def test_negative_values_rejected(self):
        with pytest.raises(ValueError):
            DecayProfile(abscissae=[0.1, 0.2], values=[1.0, -1.0])

    def test_infinity_strings_parse(self):
        """Records store infinities as 'inf'."""
        profile = DecayProfile(abscissae=[0.1, 0.2], values=["inf", 1.0])
        assert math.isinf(profile.values[0])

    def test_record_round_trip(self):
        profile = DecayProfile.build(LOCAL, [r for r in LOCAL], label="phi")
        again = DecayProfile.model_validate(profile.model_dump())
        assert again == profile
