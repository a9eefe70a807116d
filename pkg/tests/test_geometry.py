"""
Geometry tests - domains, measures, exact volumes and B0 profiles.
"""

import math

import numpy as np
import pytest

from kato_toolkit.geometry import (
    Domain,
    MeasureSpec,
    PotentialFunction,
    b0_profile,
    ball_mass,
    ball_volume,
    boundary_distance,
    domain_volume,
    integrate,
    max_distance,
    membership,
    restricted,
    sample,
)
from kato_toolkit.profiles import Verdict
from kato_toolkit.utils import GeometryError, SamplingError


@pytest.mark.unit
class TestDomains:
    """Membership, distances and derived metadata."""

    def test_ball_is_open(self):
        """Boundary points are excluded."""
        ball = Domain.ball([0.0, 0.0], 1.0)
        assert membership(ball, [0.5, 0.0]), "interior point should be inside"
        assert not membership(ball, [1.0, 0.0]), "boundary point should be outside"

    def test_dimension_mismatch_raises(self):
        """A 3-d point cannot be tested against a 2-d domain."""
        with pytest.raises(GeometryError):
            membership(Domain.ball([0.0, 0.0], 1.0), [0.0, 0.0, 0.0])

    def test_invalid_box_rejected(self):
        """lo must be below hi on every axis."""
        with pytest.raises(ValueError):
            Domain.box([0.0, 1.0], [1.0, 0.5])

    def test_bounded_metadata(self, domains):
        """Balls and boxes are bounded, strips and horns are not."""
        assert domains["unit_ball3"].bounded and domains["unit_ball3"].circumradius == pytest.approx(1.0)
        assert domains["unit_square"].bounded
        assert not domains["strip"].bounded, "a 2-d strip is unbounded"
        assert not domains["horn"].bounded, "a horn is unbounded"

    def test_boundary_distance_closed_forms(self, domains):
        """Distances to the complement for ball, box and strip."""
        assert boundary_distance(domains["unit_ball3"], [0.25, 0.0, 0.0]) == pytest.approx(0.75)
        assert boundary_distance(domains["unit_square"], [0.25, 0.5]) == pytest.approx(0.25)
        assert boundary_distance(domains["strip"], [100.0, 0.1]) == pytest.approx(0.4)
        assert boundary_distance(domains["unit_ball3"], [2.0, 0.0, 0.0]) == 0.0, "outside points have distance 0"

    def test_max_distance(self, domains):
        assert max_distance(domains["unit_ball3"], [0.0, 0.0, 0.0]) == pytest.approx(1.0)
        assert math.isinf(max_distance(domains["strip"], [0.0, 0.0]))

    def test_complement_and_union(self):
        """Set operations compose membership."""
        ring = Domain.intersection([Domain.ball([0.0, 0.0], 2.0), Domain.complement(Domain.ball([0.0, 0.0], 1.0))])
        assert membership(ring, [1.5, 0.0]), "point of the annulus should be inside"
        assert not membership(ring, [0.5, 0.0]), "point of the hole should be outside"
        both = Domain.union([Domain.ball([0.0, 0.0], 1.0), Domain.ball([3.0, 0.0], 1.0)])
        assert membership(both, [3.2, 0.0])
        assert both.bounded

    def test_sublevel_domain(self):
        """{|x|^2/2 <= 2} is the closed ball of radius 2."""
        sub = Domain.sublevel(2, PotentialFunction(name="harmonic"), 2.0)
        assert sub.bounded and sub.circumradius == pytest.approx(2.0)
        assert membership(sub, [1.9, 0.0])
        assert not membership(sub, [2.1, 0.0])


@pytest.mark.unit
class TestVolumes:
    """Exact and sliced volumes of D intersected with balls."""

    def test_unit_ball_volume(self, domains):
        assert domain_volume(domains["unit_ball3"]) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-8)

    def test_square_quarter_disc(self, domains):
        """A disc of radius 1/2 at a corner of the unit square covers a quarter disc."""
        assert ball_volume(domains["unit_square"], [0.0, 0.0], 0.5) == pytest.approx(math.pi / 16.0, rel=1e-6)

    def test_strip_slab(self, domains):
        """Unit ball centered in a width-1 strip: the slab |x_2| < 1/2 of the disc."""
        expected = 2.0 * (0.5 * math.sqrt(0.75) + math.asin(0.5))
        assert ball_volume(domains["strip"], [0.0, 0.0], 1.0) == pytest.approx(expected, rel=1e-6)

    def test_horn_volume(self, domains):
        """int_0^inf 2 e^{-s} ds = 2."""
        assert domain_volume(domains["horn"]) == pytest.approx(2.0, rel=1e-6)

    def test_infinite_volume(self, domains):
        assert math.isinf(domain_volume(domains["strip"]))


@pytest.mark.unit
class TestMeasures:
    """Integration, ball masses, restriction and sampling."""

    def test_lebesgue_mass(self, measures):
        assert measures["lebesgue_ball3"].total_mass() == pytest.approx(4.0 * math.pi / 3.0, rel=1e-8)

    def test_sphere_mass(self, measures):
        assert measures["sphere3"].total_mass() == pytest.approx(4.0 * math.pi, rel=1e-12)

    def test_local_dimensions(self, measures):
        """d in the interior, d-1 on the sphere, 0 at an atom."""
        assert measures["lebesgue_ball3"].local_dimension([0.0, 0.0, 0.0]) == 3.0
        assert measures["sphere3"].local_dimension([1.0, 0.0, 0.0]) == 2.0
        assert measures["atoms3"].local_dimension([0.0, 0.0, 0.0]) == 0.0
        assert math.isinf(measures["sphere3"].local_dimension([0.0, 0.0, 0.0])), "center is off the sphere"

    def test_growth_dimensions(self, measures, domains):
        """Volume growth of mu(B_R(0)) as R grows."""
        assert MeasureSpec.lebesgue(Domain.full(3)).growth_dimension() == 3.0
        assert MeasureSpec.lebesgue(domains["strip"]).growth_dimension() == 1.0
        assert measures["lebesgue_ball3"].growth_dimension() == 0.0
        assert measures["atoms3"].growth_dimension() == 0.0

    def test_integrate_constant(self, measures):
        """int 1 dmu over the unit ball."""
        res = integrate(measures["lebesgue_ball3"], lambda y: np.ones(len(y)))
        assert res.value == pytest.approx(4.0 * math.pi / 3.0, rel=1e-6)

    def test_ball_mass_of_atoms(self):
        mu = MeasureSpec.point_masses([([0.0], 2.0), ([3.0], 1.0)])
        assert ball_mass(mu, [0.0], 1.0) == pytest.approx(2.0)
        assert ball_mass(mu, [1.5], 2.0) == pytest.approx(3.0)

    def test_restricted_mass(self, measures):
        """Lebesgue on B_1 restricted to B_{1/2}."""
        half = restricted(measures["lebesgue_ball3"], Domain.ball([0.0, 0.0, 0.0], 0.5))
        assert half.total_mass() == pytest.approx(4.0 * math.pi / 24.0, rel=1e-6)

    def test_sampling_is_reproducible(self, measures):
        """Same stream seed, same sample; total weight estimates the mass."""
        a = sample(measures["lebesgue_ball3"], 2000, np.random.default_rng(3))
        b = sample(measures["lebesgue_ball3"], 2000, np.random.default_rng(3))
        np.testing.assert_array_equal(a.points, b.points)
        assert np.all(np.linalg.norm(a.points, axis=1) < 1.0), "samples should lie in the support"

    def test_infinite_mass_needs_envelope(self):
        with pytest.raises(SamplingError):
            sample(MeasureSpec.lebesgue(Domain.full(2)), 10, np.random.default_rng(0))


@pytest.mark.unit
class TestB0Profiles:
    """B0 membership of unbounded domains."""

    def test_strip_is_not_b0(self, domains, search):
        """Unit balls always meet a fixed area of the strip."""
        profile = b0_profile(domains["strip"], [2.0, 4.0, 8.0, 16.0, 32.0], search)
        assert profile.verdict == Verdict.OUT, f"strip should be OUT, got {profile.values}"

    def test_exponential_horn_is_b0(self, domains, search):
        profile = b0_profile(domains["horn"], [2.0, 4.0, 8.0, 16.0, 32.0], search)
        assert profile.verdict == Verdict.IN, f"horn should be IN, got {profile.values}"

    def test_bounded_domain_is_b0(self, domains, search):
        profile = b0_profile(domains["unit_disc"], [2.0, 4.0, 8.0], search)
        assert profile.verdict == Verdict.IN
        assert profile.values[-1] == 0.0
