"""
Shorthand tests - text forms of processes, domains, measures and potentials.
"""

import math

import pytest

from kato_toolkit.geometry import Domain, DomainKind, MeasureKind, PotentialFunction
from kato_toolkit.kernels import ProcessKind, ProcessSpec
from kato_toolkit.shorthand import (
    describe,
    parse_domain,
    parse_measure,
    parse_potential,
    parse_process,
)
from kato_toolkit.utils import ConfigurationError


@pytest.mark.unit
class TestProcessShorthand:
    """brownian / stable / relativistic text forms."""

    def test_parse_each_family(self):
        assert parse_process("brownian:d=3") == ProcessSpec.brownian(3)
        assert parse_process("stable:alpha=1.5,d=1") == ProcessSpec.stable(1.5, 1)
        rel = parse_process("relativistic:alpha=1,m=0.5,d=2")
        assert rel.kind == ProcessKind.RELATIVISTIC and rel.mass == 0.5

    def test_describe_is_reversible(self, processes):
        for name, spec in processes.items():
            assert parse_process(describe(spec)) == spec, f"{name} should survive describe/parse"

    def test_mapping_form(self):
        spec = parse_process({"kind": "stable", "dimension": 2, "alpha": 1.0})
        assert spec == ProcessSpec.stable(1.0, 2)

    def test_alpha_out_of_range_points_at_process(self):
        with pytest.raises(ConfigurationError) as exc:
            parse_process("stable:alpha=2.5,d=1")
        assert exc.value.field_path == "process", "error should name the process field"

    def test_missing_alpha(self):
        with pytest.raises(ConfigurationError) as exc:
            parse_process("stable:d=2")
        assert exc.value.field_path == "process.alpha"

    def test_unknown_family(self):
        with pytest.raises(ConfigurationError, match="unknown process"):
            parse_process("levy:d=1")

    def test_unknown_parameter(self):
        with pytest.raises(ConfigurationError, match="unknown parameter"):
            parse_process("brownian:d=2,alpha=1")


@pytest.mark.unit
class TestDomainShorthand:
    """Call forms and keyword forms of domains."""

    def test_ball_with_broadcast_center(self):
        ball = parse_domain("ball(0,1)", 3)
        assert ball.kind == DomainKind.BALL
        assert ball.center == [0.0, 0.0, 0.0] and ball.radius == 1.0

    def test_ball_dimension_suffix(self):
        assert parse_domain("ball(0,2):d=2") == Domain.ball([0.0, 0.0], 2.0)

    def test_box_and_interval(self):
        assert parse_domain("box(0;0,1;2)") == Domain.box([0.0, 0.0], [1.0, 2.0])
        assert parse_domain("interval(-1,1)") == Domain.interval(-1.0, 1.0)

    def test_strip_axis_defaults_to_last(self):
        strip = parse_domain("strip:w=1,d=2")
        assert strip.axis == 2 and strip.width == 1.0

    def test_horn(self):
        horn = parse_domain("horn:exp,rate=2,d=2")
        assert horn.kind == DomainKind.HORN
        assert horn.profile.name == "exp" and horn.profile.rate == 2.0

    def test_sublevel(self):
        sub = parse_domain("sublevel:harmonic,M=2,d=2")
        assert sub.bounded and sub.circumradius == pytest.approx(2.0)

    def test_full_needs_dimension(self):
        with pytest.raises(ConfigurationError, match="dimension is missing"):
            parse_domain("full")
        assert parse_domain("full", 2).dimension == 2

    def test_conflicting_dimension(self):
        with pytest.raises(ConfigurationError) as exc:
            parse_domain("strip:w=1,d=2", 3)
        assert exc.value.field_path == "domain.d"

    def test_describe_round_trip(self, domains):
        for name, domain in domains.items():
            assert parse_domain(describe(domain)) == domain, f"{name} should survive describe/parse"

    def test_invalid_box_reports_domain(self):
        with pytest.raises(ConfigurationError) as exc:
            parse_domain("box(1,0):d=1")
        assert exc.value.field_path == "domain"

    def test_composite_has_no_text_form(self):
        union = Domain.union([Domain.ball([0.0], 1.0), Domain.ball([3.0], 1.0)])
        with pytest.raises(ConfigurationError, match="mapping form"):
            describe(union)


@pytest.mark.unit
class TestMeasureShorthand:
    """Lebesgue, density, sphere and atomic measures."""

    def test_lebesgue_on_ball(self):
        mu = parse_measure("lebesgue:ball(0,1)", 3)
        assert mu.kind == MeasureKind.LEBESGUE
        assert mu.total_mass() == pytest.approx(4.0 * math.pi / 3.0)
        assert mu.label == "lebesgue:ball(0,1)", "label keeps the text"

    def test_sphere(self):
        mu = parse_measure("sphere:r=2,d=3")
        assert mu.kind == MeasureKind.SPHERE_SURFACE
        assert mu.total_mass() == pytest.approx(16.0 * math.pi)

    def test_atoms(self):
        mu = parse_measure("atoms:0;0@1,1;0@0.5")
        assert mu.dimension == 2
        assert mu.total_mass() == pytest.approx(1.5)

    def test_density(self):
        mu = parse_measure("density:exp_radial,rate=1:full", 2)
        assert mu.kind == MeasureKind.DENSITY
        assert mu.density.name == "exp_radial"

    def test_describe_round_trip(self, measures):
        mu = measures["sphere3"]
        again = parse_measure(describe(mu))
        assert again.center == mu.center and again.radius == mu.radius

    def test_unknown_measure(self):
        with pytest.raises(ConfigurationError, match="unknown measure"):
            parse_measure("counting:full", 1)

    def test_atom_dimension_mismatch(self):
        with pytest.raises(ConfigurationError):
            parse_measure("atoms:0;0;0@1", 2)


@pytest.mark.unit
class TestPotentialShorthand:
    """Potential text forms and callables."""

    def test_named_potentials(self):
        assert parse_potential("harmonic") == PotentialFunction(name="harmonic")
        const = parse_potential("constant,scale=2")
        assert const.name == "constant" and const.scale == 2.0
        assert parse_potential("axis_power,axis=2").axis == 2

    def test_callable_becomes_custom(self):
        V = parse_potential(lambda pts: pts[:, 0] ** 2)
        assert V.name == "custom"
        assert float(V([[3.0, 0.0]])[0]) == 9.0

    def test_describe_round_trip(self):
        V = PotentialFunction(name="radial_power", scale=0.5, rate=4.0)
        assert parse_potential(describe(V)) == V

    def test_invalid_name(self):
        with pytest.raises(ConfigurationError) as exc:
            parse_potential("cubic")
        assert exc.value.field_path.startswith("potential")

    def test_unsupported_type(self):
        with pytest.raises(ConfigurationError, match="cannot build a potential"):
            parse_potential(3.0)
