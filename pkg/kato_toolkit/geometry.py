"""Domains of R^d and positive measures on them.

Domains and measures are declarative pydantic models, so they serialize to the run
config; function-valued fields (horn profiles, densities, potentials) are named catalog
entries. Integration goes through the polar machinery in `quadrature`, with exact
volume formulas wherever the geometry allows them.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterator, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, PrivateAttr, field_validator, model_validator
from scipy import integrate as sp_integrate
from scipy import optimize, special

from .config import SearchConfig, ToleranceConfig
from .profiles import Approach, DecayProfile, Status, Verdict
from .quadrature import (
    integrate_segments,
    parametric_segments,
    ray_segments,
    sphere_rule,
    unit_ball_volume,
    unit_sphere_area,
)
from .utils import GeometryError, SamplingError

logger = logging.getLogger(__name__)

Point = Union[Sequence[float], np.ndarray]


# =============================================================================
# Function catalogs
# =============================================================================

class ProfileFunction(BaseModel):
    """Cross-section half-width s -> h(s) of a horn."""
    name: Literal["exp", "power", "constant", "custom"] = Field("exp", description="Catalog entry")
    scale: float = Field(1.0, gt=0, description="Value at s=0")
    rate: float = Field(1.0, ge=0, description="Decay rate (exp) or exponent (power)")
    _fn: Optional[Callable] = PrivateAttr(default=None)

    @classmethod
    def custom(cls, fn: Callable[[np.ndarray], np.ndarray]) -> "ProfileFunction":
        profile = cls(name="custom")
        profile._fn = fn
        return profile

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.name == "exp":
            return self.scale * np.exp(-self.rate * s)
        if self.name == "power":
            return self.scale * (1.0 + s) ** (-self.rate)
        if self.name == "constant":
            return np.full_like(s, self.scale)
        if self._fn is None:
            raise GeometryError("custom profile has no callable attached")
        return np.asarray(self._fn(s), dtype=float)

    def cross_section_growth(self, k: int) -> float:
        """Growth exponent at infinity of int_0^S h(s)^k ds (0 when finite)."""
        if k == 0:
            return 1.0
        if self.name == "exp":
            return 0.0 if self.rate > 0 else 1.0
        if self.name == "power":
            return max(0.0, 1.0 - self.rate * k)
        return 1.0


class DensityFunction(BaseModel):
    """Nonnegative density g of a measure g*m."""
    name: Literal["constant", "exp_radial", "power_radial", "gaussian", "custom"] = Field("constant")
    scale: float = Field(1.0, ge=0, description="Multiplicative constant")
    rate: float = Field(1.0, ge=0, description="Decay rate / exponent / inverse variance")
    center: Optional[List[float]] = Field(None, description="Center of radial densities (origin if omitted)")
    _fn: Optional[Callable] = PrivateAttr(default=None)

    @classmethod
    def custom(cls, fn: Callable[[np.ndarray], np.ndarray]) -> "DensityFunction":
        density = cls(name="custom")
        density._fn = fn
        return density

    def _radius(self, pts: np.ndarray) -> np.ndarray:
        c = np.zeros(pts.shape[-1]) if self.center is None else np.asarray(self.center, dtype=float)
        return np.linalg.norm(pts - c, axis=-1)

    def __call__(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.name == "constant":
            out = np.full(pts.shape[0], self.scale)
        elif self.name == "exp_radial":
            out = self.scale * np.exp(-self.rate * self._radius(pts))
        elif self.name == "power_radial":
            with np.errstate(divide="ignore"):
                out = self.scale * self._radius(pts) ** (-self.rate)
        elif self.name == "gaussian":
            out = self.scale * np.exp(-0.5 * self.rate * self._radius(pts) ** 2)
        else:
            if self._fn is None:
                raise GeometryError("custom density has no callable attached")
            out = np.asarray(self._fn(pts), dtype=float)
        if np.any(out < 0):
            raise GeometryError("density evaluated to a negative value")
        return out

    def decay_order(self) -> float:
        """g(y) ~ |y|^{-order} at infinity; +inf for faster than any power."""
        if self.name in ("exp_radial", "gaussian") and self.rate > 0:
            return math.inf
        if self.name == "power_radial":
            return self.rate
        return 0.0


class PotentialFunction(BaseModel):
    """Nonnegative potential V used by Schrodinger semigroups and sublevel domains."""
    name: Literal["constant", "harmonic", "radial_power", "axis_power", "custom"] = Field("harmonic")
    scale: float = Field(1.0, ge=0, description="Multiplicative constant")
    rate: float = Field(2.0, gt=0, description="Exponent of the power potentials")
    axis: int = Field(1, ge=1, description="Coordinate (1-based) of axis_power")
    _fn: Optional[Callable] = PrivateAttr(default=None)

    @classmethod
    def custom(cls, fn: Callable[[np.ndarray], np.ndarray]) -> "PotentialFunction":
        potential = cls(name="custom")
        potential._fn = fn
        return potential

    def __call__(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.name == "constant":
            return np.full(pts.shape[0], self.scale)
        if self.name == "harmonic":
            return 0.5 * self.scale * np.sum(pts ** 2, axis=-1)
        if self.name == "radial_power":
            return self.scale * np.linalg.norm(pts, axis=-1) ** self.rate
        if self.name == "axis_power":
            return self.scale * np.abs(pts[..., self.axis - 1]) ** self.rate
        if self._fn is None:
            raise GeometryError("custom potential has no callable attached")
        return np.asarray(self._fn(pts), dtype=float)

    def sublevel_radius(self, level: float) -> Optional[float]:
        """Radius of the ball {V <= level} for radial potentials, None when unbounded."""
        if self.name == "harmonic" and self.scale > 0:
            return math.sqrt(max(level, 0.0) * 2.0 / self.scale)
        if self.name == "radial_power" and self.scale > 0:
            return (max(level, 0.0) / self.scale) ** (1.0 / self.rate)
        if self.name == "constant" and level < self.scale:
            return 0.0
        return None


# =============================================================================
# Domains
# =============================================================================

class DomainKind(str, Enum):
    FULL = "full"
    BALL = "ball"
    BOX = "box"
    STRIP = "strip"
    HORN = "horn"
    UNION = "union"
    INTERSECTION = "intersection"
    COMPLEMENT = "complement"
    SUBLEVEL = "sublevel"


class Domain(BaseModel):
    """Open region of R^d (boundary excluded)."""
    kind: DomainKind = Field(..., description="Domain kind")
    dimension: int = Field(..., ge=1, description="Ambient dimension d")
    center: Optional[List[float]] = Field(None, description="Ball center")
    radius: Optional[float] = Field(None, gt=0, description="Ball radius")
    lo: Optional[List[float]] = Field(None, description="Box lower corner")
    hi: Optional[List[float]] = Field(None, description="Box upper corner")
    axis: Optional[int] = Field(None, ge=1, description="Strip normal coordinate (1-based)")
    width: Optional[float] = Field(None, gt=0, description="Strip width")
    profile: Optional[ProfileFunction] = Field(None, description="Horn half-width profile over x_1 > 0")
    potential: Optional[PotentialFunction] = Field(None, description="Potential of a sublevel domain")
    level: Optional[float] = Field(None, description="Level M of the sublevel set {V <= M}")
    children: List["Domain"] = Field(default_factory=list, description="Sub-domains")
    regular_hint: bool = Field(True, description="Treat every boundary point as regular")
    bounded: bool = Field(False, description="Derived: domain is bounded")
    circumradius: Optional[float] = Field(None, description="Derived: radius of a ball about 0 containing D")

    @model_validator(mode="after")
    def _validate(self) -> "Domain":
        d = self.dimension
        k = self.kind
        if k == DomainKind.BALL:
            if self.center is None or self.radius is None or len(self.center) != d:
                raise ValueError("ball needs a center of length d and a radius")
        elif k == DomainKind.BOX:
            if self.lo is None or self.hi is None or len(self.lo) != d or len(self.hi) != d:
                raise ValueError("box needs lo and hi of length d")
            if any(h <= l for l, h in zip(self.lo, self.hi)):
                raise ValueError("box needs lo < hi on every axis")
        elif k == DomainKind.STRIP:
            if self.axis is None or self.width is None or self.axis > d:
                raise ValueError("strip needs axis in 1..d and a width")
        elif k == DomainKind.HORN:
            if self.profile is None:
                raise ValueError("horn needs a profile")
        elif k in (DomainKind.UNION, DomainKind.INTERSECTION):
            if not self.children:
                raise ValueError(f"{k.value} needs children")
        elif k == DomainKind.COMPLEMENT:
            if len(self.children) != 1:
                raise ValueError("complement needs exactly one child")
        elif k == DomainKind.SUBLEVEL:
            if self.potential is None or self.level is None:
                raise ValueError("sublevel needs a potential and a level")
        if any(c.dimension != d for c in self.children):
            raise ValueError("all sub-domains must share the dimension")
        self.bounded, self.circumradius = self._bounding()
        return self

    def _bounding(self) -> Tuple[bool, Optional[float]]:
        k = self.kind
        if k == DomainKind.BALL:
            return True, float(np.linalg.norm(self.center)) + self.radius
        if k == DomainKind.BOX:
            corner = np.maximum(np.abs(self.lo), np.abs(self.hi))
            return True, float(np.linalg.norm(corner))
        if k == DomainKind.STRIP and self.dimension == 1:
            return True, self.width / 2.0
        if k == DomainKind.UNION:
            if all(c.bounded for c in self.children):
                return True, max(c.circumradius for c in self.children)
            return False, None
        if k == DomainKind.INTERSECTION:
            radii = [c.circumradius for c in self.children if c.bounded]
            return (True, min(radii)) if radii else (False, None)
        if k == DomainKind.SUBLEVEL:
            r = self.potential.sublevel_radius(self.level)
            return (True, r) if r is not None else (False, None)
        return False, None

    # ---- constructors -------------------------------------------------------

    @classmethod
    def full(cls, d: int) -> "Domain":
        return cls(kind=DomainKind.FULL, dimension=d)

    @classmethod
    def ball(cls, center: Point, radius: float) -> "Domain":
        center = [float(c) for c in center]
        return cls(kind=DomainKind.BALL, dimension=len(center), center=center, radius=float(radius))

    @classmethod
    def interval(cls, a: float, b: float) -> "Domain":
        return cls.box([a], [b])

    @classmethod
    def box(cls, lo: Point, hi: Point) -> "Domain":
        lo = [float(v) for v in lo]
        return cls(kind=DomainKind.BOX, dimension=len(lo), lo=lo, hi=[float(v) for v in hi])

    @classmethod
    def strip(cls, d: int, axis: int, width: float) -> "Domain":
        return cls(kind=DomainKind.STRIP, dimension=d, axis=axis, width=float(width))

    @classmethod
    def horn(cls, d: int, profile: ProfileFunction) -> "Domain":
        return cls(kind=DomainKind.HORN, dimension=d, profile=profile)

    @classmethod
    def union(cls, children: List["Domain"]) -> "Domain":
        return cls(kind=DomainKind.UNION, dimension=children[0].dimension, children=children)

    @classmethod
    def intersection(cls, children: List["Domain"]) -> "Domain":
        return cls(kind=DomainKind.INTERSECTION, dimension=children[0].dimension, children=children)

    @classmethod
    def complement(cls, child: "Domain") -> "Domain":
        return cls(kind=DomainKind.COMPLEMENT, dimension=child.dimension, children=[child])

    @classmethod
    def sublevel(cls, d: int, potential: PotentialFunction, level: float) -> "Domain":
        return cls(kind=DomainKind.SUBLEVEL, dimension=d, potential=potential, level=float(level))

    # ---- evaluation ---------------------------------------------------------

    def contains(self, pts) -> np.ndarray:
        """Vectorized membership for points of shape (n, d)."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if pts.shape[-1] != self.dimension:
            raise GeometryError(f"point dimension {pts.shape[-1]} != domain dimension {self.dimension}")
        k = self.kind
        if k == DomainKind.FULL:
            return np.ones(pts.shape[0], dtype=bool)
        if k == DomainKind.BALL:
            return np.linalg.norm(pts - np.asarray(self.center), axis=1) < self.radius
        if k == DomainKind.BOX:
            return np.all((pts > np.asarray(self.lo)) & (pts < np.asarray(self.hi)), axis=1)
        if k == DomainKind.STRIP:
            return np.abs(pts[:, self.axis - 1]) < 0.5 * self.width
        if k == DomainKind.HORN:
            x1 = pts[:, 0]
            lateral = np.linalg.norm(pts[:, 1:], axis=1) if self.dimension > 1 else np.zeros(len(x1))
            inside = x1 > 0
            h = self.profile(np.where(inside, x1, 0.0))
            return inside & (lateral < h)
        if k == DomainKind.UNION:
            return np.any([c.contains(pts) for c in self.children], axis=0)
        if k == DomainKind.INTERSECTION:
            return np.all([c.contains(pts) for c in self.children], axis=0)
        if k == DomainKind.COMPLEMENT:
            return ~self.children[0].contains(pts)
        return self.potential(pts) <= self.level

    def reference_point(self) -> np.ndarray:
        """Default polar center: ball/box center, otherwise the origin."""
        if self.kind == DomainKind.BALL:
            return np.asarray(self.center, dtype=float)
        if self.kind == DomainKind.BOX:
            return 0.5 * (np.asarray(self.lo) + np.asarray(self.hi))
        if self.kind in (DomainKind.UNION, DomainKind.INTERSECTION) and self.children[0].bounded:
            return self.children[0].reference_point()
        return np.zeros(self.dimension)

    def bounding_box(self, fallback: float = 4.0) -> Tuple[np.ndarray, np.ndarray]:
        d = self.dimension
        if self.kind == DomainKind.BALL:
            c = np.asarray(self.center)
            return c - self.radius, c + self.radius
        if self.kind == DomainKind.BOX:
            return np.asarray(self.lo, dtype=float), np.asarray(self.hi, dtype=float)
        if self.bounded:
            return -np.full(d, self.circumradius), np.full(d, self.circumradius)
        lo, hi = -np.full(d, fallback), np.full(d, fallback)
        if self.kind == DomainKind.STRIP:
            lo[self.axis - 1], hi[self.axis - 1] = -0.5 * self.width, 0.5 * self.width
        if self.kind == DomainKind.HORN:
            lo[0] = 0.0
            h0 = float(self.profile(np.array([0.0]))[0])
            lo[1:], hi[1:] = -max(h0, 1e-9), max(h0, 1e-9)
        return lo, hi


Domain.model_rebuild()


def membership(domain: Domain, x: Point) -> bool:
    """True iff x lies in the open domain."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != domain.dimension:
        raise GeometryError(f"point dimension {x.size} != domain dimension {domain.dimension}")
    return bool(domain.contains(x[None, :])[0])


def boundary_distance(domain: Domain, x: Point, tol: Optional[ToleranceConfig] = None) -> float:
    """Distance from x to the complement of D (0 when x is outside)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if not membership(domain, x):
        return 0.0
    k = domain.kind
    if k == DomainKind.FULL:
        return math.inf
    if k == DomainKind.BALL:
        return domain.radius - float(np.linalg.norm(x - np.asarray(domain.center)))
    if k == DomainKind.BOX:
        return float(np.min(np.minimum(x - np.asarray(domain.lo), np.asarray(domain.hi) - x)))
    if k == DomainKind.STRIP:
        return 0.5 * domain.width - abs(x[domain.axis - 1])
    if k == DomainKind.HORN and domain.dimension > 1:
        lateral = float(np.linalg.norm(x[1:]))

        def gap(t):
            return math.hypot(t - x[0], float(domain.profile(np.array([t]))[0]) - lateral)

        reach = x[0] + float(domain.profile(np.array([x[0]]))[0]) + 1.0
        best = optimize.minimize_scalar(gap, bounds=(0.0, reach), method="bounded").fun
        grid = np.linspace(0.0, reach, 512)
        coarse = min(gap(t) for t in grid)
        return float(min(x[0], best, coarse))
    tol = tol or ToleranceConfig()
    dirs, _ = sphere_rule(domain.dimension, 2 * tol.nodes_for(domain.dimension))
    rays, a, b = ray_segments(
        domain.contains, x, dirs, domain.circumradius + float(np.linalg.norm(x)) + 1.0 if domain.bounded else 0.0,
        bounded=domain.bounded, samples=tol.ray_samples, truncation=tol.truncation_radius,
    )
    first_exit = np.full(dirs.shape[0], math.inf)
    for j, aj, bj in zip(rays, a, b):
        if aj == 0.0:
            first_exit[j] = min(first_exit[j], bj)
    return float(np.min(first_exit))


def max_distance(domain: Domain, x: Point) -> float:
    """Largest distance from x to a point of a bounded domain (+inf if unbounded)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if domain.kind == DomainKind.BALL:
        return float(np.linalg.norm(x - np.asarray(domain.center))) + domain.radius
    if domain.kind == DomainKind.BOX:
        far = np.maximum(np.abs(x - np.asarray(domain.lo)), np.abs(np.asarray(domain.hi) - x))
        return float(np.linalg.norm(far))
    if domain.bounded:
        return float(np.linalg.norm(x)) + domain.circumradius
    return math.inf


# =============================================================================
# Exact volumes
# =============================================================================

def cap_volume(d: int, R: float, h: float) -> float:
    """Volume of the cap of height h of a d-ball of radius R."""
    h = min(max(h, 0.0), 2.0 * R)
    if h > R:
        return unit_ball_volume(d) * R ** d - cap_volume(d, R, 2.0 * R - h)
    x = (2.0 * R * h - h * h) / (R * R)
    return 0.5 * unit_ball_volume(d) * R ** d * float(special.betainc((d + 1) / 2.0, 0.5, x))


def lens_volume(d: int, r1: float, r2: float, dist: float) -> float:
    """Volume of B_{r1}(0) intersected with B_{r2}(z), |z| = dist."""
    if r1 <= 0 or r2 <= 0 or dist >= r1 + r2:
        return 0.0
    if dist <= abs(r1 - r2):
        return unit_ball_volume(d) * min(r1, r2) ** d
    plane = (dist * dist + r1 * r1 - r2 * r2) / (2.0 * dist)
    return cap_volume(d, r1, r1 - plane) + cap_volume(d, r2, r2 - (dist - plane))


def sphere_cap_fraction(d: int, angle: float) -> float:
    """Fraction of S^{d-1} within polar angle `angle` of a pole (d >= 2)."""
    angle = min(max(angle, 0.0), math.pi)
    if angle <= math.pi / 2:
        return 0.5 * float(special.betainc((d - 1) / 2.0, 0.5, math.sin(angle) ** 2))
    return 1.0 - sphere_cap_fraction(d, math.pi - angle)


def _box_ball_volume(lo: np.ndarray, hi: np.ndarray, r: float, rel_tol: float) -> float:
    """Volume of box [lo, hi] intersected with B_r(0)."""
    if r <= 0:
        return 0.0
    if lo.size == 1:
        return max(0.0, min(hi[0], r) - max(lo[0], -r))
    a, b = max(lo[0], -r), min(hi[0], r)
    if b <= a:
        return 0.0
    inner = lambda t: _box_ball_volume(lo[1:], hi[1:], math.sqrt(max(r * r - t * t, 0.0)), rel_tol)
    value, _ = sp_integrate.quad(inner, a, b, epsabs=0.0, epsrel=rel_tol, limit=100)
    return value


def ball_volume(domain: Domain, x: Point, r: float, tol: Optional[ToleranceConfig] = None) -> float:
    """Lebesgue measure of D intersected with the open ball B_r(x)."""
    tol = tol or ToleranceConfig()
    x = np.asarray(x, dtype=float).reshape(-1)
    d = domain.dimension
    if x.size != d:
        raise GeometryError(f"point dimension {x.size} != domain dimension {d}")
    if r <= 0:
        return 0.0
    if math.isinf(r):
        return domain_volume(domain, tol)
    k = domain.kind
    if k == DomainKind.FULL:
        return unit_ball_volume(d) * r ** d
    if k == DomainKind.BALL:
        return lens_volume(d, r, domain.radius, float(np.linalg.norm(x - np.asarray(domain.center))))
    if k == DomainKind.BOX:
        return _box_ball_volume(np.asarray(domain.lo) - x, np.asarray(domain.hi) - x, r, tol.rel_tol)
    if k == DomainKind.STRIP:
        c = x[domain.axis - 1]
        a, b = max(-0.5 * domain.width, c - r), min(0.5 * domain.width, c + r)
        if b <= a:
            return 0.0
        slab = lambda t: unit_ball_volume(d - 1) * max(r * r - (t - c) ** 2, 0.0) ** ((d - 1) / 2.0)
        value, _ = sp_integrate.quad(slab, a, b, epsabs=0.0, epsrel=tol.rel_tol, limit=100)
        return value
    if k == DomainKind.HORN:
        a, b = max(0.0, x[0] - r), x[0] + r
        if b <= a:
            return 0.0
        offset = float(np.linalg.norm(x[1:])) if d > 1 else 0.0

        def section(t):
            rho = math.sqrt(max(r * r - (t - x[0]) ** 2, 0.0))
            h = float(domain.profile(np.array([t]))[0])
            if d == 1:
                return 1.0
            if d == 2:
                return max(0.0, min(h, offset + rho) - max(-h, offset - rho))
            return lens_volume(d - 1, h, rho, offset)

        value, _ = sp_integrate.quad(section, a, b, epsabs=0.0, epsrel=tol.rel_tol, limit=200)
        return value
    if k == DomainKind.COMPLEMENT:
        return unit_ball_volume(d) * r ** d - ball_volume(domain.children[0], x, r, tol)
    if k == DomainKind.SUBLEVEL and domain.bounded and domain.potential.name in ("harmonic", "radial_power"):
        return lens_volume(d, r, domain.circumradius, float(np.linalg.norm(x)))
    # union / intersection / other sublevel sets: ray quadrature
    region = Domain.intersection([domain, Domain.ball(x, r)])
    dirs, weights = sphere_rule(d, tol.nodes_for(d))
    rays, a, b = ray_segments(region.contains, x, dirs, r, bounded=True, samples=tol.ray_samples)
    return float(np.sum(weights[rays] * (b ** d - a ** d) / d))


def domain_volume(domain: Domain, tol: Optional[ToleranceConfig] = None) -> float:
    """Lebesgue measure of D (+inf when infinite)."""
    tol = tol or ToleranceConfig()
    d = domain.dimension
    if domain.bounded:
        r = domain.circumradius * (1.0 + 1e-9) + 1e-9
        return ball_volume(domain, np.zeros(d), r, tol)
    if domain.kind == DomainKind.HORN and domain.profile.cross_section_growth(d - 1) == 0.0 and d > 1:
        section = lambda t: unit_ball_volume(d - 1) * float(domain.profile(np.array([t]))[0]) ** (d - 1)
        value, _ = sp_integrate.quad(section, 0.0, math.inf, epsabs=0.0, epsrel=tol.rel_tol, limit=200)
        return value
    return math.inf


# =============================================================================
# Measures
# =============================================================================

class MeasureKind(str, Enum):
    LEBESGUE = "lebesgue"
    DENSITY = "density"
    SPHERE_SURFACE = "sphere_surface"
    ATOMS = "atoms"
    MIXTURE = "mixture"


class Atom(BaseModel):
    point: List[float] = Field(..., description="Atom location")
    mass: float = Field(..., ge=0, description="Atom mass")


class MixtureComponent(BaseModel):
    weight: float = Field(..., ge=0, description="Mixture weight")
    measure: "MeasureSpec"


class MeasureSpec(BaseModel):
    """Positive measure on R^d."""
    kind: MeasureKind = Field(..., description="Measure kind")
    dimension: int = Field(..., ge=1, description="Ambient dimension d")
    domain: Optional[Domain] = Field(None, description="Support domain of lebesgue/density measures")
    density: Optional[DensityFunction] = Field(None, description="Density g of a density measure")
    center: Optional[List[float]] = Field(None, description="Sphere center")
    radius: Optional[float] = Field(None, gt=0, description="Sphere radius")
    atoms: List[Atom] = Field(default_factory=list, description="Point masses")
    components: List[MixtureComponent] = Field(default_factory=list, description="Mixture components")
    total_mass_hint: Optional[float] = Field(None, ge=0, description="Known total mass (+inf allowed)")
    label: str = Field("", description="Identifier used in reports")

    @field_validator("total_mass_hint", mode="before")
    @classmethod
    def _parse_inf(cls, v):
        return float(v) if isinstance(v, str) else v

    @model_validator(mode="after")
    def _validate(self) -> "MeasureSpec":
        d = self.dimension
        k = self.kind
        if k in (MeasureKind.LEBESGUE, MeasureKind.DENSITY):
            if self.domain is None:
                raise ValueError(f"{k.value} measure needs a domain")
            if self.domain.dimension != d:
                raise ValueError("measure and domain dimensions differ")
            if k == MeasureKind.DENSITY and self.density is None:
                raise ValueError("density measure needs a density")
        elif k == MeasureKind.SPHERE_SURFACE:
            if self.center is None or self.radius is None or len(self.center) != d:
                raise ValueError("sphere_surface needs a center of length d and a radius")
        elif k == MeasureKind.ATOMS:
            if any(len(a.point) != d for a in self.atoms):
                raise ValueError("atom points must have length d")
        elif k == MeasureKind.MIXTURE:
            if any(c.measure.dimension != d for c in self.components):
                raise ValueError("mixture components must share the dimension")
        return self

    # ---- constructors -------------------------------------------------------

    @classmethod
    def lebesgue(cls, domain: Domain, label: str = "") -> "MeasureSpec":
        return cls(kind=MeasureKind.LEBESGUE, dimension=domain.dimension, domain=domain, label=label)

    @classmethod
    def with_density(cls, domain: Domain, g: DensityFunction, label: str = "") -> "MeasureSpec":
        return cls(kind=MeasureKind.DENSITY, dimension=domain.dimension, domain=domain, density=g, label=label)

    @classmethod
    def sphere_surface(cls, center: Point, radius: float, label: str = "") -> "MeasureSpec":
        center = [float(c) for c in center]
        return cls(kind=MeasureKind.SPHERE_SURFACE, dimension=len(center), center=center,
                   radius=float(radius), label=label)

    @classmethod
    def point_masses(cls, atoms: Sequence[Tuple[Point, float]], dimension: Optional[int] = None,
                     label: str = "") -> "MeasureSpec":
        items = [Atom(point=[float(v) for v in np.atleast_1d(p)], mass=float(m)) for p, m in atoms]
        d = dimension if dimension is not None else len(items[0].point)
        return cls(kind=MeasureKind.ATOMS, dimension=d, atoms=items, label=label)

    @classmethod
    def mixture(cls, parts: Sequence[Tuple[float, "MeasureSpec"]], label: str = "") -> "MeasureSpec":
        comps = [MixtureComponent(weight=float(w), measure=m) for w, m in parts]
        return cls(kind=MeasureKind.MIXTURE, dimension=comps[0].measure.dimension, components=comps, label=label)

    # ---- metadata -----------------------------------------------------------

    def total_mass(self, tol: Optional[ToleranceConfig] = None) -> float:
        if self.total_mass_hint is not None:
            return self.total_mass_hint
        k = self.kind
        if k == MeasureKind.LEBESGUE:
            return domain_volume(self.domain, tol)
        if k == MeasureKind.SPHERE_SURFACE:
            return unit_sphere_area(self.dimension) * self.radius ** (self.dimension - 1)
        if k == MeasureKind.ATOMS:
            return float(sum(a.mass for a in self.atoms))
        if k == MeasureKind.MIXTURE:
            return float(sum(c.weight * c.measure.total_mass(tol) for c in self.components if c.weight > 0))
        result = integrate(self, lambda y: np.ones(len(y)), tol=tol)
        return result.value

    def local_dimension(self, x: Point, rtol: float = 1e-9) -> float:
        """Exponent a with mu(B_r(x)) ~ r^a as r -> 0 (+inf when x is off the support)."""
        x = np.asarray(x, dtype=float).reshape(-1)
        k = self.kind
        if k == MeasureKind.LEBESGUE:
            near = ball_volume(self.domain, x, 1e-6 * (1.0 + float(np.linalg.norm(x))))
            return float(self.dimension) if near > 0 else math.inf
        if k == MeasureKind.DENSITY:
            near = ball_volume(self.domain, x, 1e-6 * (1.0 + float(np.linalg.norm(x))))
            if near <= 0:
                return math.inf
            g = self.density
            c = np.zeros(self.dimension) if g.center is None else np.asarray(g.center)
            if g.name == "power_radial" and np.linalg.norm(x - c) <= rtol:
                return self.dimension - g.rate
            return float(self.dimension) if float(g(x[None, :])[0]) > 0 else math.inf
        if k == MeasureKind.SPHERE_SURFACE:
            gap = abs(float(np.linalg.norm(x - np.asarray(self.center))) - self.radius)
            return float(self.dimension - 1) if gap <= rtol * max(1.0, self.radius) else math.inf
        if k == MeasureKind.ATOMS:
            hit = any(a.mass > 0 and np.linalg.norm(x - np.asarray(a.point)) <= rtol for a in self.atoms)
            return 0.0 if hit else math.inf
        dims = [c.measure.local_dimension(x, rtol) for c in self.components if c.weight > 0]
        return min(dims) if dims else math.inf

    def min_local_dimension(self) -> float:
        """Smallest local dimension over the support."""
        k = self.kind
        if k == MeasureKind.LEBESGUE:
            return float(self.dimension)
        if k == MeasureKind.DENSITY:
            if self.density.name == "power_radial":
                return self.dimension - self.density.rate
            return float(self.dimension)
        if k == MeasureKind.SPHERE_SURFACE:
            return float(self.dimension - 1)
        if k == MeasureKind.ATOMS:
            return 0.0 if any(a.mass > 0 for a in self.atoms) else math.inf
        dims = [c.measure.min_local_dimension() for c in self.components if c.weight > 0]
        return min(dims) if dims else math.inf

    def growth_dimension(self) -> float:
        """Exponent a with mu(B_R(0)) ~ R^a as R -> infinity (0 for finite measures)."""
        k = self.kind
        if k in (MeasureKind.LEBESGUE, MeasureKind.DENSITY):
            base = _domain_growth(self.domain)
            if k == MeasureKind.DENSITY:
                base = max(0.0, base - self.density.decay_order()) if base > 0 else 0.0
            return base
        if k == MeasureKind.MIXTURE:
            dims = [c.measure.growth_dimension() for c in self.components if c.weight > 0]
            return max(dims) if dims else 0.0
        return 0.0

    def support_box(self, fallback: float = 4.0) -> Tuple[np.ndarray, np.ndarray]:
        """Axis-aligned box containing the (truncated) support."""
        k = self.kind
        if k in (MeasureKind.LEBESGUE, MeasureKind.DENSITY):
            return self.domain.bounding_box(fallback)
        if k == MeasureKind.SPHERE_SURFACE:
            c = np.asarray(self.center)
            return c - self.radius, c + self.radius
        if k == MeasureKind.ATOMS:
            pts = np.array([a.point for a in self.atoms]) if self.atoms else np.zeros((1, self.dimension))
            return pts.min(axis=0), pts.max(axis=0)
        boxes = [c.measure.support_box(fallback) for c in self.components]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)

    def is_bounded(self) -> bool:
        k = self.kind
        if k in (MeasureKind.LEBESGUE, MeasureKind.DENSITY):
            return self.domain.bounded
        if k == MeasureKind.MIXTURE:
            return all(c.measure.is_bounded() for c in self.components if c.weight > 0)
        return True


MixtureComponent.model_rebuild()
MeasureSpec.model_rebuild()


def _domain_growth(domain: Domain) -> float:
    d = domain.dimension
    k = domain.kind
    if domain.bounded:
        return 0.0
    if k in (DomainKind.FULL, DomainKind.COMPLEMENT):
        return float(d)
    if k == DomainKind.STRIP:
        return float(d - 1)
    if k == DomainKind.HORN:
        return domain.profile.cross_section_growth(d - 1)
    if k == DomainKind.UNION:
        return max(_domain_growth(c) for c in domain.children)
    if k == DomainKind.INTERSECTION:
        return min(_domain_growth(c) for c in domain.children)
    if k == DomainKind.SUBLEVEL and domain.potential.name == "axis_power":
        return float(d - 1)
    return float(d)


# =============================================================================
# Integration
# =============================================================================

@dataclass
class Singularity:
    """f(y) behaves like |y - point|^{-order} (or like a power of log(1/|y - point|))."""
    point: np.ndarray
    order: float = 0.0
    log: bool = False

    def __post_init__(self):
        self.point = np.asarray(self.point, dtype=float).reshape(-1)


@dataclass
class IntegralResult:
    value: float
    error: float = 0.0
    status: Status = Status.OK
    notes: List[str] = field(default_factory=list)

    @property
    def is_finite(self) -> bool:
        return self.status != Status.INFINITE


def _combine(results: List[Tuple[float, IntegralResult]]) -> IntegralResult:
    value, error, status, notes = 0.0, 0.0, Status.OK, []
    for w, r in results:
        if w == 0:
            continue
        if r.status == Status.INFINITE:
            return IntegralResult(math.inf, 0.0, Status.INFINITE, r.notes)
        value += w * r.value
        error += w * r.error
        notes.extend(r.notes)
        if r.status == Status.INCONCLUSIVE:
            status = Status.INCONCLUSIVE
    return IntegralResult(value, error, status, notes)


def _region_bounded(region: Optional[Domain]) -> bool:
    return region is not None and region.bounded


def integrate(
    measure: MeasureSpec,
    f: Callable[[np.ndarray], np.ndarray],
    region: Optional[Domain] = None,
    singular: Optional[Singularity] = None,
    tail_order: Optional[float] = None,
    tol: Optional[ToleranceConfig] = None,
) -> IntegralResult:
    """Integrate f over `region` (all of R^d when None) against the measure.

    f maps points (n, d) to values (n,). A declared singularity whose order reaches the
    local dimension of the measure at that point, or a declared decay `tail_order` not
    exceeding the growth dimension of an unbounded support, returns an +inf flag.
    Quadrature that misses the tolerance returns status INCONCLUSIVE with its error.
    """
    tol = tol or ToleranceConfig()
    k = measure.kind
    if region is not None and region.dimension != measure.dimension:
        raise GeometryError("region and measure dimensions differ")

    if k == MeasureKind.MIXTURE:
        parts = [(c.weight, integrate(c.measure, f, region, singular, tail_order, tol)) for c in measure.components]
        return _combine(parts)

    if k == MeasureKind.ATOMS:
        live = [a for a in measure.atoms if a.mass > 0]
        if not live:
            return IntegralResult(0.0)
        pts = np.array([a.point for a in live])
        masses = np.array([a.mass for a in live])
        keep = region.contains(pts) if region is not None else np.ones(len(live), dtype=bool)
        if not np.any(keep):
            return IntegralResult(0.0)
        if singular is not None and (singular.order > 0 or singular.log):
            hit = np.linalg.norm(pts[keep] - singular.point, axis=1) <= 1e-12
            if np.any(hit):
                return IntegralResult(math.inf, 0.0, Status.INFINITE, ["atom at singular point"])
        with np.errstate(divide="ignore"):
            vals = np.asarray(f(pts[keep]), dtype=float)
        if np.any(np.isinf(vals)):
            return IntegralResult(math.inf, 0.0, Status.INFINITE)
        return IntegralResult(float(np.sum(masses[keep] * vals)))

    if singular is not None and not singular.log and singular.order > 0:
        local = measure.local_dimension(singular.point)
        if region is not None and not bool(region.contains(singular.point[None, :])[0]):
            local = math.inf if _point_outside_closure(region, singular.point) else local
        if singular.order >= local:
            return IntegralResult(math.inf, 0.0, Status.INFINITE, ["non-integrable declared singularity"])

    if k == MeasureKind.SPHERE_SURFACE:
        return _integrate_sphere(measure, f, region, singular, tol)

    support_bounded = measure.domain.bounded or _region_bounded(region)
    if not support_bounded and tail_order is not None:
        growth = measure.growth_dimension()
        if region is not None:
            growth = min(growth, _domain_growth(region)) if region.kind != DomainKind.COMPLEMENT else growth
        if growth > 0 and tail_order <= growth:
            return IntegralResult(math.inf, 0.0, Status.INFINITE, ["tail of the integrand not integrable"])
    return _integrate_polar(measure, f, region, singular, tol)


def _point_outside_closure(region: Domain, point: np.ndarray) -> bool:
    probe = sphere_rule(region.dimension, 8)[0] * 1e-9
    return not np.any(region.contains(point[None, :] + probe))


def _integrate_polar(measure, f, region, singular, tol) -> IntegralResult:
    d = measure.dimension
    domain = measure.domain
    member = domain.contains if region is None else (lambda p: domain.contains(p) & region.contains(p))
    center = singular.point if singular is not None else domain.reference_point()
    bounded = domain.bounded or _region_bounded(region)
    if bounded:
        far = [max_distance(domain, center)] if domain.bounded else []
        if _region_bounded(region):
            far.append(max_distance(region, center))
        s_max = min(far) * (1.0 + 1e-9)
    else:
        s_max = tol.truncation_radius
    dirs, weights = sphere_rule(d, tol.nodes_for(d))
    rays, a, b = ray_segments(member, center, dirs, s_max, bounded=bounded,
                              samples=tol.ray_samples, truncation=tol.truncation_radius)
    if rays.size == 0:
        return IntegralResult(0.0)
    g = measure.density if measure.kind == MeasureKind.DENSITY else None

    def integrand(ray_idx, s):
        pts = center[None, :] + s[:, None] * dirs[ray_idx]
        vals = np.asarray(f(pts), dtype=float)
        if g is not None:
            vals = vals * g(pts)
        return s ** (d - 1) * vals

    beta = None
    if singular is not None:
        power = (d - 1.0) if singular.log else (d - 1.0 - singular.order)
        beta = np.where(a == 0.0, power, np.nan)
    result = integrate_segments(integrand, rays, a, b, beta, order=tol.gauss_order,
                                rel_tol=tol.rel_tol, abs_tol=tol.abs_tol, max_depth=tol.max_subdivisions)
    value = float(np.sum(weights[rays] * result.values))
    error = float(np.sum(weights[rays] * result.errors))
    if not result.converged:
        logger.warning(f"Polar quadrature did not reach tolerance (value={value:.6g}, error={error:.3g})")
        return IntegralResult(value, error, Status.INCONCLUSIVE, ["quadrature tolerance not reached"])
    return IntegralResult(value, error)


def _orthonormal_complement(e: np.ndarray) -> np.ndarray:
    """Rows spanning the orthogonal complement of the unit vector e."""
    d = e.size
    q, _ = np.linalg.qr(np.column_stack([e, np.eye(d)]))
    return q[:, 1:d].T


def _integrate_sphere(measure, f, region, singular, tol) -> IntegralResult:
    d = measure.dimension
    c = np.asarray(measure.center, dtype=float)
    R = measure.radius
    if d == 1:
        pts = np.array([[c[0] + R], [c[0] - R]])
        atoms = MeasureSpec.point_masses([(p, 1.0) for p in pts], dimension=1)
        return integrate(atoms, f, region, singular, None, tol)
    axis = np.zeros(d)
    axis[0] = 1.0
    on_sphere = False
    if singular is not None:
        offset = singular.point - c
        norm = float(np.linalg.norm(offset))
        if norm > 0:
            axis = offset / norm
        on_sphere = abs(norm - R) <= 1e-9 * max(1.0, R)
    basis = _orthonormal_complement(axis)
    sub_dirs, sub_weights = sphere_rule(d - 1, tol.nodes_for(d - 1))
    omegas = sub_dirs @ basis

    def point_at(ray_idx, phi):
        return c[None, :] + R * (np.cos(phi)[:, None] * axis[None, :] + np.sin(phi)[:, None] * omegas[ray_idx])

    cap = _cap_angle(measure, region, singular)
    if cap is not None:
        if cap <= 0.0:
            return IntegralResult(0.0)
        rays = np.arange(omegas.shape[0])
        a, b = np.zeros(rays.size), np.full(rays.size, cap)
    else:
        member = (lambda p: np.ones(len(p), dtype=bool)) if region is None else region.contains
        rays, a, b = parametric_segments(member, point_at, omegas.shape[0], math.pi, samples=tol.ray_samples)
    if rays.size == 0:
        return IntegralResult(0.0)

    def integrand(ray_idx, phi):
        vals = np.asarray(f(point_at(ray_idx, phi)), dtype=float)
        return R ** (d - 1) * np.sin(phi) ** (d - 2) * vals

    beta = None
    if on_sphere:
        power = (d - 2.0) if singular.log else (d - 2.0 - singular.order)
        beta = np.where(a == 0.0, power, np.nan)
    result = integrate_segments(integrand, rays, a, b, beta, order=tol.gauss_order,
                                rel_tol=tol.rel_tol, abs_tol=tol.abs_tol, max_depth=tol.max_subdivisions)
    value = float(np.sum(sub_weights[rays] * result.values))
    error = float(np.sum(sub_weights[rays] * result.errors))
    if not result.converged:
        return IntegralResult(value, error, Status.INCONCLUSIVE, ["quadrature tolerance not reached"])
    return IntegralResult(value, error)


def _cap_angle(measure: MeasureSpec, region: Optional[Domain], singular: Optional[Singularity]) -> Optional[float]:
    """Polar half-angle of the sphere inside a ball region centered at the singular point."""
    if region is None:
        return math.pi
    if region.kind != DomainKind.BALL or singular is None:
        return None
    if not np.allclose(region.center, singular.point, rtol=0.0, atol=1e-14):
        return None
    c = np.asarray(measure.center, dtype=float)
    R, rho = measure.radius, region.radius
    a = float(np.linalg.norm(singular.point - c))
    if a == 0.0:
        return math.pi if R < rho else 0.0
    cos_angle = (a * a + R * R - rho * rho) / (2.0 * a * R)
    if cos_angle >= 1.0:
        return 0.0
    return math.acos(max(-1.0, cos_angle))


def restricted(measure: MeasureSpec, region: Domain) -> MeasureSpec:
    """The measure 1_region * mu."""
    k = measure.kind
    if k in (MeasureKind.LEBESGUE, MeasureKind.DENSITY):
        return measure.model_copy(update={"domain": Domain.intersection([measure.domain, region]),
                                          "total_mass_hint": None})
    if k == MeasureKind.ATOMS:
        keep = [a for a in measure.atoms if bool(region.contains(np.asarray(a.point)[None, :])[0])]
        return measure.model_copy(update={"atoms": keep, "total_mass_hint": None})
    if k == MeasureKind.MIXTURE:
        comps = [MixtureComponent(weight=c.weight, measure=restricted(c.measure, region)) for c in measure.components]
        return measure.model_copy(update={"components": comps, "total_mass_hint": None})
    dirs, _ = sphere_rule(measure.dimension, 16)
    pts = np.asarray(measure.center) + measure.radius * dirs
    inside = region.contains(pts)
    if np.all(inside):
        return measure
    if not np.any(inside):
        return MeasureSpec(kind=MeasureKind.ATOMS, dimension=measure.dimension, label=measure.label)
    raise GeometryError("sphere surface measures can only be restricted to regions containing or missing the whole sphere")


def ball_mass(measure: MeasureSpec, x: Point, r: float, tol: Optional[ToleranceConfig] = None) -> float:
    """mu(B_r(x)); a divergent density integral returns +inf."""
    tol = tol or ToleranceConfig()
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != measure.dimension:
        raise GeometryError(f"point dimension {x.size} != measure dimension {measure.dimension}")
    if r <= 0:
        raise GeometryError("radius must be positive")
    k = measure.kind
    if k == MeasureKind.LEBESGUE:
        return ball_volume(measure.domain, x, r, tol)
    if k == MeasureKind.SPHERE_SURFACE:
        return _sphere_ball_area(measure, x, r)
    if k == MeasureKind.ATOMS:
        return float(sum(a.mass for a in measure.atoms if np.linalg.norm(x - np.asarray(a.point)) < r))
    if k == MeasureKind.MIXTURE:
        total = 0.0
        for comp in measure.components:
            if comp.weight > 0:
                total += comp.weight * ball_mass(comp.measure, x, r, tol)
        return total
    singular = None
    g = measure.density
    if g.name == "power_radial":
        singular = Singularity(np.zeros(measure.dimension) if g.center is None else g.center, g.rate)
    result = integrate(measure, lambda y: np.ones(len(y)), Domain.ball(x, r), singular, None, tol)
    return result.value


def _sphere_ball_area(measure: MeasureSpec, x: np.ndarray, r: float) -> float:
    d = measure.dimension
    c = np.asarray(measure.center, dtype=float)
    R = measure.radius
    a = float(np.linalg.norm(x - c))
    if d == 1:
        return float(sum(1.0 for p in (c[0] + R, c[0] - R) if abs(p - x[0]) < r))
    area = unit_sphere_area(d) * R ** (d - 1)
    if a + R < r:
        return area
    if a == 0.0 or a >= R + r or R >= a + r:
        return area if (a == 0.0 and R < r) else 0.0
    cos_angle = (a * a + R * R - r * r) / (2.0 * a * R)
    return area * sphere_cap_fraction(d, math.acos(min(1.0, max(-1.0, cos_angle))))


# =============================================================================
# Sampling
# =============================================================================

@dataclass
class WeightedSample:
    """Self-normalized importance sample: sum(w f) / sum(w) estimates int f dmu / mu(env)."""
    points: np.ndarray
    weights: np.ndarray

    def __iter__(self) -> Iterator[Tuple[np.ndarray, float]]:
        return iter(zip(self.points, self.weights))

    def __len__(self) -> int:
        return len(self.weights)

    def mean(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        total = float(np.sum(self.weights))
        return float(np.sum(self.weights * f(self.points)) / total) if total > 0 else 0.0

    def standard_error(self, f: Callable[[np.ndarray], np.ndarray]) -> float:
        w = self.weights / np.sum(self.weights)
        vals = f(self.points)
        mu = float(np.sum(w * vals))
        return float(math.sqrt(np.sum(w ** 2 * (vals - mu) ** 2)))


def sample(
    measure: MeasureSpec,
    n: int,
    stream: np.random.Generator,
    envelope: Optional[Domain] = None,
    tol: Optional[ToleranceConfig] = None,
) -> WeightedSample:
    """Draw n weighted points from the measure (restricted to `envelope` when given)."""
    d = measure.dimension
    k = measure.kind
    if k == MeasureKind.ATOMS:
        live = [a for a in measure.atoms if a.mass > 0]
        if not live:
            raise SamplingError("cannot sample a zero measure")
        masses = np.array([a.mass for a in live])
        idx = stream.choice(len(live), size=n, p=masses / masses.sum())
        pts = np.array([a.point for a in live])[idx]
        w = np.ones(n) if envelope is None else envelope.contains(pts).astype(float)
        return WeightedSample(pts, w)
    if k == MeasureKind.SPHERE_SURFACE:
        g = stream.standard_normal((n, d))
        pts = np.asarray(measure.center) + measure.radius * g / np.linalg.norm(g, axis=1, keepdims=True)
        w = np.ones(n) if envelope is None else envelope.contains(pts).astype(float)
        return WeightedSample(pts, w)
    if k == MeasureKind.MIXTURE:
        live = [(c.weight, c.measure) for c in measure.components if c.weight > 0]
        masses = []
        for w, m in live:
            mass = m.total_mass(tol) if envelope is None else _enveloped_mass(m, envelope, tol)
            if math.isinf(mass):
                raise SamplingError("mixture component has infinite mass and no envelope")
            masses.append(w * mass)
        masses = np.asarray(masses)
        counts = stream.multinomial(n, masses / masses.sum())
        pts, ws = [], []
        for (w, m), cnt in zip(live, counts):
            if cnt == 0:
                continue
            part = sample(m, int(cnt), stream, envelope, tol)
            scale = np.mean(part.weights) if np.mean(part.weights) > 0 else 1.0
            pts.append(part.points)
            ws.append(part.weights / scale)
        return WeightedSample(np.concatenate(pts), np.concatenate(ws))
    return _sample_absolutely_continuous(measure, n, stream, envelope, tol)


def _enveloped_mass(measure: MeasureSpec, envelope: Domain, tol) -> float:
    if measure.kind == MeasureKind.LEBESGUE:
        return domain_volume(Domain.intersection([measure.domain, envelope]), tol)
    return integrate(measure, lambda y: np.ones(len(y)), envelope, tol=tol).value


def _sample_absolutely_continuous(measure, n, stream, envelope, tol) -> WeightedSample:
    d = measure.dimension
    domain = measure.domain
    g = measure.density
    support = domain if envelope is None else Domain.intersection([domain, envelope])
    if support.bounded:
        lo, hi = support.bounding_box()
        pts = lo + (hi - lo) * stream.random((n, d))
        w = support.contains(pts).astype(float)
        if g is not None:
            w = w * g(pts)
        return WeightedSample(pts, w)
    if domain.kind == DomainKind.HORN and g is None and math.isfinite(domain_volume(domain, tol)) and d > 1:
        return _sample_horn(domain, n, stream, envelope)
    if g is not None and g.name in ("exp_radial", "gaussian") and g.rate > 0:
        c = np.zeros(d) if g.center is None else np.asarray(g.center)
        if g.name == "exp_radial":
            radii = stream.gamma(d, 1.0 / g.rate, size=n)
        else:
            radii = np.sqrt(stream.chisquare(d, size=n) / g.rate)
        u = stream.standard_normal((n, d))
        pts = c + radii[:, None] * u / np.linalg.norm(u, axis=1, keepdims=True)
        w = support.contains(pts).astype(float)
        return WeightedSample(pts, w)
    raise SamplingError("measure has infinite mass; supply a bounded envelope")


def _sample_horn(domain: Domain, n, stream, envelope) -> WeightedSample:
    d = domain.dimension
    grid = np.linspace(0.0, 50.0, 4001)
    section = unit_ball_volume(d - 1) * domain.profile(grid) ** (d - 1)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (section[1:] + section[:-1]) * np.diff(grid))])
    cdf /= cdf[-1]
    x1 = np.interp(stream.random(n), cdf, grid)
    h = domain.profile(x1)
    u = stream.standard_normal((n, d - 1))
    rad = h * stream.random(n) ** (1.0 / (d - 1))
    pts = np.column_stack([x1, rad[:, None] * u / np.linalg.norm(u, axis=1, keepdims=True)])
    w = np.ones(n) if envelope is None else envelope.contains(pts).astype(float)
    return WeightedSample(pts, w)


# =============================================================================
# B0 profile
# =============================================================================

def _direction_starts(d: int, count: int) -> np.ndarray:
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        theta = np.arange(count) * (2.0 * math.pi / count)
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    # Fibonacci lattice (d=3), Gaussian cloud beyond
    if d == 3:
        i = np.arange(count) + 0.5
        z = 1.0 - 2.0 * i / count
        phi = math.pi * (1.0 + 5 ** 0.5) * i
        rho = np.sqrt(1.0 - z * z)
        return np.stack([rho * np.cos(phi), rho * np.sin(phi), z], axis=1)
    g = np.random.default_rng(7 + d).standard_normal((count, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _angles_to_direction(d: int, angles: np.ndarray) -> np.ndarray:
    """Hyperspherical angles (d-1 of them) to a unit vector."""
    out = np.ones(d)
    for i, a in enumerate(angles):
        out[i] *= math.cos(a)
        out[i + 1:] *= math.sin(a)
    return out


def _direction_to_angles(v: np.ndarray) -> np.ndarray:
    d = v.size
    angles = np.zeros(d - 1)
    for i in range(d - 1):
        tail = float(np.linalg.norm(v[i:]))
        angles[i] = math.acos(max(-1.0, min(1.0, v[i] / tail))) if tail > 0 else 0.0
    if d >= 2 and v[-1] < 0:
        angles[-1] = 2.0 * math.pi - angles[-1]
    return angles


def b0_profile(
    domain: Domain,
    radii: Sequence[float],
    search: Optional[SearchConfig] = None,
    tol: Optional[ToleranceConfig] = None,
) -> DecayProfile:
    """sup_{|x|=R} m(D intersected with B_1(x)) for each R, with a limit-to-zero verdict."""
    search = search or SearchConfig()
    tol = tol or ToleranceConfig()
    d = domain.dimension
    radii = sorted(float(r) for r in radii)
    label = f"B0 profile of {domain.kind.value} domain"
    if domain.bounded:
        values = [0.0 if R > domain.circumradius + 1.0 else _b0_sup(domain, R, search, tol)[0] for R in radii]
        profile = DecayProfile.build(radii, values, Approach.INFINITY, label,
                                     tol.verdict_abs_factor, tol.plateau_rel, ["bounded domain"])
        profile.verdict = Verdict.IN
        return profile

    values, notes = [], []
    for R in radii:
        best, confident = _b0_sup(domain, R, search, tol)
        values.append(best)
        if not confident:
            notes.append(f"low-confidence maximization at R={R:g}")
            logger.warning(f"B0 sup-search at R={R:g} is low-confidence")
    return DecayProfile.build(radii, values, Approach.INFINITY, label,
                              tol.verdict_abs_factor, tol.plateau_rel, notes)


def _b0_sup(domain: Domain, R: float, search: SearchConfig, tol: ToleranceConfig) -> Tuple[float, bool]:
    d = domain.dimension
    starts = _direction_starts(d, search.starts_per_dim * d)
    screen = np.array([ball_volume(domain, R * u, 1.0, tol) for u in starts])
    best = float(screen.max())
    if d == 1:
        return best, True
    confident = True
    for idx in np.argsort(screen)[::-1][: search.refine_top]:
        x0 = _direction_to_angles(starts[idx])
        objective = lambda ang: -ball_volume(domain, R * _angles_to_direction(d, ang), 1.0, tol)
        res = optimize.minimize(objective, x0, method="Nelder-Mead",
                                options={"maxiter": search.max_iter, "xatol": 1e-6, "fatol": 1e-14})
        value = -float(res.fun)
        if value > best:
            if best > 0 and value > 1.1 * best:
                confident = False
            best = value
    return best, confident
