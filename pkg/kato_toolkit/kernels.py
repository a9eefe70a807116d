"""Heat, resolvent and Green kernels of Brownian motion and (relativistic) stable processes.

Brownian motion is normalized to the generator (1/2)Laplacian; stable and relativistic
stable processes have characteristic exponent (|xi|^2 + m^{2/alpha})^{alpha/2} - m
(m = 0 for stable). All kernels are radial, so every evaluation reduces to r = |x - y|.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy import integrate as sp_integrate
from scipy import special
from scipy.interpolate import CubicSpline

from .profiles import Status
from .quadrature import _gauss_legendre, unit_sphere_area
from .utils import KernelError, format_float, render_csv, write_text

logger = logging.getLogger(__name__)

Point = Union[float, Sequence[float], np.ndarray]


# =============================================================================
# Process description
# =============================================================================

class ProcessKind(str, Enum):
    BROWNIAN = "brownian"
    STABLE = "stable"
    RELATIVISTIC = "relativistic"


class ProcessSpec(BaseModel):
    """Markov process on R^d: Brownian, stable(alpha) or relativistic(alpha, m)."""
    kind: ProcessKind = Field(..., description="Process family")
    dimension: int = Field(..., ge=1, description="Dimension d")
    alpha: Optional[float] = Field(None, description="Stability index, 0 < alpha < 2")
    mass: float = Field(0.0, ge=0, description="Relativistic mass m (0 for stable)")

    @model_validator(mode="after")
    def _validate(self) -> "ProcessSpec":
        if self.kind == ProcessKind.BROWNIAN:
            if self.alpha is not None or self.mass != 0.0:
                raise ValueError("brownian takes neither alpha nor mass")
            return self
        if self.alpha is None or not 0.0 < self.alpha < 2.0:
            raise ValueError("alpha must satisfy 0 < alpha < 2")
        if self.kind == ProcessKind.STABLE and self.mass != 0.0:
            raise ValueError("stable processes have mass 0; use relativistic")
        if self.kind == ProcessKind.RELATIVISTIC and self.mass <= 0.0:
            raise ValueError("relativistic processes need mass > 0")
        return self

    @classmethod
    def brownian(cls, d: int) -> "ProcessSpec":
        return cls(kind=ProcessKind.BROWNIAN, dimension=d)

    @classmethod
    def stable(cls, alpha: float, d: int) -> "ProcessSpec":
        return cls(kind=ProcessKind.STABLE, dimension=d, alpha=alpha)

    @classmethod
    def relativistic(cls, alpha: float, m: float, d: int) -> "ProcessSpec":
        return cls(kind=ProcessKind.RELATIVISTIC, dimension=d, alpha=alpha, mass=m)

    @property
    def index(self) -> float:
        """Scaling index: 2 for Brownian motion, alpha otherwise."""
        return 2.0 if self.kind == ProcessKind.BROWNIAN else float(self.alpha)

    @property
    def label(self) -> str:
        if self.kind == ProcessKind.BROWNIAN:
            return f"brownian(d={self.dimension})"
        if self.kind == ProcessKind.STABLE:
            return f"stable(alpha={self.alpha:g}, d={self.dimension})"
        return f"relativistic(alpha={self.alpha:g}, m={self.mass:g}, d={self.dimension})"

    def key(self) -> Tuple[str, int, float, float]:
        return (self.kind.value, self.dimension, float(self.alpha or 2.0), float(self.mass))

    def exponent(self, xi):
        """Characteristic exponent psi(|xi|)."""
        xi = np.asarray(xi, dtype=float)
        if self.kind == ProcessKind.BROWNIAN:
            return 0.5 * xi ** 2
        if self.kind == ProcessKind.STABLE:
            return xi ** self.alpha
        m, a = self.mass, self.alpha
        return (xi ** 2 + m ** (2.0 / a)) ** (a / 2.0) - m


def transient(spec: ProcessSpec) -> bool:
    """brownian: d >= 3, stable: d > alpha, relativistic: d >= 3."""
    d = spec.dimension
    if spec.kind == ProcessKind.STABLE:
        return d > spec.alpha
    return d >= 3


class KernelMethod(str, Enum):
    CLOSED_FORM = "closed-form"
    LAPLACE = "laplace-quadrature"
    FOURIER = "fourier-quadrature"
    SERIES = "series"


@dataclass
class KernelValue:
    value: float
    error_estimate: float = 0.0
    method: KernelMethod = KernelMethod.CLOSED_FORM
    status: Status = Status.OK

    def __post_init__(self):
        if self.value < 0:
            # quadrature noise around zero
            self.error_estimate = max(self.error_estimate, -self.value)
            self.value = 0.0

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)


def _distance(x: Point, y: Point, d: int) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.size != d or y.size != d:
        raise KernelError(f"points must have dimension {d}")
    return float(np.linalg.norm(x - y))


# =============================================================================
# Fourier inversion
# =============================================================================

def _fourier_cutoff(spec: ProcessSpec, t: float) -> float:
    d = spec.dimension
    k = 1.0
    while t * float(spec.exponent(k)) - (d / 2.0 + 1.0) * math.log1p(k) < 46.0 and k < 1e12:
        k *= 2.0
    return k


def fourier_radial(spec: ProcessSpec, t: float, r: float, max_segments: int = 200_000) -> Tuple[float, float]:
    """p_t at distance r by radial inversion of exp(-t psi).

    p_t(r) = (2 pi)^{-d/2} r^{1-d/2} int_0^inf exp(-t psi(k)) k^{d/2} J_{d/2-1}(k r) dk,
    integrated on half-periods of the Bessel factor, refined geometrically towards k = 0,
    at Gauss orders 16 and 32.
    """
    d = spec.dimension
    cutoff = _fourier_cutoff(spec, t)
    if r == 0.0:
        integrand = lambda k: k ** (d - 1) * math.exp(-t * float(spec.exponent(k)))
        value, err = sp_integrate.quad(integrand, 0.0, cutoff, limit=200, epsabs=0.0, epsrel=1e-10)
        scale = unit_sphere_area(d) / (2.0 * math.pi) ** d
        return scale * value, scale * err
    n_seg = int(math.ceil(cutoff * r / math.pi)) + 1
    if n_seg > max_segments:
        logger.debug(f"Fourier inversion capped at {max_segments} segments (r={r:g}, t={t:g})")
        n_seg = max_segments
    edges = np.union1d(np.linspace(0.0, cutoff, n_seg + 1), np.geomspace(cutoff * 1e-6, cutoff, 60))
    order = d / 2.0 - 1.0
    totals = []
    for n in (16, 32):
        nodes, weights = _gauss_legendre(n)
        width = np.diff(edges)[:, None]
        k = edges[:-1, None] + width * nodes[None, :]
        amp = np.exp(-t * spec.exponent(k)) * k ** (d / 2.0)
        totals.append(float(np.sum(amp * special.jv(order, k * r) * width * weights[None, :])))
    scale = (2.0 * math.pi) ** (-d / 2.0) * r ** (1.0 - d / 2.0)
    return scale * totals[1], scale * abs(totals[1] - totals[0])


# =============================================================================
# Stable densities
# =============================================================================

def stable_density_at_zero(d: int, alpha: float) -> float:
    """p_1(0) of the isotropic alpha-stable process."""
    return unit_sphere_area(d) * math.gamma(d / alpha) / (alpha * (2.0 * math.pi) ** d)


def stable_tail_constant(d: int, alpha: float) -> float:
    """A(d, -alpha) = alpha 2^{alpha-1} Gamma((d+alpha)/2) / (pi^{d/2} Gamma(1-alpha/2))."""
    return (alpha * 2.0 ** (alpha - 1.0) * math.gamma((d + alpha) / 2.0)
            / (math.pi ** (d / 2.0) * math.gamma(1.0 - alpha / 2.0)))


def cauchy_unit_density(d: int, rho: float) -> float:
    """p_1(rho) of the isotropic Cauchy process: Gamma((d+1)/2) pi^{-(d+1)/2} (1 + rho^2)^{-(d+1)/2}."""
    return math.gamma((d + 1) / 2.0) * math.pi ** (-(d + 1) / 2.0) * (1.0 + rho * rho) ** (-(d + 1) / 2.0)


def _stable_term_log(d: int, alpha: float, rho: float, k: int) -> float:
    """log of the k-th coefficient magnitude of the large-distance expansion, without the sine."""
    return (alpha * k * math.log(2.0) + special.gammaln((d + alpha * k) / 2.0)
            + special.gammaln(alpha * k / 2.0 + 1.0) - special.gammaln(k + 1.0)
            - (d / 2.0 + 1.0) * math.log(math.pi) - (d + alpha * k) * math.log(rho))


def _stable_series(d: int, alpha: float, rho: float, terms: int = 400) -> Optional[float]:
    """Large-distance expansion of p_1(rho).

    Convergent for alpha < 1: accepted once the terms fall below 1e-15 of the sum with at most
    six digits lost to cancellation. Only asymptotic for alpha > 1: summed up to its smallest
    term and accepted when that term is below 1e-12 of the sum, which holds only far out.
    """
    total = 0.0
    biggest = 0.0
    prev = math.inf
    for k in range(1, terms + 1):
        mag = math.exp(_stable_term_log(d, alpha, rho, k))
        if alpha > 1.0 and mag > prev:
            break
        total += (-1) ** (k + 1) * mag * math.sin(math.pi * alpha * k / 2.0)
        biggest = max(biggest, mag)
        prev = mag
        if alpha < 1.0 and k > 3 and mag < 1e-15 * abs(total):
            return total if total > 0 and biggest < 1e6 * total else None
    if alpha > 1.0 and total > 0 and prev < 1e-12 * total:
        return total
    return None


def stable_unit_density(d: int, alpha: float, rho: float) -> Tuple[float, float, KernelMethod]:
    """p_1(rho) of the isotropic alpha-stable process with error estimate and method.

    Closed form for alpha = 1 and the large-distance expansion where it is resolved
    (rho >= 1); radial Fourier inversion everywhere else.
    """
    if rho == 0.0:
        return stable_density_at_zero(d, alpha), 0.0, KernelMethod.CLOSED_FORM
    if alpha == 1.0:
        return cauchy_unit_density(d, rho), 0.0, KernelMethod.CLOSED_FORM
    if rho >= 1.0:
        series = _stable_series(d, alpha, rho)
        if series is not None:
            return series, 1e-12 * series, KernelMethod.SERIES
    value, err = fourier_radial(ProcessSpec.stable(alpha, d), 1.0, rho)
    return value, err, KernelMethod.FOURIER


@lru_cache(maxsize=32)
def _stable_unit_table(d: int, alpha: float) -> CubicSpline:
    grid = np.geomspace(1e-3, 1e3, 241)
    values = np.array([stable_unit_density(d, alpha, r)[0] for r in grid])
    return CubicSpline(np.log(grid), np.log(values))


def stable_unit_density_fast(d: int, alpha: float, rho: np.ndarray) -> np.ndarray:
    """Tabulated p_1 for vectorized use inside time quadratures."""
    rho = np.asarray(rho, dtype=float)
    out = np.empty_like(rho)
    small = rho < 1e-3
    large = rho > 1e3
    mid = ~(small | large)
    out[small] = stable_density_at_zero(d, alpha)
    out[large] = stable_tail_constant(d, alpha) * rho[large] ** (-d - alpha)
    if np.any(mid):
        out[mid] = np.exp(_stable_unit_table(d, alpha)(np.log(rho[mid])))
    return out


# =============================================================================
# Jump kernel
# =============================================================================

def psi_integral(r: float, d: int, alpha: float) -> Tuple[float, float]:
    """I(r) = int_0^inf s^{(d+alpha)/2 - 1} exp(-s/4 - r^2/s) ds."""
    nu = (d + alpha) / 2.0
    if r == 0.0:
        f = lambda s: s ** (nu - 1.0) * math.exp(-s / 4.0)
    else:
        f = lambda s: s ** (nu - 1.0) * math.exp(-s / 4.0 - r * r / s)
    peak = max(2.0 * r, 4.0 * nu)
    a, ea = sp_integrate.quad(f, 0.0, peak, epsabs=0.0, epsrel=1e-12, limit=200)
    b, eb = sp_integrate.quad(f, peak, math.inf, epsabs=0.0, epsrel=1e-12, limit=200)
    return a + b, ea + eb


def psi(r: float, d: int, alpha: float) -> float:
    """Psi(r) = I(r) / I(0), decreasing from Psi(0) = 1."""
    if r < 0:
        raise KernelError("psi needs r >= 0")
    if r == 0.0:
        return 1.0
    num, _ = psi_integral(r, d, alpha)
    den, _ = psi_integral(0.0, d, alpha)
    return num / den


def psi_second_derivative(d: int, alpha: float) -> float:
    """Psi''(0) = -1 / (2 (nu - 1)), nu = (d + alpha)/2; -inf when Psi is not C^2 at 0."""
    nu = (d + alpha) / 2.0
    if nu <= 1.0:
        return -math.inf
    return -1.0 / (2.0 * (nu - 1.0))


def jump_kernel(alpha: float, m: float, d: int, x: Point, y: Point) -> float:
    """J_m(x, y) = A(d, -alpha) Psi(m^{1/alpha}|x-y|) / |x-y|^{d+alpha}; +inf on the diagonal."""
    if m < 0:
        raise KernelError("mass must be nonnegative")
    r = _distance(x, y, d)
    return jump_kernel_radial(alpha, m, d, r)


def jump_kernel_radial(alpha: float, m: float, d: int, r: float) -> float:
    if r == 0.0:
        return math.inf
    factor = psi(m ** (1.0 / alpha) * r, d, alpha) if m > 0 else 1.0
    return stable_tail_constant(d, alpha) * factor / r ** (d + alpha)


# =============================================================================
# Heat kernels
# =============================================================================

def heat_kernel_radial(spec: ProcessSpec, t: float, r: float) -> KernelValue:
    if t <= 0:
        raise KernelError("heat kernel needs t > 0")
    d = spec.dimension
    if spec.kind == ProcessKind.BROWNIAN:
        return KernelValue((2.0 * math.pi * t) ** (-d / 2.0) * math.exp(-r * r / (2.0 * t)))
    if spec.kind == ProcessKind.STABLE:
        a = spec.alpha
        if a == 1.0:
            return KernelValue(t ** (-d) * cauchy_unit_density(d, r / t))
        scale = t ** (-d / a)
        value, err, method = stable_unit_density(d, a, r * t ** (-1.0 / a))
        return KernelValue(scale * value, scale * err, method)
    value, err = fourier_radial(spec, t, r)
    status = Status.OK if err <= 1e-6 * max(abs(value), 1e-300) or err < 1e-14 else Status.INCONCLUSIVE
    if status == Status.INCONCLUSIVE:
        logger.warning(f"Fourier inversion for {spec.label} at t={t:g}, r={r:g} did not converge")
    return KernelValue(value, err, KernelMethod.FOURIER, status)


def heat_kernel(spec: ProcessSpec, t: float, x: Point, y: Point) -> KernelValue:
    """Transition density p_t(x, y)."""
    return heat_kernel_radial(spec, t, _distance(x, y, spec.dimension))


# =============================================================================
# Resolvent and Green kernels
# =============================================================================

def green_constant(spec: ProcessSpec) -> float:
    """c with G(r) = c r^{index - d} for Brownian (d >= 3) and stable (d > alpha)."""
    d = spec.dimension
    if spec.kind == ProcessKind.BROWNIAN:
        return math.gamma(d / 2.0 - 1.0) / (2.0 * math.pi ** (d / 2.0))
    a = spec.alpha
    return math.gamma((d - a) / 2.0) / (2.0 ** a * math.pi ** (d / 2.0) * math.gamma(a / 2.0))


def _brownian_resolvent(d: int, order: float, r: float) -> float:
    a = math.sqrt(2.0 * order)
    nu = d / 2.0 - 1.0
    if r == 0.0:
        return 1.0 / a if d == 1 else math.inf
    return 2.0 * (2.0 * math.pi) ** (-d / 2.0) * (r / a) ** (-nu) * float(special.kv(nu, a * r))


def _brownian_resolvent_slope(d: int, order: float, r: float) -> float:
    a = math.sqrt(2.0 * order)
    nu = d / 2.0 - 1.0
    return -2.0 * (2.0 * math.pi) ** (-d / 2.0) * a ** (nu + 1.0) * r ** (-nu) * float(special.kv(nu + 1.0, a * r))


def _diagonal_blows_up(spec: ProcessSpec) -> bool:
    return spec.dimension >= spec.index


def _time_integral(spec: ProcessSpec, order: float, r: float, rel_tol: float = 1e-8) -> Tuple[float, float]:
    """int_0^inf exp(-order t) p_t(r) dt split at the crossover t* = r^index.

    For order > 0 the range stops where exp(-order t) has fallen below rel_tol * 1e-3.
    """
    d = spec.dimension
    if spec.kind == ProcessKind.STABLE:
        a = spec.alpha

        def density(t):
            return t ** (-d / a) * float(stable_unit_density_fast(d, a, np.array([r * t ** (-1.0 / a)]))[0])
    else:
        small_t = 1e-2 * min(1.0, r ** spec.index)

        def density(t):
            if t < small_t:
                return t * jump_kernel_radial(spec.alpha, spec.mass, d, r)
            return fourier_radial(spec, t, r)[0]

    f = lambda t: math.exp(-order * t) * density(t)
    t_star = max(r ** spec.index, 1e-8)
    t_max = (math.log(1.0 / rel_tol) + math.log(1e3)) / order if order > 0 else math.inf
    cuts = [0.0, t_star, 100.0 * t_star, math.inf]
    value, err = 0.0, 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        hi = min(hi, t_max)
        if hi <= lo:
            break
        v, e = sp_integrate.quad(f, lo, hi, epsabs=0.0, epsrel=rel_tol, limit=200)
        value += v
        err += e
    return value, err


def resolvent_kernel_radial(spec: ProcessSpec, order: float, r: float) -> KernelValue:
    if order < 0:
        raise KernelError("resolvent order must be >= 0")
    if order == 0.0:
        if not transient(spec):
            raise KernelError(f"0-order resolvent of the recurrent process {spec.label} does not exist")
        return green_kernel_radial(spec, r)
    d = spec.dimension
    if spec.kind == ProcessKind.BROWNIAN:
        return KernelValue(_brownian_resolvent(d, order, r))
    if r == 0.0 and _diagonal_blows_up(spec):
        return KernelValue(math.inf)
    value, err = _time_integral(spec, order, r)
    return KernelValue(value, err, KernelMethod.LAPLACE)


def resolvent_kernel(spec: ProcessSpec, order: float, x: Point, y: Point) -> KernelValue:
    """order-resolvent kernel R_order(x, y) = int_0^inf exp(-order t) p_t(x, y) dt."""
    return resolvent_kernel_radial(spec, order, _distance(x, y, spec.dimension))


def green_kernel_radial(spec: ProcessSpec, r: float) -> KernelValue:
    if not transient(spec):
        raise KernelError(f"{spec.label} is recurrent and has no Green kernel")
    if r == 0.0:
        return KernelValue(math.inf)
    d = spec.dimension
    if spec.kind in (ProcessKind.BROWNIAN, ProcessKind.STABLE):
        return KernelValue(green_constant(spec) * r ** (spec.index - d))
    value, err = _time_integral(spec, 0.0, r)
    return KernelValue(value, err, KernelMethod.LAPLACE)


def green_kernel(spec: ProcessSpec, x: Point, y: Point) -> KernelValue:
    """0-order Green kernel of a transient process; +inf on the diagonal."""
    return green_kernel_radial(spec, _distance(x, y, spec.dimension))


def green_kernel_reference(nu: float, beta: float, x: Point, y: Point) -> KernelValue:
    """Reference kernel G(r) = r^{beta - nu}, or log(1/r) when nu = beta (no process constant)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.size != y.size:
        raise KernelError("points must share a dimension")
    r = float(np.linalg.norm(x - y))
    return KernelValue(float(reference_kernel(nu, beta)(np.array([r]))[0]))


def interval_green(a: float, b: float, x: float, y: float) -> float:
    """Green function of Brownian motion killed on leaving (a, b)."""
    if not a < b:
        raise KernelError("interval needs a < b")
    if not (a < x < b and a < y < b):
        raise KernelError(f"points must lie in ({a:g}, {b:g})")
    return 2.0 * (min(x, y) - a) * (b - max(x, y)) / (b - a)


def resolvent_bound(spec: ProcessSpec, x: Point, y: Point, C: float = 1.0) -> float:
    """Catalogued upper bound for the Brownian 1-resolvent kernel."""
    if spec.kind != ProcessKind.BROWNIAN:
        raise KernelError("resolvent bounds are catalogued for Brownian motion only")
    d = spec.dimension
    r = _distance(x, y, d)
    if d == 1:
        return math.exp(-math.sqrt(2.0) * r) / math.sqrt(2.0)
    if r == 0.0:
        return math.inf
    if d == 2:
        return 1.0 / (math.pi * r * r) + 1.0 / (2.0 * math.pi)
    return C / r ** (d - 2)


# =============================================================================
# Envelopes and ultracontractivity
# =============================================================================

def envelope_profile(alpha: float, m: float, d: int, t: float, r: float, C: float) -> float:
    """Phi^m_C(t, r): short-time stable branch for t <= 1/m, Gaussian-type branch after."""
    if m > 0 and t > 1.0 / m:
        arg = min(m ** (1.0 / alpha) * r, m ** (2.0 / alpha - 1.0) * r * r / t)
        return m ** (d / alpha - d / 2.0) * t ** (-d / 2.0) * math.exp(-arg / C)
    return min(t ** (-d / alpha), t * jump_kernel_radial(alpha, m, d, r))


def heat_envelope(alpha: float, m: float, d: int, t: float, x: Point, y: Point,
                  C1: Optional[float] = None, C2: Optional[float] = None) -> Tuple[float, float]:
    """(C2^{-1} Phi^m_{1/C1}, C2 Phi^m_{C1}) at (t, x, y); constants default to the data file."""
    if C1 is None or C2 is None:
        fitted = load_envelope_constants(alpha, m, d)
        C1 = fitted.C1 if C1 is None else C1
        C2 = fitted.C2 if C2 is None else C2
    if C1 <= 0 or C2 <= 0:
        raise KernelError("envelope constants must be positive")
    r = _distance(x, y, d)
    return envelope_profile(alpha, m, d, t, r, 1.0 / C1) / C2, C2 * envelope_profile(alpha, m, d, t, r, C1)


def ultracontractivity_exponent(p: float) -> float:
    """Exponent p/(p-1) of the L^1 -> L^inf bound C t^{-p/(p-1)}."""
    if p < 1:
        raise KernelError("p must be >= 1")
    return math.inf if p == 1 else p / (p - 1.0)


def ultracontractivity_bound(spec: ProcessSpec, t: float, C2: Optional[float] = None,
                             p: Optional[float] = None, C: float = 1.0) -> float:
    """Upper bound on sup_{x,y} p_t(x, y)."""
    if t <= 0:
        raise KernelError("ultracontractivity bound needs t > 0")
    if p is not None:
        return C * t ** (-ultracontractivity_exponent(p))
    d = spec.dimension
    if spec.kind == ProcessKind.BROWNIAN:
        return (2.0 * math.pi * t) ** (-d / 2.0)
    a = spec.alpha
    if spec.kind == ProcessKind.STABLE:
        return stable_density_at_zero(d, a) * t ** (-d / a)
    if C2 is None:
        C2 = load_envelope_constants(a, spec.mass, d).C2
    m = spec.mass
    return C2 * m ** (d / a - d / 2.0) * (t ** (-d / a) + t ** (-d / 2.0))


@dataclass
class EnvelopeConstants:
    alpha: float
    mass: float
    dimension: int
    C1: float
    C2: float
    source: str = "default"


ENVELOPE_COLUMNS = ["alpha", "mass", "dimension", "C1", "C2", "source"]


def _envelope_file() -> Path:
    return Path(str(resources.files("kato_toolkit").joinpath("data/envelope_constants.csv")))


def _read_envelope_rows(path: Optional[Path] = None) -> List[EnvelopeConstants]:
    path = Path(path) if path is not None else _envelope_file()
    if not path.exists():
        return []
    rows = []
    with path.open(encoding="utf-8") as fh:
        for row in csv.DictReader(line for line in fh if not line.startswith("#")):
            rows.append(EnvelopeConstants(
                float(row["alpha"]) if row["alpha"] != "*" else math.nan,
                float(row["mass"]) if row["mass"] != "*" else math.nan,
                int(row["dimension"]) if row["dimension"] != "*" else 0,
                float(row["C1"]), float(row["C2"]), row.get("source", ""),
            ))
    return rows


def load_envelope_constants(alpha: float, m: float, d: int, path: Optional[Path] = None) -> EnvelopeConstants:
    """Fitted (C1, C2) for (alpha, m, d), falling back to the wildcard row."""
    rows = _read_envelope_rows(path)
    fallback = EnvelopeConstants(alpha, m, d, 10.0, 10.0, "builtin")
    for row in rows:
        if row.dimension == d and math.isclose(row.alpha, alpha) and math.isclose(row.mass, m):
            return row
    for row in rows:
        if row.dimension == 0:
            fallback = EnvelopeConstants(alpha, m, d, row.C1, row.C2, row.source)
    return fallback


def save_envelope_constants(entries: Sequence[EnvelopeConstants], path: Optional[Path] = None) -> Path:
    """Merge entries into the constants file, replacing rows with the same (alpha, m, d)."""
    path = Path(path) if path is not None else _envelope_file()
    rows = _read_envelope_rows(path)
    for entry in entries:
        rows = [r for r in rows if not (r.dimension == entry.dimension and math.isclose(r.alpha, entry.alpha)
                                        and math.isclose(r.mass, entry.mass))]
        rows.append(entry)
    rows.sort(key=lambda r: (r.dimension, 0.0 if math.isnan(r.alpha) else r.alpha,
                             0.0 if math.isnan(r.mass) else r.mass))
    body = render_csv(ENVELOPE_COLUMNS, [
        ["*" if math.isnan(r.alpha) else format_float(r.alpha, 12),
         "*" if math.isnan(r.mass) else format_float(r.mass, 12),
         "*" if r.dimension == 0 else str(r.dimension),
         format_float(r.C1, 12), format_float(r.C2, 12), r.source]
        for r in rows
    ])
    header = "# Two-sided heat kernel envelope constants; regenerate with `kato-toolkit fit-envelope`.\n"
    return write_text(path, header + body)


def fit_envelope_constants(
    alpha: float, m: float, d: int,
    t_grid: Sequence[float] = (0.05, 0.2, 0.5, 1.0, 2.0, 5.0),
    r_grid: Sequence[float] = (0.0, 0.25, 0.5, 1.0, 2.0, 4.0),
    c1_candidates: Optional[Sequence[float]] = None,
) -> EnvelopeConstants:
    """Smallest C2 over a C1 grid with C2^{-1} Phi_{1/C1} <= p_t <= C2 Phi_{C1} on the (t, r) grid."""
    spec = ProcessSpec.relativistic(alpha, m, d)
    c1_candidates = list(c1_candidates) if c1_candidates is not None else list(np.geomspace(1.0, 100.0, 41))
    samples = [(t, r, heat_kernel_radial(spec, t, r).value) for t in t_grid for r in r_grid]
    best = None
    for c1 in c1_candidates:
        need = 1.0
        for t, r, p in samples:
            upper = envelope_profile(alpha, m, d, t, r, c1)
            lower = envelope_profile(alpha, m, d, t, r, 1.0 / c1)
            if p <= 0 or upper <= 0:
                need = math.inf
                break
            need = max(need, p / upper, lower / p)
        if best is None or need < best[1]:
            best = (float(c1), float(need))
    logger.info(f"Envelope fit for alpha={alpha:g}, m={m:g}, d={d}: C1={best[0]:.4g}, C2={best[1]:.4g}")
    return EnvelopeConstants(alpha, m, d, best[0], best[1], "fitted")


# =============================================================================
# Radial kernel handles
# =============================================================================

@dataclass
class RadialKernel:
    """Radial kernel k(|x - y|) with its singular and decay orders.

    singular_order gamma: k(r) ~ r^{-gamma} as r -> 0 (log_singular: k ~ log(1/r));
    tail_order: k(r) ~ r^{-tail_order} as r -> inf (+inf for exponential decay).
    """
    label: str
    profile_fn: Callable[[np.ndarray], np.ndarray]
    slope_fn: Callable[[np.ndarray], np.ndarray]
    singular_order: float
    log_singular: bool = False
    tail_order: float = math.inf
    method: KernelMethod = KernelMethod.CLOSED_FORM
    notes: List[str] = field(default_factory=list)

    def __call__(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return self.profile_fn(r)

    def slope(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", over="ignore"):
            return self.slope_fn(r)

    def between(self, x: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """k(|x - y|) for every row y of pts."""
        return self(np.linalg.norm(np.atleast_2d(pts) - np.asarray(x)[None, :], axis=1))

    def power_singular_order(self, p: float) -> float:
        return self.singular_order * p


def reference_kernel(nu: float, beta: float) -> RadialKernel:
    """r^{beta - nu}; log(1/r) on r < 1 (zero beyond) when nu = beta."""
    if nu == beta:
        prof = lambda r: np.where(r < 1.0, np.log(1.0 / np.maximum(r, 1e-300)), 0.0)
        slope = lambda r: np.where(r < 1.0, -1.0 / np.maximum(r, 1e-300), 0.0)
        return RadialKernel(f"log kernel (nu=beta={nu:g})", prof, slope, 0.0, True, math.inf)
    gamma = nu - beta
    prof = lambda r: np.power(r, -gamma)
    slope = lambda r: -gamma * np.power(r, -gamma - 1.0)
    return RadialKernel(f"r^({beta:g}-{nu:g})", prof, slope, gamma, False, gamma)


def _power_extrapolated_spline(grid: np.ndarray, values: np.ndarray, head_order: float,
                               head_log: bool, tail_exponential: bool):
    """Log-log cubic spline with power (or log) extension below and power/exponential above."""
    positive = values > 0
    grid, values = grid[positive], values[positive]
    lg, lv = np.log(grid), np.log(values)
    spline = CubicSpline(lg, lv)
    deriv = spline.derivative()
    r0, v0 = grid[0], values[0]
    r1, v1 = grid[-1], values[-1]
    log_coeff = max(-float(deriv(lg[0])) * v0, 0.0)
    rate, tail_slope = 0.0, float(deriv(lg[-1]))
    if tail_exponential and grid.size > 1:
        rate = max((math.log(values[-2]) - math.log(v1)) / (r1 - grid[-2]), 0.0)

    def profile(r):
        r = np.atleast_1d(r)
        out = np.empty_like(r)
        low, high = r < r0, r > r1
        mid = ~(low | high)
        out[mid] = np.exp(spline(np.log(r[mid])))
        if head_log:
            out[low] = v0 + log_coeff * np.log(r0 / np.maximum(r[low], 1e-300))
        else:
            out[low] = v0 * (np.maximum(r[low], 1e-300) / r0) ** (-head_order)
        if tail_exponential:
            out[high] = v1 * np.exp(-rate * (r[high] - r1))
        else:
            out[high] = v1 * (r[high] / r1) ** tail_slope
        out[r == 0] = math.inf if (head_order > 0 or head_log) else v0
        return out

    def slope(r):
        r = np.atleast_1d(r)
        vals = profile(r)
        out = np.empty_like(r)
        low, high = r < r0, r > r1
        mid = ~(low | high)
        out[mid] = vals[mid] * deriv(np.log(r[mid])) / r[mid]
        if head_log:
            out[low] = -log_coeff / np.maximum(r[low], 1e-300)
        else:
            out[low] = -head_order * vals[low] / np.maximum(r[low], 1e-300)
        if tail_exponential:
            out[high] = -rate * vals[high]
        else:
            out[high] = tail_slope * vals[high] / r[high]
        return out

    return profile, slope


@lru_cache(maxsize=64)
def _tabulated(key: Tuple[str, int, float, float], order: float) -> Tuple[Callable, Callable]:
    kind, d, alpha, mass = key
    spec = (ProcessSpec.brownian(d) if kind == "brownian" else
            ProcessSpec.stable(alpha, d) if kind == "stable" else
            ProcessSpec.relativistic(alpha, mass, d))
    if kind == "relativistic":
        grid = np.geomspace(1e-2, 30.0, 41)
    else:
        grid = np.geomspace(1e-3, 1e2, 106)
    values = np.array([_time_integral(spec, order, float(r))[0] for r in grid])
    head_order, head_log = _head_behaviour(spec)
    exponential = kind == "relativistic" and order > 0
    logger.debug(f"Tabulated {spec.label} order-{order:g} kernel on {grid.size} radii")
    return _power_extrapolated_spline(grid, values, head_order, head_log, exponential)


def _head_behaviour(spec: ProcessSpec) -> Tuple[float, bool]:
    d, idx = spec.dimension, spec.index
    if d > idx:
        return d - idx, False
    if d == idx:
        return 0.0, True
    return 0.0, False


def resolvent_radial(spec: ProcessSpec, order: float) -> RadialKernel:
    """Radial handle of R_order; order 0 delegates to green_radial."""
    if order < 0:
        raise KernelError("resolvent order must be >= 0")
    if order == 0.0:
        return green_radial(spec)
    d = spec.dimension
    head_order, head_log = _head_behaviour(spec)
    label = f"R_{order:g} of {spec.label}"
    if spec.kind == ProcessKind.BROWNIAN:
        prof = np.vectorize(lambda r: _brownian_resolvent(d, order, float(r)), otypes=[float])
        slope = np.vectorize(lambda r: _brownian_resolvent_slope(d, order, float(r)) if r > 0 else -math.inf,
                             otypes=[float])
        return RadialKernel(label, prof, slope, head_order, head_log, math.inf)
    prof, slope = _tabulated(spec.key(), float(order))
    tail = d + spec.alpha if spec.kind == ProcessKind.STABLE else math.inf
    return RadialKernel(label, prof, slope, head_order, head_log, tail, KernelMethod.LAPLACE)


def green_radial(spec: ProcessSpec) -> RadialKernel:
    """Radial handle of the 0-order Green kernel of a transient process."""
    if not transient(spec):
        raise KernelError(f"{spec.label} is recurrent and has no Green kernel")
    d = spec.dimension
    label = f"G of {spec.label}"
    if spec.kind in (ProcessKind.BROWNIAN, ProcessKind.STABLE):
        c = green_constant(spec)
        gamma = d - spec.index
        prof = lambda r: c * np.power(r, -gamma)
        slope = lambda r: -gamma * c * np.power(r, -gamma - 1.0)
        return RadialKernel(label, prof, slope, gamma, False, gamma)
    prof, slope = _tabulated(spec.key(), 0.0)
    return RadialKernel(label, prof, slope, d - spec.alpha, False, d - 2.0, KernelMethod.LAPLACE)


# =============================================================================
# Self test
# =============================================================================

@dataclass
class SelfCheck:
    name: str
    passed: bool
    detail: str


def _chapman_kolmogorov(spec: ProcessSpec, s: float, t: float, r: float) -> Tuple[float, float]:
    """(int p_s(z) p_t(r - z) dz, p_{s+t}(r)) on the line through 0 and r."""
    window = 20.0 if spec.kind == ProcessKind.RELATIVISTIC else 50.0
    f = lambda z: heat_kernel_radial(spec, s, abs(z)).value * heat_kernel_radial(spec, t, abs(r - z)).value
    lhs = sum(sp_integrate.quad(f, a, b, limit=400, epsabs=1e-13)[0]
              for a, b in ((-window, 0.0), (0.0, r), (r, r + window)))
    return lhs, heat_kernel_radial(spec, s + t, r).value


def _mass(spec: ProcessSpec, t: float = 1.0) -> float:
    d = spec.dimension
    f = lambda r: unit_sphere_area(d) * r ** (d - 1) * heat_kernel_radial(spec, t, r).value
    return sum(sp_integrate.quad(f, a, b, limit=400)[0] for a, b in ((0.0, 1.0), (1.0, 10.0), (10.0, math.inf)))


def self_test(rel_tol: float = 1e-6) -> List[SelfCheck]:
    """Closed-form identities every kernel routine must reproduce."""
    checks: List[SelfCheck] = []

    def record(name: str, got: float, want: float, tol: float = rel_tol) -> None:
        ok = math.isfinite(got) and abs(got - want) <= tol * max(abs(want), 1e-300)
        checks.append(SelfCheck(name, ok, f"got {got:.10g}, expected {want:.10g}"))

    b1 = ProcessSpec.brownian(1)
    for r in (0.0, 0.5, 2.0):
        record(f"R_1 brownian d=1 at r={r:g}", resolvent_kernel_radial(b1, 1.0, r).value,
               math.exp(-math.sqrt(2.0) * r) / math.sqrt(2.0))

    b3 = ProcessSpec.brownian(3)
    for r in (0.25, 1.0, 3.0):
        record(f"G brownian d=3 at r={r:g}", green_kernel_radial(b3, r).value, 1.0 / (2.0 * math.pi * r))

    record("Psi(0) = 1", psi(0.0, 3, 1.0), 1.0)
    values = [psi(r, 3, 1.0) for r in (0.1, 0.5, 1.0, 2.0, 4.0)]
    mono = all(a > b for a, b in zip(values, values[1:]))
    checks.append(SelfCheck("Psi decreasing", mono, " > ".join(f"{v:.4g}" for v in values)))

    cauchy3 = ProcessSpec.stable(1.0, 3)
    record("Fourier inversion of cauchy d=3 at r=1", fourier_radial(cauchy3, 1.0, 1.0)[0],
           1.0 / (4.0 * math.pi ** 2))

    for spec in (b1, ProcessSpec.stable(1.0, 1), ProcessSpec.brownian(2), cauchy3,
                 ProcessSpec.stable(1.5, 1), ProcessSpec.stable(0.5, 2)):
        record(f"mass of p_1 for {spec.label}", _mass(spec), 1.0, 1e-5)

    for spec, s, t, r in ((b1, 0.3, 0.7, 0.8), (ProcessSpec.stable(1.0, 1), 0.3, 0.7, 0.8),
                          (ProcessSpec.stable(1.5, 1), 0.25, 0.25, 1.5),
                          (ProcessSpec.relativistic(1.0, 1.0, 1), 0.3, 0.7, 0.8)):
        lhs, rhs = _chapman_kolmogorov(spec, s, t, r)
        record(f"Chapman-Kolmogorov for {spec.label}", lhs, rhs, 1e-5)

    failed = [c.name for c in checks if not c.passed]
    if failed:
        logger.error(f"Kernel self test failed: {', '.join(failed)}")
    else:
        logger.info(f"Kernel self test passed ({len(checks)} checks)")
    return checks
