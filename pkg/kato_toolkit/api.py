"""Kato toolkit: Layered API System

Three-tier API architecture:
- HIGH-LEVEL: one call per question, shorthand text accepted everywhere
- MID-LEVEL: composable builders for classification runs
- LOW-LEVEL: parsers, kernel handles and the module operations themselves
"""

import logging
from typing import List, Optional, Sequence, Union

import numpy as np

from .config import Config, get_config
from .forms import (
    SpectralReport,
    TruncationStudy,
    assemble_nonlocal,
    dirichlet_eigenvalues,
    embedding_singular_values,
    truncation_study,
)
from .geometry import Domain, IntegralResult, MeasureSpec, PotentialFunction, b0_profile
from .kernels import ProcessKind, ProcessSpec, RadialKernel, green_radial, resolvent_radial, transient
from .potentials import (
    LADDER_ORDERS,
    LOCAL_RADII,
    TAIL_RADII,
    ClassReport,
    SupResult,
    classify,
    local_kato_profile,
    p_potential,
    sup_p_potential,
)
from .profiles import DecayProfile
from .shorthand import describe, parse_domain, parse_measure, parse_potential, parse_process
from .stochastic import DecayRate, MCEstimate, PathConfig, exit_time_estimate, feynman_kac, fk_decay_rate
from .utils import ConfigurationError

logger = logging.getLogger(__name__)

B0_RADII = TAIL_RADII
FK_TIMES = (1.0, 2.0, 4.0, 8.0)
TRUNCATION_LENGTHS = (10.0, 20.0, 40.0)

ProcessLike = Union[str, dict, ProcessSpec]
MeasureLike = Union[str, dict, MeasureSpec]
DomainLike = Union[str, dict, Domain]

# =============================================================================
# HIGH-LEVEL API: one call per question
# =============================================================================

def classify_measure(
    process: ProcessLike,
    measure: MeasureLike,
    p: float = 1.0,
    chen: bool = True,
    config: Optional[Config] = None,
) -> ClassReport:
    """
    Classify a measure into the Kato, Dynkin and Green-tight classes of a process.

    Examples:
        classify_measure("brownian:d=3", "lebesgue:ball(0,1)", p=2)
        classify_measure("stable:alpha=1,d=2", "sphere:r=1", p=1.5, chen=False)
    """
    return ClassificationBuilder(config).process(process).measure(measure).exponent(p).with_chen(chen).run()


def potential_at(
    process: ProcessLike,
    measure: MeasureLike,
    x,
    p: float = 1.0,
    order: Optional[float] = None,
    config: Optional[Config] = None,
) -> IntegralResult:
    """
    p-potential of the measure at x.

    order=None uses the Green kernel of a transient process and R_1 otherwise;
    order=0 insists on the Green kernel.

    Examples:
        potential_at("brownian:d=3", "lebesgue:ball(0,1)", [0, 0, 0])   # 1
    """
    config = config or get_config()
    spec = parse_process(process)
    mu = parse_measure(measure, spec.dimension)
    return p_potential(kernel_for(spec, order), p, mu, x, tol=config.tolerances)


def sup_potential(
    process: ProcessLike,
    measure: MeasureLike,
    p: float = 1.0,
    order: Optional[float] = None,
    region: Optional[DomainLike] = None,
    config: Optional[Config] = None,
) -> SupResult:
    """Searched supremum of the p-potential, restricted to a region when given."""
    config = config or get_config()
    spec = parse_process(process)
    mu = parse_measure(measure, spec.dimension)
    where = parse_domain(region, spec.dimension) if region is not None else None
    return sup_p_potential(kernel_for(spec, order), p, mu, where, config.search, config.tolerances, config.threads)


def kato_profile(
    process: ProcessLike,
    measure: MeasureLike,
    p: float = 1.0,
    radii: Sequence[float] = LOCAL_RADII,
    config: Optional[Config] = None,
) -> DecayProfile:
    """Local Kato profile r -> sup_x int_{B_r(x)} G(x,y)^p mu(dy) of the 0-order (or R_1) kernel."""
    config = config or get_config()
    spec = parse_process(process)
    mu = parse_measure(measure, spec.dimension)
    return local_kato_profile(kernel_for(spec), p, mu, radii, config.search, config.tolerances, config.threads)


def b0(domain: DomainLike, radii: Sequence[float] = B0_RADII, d: Optional[int] = None,
       config: Optional[Config] = None) -> DecayProfile:
    """
    B0 profile R -> sup_{|x|=R} m(D intersected with B_1(x)); IN means D is in B0.

    Examples:
        b0("strip:w=1,d=2").verdict      # OUT
        b0("horn:exp,rate=1,d=2").verdict  # IN
    """
    config = config or get_config()
    return b0_profile(parse_domain(domain, d), radii, config.search, config.tolerances)


def embedding_spectrum(
    domain: DomainLike,
    k: int = 10,
    process: Optional[ProcessLike] = None,
    levels: Sequence[float] = (1 / 16, 1 / 32, 1 / 64),
    d: Optional[int] = None,
    config: Optional[Config] = None,
) -> SpectralReport:
    """
    Top-k singular values of the energy-to-L^2 embedding on a bounded domain.

    Brownian (or no process): refined local Dirichlet spectrum, sigma_k = lambda_k^{-1/2}.
    Jump processes: the nonlocal form on the finest level.
    """
    config = config or get_config()
    spec = parse_process(process) if process is not None else None
    region = parse_domain(domain, spec.dimension if spec else d)
    if not region.bounded:
        raise ConfigurationError("embedding spectra need a bounded domain; use compactness_study", "domain")
    if spec is not None and spec.kind != ProcessKind.BROWNIAN:
        form = assemble_nonlocal(spec.alpha, spec.mass, region, min(levels), config.tolerances.truncation_radius)
        return embedding_singular_values(form, k)
    return _singular_values(dirichlet_eigenvalues(region, k, levels, workers=config.threads))


def compactness_study(
    domain: DomainLike,
    k: int = 10,
    lengths: Sequence[float] = TRUNCATION_LENGTHS,
    h: float = 1 / 16,
    process: Optional[ProcessLike] = None,
    d: Optional[int] = None,
    config: Optional[Config] = None,
) -> TruncationStudy:
    """
    Singular values across growing truncations of an unbounded domain.

    Examples:
        compactness_study("horn:exp,rate=1,d=2").verdict   # IN (stabilizes)
        compactness_study("strip:w=1,d=2").verdict         # OUT (keeps moving)
    """
    config = config or get_config()
    spec = parse_process(process) if process is not None else None
    region = parse_domain(domain, spec.dimension if spec else d)
    params = (spec.alpha, spec.mass) if spec is not None and spec.kind != ProcessKind.BROWNIAN else None
    return truncation_study(region, lengths, k, h, params, workers=config.threads)


def feynman_kac_at(
    process: ProcessLike,
    potential: Union[str, PotentialFunction, None],
    t: float,
    x,
    domain: Optional[DomainLike] = None,
    config: Optional[Config] = None,
) -> MCEstimate:
    """
    Monte Carlo P_t^{-V} 1(x), killed on leaving the domain when one is given.

    Examples:
        feynman_kac_at("brownian:d=1", "constant,scale=1", 1.0, [0])   # ~ exp(-1)
    """
    spec, V, cfg = _path_setup(process, potential, domain, config)
    return feynman_kac(spec, V, None, t, x, cfg)


def ground_state_energy(
    process: ProcessLike,
    potential: Union[str, PotentialFunction],
    times: Sequence[float] = FK_TIMES,
    points: Optional[Sequence] = None,
    domain: Optional[DomainLike] = None,
    config: Optional[Config] = None,
) -> DecayRate:
    """
    Bottom of the spectrum of the Schrodinger semigroup from the decay of P_t^{-V} 1.

    Examples:
        ground_state_energy("brownian:d=1", "harmonic").rate   # ~ 0.5
    """
    spec, V, cfg = _path_setup(process, potential, domain, config)
    points = points if points is not None else [np.zeros(spec.dimension)]
    return fk_decay_rate(spec, V, None, times, points, cfg)


def exit_time(process: ProcessLike, domain: DomainLike, x0, config: Optional[Config] = None) -> MCEstimate:
    """
    Monte Carlo E_x0[tau_D].

    Examples:
        exit_time("brownian:d=3", "ball(0,1)", [0, 0, 0])   # ~ 1/3
    """
    spec, _, cfg = _path_setup(process, None, domain, config)
    return exit_time_estimate(spec, cfg.domain, x0, cfg)


# =============================================================================
# MID-LEVEL API: Composable building blocks
# =============================================================================

class ClassificationBuilder:
    """
    Build a classification run step by step.

        report = (ClassificationBuilder()
                  .process("stable:alpha=1.5,d=1")
                  .measure("lebesgue:box(-1,1)")
                  .exponent(4)
                  .with_chen(False)
                  .run())
    """

    def __init__(self, config: Optional[Config] = None):
        self.config = config or get_config()
        self._process: Optional[ProcessSpec] = None
        self._measure = None
        self._p = 1.0
        self._chen = True
        self._orders = LADDER_ORDERS
        self._radii = LOCAL_RADII
        self._tail_radii = TAIL_RADII
        self._origin = None

    def process(self, process: ProcessLike):
        self._process = parse_process(process)
        return self

    def measure(self, measure: MeasureLike):
        self._measure = measure
        return self

    def exponent(self, p: float):
        if p < 1:
            raise ConfigurationError("p must be >= 1", "p")
        self._p = float(p)
        return self

    def with_chen(self, enabled: bool = True):
        self._chen = enabled
        return self

    def ladder(self, orders: Sequence[float]):
        self._orders = tuple(orders)
        return self

    def radii(self, local: Optional[Sequence[float]] = None, tail: Optional[Sequence[float]] = None):
        if local is not None:
            self._radii = tuple(local)
        if tail is not None:
            self._tail_radii = tuple(tail)
        return self

    def centered_at(self, origin):
        self._origin = np.asarray(origin, dtype=float)
        return self

    def resolved(self):
        """(process, measure) after shorthand parsing and dimension checks."""
        if self._process is None:
            raise ConfigurationError("no process given", "process")
        if self._measure is None:
            raise ConfigurationError("no measure given", "measure")
        return self._process, parse_measure(self._measure, self._process.dimension)

    def run(self) -> ClassReport:
        spec, mu = self.resolved()
        logger.info(f"Classification: {describe(spec)} / {mu.label or mu.kind.value} / p={self._p:g}")
        return classify(
            spec, self._p, mu,
            search=self.config.search,
            tol=self.config.tolerances,
            orders=self._orders,
            radii=self._radii,
            tail_radii=self._tail_radii,
            origin=self._origin,
            chen=self._chen,
            workers=self.config.threads,
        )


# =============================================================================
# LOW-LEVEL API: Foundational primitives
# =============================================================================

def kernel_for(spec: ProcessSpec, order: Optional[float] = None) -> RadialKernel:
    """Radial kernel of a process: Green kernel (R_1 if recurrent) for order None, else R_order."""
    if order is None:
        return green_radial(spec) if transient(spec) else resolvent_radial(spec, 1.0)
    if order == 0.0:
        return green_radial(spec)
    return resolvent_radial(spec, order)


def path_config(process: ProcessLike, domain: Optional[DomainLike] = None,
                config: Optional[Config] = None) -> PathConfig:
    """PathConfig from the toolkit config, seed and worker cap."""
    config = config or get_config()
    spec = parse_process(process)
    region = parse_domain(domain, spec.dimension) if domain is not None else None
    return PathConfig.from_config(spec, config.monte_carlo, config.seed, region, config.threads)


# =============================================================================
# Helper Functions (Internal)
# =============================================================================

def _path_setup(process, potential, domain, config):
    cfg = path_config(process, domain, config)
    V = parse_potential(potential) if potential is not None else None
    return cfg.process, V, cfg


def _singular_values(report: SpectralReport) -> SpectralReport:
    def flip(values: Optional[List[float]]) -> Optional[List[float]]:
        if values is None:
            return None
        return [float(v) ** -0.5 for v in values]

    return SpectralReport(
        kind="singular_values",
        values=flip(report.values),
        levels=report.levels,
        level_values=[flip(v) for v in report.level_values],
        extrapolated=flip(report.extrapolated),
        converged=report.converged,
        label=report.label.replace("Dirichlet eigenvalues", "embedding singular values"),
        notes=report.notes,
    )


# =============================================================================
# Export the clean API
# =============================================================================

__all__ = [
    # High-level API
    "classify_measure",
    "potential_at",
    "sup_potential",
    "kato_profile",
    "b0",
    "embedding_spectrum",
    "compactness_study",
    "feynman_kac_at",
    "ground_state_energy",
    "exit_time",

    # Mid-level API
    "ClassificationBuilder",

    # Low-level API
    "kernel_for",
    "path_config",
    "parse_process",
    "parse_domain",
    "parse_measure",
    "parse_potential",
    "describe",
]
