"""Path sampling and Monte Carlo estimators for Brownian, stable and relativistic stable processes.

Brownian motion runs on the (1/2)Delta clock. The jump processes are subordinated
Brownian motions X_t = W_{2 T_t}, where T is the (alpha/2)-stable subordinator
(m = 0) or its exponential tilt by exp(-m^{2/alpha} s) (m > 0), so that
E exp(i xi X_t) = exp(-t [(|xi|^2 + m^{2/alpha})^{alpha/2} - m]).

Path batches use independent streams spawned from one seed; per-path results are
concatenated in batch order, so estimates depend only on the seed and the batch size.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator

from .config import MonteCarloConfig, SearchConfig, ToleranceConfig
from .geometry import Domain, DomainKind, PotentialFunction, b0_profile, domain_volume
from .kernels import ProcessKind, ProcessSpec
from .profiles import Approach, DecayProfile, Verdict
from .utils import ProgressTracker, SamplingError, parallel_map, render_csv, write_text

logger = logging.getLogger(__name__)

MIN_ACCEPTANCE = 1e-4
ESTIMATE_COLUMNS = ["label", "estimate", "se", "n", "dt", "seed", "bias_note"]

PathFunction = Callable[[np.ndarray], np.ndarray]


# =============================================================================
# Types
# =============================================================================

class PathConfig(BaseModel):
    """Simulation settings for one estimator call."""
    process: ProcessSpec = Field(..., description="Process to simulate")
    dt: float = Field(1e-3, gt=0, description="Time step")
    horizon: float = Field(50.0, gt=0, description="Time cap for exit-time simulations")
    paths: int = Field(100_000, ge=1, description="Number of sample paths")
    batch_size: int = Field(10_000, ge=1, description="Paths per independently seeded batch")
    seed: int = Field(20240101, description="Root seed")
    domain: Optional[Domain] = Field(None, description="Killing domain (paths die on exit)")
    workers: int = Field(1, ge=1, description="Parallel batch workers")
    z: float = Field(1.96, gt=0, description="Normal quantile for reported intervals")

    @model_validator(mode="after")
    def _check(self) -> "PathConfig":
        if self.dt > self.horizon:
            raise ValueError("dt must not exceed the horizon")
        if self.domain is not None and self.domain.dimension != self.process.dimension:
            raise ValueError("killing domain dimension does not match the process")
        return self

    @classmethod
    def from_config(cls, process: ProcessSpec, mc: Optional[MonteCarloConfig] = None, seed: int = 20240101,
                    domain: Optional[Domain] = None, workers: int = 1) -> "PathConfig":
        mc = mc or MonteCarloConfig()
        return cls(process=process, dt=mc.dt, horizon=mc.horizon, paths=mc.paths, batch_size=mc.batch_size,
                   seed=seed, domain=domain, workers=workers, z=mc.z)

    def batch_sizes(self) -> List[int]:
        full, rest = divmod(self.paths, self.batch_size)
        return [self.batch_size] * full + ([rest] if rest else [])


@dataclass
class MCEstimate:
    """Monte Carlo mean with its standard error; value +- z se is the reported interval."""
    value: float
    standard_error: float
    n: int
    dt: float
    seed: int
    bias_note: str = ""
    z: float = 1.96
    censored: int = 0
    label: str = ""
    notes: List[str] = field(default_factory=list)

    @property
    def interval(self) -> Tuple[float, float]:
        return self.value - self.z * self.standard_error, self.value + self.z * self.standard_error

    def row(self) -> list:
        return [self.label, self.value, self.standard_error, str(self.n), self.dt, str(self.seed), self.bias_note]


def estimates_to_csv(estimates: Sequence[MCEstimate]) -> str:
    return render_csv(ESTIMATE_COLUMNS, [e.row() for e in estimates])


def _estimate(values: np.ndarray, cfg: PathConfig, bias_note: str, label: str = "", censored: int = 0) -> MCEstimate:
    n = len(values)
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MCEstimate(float(np.mean(values)), se, n, cfg.dt, cfg.seed, bias_note, cfg.z, censored, label)


def _run_batches(cfg: PathConfig, simulate: Callable[[np.random.Generator, int], np.ndarray],
                 description: str) -> np.ndarray:
    """Per-path results of all batches, concatenated in batch order."""
    sizes = cfg.batch_sizes()
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(sizes))
    tracker = ProgressTracker(len(sizes), description, every=max(1, len(sizes) // 10))

    def one(i):
        out = simulate(np.random.default_rng(seeds[i]), sizes[i])
        tracker.update()
        return out

    results = parallel_map(one, list(range(len(sizes))), cfg.workers)
    tracker.complete()
    return np.concatenate(results, axis=-1)


# =============================================================================
# Sampling
# =============================================================================

def _positive_stable(beta: float, n: int, stream: np.random.Generator) -> np.ndarray:
    """K with E exp(-lambda K) = exp(-lambda^beta), 0 < beta < 1, by the Zolotarev-Kanter transform."""
    u = math.pi * (1.0 - stream.random(n))
    e = stream.exponential(size=n)
    zolotarev = (np.sin(beta * u) ** beta * np.sin((1.0 - beta) * u) ** (1.0 - beta) / np.sin(u)) ** (1.0 / (1.0 - beta))
    return (zolotarev / e) ** ((1.0 - beta) / beta)


def sample_subordinator(beta: float, m: float, dt: float, n: int, stream: np.random.Generator) -> np.ndarray:
    """Increments T_dt with E exp(-lambda T_dt) = exp(-dt [(lambda + m^{1/beta})^beta - m]).

    m = 0 gives the beta-stable subordinator. For m > 0 stable proposals are accepted with
    probability exp(-m^{1/beta} s); when the acceptance exp(-m dt) is small the step is
    split into pieces of acceptance at least 1/e.
    """
    if not 0 < beta < 1:
        raise SamplingError("subordinator index must lie in (0, 1)")
    if dt <= 0:
        raise SamplingError("dt must be positive")
    if m == 0:
        return dt ** (1.0 / beta) * _positive_stable(beta, n, stream)
    tilt = m ** (1.0 / beta)
    pieces = max(1, math.ceil(m * dt))
    if math.exp(-m * dt) < MIN_ACCEPTANCE:
        logger.debug(f"Splitting tempered step dt={dt:g} into {pieces} pieces")
    sub = dt / pieces
    total = np.zeros(n)
    for _ in range(pieces):
        out = np.empty(n)
        pending = np.arange(n)
        while pending.size:
            s = sub ** (1.0 / beta) * _positive_stable(beta, pending.size, stream)
            accept = stream.random(pending.size) < np.exp(-tilt * s)
            out[pending[accept]] = s[accept]
            pending = pending[~accept]
        total += out
    return total


def sample_increment(spec: ProcessSpec, dt: float, stream: np.random.Generator, n: Optional[int] = None) -> np.ndarray:
    """Displacement over dt: shape (d,) when n is None, else (n, d)."""
    if dt <= 0:
        raise SamplingError("dt must be positive")
    size = 1 if n is None else n
    z = stream.standard_normal((size, spec.dimension))
    if spec.kind == ProcessKind.BROWNIAN:
        out = math.sqrt(dt) * z
    else:
        T = sample_subordinator(spec.alpha / 2.0, spec.mass, dt, size, stream)
        out = np.sqrt(2.0 * T)[:, None] * z
    return out[0] if n is None else out


# =============================================================================
# Exit times
# =============================================================================

def _distance_to_exterior(domain: Domain, pts: np.ndarray) -> Optional[np.ndarray]:
    """Vectorized distance to the boundary for the kinds with a closed form."""
    k = domain.kind
    if k == DomainKind.BALL:
        return domain.radius - np.linalg.norm(pts - np.asarray(domain.center), axis=1)
    if k == DomainKind.BOX:
        return np.min(np.minimum(pts - np.asarray(domain.lo), np.asarray(domain.hi) - pts), axis=1)
    if k == DomainKind.STRIP:
        return 0.5 * domain.width - np.abs(pts[:, domain.axis - 1])
    return None


def _bias_note(spec: ProcessSpec, bridged: bool) -> str:
    if spec.kind == ProcessKind.BROWNIAN:
        return "O(dt) with bridge crossing correction" if bridged else "O(sqrt(dt)) discrete monitoring"
    return "exit at first step outside D (jump overshoot, no bridge correction)"


def _exit_times(spec: ProcessSpec, domain: Domain, x0: np.ndarray, dt: float, horizon: float,
                stream: np.random.Generator, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """First exit times (censored at the horizon) and the censoring mask."""
    pos = np.tile(np.asarray(x0, dtype=float), (n, 1))
    tau = np.full(n, horizon)
    alive = domain.contains(pos)
    tau[~alive] = 0.0
    steps = int(math.ceil(horizon / dt))
    brownian = spec.kind == ProcessKind.BROWNIAN
    for k in range(1, steps + 1):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        start = pos[idx]
        new = start + sample_increment(spec, dt, stream, idx.size)
        out = ~domain.contains(new)
        if brownian:
            a = _distance_to_exterior(domain, start)
            b = _distance_to_exterior(domain, new)
            if a is not None:
                crossed = stream.random(idx.size) < np.exp(-2.0 * np.maximum(a, 0.0) * np.maximum(b, 0.0) / dt)
                out |= crossed
            tau[idx[out]] = (k - 0.5) * dt
        else:
            tau[idx[out]] = k * dt
        pos[idx] = new
        alive[idx[out]] = False
    return tau, alive


def exit_time_estimate(spec: ProcessSpec, domain: Domain, x0, cfg: PathConfig) -> MCEstimate:
    """E_x0[tau_D]; paths alive at the horizon count with tau = horizon (lower-bound semantics)."""
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if not bool(domain.contains(x0[None, :])[0]):
        raise SamplingError("x0 must lie in D")

    def simulate(stream, n):
        tau, censored = _exit_times(spec, domain, x0, cfg.dt, cfg.horizon, stream, n)
        return np.stack([tau, censored.astype(float)])

    results = _run_batches(cfg, simulate, f"Exit times from {domain.kind.value}")
    censored = int(results[1].sum())
    estimate = _estimate(results[0], cfg, _bias_note(spec, _distance_to_exterior(domain, x0[None, :]) is not None),
                         f"E[tau_D] at {x0.tolist()}", censored)
    if censored:
        estimate.notes.append(f"{censored} paths censored at the horizon {cfg.horizon:g}: estimate is a lower bound")
        logger.warning(f"{censored} exit-time paths censored at horizon {cfg.horizon:g}")
    return estimate


def isoperimetric_cap(d: int, volume: float) -> float:
    """(d+2)/(2 pi d) ((d+2)/2)^{2/d} m(D)^{2/d}."""
    return (d + 2.0) / (2.0 * math.pi * d) * ((d + 2.0) / 2.0) ** (2.0 / d) * volume ** (2.0 / d)


@dataclass
class GreenBoundedProbe:
    estimates: List[MCEstimate]
    sup: float
    argmax: List[float]
    cap: Optional[float]
    notes: List[str] = field(default_factory=list)


def green_bounded_probe(spec: ProcessSpec, domain: Domain, grid: np.ndarray, cfg: PathConfig,
                        tol: Optional[ToleranceConfig] = None) -> GreenBoundedProbe:
    """sup over the grid of E_x[tau_D], next to the volume cap when it applies (Brownian, d >= 2)."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    grid = grid[domain.contains(grid)]
    if len(grid) == 0:
        raise SamplingError("no probe point lies in D")
    estimates = [exit_time_estimate(spec, domain, x, cfg) for x in grid]
    values = [e.value for e in estimates]
    best = int(np.argmax(values))
    notes, cap = [], None
    d = spec.dimension
    if spec.kind != ProcessKind.BROWNIAN or d < 2:
        notes.append("volume cap not applicable (Brownian motion in d >= 2 only)")
    else:
        volume = domain_volume(domain, tol)
        if math.isfinite(volume):
            cap = isoperimetric_cap(d, volume)
        else:
            notes.append("infinite volume: cap skipped")
    return GreenBoundedProbe(estimates, float(values[best]), grid[best].tolist(), cap, notes)


# =============================================================================
# Feynman-Kac
# =============================================================================

def _fk_weights(spec: ProcessSpec, V: Optional[PathFunction], f: Optional[PathFunction], x: np.ndarray, times: Sequence[float],
                dt: float, domain: Optional[Domain], stream: np.random.Generator, n: int) -> np.ndarray:
    """exp(-int_0^t V(X_s) ds) f(X_t) 1{t < tau_D} at each ladder time, shape (len(times), n)."""
    t_max = max(times)
    steps = max(1, int(round(t_max / dt)))
    h = t_max / steps
    marks = {int(round(t / h)): i for i, t in enumerate(times)}
    pos = np.tile(x, (n, 1))
    alive = np.ones(n, dtype=bool) if domain is None else domain.contains(pos)
    exponent = np.zeros(n)
    v_prev = V(pos) if V is not None else None
    out = np.zeros((len(times), n))
    for k in range(1, steps + 1):
        pos = pos + sample_increment(spec, h, stream, n)
        if domain is not None:
            alive &= domain.contains(pos)
        if V is not None:
            v_now = V(pos)
            exponent += 0.5 * h * (v_prev + v_now)
            v_prev = v_now
        if k in marks:
            value = np.exp(-exponent) * alive
            if f is not None:
                value = value * f(pos)
            out[marks[k]] = value
    return out


def feynman_kac(spec: ProcessSpec, V: Optional[PathFunction], f: Optional[PathFunction], t: float, x, cfg: PathConfig) -> MCEstimate:
    """P_t^{-V} f(x) = E_x[exp(-int_0^t V(X_s) ds) f(X_t)], killed on leaving cfg.domain."""
    if t <= 0:
        raise SamplingError("t must be positive")
    x = np.asarray(x, dtype=float).reshape(-1)
    values = _run_batches(cfg, lambda s, n: _fk_weights(spec, V, f, x, [t], cfg.dt, cfg.domain, s, n)[0],
                          f"Feynman-Kac t={t:g}")
    return _estimate(values, cfg, "trapezoid in time, O(dt^2) for smooth V", f"P_t^-V f at t={t:g}, x={x.tolist()}")


@dataclass
class DecayRate:
    rate: float
    standard_error: float
    times: List[float]
    estimates: List[MCEstimate]
    notes: List[str] = field(default_factory=list)


def fk_decay_rate(spec: ProcessSpec, V: Optional[PathFunction], f: Optional[PathFunction], times: Sequence[float],
                  points: Sequence, cfg: PathConfig, tail: int = 3) -> DecayRate:
    """lambda_0 from the slope of -log P_t^{-V} f against t over the tail of a geometric ladder.

    Ladder times share paths; the estimate at each t averages over the starting points.
    """
    times = sorted(float(t) for t in times)
    points = [np.asarray(p, dtype=float).reshape(-1) for p in points]

    def simulate(stream, n):
        return np.mean([_fk_weights(spec, V, f, x, times, cfg.dt, cfg.domain, stream, n) for x in points], axis=0)

    values = _run_batches(cfg, simulate, "Feynman-Kac ladder")
    estimates = [_estimate(values[i], cfg, "trapezoid in time, O(dt^2) for smooth V", f"t={t:g}")
                 for i, t in enumerate(times)]
    notes = []
    usable = []
    for t, e in zip(times, estimates):
        if e.value <= 0:
            notes.append(f"ladder truncated at t={t:g}: nonpositive estimate")
            logger.warning(f"Feynman-Kac ladder truncated at t={t:g}: nonpositive estimate")
            break
        usable.append((t, e))
    usable = usable[-tail:] if len(usable) > tail else usable
    if len(usable) < 2:
        return DecayRate(math.nan, math.nan, times, estimates, notes + ["fewer than two usable ladder points"])
    t = np.array([u[0] for u in usable])
    y = -np.log([u[1].value for u in usable])
    sy = np.array([max(u[1].standard_error / u[1].value, 1e-15) for u in usable])
    weights = 1.0 / sy ** 2
    tbar = np.sum(weights * t) / np.sum(weights)
    slope = float(np.sum(weights * (t - tbar) * y) / np.sum(weights * (t - tbar) ** 2))
    se = float(math.sqrt(1.0 / np.sum(weights * (t - tbar) ** 2)))
    logger.info(f"Feynman-Kac decay rate {slope:.6g} +- {se:.2g}")
    return DecayRate(slope, se, times, estimates, notes)


# =============================================================================
# Lifetime
# =============================================================================

@dataclass
class LifetimeTail:
    t: float
    points: List[List[float]]
    estimates: List[MCEstimate]
    sup: float
    argmax: Optional[List[float]]


def lifetime_tail(spec: ProcessSpec, t: float, grid: np.ndarray, cfg: PathConfig,
                  V: Optional[PathFunction] = None) -> LifetimeTail:
    """sup over the grid of P_x(zeta <= t), with zeta the exit time of cfg.domain or the V-killing time."""
    grid = np.atleast_2d(np.asarray(grid, dtype=float))
    if cfg.domain is None and V is None:
        zero = [MCEstimate(0.0, 0.0, cfg.paths, cfg.dt, cfg.seed, "conservative process", cfg.z) for _ in grid]
        return LifetimeTail(t, grid.tolist(), zero, 0.0, grid[0].tolist() if len(grid) else None)
    estimates = []
    for x in grid:
        if cfg.domain is not None and cfg.domain.kind in (DomainKind.BALL, DomainKind.BOX, DomainKind.STRIP) \
                and spec.kind == ProcessKind.BROWNIAN and V is None:
            def simulate(stream, n, x=x):
                tau, _ = _exit_times(spec, cfg.domain, x, cfg.dt, t, stream, n)
                return (tau < t).astype(float)
        else:
            def simulate(stream, n, x=x):
                return 1.0 - _fk_weights(spec, V, None, x, [t], cfg.dt, cfg.domain, stream, n)[0]
        values = _run_batches(cfg, simulate, f"Lifetime tail t={t:g}")
        estimates.append(_estimate(values, cfg, _bias_note(spec, True), f"P_x(zeta<={t:g}) at {x.tolist()}"))
    values = [e.value for e in estimates]
    best = int(np.argmax(values))
    return LifetimeTail(t, grid.tolist(), estimates, float(values[best]), grid[best].tolist())


def lifetime_profile(spec: ProcessSpec, times: Sequence[float], grid: np.ndarray, cfg: PathConfig,
                     V: Optional[PathFunction] = None) -> DecayProfile:
    """Trend of sup_x P_x(zeta <= t) as t -> 0; IN means the lifetime condition holds with gamma = 0."""
    times = sorted(times)
    sups = [lifetime_tail(spec, t, grid, cfg, V).sup for t in times]
    return DecayProfile.build(times, sups, Approach.ZERO, "lifetime tail sup_x P_x(zeta <= t)")


# =============================================================================
# Schrodinger sublevel sets
# =============================================================================

@dataclass
class SublevelProbe:
    levels: List[float]
    profiles: List[DecayProfile]
    verdict: Verdict


def schrodinger_sublevel_probe(V: PotentialFunction, d: int, levels: Sequence[float], radii: Sequence[float],
                               search: Optional[SearchConfig] = None,
                               tol: Optional[ToleranceConfig] = None) -> SublevelProbe:
    """B0 profiles of {V <= M}; IN at every level is the compact-semigroup signature."""
    profiles = [b0_profile(Domain.sublevel(d, V, M), radii, search, tol) for M in levels]
    verdicts = [p.verdict for p in profiles]
    if all(v == Verdict.IN for v in verdicts):
        verdict = Verdict.IN
    elif any(v == Verdict.OUT for v in verdicts):
        verdict = Verdict.OUT
    else:
        verdict = Verdict.INCONCLUSIVE
    return SublevelProbe(list(levels), profiles, verdict)


# =============================================================================
# Traces
# =============================================================================

def simulate_paths(spec: ProcessSpec, x0, dt: float, steps: int, n: int, seed: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """times (steps+1,) and positions (n, steps+1, d) of free paths."""
    stream = np.random.default_rng(seed)
    d = spec.dimension
    positions = np.zeros((n, steps + 1, d))
    positions[:, 0] = np.asarray(x0, dtype=float).reshape(-1)
    for k in range(1, steps + 1):
        positions[:, k] = positions[:, k - 1] + sample_increment(spec, dt, stream, n)
    return dt * np.arange(steps + 1), positions


def dump_traces(path, times: np.ndarray, positions: np.ndarray) -> Path:
    """One line per path: 't x1 .. xd' groups separated by ' ; '."""
    lines = [f"# kato-toolkit path traces: {positions.shape[0]} paths, {len(times)} times, d={positions.shape[2]}"]
    for path_positions in positions:
        groups = [" ".join([repr(float(t))] + [repr(float(v)) for v in x]) for t, x in zip(times, path_positions)]
        lines.append(" ; ".join(groups))
    return write_text(Path(path), "\n".join(lines) + "\n")
