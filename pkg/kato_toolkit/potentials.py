"""p-potentials of measures and their classification into Kato, Dynkin and Green-tight classes.

For a radial kernel k and p >= 1 the p-potential of mu at x is int k(x, y)^p mu(dy).
Each class is decided from sampled profiles:

    S_K^p        sup_x R_a^p mu(x) -> 0 as a -> inf   (resolvent ladder, reference kernel)
    S_EK^p       the same limit is < 1
    S_D^p        sup_x R_a^p mu(x) < inf for some a
    S_D0^p       sup_x G^p mu(x) < inf                (R_1 for recurrent processes)
    K^p_{nu,b}   local Kato profile of r^{b - nu} -> 0
    K^{p,inf}    tail profile of the reference kernel -> 0
    Zhao / Chen  Green-tightness (with semi variants at threshold 1)
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, field_validator
from scipy import optimize

from .config import SearchConfig, ToleranceConfig
from .geometry import (
    Domain,
    DomainKind,
    IntegralResult,
    MeasureKind,
    MeasureSpec,
    Singularity,
    ball_mass,
    ball_volume,
    boundary_distance,
    domain_volume,
    integrate,
    max_distance,
    restricted,
    sample,
)
from .kernels import (
    ProcessKind,
    ProcessSpec,
    RadialKernel,
    green_constant,
    green_radial,
    reference_kernel,
    resolvent_radial,
    transient,
)
from .profiles import Approach, DecayProfile, Status, Verdict
from .quadrature import quad_checked, sphere_rule, unit_ball_volume, unit_sphere_area
from .utils import ConfigurationError, GeometryError, QuadratureError, SamplingError, jsonable, parallel_map

logger = logging.getLogger(__name__)

LOCAL_RADII: Tuple[float, ...] = (0.5,) + tuple(10.0 ** (-k) for k in range(1, 17))
TAIL_RADII: Tuple[float, ...] = (2.0, 4.0, 8.0, 16.0, 32.0)
LADDER_ORDERS: Tuple[float, ...] = (1.0, 4.0, 16.0, 64.0, 256.0)
CHEN_DELTA_FRACTIONS: Tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4, 1e-6)


def _check_p(p: float) -> None:
    if not p >= 1.0:
        raise ConfigurationError("p must be a real number >= 1", "p")


# =============================================================================
# p-potentials
# =============================================================================

def _radial_region(region: Optional[Domain], x: np.ndarray) -> Optional[float]:
    """Radius when the region is all of R^d (inf) or a ball centered at x, else None."""
    if region is None:
        return math.inf
    if region.kind == DomainKind.FULL:
        return math.inf
    if region.kind == DomainKind.BALL and np.allclose(region.center, x, rtol=0.0, atol=1e-14):
        return region.radius
    return None


def p_potential(
    kernel: RadialKernel,
    p: float,
    measure: MeasureSpec,
    x,
    region: Optional[Domain] = None,
    tol: Optional[ToleranceConfig] = None,
) -> IntegralResult:
    """int_region k(x, y)^p mu(dy), +inf when the singularity or the tail is not integrable."""
    _check_p(p)
    tol = tol or ToleranceConfig()
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != measure.dimension:
        raise GeometryError(f"point dimension {x.size} != measure dimension {measure.dimension}")
    rho = _radial_region(region, x)
    if measure.kind == MeasureKind.LEBESGUE and rho is not None:
        return _lebesgue_layer_cake(kernel, p, measure, x, rho, tol)

    def f(pts):
        with np.errstate(over="ignore"):
            return kernel.between(x, pts) ** p

    singular = Singularity(x, max(kernel.singular_order * p, 0.0), kernel.log_singular)
    return integrate(measure, f, region, singular, kernel.tail_order * p, tol)


def _lebesgue_layer_cake(kernel, p, measure, x, rho, tol) -> IntegralResult:
    """Radial formula int k(s)^p dV(s), V(s) = |D intersected with B_s(x)|."""
    domain = measure.domain
    d = domain.dimension
    gp = kernel.singular_order * p
    if gp > 0 and not kernel.log_singular and gp >= measure.local_dimension(x):
        return IntegralResult(math.inf, 0.0, Status.INFINITE, ["non-integrable singularity"])
    S = min(rho, max_distance(domain, x))
    if math.isinf(S):
        growth = measure.growth_dimension()
        if growth > 0 and kernel.tail_order * p <= growth:
            return IntegralResult(math.inf, 0.0, Status.INFINITE, ["tail of the integrand not integrable"])
    s1 = min(boundary_distance(domain, x, tol), S)
    opts = dict(epsabs=0.0, epsrel=tol.rel_tol, limit=4 * tol.max_subdivisions)

    def kp(s):
        return float(kernel(np.array([s]))[0]) ** p

    def dkp(s):
        k = float(kernel(np.array([s]))[0])
        return -p * k ** (p - 1.0) * float(kernel.slope(np.array([s]))[0])

    area = unit_sphere_area(d)
    value, error, converged = 0.0, 0.0, True
    if s1 > 0:
        head = min(s1, 1.0)
        if gp > 0:
            v, e, ok = quad_checked(lambda s: area * s ** gp * kp(s), 0.0, head,
                                    weight="alg", wvar=(d - 1.0 - gp, 0.0), **opts)
        else:
            v, e, ok = quad_checked(lambda s: area * s ** (d - 1) * kp(s), 0.0, head, **opts)
        value, error, converged = value + v, error + e, converged and ok
        if s1 > head:
            v, e, ok = quad_checked(lambda s: area * s ** (d - 1) * kp(s), head, s1, **opts)
            value, error, converged = value + v, error + e, converged and ok
    if S > s1:
        vol = lambda s: ball_volume(domain, x, s, tol)
        v, e, ok = quad_checked(lambda s: vol(s) * dkp(s), s1, S, **opts)
        boundary = kp(S) * vol(S) if math.isfinite(S) else 0.0
        if s1 > 0:
            boundary -= kp(s1) * unit_ball_volume(d) * s1 ** d
        value, error, converged = value + v + boundary, error + e, converged and ok
    if not converged:
        logger.warning(f"Radial p-potential at x={x.tolist()} did not reach tolerance")
        return IntegralResult(value, error, Status.INCONCLUSIVE, ["quadrature tolerance not reached"])
    return IntegralResult(max(value, 0.0), error)


# =============================================================================
# Sup searches
# =============================================================================

@dataclass
class SupResult:
    value: float
    argmax: Optional[List[float]] = None
    status: Status = Status.OK
    confident: bool = True
    evaluations: int = 0
    notes: List[str] = field(default_factory=list)

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.value)


def support_candidates(
    measure: MeasureSpec,
    search: SearchConfig,
    count: Optional[int] = None,
    region: Optional[Domain] = None,
    extra: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Starting points for sup-searches: points of supp mu (within the region when Frostman applies)."""
    count = count or search.potential_starts
    d = measure.dimension
    stream = np.random.default_rng(search.seed)
    pts = _measure_points(measure, count, search, stream)
    if not search.frostman:
        lo, hi = measure.support_box(search.search_radius)
        pts = np.vstack([pts, lo - 1.0 + (hi - lo + 2.0) * stream.random((count, d))])
    if extra is not None and len(extra):
        pts = np.vstack([np.atleast_2d(extra), pts])
    if region is not None and search.frostman and len(pts):
        keep = region.contains(pts) | _near_region(region, pts)
        pts = pts[keep]
    if len(pts) == 0:
        return np.zeros((0, d))
    _, first = np.unique(np.round(pts, 12), axis=0, return_index=True)
    return pts[np.sort(first)]


def _near_region(region: Domain, pts: np.ndarray, eps: float = 1e-9) -> np.ndarray:
    probe = sphere_rule(region.dimension, 4)[0] * eps * (1.0 + np.max(np.abs(pts)))
    return np.any([region.contains(pts + q) for q in probe], axis=0)


def _measure_points(measure: MeasureSpec, count: int, search: SearchConfig, stream) -> np.ndarray:
    d = measure.dimension
    k = measure.kind
    if k == MeasureKind.ATOMS:
        live = [a.point for a in measure.atoms if a.mass > 0]
        return np.array(live, dtype=float).reshape(-1, d)
    if k == MeasureKind.SPHERE_SURFACE:
        dirs = sphere_rule(d, 4)[0]
        return np.asarray(measure.center) + measure.radius * dirs[:count]
    if k == MeasureKind.MIXTURE:
        parts = [_measure_points(c.measure, max(1, count // len(measure.components)), search, stream)
                 for c in measure.components if c.weight > 0]
        return np.vstack(parts) if parts else np.zeros((0, d))
    domain = measure.domain
    pts = [domain.reference_point()]
    envelope = None if measure.is_bounded() or math.isfinite(measure.total_mass()) else \
        Domain.ball(np.zeros(d), search.search_radius)
    try:
        draw = sample(measure, 8 * count, stream, envelope)
        pts.extend(draw.points[draw.weights > 0][:count])
    except SamplingError:
        logger.debug("Candidate sampling failed; using the reference point only")
    pts = np.array(pts, dtype=float).reshape(-1, d)
    return pts[domain.contains(pts) | _near_region(domain, pts)]


def _projector(measure: MeasureSpec) -> Optional[Callable[[np.ndarray], np.ndarray]]:
    if measure.kind == MeasureKind.ATOMS:
        return None
    if measure.kind == MeasureKind.SPHERE_SURFACE:
        c = np.asarray(measure.center, dtype=float)

        def project(z):
            v = np.asarray(z, dtype=float) - c
            n = np.linalg.norm(v)
            return c + measure.radius * (v / n if n > 0 else np.eye(len(c))[0])
        return project
    return lambda z: np.asarray(z, dtype=float)


def maximize(
    objective: Callable[[np.ndarray], IntegralResult],
    candidates: np.ndarray,
    search: SearchConfig,
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    workers: int = 1,
    label: str = "",
) -> SupResult:
    """Multistart maximization: evaluate candidates, refine the best by Nelder-Mead."""
    if len(candidates) == 0:
        return SupResult(0.0, None, Status.OK, True, 0, ["empty search set"])
    results = parallel_map(objective, list(candidates), workers)
    values = np.array([r.value for r in results])
    evaluations = len(results)
    if np.any(np.isinf(values)):
        i = int(np.argmax(np.isinf(values)))
        return SupResult(math.inf, candidates[i].tolist(), Status.INFINITE, True, evaluations)
    order = np.argsort(values)[::-1]
    best_i = int(order[0])
    best, argmax = float(values[best_i]), np.asarray(candidates[best_i], dtype=float)
    status = results[best_i].status
    top = values[order[: search.refine_top]]
    confident, notes = True, []
    plateau = top.size < 2 or (top[0] - top[-1]) <= 1e-9 * max(abs(top[0]), 1e-300)
    if project is not None and not plateau:
        for i in order[: search.refine_top]:
            def neg(z):
                r = objective(project(z))
                return -r.value if math.isfinite(r.value) else -1e300
            res = optimize.minimize(neg, np.asarray(candidates[i], dtype=float), method="Nelder-Mead",
                                    options={"maxiter": search.max_iter, "xatol": 1e-6,
                                             "fatol": 1e-10 * max(abs(best), 1e-300)})
            evaluations += int(res.nfev)
            value = -float(res.fun)
            if value >= 1e299:
                return SupResult(math.inf, project(res.x).tolist(), Status.INFINITE, True, evaluations)
            if value > best:
                if value > 1.05 * best:
                    confident = False
                best, argmax = value, project(res.x)
    if not confident:
        notes.append("local refinement moved the maximum by more than 5%")
        logger.warning(f"Low-confidence sup-search {label}: refinement improved the best start by >5%")
    return SupResult(best, np.asarray(argmax).tolist(), status, confident, evaluations, notes)


def sup_p_potential(
    kernel: RadialKernel,
    p: float,
    measure: MeasureSpec,
    region: Optional[Domain] = None,
    search: Optional[SearchConfig] = None,
    tol: Optional[ToleranceConfig] = None,
    workers: int = 1,
) -> SupResult:
    """Estimate sup_x int_region k(x, y)^p mu(dy).

    With search.frostman the search set is supp mu intersected with the closure of the region.
    """
    _check_p(p)
    search = search or SearchConfig()
    tol = tol or ToleranceConfig()
    candidates = support_candidates(measure, search, region=region)
    objective = lambda x: p_potential(kernel, p, measure, x, region, tol)
    project = _projector(measure) if search.frostman else (lambda z: np.asarray(z, dtype=float))
    return maximize(objective, candidates, search, project, workers, label=f"{kernel.label} p={p:g}")


def sup_ball_mass(measure: MeasureSpec, r: float, search: Optional[SearchConfig] = None,
                  tol: Optional[ToleranceConfig] = None) -> SupResult:
    """sup_x mu(B_r(x))."""
    search = search or SearchConfig()
    candidates = support_candidates(measure, search)
    objective = lambda x: IntegralResult(ball_mass(measure, x, r, tol))
    return maximize(objective, candidates, search, _projector(measure), label=f"ball mass r={r:g}")


# =============================================================================
# Profiles
# =============================================================================

def _local_sups(kernel, p, measure, radii, search, tol, workers) -> List[SupResult]:
    candidates = support_candidates(measure, search)
    project = _projector(measure)

    def at_radius(r):
        objective = lambda x: p_potential(kernel, p, measure, x, Domain.ball(x, r), tol)
        return maximize(objective, candidates, search, project, label=f"local r={r:g}")

    return parallel_map(at_radius, list(radii), workers)


def local_kato_profile(
    kernel: RadialKernel,
    p: float,
    measure: MeasureSpec,
    radii: Sequence[float] = LOCAL_RADII,
    search: Optional[SearchConfig] = None,
    tol: Optional[ToleranceConfig] = None,
    workers: int = 1,
) -> DecayProfile:
    """phi(r) = sup_x int_{B_r(x)} k^p dmu for each radius, judged as r -> 0."""
    _check_p(p)
    search = search or SearchConfig()
    tol = tol or ToleranceConfig()
    if any(r <= 0 for r in radii):
        raise ConfigurationError("radii must be positive", "radii")
    sups = _local_sups(kernel, p, measure, radii, search, tol, workers)
    notes = [f"r={r:g}: {n}" for r, s in zip(radii, sups) for n in s.notes if n != "empty search set"]
    return DecayProfile.build(list(radii), [s.value for s in sups], Approach.ZERO,
                              f"local Kato profile of {kernel.label}, p={p:g}",
                              tol.verdict_abs_factor, tol.plateau_rel, notes)


def _support_inside_ball(measure: MeasureSpec, origin: np.ndarray, R: float) -> bool:
    k = measure.kind
    if k == MeasureKind.ATOMS:
        return all(np.linalg.norm(np.asarray(a.point) - origin) < R for a in measure.atoms if a.mass > 0)
    if k == MeasureKind.SPHERE_SURFACE:
        return float(np.linalg.norm(np.asarray(measure.center) - origin)) + measure.radius < R
    if k == MeasureKind.MIXTURE:
        return all(_support_inside_ball(c.measure, origin, R) for c in measure.components if c.weight > 0)
    domain = measure.domain
    return domain.bounded and max_distance(domain, origin) < R


def _tail_starts(measure: MeasureSpec, origin: np.ndarray, R: float) -> np.ndarray:
    d = measure.dimension
    dirs = sphere_rule(d, 2)[0] if d > 1 else np.array([[1.0], [-1.0]])
    pts = np.vstack([origin + R * (1.0 + 1e-9) * dirs, origin + 1.5 * R * dirs])
    if measure.kind in (MeasureKind.LEBESGUE, MeasureKind.DENSITY):
        pts = pts[measure.domain.contains(pts)]
    return pts


def tail_profile(
    kernel: RadialKernel,
    p: float,
    measure: MeasureSpec,
    origin=None,
    radii: Sequence[float] = TAIL_RADII,
    search: Optional[SearchConfig] = None,
    tol: Optional[ToleranceConfig] = None,
    workers: int = 1,
) -> DecayProfile:
    """T(R) = sup_x int_{|y - o| >= R} k^p dmu for each R, judged as R -> inf."""
    _check_p(p)
    search = search or SearchConfig()
    tol = tol or ToleranceConfig()
    d = measure.dimension
    origin = np.zeros(d) if origin is None else np.asarray(origin, dtype=float).reshape(-1)
    project = _projector(measure)

    def at_radius(R):
        if _support_inside_ball(measure, origin, R):
            return SupResult(0.0, None, Status.OK, True, 0, [])
        region = Domain.complement(Domain.ball(origin, R))
        candidates = support_candidates(measure, search, region=region, extra=_tail_starts(measure, origin, R))
        objective = lambda x: p_potential(kernel, p, measure, x, region, tol)
        return maximize(objective, candidates, search, project, label=f"tail R={R:g}")

    sups = parallel_map(at_radius, list(radii), workers)
    notes = [f"R={R:g}: {n}" for R, s in zip(radii, sups) for n in s.notes if n != "empty search set"]
    return DecayProfile.build(list(radii), [s.value for s in sups], Approach.INFINITY,
                              f"tail profile of {kernel.label}, p={p:g}",
                              tol.verdict_abs_factor, tol.plateau_rel, notes)


def resolvent_ladder_profile(
    spec: ProcessSpec,
    p: float,
    measure: MeasureSpec,
    orders: Sequence[float] = LADDER_ORDERS,
    search: Optional[SearchConfig] = None,
    tol: Optional[ToleranceConfig] = None,
    workers: int = 1,
) -> DecayProfile:
    """sup_x R_a^p mu(x) along a geometric ladder of orders a."""
    _check_p(p)
    search = search or SearchConfig()
    tol = tol or ToleranceConfig()
    if any(a <= 0 for a in orders):
        raise ConfigurationError("ladder orders must be positive", "orders")
    sups = parallel_map(lambda a: sup_p_potential(resolvent_radial(spec, a), p, measure, None, search, tol),
                        list(orders), workers)
    notes = [f"order={a:g}: {n}" for a, s in zip(orders, sups) for n in s.notes if n != "empty search set"]
    return DecayProfile.build(list(orders), [s.value for s in sups], Approach.INFINITY,
                              f"resolvent ladder of {spec.label}, p={p:g}",
                              tol.verdict_abs_factor, tol.plateau_rel, notes)


# =============================================================================
# Chen condition
# =============================================================================

class ChenOutcome(str, Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"


@dataclass
class ChenResult:
    """Outcome of the adversarial subset search.

    HOLDS means no subset in the searched family broke the bound, not a proof over all
    Borel subsets.
    """
    outcome: ChenOutcome
    worst_value: float
    worst_subset: str
    eps: float
    delta: float
    subsets_tried: int = 0
    notes: List[str] = field(default_factory=list)


def mass_in(measure: MeasureSpec, region: Domain, tol: Optional[ToleranceConfig] = None) -> float:
    """mu(region)."""
    k = measure.kind
    if k == MeasureKind.LEBESGUE:
        return domain_volume(Domain.intersection([measure.domain, region]), tol)
    if k == MeasureKind.ATOMS:
        return float(sum(a.mass for a in measure.atoms if bool(region.contains(np.asarray(a.point)[None, :])[0])))
    if k == MeasureKind.MIXTURE:
        return float(sum(c.weight * mass_in(c.measure, region, tol) for c in measure.components if c.weight > 0))
    return integrate(measure, lambda y: np.ones(len(y)), region, tol=tol).value


def _delta_radius(measure: MeasureSpec, K: Domain, center: np.ndarray, delta: float, tol) -> float:
    """Largest radius rho (by bisection) with mu(B_rho(center) intersected with K) < delta."""
    hi = 2.0 * K.circumradius + float(np.linalg.norm(center))
    mass = lambda r: mass_in(measure, Domain.intersection([K, Domain.ball(center, r)]), tol)
    if mass(hi) < delta:
        return hi
    lo = 0.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        if mass(mid) < delta:
            lo = mid
        else:
            hi = mid
    return lo


def _partition_unions(measure, K, delta, scales, stream, tol) -> List[Tuple[str, Domain]]:
    """Greedy unions of top-mass partition cells of the bounding box of K with mass < delta."""
    out = []
    try:
        restricted_measure = restricted(measure, K)
        draw = sample(restricted_measure, 20_000, stream)
        total = mass_in(measure, K, tol)
    except (SamplingError, GeometryError) as exc:
        logger.debug(f"Partition cells skipped: {exc}")
        return out
    lo, hi = K.bounding_box()
    d = K.dimension
    w = draw.weights / max(np.sum(draw.weights), 1e-300) * total
    for n in scales:
        cell = np.clip(((draw.points - lo) / (hi - lo) * n).astype(int), 0, n - 1)
        keys, inverse = np.unique(cell, axis=0, return_inverse=True)
        masses = np.bincount(inverse.reshape(-1), weights=w, minlength=len(keys))
        chosen, acc = [], 0.0
        for j in np.argsort(masses)[::-1]:
            if acc + masses[j] >= delta:
                break
            acc += masses[j]
            chosen.append(keys[j])
        if not chosen:
            continue
        boxes = [Domain.box(lo + (hi - lo) * c / n, lo + (hi - lo) * (c + 1) / n) for c in chosen]
        region = Domain.intersection([K, Domain.union(boxes)])
        out.append((f"{len(boxes)} greedy cells at scale 1/{n} (mass~{acc:.3g})", region))
    return out


def chen_condition_check(
    kernel: RadialKernel,
    p: float,
    measure: MeasureSpec,
    eps: float,
    K: Domain,
    delta: float,
    search: Optional[SearchConfig] = None,
    tol: Optional[ToleranceConfig] = None,
    centers: Optional[np.ndarray] = None,
) -> ChenResult:
    """Search subsets B of K with mu(B) < delta maximizing sup_x int_{K^c u B} k^p dmu."""
    _check_p(p)
    search = search or SearchConfig()
    tol = tol or ToleranceConfig()
    if not K.bounded:
        raise GeometryError("the compact set K must be bounded")
    mass_K = mass_in(measure, K, tol)
    if not math.isfinite(mass_K):
        raise GeometryError("mu(K) must be finite")
    d = measure.dimension
    outside = Domain.complement(K)
    project = _projector(measure)
    base = support_candidates(measure, search)

    def sup_over(region_b: Optional[Domain], focus: Optional[np.ndarray]) -> SupResult:
        def objective(x):
            tail = p_potential(kernel, p, measure, x, outside, tol)
            if region_b is None or not tail.is_finite:
                return tail
            inner = p_potential(kernel, p, measure, x, region_b, tol)
            status = Status.INCONCLUSIVE if Status.INCONCLUSIVE in (tail.status, inner.status) else inner.status
            return IntegralResult(tail.value + inner.value, tail.error + inner.error, status)
        cands = base if focus is None else np.vstack([np.atleast_2d(focus), base])
        return maximize(objective, cands, search, project, label="chen")

    family: List[Tuple[str, Optional[Domain], Optional[np.ndarray]]] = [("empty set", None, None)]
    if delta > 0:
        if centers is None:
            centers = _singular_centers(kernel, p, measure, K, delta, mass_K, search, tol)
        for c in centers:
            rho = _delta_radius(measure, K, c, delta, tol)
            if rho <= 0:
                continue
            ball = Domain.ball(c, rho)
            region = ball if boundary_distance(K, c, tol) >= rho else Domain.intersection([K, ball])
            family.append((f"ball({np.round(c, 6).tolist()}, {rho:.6g})", region, c))
        scales = (4, 8) if d <= 2 else (3, 6)
        stream = np.random.default_rng(search.seed)
        for name, region in _partition_unions(measure, K, delta, scales, stream, tol):
            family.append((name, region, None))

    worst, worst_name, inconclusive = -math.inf, "empty set", False
    for name, region, focus in family:
        res = sup_over(region, focus)
        if res.status == Status.INCONCLUSIVE or not res.confident:
            inconclusive = True
        if res.value > worst:
            worst, worst_name = res.value, name
        if res.value >= eps:
            break
    if worst >= eps:
        outcome = ChenOutcome.VIOLATED
    elif inconclusive:
        outcome = ChenOutcome.INCONCLUSIVE
    else:
        outcome = ChenOutcome.HOLDS
    logger.info(f"Chen check eps={eps:.4g} delta={delta:.4g}: {outcome.value} (worst {worst:.4g} on {worst_name})")
    return ChenResult(outcome, worst, worst_name, eps, delta, len(family))


def _singular_centers(kernel, p, measure, K, delta, mass_K, search, tol, top: int = 5) -> np.ndarray:
    """Top argmax candidates of the local potential at the radius carrying mass delta."""
    cands = support_candidates(measure, search, region=K)
    if len(cands) == 0:
        return cands
    probe = _delta_radius(measure, K, cands[0], delta, tol) or 1e-3
    scores = []
    for x in cands:
        r = p_potential(kernel, p, measure, x, Domain.ball(x, probe), tol)
        scores.append(r.value)
    order = np.argsort(np.asarray(scores))[::-1][:top]
    return cands[order]


# =============================================================================
# Thresholds and tail bounds
# =============================================================================

def analytic_threshold(spec: ProcessSpec, measure_kind) -> float:
    """p* with mu in S_K^p iff p < p*: d/(d-b)_+ (Lebesgue) or (d-1)/(d-b)_+ (sphere surface)."""
    kind = MeasureKind(measure_kind) if not isinstance(measure_kind, MeasureKind) else measure_kind
    d, b = float(spec.dimension), spec.index
    if kind == MeasureKind.LEBESGUE:
        top = d
    elif kind == MeasureKind.SPHERE_SURFACE:
        top = d - 1.0
    else:
        raise GeometryError(f"no analytic threshold catalogued for {kind.value} measures")
    return math.inf if d <= b else top / (d - b)


def tail_bound_M(r: float, nu: float, beta: float, phi2: Callable[[float], float],
                 rel_tol: float = 1e-8) -> float:
    """M(r) = beta r^{beta-nu} int_0^inf u^{nu-beta-1} Phi2(u) du for decreasing Phi2."""
    if r <= 0:
        raise ConfigurationError("r must be positive", "r")
    if nu < beta:
        raise ConfigurationError("tail bound needs nu >= beta", "nu")
    opts = dict(epsabs=0.0, epsrel=rel_tol, limit=200)
    if nu == beta and phi2(0.0) > 0:
        raise QuadratureError("int_0 u^{-1} Phi2(u) du diverges at 0")
    moment, _, ok_far = quad_checked(lambda t: t ** (nu - 1.0) * phi2(t), 1.0, math.inf, **opts)
    if not ok_far or not math.isfinite(moment):
        raise QuadratureError("Phi2 fails the integrability condition int_1^inf t^{nu-1} Phi2(t) dt < inf")
    head, _, ok_head = quad_checked(phi2, 0.0, 1.0, weight="alg", wvar=(nu - beta - 1.0, 0.0), **opts)
    tail, _, ok_tail = quad_checked(lambda u: u ** (nu - beta - 1.0) * phi2(u), 1.0, math.inf, **opts)
    if not (ok_head and ok_tail):
        raise QuadratureError("Phi2 moment did not converge")
    return beta * r ** (beta - nu) * (head + tail)


# =============================================================================
# Classification
# =============================================================================

class MeasureClass(str, Enum):
    S_K = "S_K"
    S_EK = "S_EK"
    S_D = "S_D"
    S_D0 = "S_D0"
    K_NU_BETA = "K_nu_beta"
    K_NU_BETA_INF = "K_nu_beta_inf"
    ZHAO = "zhao"
    CHEN = "chen"
    ZHAO_SEMI = "zhao_semi"
    CHEN_SEMI = "chen_semi"


IMPLICATIONS: List[Tuple[MeasureClass, MeasureClass]] = [
    (MeasureClass.S_K, MeasureClass.S_EK),
    (MeasureClass.S_EK, MeasureClass.S_D),
    (MeasureClass.ZHAO, MeasureClass.S_K),
    (MeasureClass.ZHAO, MeasureClass.S_D0),
    (MeasureClass.CHEN, MeasureClass.ZHAO),
    (MeasureClass.ZHAO, MeasureClass.ZHAO_SEMI),
    (MeasureClass.CHEN, MeasureClass.CHEN_SEMI),
]


def audit_implications(verdicts: Dict[str, Verdict]) -> List[str]:
    """An implication A => B is violated when A is IN and B is OUT."""
    out = []
    for a, b in IMPLICATIONS:
        if verdicts.get(a.value) == Verdict.IN and verdicts.get(b.value) == Verdict.OUT:
            out.append(f"{a.value} is IN but {b.value} is OUT")
    return out


class ClassReport(BaseModel):
    """Verdicts of one (process, p, measure) classification with supporting profiles."""
    measure_id: str = Field(..., description="Measure label")
    process: ProcessSpec = Field(..., description="Process whose kernels were used")
    p: float = Field(..., ge=1, description="Exponent p")
    verdicts: Dict[str, Verdict] = Field(default_factory=dict, description="Verdict per class")
    profiles: Dict[str, DecayProfile] = Field(default_factory=dict, description="Supporting profiles")
    values: Dict[str, float] = Field(default_factory=dict, description="Supporting scalar values")
    analytic_threshold: Optional[float] = Field(None, description="Catalogued p* when available")
    warnings: List[str] = Field(default_factory=list, description="Implication violations")
    notes: List[str] = Field(default_factory=list, description="Remarks and low-confidence flags")

    @field_validator("values", mode="before")
    @classmethod
    def _parse_values(cls, v):
        return {k: float(x) if isinstance(x, str) else x for k, x in (v or {}).items()}

    @field_validator("analytic_threshold", mode="before")
    @classmethod
    def _parse_threshold(cls, v):
        return float(v) if isinstance(v, str) else v

    def to_record(self) -> dict:
        return jsonable(self.model_dump(mode="python"))

    @classmethod
    def from_record(cls, record: dict) -> "ClassReport":
        return cls.model_validate(record)

    def rows(self) -> List[Tuple[str, str, str]]:
        """(class, verdict, supporting detail) in a fixed order."""
        detail = {
            MeasureClass.S_K.value: "resolvent_ladder",
            MeasureClass.S_EK.value: "resolvent_ladder",
            MeasureClass.S_D.value: "resolvent_ladder",
            MeasureClass.K_NU_BETA.value: "reference_local",
            MeasureClass.K_NU_BETA_INF.value: "reference_tail",
            MeasureClass.ZHAO.value: "green_tail",
            MeasureClass.ZHAO_SEMI.value: "green_tail",
        }
        out = []
        for cls_ in MeasureClass:
            if cls_.value not in self.verdicts:
                continue
            ref = detail.get(cls_.value)
            if ref and ref in self.profiles:
                prof = self.profiles[ref]
                exp = "" if prof.fitted_exponent is None else f", {prof.fit_kind} exponent {prof.fitted_exponent:.3g}"
                info = f"{ref}{exp}"
            elif cls_ == MeasureClass.S_D0:
                info = f"sup potential {self.values.get('S_D0', math.nan):.6g}"
            else:
                info = ""
            out.append((cls_.value, self.verdicts[cls_.value].value, info))
        return out


def _both(a: Verdict, b: Verdict) -> Verdict:
    if Verdict.OUT in (a, b):
        return Verdict.OUT
    if a == b == Verdict.IN:
        return Verdict.IN
    return Verdict.INCONCLUSIVE


def _finite_verdict(res: SupResult) -> Verdict:
    if not res.is_finite:
        return Verdict.OUT
    if res.status == Status.INCONCLUSIVE:
        return Verdict.INCONCLUSIVE
    return Verdict.IN


def _combine_sk(ladder: Verdict, reference: Verdict, notes: List[str]) -> Verdict:
    if Verdict.OUT in (ladder, reference):
        if Verdict.IN in (ladder, reference):
            notes.append("resolvent ladder and reference kernel disagree on S_K")
            logger.warning("Resolvent ladder and reference kernel disagree on S_K; reporting OUT")
        return Verdict.OUT
    if Verdict.IN in (ladder, reference):
        return Verdict.IN
    return Verdict.INCONCLUSIVE


def _scaled_profile(profile: DecayProfile, factor: float, label: str) -> DecayProfile:
    scaled = profile.model_copy(deep=True)
    scaled.values = [v * factor for v in profile.values]
    scaled.label = label
    return scaled


def classify(
    spec: ProcessSpec,
    p: float,
    measure: MeasureSpec,
    search: Optional[SearchConfig] = None,
    tol: Optional[ToleranceConfig] = None,
    orders: Sequence[float] = LADDER_ORDERS,
    radii: Sequence[float] = LOCAL_RADII,
    tail_radii: Sequence[float] = TAIL_RADII,
    origin=None,
    chen: bool = True,
    workers: int = 1,
) -> ClassReport:
    """Classify mu for the process at exponent p."""
    _check_p(p)
    search = search or SearchConfig()
    tol = tol or ToleranceConfig()
    if measure.dimension != spec.dimension:
        raise GeometryError("process and measure dimensions differ")
    d = spec.dimension
    nu, beta = float(d), spec.index
    origin = np.zeros(d) if origin is None else np.asarray(origin, dtype=float)
    verdicts: Dict[str, Verdict] = {}
    profiles: Dict[str, DecayProfile] = {}
    values: Dict[str, float] = {}
    notes: List[str] = []
    logger.info(f"Classifying {measure.label or measure.kind.value} for {spec.label} at p={p:g}")

    ladder = resolvent_ladder_profile(spec, p, measure, orders, search, tol, workers)
    profiles["resolvent_ladder"] = ladder

    reference = None
    if nu >= beta:
        reference = reference_kernel(nu, beta)
        local = local_kato_profile(reference, p, measure, radii, search, tol, workers)
        profiles["reference_local"] = local
        verdicts[MeasureClass.K_NU_BETA.value] = local.verdict
    else:
        unit = sup_ball_mass(measure, 1.0, search, tol)
        values["sup_unit_ball_mass"] = unit.value
        verdicts[MeasureClass.K_NU_BETA.value] = _finite_verdict(unit)
    s_k = _combine_sk(ladder.verdict, verdicts[MeasureClass.K_NU_BETA.value], notes)
    verdicts[MeasureClass.S_K.value] = s_k

    finite = [v for v in ladder.values if math.isfinite(v)]
    if s_k == Verdict.IN or (finite and ladder.values[-1] < 1.0):
        s_ek = Verdict.IN
    elif not finite or ladder.verdict == Verdict.OUT:
        s_ek = Verdict.OUT
    else:
        s_ek = Verdict.INCONCLUSIVE
    verdicts[MeasureClass.S_EK.value] = s_ek
    verdicts[MeasureClass.S_D.value] = Verdict.IN if (finite or s_ek == Verdict.IN) else Verdict.OUT

    if transient(spec):
        green = green_radial(spec)
    else:
        green = resolvent_radial(spec, 1.0)
        notes.append("recurrent process: 0-order classes use the 1-subprocess (kernel R_1)")
    s_d0 = sup_p_potential(green, p, measure, None, search, tol, workers)
    values[MeasureClass.S_D0.value] = s_d0.value
    verdicts[MeasureClass.S_D0.value] = _finite_verdict(s_d0)

    if reference is not None and nu > beta:
        ref_tail = tail_profile(reference, p, measure, origin, tail_radii, search, tol, workers)
    else:
        ref_tail = tail_profile(green, p, measure, origin, tail_radii, search, tol, workers)
    profiles["reference_tail"] = ref_tail
    verdicts[MeasureClass.K_NU_BETA_INF.value] = ref_tail.verdict

    if transient(spec) and spec.kind in (ProcessKind.BROWNIAN, ProcessKind.STABLE):
        green_tail = _scaled_profile(ref_tail, green_constant(spec) ** p, f"tail profile of {green.label}, p={p:g}")
    elif reference is None or nu <= beta:
        green_tail = ref_tail
    else:
        green_tail = tail_profile(green, p, measure, origin, tail_radii, search, tol, workers)
    profiles["green_tail"] = green_tail

    zhao = _both(_both(s_k, verdicts[MeasureClass.S_D0.value]), green_tail.verdict)
    verdicts[MeasureClass.ZHAO.value] = zhao
    below_one = [v for v in green_tail.values if v < 1.0]
    base = _both(s_k, verdicts[MeasureClass.S_D0.value])
    if zhao == Verdict.IN or (base == Verdict.IN and below_one):
        zhao_semi = Verdict.IN
    elif base == Verdict.OUT or (green_tail.verdict == Verdict.OUT and not below_one):
        zhao_semi = Verdict.OUT
    else:
        zhao_semi = Verdict.INCONCLUSIVE
    verdicts[MeasureClass.ZHAO_SEMI.value] = zhao_semi

    if not chen:
        verdicts[MeasureClass.CHEN.value] = Verdict.OUT if zhao == Verdict.OUT else Verdict.INCONCLUSIVE
        verdicts[MeasureClass.CHEN_SEMI.value] = Verdict.OUT if zhao_semi == Verdict.OUT else Verdict.INCONCLUSIVE
        notes.append("Chen search skipped")
    else:
        eps = 0.05 * s_d0.value if s_d0.is_finite else math.inf
        verdicts[MeasureClass.CHEN.value] = _chen_verdict(
            zhao, green, p, measure, eps, green_tail, origin, search, tol, notes, "chen")
        verdicts[MeasureClass.CHEN_SEMI.value] = _chen_verdict(
            zhao_semi, green, p, measure, 1.0, green_tail, origin, search, tol, notes, "chen_semi")
        if verdicts[MeasureClass.CHEN.value] == Verdict.IN and verdicts[MeasureClass.CHEN_SEMI.value] != Verdict.IN:
            verdicts[MeasureClass.CHEN_SEMI.value] = Verdict.IN

    threshold = None
    if measure.kind in (MeasureKind.LEBESGUE, MeasureKind.SPHERE_SURFACE):
        threshold = analytic_threshold(spec, measure.kind)

    warnings = audit_implications(verdicts)
    for w in warnings:
        logger.warning(f"Implication violated: {w}")
    return ClassReport(
        measure_id=measure.label or measure.kind.value,
        process=spec,
        p=p,
        verdicts=verdicts,
        profiles=profiles,
        values=values,
        analytic_threshold=threshold,
        warnings=warnings,
        notes=notes,
    )


def _chen_verdict(prerequisite: Verdict, kernel: RadialKernel, p: float, measure: MeasureSpec, eps: float,
                  tail: DecayProfile, origin: np.ndarray, search, tol, notes: List[str], name: str) -> Verdict:
    """Chen tightness at one eps: pick K from the tail profile, then try a ladder of deltas."""
    if prerequisite != Verdict.IN:
        return Verdict.OUT if prerequisite == Verdict.OUT else Verdict.INCONCLUSIVE
    if eps == 0.0 or not math.isfinite(eps):
        return Verdict.INCONCLUSIVE
    radius = next((R for R, v in zip(tail.abscissae, tail.values) if v < 0.5 * eps), None)
    if radius is None:
        notes.append(f"{name}: no tail radius brings the outside potential below eps/2")
        return Verdict.INCONCLUSIVE
    K = Domain.ball(origin, radius)
    mass_K = mass_in(measure, K, tol)
    if not math.isfinite(mass_K) or mass_K == 0.0:
        return Verdict.IN if mass_K == 0.0 else Verdict.INCONCLUSIVE
    outcomes = []
    for fraction in CHEN_DELTA_FRACTIONS:
        res = chen_condition_check(kernel, p, measure, eps, K, fraction * mass_K, search, tol)
        outcomes.append(res.outcome)
        if res.outcome == ChenOutcome.HOLDS:
            notes.append(f"{name}: eps={eps:.4g} holds with K=B({radius:g}) and delta={fraction * mass_K:.4g}")
            return Verdict.IN
    if all(o == ChenOutcome.VIOLATED for o in outcomes):
        return Verdict.OUT
    return Verdict.INCONCLUSIVE
