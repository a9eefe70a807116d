"""Discretized Dirichlet forms on lattice grids.

Local forms discretize (1/2) int |grad u|^2 with the 2d-point stencil and a symmetric
boundary closure: an edge cut by the boundary at a fraction theta of the step contributes
(1/2) h^{d-2} u_i^2 / theta. Nonlocal forms carry the jump kernel J_m as a dense
double sum, a killing term for the exterior and a local correction for the cell around
the diagonal. Unknowns live on interior lattice nodes only (zero extension outside).
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg as sp_linalg
from scipy import sparse
from scipy.interpolate import CubicSpline
from scipy.sparse import linalg as sparse_linalg

from .geometry import Domain, DomainKind, MeasureKind, MeasureSpec
from .kernels import psi, psi_second_derivative, stable_tail_constant
from .profiles import Approach, DecayProfile, Status, Verdict
from .quadrature import quad_checked, unit_ball_volume, unit_sphere_area
from .utils import DiscretizationError, GeometryError, render_csv, parallel_map, write_text

logger = logging.getLogger(__name__)

MIN_NODES_PER_AXIS = 8
MAX_NONLOCAL_NODES = 10_000
MAX_DENSE_GREEN_NODES = 8_000


# =============================================================================
# Types
# =============================================================================

Matrix = Union[sparse.spmatrix, np.ndarray]


@dataclass
class DiscreteForm:
    """Quadratic form E_h(u, u) = u^T A u on interior nodes with mass weights w."""
    nodes: np.ndarray
    h: float
    energy_matrix: Matrix
    mass_weights: np.ndarray
    boundary: np.ndarray
    kind: str = "local"
    label: str = ""
    notes: List[str] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.mass_weights)

    @property
    def dimension(self) -> int:
        return self.nodes.shape[1]

    @property
    def dirichlet_active(self) -> bool:
        return bool(np.any(self.boundary))

    def apply(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(self.energy_matrix @ u)

    def energy(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(u @ self.apply(u))

    def bilinear(self, u, v) -> float:
        return float(np.asarray(v, dtype=float) @ self.apply(np.asarray(u, dtype=float)))

    def norm(self, u, q: float = 2.0, weights: Optional[np.ndarray] = None) -> float:
        """Weighted L^q norm (sum_i w_i |u_i|^q)^{1/q}."""
        w = self.mass_weights if weights is None else weights
        return float(np.sum(w * np.abs(np.asarray(u, dtype=float)) ** q) ** (1.0 / q))

    def volume_defect(self, volume: float) -> float:
        """Relative gap between the summed mass weights and a reference volume."""
        return abs(float(np.sum(self.mass_weights)) - volume) / volume

    def dense(self) -> np.ndarray:
        A = self.energy_matrix
        return A.toarray() if sparse.issparse(A) else np.asarray(A)


class SpectralReport(BaseModel):
    """Eigenvalues or singular values across refinement levels."""
    model_config = ConfigDict(frozen=True)

    kind: str = Field(..., description="'eigenvalues' (ascending) or 'singular_values' (descending)")
    values: List[float] = Field(..., description="Reported values: extrapolated when available, else finest level")
    levels: List[float] = Field(default_factory=list, description="Grid spacings, coarse to fine")
    level_values: List[List[float]] = Field(default_factory=list, description="Values per level")
    extrapolated: Optional[List[float]] = Field(None, description="Richardson limits (three or more levels)")
    converged: bool = Field(True, description="Finest two levels agree within 1%")
    verdict: Optional[Verdict] = Field(None, description="Decay verdict for compactness diagnostics")
    label: str = Field("", description="What was computed")
    notes: List[str] = Field(default_factory=list, description="Remarks")

    def to_csv(self) -> str:
        columns = ["k", "value", "extrapolated"] + [f"h={h:.6g}" for h in self.levels]
        rows = []
        for i, v in enumerate(self.values):
            extra = self.extrapolated[i] if self.extrapolated is not None else ""
            rows.append([str(i + 1), v, extra] + [lv[i] for lv in self.level_values])
        return render_csv(columns, rows)


# =============================================================================
# Lattice construction
# =============================================================================

@dataclass
class _Lattice:
    nodes: np.ndarray
    h: float
    # per axis: (neighbor index in +e_a, neighbor index in -e_a), -1 when exterior
    plus: List[np.ndarray]
    minus: List[np.ndarray]
    region: Domain


def truncation_box(domain: Domain, length: float) -> Tuple[np.ndarray, np.ndarray]:
    """Box cutting an unbounded domain at the given length along its unbounded directions."""
    d = domain.dimension
    if domain.kind == DomainKind.HORN:
        s = np.linspace(0.0, length, 512)
        reach = float(np.max(domain.profile(s)))
        lo, hi = np.full(d, -reach), np.full(d, reach)
        lo[0], hi[0] = 0.0, length
        return lo, hi
    if domain.kind == DomainKind.STRIP:
        lo, hi = np.full(d, -0.5 * length), np.full(d, 0.5 * length)
        a = domain.axis - 1
        lo[a], hi[a] = -0.5 * domain.width, 0.5 * domain.width
        return lo, hi
    if domain.bounded:
        return domain.bounding_box()
    return np.full(d, -0.5 * length), np.full(d, 0.5 * length)


def _truncated_region(domain: Domain, box: Optional[Tuple[np.ndarray, np.ndarray]]) -> Tuple[Domain, np.ndarray, np.ndarray]:
    if box is None:
        if not domain.bounded:
            raise DiscretizationError("unbounded domain needs a truncation box")
        lo, hi = domain.bounding_box()
        return domain, np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    lo, hi = (np.asarray(b, dtype=float) for b in box)
    if lo.size != domain.dimension or hi.size != domain.dimension:
        raise GeometryError("truncation box dimension does not match the domain")
    return Domain.intersection([domain, Domain.box(lo, hi)]), lo, hi


def _build_lattice(domain: Domain, h: float, box=None, min_per_axis: int = MIN_NODES_PER_AXIS) -> _Lattice:
    if h <= 0:
        raise DiscretizationError("grid spacing must be positive")
    region, lo, hi = _truncated_region(domain, box)
    d = domain.dimension
    kmin = np.ceil(lo / h - 1e-9).astype(int)
    kmax = np.floor(hi / h + 1e-9).astype(int)
    shape = tuple(int(b - a + 1) for a, b in zip(kmin, kmax))
    if any(s <= 0 for s in shape):
        raise DiscretizationError("grid spacing larger than the domain")
    axes = [np.arange(a, b + 1) * h for a, b in zip(kmin, kmax)]
    points = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    inside = region.contains(points).reshape(shape)
    n = int(inside.sum())
    per_axis = [len(np.unique(np.round(points[inside.reshape(-1), a] / h).astype(int))) for a in range(d)] if n else [0]
    if n == 0 or min(per_axis) < min_per_axis:
        raise DiscretizationError(
            f"grid too coarse: {min(per_axis)} interior nodes along some axis (need {min_per_axis})"
        )
    number = -np.ones(shape, dtype=int)
    number[inside] = np.arange(n)
    plus, minus = [], []
    for a in range(d):
        pad = [(1, 1) if b == a else (0, 0) for b in range(d)]
        padded = np.pad(number, pad, constant_values=-1)
        plus.append(np.take(padded, np.arange(2, shape[a] + 2), axis=a)[inside])
        minus.append(np.take(padded, np.arange(0, shape[a]), axis=a)[inside])
    return _Lattice(points[inside.reshape(-1)], h, plus, minus, region)


def _boundary_fractions(region: Domain, x: np.ndarray, step: np.ndarray, iterations: int = 40) -> np.ndarray:
    """Fraction theta in (0, 1] of each step at which the segment leaves the region."""
    lo = np.zeros(len(x))
    hi = np.ones(len(x))
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        inside = region.contains(x + mid[:, None] * step)
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return np.clip(0.5 * (lo + hi), 1e-3, 1.0)


def _laplacian(lattice: _Lattice) -> Tuple[sparse.csr_matrix, np.ndarray]:
    """Matrix of (1/2) sum over edges h^{d-2} (u_i - u_j)^2 with cut edges closed at the boundary."""
    x, h = lattice.nodes, lattice.h
    n, d = x.shape
    c = 0.5 * h ** (d - 2)
    rows, cols, vals = [], [], []
    diag = np.zeros(n)
    boundary = np.zeros(n, dtype=bool)
    idx = np.arange(n)
    for a in range(d):
        e = np.zeros(d)
        e[a] = h
        for neighbor, sign in ((lattice.plus[a], 1.0), (lattice.minus[a], -1.0)):
            linked = neighbor >= 0
            if sign > 0:
                i, j = idx[linked], neighbor[linked]
                rows += [i, j]
                cols += [j, i]
                vals += [np.full(len(i), -c)] * 2
                np.add.at(diag, i, c)
                np.add.at(diag, j, c)
            cut = ~linked
            if np.any(cut):
                theta = _boundary_fractions(lattice.region, x[cut], np.tile(sign * e, (int(cut.sum()), 1)))
                np.add.at(diag, idx[cut], c / theta)
                boundary[idx[cut]] = True
    rows.append(idx)
    cols.append(idx)
    vals.append(diag)
    A = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return A.tocsr(), boundary


def assemble_local(domain: Domain, h: float, box=None) -> DiscreteForm:
    """Discrete (1/2) int |grad u|^2 with Dirichlet zero outside the (truncated) domain."""
    lattice = _build_lattice(domain, h, box)
    A, boundary = _laplacian(lattice)
    d = domain.dimension
    weights = np.full(len(lattice.nodes), h ** d)
    logger.debug(f"Assembled local form: {len(weights)} nodes, h={h:g}")
    return DiscreteForm(lattice.nodes, h, A, weights, boundary, "local", f"local form on {domain.kind.value}, h={h:g}")


# =============================================================================
# Nonlocal forms
# =============================================================================

@lru_cache(maxsize=32)
def _log_psi_table(d: int, alpha: float) -> Tuple[CubicSpline, float]:
    s = np.concatenate([np.linspace(0.0, 1.0, 65)[:-1], np.geomspace(1.0, 600.0, 256)])
    values = np.array([psi(float(v), d, alpha) for v in s])
    keep = values > 0
    return CubicSpline(s[keep], np.log(values[keep])), float(s[keep][-1])


def jump_profile(alpha: float, m: float, d: int) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized r -> J_m(r), with Psi tabulated on a log scale."""
    c = stable_tail_constant(d, alpha)
    if m == 0:
        return lambda r: c / np.asarray(r, dtype=float) ** (d + alpha)
    spline, s_max = _log_psi_table(d, alpha)
    scale = m ** (1.0 / alpha)

    def J(r):
        r = np.asarray(r, dtype=float)
        s = scale * r
        factor = np.where(s <= s_max, np.exp(spline(np.minimum(s, s_max))), 0.0)
        with np.errstate(divide="ignore"):
            return c * factor / r ** (d + alpha)
    return J


def nonlocal_form(alpha: float, m: float, nodes: np.ndarray, weights: np.ndarray,
                  killing: Optional[np.ndarray] = None, cutoff: float = math.inf) -> DiscreteForm:
    """(1/2) sum_{i != j} (u_i - u_j)^2 J_m(x_i, x_j) w_i w_j + sum_i kappa_i w_i u_i^2."""
    nodes = np.atleast_2d(np.asarray(nodes, dtype=float))
    weights = np.asarray(weights, dtype=float)
    n, d = nodes.shape
    if n > MAX_NONLOCAL_NODES:
        raise DiscretizationError(f"nonlocal assembly limited to {MAX_NONLOCAL_NODES} nodes, got {n}")
    r = np.linalg.norm(nodes[:, None, :] - nodes[None, :, :], axis=-1)
    np.fill_diagonal(r, 1.0)
    W = jump_profile(alpha, m, d)(r) * np.outer(weights, weights)
    W[r > cutoff] = 0.0
    np.fill_diagonal(W, 0.0)
    A = -W
    A[np.diag_indices(n)] = W.sum(axis=1)
    boundary = np.zeros(n, dtype=bool)
    if killing is not None:
        A[np.diag_indices(n)] += killing * weights
        boundary = killing > 0
    h = float(np.min(r[~np.eye(n, dtype=bool)])) if n > 1 else 0.0
    return DiscreteForm(nodes, h, A, weights, boundary, "nonlocal", f"nonlocal form alpha={alpha:g} m={m:g}")


def near_diagonal_moment(alpha: float, m: float, d: int, rho: float) -> float:
    """int_{|z| < rho} |z|^2 J_m(z) dz from the quadratic expansion of Psi at 0."""
    c = stable_tail_constant(d, alpha) * unit_sphere_area(d)
    lead = rho ** (2.0 - alpha) / (2.0 - alpha)
    if m == 0:
        return c * lead
    second = psi_second_derivative(d, alpha)
    if not math.isfinite(second):
        return c * lead
    return c * (lead + 0.5 * second * m ** (2.0 / alpha) * rho ** (4.0 - alpha) / (4.0 - alpha))


def _lattice_sum(J, h: float, d: int, radius: float) -> float:
    """sum over hZ^d points with 0 < |z| <= radius of J(|z|) h^d."""
    K = int(math.floor(radius / h))
    k = np.arange(-K, K + 1) * h
    if d == 1:
        r = np.abs(k)
    else:
        r = np.linalg.norm(np.stack(np.meshgrid(*([k] * d), indexing="ij"), axis=-1).reshape(-1, d), axis=1)
    r = r[(r > 0) & (r <= radius)]
    return float(np.sum(J(r)) * h ** d)


def _radial_integral(J, d: int, a: float, b: float) -> float:
    value, _, _ = quad_checked(lambda s: unit_sphere_area(d) * s ** (d - 1) * float(J(np.array([s]))[0]),
                               a, b, epsabs=0.0, epsrel=1e-8, limit=200)
    return value


def assemble_nonlocal(alpha: float, m: float, domain: Domain, h: float, truncation: float = 1e3,
                      box=None) -> DiscreteForm:
    """Nonlocal form of the relativistic alpha-stable process (m = 0: alpha-stable) on a grid.

    Interaction with the exterior enters as killing kappa_i = sum over exterior lattice points
    within the truncation radius; the cell around the diagonal is replaced by the local term
    (1/d) int_{B_rho} |z|^2 J times the local form.
    """
    if not 0 < alpha < 2:
        raise DiscretizationError("alpha must lie in (0, 2)")
    lattice = _build_lattice(domain, h, box)
    d = domain.dimension
    w = np.full(len(lattice.nodes), h ** d)
    J = jump_profile(alpha, m, d)
    if truncation < 8 * h:
        raise DiscretizationError("truncation radius must be at least 8 grid steps")
    form = nonlocal_form(alpha, m, lattice.nodes, w, cutoff=truncation)

    near = min(truncation, 32.0 * h)
    total = _lattice_sum(J, h, d, near)
    if truncation > near:
        total += _radial_integral(J, d, near, truncation)
    interior = np.asarray(form.energy_matrix.diagonal()) / w
    killing = np.maximum(total - interior, 0.0)
    tail = _radial_integral(J, d, truncation, math.inf)
    tail_weight = tail / (float(np.min(killing)) + tail) if np.min(killing) + tail > 0 else 0.0
    if tail_weight > 0.01:
        raise DiscretizationError(
            f"truncation radius {truncation:g} too small: tail weight {tail_weight:.3g} > 1%"
        )

    rho = (h ** d / unit_ball_volume(d)) ** (1.0 / d)
    moment = near_diagonal_moment(alpha, m, d, rho)
    local, boundary = _laplacian(lattice)
    A = form.energy_matrix + (moment / d) * local.toarray()
    A[np.diag_indices(len(w))] += killing * w
    notes = [f"tail weight {tail_weight:.3g}", f"near-diagonal moment {moment:.6g}"]
    logger.debug(f"Assembled nonlocal form: {len(w)} nodes, h={h:g}, truncation={truncation:g}")
    return DiscreteForm(lattice.nodes, h, A, w, boundary | (killing > 0), "nonlocal",
                        f"nonlocal form alpha={alpha:g} m={m:g} on {domain.kind.value}, h={h:g}", notes)


# =============================================================================
# Spectra
# =============================================================================

def _smallest_eigen(form: DiscreteForm, k: int) -> Tuple[np.ndarray, np.ndarray]:
    n = form.size
    if k < 1 or k >= n:
        raise DiscretizationError(f"k={k} must lie in [1, {n - 1}] for a grid of {n} nodes")
    if sparse.issparse(form.energy_matrix) and n > 400:
        M = sparse.diags(form.mass_weights)
        values, vectors = sparse_linalg.eigsh(form.energy_matrix.tocsc(), k=k, M=M, sigma=0.0, which="LM")
    else:
        values, vectors = sp_linalg.eigh(form.dense(), np.diag(form.mass_weights), subset_by_index=[0, k - 1])
    order = np.argsort(values)
    return values[order], vectors[:, order]


def embedding_singular_values(form: DiscreteForm, k: int) -> SpectralReport:
    """Top-k singular values sigma_j = lambda_j^{-1/2} of the embedding (energy) -> L^2(w)."""
    values, _ = _smallest_eigen(form, k)
    if np.any(values <= 0):
        raise DiscretizationError("energy is not positive definite; the embedding is unbounded")
    sigma = sorted((float(v) ** -0.5 for v in values), reverse=True)
    return SpectralReport(kind="singular_values", values=sigma, levels=[form.h], level_values=[sigma],
                          label=f"embedding singular values of {form.label}")


def _richardson(levels: List[List[float]]) -> Tuple[Optional[List[float]], List[str]]:
    """Extrapolate each value across the last three levels (ratio 2) with its observed order."""
    if len(levels) < 3:
        return None, []
    a, b, c = (np.asarray(v) for v in levels[-3:])
    out, notes = [], []
    for j in range(len(c)):
        d1, d2 = a[j] - b[j], b[j] - c[j]
        if d2 == 0:
            out.append(float(c[j]))
            continue
        ratio = d1 / d2
        if ratio <= 1.0:
            notes.append(f"mode {j + 1}: non-convergent refinement sequence")
            out.append(float(c[j]))
            continue
        order = math.log2(ratio)
        if not 0.5 <= order <= 4.0:
            notes.append(f"mode {j + 1}: observed order {order:.2f} outside [0.5, 4]")
            out.append(float(c[j]))
            continue
        out.append(float(c[j] + (c[j] - b[j]) / (2.0 ** order - 1.0)))
    return out, notes


def dirichlet_eigenvalues(domain: Domain, k: int, levels: Sequence[float] = (1 / 16, 1 / 32, 1 / 64),
                          box=None, workers: int = 1) -> SpectralReport:
    """Lowest k eigenvalues of -(1/2) Laplacian with Dirichlet conditions, refined and extrapolated."""
    levels = sorted(levels, reverse=True)
    per_level = parallel_map(lambda h: _smallest_eigen(assemble_local(domain, h, box), k)[0].tolist(),
                             levels, workers)
    extrapolated, notes = _richardson(per_level)
    finest, previous = np.asarray(per_level[-1]), np.asarray(per_level[-2]) if len(per_level) > 1 else None
    converged = True
    if previous is not None:
        move = float(np.max(np.abs(finest - previous) / np.abs(finest)))
        converged = move < 0.01
        if not converged:
            notes.append(f"finest levels differ by {move:.2%}")
            logger.warning(f"Dirichlet eigenvalues on {domain.kind.value} not grid-converged ({move:.2%})")
    values = extrapolated if extrapolated is not None else finest.tolist()
    return SpectralReport(kind="eigenvalues", values=list(values), levels=list(levels), level_values=per_level,
                          extrapolated=extrapolated, converged=converged,
                          label=f"Dirichlet eigenvalues on {domain.kind.value}", notes=notes)


@dataclass
class TruncationStudy:
    """Singular values across growing truncations of one domain."""
    lengths: List[float]
    reports: List[SpectralReport]
    changes: List[float]
    counts: List[int]
    verdict: Verdict

    def to_csv(self) -> str:
        rows = []
        for i, (L, rep) in enumerate(zip(self.lengths, self.reports)):
            change = self.changes[i - 1] if i > 0 else ""
            rows.append([L, rep.values[0], rep.values[-1], str(self.counts[i]), change, self.verdict.value])
        return render_csv(["length", "sigma_1", "sigma_k", "count_above_half", "max_rel_change", "verdict"], rows)


def truncation_study(domain: Domain, lengths: Sequence[float], k: int, h: float,
                     nonlocal_params: Optional[Tuple[float, float]] = None,
                     stabilized: float = 0.01, moving: float = 0.10, workers: int = 1) -> TruncationStudy:
    """Compactness signature: singular values stabilize (IN) or keep moving (OUT) as the truncation grows."""
    lengths = sorted(lengths)

    def one(L):
        box = truncation_box(domain, L)
        if nonlocal_params is None:
            form = assemble_local(domain, h, box)
        else:
            alpha, m = nonlocal_params
            form = assemble_nonlocal(alpha, m, domain, h, box=box)
        return embedding_singular_values(form, k)

    reports = parallel_map(one, lengths, workers)
    counts = [int(sum(s >= 0.5 * rep.values[0] for s in rep.values)) for rep in reports]
    changes = []
    for prev, cur in zip(reports, reports[1:]):
        a, b = np.asarray(prev.values), np.asarray(cur.values)
        changes.append(float(np.max(np.abs(b - a) / a)))
    if changes and changes[-1] < stabilized:
        verdict = Verdict.IN
    elif changes and (changes[-1] > moving or counts[-1] > counts[0]):
        verdict = Verdict.OUT
    else:
        verdict = Verdict.INCONCLUSIVE
    logger.info(f"Truncation study on {domain.kind.value}: changes {[f'{c:.3g}' for c in changes]} -> {verdict.value}")
    return TruncationStudy(list(lengths), reports, changes, counts, verdict)


# =============================================================================
# Inequalities and property checks
# =============================================================================

def node_weights(form: DiscreteForm, measure: Optional[MeasureSpec] = None) -> np.ndarray:
    """Quadrature weights of mu on the grid: w (Lebesgue) or w g(x_i) (density)."""
    if measure is None or measure.kind == MeasureKind.LEBESGUE:
        return form.mass_weights
    if measure.kind == MeasureKind.DENSITY:
        return form.mass_weights * np.asarray(measure.density(form.nodes), dtype=float)
    raise GeometryError(f"{measure.kind.value} measures have no grid weights")


def discrete_green(form: DiscreteForm) -> np.ndarray:
    """G with u = G (w * f) solving A u = w f, i.e. G = A^{-1}."""
    if form.size > MAX_DENSE_GREEN_NODES:
        raise DiscretizationError(f"discrete Green matrix limited to {MAX_DENSE_GREEN_NODES} nodes")
    if not form.dirichlet_active:
        raise DiscretizationError("form without killing has no Green matrix")
    return sp_linalg.inv(form.dense())


@dataclass
class StollmannVoigtReport:
    p: float
    potential_norm: float
    margins: List[float]
    status: Status = Status.OK
    notes: List[str] = field(default_factory=list)

    @property
    def min_margin(self) -> float:
        return min(self.margins) if self.margins else math.nan

    @property
    def holds(self) -> bool:
        return self.status == Status.OK and self.min_margin >= -1e-8


def stollmann_voigt_check(form: DiscreteForm, p: float, tests: Sequence[np.ndarray],
                          measure: Optional[MeasureSpec] = None,
                          potential_norm: Optional[float] = None) -> StollmannVoigtReport:
    """Margins ||R^p mu||_inf^{1/p} E(u, u) - ||u||_{L^{2p}(mu)}^2 for each test function.

    Without a supplied potential norm, ||R^p mu||_inf is taken from the discrete Green matrix.
    """
    if p < 1:
        raise GeometryError("p must be >= 1")
    mu = node_weights(form, measure)
    if potential_norm is None:
        try:
            G = discrete_green(form)
        except DiscretizationError as exc:
            return StollmannVoigtReport(p, math.inf, [], Status.SKIPPED, [str(exc)])
        potential_norm = float(np.max(np.abs(G) ** p @ mu))
    if not math.isfinite(potential_norm):
        logger.warning("Stollmann-Voigt check skipped: infinite potential norm")
        return StollmannVoigtReport(p, potential_norm, [], Status.SKIPPED, ["infinite potential norm"])
    factor = potential_norm ** (1.0 / p)
    margins = []
    for u in tests:
        u = np.asarray(u, dtype=float)
        lhs = float(np.sum(mu * np.abs(u) ** (2.0 * p)) ** (1.0 / p))
        margins.append(factor * form.energy(u) - lhs)
    report = StollmannVoigtReport(p, potential_norm, margins)
    if margins and not report.holds:
        logger.warning(f"Stollmann-Voigt margin {report.min_margin:.3g} below tolerance")
    return report


@dataclass
class TightnessReport:
    p: float
    energy_bound: float
    levels: List[float]
    sups: List[float]
    profile: DecayProfile


def _tail_functional(U: np.ndarray, w: np.ndarray, p: float, level: float) -> np.ndarray:
    powered = np.abs(U) ** (2.0 * p)
    return np.sum(w[:, None] * np.where(powered >= level, powered, 0.0), axis=0)


def _energy_sphere(form: DiscreteForm, U: np.ndarray, M: float) -> np.ndarray:
    E = np.sum(U * np.asarray(form.energy_matrix @ U), axis=0)
    scale = np.where(E > 0, np.sqrt(M / np.where(E > 0, E, 1.0)), 0.0)
    return U * scale


def tightness_diagnostic(form: DiscreteForm, p: float, M: float, levels: Sequence[float],
                         samples: int = 512, ascent_steps: int = 40, seed: int = 0) -> TightnessReport:
    """sup over the energy ball {E(u, u) <= M} of int_{u^{2p} >= L} u^{2p} dw, for each level L.

    Candidates: Gaussian directions scaled to the energy sphere, the lowest modes and
    normalized Green columns; the best candidate per level is refined by projected ascent.
    """
    if M < 0:
        raise GeometryError("energy bound must be nonnegative")
    levels = sorted(levels)
    w = form.mass_weights
    if M == 0:
        zeros = [0.0] * len(levels)
        profile = DecayProfile.build(levels, zeros, Approach.INFINITY, "tightness tail, M=0")
        return TightnessReport(p, M, list(levels), zeros, profile)
    n = form.size
    rng = np.random.default_rng(seed)
    columns = [rng.standard_normal((n, samples))]
    k = min(8, n - 1)
    if k >= 1:
        columns.append(_smallest_eigen(form, k)[1])
    if form.dirichlet_active and n <= MAX_DENSE_GREEN_NODES:
        picks = np.unique(np.linspace(0, n - 1, min(32, n)).astype(int))
        eye = np.zeros((n, len(picks)))
        eye[picks, np.arange(len(picks))] = 1.0
        if sparse.issparse(form.energy_matrix):
            columns.append(sparse_linalg.splu(form.energy_matrix.tocsc()).solve(eye))
        else:
            columns.append(np.linalg.solve(form.dense(), eye))
    U = _energy_sphere(form, np.hstack(columns), M)
    sups = []
    for L in levels:
        values = _tail_functional(U, w, p, L)
        best = int(np.argmax(values))
        u, value = U[:, best].copy(), float(values[best])
        step = 0.1
        for _ in range(ascent_steps):
            powered = np.abs(u) ** (2.0 * p)
            grad = 2.0 * p * w * np.sign(u) * np.abs(u) ** (2.0 * p - 1.0) * (powered >= L)
            Au = form.apply(u)
            grad = grad - (grad @ Au) / max(Au @ Au, 1e-300) * Au
            norm = np.linalg.norm(grad)
            if norm == 0:
                break
            trial = _energy_sphere(form, (u + step * np.linalg.norm(u) * grad / norm)[:, None], M)[:, 0]
            trial_value = float(_tail_functional(trial[:, None], w, p, L)[0])
            if trial_value > value:
                u, value = trial, trial_value
            else:
                step *= 0.5
                if step < 1e-6:
                    break
        sups.append(value)
    profile = DecayProfile.build(levels, sups, Approach.INFINITY, f"tightness tail, p={p:g}, M={M:g}")
    return TightnessReport(p, M, list(levels), sups, profile)


@dataclass
class PropertyCheck:
    lhs: float
    rhs: float
    holds: bool


def markov_contraction_check(form: DiscreteForm, u, k: float = 1.0) -> PropertyCheck:
    """E(u^(k), u^(k)) <= E(u, u) for the truncation u^(k) = (-k) v u ^ k."""
    u = np.asarray(u, dtype=float)
    before = form.energy(u)
    after = form.energy(np.clip(u, -k, k))
    return PropertyCheck(after, before, after <= before * (1.0 + 1e-12) + 1e-14)


def semigroup_energy_check(form: DiscreteForm, u, t: float, slack: float = 0.05) -> PropertyCheck:
    """E(P_t u, P_t u) <= ||u||_2^2 / (2 e t) for P_t = exp(-t W^{-1} A)."""
    if t <= 0:
        raise GeometryError("t must be positive")
    u = np.asarray(u, dtype=float)
    inv_w = 1.0 / form.mass_weights
    if sparse.issparse(form.energy_matrix):
        generator = sparse.diags(inv_w) @ form.energy_matrix
    else:
        generator = inv_w[:, None] * form.dense()
    moved = sparse_linalg.expm_multiply(-t * generator, u)
    lhs = form.energy(moved)
    rhs = form.norm(u) ** 2 / (2.0 * math.e * t)
    return PropertyCheck(lhs, rhs, lhs <= rhs * (1.0 + slack))


def check_symmetry(form: DiscreteForm, samples: int = 100, seed: int = 0) -> Tuple[float, float]:
    """(max asymmetry |<Au, v> - <u, Av>|, min energy) over random vectors."""
    rng = np.random.default_rng(seed)
    worst, lowest = 0.0, math.inf
    for _ in range(samples):
        u, v = rng.standard_normal(form.size), rng.standard_normal(form.size)
        worst = max(worst, abs(form.bilinear(u, v) - form.bilinear(v, u)))
        lowest = min(lowest, form.energy(u))
    return worst, lowest


# =============================================================================
# Export
# =============================================================================

def export_text(form: DiscreteForm, path) -> Path:
    """Plain-text dump: header, one node per line (coordinates, weight, boundary flag),
    then the nonzero energy entries as 'i j value' triplets."""
    d = form.dimension
    lines = [
        "# kato-toolkit discrete form",
        f"# kind={form.kind} dimension={d} nodes={form.size} h={form.h!r}",
        f"# label={form.label}",
        "# nodes: " + " ".join(f"x{a + 1}" for a in range(d)) + " weight boundary",
    ]
    for x, w, b in zip(form.nodes, form.mass_weights, form.boundary):
        lines.append(" ".join(repr(float(v)) for v in x) + f" {float(w)!r} {int(b)}")
    A = sparse.coo_matrix(form.energy_matrix)
    lines.append(f"# energy: {A.nnz} entries, i j value")
    for i, j, v in zip(A.row, A.col, A.data):
        lines.append(f"{int(i)} {int(j)} {float(v)!r}")
    return write_text(Path(path), "\n".join(lines) + "\n")


def load_text(path) -> DiscreteForm:
    """Read a dump written by export_text."""
    nodes, weights, flags, triplets = [], [], [], []
    meta = {}
    section = None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.startswith("# kind="):
            meta = dict(item.split("=", 1) for item in line[2:].split())
        elif line.startswith("# label="):
            meta["label"] = line[len("# label="):]
        elif line.startswith("# nodes:"):
            section = "nodes"
        elif line.startswith("# energy:"):
            section = "energy"
        elif line and not line.startswith("#"):
            parts = line.split()
            if section == "nodes":
                nodes.append([float(v) for v in parts[:-2]])
                weights.append(float(parts[-2]))
                flags.append(parts[-1] == "1")
            elif section == "energy":
                triplets.append((int(parts[0]), int(parts[1]), float(parts[2])))
    n = len(weights)
    rows, cols, vals = zip(*triplets) if triplets else ((), (), ())
    A = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return DiscreteForm(np.array(nodes), float(meta.get("h", "nan")), A, np.array(weights), np.array(flags),
                        meta.get("kind", "local"), meta.get("label", ""))
