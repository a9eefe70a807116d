"""Vectorized polar quadrature building blocks.

Integrals over regions of R^d are written in polar coordinates about a center c:

    int f(y) dy = sum_j w_j int_segments(theta_j) s^{d-1} f(c + s theta_j) ds

Directions and weights come from `sphere_rule`; the inside-segments of every ray are
located by sampling the region's membership test and bisecting the transitions; the
radial integrals are evaluated together by an adaptive Gauss rule. Segments that start
at a declared singular center use a Gauss-Jacobi rule carrying the s^beta weight, and
segments running to infinity are mapped to (0, 1] by s = a/u.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import integrate as sp_integrate
from scipy import special

logger = logging.getLogger(__name__)

Membership = Callable[[np.ndarray], np.ndarray]


def unit_sphere_area(d: int) -> float:
    """Surface area of the unit sphere S^{d-1} in R^d (2 for d=1)."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def sphere_rule(d: int, n: int) -> Tuple[np.ndarray, np.ndarray]:
    """Directions (m, d) and weights (m,) integrating over S^{d-1}.

    d=1 uses the two unit vectors, d=2 a shifted trapezoid rule, d=3 Gauss-Legendre in
    cos(phi) times a trapezoid rule in azimuth, d>=4 an equal-weight fixed-seed cloud.
    """
    area = unit_sphere_area(d)
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if d == 2:
        theta = (np.arange(n) + 0.5) * (2.0 * math.pi / n)
        dirs = np.stack([np.cos(theta), np.sin(theta)], axis=1)
        return dirs, np.full(n, area / n)
    if d == 3:
        z, wz = np.polynomial.legendre.leggauss(n)
        m_az = 2 * n
        phi = (np.arange(m_az) + 0.5) * (2.0 * math.pi / m_az)
        zz, pp = np.meshgrid(z, phi, indexing="ij")
        rho = np.sqrt(1.0 - zz ** 2)
        dirs = np.stack([rho * np.cos(pp), rho * np.sin(pp), zz], axis=-1).reshape(-1, 3)
        weights = (wz[:, None] * np.full(m_az, 2.0 * math.pi / m_az)[None, :]).reshape(-1)
        return dirs, weights
    rng = np.random.default_rng(1729 + d)
    m = max(64, n * n)
    g = rng.standard_normal((m, d))
    dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
    return dirs, np.full(m, area / m)


@lru_cache(maxsize=64)
def _gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=256)
def _gauss_jacobi_left(n: int, beta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on [0, 1] for int_0^1 t^beta h(t) dt (beta > -1)."""
    x, w = special.roots_jacobi(n, 0.0, beta)
    return 0.5 * (x + 1.0), w * 2.0 ** (-beta - 1.0)


# piece kinds
_LINEAR, _SINGULAR, _INVERSE = 0, 1, 2


@dataclass
class SegmentResult:
    values: np.ndarray
    errors: np.ndarray
    converged: bool


def integrate_segments(
    integrand: Callable[[np.ndarray, np.ndarray], np.ndarray],
    owner_ray: np.ndarray,
    a: np.ndarray,
    b: np.ndarray,
    singular_beta: Optional[np.ndarray] = None,
    order: int = 24,
    rel_tol: float = 1e-6,
    abs_tol: float = 1e-12,
    max_depth: int = 50,
) -> SegmentResult:
    """Adaptive Gauss integration of integrand(ray, s) over many segments at once.

    Segments with a == 0 and a finite `singular_beta` are integrated with the weight
    s^beta factored out (the integrand is still passed in full); b may be +inf.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    owner_ray = np.asarray(owner_ray, dtype=int)
    n_seg = a.size
    if singular_beta is None:
        singular_beta = np.full(n_seg, np.nan)
    singular_beta = np.asarray(singular_beta, dtype=float)

    kinds, lo, hi, scale, beta, owner = [], [], [], [], [], []

    def _push(kind, l, h, sc, bt, ow):
        kinds.append(kind); lo.append(l); hi.append(h); scale.append(sc); beta.append(bt); owner.append(ow)

    for i in range(n_seg):
        ai, bi, bti = a[i], b[i], singular_beta[i]
        if bi <= ai:
            continue
        if np.isinf(bi):
            if ai == 0.0:
                if np.isfinite(bti):
                    _push(_SINGULAR, 0.0, 1.0, 1.0, bti, i)
                else:
                    _push(_LINEAR, 0.0, 1.0, 1.0, np.nan, i)
                _push(_INVERSE, 0.0, 1.0, 1.0, np.nan, i)
            else:
                _push(_INVERSE, 0.0, 1.0, ai, np.nan, i)
        elif ai == 0.0 and np.isfinite(bti):
            _push(_SINGULAR, 0.0, bi, 1.0, bti, i)
        else:
            _push(_LINEAR, ai, bi, 1.0, np.nan, i)

    values = np.zeros(n_seg)
    errors = np.zeros(n_seg)
    if not kinds:
        return SegmentResult(values, errors, True)

    pieces = {
        "kind": np.array(kinds), "lo": np.array(lo, dtype=float), "hi": np.array(hi, dtype=float),
        "scale": np.array(scale, dtype=float), "beta": np.array(beta, dtype=float),
        "owner": np.array(owner),
    }
    reference = None
    converged = True

    for depth in range(max_depth + 1):
        coarse, fine = _evaluate_pieces(integrand, owner_ray, pieces, order)
        err = np.abs(fine - coarse)
        if reference is None:
            reference = float(np.sum(np.abs(fine[np.isfinite(fine)]))) or 1.0
        floor = max(abs_tol, 1e-3 * rel_tol * reference / max(1, len(fine)))
        ok = (err <= np.maximum(rel_tol * np.abs(fine), floor)) & np.isfinite(fine)
        if depth == max_depth:
            ok = np.ones_like(ok)
            if np.any(err > np.maximum(10 * rel_tol * np.abs(fine), 10 * floor)):
                converged = False
        np.add.at(values, pieces["owner"][ok], fine[ok])
        np.add.at(errors, pieces["owner"][ok], err[ok])
        if np.all(ok):
            break
        pieces = _split({k: v[~ok] for k, v in pieces.items()})

    return SegmentResult(values, errors, converged)


def _piece_nodes(pieces, n):
    """Physical nodes s (P, n), and weights including Jacobian (P, n)."""
    kind, lo, hi, scale, beta = pieces["kind"], pieces["lo"], pieces["hi"], pieces["scale"], pieces["beta"]
    P = kind.size
    s = np.empty((P, n))
    w = np.empty((P, n))
    t, wt = _gauss_legendre(n)
    lin = kind != _SINGULAR
    width = (hi - lo)[:, None]
    u = lo[:, None] + width * t[None, :]
    uw = width * wt[None, :]
    mask_l = kind == _LINEAR
    s[mask_l] = u[mask_l]
    w[mask_l] = uw[mask_l]
    mask_i = kind == _INVERSE
    if np.any(mask_i):
        ui = u[mask_i]
        sc = scale[mask_i][:, None]
        s[mask_i] = sc / ui
        w[mask_i] = uw[mask_i] * sc / ui ** 2
    for idx in np.nonzero(~lin)[0]:
        tj, wj = _gauss_jacobi_left(n, float(beta[idx]))
        h = hi[idx]
        s[idx] = h * tj
        # integrand is divided by s^beta at evaluation time
        w[idx] = wj * h ** (beta[idx] + 1.0) / np.power(h * tj, beta[idx])
    return s, w


def _evaluate_pieces(integrand, owner_ray, pieces, order):
    out = []
    for n in (order, 2 * order):
        s, w = _piece_nodes(pieces, n)
        rays = np.repeat(owner_ray[pieces["owner"]], n)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            f = np.asarray(integrand(rays, s.reshape(-1)), dtype=float).reshape(s.shape)
            total = np.sum(np.where(w == 0, 0.0, f * w), axis=1)
        out.append(total)
    return out[0], out[1]


def _split(pieces):
    kind, lo, hi = pieces["kind"], pieces["lo"], pieces["hi"]
    mid = np.where(kind == _SINGULAR, 0.25 * hi, 0.5 * (lo + hi))
    left_kind = kind.copy()
    right_kind = np.where(kind == _SINGULAR, _LINEAR, kind)
    out = {}
    out["kind"] = np.concatenate([left_kind, right_kind])
    out["lo"] = np.concatenate([lo, mid])
    out["hi"] = np.concatenate([mid, hi])
    for key in ("scale", "beta", "owner"):
        out[key] = np.concatenate([pieces[key], pieces[key]])
    # the right half of a singular piece carries no weight factor
    out["beta"][kind.size:][kind == _SINGULAR] = np.nan
    return out


def _segments_on_grid(
    member: Membership,
    point_at: Callable[[np.ndarray, np.ndarray], np.ndarray],
    m: int,
    grid: np.ndarray,
    t_end: float,
    bisections: int,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rays_all = np.repeat(np.arange(m), grid.size)
    pts = point_at(rays_all, np.tile(grid, m))
    inside = np.asarray(member(pts), dtype=bool).reshape(m, grid.size)

    change_ray, change_idx = np.nonzero(inside[:, 1:] != inside[:, :-1])
    lo = grid[change_idx].copy()
    hi = grid[change_idx + 1].copy()
    lo_inside = inside[change_ray, change_idx]
    for _ in range(bisections):
        if lo.size == 0:
            break
        mid = 0.5 * (lo + hi)
        mid_in = np.asarray(member(point_at(change_ray, mid)), dtype=bool)
        same = mid_in == lo_inside
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    crossing = 0.5 * (lo + hi)

    rays, starts, ends = [], [], []
    by_ray = {}
    for k in np.lexsort((crossing, change_ray)):
        by_ray.setdefault(int(change_ray[k]), []).append(float(crossing[k]))
    for j in range(m):
        state = bool(inside[j, 0])
        cursor = 0.0
        for x in by_ray.get(j, []):
            if state:
                rays.append(j); starts.append(cursor); ends.append(x)
            state = not state
            cursor = x
        if state:
            rays.append(j); starts.append(cursor); ends.append(t_end)
    return np.array(rays, dtype=int), np.array(starts, dtype=float), np.array(ends, dtype=float)


def parametric_segments(
    member: Membership,
    point_at: Callable[[np.ndarray, np.ndarray], np.ndarray],
    m: int,
    t_max: float,
    samples: int = 256,
    bisections: int = 48,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inside-intervals of m curves t -> point_at(curve, t), t in (0, t_max)."""
    grid = np.linspace(0.0, t_max, samples)
    grid[0] = 1e-12 * max(1.0, t_max)
    grid[-1] = t_max * (1.0 - 1e-12)
    return _segments_on_grid(member, point_at, m, grid, t_max, bisections)


def ray_segments(
    member: Membership,
    center: np.ndarray,
    directions: np.ndarray,
    s_max: float,
    bounded: bool,
    samples: int = 256,
    truncation: float = 1e3,
    bisections: int = 48,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inside-intervals of every ray c + s*theta, s in (0, s_max].

    Returns flat arrays (ray index, a, b). For unbounded regions a ray still inside at
    the truncation radius gets b = +inf.
    """
    center = np.asarray(center, dtype=float)
    directions = np.asarray(directions, dtype=float)

    def point_at(ray_idx, s):
        return center[None, :] + s[:, None] * directions[ray_idx]

    if bounded:
        grid = np.linspace(0.0, s_max, samples)
        grid[0] = 1e-12 * max(1.0, s_max)
        return _segments_on_grid(member, point_at, directions.shape[0], grid, s_max, bisections)
    near = np.linspace(1e-12, 8.0, samples // 2)
    far = np.geomspace(8.0, max(truncation, 16.0), samples - samples // 2 + 1)[1:]
    grid = np.concatenate([near, far])
    return _segments_on_grid(member, point_at, directions.shape[0], grid, math.inf, bisections)


def quad_checked(f: Callable[[float], float], a: float, b: float, **kwargs) -> Tuple[float, float, bool]:
    """scipy.integrate.quad that reports IntegrationWarning as a failed-convergence flag."""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", sp_integrate.IntegrationWarning)
        value, error = sp_integrate.quad(f, a, b, **kwargs)[:2]
    converged = not any(issubclass(w.category, sp_integrate.IntegrationWarning) for w in caught)
    return float(value), float(error), converged and math.isfinite(value)
