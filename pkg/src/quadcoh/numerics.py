"""Special functions, quadrature grids, integrators and entropies.

All coordinates use the convention ``a = X + iY`` (vacuum ``ΔX = 1/2``).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import CapacityError, ContractError, NumericError, PositivityError

MAX_HERMITE_ORDER = 512

TRAPEZOID = "trapezoid"
GAUSS_LEGENDRE = "composite-gauss-legendre"
SCHEMES = (TRAPEZOID, GAUSS_LEGENDRE)

_EPS = np.finfo(float).eps
_RESCALE_AT = 1e100


@dataclass(frozen=True)
class Options:
    """Numerical knobs shared by measures, transforms and the CLI.

    ``tolerance`` is relative to the magnitude of the integral.
    ``grid_points`` is the number of uniform intervals per axis used for
    integrands wrapped in ``abs()`` on the two-dimensional path.
    """

    tolerance: float = 1e-6
    grid_points: int = 4096
    max_grid_points: int = 8192
    panels: int = 16
    points_per_panel: int = 64
    fock_dim: int = 64

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.grid_points < 128:
            raise ValueError("grid_points must be at least 128")
        if self.points_per_panel < 2 or self.panels < 1:
            raise ValueError("need panels >= 1 and points_per_panel >= 2")
        if self.fock_dim < 1:
            raise ValueError("fock_dim must be positive")


DEFAULT_OPTIONS = Options()


def worker_count() -> int:
    """Thread cap from ``QUADCOH_THREADS`` (defaults to the CPU count)."""
    env = os.environ.get("QUADCOH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# Hermite functions
# ---------------------------------------------------------------------------


def _check_order(n, max_order):
    if n < 0:
        raise ValueError(f"Hermite order must be nonnegative, got {n}")
    if n > max_order:
        raise CapacityError(f"Hermite order {n} exceeds the maximum {max_order}")


def hermite_functions(nmax: int, q, max_order: int = MAX_HERMITE_ORDER) -> np.ndarray:
    r"""Normalized Hermite functions :math:`h_0..h_{nmax}` at ``q``.

    ``h_n(q) = H_n(q) exp(-q^2/2) / sqrt(2^n n! sqrt(pi))``, computed with the
    three-term recurrence

    .. math:: h_{n+1} = \sqrt{2/(n+1)}\, q h_n - \sqrt{n/(n+1)}\, h_{n-1}.

    The Gaussian factor is carried in a per-point log scale so neither the
    polynomial growth nor the ``exp(-q^2/2)`` underflow can spoil large
    orders far from the origin.

    Returns an array of shape ``(nmax + 1,) + q.shape``.
    """
    _check_order(nmax, max_order)
    q = np.asarray(q, dtype=float)
    out = np.empty((nmax + 1,) + q.shape)
    log_scale = -0.5 * q * q
    h_prev = np.zeros_like(q)
    h = np.full_like(q, np.pi ** -0.25)
    out[0] = h * np.exp(log_scale)
    for k in range(nmax):
        h_next = np.sqrt(2.0 / (k + 1)) * q * h - np.sqrt(k / (k + 1.0)) * h_prev
        h_prev, h = h, h_next
        big = np.abs(h) > _RESCALE_AT
        if np.any(big):
            s = np.where(big, np.abs(h), 1.0)
            h = h / s
            h_prev = h_prev / s
            log_scale = log_scale + np.log(s)
        out[k + 1] = h * np.exp(log_scale)
    return out


def hermite_psi_all(nmax: int, x, max_order: int = MAX_HERMITE_ORDER) -> np.ndarray:
    """Number-state wavefunctions ``psi_0..psi_nmax`` at quadrature ``x``."""
    x = np.asarray(x, dtype=float)
    return 2.0**0.25 * hermite_functions(nmax, np.sqrt(2.0) * x, max_order)


def hermite_psi(n: int, x, max_order: int = MAX_HERMITE_ORDER):
    """Wavefunction of the number state ``|n>`` at quadrature coordinate ``x``.

    ``psi_n(x) = sqrt(2 / (2^n n! sqrt(2 pi))) H_n(sqrt(2) x) exp(-x^2)``.
    Scalars in, scalar out; arrays broadcast.
    """
    out = hermite_psi_all(n, x, max_order)[n]
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# Grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureGrid:
    nodes: np.ndarray
    weights: np.ndarray
    domain: tuple
    scheme: str
    panels: int
    points_per_panel: int
    edges: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.nodes)

    def coarsened(self) -> "QuadratureGrid":
        """The same grid at half resolution (used for error estimates)."""
        if self.scheme == GAUSS_LEGENDRE:
            if self.points_per_panel < 4:
                raise ValueError("cannot halve a grid with fewer than 4 points per panel")
            return _gl_grid(self.edges, self.points_per_panel // 2, self.domain)
        intervals = len(self.nodes) - 1
        if intervals % 2:
            raise ValueError("trapezoid grid with an odd interval count cannot be halved")
        return build_grid(self.domain, intervals // 2, 1, TRAPEZOID)

    def refined(self) -> "QuadratureGrid":
        """The same grid at double resolution."""
        if self.scheme == GAUSS_LEGENDRE:
            return _gl_grid(self.edges, self.points_per_panel * 2, self.domain)
        return build_grid(self.domain, 2 * (len(self.nodes) - 1), 1, TRAPEZOID)


@dataclass(frozen=True)
class IntegralResult:
    value: float
    error_estimate: float
    evaluations: int


def _gl_grid(edges, points_per_panel, domain):
    t, w = np.polynomial.legendre.leggauss(points_per_panel)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    nodes = (0.5 * (a + b) + half * t).ravel()
    weights = (half * w).ravel()
    return QuadratureGrid(
        nodes, weights, domain, GAUSS_LEGENDRE, len(edges) - 1, points_per_panel, edges
    )


def build_grid(
    domain: Sequence[float],
    points_per_panel: int,
    panels: int = 1,
    scheme: str = GAUSS_LEGENDRE,
    breakpoints: Sequence[float] = (),
) -> QuadratureGrid:
    """Build a 1D quadrature grid on ``domain``.

    For the trapezoid scheme the domain is split into
    ``panels * points_per_panel`` equal intervals (shared endpoints, so one
    more node than that).  For composite Gauss-Legendre each of the
    ``panels`` equal panels carries ``points_per_panel`` nodes.

    ``breakpoints`` (Gauss-Legendre only) are extra panel edges, typically
    the kinks of an ``abs()`` integrand; each gap between consecutive edges
    is then subdivided so no panel is longer than the uniform width.
    """
    lo, hi = (float(v) for v in domain)
    if not lo < hi:
        raise ValueError(f"empty integration domain ({lo}, {hi})")
    if points_per_panel < 2 or panels < 1:
        raise ValueError("need points_per_panel >= 2 and panels >= 1")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown quadrature scheme {scheme!r}")
    dom = (lo, hi)
    if scheme == TRAPEZOID:
        if len(breakpoints):
            raise ValueError("breakpoints are only supported for Gauss-Legendre grids")
        n = panels * points_per_panel
        nodes = np.linspace(lo, hi, n + 1)
        h = (hi - lo) / n
        weights = np.full(n + 1, h)
        weights[0] = weights[-1] = 0.5 * h
        return QuadratureGrid(nodes, weights, dom, TRAPEZOID, panels, points_per_panel, nodes)

    width = (hi - lo) / panels
    cuts = np.unique(np.concatenate([[lo, hi], np.asarray(breakpoints, dtype=float)]))
    cuts = cuts[(cuts >= lo) & (cuts <= hi)]
    edges = [lo]
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b - a <= 1e-14 * (hi - lo):
            continue
        k = max(1, int(np.ceil((b - a) / width - 1e-9)))
        edges.extend(np.linspace(a, b, k + 1)[1:])
    edges[-1] = hi
    return _gl_grid(np.asarray(edges), points_per_panel, dom)


def domain_grid(lo: float, hi: float, options: Options = DEFAULT_OPTIONS, breakpoints=()):
    """Default smooth-integrand grid (Gauss-Legendre panels from ``options``)."""
    return build_grid((lo, hi), options.points_per_panel, options.panels, GAUSS_LEGENDRE, breakpoints)


def abs_grid(lo: float, hi: float, intervals: int) -> QuadratureGrid:
    """Uniform trapezoid grid used for two-dimensional ``abs()`` integrands."""
    return build_grid((lo, hi), intervals, 1, TRAPEZOID)


# ---------------------------------------------------------------------------
# Summation and integration
# ---------------------------------------------------------------------------


def pairwise_sum(values, axis: int = -1):
    """Sum along ``axis`` with a fixed binary-tree reduction order."""
    a = np.moveaxis(np.asarray(values), axis, -1)
    if a.shape[-1] == 0:
        return np.zeros(a.shape[:-1], dtype=a.dtype)[()]
    while a.shape[-1] > 1:
        if a.shape[-1] % 2:
            pad = np.zeros(a.shape[:-1] + (1,), dtype=a.dtype)
            a = np.concatenate([a, pad], axis=-1)
        a = a[..., 0::2] + a[..., 1::2]
    return a[..., 0][()]


def _roundoff_floor(weights, values):
    return 32.0 * _EPS * float(pairwise_sum(np.abs(weights * values)))


def _check_finite(values, *coords):
    bad = ~np.isfinite(values)
    if np.any(bad):
        idx = np.unravel_index(np.argmax(bad), values.shape)
        where = ", ".join(f"{c[i]:.17g}" for c, i in zip(coords, idx))
        raise NumericError(f"integrand is not finite at node ({where}): {values[idx]!r}")


def _eval_1d(f, grid):
    values = np.asarray(f(grid.nodes), dtype=float)
    values = np.broadcast_to(values, grid.nodes.shape)
    _check_finite(values, grid.nodes)
    return values


def integrate_1d(f: Callable, grid: QuadratureGrid, refine: bool = True) -> IntegralResult:
    """Integrate a vectorized ``f`` over ``grid``.

    With ``refine`` the error estimate is the change against the same grid
    at half resolution, floored at the summation roundoff.
    """
    values = _eval_1d(f, grid)
    value = float(pairwise_sum(grid.weights * values))
    evaluations = len(grid)
    err = 0.0
    if refine:
        coarse = grid.coarsened()
        if grid.scheme == TRAPEZOID:
            coarse_vals = values[::2]
        else:
            coarse_vals = _eval_1d(f, coarse)
            evaluations += len(coarse)
        coarse_value = float(pairwise_sum(coarse.weights * coarse_vals))
        err = abs(value - coarse_value) + _roundoff_floor(grid.weights, values)
    return IntegralResult(value, err, evaluations)


def _row_blocks(n, block):
    return [(i, min(i + block, n)) for i in range(0, n, block)]


def _map_blocks(func, blocks):
    workers = min(worker_count(), len(blocks))
    if workers <= 1:
        return [func(b) for b in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, blocks))


def _integrate_2d_once(f, gx, gy, extra_weights=(), block_rows=256):
    """Return per-weight-set integrals of ``f`` over ``gx x gy``.

    ``extra_weights`` holds additional ``(wx, wy)`` pairs evaluated on the same
    function values (the halved trapezoid grid reuses every other node).
    """
    weight_sets = [(gx.weights, gy.weights)] + list(extra_weights)
    blocks = _row_blocks(len(gx.nodes), block_rows)

    def work(block):
        i0, i1 = block
        xs = gx.nodes[i0:i1]
        vals = np.asarray(f(xs, gy.nodes), dtype=float)
        vals = np.broadcast_to(vals, (len(xs), len(gy.nodes)))
        _check_finite(vals, xs, gy.nodes)
        rows = [pairwise_sum(vals * wy[None, :], axis=1) * wx[i0:i1] for wx, wy in weight_sets]
        floor = pairwise_sum(np.abs(vals) * gy.weights[None, :], axis=1) * gx.weights[i0:i1]
        return rows, floor

    parts = _map_blocks(work, blocks)
    sums = [
        float(pairwise_sum(np.concatenate([p[0][k] for p in parts])))
        for k in range(len(weight_sets))
    ]
    floor = 32.0 * _EPS * float(pairwise_sum(np.concatenate([p[1] for p in parts])))
    return sums, floor


def integrate_2d(
    f: Callable, grid_x: QuadratureGrid, grid_y: QuadratureGrid, refine: bool = True
) -> IntegralResult:
    """Integrate ``f`` over the tensor grid ``grid_x x grid_y``.

    ``f(xs, ys)`` receives 1D node arrays and must return the matrix
    ``f(xs[i], ys[j])``; rows are evaluated in blocks, possibly on several
    threads, and reduced in a fixed order so the result does not depend on
    the thread count.
    """
    evaluations = len(grid_x) * len(grid_y)
    if not refine:
        (value,), _ = _integrate_2d_once(f, grid_x, grid_y)
        return IntegralResult(value, 0.0, evaluations)
    if grid_x.scheme == TRAPEZOID and grid_y.scheme == TRAPEZOID:
        cx, cy = grid_x.coarsened(), grid_y.coarsened()
        wx = np.zeros_like(grid_x.weights)
        wy = np.zeros_like(grid_y.weights)
        wx[::2], wy[::2] = cx.weights, cy.weights
        (value, coarse_value), floor = _integrate_2d_once(f, grid_x, grid_y, [(wx, wy)])
    else:
        (value,), floor = _integrate_2d_once(f, grid_x, grid_y)
        cx, cy = grid_x.coarsened(), grid_y.coarsened()
        (coarse_value,), _ = _integrate_2d_once(f, cx, cy)
        evaluations += len(cx) * len(cy)
    return IntegralResult(value, abs(value - coarse_value) + floor, evaluations)


def nodal_points(amplitude: Callable, lo: float, hi: float, samples: int = 4096) -> np.ndarray:
    """Locate the zeros of a (possibly complex) function on ``[lo, hi]``.

    Zeros of ``amplitude`` are kinks of ``|amplitude|``; they are found as
    strict local minima of ``|amplitude|`` on a uniform sample and polished
    with a bounded scalar minimization of ``|amplitude|^2``.
    """
    xs = np.linspace(lo, hi, samples + 1)
    mag = np.abs(np.asarray(amplitude(xs)))
    peak = mag.max() if mag.size else 0.0
    if peak == 0.0:
        return np.empty(0)
    inner = mag[1:-1]
    idx = np.nonzero((inner < mag[:-2]) & (inner < mag[2:]) & (inner < 0.25 * peak))[0] + 1
    roots = []
    for i in idx:
        res = minimize_scalar(
            lambda t: float(np.abs(amplitude(np.array([t]))[0]) ** 2),
            bounds=(xs[i - 1], xs[i + 1]),
            method="bounded",
            options={"xatol": 1e-14 * max(1.0, abs(xs[i]))},
        )
        roots.append(res.x)
    return np.asarray(roots)


def _polish_minima(g, x, h, lo, hi, iterations=7):
    """Vectorized parabolic refinement of minima of ``g`` near ``x`` (step ``h``)."""
    for _ in range(iterations):
        gm, g0, gp = g(x - h), g(x), g(x + h)
        curv = gp - 2 * g0 + gm
        step = np.where(curv > 0, 0.5 * h * (gm - gp) / np.where(curv > 0, curv, 1.0), 0.0)
        x = np.clip(x + np.clip(step, -h, h), lo, hi)
        h = h / 16
    return x


def _row_abs_integrals(F, rows, lo, hi, panels, ppp, samples):
    """Inner integrals ``∫|F(x, row)| dx`` at full and half Gauss-Legendre order.

    Each row is split at the zeros of ``F(., row)`` located on a uniform
    sample and polished by parabolic refinement of ``|F|^2``.
    """
    xs = np.linspace(lo, hi, samples + 1)
    dx = xs[1] - xs[0]
    mag = np.abs(F(xs[None, :], rows[:, None]))
    inner = mag[:, 1:-1]
    peak = mag.max(axis=1, keepdims=True)
    hit = (inner < mag[:, :-2]) & (inner < mag[:, 2:]) & (inner < 0.25 * peak)
    r_idx, c_idx = np.nonzero(hit)
    zeros = xs[c_idx + 1]
    if zeros.size:
        zr = rows[r_idx]
        zeros = _polish_minima(lambda t: np.abs(F(t, zr)) ** 2, zeros, dx, lo, hi)
    counts = np.bincount(r_idx, minlength=len(rows))
    width = counts.max() if counts.size else 0
    uniform = np.linspace(lo, hi, panels + 1)
    cuts = np.full((len(rows), width), hi)
    if width:
        order = np.lexsort((zeros, r_idx))
        pos = np.arange(len(r_idx)) - np.repeat(np.cumsum(counts) - counts, counts)
        cuts[r_idx[order], pos] = zeros[order]
    edges = np.sort(np.concatenate([np.broadcast_to(uniform, (len(rows), panels + 1)), cuts], axis=1), axis=1)
    a, b = edges[:, :-1], edges[:, 1:]
    out = []
    for n in (ppp, ppp // 2):
        t, w = np.polynomial.legendre.leggauss(n)
        half = 0.5 * (b - a)
        nodes = 0.5 * (a + b)[:, :, None] + half[:, :, None] * t
        weights = half[:, :, None] * w
        vals = np.abs(F(nodes, rows[:, None, None]))
        _check_finite(vals.reshape(len(rows), -1), rows, nodes.reshape(len(rows), -1)[0])
        out.append(pairwise_sum((weights * vals).reshape(len(rows), -1), axis=1))
    return out[0], out[1]


def integrate_abs_2d(
    F: Callable,
    domain_x: Sequence[float],
    domain_y: Sequence[float],
    options: Options = DEFAULT_OPTIONS,
    samples: int = 2048,
    block_rows: int = 64,
) -> IntegralResult:
    """``∫∫ |F(x, y)| dx dy`` by iterated Gauss-Legendre with nodal splitting.

    ``F`` is elementwise over broadcastable arrays.  The inner integral over
    ``x`` is split at the zeros of each slice; the outer integral over ``y``
    is split where a whole slice vanishes (the kinks of the inner integral).
    The error estimate compares against half the Gauss-Legendre order on
    both axes.
    """
    (x0, x1), (y0, y1) = (tuple(map(float, domain_x)), tuple(map(float, domain_y)))
    panels, ppp = options.panels, options.points_per_panel
    if ppp < 4:
        raise ValueError("need at least 4 points per panel for the error estimate")

    ys = np.linspace(y0, y1, samples // 2 + 1)
    xs = np.linspace(x0, x1, samples + 1)
    xw = np.full(xs.size, xs[1] - xs[0])
    xw[[0, -1]] *= 0.5

    def slice_mass(y):
        return np.abs(F(xs[None, :], np.atleast_1d(y)[:, None])) @ xw

    g = slice_mass(ys)
    inner = g[1:-1]
    hit = np.nonzero((inner < g[:-2]) & (inner < g[2:]) & (inner < 1e-3 * g.max()))[0] + 1
    kinks = []
    for i in hit:
        res = minimize_scalar(
            lambda t: float(slice_mass(t)[0] ** 2),
            bounds=(ys[i - 1], ys[i + 1]),
            method="bounded",
            options={"xatol": 1e-13 * max(1.0, abs(ys[i]))},
        )
        kinks.append(res.x)

    fine = build_grid((y0, y1), ppp, panels, GAUSS_LEGENDRE, kinks)
    coarse = fine.coarsened()
    rows = np.concatenate([fine.nodes, coarse.nodes])
    blocks = _row_blocks(len(rows), block_rows)

    def work(block):
        i0, i1 = block
        return _row_abs_integrals(F, rows[i0:i1], x0, x1, panels, ppp, samples)

    parts = _map_blocks(work, blocks)
    full = np.concatenate([p[0] for p in parts])
    half = np.concatenate([p[1] for p in parts])
    nf = len(fine.nodes)
    value = float(pairwise_sum(fine.weights * full[:nf]))
    coarse_value = float(pairwise_sum(coarse.weights * half[nf:]))
    err = abs(value - coarse_value) + _roundoff_floor(fine.weights, full[:nf])
    evaluations = len(rows) * (samples + 1 + (ppp + ppp // 2) * panels)
    return IntegralResult(value, err, evaluations)


# ---------------------------------------------------------------------------
# Entropies
# ---------------------------------------------------------------------------


def differential_entropy(p, grid: QuadratureGrid, normalization_tol: float = 1e-4) -> float:
    """Differential entropy ``-∫ p ln p`` of a density sampled on ``grid``.

    ``p`` is a vectorized callable or an array of values at the grid nodes.
    The integrand is taken as 0 where ``p < 1e-300``.
    """
    vals = np.asarray(p(grid.nodes) if callable(p) else p, dtype=float)
    _check_finite(vals, grid.nodes)
    if np.any(vals < 0):
        i = int(np.argmin(vals))
        raise ContractError(f"density is negative at x={grid.nodes[i]:.6g}: {vals[i]:.3g}")
    mass = float(pairwise_sum(grid.weights * vals))
    if abs(mass - 1.0) > normalization_tol:
        err = ContractError(f"density integrates to {mass:.10g}, not 1")
        err.mass = mass
        raise err
    safe = np.where(vals < 1e-300, 1.0, vals)
    integrand = np.where(vals < 1e-300, 0.0, vals * np.log(safe))
    return -float(pairwise_sum(grid.weights * integrand))


def von_neumann_entropy(rho, hermitian_tol: float = 1e-10, clamp: float = -1e-8) -> float:
    """Von Neumann entropy ``-tr(rho ln rho)`` with ``0 ln 0 = 0``."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {rho.shape}")
    asym = np.max(np.abs(rho - rho.conj().T)) if rho.size else 0.0
    if asym > hermitian_tol:
        raise ContractError(f"matrix is not Hermitian (deviation {asym:.3g})")
    evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if evals.size and evals.min() < clamp:
        raise PositivityError(f"eigenvalue {evals.min():.3g} below {clamp:g}")
    evals = evals[evals > 0]
    return max(0.0, -float(pairwise_sum(evals * np.log(evals))))
