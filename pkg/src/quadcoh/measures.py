"""Quadrature-basis coherence measures and incoherent approximants.

Two quantifiers are provided:

* the l1-style functional ``C = ∫∫ |<x|rho|x'>| dx dx'`` (``(∫|psi|)^2``
  for pure states), and
* the relative entropy of coherence with the divergent ``ln sigma`` of the
  continuum discretization removed, ``S_reg = -S_vN(rho) + h(p)`` where
  ``h`` is the differential entropy of the quadrature distribution.
  ``S_reg`` is offset-relative and may be negative; only differences
  between states are physical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConvergenceError, ContractError, CoverageError, UnsupportedStateError
from .numerics import (
    DEFAULT_OPTIONS,
    Options,
    QuadratureGrid,
    abs_grid,
    differential_entropy,
    domain_grid,
    hermite_psi_all,
    integrate_1d,
    integrate_2d,
    nodal_points,
    pairwise_sum,
    von_neumann_entropy,
)
from .states import (
    Displaced,
    FockDensityMatrix,
    FockVector,
    GaussianPureState,
    ProductState,
    Rescaled,
    Rotated,
    State,
    ThermalState,
    fock_truncate,
    quadrature_pdf,
    support_interval,
)

ANALYTIC = "analytic"
NUMERIC_PURE = "numeric_pure"
NUMERIC_KERNEL = "numeric_kernel"
PRODUCT = "product"

SQRT_2PI = math.sqrt(2 * math.pi)
DEFAULT_SIGMA_SWEEP = (0.5, 0.25, 0.125, 0.0625, 0.03125)

_BIN_NODES, _BIN_WEIGHTS = np.polynomial.legendre.leggauss(16)
_MAX_1D_REFINEMENTS = 3


@dataclass(frozen=True)
class CoherenceReport:
    value: float
    error_estimate: float
    method: str

    def __post_init__(self):
        if self.value < 0 or self.error_estimate < 0:
            raise ValueError("coherence value and error estimate must be nonnegative")
        if self.method == ANALYTIC and self.error_estimate != 0:
            raise ValueError("analytic reports carry no error estimate")


# ---------------------------------------------------------------------------
# l1-style coherence
# ---------------------------------------------------------------------------


def coherence_l1(state, opts: Options | None = None) -> CoherenceReport:
    """Coherence ``C`` of ``state``, using a closed form whenever one exists.

    Closed forms: pure Gaussian ``2 sqrt(2 pi) ΔX``; thermal
    ``sqrt(2 pi / (1 + 2 n))``; squeezing multiplies by ``lam``;
    displacements leave ``C`` unchanged; products multiply.  Other states
    are integrated numerically (see :func:`coherence_l1_numeric`).
    """
    opts = opts or DEFAULT_OPTIONS
    if isinstance(state, GaussianPureState):
        return CoherenceReport(2 * SQRT_2PI * state.delta_x, 0.0, ANALYTIC)
    if isinstance(state, FockVector) and state.max_index == 0:
        return CoherenceReport(SQRT_2PI, 0.0, ANALYTIC)
    if isinstance(state, ThermalState):
        return CoherenceReport(math.sqrt(2 * math.pi / (1 + 2 * state.n_mean)), 0.0, ANALYTIC)
    if isinstance(state, Rescaled):
        inner = coherence_l1(state.inner, opts)
        return CoherenceReport(state.lam * inner.value, state.lam * inner.error_estimate, inner.method)
    if isinstance(state, Displaced):
        return coherence_l1(state.inner, opts)
    if isinstance(state, IncoherentApprox):
        return CoherenceReport(state.analytic_coherence, 0.0, ANALYTIC)
    if isinstance(state, ProductState):
        reports = [coherence_l1(f, opts) for f in state.factors]
        value = math.prod(r.value for r in reports)
        rel = sum(r.error_estimate / r.value for r in reports if r.value > 0)
        return CoherenceReport(value, value * rel, PRODUCT)
    from .transforms import TwoModePure, coherence_two_mode_pure

    if isinstance(state, TwoModePure):
        return coherence_two_mode_pure(state, opts=opts)
    return coherence_l1_numeric(state, opts=opts)


def coherence_l1_numeric(
    state,
    grid_x: QuadratureGrid | None = None,
    grid_y: QuadratureGrid | None = None,
    opts: Options | None = None,
    path: str = "auto",
) -> CoherenceReport:
    """Numerical ``C``: ``(∫|psi|)^2`` for pure states, ``∫∫|kernel|`` otherwise.

    ``path="kernel"`` forces the double integral for pure states as well.

    Without explicit grids the truncation domain comes from the state's
    support.  The pure path splits Gauss-Legendre panels at the zeros of the
    wavefunction (the kinks of ``|psi|``); the kernel path uses uniform
    trapezoid grids with ``opts.grid_points`` intervals, doubled up to
    ``opts.max_grid_points`` until the halving error estimate is below
    ``opts.tolerance`` relative to the value.
    """
    opts = opts or DEFAULT_OPTIONS
    if isinstance(state, ProductState):
        raise UnsupportedStateError("numeric coherence of products is taken factor by factor")
    if path not in ("auto", "kernel"):
        raise ValueError(f"path must be 'auto' or 'kernel', got {path!r}")
    if state.is_pure and path == "auto":
        return _pure_l1(state, opts, grid_x)
    return _kernel_l1(state, opts, grid_x, grid_y)


def _check_converged(value, err, opts, what):
    if err > opts.tolerance * max(abs(value), 1e-300):
        raise ConvergenceError(
            f"{what}: error estimate {err:.3g} exceeds tolerance {opts.tolerance:g} "
            f"(relative to value {value:.10g})",
            value,
            err,
        )


def _pure_l1(state, opts, grid=None):
    def amplitude(x):
        return np.abs(state.wavefunction(x))

    if grid is None:
        lo, hi = support_interval(state)
        grid = domain_grid(lo, hi, opts, nodal_points(state.wavefunction, lo, hi))
        for _ in range(_MAX_1D_REFINEMENTS):
            res = integrate_1d(amplitude, grid)
            if res.error_estimate <= 0.5 * opts.tolerance * abs(res.value):
                break
            grid = grid.refined()
    else:
        res = integrate_1d(amplitude, grid)
    value = res.value**2
    err = 2 * abs(res.value) * res.error_estimate + res.error_estimate**2
    _check_converged(value, err, opts, "pure-state coherence")
    return CoherenceReport(value, err, NUMERIC_PURE)


def _kernel_l1(state, opts, grid_x=None, grid_y=None):
    def integrand(xs, ys):
        return np.abs(state.kernel_matrix(xs, ys))

    if grid_x is not None:
        res = integrate_2d(integrand, grid_x, grid_y if grid_y is not None else grid_x)
        _check_converged(res.value, res.error_estimate, opts, "kernel coherence")
        return CoherenceReport(res.value, res.error_estimate, NUMERIC_KERNEL)
    lo, hi = support_interval(state)
    n = opts.grid_points
    while True:
        g = abs_grid(lo, hi, n)
        res = integrate_2d(integrand, g, g)
        if res.error_estimate <= opts.tolerance * abs(res.value) or 2 * n > opts.max_grid_points:
            break
        n *= 2
    _check_converged(res.value, res.error_estimate, opts, "kernel coherence")
    return CoherenceReport(res.value, res.error_estimate, NUMERIC_KERNEL)


# ---------------------------------------------------------------------------
# Relative entropy of coherence
# ---------------------------------------------------------------------------


def relative_entropy_coherence(state, opts: Options | None = None, method: str = "auto") -> float:
    """Regularized relative entropy of coherence ``S_reg = -S_vN + h(p)``.

    ``method="auto"`` uses the closed forms for pure Gaussian and thermal
    states and the numerical route otherwise; ``"numeric"`` forces the
    numerical route (von Neumann entropy from a number-basis matrix plus the
    differential entropy of the quadrature distribution).
    """
    return relative_entropy_with_method(state, opts, method)[0]


def relative_entropy_with_method(state, opts: Options | None = None, method: str = "auto"):
    """Like :func:`relative_entropy_coherence` but also returns the method tag."""
    opts = opts or DEFAULT_OPTIONS
    if method not in ("auto", "numeric"):
        raise ValueError(f"method must be 'auto' or 'numeric', got {method!r}")
    if isinstance(state, ProductState):
        parts = [relative_entropy_with_method(f, opts, method) for f in state.factors]
        return sum(v for v, _ in parts), PRODUCT
    if method == "auto":
        if isinstance(state, GaussianPureState):
            return 0.5 * (1 + math.log(2 * math.pi * state.delta_x**2)), ANALYTIC
        if isinstance(state, ThermalState):
            return _thermal_entropy_closed_form(state.n_mean), ANALYTIC
    s_vn = _von_neumann(state, opts)
    lo, hi = support_interval(state)

    def pdf(x):
        return quadrature_pdf(state, x)

    grid = domain_grid(lo, hi, opts, nodal_points(pdf, lo, hi))
    return -s_vn + differential_entropy(pdf, grid), "numeric"


def _thermal_entropy_closed_form(n):
    purity_term = -math.log1p(n) + (n * math.log(n / (1 + n)) if n > 0 else 0.0)
    return purity_term + 0.5 * (1 + math.log(0.5 * math.pi * (1 + 2 * n)))


def _von_neumann(state, opts):
    if state.is_pure:
        return 0.0
    if isinstance(state, (Rescaled, Displaced, Rotated)):
        return _von_neumann(state.inner, opts)
    if isinstance(state, ThermalState):
        dim = opts.fock_dim
        r = state.n_mean / (1 + state.n_mean)
        if r > 0:
            dim = max(dim, int(math.ceil(math.log(1e-10) / math.log(r))) + 1)
        return von_neumann_entropy(fock_truncate(state, dim).entries)
    if isinstance(state, FockDensityMatrix):
        return von_neumann_entropy(state.entries)
    raise UnsupportedStateError(
        f"no number-basis representation for the entropy of {type(state).__name__}"
    )


# ---------------------------------------------------------------------------
# Incoherent approximants
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IncoherentApprox(State):
    """Discretized diagonal part of a state.

    ``variant="chi"``: weights ``w_j`` on the orthonormal box states of width
    ``sigma`` centred at ``j sigma``.  ``variant="xi"``: a mixture of
    Gaussian wavepackets of width ``sigma`` whose centres follow the
    distribution ``P`` (``xi_distribution`` holds the sample points and
    their probability masses; ``xi_gaussian`` the ``(mean, variance)`` of a
    Gaussian ``P`` handled in closed form).
    """

    variant: str
    sigma: float
    chi_weights: tuple = ()
    xi_distribution: tuple = ()
    xi_gaussian: tuple | None = None

    def __post_init__(self):
        if self.variant not in ("chi", "xi"):
            raise ValueError(f"unknown variant {self.variant!r}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        w = np.array([wj for _, wj in self.chi_weights], float)
        if w.size and (w.min() < 0 or w.sum() > 1 + 1e-9):
            raise ContractError("chi weights must be nonnegative and sum to at most 1")

    @property
    def chi_indices(self) -> np.ndarray:
        return np.array([j for j, _ in self.chi_weights], int)

    @property
    def chi_values(self) -> np.ndarray:
        return np.array([w for _, w in self.chi_weights], float)

    @property
    def analytic_coherence(self) -> float:
        if self.variant == "chi":
            return self.sigma * float(pairwise_sum(self.chi_values))
        return 2 * SQRT_2PI * self.sigma

    def _xi(self, x, centres):
        s = self.sigma
        d = np.asarray(x, float)[None, ...] - centres.reshape((-1,) + (1,) * np.ndim(x))
        return (2 * math.pi * s * s) ** -0.25 * np.exp(-d * d / (4 * s * s))

    def kernel(self, x, xp):
        x, xp = np.broadcast_arrays(np.asarray(x, float), np.asarray(xp, float))
        s = self.sigma
        if self.variant == "chi":
            jx = np.floor(x / s + 0.5).astype(int)
            jxp = np.floor(xp / s + 0.5).astype(int)
            lookup = dict(self.chi_weights)
            w = np.vectorize(lambda j: lookup.get(int(j), 0.0), otypes=[float])(jx)
            return np.where(jx == jxp, w / s, 0.0).astype(complex)
        if self.xi_gaussian is not None:
            mu, var = self.xi_gaussian
            a = 1.0 / (4 * s * s)
            m = 0.5 * (x + xp)
            scale = 1 + 4 * a * var
            val = np.exp(-a * (x - xp) ** 2 / 2 - 2 * a * (m - mu) ** 2 / scale)
            return (val / (math.sqrt(2 * math.pi) * s * math.sqrt(scale))).astype(complex)
        centres, masses = self.xi_distribution
        return np.tensordot(masses, self._xi(x, centres) * self._xi(xp, centres), axes=1).astype(complex)

    def kernel_matrix(self, xs, xps):
        if self.variant == "xi" and self.xi_gaussian is None:
            centres, masses = self.xi_distribution
            a = self._xi(np.asarray(xs, float), centres)
            b = self._xi(np.asarray(xps, float), centres)
            return (a.T @ (masses[:, None] * b)).astype(complex)
        return super().kernel_matrix(xs, xps)

    def moments(self):
        s = self.sigma
        if self.variant == "chi":
            x = self.chi_indices * s
            w = self.chi_values
            ex, ex2 = float(w @ x), float(w @ (x * x)) + s * s / 12 * float(w.sum())
            return np.array([ex, 0.0]), np.array([[ex2, 0.0], [0.0, math.inf]])
        if self.xi_gaussian is not None:
            mu, var = self.xi_gaussian
            ex, ex2 = mu, mu * mu + var
        else:
            c, m = self.xi_distribution
            ex, ex2 = float(m @ c), float(m @ (c * c))
        return np.array([ex, 0.0]), np.array([[ex2 + s * s, 0.0], [0.0, 1 / (16 * s * s)]])

    def support(self):
        s = self.sigma
        if self.variant == "chi":
            j = self.chi_indices
            lo, hi = (j.min() - 0.5) * s, (j.max() + 0.5) * s
            return (0.5 * (lo + hi), 0.0, 0.5 * (hi - lo), math.inf)
        if self.xi_gaussian is not None:
            mu, var = self.xi_gaussian
            lo, hi = mu - 12 * math.sqrt(var), mu + 12 * math.sqrt(var)
        else:
            c, m = self.xi_distribution
            live = c[m > 0]
            lo, hi = live.min(), live.max()
        return (0.5 * (lo + hi), 0.0, 0.5 * (hi - lo) + 12 * s, 3 / s)


def _bin_nodes(j, sigma):
    centres = np.asarray(j, float) * sigma
    xs = centres[:, None] + 0.5 * sigma * _BIN_NODES[None, :]
    return xs, 0.5 * sigma * _BIN_WEIGHTS


def _default_j_range(state, sigma):
    lo, hi = support_interval(state)
    return int(math.floor(lo / sigma)) - 1, int(math.ceil(hi / sigma)) + 1


def chi_diagonal(
    state,
    sigma: float,
    j_range: tuple | None = None,
    weights: str = "exact",
    coverage_tol: float = 1e-6,
) -> IncoherentApprox:
    """Diagonal part of ``state`` on box states of width ``sigma``.

    ``state`` may also be a vectorized density ``p(x)``, in which case
    ``j_range`` is required.  Weight modes:

    * ``"exact"``: ``w_j = ∫_bin p(x) dx`` (sums to 1 at any ``sigma``);
    * ``"midpoint"``: ``w_j = sigma p(j sigma)``;
    * ``"overlap"``: ``w_j = <chi_j|rho|chi_j>``, the double kernel integral
      over the bin divided by ``sigma``; its sum is ``1 - O(sigma^2)``.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if j_range is None:
        if callable(state) and not isinstance(state, State):
            raise ValueError("j_range is required when a bare density is given")
        j_range = _default_j_range(state, sigma)
    j = np.arange(j_range[0], j_range[1] + 1)
    if callable(state) and not isinstance(state, State):
        pdf = state
        if weights == "overlap":
            raise ValueError("overlap weights need a state kernel, not a bare density")
    else:
        def pdf(x):
            return quadrature_pdf(state, x)

    if weights == "exact":
        xs, bw = _bin_nodes(j, sigma)
        w = np.asarray(pdf(xs.ravel()), float).reshape(xs.shape) @ bw
    elif weights == "midpoint":
        w = sigma * np.asarray(pdf(j * sigma), float)
    elif weights == "overlap":
        xs, bw = _bin_nodes(j, sigma)
        k = np.real(state.kernel(xs[:, :, None], xs[:, None, :]))
        w = np.einsum("jab,a,b->j", k, bw, bw) / sigma
    else:
        raise ValueError(f"unknown weight mode {weights!r}")
    if np.any(w < 0):
        w = np.where(w > -1e-15, np.maximum(w, 0.0), w)
        if np.any(w < 0):
            raise ContractError(f"negative chi weight {w.min():.3g}")
    total = float(pairwise_sum(w))
    if total < 1 - coverage_tol:
        raise CoverageError(f"chi weights cover only {total:.10g} of the probability")
    return IncoherentApprox("chi", sigma, tuple(zip(j.tolist(), w.tolist())))


def chi_entropy_term(
    state, sigma: float, j_range: tuple | None = None, weights: str = "exact", **kwargs
) -> float:
    """``tr(rho ln rho_d) = sum_j w_j ln w_j`` for the box-state diagonal part.

    As ``sigma -> 0`` the result minus ``ln sigma`` tends to ``∫ p ln p``.
    """
    w = chi_diagonal(state, sigma, j_range, weights, **kwargs).chi_values
    w = w[w > 0]
    return float(pairwise_sum(w * np.log(w)))


def chi_fock_matrix(approx: IncoherentApprox, dim: int) -> np.ndarray:
    """Number-basis matrix of ``sum_j w_j |chi_j><chi_j|`` truncated to ``dim``."""
    if approx.variant != "chi":
        raise ValueError("chi_fock_matrix needs a chi-variant approximant")
    xs, bw = _bin_nodes(approx.chi_indices, approx.sigma)
    psi = hermite_psi_all(dim - 1, xs.ravel()).reshape((dim,) + xs.shape)
    overlaps = (psi @ bw) / math.sqrt(approx.sigma)
    return (overlaps * approx.chi_values[None, :]) @ overlaps.T


def xi_incoherent_state(P, sigma: float, grid: QuadratureGrid, tol: float = 1e-6) -> IncoherentApprox:
    """Mixture ``∫ P(x) |xi_{x,sigma}><xi_{x,sigma}| dx`` sampled on ``grid``.

    ``P`` is a vectorized density or its values at the grid nodes.  The
    sampled masses are renormalized to sum to 1 once ``∫P = 1`` has been
    checked to ``tol``.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    vals = np.asarray(P(grid.nodes) if callable(P) else P, float)
    if vals.shape != grid.nodes.shape or np.any(vals < 0) or not np.all(np.isfinite(vals)):
        raise ContractError("P must be finite and nonnegative at every grid node")
    masses = grid.weights * vals
    total = float(pairwise_sum(masses))
    if abs(total - 1) > tol:
        raise ContractError(f"P integrates to {total:.10g}, not 1")
    keep = masses > 0
    return IncoherentApprox(
        "xi", sigma, xi_distribution=(grid.nodes[keep].copy(), masses[keep] / total)
    )


def xi_gaussian_incoherent_state(mean: float, variance: float, sigma: float) -> IncoherentApprox:
    """ξ mixture with Gaussian ``P``; its kernel is evaluated in closed form."""
    if not (variance > 0 and sigma > 0):
        raise ValueError("variance and sigma must be positive")
    return IncoherentApprox("xi", sigma, xi_gaussian=(float(mean), float(variance)))


def hilbert_schmidt_distance(rho, rho2) -> float:
    """``tr[(rho - rho2)^2]`` for two number-basis matrices of equal size."""
    a = rho.entries if isinstance(rho, FockDensityMatrix) else np.asarray(rho, complex)
    b = rho2.entries if isinstance(rho2, FockDensityMatrix) else np.asarray(rho2, complex)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(pairwise_sum(np.abs(a - b).ravel() ** 2))
