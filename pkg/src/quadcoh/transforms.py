"""Free evolution, displacement, squeezing and two-mode mixing of states.

Single-mode maps return a closed-form state where one exists (Gaussian
parameters, number-basis phases) and a lazy wrapper otherwise.  Two-mode
maps act on pure states only and return a :class:`TwoModePure` whose
amplitude is the input amplitude composed with the inverse linear map of
the quadrature basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .errors import ContractError, UnsupportedStateError
from .measures import (
    NUMERIC_KERNEL,
    SQRT_2PI,
    CoherenceReport,
    _check_converged,
    relative_entropy_coherence,
)
from .numerics import (
    DEFAULT_OPTIONS,
    Options,
    QuadratureGrid,
    abs_grid,
    hermite_psi_all,
    integrate_2d,
    integrate_abs_2d,
)
from .states import (
    DEFAULT_FOCK_DIM,
    Displaced,
    FockDensityMatrix,
    FockVector,
    GaussianPureState,
    ProductState,
    Rescaled,
    Rotated,
    ThermalState,
    _phase_rotate,
    _rotation,
)

# ---------------------------------------------------------------------------
# Single-mode maps
# ---------------------------------------------------------------------------


def rotate(state, tau: float, fock_dim: int = DEFAULT_FOCK_DIM):
    """Free evolution ``U = exp(-i tau a†a)``: ``X -> cos(tau) X + sin(tau) Y``."""
    if tau == 0:
        return state
    if isinstance(state, GaussianPureState):
        r = _rotation(tau)
        m = r @ np.array([state.x_mean, state.y_mean])
        return GaussianPureState.from_covariance(m, r @ state.covariance @ r.T)
    if isinstance(state, (FockVector, FockDensityMatrix)):
        return _phase_rotate(state, tau)
    if isinstance(state, ThermalState):
        return state
    if isinstance(state, Displaced):
        d = _rotation(tau) @ np.array([state.x0, state.y0])
        return displace(rotate(state.inner, tau, fock_dim), float(d[0]), float(d[1]))
    if isinstance(state, Rotated):
        return Rotated(state.inner, state.tau + tau, state.fock_dim)
    if isinstance(state, ProductState):
        return ProductState(tuple(rotate(f, tau, fock_dim) for f in state.factors))
    return Rotated(state, tau, fock_dim)


def rotation_coherence_curve(g: GaussianPureState, taus: Iterable[float]) -> list:
    """``(tau, C(tau))`` for an uncorrelated pure Gaussian under free evolution."""
    if g.xy_correlation != 0:
        raise ContractError("the rotation curve formula needs an uncorrelated Gaussian state")
    vx, vy = g.delta_x**2, g.delta_y**2
    return [
        (float(t), 2 * SQRT_2PI * math.sqrt(math.cos(t) ** 2 * vx + math.sin(t) ** 2 * vy))
        for t in taus
    ]


def displace(state, x0: float, y0: float):
    """Displacement ``X -> X + x0``, ``Y -> Y + y0``."""
    if x0 == 0 and y0 == 0:
        return state
    if isinstance(state, GaussianPureState):
        return GaussianPureState(
            state.x_mean + x0, state.y_mean + y0, state.delta_x, state.delta_y, state.xy_correlation
        )
    if isinstance(state, Displaced):
        return displace(state.inner, state.x0 + x0, state.y0 + y0)
    if isinstance(state, ProductState):
        raise UnsupportedStateError("displace acts on a single mode")
    return Displaced(state, float(x0), float(y0))


def squeeze(state, lam: float):
    """Quadrature squeezing ``X -> lam X``, ``Y -> Y / lam``."""
    if not (math.isfinite(lam) and lam > 0):
        raise ValueError(f"squeeze factor must be positive, got {lam}")
    if lam == 1:
        return state
    if isinstance(state, GaussianPureState):
        return GaussianPureState(
            lam * state.x_mean, state.y_mean / lam, lam * state.delta_x,
            state.delta_y / lam, state.xy_correlation,
        )
    if isinstance(state, Rescaled):
        total = state.lam * lam
        return state.inner if total == 1 else Rescaled(state.inner, total)
    if isinstance(state, ProductState):
        raise UnsupportedStateError("squeeze acts on a single mode")
    return Rescaled(state, float(lam))


def squeeze_entropy_shift(state, lam: float, opts: Options | None = None, method: str = "auto") -> float:
    """``S_reg(squeeze(state, lam)) - S_reg(state)``; equals ``ln lam``."""
    after = relative_entropy_coherence(squeeze(state, lam), opts, method)
    return after - relative_entropy_coherence(state, opts, method)


# ---------------------------------------------------------------------------
# Two-mode pure states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RemapMatrix:
    """Unit-determinant linear map of the two-mode quadrature basis."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, float)
        if m.shape != (2, 2):
            raise ValueError(f"remap matrix must be 2x2, got {m.shape}")
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det - 1) >= 1e-12:
            raise ContractError(f"remap matrix has determinant {det!r}, expected 1")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def beam_splitter(cls, theta: float) -> "RemapMatrix":
        c, s = math.cos(theta), math.sin(theta)
        return cls(np.array([[c, s], [-s, c]]))

    @classmethod
    def two_mode_squeezer(cls, theta: float) -> "RemapMatrix":
        ch, sh = math.cosh(theta), math.sinh(theta)
        return cls(np.array([[ch, sh], [sh, ch]]))

    @property
    def inverse(self) -> np.ndarray:
        (a, b), (c, d) = self.matrix
        return np.array([[d, -b], [-c, a]])


@dataclass(frozen=True, eq=False)
class TwoModePure:
    """Two-mode pure state given by its amplitude ``psi(x1, x2)``.

    ``amplitude`` is elementwise over broadcastable arrays;
    ``support_radius`` bounds ``|x1|`` and ``|x2|`` for integration.
    """

    amplitude: Callable
    support_radius: tuple

    is_pure = True

    def __post_init__(self):
        r = tuple(float(v) for v in self.support_radius)
        if len(r) != 2 or min(r) <= 0:
            raise ValueError("support_radius must hold two positive radii")
        object.__setattr__(self, "support_radius", r)

    @classmethod
    def product(cls, s1, s2) -> "TwoModePure":
        for s in (s1, s2):
            if isinstance(s, ProductState) or not getattr(s, "is_pure", False):
                raise UnsupportedStateError(
                    f"two-mode maps need pure single-mode inputs, got {type(s).__name__}"
                )

        def amplitude(x1, x2):
            return s1.wavefunction(x1) * s2.wavefunction(x2)

        return cls(amplitude, (_radius(s1), _radius(s2)))

    @classmethod
    def from_fock(cls, coefficients) -> "TwoModePure":
        """State ``sum_mn c_mn |m>|n>`` from its coefficient matrix."""
        c = np.asarray(coefficients, complex)
        norm = float(np.sum(np.abs(c) ** 2))
        if abs(norm - 1) > 1e-10:
            raise ContractError(f"coefficients have squared norm {norm:.12g}, expected 1")
        n1, n2 = c.shape[0] - 1, c.shape[1] - 1

        def amplitude(x1, x2):
            x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
            p1 = hermite_psi_all(n1, x1)
            p2 = hermite_psi_all(n2, x2)
            return np.einsum("mn,m...,n...->...", c, p1, p2)

        return cls(amplitude, (math.sqrt(n1 + 0.5) + 6, math.sqrt(n2 + 0.5) + 6))

    def remapped(self, remap: RemapMatrix, support_radius: tuple) -> "TwoModePure":
        """Image under the basis map ``|x> -> |remap x>``: ``psi'(x) = psi(remap^-1 x)``."""
        a = remap.inverse
        inner = self.amplitude

        def amplitude(x1, x2):
            return inner(a[0, 0] * x1 + a[0, 1] * x2, a[1, 0] * x1 + a[1, 1] * x2)

        return TwoModePure(amplitude, support_radius)


def _radius(state):
    cx, _, wx, _ = state.support()
    return abs(cx) + wx


def _as_two_mode(s):
    if isinstance(s, TwoModePure):
        return s
    if isinstance(s, ProductState):
        if len(s.factors) != 2:
            raise UnsupportedStateError("two-mode maps need exactly two factors")
        return TwoModePure.product(*s.factors)
    if isinstance(s, (tuple, list)) and len(s) == 2:
        return TwoModePure.product(*s)
    raise UnsupportedStateError(f"cannot treat {type(s).__name__} as a two-mode pure state")


def beam_split(s1, s2, theta: float) -> TwoModePure:
    """Lossless beam splitter with real coefficients acting on ``s1 ⊗ s2``.

    ``V|x1>|x2> = |cos θ x1 + sin θ x2>|-sin θ x1 + cos θ x2>``.
    """
    base = TwoModePure.product(s1, s2)
    if theta == 0:
        return base
    r1, r2 = base.support_radius
    c, s = abs(math.cos(theta)), abs(math.sin(theta))
    return base.remapped(RemapMatrix.beam_splitter(theta), (c * r1 + s * r2, s * r1 + c * r2))


def two_mode_squeeze(s, theta: float) -> TwoModePure:
    """Two-mode squeezer ``T|x1>|x2> = |cosh θ x1 + sinh θ x2>|sinh θ x1 + cosh θ x2>``."""
    base = _as_two_mode(s)
    if theta == 0:
        return base
    r = math.exp(abs(theta)) * max(base.support_radius) + 2
    return base.remapped(RemapMatrix.two_mode_squeezer(theta), (r, r))


def _two_mode_integral(s: TwoModePure, power: int, opts: Options, grid_x=None, grid_y=None):
    def integrand(xs, ys):
        return np.abs(s.amplitude(xs[:, None], ys[None, :])) ** power

    if grid_x is not None:
        return integrate_2d(integrand, grid_x, grid_y if grid_y is not None else grid_x)
    r1, r2 = s.support_radius
    if power == 1:
        return integrate_abs_2d(s.amplitude, (-r1, r1), (-r2, r2), opts)
    n = opts.grid_points
    while True:
        res = integrate_2d(integrand, abs_grid(-r1, r1, n), abs_grid(-r2, r2, n))
        if res.error_estimate <= 0.5 * opts.tolerance * abs(res.value) or 2 * n > opts.max_grid_points:
            return res
        n *= 2


def coherence_two_mode_pure(
    s: TwoModePure,
    grid_x: QuadratureGrid | None = None,
    grid_y: QuadratureGrid | None = None,
    opts: Options | None = None,
) -> CoherenceReport:
    """``C = (∫∫ |psi(x1, x2)| dx1 dx2)^2``.

    Explicit grids give a tensor-product rule; otherwise the iterated
    Gauss-Legendre rule split along the nodal lines of ``psi`` is used.
    """
    opts = opts or DEFAULT_OPTIONS
    s = _as_two_mode(s)
    res = _two_mode_integral(s, 1, opts, grid_x, grid_y)
    value = res.value**2
    err = 2 * abs(res.value) * res.error_estimate + res.error_estimate**2
    _check_converged(value, err, opts, "two-mode coherence")
    return CoherenceReport(value, err, NUMERIC_KERNEL)


def two_mode_norm(s, opts: Options | None = None) -> float:
    """``∫∫ |psi|^2`` over the declared support."""
    return _two_mode_integral(_as_two_mode(s), 2, opts or DEFAULT_OPTIONS).value
