"""Single-mode field states in the quadrature (position) representation.

Every state exposes its position-space kernel ``<x|rho|x'>``; pure states
also expose their wavefunction ``<x|psi>``.  Transform wrappers
(:class:`Rescaled`, :class:`Displaced`, :class:`Rotated`) evaluate kernels
through exact coordinate and phase maps of the wrapped state.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .errors import CapacityError, ContractError, PositivityError, UnsupportedStateError
from .numerics import domain_grid, hermite_psi_all

TRUNCATION_LOSS_TOL = 1e-8
DEFAULT_FOCK_DIM = 64
PDF_CLAMP = 1e-14


def _rotation(tau):
    c, s = math.cos(tau), math.sin(tau)
    return np.array([[c, s], [-s, c]])


class State:
    """Common interface of single-mode states."""

    is_pure = False

    def kernel(self, x, xp):
        """Elementwise ``<x|rho|x'>`` for broadcastable ``x`` and ``xp``."""
        raise NotImplementedError

    def kernel_matrix(self, xs, xps):
        """``<xs[i]|rho|xps[j]>`` as a ``len(xs) x len(xps)`` matrix."""
        xs, xps = np.asarray(xs, float), np.asarray(xps, float)
        return self.kernel(xs[:, None], xps[None, :])

    def moments(self):
        """First moments ``(<X>, <Y>)`` and the symmetrized second-moment matrix."""
        raise NotImplementedError

    def support(self):
        """Phase-space box ``(cx, cy, wx, wy)`` outside of which the state is negligible."""
        raise NotImplementedError


class PureState(State):
    is_pure = True

    def wavefunction(self, x):
        raise NotImplementedError

    def kernel(self, x, xp):
        return self.wavefunction(x) * np.conj(self.wavefunction(xp))

    def kernel_matrix(self, xs, xps):
        return np.outer(self.wavefunction(np.asarray(xs, float)),
                        np.conj(self.wavefunction(np.asarray(xps, float))))


# ---------------------------------------------------------------------------
# State families
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GaussianPureState(PureState):
    """Pure Gaussian state given by quadrature means and (co)variances.

    ``delta_y`` defaults to the value that makes the state pure,
    ``Δ²X Δ²Y - cov² = 1/16``.
    """

    x_mean: float = 0.0
    y_mean: float = 0.0
    delta_x: float = 0.5
    delta_y: float | None = None
    xy_correlation: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.delta_x) and self.delta_x > 0):
            raise ContractError(f"delta_x must be positive, got {self.delta_x}")
        vx, cov = self.delta_x**2, self.xy_correlation
        if self.delta_y is None:
            object.__setattr__(self, "delta_y", math.sqrt((1.0 / 16 + cov * cov) / vx))
        elif not self.delta_y > 0:
            raise ContractError(f"delta_y must be positive, got {self.delta_y}")
        det = vx * self.delta_y**2 - cov * cov
        if abs(det - 1.0 / 16) > 1e-10:
            raise ContractError(
                f"not a pure Gaussian: Δ²XΔ²Y - cov² = {det:.12g}, expected 1/16"
            )

    @classmethod
    def coherent(cls, alpha: complex) -> "GaussianPureState":
        return cls(alpha.real, alpha.imag, 0.5)

    @classmethod
    def from_covariance(cls, means, cov) -> "GaussianPureState":
        cov = np.asarray(cov, float)
        return cls(float(means[0]), float(means[1]), math.sqrt(cov[0, 0]),
                   math.sqrt(cov[1, 1]), float(cov[0, 1]))

    @property
    def covariance(self) -> np.ndarray:
        c = self.xy_correlation
        return np.array([[self.delta_x**2, c], [c, self.delta_y**2]])

    def wavefunction(self, x):
        x = np.asarray(x, dtype=float)
        vx = self.delta_x**2
        quad = complex(1.0 / (4 * vx), -self.xy_correlation / vx)
        dx = x - self.x_mean
        return (2 * math.pi * vx) ** -0.25 * np.exp(2j * self.y_mean * x - quad * dx * dx)

    def moments(self):
        m = np.array([self.x_mean, self.y_mean])
        return m, self.covariance + np.outer(m, m)

    def support(self):
        return (self.x_mean, self.y_mean, 12 * self.delta_x, 12 * self.delta_y)


@dataclass(frozen=True, eq=False)
class ThermalState(State):
    """Thermal state with mean photon number ``n_mean``."""

    n_mean: float

    def __post_init__(self):
        if not (math.isfinite(self.n_mean) and self.n_mean >= 0):
            raise ContractError(f"n_mean must be nonnegative, got {self.n_mean}")

    @property
    def m_matrix(self) -> np.ndarray:
        n = self.n_mean
        g = 1 + 2 * n
        return np.eye(2) / g + 2 * n * (1 + n) / g * np.array([[1.0, -1.0], [-1.0, 1.0]])

    def kernel(self, x, xp):
        x, xp = np.asarray(x, float), np.asarray(xp, float)
        m = self.m_matrix
        form = m[0, 0] * x * x + m[1, 1] * xp * xp + 2 * m[0, 1] * x * xp
        return (math.sqrt(2 / math.pi / (1 + 2 * self.n_mean)) * np.exp(-form)).astype(complex)

    def moments(self):
        return np.zeros(2), np.eye(2) * (1 + 2 * self.n_mean) / 4

    def support(self):
        w = 6 * math.sqrt(1 + 2 * self.n_mean)
        return (0.0, 0.0, w, w)


def _fock_moments(rho):
    n = np.arange(rho.shape[0])
    a1 = np.sum(np.diagonal(rho, -1) * np.sqrt(n[1:])) if len(n) > 1 else 0.0
    a2 = np.sum(np.diagonal(rho, -2) * np.sqrt(n[1:-1] * n[2:])) if len(n) > 2 else 0.0
    nbar = float(np.real(np.sum(n * np.diagonal(rho))))
    xx = (2 * a2.real + 2 * nbar + 1) / 4
    yy = (2 * nbar + 1 - 2 * a2.real) / 4
    xy = a2.imag / 2
    return np.array([a1.real, a1.imag]), np.array([[xx, xy], [xy, yy]])


def _fock_halfwidth(nmax):
    return math.sqrt(nmax + 0.5) + 6.0


@dataclass(frozen=True, eq=False)
class FockVector(PureState):
    """Pure state ``sum_n c_n |n>`` in the number basis."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        if c.ndim != 1 or c.size == 0:
            raise ContractError("coefficients must be a nonempty 1D sequence")
        norm = float(np.sum(np.abs(c) ** 2))
        if abs(norm - 1.0) > 1e-10:
            raise ContractError(f"coefficients have squared norm {norm:.12g}, expected 1")
        object.__setattr__(self, "coefficients", c)

    @classmethod
    def number(cls, n: int) -> "FockVector":
        c = np.zeros(n + 1, complex)
        c[n] = 1.0
        return cls(c)

    @property
    def max_index(self) -> int:
        nz = np.nonzero(np.abs(self.coefficients) > 1e-15)[0]
        return int(nz[-1]) if nz.size else 0

    @property
    def density_matrix(self) -> np.ndarray:
        return np.outer(self.coefficients, self.coefficients.conj())

    def wavefunction(self, x):
        x = np.asarray(x, dtype=float)
        n = self.max_index
        psi = hermite_psi_all(n, x)
        return np.tensordot(self.coefficients[: n + 1], psi, axes=1)

    def moments(self):
        return _fock_moments(self.density_matrix)

    def support(self):
        w = _fock_halfwidth(self.max_index)
        return (0.0, 0.0, w, w)


@dataclass(frozen=True, eq=False)
class FockDensityMatrix(State):
    """Mixed state given by its number-basis matrix ``rho_mn``."""

    entries: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.size == 0:
            raise ContractError(f"density matrix must be square, got shape {rho.shape}")
        asym = np.max(np.abs(rho - rho.conj().T))
        if asym > 1e-10:
            raise ContractError(f"density matrix is not Hermitian (deviation {asym:.3g})")
        tr = float(np.real(np.trace(rho)))
        if abs(tr - 1.0) > 1e-8:
            raise ContractError(f"density matrix has trace {tr:.12g}, expected 1")
        lo = float(np.linalg.eigvalsh(rho).min())
        if lo < -1e-8:
            raise PositivityError(f"density matrix has eigenvalue {lo:.3g}")
        object.__setattr__(self, "entries", rho)

    @classmethod
    def diagonal(cls, probabilities) -> "FockDensityMatrix":
        return cls(np.diag(np.asarray(probabilities, dtype=complex)))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def max_index(self) -> int:
        nz = np.nonzero(np.abs(np.diagonal(self.entries)) > 1e-30)[0]
        return int(nz[-1]) if nz.size else 0

    def kernel(self, x, xp):
        x, xp = np.broadcast_arrays(np.asarray(x, float), np.asarray(xp, float))
        n = self.max_index
        rho = self.entries[: n + 1, : n + 1]
        px = hermite_psi_all(n, x.ravel())
        pxp = hermite_psi_all(n, xp.ravel())
        return np.sum(px * (rho @ pxp), axis=0).reshape(x.shape)

    def kernel_matrix(self, xs, xps):
        n = self.max_index
        rho = self.entries[: n + 1, : n + 1]
        px = hermite_psi_all(n, np.asarray(xs, float))
        pxp = hermite_psi_all(n, np.asarray(xps, float))
        return px.T @ (rho @ pxp)

    def moments(self):
        return _fock_moments(self.entries)

    def support(self):
        w = _fock_halfwidth(self.max_index)
        return (0.0, 0.0, w, w)


@dataclass(frozen=True, eq=False)
class ProductState:
    """Tensor product of single-mode states, one factor per mode."""

    factors: tuple

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise ContractError("a product state needs at least one factor")
        object.__setattr__(self, "factors", factors)

    @property
    def is_pure(self):
        return all(f.is_pure for f in self.factors)

    def kernel(self, x: Sequence, xp: Sequence):
        if len(x) != len(self.factors) or len(xp) != len(self.factors):
            raise ValueError(f"expected {len(self.factors)} coordinates per argument")
        out = 1.0
        for f, a, b in zip(self.factors, x, xp):
            out = out * f.kernel(a, b)
        return out


# ---------------------------------------------------------------------------
# Transform wrappers
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Rescaled(State):
    """Quadrature-squeezed state: ``X -> lam X``, ``Y -> Y / lam``."""

    inner: State
    lam: float

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"squeeze factor must be positive, got {self.lam}")

    @property
    def is_pure(self):
        return self.inner.is_pure

    def wavefunction(self, x):
        return self.lam**-0.5 * self.inner.wavefunction(np.asarray(x, float) / self.lam)

    def kernel(self, x, xp):
        lam = self.lam
        return self.inner.kernel(np.asarray(x, float) / lam, np.asarray(xp, float) / lam) / lam

    def kernel_matrix(self, xs, xps):
        lam = self.lam
        return self.inner.kernel_matrix(np.asarray(xs, float) / lam, np.asarray(xps, float) / lam) / lam

    def moments(self):
        m, s = self.inner.moments()
        d = np.array([self.lam, 1.0 / self.lam])
        return d * m, s * np.outer(d, d)

    def support(self):
        cx, cy, wx, wy = self.inner.support()
        lam = self.lam
        return (lam * cx, cy / lam, lam * wx, wy / lam)


@dataclass(frozen=True, eq=False)
class Displaced(State):
    """Displaced state with ``X -> X + x0``, ``Y -> Y + y0``.

    Wavefunction convention ``e^{2i y0 x} psi(x - x0)`` (global phase dropped).
    """

    inner: State
    x0: float
    y0: float

    @property
    def is_pure(self):
        return self.inner.is_pure

    def wavefunction(self, x):
        x = np.asarray(x, float)
        return np.exp(2j * self.y0 * x) * self.inner.wavefunction(x - self.x0)

    def kernel(self, x, xp):
        x, xp = np.asarray(x, float), np.asarray(xp, float)
        phase = np.exp(2j * self.y0 * (x - xp))
        return phase * self.inner.kernel(x - self.x0, xp - self.x0)

    def kernel_matrix(self, xs, xps):
        xs, xps = np.asarray(xs, float), np.asarray(xps, float)
        phase = np.outer(np.exp(2j * self.y0 * xs), np.exp(-2j * self.y0 * xps))
        return phase * self.inner.kernel_matrix(xs - self.x0, xps - self.x0)

    def moments(self):
        m, s = self.inner.moments()
        d = np.array([self.x0, self.y0])
        return m + d, s + np.outer(m, d) + np.outer(d, m) + np.outer(d, d)

    def support(self):
        cx, cy, wx, wy = self.inner.support()
        return (cx + self.x0, cy + self.y0, wx, wy)


@dataclass(frozen=True, eq=False)
class Rotated(State):
    """Freely evolved state ``exp(-i tau a†a) rho exp(i tau a†a)``.

    Used only for states without a closed-form rotation; the kernel is
    evaluated through a number-basis expansion of ``inner`` of size
    ``fock_dim``.
    """

    inner: State
    tau: float
    fock_dim: int = DEFAULT_FOCK_DIM

    @property
    def is_pure(self):
        return self.inner.is_pure

    @cached_property
    def fock(self):
        rep = fock_representation(self.inner, self.fock_dim)
        return _phase_rotate(rep, self.tau)

    def wavefunction(self, x):
        return self.fock.wavefunction(x)

    def kernel(self, x, xp):
        return self.fock.kernel(x, xp)

    def kernel_matrix(self, xs, xps):
        return self.fock.kernel_matrix(xs, xps)

    def moments(self):
        m, s = self.inner.moments()
        r = _rotation(self.tau)
        return r @ m, r @ s @ r.T

    def support(self):
        cx, cy, wx, wy = self.inner.support()
        c, s = abs(math.cos(self.tau)), abs(math.sin(self.tau))
        center = _rotation(self.tau) @ np.array([cx, cy])
        return (center[0], center[1], c * wx + s * wy, s * wx + c * wy)


def _phase_rotate(state, tau):
    if isinstance(state, FockVector):
        n = np.arange(state.coefficients.size)
        return FockVector(state.coefficients * np.exp(-1j * tau * n))
    n = np.arange(state.dim)
    phase = np.exp(-1j * tau * (n[:, None] - n[None, :]))
    return FockDensityMatrix(state.entries * phase)


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------


def _single_mode(state):
    if isinstance(state, ProductState):
        raise UnsupportedStateError("operation needs a single-mode state, got a product")
    return state


def is_pure(state) -> bool:
    return bool(state.is_pure)


def wavefunction(state, x):
    """Quadrature wavefunction ``<x|psi>`` of a pure state."""
    if not getattr(state, "is_pure", False):
        raise TypeError(f"{type(state).__name__} is mixed and has no wavefunction")
    out = state.wavefunction(x)
    return complex(out) if np.ndim(out) == 0 else out


def kernel(state, x, xp):
    """Position-representation matrix element ``<x|rho|x'>``."""
    out = state.kernel(x, xp)
    return complex(out) if np.ndim(out) == 0 else out


def quadrature_pdf(state, x):
    """Quadrature distribution ``p(x) = <x|rho|x>``."""
    state = _single_mode(state)
    x = np.asarray(x, float)
    if state.is_pure:
        p = np.abs(state.wavefunction(x)) ** 2
    else:
        p = np.real(state.kernel(x, x))
    p = np.where(np.abs(p) < PDF_CLAMP, 0.0, p)
    return float(p) if p.ndim == 0 else p


def mean_photon_number(state) -> float:
    if isinstance(state, ProductState):
        return sum(mean_photon_number(f) for f in state.factors)
    _, s = state.moments()
    return float(max(0.0, s[0, 0] + s[1, 1] - 0.5))


def support_interval(state) -> tuple:
    """``(lo, hi)`` quadrature interval holding all but a negligible tail."""
    cx, _, wx, _ = _single_mode(state).support()
    return (cx - wx, cx + wx)


def fock_truncate(state, dim: int) -> FockDensityMatrix:
    """Number-basis density matrix of a thermal or coherent state, truncated to ``dim``.

    The result is not renormalized; a truncation loss above 1e-8 raises
    :class:`CapacityError`.
    """
    n = np.arange(dim)
    if isinstance(state, ThermalState):
        nb = state.n_mean
        if nb == 0:
            p = (n == 0).astype(float)
        else:
            p = np.exp(n * math.log(nb / (1 + nb)) - math.log1p(nb))
        loss = (nb / (1 + nb)) ** dim
        rho = np.diag(p.astype(complex))
    elif isinstance(state, GaussianPureState):
        if (abs(state.delta_x - 0.5) > 1e-12 or abs(state.delta_y - 0.5) > 1e-12
                or abs(state.xy_correlation) > 1e-12):
            raise ContractError("fock_truncate accepts only coherent Gaussian states (ΔX = ΔY = 1/2)")
        alpha = complex(state.x_mean, state.y_mean)
        c = _coherent_coefficients(alpha, dim)
        loss = max(0.0, 1.0 - float(np.sum(np.abs(c) ** 2)))
        rho = np.outer(c, c.conj())
    else:
        raise ContractError(f"fock_truncate does not accept {type(state).__name__}")
    if loss > TRUNCATION_LOSS_TOL:
        raise CapacityError(f"truncation to dim={dim} loses probability {loss:.3g}")
    return FockDensityMatrix(rho)


def _coherent_coefficients(alpha, dim):
    n = np.arange(dim)
    if alpha == 0:
        return (n == 0).astype(complex)
    logmag = -0.5 * abs(alpha) ** 2 + n * math.log(abs(alpha)) - 0.5 * gammaln(n + 1)
    return np.exp(logmag + 1j * n * np.angle(alpha))


def fock_representation(state, dim: int = DEFAULT_FOCK_DIM):
    """Number-basis representation of any single-mode state, truncated to ``dim``.

    Closed forms are used for number-basis, thermal and coherent states;
    anything else is projected numerically onto the Hermite functions.
    Pure inputs give a renormalized :class:`FockVector`, mixed inputs a
    :class:`FockDensityMatrix`.
    """
    state = _single_mode(state)
    if isinstance(state, FockVector):
        c = np.zeros(dim, complex)
        k = min(dim, state.coefficients.size)
        c[:k] = state.coefficients[:k]
        return _checked_vector(c, dim)
    if isinstance(state, FockDensityMatrix):
        rho = np.zeros((dim, dim), complex)
        k = min(dim, state.dim)
        rho[:k, :k] = state.entries[:k, :k]
        return _checked_matrix(rho, dim)
    if isinstance(state, ThermalState):
        return fock_truncate(state, dim)
    if (isinstance(state, GaussianPureState) and abs(state.delta_x - 0.5) < 1e-12
            and abs(state.xy_correlation) < 1e-12):
        return _checked_vector(_coherent_coefficients(complex(state.x_mean, state.y_mean), dim), dim)
    lo, hi = support_interval(state)
    grid = domain_grid(lo, hi)
    psi_n = hermite_psi_all(dim - 1, grid.nodes) * grid.weights
    if state.is_pure:
        return _checked_vector(psi_n @ state.wavefunction(grid.nodes), dim)
    k = state.kernel_matrix(grid.nodes, grid.nodes)
    return _checked_matrix(psi_n @ k @ psi_n.T, dim)


def _checked_vector(c, dim):
    loss = 1.0 - float(np.sum(np.abs(c) ** 2))
    if loss > TRUNCATION_LOSS_TOL:
        raise CapacityError(f"number-basis truncation to dim={dim} loses probability {loss:.3g}")
    return FockVector(c / math.sqrt(1.0 - loss))


def _checked_matrix(rho, dim):
    rho = 0.5 * (rho + rho.conj().T)
    loss = 1.0 - float(np.real(np.trace(rho)))
    if loss > TRUNCATION_LOSS_TOL:
        raise CapacityError(f"number-basis truncation to dim={dim} loses probability {loss:.3g}")
    return FockDensityMatrix(rho)


def squeezed_vacuum_for_energy(n_mean: float) -> GaussianPureState:
    """X-antisqueezed vacuum whose mean photon number is exactly ``n_mean``."""
    if not n_mean >= 0:
        raise ContractError(f"n_mean must be nonnegative, got {n_mean}")
    e = n_mean + 0.5
    vx = (e + math.sqrt(e * e - 0.25)) / 2
    return GaussianPureState(0.0, 0.0, math.sqrt(vx), math.sqrt(e - vx))


def vacuum() -> GaussianPureState:
    return GaussianPureState()


# ---------------------------------------------------------------------------
# JSON state documents
# ---------------------------------------------------------------------------

_FIELDS = {
    "gaussian": {"x_mean", "y_mean", "delta_x", "delta_y", "xy_correlation"},
    "thermal": {"n_mean"},
    "fock_vector": {"coefficients"},
    "fock_matrix": {"entries"},
    "product": {"factors"},
}


def _complex(v, where):
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return complex(v)
    if (isinstance(v, (list, tuple)) and len(v) == 2
            and all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in v)):
        return complex(v[0], v[1])
    raise ContractError(f"{where}: expected a number or a [re, im] pair, got {v!r}")


_REQUIRED = object()


def _number(d, key, default=_REQUIRED):
    v = d.get(key, default)
    if v is _REQUIRED:
        raise ContractError(f"missing required field {key!r}")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ContractError(f"field {key!r} must be a number, got {v!r}")
    return float(v)


def state_from_dict(doc: dict):
    """Build a state from a JSON-style document (unknown fields are rejected)."""
    if not isinstance(doc, dict):
        raise ContractError(f"state document must be an object, got {type(doc).__name__}")
    kind = doc.get("type")
    if kind not in _FIELDS:
        raise ContractError(f"unknown state type {kind!r}; expected one of {sorted(_FIELDS)}")
    extra = set(doc) - _FIELDS[kind] - {"type"}
    if extra:
        raise ContractError(f"unknown field(s) for {kind!r} state: {sorted(extra)}")
    if kind == "gaussian":
        dy = doc.get("delta_y")
        return GaussianPureState(
            _number(doc, "x_mean", 0.0), _number(doc, "y_mean", 0.0),
            _number(doc, "delta_x", 0.5),
            None if dy is None else _number(doc, "delta_y"),
            _number(doc, "xy_correlation", 0.0),
        )
    if kind == "thermal":
        return ThermalState(_number(doc, "n_mean"))
    if kind == "fock_vector":
        coeffs = doc.get("coefficients")
        if not isinstance(coeffs, list) or not coeffs:
            raise ContractError("'coefficients' must be a nonempty list")
        return FockVector([_complex(v, f"coefficients[{i}]") for i, v in enumerate(coeffs)])
    if kind == "fock_matrix":
        rows = doc.get("entries")
        if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
            raise ContractError("'entries' must be a nonempty list of rows")
        return FockDensityMatrix(
            [[_complex(v, f"entries[{i}][{j}]") for j, v in enumerate(r)] for i, r in enumerate(rows)]
        )
    factors = doc.get("factors")
    if not isinstance(factors, list) or not factors:
        raise ContractError("'factors' must be a nonempty list")
    return ProductState(tuple(state_from_dict(f) for f in factors))


def load_state(path) -> object:
    """Read a state document from a JSON file."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ContractError(f"{path}: malformed JSON ({exc})") from exc
    except OSError as exc:
        raise ContractError(f"cannot read state file {path}: {exc}") from exc
    return state_from_dict(doc)
