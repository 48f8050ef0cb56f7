"""Acceptance checks: analytic results against independent numerics.

Each criterion returns a :class:`CriterionResult` made of individual
:class:`Check` objects.  A criterion passes when every check passes and no
library error was raised while computing it.  Oracles are written out here
from the closed forms rather than taken from the analytic code paths
whenever a numeric path is being validated.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import QuadcohError
from .measures import (
    SQRT_2PI,
    chi_diagonal,
    chi_entropy_term,
    chi_fock_matrix,
    coherence_l1,
    coherence_l1_numeric,
    hilbert_schmidt_distance,
    relative_entropy_coherence,
    xi_gaussian_incoherent_state,
    xi_incoherent_state,
)
from .numerics import DEFAULT_OPTIONS, GAUSS_LEGENDRE, Options, build_grid
from .states import (
    FockDensityMatrix,
    FockVector,
    GaussianPureState,
    ProductState,
    ThermalState,
    fock_truncate,
    vacuum,
)
from .transforms import (
    TwoModePure,
    beam_split,
    coherence_two_mode_pure,
    displace,
    rotate,
    rotation_coherence_curve,
    squeeze,
    squeeze_entropy_shift,
    two_mode_squeeze,
)


@dataclass(frozen=True)
class Check:
    """One comparison.

    ``mode`` is ``"rel"`` (``|got - expected| <= tol |expected|``),
    ``"abs"`` (``|got - expected| <= tol``), ``"below"`` (``got < tol``)
    or ``"exact"`` (``got == expected``).
    """

    label: str
    got: float
    expected: float | None
    tol: float
    mode: str = "rel"

    @property
    def deviation(self) -> float:
        if self.mode == "rel":
            return abs(self.got - self.expected) / abs(self.expected)
        if self.mode in ("abs", "exact"):
            return abs(self.got - self.expected)
        return self.got

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.got):
            return False
        if self.mode == "exact":
            return self.got == self.expected
        if self.mode == "below":
            return self.got < self.tol
        return self.deviation <= self.tol

    def as_dict(self) -> dict:
        return {
            "label": self.label,
            "expected": self.expected,
            "got": self.got,
            "tol": self.tol,
            "mode": self.mode,
            "pass": self.passed,
        }


@dataclass
class CriterionResult:
    number: int
    name: str
    checks: list = field(default_factory=list)
    error: str | None = None
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return self.error is None and bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def worst(self) -> Check | None:
        failing = [c for c in self.checks if not c.passed]
        if failing:
            return failing[0]
        scored = [c for c in self.checks if c.mode in ("rel", "abs") and c.tol > 0]
        if scored:
            return max(scored, key=lambda c: c.deviation / c.tol)
        return self.checks[0] if self.checks else None

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        head = f"[{status}] {self.number:2d} {self.name}"
        if self.error is not None:
            return f"{head}: error: {self.error}"
        w = self.worst
        return (
            f"{head}: {w.label}: got {w.got:.10g}, expected {w.expected}, tol {w.tol:g} ({w.mode})"
            f" [{self.elapsed:.2f}s]"
        )

    def as_dict(self) -> dict:
        w = self.worst
        return {
            "number": self.number,
            "name": self.name,
            "pass": self.passed,
            "expected": None if w is None else w.expected,
            "got": None if w is None else w.got,
            "tol": None if w is None else w.tol,
            "error": self.error,
            "elapsed_s": self.elapsed,
            "checks": [c.as_dict() for c in self.checks],
        }


# ---------------------------------------------------------------------------
# Shared fixtures
# ---------------------------------------------------------------------------


def _superposition01():
    return FockVector(np.array([1.0, 1.0]) / math.sqrt(2))


def _scaling_states():
    return {
        "fock1": FockVector.number(1),
        "fock2": FockVector.number(2),
        "thermal1": ThermalState(1.0),
        "(|0>+|1>)/sqrt2": _superposition01(),
    }


def _gaussian_entropy(delta_x):
    return 0.5 * (1 + math.log(2 * math.pi * delta_x**2))


def _thermal_entropy(n):
    return math.log(1 / (1 + n) * (n / (1 + n)) ** n) + 0.5 * (1 + math.log(math.pi / 2 * (1 + 2 * n)))


# ---------------------------------------------------------------------------
# Criteria
# ---------------------------------------------------------------------------


def crit_vacuum(opts):
    t0 = time.perf_counter()
    r = coherence_l1_numeric(vacuum(), opts=opts, path="kernel")
    elapsed = time.perf_counter() - t0
    return [
        Check("C(vacuum) by 2D kernel quadrature", r.value, SQRT_2PI, 1e-6),
        Check("runtime [s]", elapsed, None, 1.0, "below"),
    ]


def crit_thermal(opts):
    checks = []
    for n in (0.5, 1.0, 2.0):
        closed = math.sqrt(2 * math.pi / (1 + 2 * n))
        via_fock = coherence_l1_numeric(fock_truncate(ThermalState(n), 60), opts=opts).value
        via_m = coherence_l1_numeric(ThermalState(n), opts=opts).value
        checks.append(Check(f"n={n}: Fock(60) vs closed form", via_fock, closed, 1e-4))
        checks.append(Check(f"n={n}: Fock(60) vs M-matrix kernel", via_fock, via_m, 1e-6))
    return checks


def crit_fock1(opts):
    r = coherence_l1_numeric(FockVector.number(1), opts=opts)
    return [Check("C(Fock 1)", r.value, 8 / SQRT_2PI, 1e-6)]


def crit_squeeze(opts):
    checks = []
    for name, s in _scaling_states().items():
        base = coherence_l1_numeric(s, opts=opts).value
        for lam in (0.5, 2.0, 3.0):
            got = coherence_l1_numeric(squeeze(s, lam), opts=opts).value
            checks.append(Check(f"{name}, lambda={lam}", got, lam * base, 1e-4))
    return checks


def crit_displace(opts):
    checks = []
    for name, s in _scaling_states().items():
        base = coherence_l1_numeric(s, opts=opts).value
        got = coherence_l1_numeric(displace(s, 2.0, 1.0), opts=opts).value
        checks.append(Check(f"{name}, (x0, y0)=(2, 1)", got, base, 1e-4))
    return checks


def crit_rotation(opts):
    g = GaussianPureState(0.0, 0.0, delta_x=1.0)
    taus = np.linspace(0, math.pi, 16)
    curve = dict(rotation_coherence_curve(g, taus))
    analytic, numeric = [], []
    for tau in taus:
        expected = curve[float(tau)]
        rotated = rotate(g, float(tau))
        analytic.append((float(tau), coherence_l1(rotated, opts).value, expected))
        numeric.append((float(tau), coherence_l1_numeric(rotated, opts=opts).value, expected))
    checks = []
    for label, rows, tol in (("analytic", analytic, 1e-8), ("numeric", numeric, 1e-4)):
        tau, got, expected = max(rows, key=lambda r: abs(r[1] / r[2] - 1))
        checks.append(Check(f"{label} path, worst of 16 (tau={tau:.4f})", got, expected, tol))
    mix = FockDensityMatrix(np.diag([0.5, 0.3, 0.2]).astype(complex))
    base = coherence_l1_numeric(mix, opts=opts).value
    for tau in (0.4, 1.3):
        got = coherence_l1_numeric(rotate(mix, tau), opts=opts).value
        checks.append(Check(f"Fock diagonal mixture, tau={tau}", got, base, 1e-6))
    return checks


def crit_entropy(opts):
    checks = []
    for dx in (0.5, 1.0):
        g = GaussianPureState(0.0, 0.0, delta_x=dx)
        exact = _gaussian_entropy(dx)
        checks.append(Check(f"Gaussian dX={dx}, analytic", relative_entropy_coherence(g, opts), exact, 1e-12, "abs"))
        checks.append(
            Check(f"Gaussian dX={dx}, numeric", relative_entropy_coherence(g, opts, "numeric"), exact, 1e-3, "abs")
        )
    for n in (0.5, 1.0):
        th = ThermalState(n)
        exact = _thermal_entropy(n)
        checks.append(Check(f"thermal n={n}, analytic", relative_entropy_coherence(th, opts), exact, 1e-12, "abs"))
        checks.append(
            Check(f"thermal n={n}, numeric", relative_entropy_coherence(th, opts, "numeric"), exact, 1e-3, "abs")
        )
    checks.append(Check("vacuum value", relative_entropy_coherence(vacuum(), opts), 0.7257914, 5e-8, "abs"))
    return checks


def crit_entropy_shift(opts):
    checks = []
    for name, s in (("vacuum", vacuum()), ("thermal1", ThermalState(1.0))):
        for lam in (2.0, math.e):
            got = squeeze_entropy_shift(s, lam, opts, method="numeric")
            checks.append(Check(f"{name}, lambda={lam:.6g}", got, math.log(lam), 2e-3, "abs"))
    return checks


def crit_product(opts):
    v = vacuum()
    vv = coherence_two_mode_pure(TwoModePure.product(v, v), opts=opts).value
    f1 = FockVector.number(1)
    g = GaussianPureState(0.3, -0.2, delta_x=0.8)
    th = ThermalState(1.0)
    # two factors in one 2D integral, the third by a 1D kernel integral
    numeric = (
        coherence_two_mode_pure(TwoModePure.product(f1, g), opts=opts).value
        * coherence_l1_numeric(th, opts=opts).value
    )
    factors = (8 / SQRT_2PI) * (2 * SQRT_2PI * 0.8) * math.sqrt(2 * math.pi / 3)
    library = coherence_l1(ProductState((th, f1, g)), opts).value
    return [
        Check("C(vacuum x vacuum)", vv, 2 * math.pi, 1e-6),
        Check("thermal1 x Fock1 x Gaussian(dX=0.8), numeric", numeric, factors, 1e-5),
        Check("thermal1 x Fock1 x Gaussian(dX=0.8), coherence_l1", library, factors, 1e-5),
    ]


def crit_two_mode(opts):
    f1, v = FockVector.number(1), vacuum()
    before = coherence_l1(ProductState((f1, v)), opts).value
    after = coherence_two_mode_pure(beam_split(f1, v, math.pi / 4), opts=opts).value
    tms = coherence_two_mode_pure(two_mode_squeeze((v, v), 0.5), opts=opts).value
    return [
        Check("beam splitter pi/4 on Fock1 x vacuum", after, 8.0, 1e-4, "abs"),
        Check("beam splitter: C_after vs product law C_before", after, before, 1e-4, "abs"),
        Check("two-mode squeeze 0.5 on vacuum x vacuum", tms, 2 * math.pi, 1e-4, "abs"),
    ]


def crit_fig1(opts):
    from .cli import fig1_rows

    t0 = time.perf_counter()
    rows = list(fig1_rows(20, "squeezed_vacuum", opts))
    elapsed = time.perf_counter() - t0
    ratios = [r["ratio"] for r in rows]
    steps = np.diff(ratios)
    return [
        Check("ratio(0)", ratios[0], 1.0, 0.0, "exact"),
        Check("largest step ratio(n+1) - ratio(n), n=0..19", float(steps.max()), None, 0.0, "below"),
        Check("ratio(1)", ratios[1], 0.5273, 1e-3, "abs"),
        Check("runtime [s]", elapsed, None, 60.0, "below"),
    ]


def crit_chi_limit(opts):
    sigma = 0.01
    target = -_gaussian_entropy(0.5)
    term = chi_entropy_term(vacuum(), sigma) - math.log(sigma)
    total = float(np.sum(chi_diagonal(vacuum(), sigma).chi_values))
    return [
        Check("chi term - ln sigma at sigma=0.01", term, target, 2e-4, "abs"),
        Check("sum of chi weights", total, 1.0, 1e-8, "abs"),
    ]


def _bimodal(x):
    return 0.5 * (np.exp(-((x - 1.5) ** 2) / 0.5) + np.exp(-((x + 1.5) ** 2) / 0.5)) / math.sqrt(0.5 * math.pi)


def crit_xi(opts):
    grid = build_grid((-5.0, 5.0), 32, 8, GAUSS_LEGENDRE)
    checks = []
    for sigma in (0.1, 0.01):
        expected = 2 * SQRT_2PI * sigma
        states = {
            "Gaussian P": xi_gaussian_incoherent_state(0.3, 0.8, sigma),
            "bimodal P": xi_incoherent_state(_bimodal, sigma, grid),
        }
        for name, st in states.items():
            got = coherence_l1_numeric(st, opts=opts).value
            checks.append(Check(f"{name}, sigma={sigma}", got, expected, 1e-6))
    return checks


def crit_hs_monotone(opts, dim=60):
    th = ThermalState(1.0)
    rho = fock_truncate(th, dim)
    sigmas = (0.5, 0.25, 0.125)
    d = [hilbert_schmidt_distance(rho, chi_fock_matrix(chi_diagonal(th, s), dim)) for s in sigmas]
    return [
        Check(f"d(sigma={b}) - d(sigma={a}) [d: {da:.6g} -> {db:.6g}]", db - da, None, 0.0, "below")
        for (a, da), (b, db) in zip(zip(sigmas, d), zip(sigmas[1:], d[1:]))
    ]


CRITERIA: list[tuple[str, Callable]] = [
    ("vacuum coherence by 2D quadrature", crit_vacuum),
    ("thermal coherence: Fock truncation vs closed form and M-matrix kernel", crit_thermal),
    ("Fock 1 coherence", crit_fock1),
    ("squeeze scaling C -> lambda C", crit_squeeze),
    ("displacement invariance", crit_displace),
    ("free-evolution curve and Fock-mixture invariance", crit_rotation),
    ("relative entropy closed forms", crit_entropy),
    ("relative entropy shift ln lambda under squeezing", crit_entropy_shift),
    ("product law and vacuum background", crit_product),
    ("beam-splitter and two-mode-squeezer invariance", crit_two_mode),
    ("number-state vs Gaussian ratio curve", crit_fig1),
    ("chi-limit convergence to the differential entropy", crit_chi_limit),
    ("xi-state coherence independent of P", crit_xi),
    ("Hilbert-Schmidt distance decreasing in sigma", crit_hs_monotone),
]


def run_criterion(number: int, opts: Options | None = None) -> CriterionResult:
    """Run criterion ``number`` (1-based)."""
    opts = opts or DEFAULT_OPTIONS
    name, func = CRITERIA[number - 1]
    result = CriterionResult(number, name)
    t0 = time.perf_counter()
    try:
        result.checks = func(opts)
    except QuadcohError as exc:
        result.error = f"{type(exc).__name__}: {exc}"
    result.elapsed = time.perf_counter() - t0
    return result


def run_all(opts: Options | None = None, report: Callable | None = None) -> list:
    """Run every criterion; ``report`` is called with each result as it completes."""
    results = []
    for number in range(1, len(CRITERIA) + 1):
        r = run_criterion(number, opts)
        if report is not None:
            report(r)
        results.append(r)
    return results
