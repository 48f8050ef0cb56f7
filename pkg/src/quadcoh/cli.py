"""Command-line front end: ``quadcoh <coherence|fig1|sweep|beamsplit|selftest>``.

Every command writes a table (CSV with a header row, or a JSON list of
objects) with reals printed to 9 significant digits.  Exit codes: 0 success,
1 self-test failure, 2 parse or input error, 3 convergence failure,
4 unsupported operation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, fields, replace
from typing import Iterable, Iterator

import numpy as np

from .errors import (
    CapacityError,
    ContractError,
    ConvergenceError,
    NumericError,
    QuadcohError,
    UnsupportedStateError,
)
from .measures import (
    DEFAULT_SIGMA_SWEEP,
    SQRT_2PI,
    chi_entropy_term,
    coherence_l1,
    coherence_l1_numeric,
    relative_entropy_with_method,
    xi_incoherent_state,
)
from .numerics import GAUSS_LEGENDRE, Options, build_grid
from .states import (
    FockVector,
    GaussianPureState,
    ProductState,
    load_state,
    quadrature_pdf,
    squeezed_vacuum_for_energy,
    support_interval,
)
from .transforms import beam_split, coherence_two_mode_pure, displace, rotate, squeeze

EXIT_OK = 0
EXIT_SELFTEST = 1
EXIT_PARSE = 2
EXIT_CONVERGENCE = 3
EXIT_UNSUPPORTED = 4

COMPARATORS = ("squeezed_vacuum", "coherent")
FORMATS = ("csv", "json")
SWEEP_KINDS = ("squeeze", "rotate", "displace", "sigma")


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by all commands; a JSON config file mirrors these fields."""

    tolerance: float = 1e-6
    grid_points: int = 4096
    fock_dim: int = 64
    output_format: str = "csv"
    comparator: str = "squeezed_vacuum"

    def __post_init__(self):
        if not (isinstance(self.tolerance, (int, float)) and self.tolerance > 0):
            raise ContractError(f"tolerance must be positive, got {self.tolerance!r}")
        if not isinstance(self.grid_points, int) or self.grid_points < 128:
            raise ContractError(f"grid_points must be an integer >= 128, got {self.grid_points!r}")
        if not isinstance(self.fock_dim, int) or self.fock_dim < 1:
            raise ContractError(f"fock_dim must be a positive integer, got {self.fock_dim!r}")
        if self.output_format not in FORMATS:
            raise ContractError(f"output_format must be one of {FORMATS}, got {self.output_format!r}")
        if self.comparator not in COMPARATORS:
            raise ContractError(f"comparator must be one of {COMPARATORS}, got {self.comparator!r}")

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ContractError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ContractError("config file must hold a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ContractError(f"unknown config fields: {sorted(unknown)}")
        return cls(**doc)

    def options(self) -> Options:
        return Options(
            tolerance=float(self.tolerance),
            grid_points=self.grid_points,
            max_grid_points=max(2 * self.grid_points, 8192),
            fock_dim=self.fock_dim,
        )


# ---------------------------------------------------------------------------
# Row generators
# ---------------------------------------------------------------------------


def coherence_row(state, opts: Options) -> dict:
    report = coherence_l1(state, opts)
    s_reg, s_method = relative_entropy_with_method(state, opts)
    return {
        "C": report.value,
        "C_err": report.error_estimate,
        "C_method": report.method,
        "S_reg": s_reg,
        "S_method": s_method,
    }


def fig1_rows(n_max: int, comparator: str, opts: Options) -> Iterator[dict]:
    """Number state ``|n>`` against a Gaussian state of equal mean energy."""
    if n_max < 1:
        raise ContractError(f"n_max must be at least 1, got {n_max}")
    if comparator not in COMPARATORS:
        raise ContractError(f"unknown comparator {comparator!r}")
    for n in range(n_max + 1):
        c_fock = coherence_l1(FockVector.number(n), opts).value
        if comparator == "squeezed_vacuum":
            g = squeezed_vacuum_for_energy(n)
        else:
            g = GaussianPureState.coherent(math.sqrt(n))
        c_gauss = coherence_l1(g, opts).value
        yield {"n": n, "C_fock": c_fock, "C_gauss": c_gauss, "ratio": c_fock / c_gauss}


def _default_params(kind: str) -> list:
    if kind == "squeeze":
        return [0.5, 1.0, 2.0]
    if kind == "rotate":
        return list(np.linspace(0, math.pi, 16))
    if kind == "displace":
        return [(2.0, 0.0), (0.0, 2.0), (1.0, -3.0)]
    return list(DEFAULT_SIGMA_SWEEP)


def parse_params(kind: str, text: str | None) -> list:
    """Comma-separated reals; displacement entries are ``x0:y0`` pairs."""
    if kind not in SWEEP_KINDS:
        raise ContractError(f"unknown sweep kind {kind!r}")
    if text is None:
        return _default_params(kind)
    out = []
    for item in filter(None, (t.strip() for t in text.split(","))):
        try:
            if kind == "displace":
                x0, y0 = item.split(":")
                out.append((float(x0), float(y0)))
            else:
                out.append(float(item))
        except ValueError as exc:
            raise ContractError(f"bad {kind} parameter {item!r}") from exc
    if not out:
        raise ContractError("empty parameter list")
    if kind in ("squeeze", "sigma") and any(not (p > 0 and math.isfinite(p)) for p in out):
        raise ContractError(f"{kind} parameters must be positive")
    return out


def _xi_for_state(state, sigma: float, opts: Options):
    lo, hi = support_interval(state)
    grid = build_grid((lo, hi), 32, 8, GAUSS_LEGENDRE)
    return xi_incoherent_state(lambda x: quadrature_pdf(state, x), sigma, grid, tol=1e-5)


def sweep_rows(kind: str, state, params: Iterable, opts: Options) -> Iterator[dict]:
    for p in params:
        if kind == "squeeze":
            s = squeeze(state, p)
            c = coherence_l1(s, opts).value
            s_reg = relative_entropy_with_method(s, opts)[0]
            yield {
                "lambda": p,
                "C": c,
                "S_reg": s_reg,
                "C_over_lambda": c / p,
                "S_minus_ln_lambda": s_reg - math.log(p),
            }
        elif kind == "rotate":
            s = rotate(state, p, opts.fock_dim)
            yield {"tau": p, "C": coherence_l1(s, opts).value, "S_reg": relative_entropy_with_method(s, opts)[0]}
        elif kind == "displace":
            s = displace(state, *p)
            yield {
                "x0": p[0],
                "y0": p[1],
                "C": coherence_l1(s, opts).value,
                "S_reg": relative_entropy_with_method(s, opts)[0],
            }
        elif kind == "sigma":
            if isinstance(state, ProductState):
                raise UnsupportedStateError("sigma sweeps act on a single mode")
            xi = _xi_for_state(state, p, opts)
            yield {
                "sigma": p,
                "C": coherence_l1_numeric(xi, opts=opts).value,
                "C_analytic": 2 * SQRT_2PI * p,
                "chi_limit": chi_entropy_term(state, p) - math.log(p),
            }
        else:
            raise ContractError(f"unknown sweep kind {kind!r}")


def beamsplit_row(s1, s2, theta: float, opts: Options) -> dict:
    after = coherence_two_mode_pure(beam_split(s1, s2, theta), opts=opts).value
    before = coherence_l1(ProductState((s1, s2)), opts).value
    return {"C_before": before, "C_after": after, "abs_diff": abs(after - before)}


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------


def format_value(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    return "%.9g" % float(v)


def _json_value(v):
    if isinstance(v, str) or v is None:
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return int(v)
    x = float("%.9g" % float(v))
    return x if math.isfinite(x) else str(x)


def render(rows: list, fmt: str) -> str:
    """Serialize rows; all rows must share the keys of the first one."""
    keys = list(rows[0]) if rows else []
    for r in rows:
        if list(r) != keys:
            raise ValueError("rows of one table must have identical keys")
    if fmt == "json":
        return json.dumps([{k: _json_value(r[k]) for k in keys} for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if keys:
        w.writerow(keys)
    for r in rows:
        w.writerow([format_value(r[k]) for k in keys])
    return buf.getvalue()


def parse_csv(text: str) -> list:
    """Inverse of :func:`render` for CSV: numeric fields become floats."""
    reader = csv.reader(io.StringIO(text))
    try:
        keys = next(reader)
    except StopIteration:
        return []
    rows = []
    for rec in reader:
        row = {}
        for k, v in zip(keys, rec):
            try:
                row[k] = float(v)
            except ValueError:
                row[k] = v
        rows.append(row)
    return rows


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with RunConfig fields")
    common.add_argument("--format", dest="output_format", choices=FORMATS)
    common.add_argument("--out", help="write the table here instead of stdout")
    common.add_argument("--tolerance", type=float, help="relative integration tolerance")
    common.add_argument("--grid-points", dest="grid_points", type=int, help="uniform intervals per axis")
    common.add_argument("--fock-dim", dest="fock_dim", type=int, help="number-basis truncation")

    parser = argparse.ArgumentParser(prog="quadcoh", description="Coherence in the quadrature basis.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coherence", parents=[common], help="C and S_reg of one state")
    p.add_argument("--state", required=True, help="state JSON file")

    p = sub.add_parser("fig1", parents=[common], help="number state vs Gaussian ratio curve")
    p.add_argument("--nmax", type=int, default=20)
    p.add_argument("--comparator", choices=COMPARATORS)

    p = sub.add_parser("sweep", parents=[common], help="transformation or sigma sweep")
    p.add_argument("kind", choices=SWEEP_KINDS)
    p.add_argument("--state", required=True, help="state JSON file")
    p.add_argument("--param", help="comma-separated values (x0:y0 pairs for displace)")
    p.add_argument("--lambda", dest="lam", type=float, help="single squeeze factor")
    p.add_argument("--sigma", type=float, help="single sigma value")

    p = sub.add_parser("beamsplit", parents=[common], help="two-mode beam splitter invariance")
    p.add_argument("--state", required=True, help="first-mode state JSON file")
    p.add_argument("--state2", required=True, help="second-mode state JSON file")
    p.add_argument("--theta", type=float, default=math.pi / 4)

    p = sub.add_parser("selftest", parents=[common], help="run the acceptance checks")
    p.add_argument("--json", action="store_true", help="machine-readable report")
    return parser


def resolve_config(args) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    cfg = RunConfig.from_file(args.config) if getattr(args, "config", None) else RunConfig()
    overrides = {
        k: getattr(args, k)
        for k in asdict(cfg)
        if getattr(args, k, None) is not None
    }
    return replace(cfg, **overrides)


def _selftest(cfg: RunConfig, as_json: bool, out: str | None) -> int:
    from .acceptance import run_all

    def report(r):
        if not as_json:
            print(r.summary(), flush=True)

    results = run_all(cfg.options(), report)
    failed = [r for r in results if not r.passed]
    if as_json:
        doc = {"passed": not failed, "criteria": [r.as_dict() for r in results]}
        _emit(json.dumps(doc, indent=2) + "\n", out)
    else:
        print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    if failed:
        print("failed criteria: " + ", ".join(str(r.number) for r in failed), file=sys.stderr)
        return EXIT_SELFTEST
    return EXIT_OK


def _table(args, cfg: RunConfig, opts: Options) -> Iterator[dict]:
    if args.command == "coherence":
        yield coherence_row(load_state(args.state), opts)
    elif args.command == "fig1":
        yield from fig1_rows(args.nmax, cfg.comparator, opts)
    elif args.command == "sweep":
        state = load_state(args.state)
        text = args.param
        if text is None and args.kind == "squeeze" and args.lam is not None:
            text = repr(args.lam)
        if text is None and args.kind == "sigma" and args.sigma is not None:
            text = repr(args.sigma)
        yield from sweep_rows(args.kind, state, parse_params(args.kind, text), opts)
    elif args.command == "beamsplit":
        yield beamsplit_row(load_state(args.state), load_state(args.state2), args.theta, opts)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_PARSE if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        opts = cfg.options()
    except (ContractError, ValueError) as exc:
        print(f"quadcoh: {exc}", file=sys.stderr)
        return EXIT_PARSE

    if args.command == "selftest":
        return _selftest(cfg, args.json, args.out)

    rows: list = []
    code = EXIT_OK
    try:
        for row in _table(args, cfg, opts):
            rows.append(row)
    except ConvergenceError as exc:
        print(f"quadcoh: convergence failure: {exc}", file=sys.stderr)
        code = EXIT_CONVERGENCE
    except NumericError as exc:
        print(f"quadcoh: numerical failure: {exc}", file=sys.stderr)
        code = EXIT_CONVERGENCE
    except (UnsupportedStateError, CapacityError) as exc:
        print(f"quadcoh: unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except (ContractError, ValueError) as exc:
        print(f"quadcoh: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except QuadcohError as exc:
        print(f"quadcoh: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    if rows or code == EXIT_OK:
        _emit(render(rows, cfg.output_format), args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
