"""Command-line front end; every subcommand writes CSV rows.

Exit status: 0 when every checked row passes, 1 when some bound is
violated, 2 on usage or domain errors (nothing is written in that case).
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from typing import Iterable

import numpy as np

from . import acceptance, harness, kernel, resolvent, semigroup
from . import functions as F
from .errors import BudgetExceededError, ContractError, DomainError
from .kernel import Params
from .quadrature import QuadratureSpec

COLUMNS = ("gamma", "b", "t", "lambda", "x", "y", "k", "quantity", "measured", "bound", "margin", "pass")
SUBCOMMANDS = (
    "kernel", "apply", "moments", "resolvent",
    "sweep-analyticity", "sweep-gradient", "sweep-trotter", "sweep-resolvent", "verify-all",
)

_Q = QuadratureSpec()
DEFAULTS = {
    "gamma": 1.0,
    "b": 1.0,
    "x": 1.0,
    "t": 1.0,
    "k": 2,
    "lambda": "1",
    "function": "exp",
    "functions": ",".join(F.DEFAULT_SWEEP_FUNCTIONS),
    "y_grid": "0:5:0.5",
    "x_grid": None,
    "t_grid": None,
    "lambda_grid": ",".join(f"{v:g}" for v in harness.DEFAULT_LAMBDAS),
    "gamma_grid": None,
    "b_grid": None,
    "b_list": ",".join(f"{v:g}" for v in harness.DEFAULT_B_LIST),
    "dilations": "1",
    "eps": 1e-2,
    "criteria": "all",
    "tol": _Q.tol,
    "max_nodes": _Q.max_nodes,
    "series_budget": _Q.series_budget,
    "t_floor": _Q.t_floor,
}

# subcommand-specific defaults for grids left unset
_GRID_DEFAULTS = {
    "x_grid": {
        "apply": "0,0.1,1,10",
        "resolvent": "0.5,1,2",
        "sweep-trotter": ",".join(f"{v:g}" for v in harness.DEFAULT_TK_XS),
        "sweep-resolvent": ",".join(f"{v:g}" for v in harness.DEFAULT_RES_XS),
        "*": ",".join(repr(v) for v in harness.DEFAULT_XS),
    },
    "t_grid": {
        "sweep-trotter": ",".join(f"{v:g}" for v in harness.DEFAULT_TK_TS),
        "*": ",".join(f"{v:g}" for v in harness.DEFAULT_TS),
    },
    "gamma_grid": {"*": ",".join(f"{v:g}" for v in harness.DEFAULT_GAMMAS)},
    "b_grid": {"*": ",".join(f"{v:g}" for v in harness.DEFAULT_BS)},
}

_INT_KEYS = {"k", "max_nodes", "series_budget"}
_FLOAT_KEYS = {"gamma", "b", "x", "t", "eps", "tol", "t_floor"}


class UsageError(Exception):
    pass


def parse_grid(text: str) -> list:
    """``a:b:step`` (inclusive) or a comma-separated list."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [float(v) for v in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
                raise UsageError(f"bad range {text!r}; use start:stop:step")
            n = int(math.floor((parts[1] - parts[0]) / parts[2] + 1e-9))
            return [round(parts[0] + i * parts[2], 12) for i in range(n + 1)]
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}") from exc
    if not vals:
        raise UsageError("empty grid")
    return vals


def _coerce(key: str, value):
    if value is None:
        return None
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {value!r}") from exc
    return value


def read_config_file(path: str) -> dict:
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected key=value")
                key, value = (s.strip() for s in line.split("=", 1))
                key = key.replace("-", "_")
                if key not in DEFAULTS:
                    raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
                out[key] = value
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    return out


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        cfg.update(read_config_file(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    for key, table in _GRID_DEFAULTS.items():
        if cfg.get(key) is None:
            cfg[key] = table.get(command, table["*"])
    return {k: _coerce(k, v) for k, v in cfg.items()}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value file; flags override it")
    common.add_argument("--output", "-o", help="CSV path (default: standard output)")
    common.add_argument("--show-config", action="store_true", help="print the resolved configuration and exit")
    for key in DEFAULTS:
        flag = "--" + key.replace("_", "-")
        common.add_argument(flag, dest=key, default=None, help=f"default: {DEFAULTS[key]}")
    parser = argparse.ArgumentParser(prog="degdiff", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def row_record(r: harness.SweepRow) -> dict:
    return {
        "gamma": r.gamma, "b": r.b, "t": r.t, "lambda": r.lam, "x": r.x, "y": r.y, "k": r.k,
        "quantity": r.quantity, "measured": r.measured, "bound": r.bound, "margin": r.margin,
        "pass": None if r.bound is None else r.passed,
    }


def write_csv(rows: Iterable[harness.SweepRow], stream) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in rows:
        rec = row_record(r)
        w.writerow([rec["quantity"] if c == "quantity" else _fmt(rec[c]) for c in COLUMNS])


def _quad(cfg) -> QuadratureSpec:
    return QuadratureSpec(cfg["tol"], cfg["max_nodes"], cfg["series_budget"], cfg["t_floor"])


def _functions(cfg) -> list:
    return [F.get(n.strip()) for n in str(cfg["functions"]).split(",") if n.strip()]


def _params_grid(cfg) -> list:
    return [Params(g, b) for g in sorted(parse_grid(cfg["gamma_grid"])) for b in sorted(parse_grid(cfg["b_grid"]))]


def _lambda(text) -> complex:
    try:
        return complex(str(text).replace(" ", ""))
    except ValueError as exc:
        raise UsageError(f"bad lambda {text!r}") from exc


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_kernel(cfg) -> list:
    p, x, t = Params(cfg["gamma"], cfg["b"]), cfg["x"], cfg["t"]
    rows = [harness.SweepRow("atom", kernel.atom_mass(p, x, t), None, gamma=p.gamma, b=p.b, t=t, x=x, y=0.0)]
    for y in sorted(parse_grid(cfg["y_grid"])):
        if y < 0:
            raise DomainError("y must be nonnegative")
        if y == 0.0:
            # limit of the absolutely continuous density at the origin
            val = math.inf if 0.0 < p.beta < 1.0 else kernel.density(p, x, 1e-300, t).density
        else:
            val = kernel.density(p, x, y, t).density
        rows.append(harness.SweepRow("density", val, None, gamma=p.gamma, b=p.b, t=t, x=x, y=y))
    return rows


def cmd_apply(cfg) -> list:
    p, t, f, q = Params(cfg["gamma"], cfg["b"]), cfg["t"], F.get(cfg["function"]), _quad(cfg)
    rows = []
    for x in sorted(parse_grid(cfg["x_grid"])):
        v = semigroup.apply(p, f, t, x, q)
        rows.append(harness.SweepRow(f"Ptf[{f.name}]", abs(v), f.sup_norm, q.tol, gamma=p.gamma, b=p.b, t=t, x=x))
        rows.append(harness.SweepRow(f"Ptf_value[{f.name}]", v, None, gamma=p.gamma, b=p.b, t=t, x=x))
    return rows


def cmd_moments(cfg) -> list:
    p, x, t, k = Params(cfg["gamma"], cfg["b"]), cfg["x"], cfg["t"], cfg["k"]
    rows = [harness.SweepRow("translated_moment", semigroup.translated_moment(p, x, t, k), None,
                             gamma=p.gamma, b=p.b, t=t, x=x, k=k)]
    lhs, rhs = semigroup.abs_moment_bound_check(p, x, t, _quad(cfg))
    rows.append(harness.SweepRow("abs_moment", lhs, rhs, 1e-7, gamma=p.gamma, b=p.b, t=t, x=x, k=1))
    return rows


def cmd_resolvent(cfg) -> list:
    p, f, q = Params(cfg["gamma"], cfg["b"]), F.get(cfg["function"]), _quad(cfg)
    lam = _lambda(cfg["lambda"])
    real = lam.imag == 0
    # a complex lambda does not fit the numeric column; it goes into the label
    lam_col = lam.real if real else None
    tag = f.name if real else f"{f.name};lambda={lam.real:g}{lam.imag:+g}j"
    rows = []

    def add(name, value, bound=None, tol=0.0, x=None):
        rows.append(harness.SweepRow(f"{name}[{tag}]", value, bound, tol, gamma=p.gamma, b=p.b, lam=lam_col, x=x))

    for x in sorted(parse_grid(cfg["x_grid"])):
        rq = resolvent.ResolventQuery(p, lam, f, x, q)
        r = resolvent.resolve(rq)
        add("Rf_re", r.real, x=x)
        if real:
            add("lam_Rf", abs(lam.real * r.real), f.sup_norm, 1e-6, x=x)
        else:
            add("Rf_im", r.imag, x=x)
        if x > 0 or f.deriv1 is not None:
            d = resolvent.resolve_derivative(rq)
            add("dRf_re", d.real, x=x)
            if not real:
                add("dRf_im", d.imag, x=x)
    return rows


def cmd_sweep_analyticity(cfg) -> list:
    grid = _params_grid(cfg)
    rep = harness.analyticity_sweep(
        max(p.b for p in grid), min(p.gamma for p in grid), _functions(cfg),
        sorted(parse_grid(cfg["t_grid"])), sorted(parse_grid(cfg["x_grid"])), _quad(cfg), params_grid=grid,
    )
    return rep.rows


def cmd_sweep_gradient(cfg) -> list:
    rep = harness.gradient_sweep(
        _params_grid(cfg), _functions(cfg), sorted(parse_grid(cfg["t_grid"])), sorted(parse_grid(cfg["x_grid"])), _quad(cfg)
    )
    return rep.rows


def cmd_sweep_trotter(cfg) -> list:
    rows = []
    for f in _functions(cfg):
        rep = harness.trotter_kato_sweep(
            cfg["gamma"], f, parse_grid(cfg["b_list"]), sorted(parse_grid(cfg["t_grid"])),
            sorted(parse_grid(cfg["x_grid"])), _quad(cfg), eps=cfg["eps"],
        )
        rows.extend(rep.rows)
    return rows


def cmd_sweep_resolvent(cfg) -> list:
    grid = _params_grid(cfg) if cfg.get("_explicit_params") else [Params(g, b) for g, b in harness.DEFAULT_RES_PARAMS]
    rep = harness.resolvent_sweep(
        grid, _functions(cfg), sorted(parse_grid(cfg["lambda_grid"])), sorted(parse_grid(cfg["x_grid"])),
        _quad(cfg), dilations=parse_grid(cfg["dilations"]),
    )
    return rep.rows


def cmd_verify_all(cfg) -> list:
    sel = cfg["criteria"]
    if str(sel) == "all":
        chosen = None
    else:
        try:
            chosen = sorted({int(v) for v in str(sel).split(",")})
        except ValueError as exc:
            raise UsageError(f"bad criteria list {sel!r}") from exc
        bad = [n for n in chosen if n not in acceptance.CRITERIA]
        if bad:
            raise UsageError(f"unknown criteria {bad}")
    rows = []

    def report(res):
        print(res.line(), file=sys.stderr, flush=True)
        rows.extend(res.report.rows)
        rows.append(harness.SweepRow(f"criterion_{res.number}", 0.0 if res.passed else 1.0, 0.0, 0.0, k=res.number))

    acceptance.run_all(chosen, on_result=report)
    return rows


HANDLERS = {
    "kernel": cmd_kernel,
    "apply": cmd_apply,
    "moments": cmd_moments,
    "resolvent": cmd_resolvent,
    "sweep-analyticity": cmd_sweep_analyticity,
    "sweep-gradient": cmd_sweep_gradient,
    "sweep-trotter": cmd_sweep_trotter,
    "sweep-resolvent": cmd_sweep_resolvent,
    "verify-all": cmd_verify_all,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        cfg = resolve_config(args.command, args)
        cfg["_explicit_params"] = args.gamma_grid is not None or args.b_grid is not None or (
            args.config is not None and any(k in read_config_file(args.config) for k in ("gamma_grid", "b_grid"))
        )
        if args.show_config:
            for key in sorted(DEFAULTS):
                print(f"{key}={cfg[key]}")
            return 0
        rows = HANDLERS[args.command](cfg)
    except (UsageError, DomainError, ContractError, BudgetExceededError) as exc:
        print(f"degdiff: error: {exc}", file=sys.stderr)
        return 2
    buf = io.StringIO()
    write_csv(rows, buf)
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0 if all(r.passed for r in rows) else 1


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
