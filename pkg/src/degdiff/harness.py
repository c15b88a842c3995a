"""Parameter sweeps that compare measured quantities with explicit bounds.

Every row carries its own bound, computed from that row's ``(gamma, b, t)``
or ``(gamma, b, lambda)``. A row passes when the measured value exceeds
the bound by no more than the combined tolerance ``quad.tol + 1% of the
bound``. Rows with ``bound = None`` are diagnostics and always pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from . import resolvent, semigroup
from .errors import ContractError, DomainError
from .functions import DEFAULT_SWEEP_FUNCTIONS, TestFunction, dilate, get, smoothstep, smoothstep_d1, smoothstep_d2
from .kernel import Params
from .quadrature import QuadratureSpec

SLACK = 0.01

DEFAULT_GAMMAS = (0.5, 1.0, 2.0)
DEFAULT_BS = (0.0, 0.25, 1.0, 2.0)
DEFAULT_TS = (0.01, 0.1, 1.0, 10.0)
DEFAULT_LAMBDAS = (0.1, 1.0, 10.0, 100.0)
DEFAULT_XS = (0.0,) + tuple(float(v) for v in np.geomspace(1e-3, 50.0, 25))
DEFAULT_B_LIST = (1.0, 0.1, 0.01, 0.001)
DEFAULT_TK_TS = (0.01, 0.1, 1.0)
DEFAULT_TK_XS = (0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0)
# the resolvent sweep is two orders of magnitude more expensive per point
DEFAULT_RES_PARAMS = ((1.0, 0.0), (1.0, 1.0), (0.5, 2.0), (2.0, 0.25))
DEFAULT_RES_XS = (0.0, 0.01, 0.1, 1.0, 5.0)
DEFAULT_DILATIONS = (1.0,)


def default_params_grid(gammas=DEFAULT_GAMMAS, bs=DEFAULT_BS) -> list:
    return [Params(g, b) for g in gammas for b in bs]


def default_functions(names: Iterable[str] = DEFAULT_SWEEP_FUNCTIONS) -> list:
    return [get(n) for n in names]


def combined_tolerance(bound: float, quad: QuadratureSpec) -> float:
    return quad.tol + SLACK * abs(bound)


@dataclass
class SweepRow:
    quantity: str
    measured: float
    bound: Optional[float]
    tolerance: float = 0.0
    gamma: Optional[float] = None
    b: Optional[float] = None
    t: Optional[float] = None
    lam: Optional[float] = None
    x: Optional[float] = None
    y: Optional[float] = None
    k: Optional[int] = None

    @property
    def margin(self) -> Optional[float]:
        return None if self.bound is None else self.bound - self.measured

    @property
    def passed(self) -> bool:
        if self.bound is None:
            return math.isfinite(self.measured)
        return self.margin >= -self.tolerance


@dataclass
class SweepReport:
    name: str
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)

    @property
    def failures(self) -> list:
        return [r for r in self.rows if not r.passed]

    def add(self, row: SweepRow) -> SweepRow:
        self.rows.append(row)
        return row

    def worst_margin(self) -> Optional[float]:
        m = [r.margin for r in self.rows if r.margin is not None]
        return min(m) if m else None

    def extend(self, other: "SweepReport") -> None:
        self.rows.extend(other.rows)


@lru_cache(maxsize=65536)
def _jets_cached(params: Params, f: TestFunction, t: float, x: float, quad: QuadratureSpec):
    return semigroup.jets(params, f, t, x, quad)


@lru_cache(maxsize=65536)
def _apply_cached(params: Params, f: TestFunction, t: float, x: float, quad: QuadratureSpec):
    return semigroup.apply(params, f, t, x, quad)


@lru_cache(maxsize=16384)
def _resolvent_jets_cached(params: Params, lam: float, f: TestFunction, x: float, quad: QuadratureSpec):
    q = resolvent.ResolventQuery(params, lam, f, x, quad)
    r0, r1 = resolvent.resolve_jets(q)
    return r0.real, r1.real


def _check_grid(name, grid):
    if len(grid) == 0:
        raise DomainError(f"{name} grid must be nonempty")


# ---------------------------------------------------------------------------
# Analyticity and gradient sweeps
# ---------------------------------------------------------------------------

def analyticity_sweep(
    B: float,
    gamma0: float,
    f_set: Sequence[TestFunction],
    t_grid: Sequence[float],
    x_grid: Sequence[float],
    quad: QuadratureSpec = QuadratureSpec(),
    params_grid: Optional[Sequence[Params]] = None,
) -> SweepReport:
    """``sup_x |t A P_t f|`` against ``2 (1 + sqrt 2 + b) / gamma ||f||`` per ``(gamma, b, t, f)``."""
    for n, g in (("f", f_set), ("t", t_grid), ("x", x_grid)):
        _check_grid(n, g)
    if params_grid is None:
        params_grid = [p for p in default_params_grid() if p.b <= B and p.gamma >= gamma0]
    for p in params_grid:
        if p.b > B or p.gamma < gamma0:
            raise DomainError(f"{p} outside b <= {B}, gamma >= {gamma0}")
    rep = SweepReport("analyticity")
    ratio = 0.0
    for p in params_grid:
        for t in t_grid:
            for f in f_set:
                vals = []
                for x in x_grid:
                    _, d1, xd2 = _jets_cached(p, f, float(t), float(x), quad)
                    vals.append(abs(t * (p.gamma * xd2 + p.b * d1)))
                measured = max(vals)
                bound = semigroup.analyticity_bound(p, f.sup_norm)
                rep.add(SweepRow(f"tAPt_sup[{f.name}]", measured, bound, combined_tolerance(bound, quad),
                                 gamma=p.gamma, b=p.b, t=t))
                ratio = max(ratio, measured / bound)
    rep.summary = {
        "worst_margin": rep.worst_margin(),
        "empirical_constant": ratio,
        "uniform_bound": 2.0 * (1.0 + math.sqrt(2.0) + B) / gamma0,
        "grid_description": f"{len(params_grid)} params x {len(t_grid)} t x {len(f_set)} f x {len(x_grid)} x",
    }
    return rep


def gradient_sweep(
    params_grid: Sequence[Params],
    f_set: Sequence[TestFunction],
    t_grid: Sequence[float],
    x_grid: Sequence[float],
    quad: QuadratureSpec = QuadratureSpec(),
) -> SweepReport:
    """Weighted, unweighted and second-order gradient bounds per ``(gamma, b, t, f)``.

    * ``sqrt(x) |(P_t f)'| <= 2 sqrt(2) ||f|| / sqrt(gamma t)``
    * ``|(P_t f)'| <= 2 ||f|| / (gamma t)``
    * ``|x (P_t f)''| <= 2 (1 + sqrt 2) ||f|| / (gamma t)``, or ``(1 + 2 sqrt 2)`` for ``b = 0``
    """
    for n, g in (("params", params_grid), ("f", f_set), ("t", t_grid), ("x", x_grid)):
        _check_grid(n, g)
    rep = SweepReport("gradient")
    sharp = {"sqrt_x_dPt": 0.0, "dPt": 0.0, "x_d2Pt": 0.0}
    for p in params_grid:
        for t in t_grid:
            gt = p.gamma * t
            for f in f_set:
                w, d, s2 = [], [], []
                for x in x_grid:
                    _, d1, xd2 = _jets_cached(p, f, float(t), float(x), quad)
                    w.append(math.sqrt(x) * abs(d1))
                    d.append(abs(d1))
                    s2.append(abs(xd2))
                c2 = (1.0 + 2.0 * math.sqrt(2.0)) if p.b == 0.0 else 2.0 * (1.0 + math.sqrt(2.0))
                entries = (
                    ("sqrt_x_dPt", max(w), 2.0 * math.sqrt(2.0) * f.sup_norm / math.sqrt(gt), math.sqrt(gt)),
                    ("dPt", max(d), 2.0 * f.sup_norm / gt, gt),
                    ("x_d2Pt", max(s2), c2 * f.sup_norm / gt, gt),
                )
                for q, m, bound, norm in entries:
                    rep.add(SweepRow(f"{q}[{f.name}]", m, bound, combined_tolerance(bound, quad),
                                     gamma=p.gamma, b=p.b, t=t))
                    sharp[q] = max(sharp[q], m * norm / f.sup_norm)
    rep.summary = {
        "worst_margin": rep.worst_margin(),
        "empirical_constant": sharp["sqrt_x_dPt"],
        "empirical_constants": sharp,
        "grid_description": f"{len(params_grid)} params x {len(t_grid)} t x {len(f_set)} f x {len(x_grid)} x",
    }
    return rep


# ---------------------------------------------------------------------------
# Vanishing drift
# ---------------------------------------------------------------------------

def trotter_kato_sweep(
    gamma: float,
    f: TestFunction,
    b_list: Sequence[float] = DEFAULT_B_LIST,
    t_grid: Sequence[float] = DEFAULT_TK_TS,
    x_grid: Sequence[float] = DEFAULT_TK_XS,
    quad: QuadratureSpec = QuadratureSpec(),
    eps: float = 1e-2,
) -> SweepReport:
    """``max_{t, x} |P^{gamma, b}_t f - P^{gamma, 0}_t f|`` along a decreasing drift list.

    Each row's bound is the previous row's measurement (monotonicity); the
    last row is additionally capped by ``eps``.
    """
    for n, g in (("b", b_list), ("t", t_grid), ("x", x_grid)):
        _check_grid(n, g)
    if any(b2 >= b1 for b1, b2 in zip(b_list, b_list[1:])) or min(b_list) <= 0:
        raise DomainError("b_list must be positive and strictly decreasing")
    p0 = Params(gamma, 0.0)
    base = {(t, x): _apply_cached(p0, f, float(t), float(x), quad) for t in t_grid for x in x_grid}
    rep = SweepReport(f"trotter_kato[{f.name}]")
    prev = 2.0 * f.sup_norm
    measured = []
    for i, b in enumerate(b_list):
        pb = Params(gamma, b)
        m = max(abs(_apply_cached(pb, f, float(t), float(x), quad) - base[(t, x)]) for t in t_grid for x in x_grid)
        bound = prev if i < len(b_list) - 1 else min(prev, eps)
        rep.add(SweepRow(f"PbminusP0[{f.name}]", m, bound, 2.0 * quad.tol, gamma=gamma, b=b))
        measured.append(m)
        prev = m
    lb, lm = np.log(np.asarray(b_list)), np.log(np.maximum(np.asarray(measured), 1e-300))
    slope = float(np.polyfit(lb, lm, 1)[0]) if max(measured) > 0 else float("nan")
    rep.summary = {
        "worst_margin": rep.worst_margin(),
        "empirical_constant": slope,
        "log_log_slope": slope,
        "grid_description": f"{len(b_list)} b x {len(t_grid)} t x {len(x_grid)} x",
    }
    return rep


# ---------------------------------------------------------------------------
# Core approximation
# ---------------------------------------------------------------------------

def cutoff(r):
    """C^2 cutoff: 1 on ``[0, 1]``, 0 on ``[2, inf)``, quintic smoothstep in between."""
    return 1.0 - smoothstep(np.asarray(r, dtype=float) - 1.0)


def core_approx_sequence(u: TestFunction, n: int) -> TestFunction:
    """C^2, eventually constant approximant of ``u``.

    Quadratic Taylor polynomial of ``u`` at ``1/n`` on ``[0, 1/n]``; beyond,
    ``(u - l) cutoff(x / n) + l`` with ``l`` the limit of ``u`` at infinity.
    """
    if not u.smooth:
        raise ContractError(f"{u.name} needs two derivatives")
    if not (isinstance(n, (int, np.integer)) and n >= 1):
        raise DomainError("n must be a positive integer")
    a = 1.0 / n
    ell = u.limit_at_infinity
    ua, d1a, d2a = u.value(a), u.d1(a), u.d2(a)

    def split(y):
        y = np.asarray(y, dtype=float)
        return y, y < a

    def ev(y):
        y, near = split(y)
        h = y - a
        taylor = ua + h * d1a + 0.5 * h * h * d2a
        far = (u.eval(y) - ell) * cutoff(y / n) + ell
        return np.where(near, taylor, far)

    def dv(y):
        y, near = split(y)
        taylor = d1a + (y - a) * d2a
        r = y / n
        far = u.deriv1(y) * cutoff(r) - (u.eval(y) - ell) * smoothstep_d1(r - 1.0) / n
        return np.where(near, taylor, far)

    def d2v(y):
        y, near = split(y)
        r = y / n
        far = (
            u.deriv2(y) * cutoff(r)
            - 2.0 * u.deriv1(y) * smoothstep_d1(r - 1.0) / n
            - (u.eval(y) - ell) * smoothstep_d2(r - 1.0) / n**2
        )
        return np.where(near, d2a, far)

    # the quadratic attains its extremes on [0, a] at an endpoint or its vertex
    cand = [0.0, a]
    if d2a != 0.0:
        v = a - d1a / d2a
        if 0.0 < v < a:
            cand.append(v)
    tmax = max(abs(float(ev(np.array([c]))[0])) for c in cand)
    return TestFunction(
        name=f"{u.name}_core{n}",
        eval=ev,
        deriv1=dv,
        deriv2=d2v,
        limit_at_infinity=ell,
        sup_norm=max(u.sup_norm, tmax) * (1.0 + 1e-12),
        support_bound=2.0 * n if ell == 0.0 else None,
        breakpoints=tuple(sorted(set((a, float(n), 1.5 * n, 2.0 * n) + tuple(u.breakpoints)))),
        nonnegative=False,
    )


def core_approx_report(
    u: TestFunction,
    params: Params,
    ns: Sequence[int] = (4, 8, 16, 32),
    y_max: float = 100.0,
    factor: float = 2.0,
) -> SweepReport:
    """``sup |u_n - u|`` and ``sup |A u_n - A u|`` on ``[0, y_max]`` for each ``n``.

    The last row of each quantity must improve on the first by ``factor``.
    """
    y = np.unique(np.concatenate([np.linspace(0.0, y_max, 20001), np.geomspace(1e-6, 1.0, 2001)]))
    Au = params.gamma * y * u.deriv2(y) + params.b * u.deriv1(y)
    rep = SweepReport(f"core[{u.name}]")
    first = {}
    for i, n in enumerate(ns):
        un = core_approx_sequence(u, n)
        err0 = float(np.max(np.abs(un(y) - u(y))))
        Aun = params.gamma * y * un.deriv2(y) + params.b * un.deriv1(y)
        err1 = float(np.max(np.abs(Aun - Au)))
        for q, e in (("sup_un_minus_u", err0), ("sup_Aun_minus_Au", err1)):
            if i == 0:
                first[q] = e
            bound = first[q] / factor if i == len(ns) - 1 else None
            rep.add(SweepRow(f"{q}[{u.name}]", e, bound, 0.0, gamma=params.gamma, b=params.b, k=n))
    rep.summary = {"worst_margin": rep.worst_margin(), "grid_description": f"n in {tuple(ns)}, y in [0, {y_max}]"}
    return rep


# ---------------------------------------------------------------------------
# Resolvent sweep
# ---------------------------------------------------------------------------

def resolvent_sweep(
    params_grid: Sequence[Params],
    f_set: Sequence[TestFunction],
    lambda_grid: Sequence[float] = DEFAULT_LAMBDAS,
    x_grid: Sequence[float] = DEFAULT_RES_XS,
    quad: QuadratureSpec = QuadratureSpec(),
    dilations: Sequence[float] = DEFAULT_DILATIONS,
    stability: float = 10.0,
) -> SweepReport:
    """Contraction, weighted-gradient and global-gradient constants of the resolvent.

    The gradient constants are suprema over the test family
    ``{f(c .) : f in f_set, c in dilations}``. Because the generator
    commutes with dilations up to a factor, a family closed under the
    dilations ``c ~ lambda`` is what makes a lambda-uniform estimate
    observable; with ``dilations = (1,)`` a fixed ``f`` yields constants
    that decay in ``lambda``.
    """
    for n, g in (("params", params_grid), ("f", f_set), ("lambda", lambda_grid), ("x", x_grid)):
        _check_grid(n, g)
    if min(lambda_grid) <= 0:
        raise DomainError("lambda grid must be positive")
    rep = SweepReport("resolvent")
    family = [dilate(f, float(c)) for f in f_set for c in dilations]
    d2_fit, c_fit = {}, {}
    for p in params_grid:
        for lam in lambda_grid:
            d2_best, c_best = 0.0, 0.0
            for f in family:
                r0s = []
                for x in x_grid:
                    r0, r1 = _resolvent_jets_cached(p, float(lam), f, float(x), quad)
                    r0s.append(abs(r0))
                    if x > 0:
                        d2_best = max(d2_best, math.sqrt(lam * x) * abs(r1) / f.sup_norm)
                    if p.b > 0:
                        c_best = max(c_best, p.gamma * abs(r1) / (max(2.0, p.gamma / p.b) * f.sup_norm))
                rep.add(SweepRow(f"lam_Rf_sup[{f.name}]", lam * max(r0s), f.sup_norm, 1e-6,
                                 gamma=p.gamma, b=p.b, lam=lam))
            rep.add(SweepRow("d2_fit", d2_best, None, gamma=p.gamma, b=p.b, lam=lam))
            d2_fit[(p, lam)] = d2_best
            if p.b > 0:
                rep.add(SweepRow("C_fit", c_best, None, gamma=p.gamma, b=p.b, lam=lam))
                c_fit[(p, lam)] = c_best
        # lambda-stability of the fitted constants, per parameter pair
        for label, fit in (("d2_stability", d2_fit), ("C_stability", c_fit)):
            vals = [fit[(p, lam)] for lam in lambda_grid if (p, lam) in fit]
            if not vals:
                continue
            if max(vals) <= 100.0 * quad.tol:
                ratio = 1.0  # identically zero up to quadrature noise
            else:
                ratio = max(vals) / min(vals) if min(vals) > 0 else math.inf
            rep.add(SweepRow(label, ratio, stability, 0.0, gamma=p.gamma, b=p.b))
    rep.summary = {
        "worst_margin": rep.worst_margin(),
        "empirical_constant": max(c_fit.values()) if c_fit else None,
        "d2_max": max(d2_fit.values()),
        "C_max": max(c_fit.values()) if c_fit else None,
        "grid_description": (
            f"{len(params_grid)} params x {len(lambda_grid)} lambda x {len(family)} f x {len(x_grid)} x"
        ),
    }
    return rep
