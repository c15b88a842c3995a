"""The acceptance suite: thirteen numbered checks shared by pytest and ``verify-all``.

Each check returns a :class:`CriterionResult` whose ``report`` holds the
rows that were measured, so the CLI can write them as CSV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath as mp
import numpy as np

from . import functions as F
from . import harness as H
from . import kernel, resolvent, semigroup, specialfn
from .kernel import Params
from .quadrature import QuadratureSpec

DEFAULT_QUAD = QuadratureSpec()
# sweeps over resolvent values are run at a looser inner tolerance
RESOLVENT_SWEEP_QUAD = QuadratureSpec(tol=1e-9)
EPS = np.finfo(float).eps


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    report: H.SweepReport = field(default_factory=lambda: H.SweepReport("empty"))

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d}. {self.title}: {self.detail}"


def _grid_points():
    return H.default_params_grid(), H.DEFAULT_TS, H.DEFAULT_XS


# ---------------------------------------------------------------------------
# 1-4: kernel and moments
# ---------------------------------------------------------------------------

def normalization(quad: QuadratureSpec = DEFAULT_QUAD, limit: float = 1e-8) -> CriterionResult:
    params, ts, xs = _grid_points()
    rep = H.SweepReport("normalization")
    for p in params:
        for t in ts:
            for x in xs:
                d = kernel.normalization_defect(p, x, t, quad)
                rep.add(H.SweepRow("normalization_defect", d, limit, 0.0, gamma=p.gamma, b=p.b, t=t, x=x))
    worst = max(r.measured for r in rep.rows)
    return CriterionResult(1, "normalization", rep.passed, f"max defect {worst:.2e} <= {limit:g} over {len(rep.rows)} points", rep)


def chapman_kolmogorov(quad: QuadratureSpec = DEFAULT_QUAD, limit: float = 1e-6, per_combo: int = 20, seed: int = 7) -> CriterionResult:
    rng = np.random.default_rng(seed)
    rep = H.SweepReport("chapman_kolmogorov")
    for p in H.default_params_grid():
        for _ in range(per_combo):
            x, y = rng.uniform(0.0, 5.0), rng.uniform(0.05, 5.0)
            s, t = rng.uniform(0.05, 2.0), rng.uniform(0.05, 2.0)
            d = kernel.chapman_kolmogorov_defect(p, x, y, s, t, quad)
            rep.add(H.SweepRow("ck_defect", d, limit, 0.0, gamma=p.gamma, b=p.b, t=t, x=x, y=y))
    worst = max(r.measured for r in rep.rows)
    return CriterionResult(2, "Chapman-Kolmogorov", rep.passed, f"max defect {worst:.2e} <= {limit:g} over {len(rep.rows)} tuples", rep)


def exact_moments(quad: QuadratureSpec = DEFAULT_QUAD, rel: float = 1e-7, kmax: int = 6) -> CriterionResult:
    rep = H.SweepReport("moments")
    params, ts, _ = _grid_points()
    xs = (0.0, 0.3, 1.0, 4.0)
    for p in params:
        for t in ts:
            for x in xs:
                m1 = semigroup.translated_moment(p, x, t, 1)
                m2 = semigroup.translated_moment(p, x, t, 2)
                e1, e2 = p.b * t, 2.0 * p.gamma * t * x + t * t * p.b * (p.b + p.gamma)
                for k, m, e in ((1, m1, e1), (2, m2, e2)):
                    rep.add(H.SweepRow("moment_exact_error", abs(m - e), 4.0 * EPS * abs(e), 0.0,
                                       gamma=p.gamma, b=p.b, t=t, x=x, k=k))
    # quadrature cross-check on a smaller grid (higher moments are scale sensitive)
    for p in params:
        for t in (0.1, 1.0):
            for x in (0.3, 1.0, 4.0):
                for k in range(1, kmax + 1):
                    m = semigroup.translated_moment(p, x, t, k)
                    qv = float(kernel.expect(p, x, t, lambda y, x=x, k=k: (y - x) ** k, quad, y_breaks=[x], rel_tol=1e-12)[0])
                    scale = semigroup.translated_moment(p, x, t, 2 * (k // 2 + 1)) ** (k / (2 * (k // 2 + 1)))
                    err = abs(m - qv) / max(abs(m), scale, 1e-300)
                    rep.add(H.SweepRow("moment_quadrature_rel", err, rel, 0.0, gamma=p.gamma, b=p.b, t=t, x=x, k=k))
    worst = max(r.measured for r in rep.rows if r.quantity == "moment_quadrature_rel")
    return CriterionResult(3, "exact moments", rep.passed, f"k=1,2 exact to 4 ulp; quadrature cross-check worst rel {worst:.1e}", rep)


def absolute_moment(quad: QuadratureSpec = DEFAULT_QUAD, slack: float = 1e-7) -> CriterionResult:
    params, ts, xs = _grid_points()
    rep = H.SweepReport("abs_moment")
    for p in params:
        for t in ts:
            for x in xs:
                lhs, rhs = semigroup.abs_moment_bound_check(p, x, t, quad)
                rep.add(H.SweepRow("abs_moment", lhs, rhs, slack, gamma=p.gamma, b=p.b, t=t, x=x))
    ratio = max(r.measured / r.bound for r in rep.rows if r.bound > 0)
    return CriterionResult(4, "absolute-moment bounds", rep.passed, f"max lhs/rhs {ratio:.4f} over {len(rep.rows)} points", rep)


# ---------------------------------------------------------------------------
# 5-7: analyticity and gradients
# ---------------------------------------------------------------------------

def analyticity(quad: QuadratureSpec = DEFAULT_QUAD) -> CriterionResult:
    f_set = H.default_functions()
    rep = H.analyticity_sweep(max(H.DEFAULT_BS), min(H.DEFAULT_GAMMAS), f_set, H.DEFAULT_TS, H.DEFAULT_XS, quad)
    b0 = semigroup.analyticity_bound(Params(1.0, 0.0))
    ok = rep.passed and len(f_set) >= 5 and abs(b0 - 2.0 * (1.0 + math.sqrt(2.0))) < 1e-12
    detail = (
        f"{len(rep.rows)} rows, worst measured/bound {rep.summary['empirical_constant']:.3f}, "
        f"bound at b=0,gamma=1 is {b0:.4f}, uniform {rep.summary['uniform_bound']:.3f}"
    )
    return CriterionResult(5, "analyticity constant", ok, detail, rep)


def gradient_bounds(quad: QuadratureSpec = DEFAULT_QUAD) -> CriterionResult:
    rep = H.gradient_sweep(H.default_params_grid(), H.default_functions(), H.DEFAULT_TS, H.DEFAULT_XS, quad)
    c = rep.summary["empirical_constants"]
    detail = (
        f"{len(rep.rows)} rows; sharp constants sqrt(x)|P'|*sqrt(gt) {c['sqrt_x_dPt']:.3f} (<= 2.828), "
        f"|P'|*gt {c['dPt']:.3f} (<= 2), |xP''|*gt {c['x_d2Pt']:.3f}"
    )
    return CriterionResult(6, "gradient bounds", rep.passed, detail, rep)


def derivative_vs_differences(quad: QuadratureSpec = DEFAULT_QUAD, floor: float = 1e-6, c_fd: float = 1.0) -> CriterionResult:
    """Five-point differences of ``apply`` against the kernel-difference derivatives."""
    rep = H.SweepReport("derivative_fd")
    w1 = resolvent.central_weights(2, 1)
    w2 = resolvent.central_weights(2, 2)
    for p in (Params(1.0, 1.0), Params(1.0, 0.0), Params(0.5, 2.0), Params(2.0, 0.25)):
        for name in ("exp", "dsine", "bump", "corestep"):
            f = F.get(name)
            for t in (0.1, 1.0):
                for x in (0.5, 1.0, 5.0):
                    h = 1e-2 * max(1.0, x) * min(1.0, math.sqrt(p.gamma * t))
                    u = np.array([semigroup.apply(p, f, t, x + j * h, quad) for j in range(-2, 3)])
                    _, d1, xd2 = semigroup.jets(p, f, t, x, quad)
                    fd1 = w1 @ u / h
                    fd2 = x * (w2 @ u) / (h * h)
                    tol = max(floor, 2.0 * quad.tol + c_fd * h**4)
                    rep.add(H.SweepRow(f"d1_fd[{name}]", abs(fd1 - d1), tol, 0.0, gamma=p.gamma, b=p.b, t=t, x=x))
                    rep.add(H.SweepRow(f"xd2_fd[{name}]", abs(fd2 - xd2), tol, 0.0, gamma=p.gamma, b=p.b, t=t, x=x))
    worst = max(r.measured for r in rep.rows)
    return CriterionResult(7, "derivatives vs central differences", rep.passed, f"worst |diff| {worst:.1e} over {len(rep.rows)} checks", rep)


# ---------------------------------------------------------------------------
# 8-9: resolvent
# ---------------------------------------------------------------------------

def resolvent_checks(quad: QuadratureSpec = DEFAULT_QUAD) -> CriterionResult:
    rep = H.SweepReport("resolvent")
    sweep_quad = RESOLVENT_SWEEP_QUAD
    # contraction for real lambda
    for p in (Params(1.0, 1.0), Params(1.0, 0.0)):
        for name in ("exp", "bump"):
            f = F.get(name)
            for lam in H.DEFAULT_LAMBDAS:
                vals = [abs(resolvent.resolve(resolvent.ResolventQuery(p, lam, f, x, sweep_quad))) for x in (0.0, 0.5, 2.0)]
                rep.add(H.SweepRow(f"lam_Rf_sup[{name}]", lam * max(vals), f.sup_norm, 1e-6, gamma=p.gamma, b=p.b, lam=lam))
    # residual of (lambda - A) u = f
    res_tol = 50.0 * quad.tol
    for p, x in ((Params(1.0, 1.0), 0.5), (Params(1.0, 1.0), 2.0), (Params(2.0, 0.0), 1.0)):
        r = resolvent.equation_residual(p, 1.0, F.get("exp"), x, quad)
        rep.add(H.SweepRow("residual", r, res_tol, 0.0, gamma=p.gamma, b=p.b, lam=1.0, x=x))
    # resolvent identity
    id_tol = 20.0 * quad.tol
    for name, p in (("inv1p", Params(1.0, 1.0)), ("exp", Params(1.0, 0.0))):
        for x, d in zip((0.5, 2.0), resolvent.resolvent_identity_defect(p, F.get(name), 1.0, 2.0, (0.5, 2.0), quad)):
            rep.add(H.SweepRow(f"identity[{name}]", d, id_tol, 0.0, gamma=p.gamma, b=p.b, lam=1.0, x=x))
    # sqrt(x) (R f)'(x) -> 0: a factor >= 3 per decade in the asymptotic range
    p, f = Params(1.0, 1.0), F.get("exp")
    xs = (1e-2, 1e-3, 1e-4, 1e-5)
    w = [math.sqrt(x) * abs(resolvent.resolve_derivative(resolvent.ResolventQuery(p, 1.0, f, x, quad))) for x in xs]
    for x, prev, cur in zip(xs[1:], w, w[1:]):
        rep.add(H.SweepRow("decade_decrease_factor", -prev / cur, -3.0, 0.0, gamma=p.gamma, b=p.b, lam=1.0, x=x))
    worst = {}
    for r in rep.rows:
        key = r.quantity.split("[")[0]
        worst[key] = max(worst.get(key, -math.inf), r.measured)
    detail = (
        f"max lam|Rf| {worst['lam_Rf_sup']:.6f}, residual {worst['residual']:.1e} (<= {res_tol:.0e}), "
        f"identity {worst['identity']:.1e} (<= {id_tol:.0e}), min decade factor {-worst['decade_decrease_factor']:.2f}"
    )
    return CriterionResult(8, "resolvent", rep.passed, detail, rep)


def resolvent_gradient_constant(quad: QuadratureSpec = RESOLVENT_SWEEP_QUAD) -> CriterionResult:
    params = [Params(1.0, 1.0), Params(2.0, 0.25)]
    rep = H.resolvent_sweep(
        params, [F.get("exp")], H.DEFAULT_LAMBDAS, H.DEFAULT_RES_XS, quad, dilations=H.DEFAULT_LAMBDAS
    )
    c_rows = [r for r in rep.rows if r.quantity == "C_fit"]
    stab = [r for r in rep.rows if r.quantity == "C_stability"]
    ok = all(math.isfinite(r.measured) for r in c_rows) and all(r.passed for r in stab)
    detail = (
        f"C_emp max {max(r.measured for r in c_rows):.3f}, lambda-stability max/min "
        + ", ".join(f"(gamma={r.gamma:g},b={r.b:g}) {r.measured:.2f}" for r in stab)
    )
    return CriterionResult(9, "resolvent global gradient constant", ok, detail, rep)


# ---------------------------------------------------------------------------
# 10-13
# ---------------------------------------------------------------------------

def trotter_kato(quad: QuadratureSpec = DEFAULT_QUAD) -> CriterionResult:
    rep = H.SweepReport("trotter_kato")
    slopes = []
    for name in ("exp", "inv1p", "bump", "corestep"):
        for gamma in (0.5, 1.0):
            r = H.trotter_kato_sweep(gamma, F.get(name), H.DEFAULT_B_LIST, H.DEFAULT_TK_TS, H.DEFAULT_TK_XS, quad, eps=1e-2)
            rep.extend(r)
            slopes.append(r.summary["log_log_slope"])
    last = max(r.measured for r in rep.rows if r.b == H.DEFAULT_B_LIST[-1])
    return CriterionResult(10, "Trotter-Kato", rep.passed, f"monotone; max at b=1e-3 {last:.2e}; log-log slopes {min(slopes):.2f}..{max(slopes):.2f}", rep)


def core_construction() -> CriterionResult:
    u = F.get("exp1")
    rep = H.SweepReport("core")
    for p in (Params(1.0, 1.0), Params(0.5, 0.0), Params(2.0, 2.0)):
        rep.extend(H.core_approx_report(u, p, ns=(4, 8, 16, 32), y_max=100.0, factor=2.0))
    last = [r for r in rep.rows if r.bound is not None]
    ratios = ", ".join(f"{r.quantity.split('[')[0]} x{2.0 * r.bound / r.measured:.0f}" for r in last[:2])
    return CriterionResult(11, "core construction", rep.passed, f"decrease n=4 -> 32: {ratios}", rep)


def special_functions(n_nu: int = 15, n_x: int = 30, n_s: int = 200) -> CriterionResult:
    rep = H.SweepReport("specialfn")
    mp.mp.dps = 40
    worst = 0.0
    for nu in np.linspace(-1.0, 6.0, n_nu):
        for x in np.geomspace(1e-3, 500.0, n_x):
            ours = float(specialfn.bessel_i_scaled(float(nu), float(x)))
            truth = mp.besseli(mp.mpf(float(nu)), mp.mpf(float(x))) * mp.exp(-mp.mpf(float(x)))
            err = float(abs(mp.mpf(ours) / truth - 1)) if truth != 0 else abs(ours)
            worst = max(worst, err)
            rep.add(H.SweepRow("bessel_rel_error", err, 1e-11, 0.0, x=float(x), k=None, y=float(nu)))
    viol = 0
    for s in np.geomspace(1e-3, 1e4, n_s):
        s = float(s)
        for a in (0.5, 1.0, 2.5):
            c = specialfn.series_S_bound_check(a, s, 3.0)
            rep.add(H.SweepRow(f"series_bound[a={a:g}]", c.lhs, c.rhs, 0.0, x=s))
        c = specialfn.weighted_abs_sum_check(s)
        rep.add(H.SweepRow("weighted_abs_sum", c.lhs, c.rhs, 0.0, x=s))
        c = specialfn.weighted_abs_sum_check(s, 1.0)
        rep.add(H.SweepRow("weighted_abs_sum_delta1", c.lhs, c.rhs, 0.0, x=s))
        rep.add(H.SweepRow("gamma_abs_integral", specialfn.gamma_abs_integral(s), 2.0 * math.sqrt(s), 0.0, x=s))
        c = specialfn.holder_sum_bound_check(s)
        rep.add(H.SweepRow("holder_sum", c.lhs, c.rhs, 0.0, x=s))
    viol = sum(1 for r in rep.rows if not r.passed)
    return CriterionResult(12, "special functions", rep.passed, f"Bessel worst rel err {worst:.1e}; {viol} inequality violations at {n_s} s values", rep)


def strong_continuity(quad: QuadratureSpec = DEFAULT_QUAD, M: float = 10.0) -> CriterionResult:
    rep = H.SweepReport("strong_continuity")
    ts = (1e-1, 1e-2, 1e-3, 1e-4)
    xs = np.linspace(0.0, M, 21)
    for p in (Params(1.0, 1.0), Params(1.0, 0.0), Params(0.5, 2.0)):
        for name in ("exp", "inv1p", "dsine", "bump", "corestep"):
            f = F.get(name)
            prev = math.inf
            for t in ts:
                d = semigroup.strong_continuity_defect(p, f, t, xs, quad)
                bound = min(semigroup.strong_continuity_bound(p, f, t, M), prev)
                rep.add(H.SweepRow(f"sup_Ptf_minus_f[{name}]", d, bound, quad.tol, gamma=p.gamma, b=p.b, t=t))
                prev = d
    return CriterionResult(13, "strong continuity", rep.passed, f"{len(rep.rows)} rows decreasing in t and below the optimized bound", rep)


CRITERIA: dict[int, Callable[[], CriterionResult]] = {
    1: normalization,
    2: chapman_kolmogorov,
    3: exact_moments,
    4: absolute_moment,
    5: analyticity,
    6: gradient_bounds,
    7: derivative_vs_differences,
    8: resolvent_checks,
    9: resolvent_gradient_constant,
    10: trotter_kato,
    11: core_construction,
    12: special_functions,
    13: strong_continuity,
}


def run_all(selection=None, on_result=None) -> list:
    out = []
    for n in sorted(selection or CRITERIA):
        res = CRITERIA[n]()
        if on_result is not None:
            on_result(res)
        out.append(res)
    return out
