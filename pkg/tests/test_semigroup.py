import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from degdiff import functions as F
from degdiff import semigroup as S
from degdiff.errors import ContractError, DomainError
from degdiff.kernel import Params
from degdiff.quadrature import QuadratureSpec

from test_kernel import closed_form

mp.mp.dps = 30
Q = QuadratureSpec()
GRID = [Params(g, b) for g in (0.5, 1.0, 2.0) for b in (0.0, 0.25, 1.0, 2.0)]
params_st = st.sampled_from(GRID)
f_st = st.sampled_from([F.get(n) for n in F.REGISTRY_NAMES])
t_st = st.sampled_from([0.01, 0.1, 1.0, 10.0])
x_st = st.floats(0.0, 50.0)


# ---------------------------------------------------------------------------
# apply
# ---------------------------------------------------------------------------

@given(params_st, t_st, x_st)
def test_constants_preserved(p, t, x):
    assert S.apply(p, F.get("one"), t, x) == pytest.approx(1.0, abs=Q.tol)


@given(params_st, f_st, t_st, x_st)
def test_contraction(p, f, t, x):
    assert abs(S.apply(p, f, t, x)) <= f.sup_norm + Q.tol


@given(params_st, f_st, t_st, x_st)
def test_positivity(p, f, t, x):
    if f.nonnegative:
        assert S.apply(p, f, t, x) >= -Q.tol


def test_absorbed_start():
    for name in ("exp", "dsine", "corestep"):
        f = F.get(name)
        assert S.apply(Params(1.5, 0.0), f, 0.7, 0.0) == f.value(0.0)


def test_exp_against_series_oracle():
    p, f = Params(1.0, 1.0), F.get("exp")
    assert S.apply(p, f, 1.0, 1.0) == pytest.approx(S.apply_series(p, f, 1.0, 1.0), abs=1e-8)


@pytest.mark.parametrize("p, x, t", [(Params(1, 1), 1.0, 1.0), (Params(0.5, 2), 3.0, 0.1), (Params(2, 0), 2.0, 0.4)])
def test_apply_against_mpmath(p, x, t):
    f = F.get("dsine")
    g = lambda y: mp.sin(y) / (1 + y * y) + mp.mpf(1) / 2
    ref = mp.quad(lambda y: closed_form(p, x, y, t) * g(y), [0, x, x + 5, x + 20, mp.inf])
    if p.b == 0:
        ref += mp.exp(-x / (p.gamma * t)) * g(0)
    assert S.apply(p, f, t, x) == pytest.approx(float(ref), abs=1e-10)


def test_t_floor():
    p, f = Params(1, 1), F.get("exp")
    x, t = 0.7, 1e-8
    assert S.apply(p, f, t, x) == f.value(x) + t * S.generator_apply(p, f, x)
    rough = F.TestFunction("rough", lambda y: np.exp(-y), 0.0, 1.0)
    with pytest.raises(DomainError):
        S.apply(p, rough, t, x)
    with pytest.raises(DomainError):
        S.apply(p, f, 0.0, x)
    with pytest.raises(DomainError):
        S.apply(p, f, 1.0, -1.0)


def test_semigroup_law():
    # P_{t+s} f = P_t (P_s f) with the inner P_s f resampled on a fine grid
    p, f, s, t, x = Params(1.0, 0.5), F.get("exp"), 0.3, 0.5, 1.2
    ys = np.linspace(0.0, 60.0, 3001)
    inner = np.array([S.apply(p, f, s, y) for y in ys])
    from scipy.interpolate import CubicSpline

    spline = CubicSpline(ys, inner)
    g = F.TestFunction("Psf", lambda y: spline(np.minimum(y, 60.0)), 0.0, 1.0)
    assert S.apply(p, g, t, x) == pytest.approx(S.apply(p, f, s + t, x), abs=1e-7)


# ---------------------------------------------------------------------------
# moments
# ---------------------------------------------------------------------------

@given(params_st, st.floats(0.0, 20.0), st.floats(0.01, 5.0))
def test_low_moments_closed_form(p, x, t):
    g, b = p.gamma, p.b
    assert S.translated_moment(p, x, t, 0) == 1.0
    ulp = np.finfo(float).eps
    assert S.translated_moment(p, x, t, 1) == b * t
    m2 = 2 * g * t * x + t * t * b * (b + g)
    assert abs(S.translated_moment(p, x, t, 2) - m2) <= 4 * ulp * m2


def test_moment_examples():
    assert S.translated_moment(Params(1, 1), 1.0, 1.0, 2) == pytest.approx(4.0, abs=1e-15)
    assert S.translated_moment(Params(2, 0), 3.0, 0.5, 2) == pytest.approx(6.0, abs=1e-14)


def test_third_moment_against_quadrature():
    p = Params(1, 1)
    exact = S.translated_moment(p, 1.0, 1.0, 3)
    ref = mp.quad(lambda y: closed_form(p, 1, y, 1) * (y - 1) ** 3, [0, 1, 10, mp.inf])
    assert exact == pytest.approx(18.0, abs=1e-13)
    assert exact == pytest.approx(float(ref), rel=1e-12)


@pytest.mark.parametrize("k", range(1, 7))
def test_moments_against_kernel_quadrature(k):
    from degdiff.kernel import expect

    for p in (Params(0.5, 2.0), Params(1.0, 0.0), Params(2.0, 0.25)):
        x, t = 1.3, 0.6
        q = expect(p, x, t, lambda y: (y - x) ** k, Q, y_breaks=[x])[0]
        assert S.translated_moment(p, x, t, k) == pytest.approx(q, rel=1e-7)


def test_moment_domain():
    with pytest.raises(DomainError):
        S.translated_moment(Params(1, 1), 1.0, 1.0, 13)
    with pytest.raises(DomainError):
        S.translated_moment(Params(1, 1), 1.0, 1.0, 1.5)


def test_abs_moment_examples():
    assert S.abs_moment_bound_check(Params(1, 0), 0.0, 1.0) == (0.0, 0.0)
    lhs, rhs = S.abs_moment_bound_check(Params(1, 1), 1.0, 1.0)
    assert rhs == 2.0 and lhs <= rhs
    lhs, rhs = S.abs_moment_bound_check(Params(2, 0), 4.0, 0.25)
    assert rhs == 2.0 and lhs <= rhs


@given(params_st, st.floats(0.0, 30.0), t_st)
def test_abs_moment_bound(p, x, t):
    lhs, rhs = S.abs_moment_bound_check(p, x, t)
    assert lhs <= rhs + 1e-7


# ---------------------------------------------------------------------------
# derivatives and the generator
# ---------------------------------------------------------------------------

@given(params_st, t_st, x_st)
def test_derivatives_of_constant_vanish(p, t, x):
    one = F.get("one")
    assert abs(S.derivative(p, one, t, x)) <= 1e-9 / (p.gamma * t)
    assert abs(S.x_second_derivative(p, one, t, x)) <= 1e-9 / (p.gamma * t)


def test_x_second_derivative_at_origin():
    for p in GRID:
        assert S.x_second_derivative(p, F.get("exp"), 0.5, 0.0) == 0.0


@pytest.mark.parametrize("p", [Params(1, 1), Params(0.5, 2), Params(2, 0), Params(1, 0.25)])
@pytest.mark.parametrize("x", [0.3, 1.0, 4.0])
def test_derivatives_against_differences(p, x):
    f, t = F.get("dsine"), 0.5
    h = 1e-3 * max(1.0, x)
    u = [S.apply(p, f, t, x + j * h) for j in (-2, -1, 0, 1, 2)]
    d1 = (u[0] - 8 * u[1] + 8 * u[3] - u[4]) / (12 * h)
    d2 = (-u[0] + 16 * u[1] - 30 * u[2] + 16 * u[3] - u[4]) / (12 * h * h)
    assert S.derivative(p, f, t, x) == pytest.approx(d1, abs=1e-6)
    assert S.x_second_derivative(p, f, t, x) == pytest.approx(x * d2, abs=1e-6)


@pytest.mark.parametrize("p", [Params(1, 1), Params(0.5, 2), Params(2, 0)])
@pytest.mark.parametrize("name", ["exp", "dsine", "bump", "corestep"])
def test_derivative_equals_gradient_representation(p, name):
    f = F.get(name)
    for x in (0.0, 0.4, 2.5):
        a = S.derivative_from_gradient(p, f, 0.3, x)
        if x > 0:
            assert S.derivative(p, f, 0.3, x) == pytest.approx(a, abs=1e-8)
    assert S.derivative(p, f, 0.3, 0.0) == pytest.approx(S.derivative_from_gradient(p, f, 0.3, 0.0), abs=1e-8)


@pytest.mark.parametrize("p", [Params(1, 1), Params(0.5, 2), Params(2, 0.25)])
def test_derivatives_against_series_oracle(p):
    f = F.get("dsine")
    for x, t in ((0.5, 0.2), (3.0, 1.0), (10.0, 2.0)):
        assert S.derivative(p, f, t, x) == pytest.approx(S.derivative_series(p, f, t, x), abs=1e-7)
        assert S.x_second_derivative(p, f, t, x) == pytest.approx(S.x_second_derivative_series(p, f, t, x), abs=1e-6)


@given(params_st, f_st, t_st, x_st)
def test_gradient_bounds(p, f, t, x):
    gt = p.gamma * t
    d1 = S.derivative(p, f, t, x)
    xd2 = S.x_second_derivative(p, f, t, x)
    c2 = 1 + 2 * math.sqrt(2) if p.b == 0 else 2 * (1 + math.sqrt(2))
    assert abs(d1) <= 2 * f.sup_norm / gt + Q.tol
    assert math.sqrt(x) * abs(d1) <= 2 * math.sqrt(2) * f.sup_norm / math.sqrt(gt) + Q.tol
    assert abs(xd2) <= c2 * f.sup_norm / gt + Q.tol


def test_generator_examples():
    p = Params(1.5, 0.5)
    assert S.generator_apply(p, F.get("const:3"), 2.0) == 0.0
    x = 0.8
    assert S.generator_apply(p, F.get("exp"), x) == pytest.approx(p.gamma * x * math.exp(-x) - p.b * math.exp(-x), rel=1e-15)
    # y^2 smoothly truncated far away: A f(x) = 2 gamma x + 2 b x
    sq = F.TestFunction("sq", lambda y: y * y, 0.0, 1.0, lambda y: 2 * y, lambda y: 2 + 0 * y)
    assert S.generator_apply(p, sq, x) == pytest.approx(2 * p.gamma * x + 2 * p.b * x, rel=1e-15)
    with pytest.raises(ContractError):
        S.generator_apply(p, F.TestFunction("plain", np.exp, 0.0, 1.0), x)


@pytest.mark.parametrize("p", [Params(1, 1), Params(0.5, 2), Params(2, 0)])
def test_generator_consistency(p):
    """(P_t f - f)/t -> A f on [0, 20] for a core function.

    The bound is the second-order Taylor estimate with the remainder
    ||f''|| P_t(tau_x^2)(x) divided by t. The error itself decays like
    sqrt(t) because f'' is only Lipschitz.
    """
    f = F.get("corestep")
    f2 = float(np.abs(f.deriv2(np.linspace(0.0, 5.0, 200001))).max())
    xs = (0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 5.0, 10.0, 20.0)
    ts = (1e-2, 1e-3, 1e-4, 1e-5)
    worst = []
    for t in ts:
        errs = []
        for x in xs:
            e = abs((S.apply(p, f, t, x) - f.value(x)) / t - S.generator_apply(p, f, x))
            mom = 2 * p.gamma * t * x + t * t * p.b * (p.b + p.gamma)
            bound = 0.5 * t * f2 * p.b * (p.b + p.gamma) + f2 * mom / t + Q.tol / t
            assert e <= bound
            errs.append(e)
        worst.append(max(errs))
    assert all(b < a for a, b in zip(worst, worst[1:]))
    slope = np.polyfit(np.log(ts), np.log(worst), 1)[0]
    assert 0.35 < slope < 0.65


# ---------------------------------------------------------------------------
# analyticity, continuity, far field
# ---------------------------------------------------------------------------

XS = [0.0] + list(np.geomspace(1e-3, 50.0, 15))


def test_t_A_Pt_examples():
    assert S.t_A_Pt_sup(Params(1, 1), F.get("one"), 1.0, XS) <= 1e-9
    for t in (0.01, 0.1, 1.0, 10.0):
        assert S.t_A_Pt_sup(Params(1, 1), F.get("exp"), t, XS) <= 2 * (2 + math.sqrt(2))
        assert S.t_A_Pt_sup(Params(1, 0), F.get("bump"), t, XS) <= 2 * (1 + math.sqrt(2))
    assert S.analyticity_bound(Params(1, 0)) == pytest.approx(2 * (1 + math.sqrt(2)))
    with pytest.raises(DomainError):
        S.t_A_Pt_sup(Params(1, 1), F.get("exp"), 1.0, [])


def test_strong_continuity_examples():
    p, f = Params(1, 1), F.get("exp")
    xs = np.linspace(0, 10, 21)
    defects = [S.strong_continuity_defect(p, f, t, xs) for t in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(b < a for a, b in zip(defects, defects[1:]))
    assert S.strong_continuity_defect(p, F.get("one"), 0.1, xs) <= Q.tol
    d = S.strong_continuity_defect(p, f, 1e-3, xs)
    # the closed-form minimum over delta agrees with a brute-force scan
    V = math.sqrt(2 * 1e-3 * 10 + 1e-6 * 2)
    scan = min(f.lipschitz * dl + 2 * V / dl for dl in np.geomspace(1e-6, 1e3, 200001))
    assert S.strong_continuity_bound(p, f, 1e-3, 10.0) == pytest.approx(scan, rel=1e-6)
    assert d <= S.strong_continuity_bound(p, f, 1e-3, 10.0) + Q.tol
    with pytest.raises(ContractError):
        S.strong_continuity_bound(p, F.TestFunction("plain", np.exp, 0.0, 1.0), 0.1, 1.0)


def test_far_field():
    f = F.get("bump1")
    p = Params(1, 1)
    v, bound = S.far_field_decay_check(p, f, 0.1, 16.0)
    assert v <= bound
    # against a 30-digit integral of the kernel over the support
    g = lambda y: mp.exp(-1 / (1 - (2 * y - 1) ** 2)) * mp.e if abs(2 * y - 1) < 1 else 0
    ref = mp.quad(lambda y: closed_form(p, 16, y, 0.1) * f.value(float(y)), [0, 0.5, 1])
    assert v == pytest.approx(float(ref), rel=1e-6)
    vals = [S.far_field_decay_check(p, f, 0.5, x)[0] for x in (10.0, 20.0, 40.0)]
    assert vals[0] > vals[1] > vals[2]
    zero = F.TestFunction("zero", lambda y: 0 * y, 0.0, 1.0, support_bound=1.0)
    v0, b0 = S.far_field_decay_check(p, zero, 0.1, 16.0)
    assert v0 == 0.0 and b0 >= 0
    with pytest.raises(DomainError):
        S.far_field_decay_check(p, f, 0.1, 9.0)


@given(params_st, st.sampled_from([0.05, 0.2, 1.0]), st.floats(9.5, 60.0))
def test_far_field_bound_holds(p, t, x):
    v, bound = S.far_field_decay_check(p, F.get("bump1"), t, x)
    assert v <= bound
