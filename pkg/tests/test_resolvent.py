import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from degdiff import functions as F
from degdiff import resolvent as R
from degdiff.errors import ContractError, DomainError
from degdiff.kernel import Params
from degdiff.quadrature import QuadratureSpec

Q = QuadratureSpec()
LOOSE = QuadratureSpec(tol=1e-9)


def rq(p, lam, f, x, quad=Q):
    return R.ResolventQuery(p, lam, f, x, quad)


@pytest.mark.parametrize("lam", [0.1, 1.0, 10.0, 100.0, 2 + 3j])
def test_constant_function(lam):
    one = F.get("one")
    for p in (Params(1, 1), Params(2, 0)):
        assert R.resolve(rq(p, lam, one, 1.5)) == pytest.approx(1 / lam, abs=1e-10)
        assert abs(R.resolve_derivative(rq(p, lam, one, 1.5))) <= 1e-10
        assert abs(R.x_second_derivative(rq(p, lam, one, 1.5))) <= 1e-9


def test_x_second_derivative_bound_check_constant():
    v, _ = R.x_second_derivative_bound_check(rq(Params(1, 1), 1.0, F.get("one"), 1.0))
    assert v <= 1e-10


@settings(max_examples=12)
@given(
    st.sampled_from([Params(1, 1), Params(1, 0), Params(0.5, 2)]),
    st.sampled_from(["exp", "bump", "dsine"]),
    st.sampled_from([0.1, 1.0, 10.0, 100.0]),
    st.floats(0.0, 10.0),
)
def test_real_lambda_contraction(p, name, lam, x):
    f = F.get(name)
    assert abs(lam * R.resolve(rq(p, lam, f, x, LOOSE))) <= f.sup_norm + 1e-6


def test_query_validation():
    f = F.get("exp")
    for lam in (0.0, -1.0, 1j, complex(math.nan, 0)):
        with pytest.raises(DomainError):
            rq(Params(1, 1), lam, f, 1.0)
    with pytest.raises(DomainError):
        rq(Params(1, 1), 1.0, f, -0.1)
    with pytest.raises(DomainError):
        R.resolve(rq(Params(1, 1), 1e-4, f, 1.0))


def test_origin_needs_bounded_derivative():
    rough = F.TestFunction("rough", lambda y: np.exp(-y), 0.0, 1.0)
    with pytest.raises(DomainError):
        R.resolve_derivative(rq(Params(1, 1), 1.0, rough, 0.0))
    # x > 0 is fine without derivatives
    assert math.isfinite(R.resolve_derivative(rq(Params(1, 1), 1.0, rough, 0.5)).real)


def test_origin_derivative_is_continuous():
    p, f = Params(1, 1), F.get("exp")
    d0 = R.resolve_derivative(rq(p, 1.0, f, 0.0)).real
    d_small = R.resolve_derivative(rq(p, 1.0, f, 1e-6)).real
    assert d0 == pytest.approx(d_small, abs=1e-4)


@pytest.mark.parametrize("p, x", [(Params(1, 1), 1.0), (Params(2, 0), 0.7), (Params(0.5, 2), 3.0)])
def test_derivatives_against_differences(p, x):
    f, lam, h = F.get("exp"), 1.0, 0.02
    u = [R.resolve(rq(p, lam, f, x + j * h)).real for j in range(-4, 5)]
    d1 = R.central_weights(4, 1) @ u / h
    d2 = R.central_weights(4, 2) @ u / h**2
    assert R.resolve_derivative(rq(p, lam, f, x)).real == pytest.approx(d1, abs=1e-8)
    assert R.x_second_derivative(rq(p, lam, f, x)).real == pytest.approx(x * d2, abs=1e-7)
    r0, r1 = R.resolve_jets(rq(p, lam, f, x))
    assert r0 == pytest.approx(R.resolve(rq(p, lam, f, x)), abs=1e-10)
    assert r1 == pytest.approx(R.resolve_derivative(rq(p, lam, f, x)), abs=1e-10)


def test_example_second_derivative_bound():
    q = rq(Params(1, 1), 1.0, F.get("exp"), 1.0)
    value, bound = R.x_second_derivative_bound_check(q)
    assert math.isfinite(value) and value <= bound
    with pytest.raises(DomainError):
        R.x_second_derivative_bound_check(rq(Params(1, 0), 1.0, F.get("exp"), 1.0))
    with pytest.raises(DomainError):
        R.x_second_derivative_bound_check(rq(Params(1, 1), 1 + 1j, F.get("exp"), 1.0))


def test_laplace_transform_closed_form_at_origin():
    # from x = 0 with gamma = b = 1 the kernel is exponential with mean t, so
    # P_t e^{-y}(0) = 1 / (1 + t) and R(lam) f(0) = e^lam E1(lam)
    from scipy.special import exp1

    for lam in (0.5, 2.0, 1 + 2j):
        ref = np.exp(lam) * exp1(lam)
        assert R.resolve(rq(Params(1, 1), lam, F.get("exp"), 0.0)) == pytest.approx(ref, abs=1e-10)


def test_equation_residual():
    assert R.equation_residual(Params(1, 1), 1.0, F.get("exp"), 0.5) <= 50 * Q.tol
    with pytest.raises(DomainError):
        R.equation_residual(Params(1, 1), 1.0, F.get("exp"), 0.1)


def test_central_weights():
    w = R.central_weights(1, 2)
    assert np.allclose(w, [1, -2, 1])
    k = np.arange(-4, 5)
    for order in (1, 2):
        w = R.central_weights(4, order)
        for power in range(9):
            expected = math.factorial(order) if power == order else 0.0
            assert w @ k.astype(float) ** power == pytest.approx(expected, abs=1e-9)


def test_sampled_function_interpolates():
    p, f = Params(1, 1), F.get("exp")
    g = R.sampled_function(p, 2.0, f, quad=LOOSE)
    for y in (0.3, 2.0, 9.0):
        assert g.value(y) == pytest.approx(R.resolve(rq(p, 2.0, f, y, LOOSE)).real, abs=1e-8)
    assert g.limit_at_infinity == 0.0
    assert g.sup_norm >= 0.5 * max(abs(g.value(y)) for y in np.linspace(0, 50, 101))


def test_resolvent_identity():
    d = R.resolvent_identity_defect(Params(1, 1), F.get("inv1p"), 1.0, 2.0, [1.0])
    assert d[0] <= 20 * Q.tol
    with pytest.raises(ContractError):
        R.resolvent_identity_defect(Params(1, 1), F.get("exp"), 1.0, 1.0, [1.0])


def test_gradient_constant():
    assert R.gradient_constant(Params(2.0, 0.5), 0.3, 1.0) == pytest.approx(0.3 * 2.0 / 4.0)
    with pytest.raises(DomainError):
        R.gradient_constant(Params(1.0, 0.0), 0.3, 1.0)
