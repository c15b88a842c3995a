import math

import numpy as np
import pytest

from degdiff import functions as F
from degdiff import harness as H
from degdiff.errors import ContractError, DomainError
from degdiff.kernel import Params
from degdiff.quadrature import QuadratureSpec

Q = QuadratureSpec()
XS = (0.0, 0.01, 0.3, 1.0, 4.0, 20.0)


def test_row_pass_logic():
    assert H.SweepRow("q", 1.0, 1.0).passed
    assert H.SweepRow("q", 1.05, 1.0, 0.1).passed
    assert not H.SweepRow("q", 1.2, 1.0, 0.1).passed
    assert H.SweepRow("q", 5.0, None).passed
    assert not H.SweepRow("q", math.nan, None).passed
    assert H.SweepRow("q", 0.25, 1.0).margin == 0.75


def test_report_aggregates():
    rep = H.SweepReport("r")
    rep.add(H.SweepRow("a", 0.5, 1.0))
    rep.add(H.SweepRow("b", 2.0, 1.0))
    assert not rep.passed and len(rep.failures) == 1 and rep.worst_margin() == -1.0


def test_combined_tolerance():
    assert H.combined_tolerance(10.0, Q) == pytest.approx(Q.tol + 0.1)


def test_analyticity_examples():
    one = F.get("one")
    rep = H.analyticity_sweep(2.0, 0.5, [one], (0.1, 1.0), XS, Q)
    assert rep.passed and all(r.measured <= 1e-9 for r in rep.rows)
    assert rep.summary["uniform_bound"] == pytest.approx(2 * (3 + math.sqrt(2)) / 0.5)
    assert rep.summary["uniform_bound"] == pytest.approx(17.657, abs=1e-3)
    rep = H.analyticity_sweep(1.0, 1.0, [F.get("bump")], (0.1,), XS, Q, params_grid=[Params(1.0, 0.0)])
    assert rep.rows[0].bound == pytest.approx(2 * (1 + math.sqrt(2)))
    assert rep.passed


def test_analyticity_rejects_params_outside_range():
    with pytest.raises(DomainError):
        H.analyticity_sweep(1.0, 1.0, [F.get("exp")], (1.0,), XS, Q, params_grid=[Params(1.0, 2.0)])
    with pytest.raises(DomainError):
        H.analyticity_sweep(1.0, 1.0, [F.get("exp")], (), XS, Q)


def test_rows_use_their_own_bound():
    rep = H.analyticity_sweep(2.0, 0.5, [F.get("exp")], (1.0,), XS, Q)
    for r in rep.rows:
        assert r.bound == pytest.approx(2 * (1 + math.sqrt(2) + r.b) / r.gamma)


def test_gradient_examples():
    rep = H.gradient_sweep([Params(1.0, 1.0)], [F.get("one"), F.get("exp")], (1.0,), XS, Q)
    assert rep.passed
    weighted = [r for r in rep.rows if r.quantity.startswith("sqrt_x_dPt")]
    assert weighted[0].bound == pytest.approx(2 * math.sqrt(2))
    assert weighted[0].measured <= 1e-9
    assert 0 < rep.summary["empirical_constants"]["sqrt_x_dPt"] <= 2 * math.sqrt(2)


def test_trotter_kato_constant_and_trend():
    rep = H.trotter_kato_sweep(1.0, F.get("one"), (1.0, 0.1), (0.1,), (0.0, 1.0), Q)
    assert all(r.measured <= 2 * Q.tol for r in rep.rows)
    rep = H.trotter_kato_sweep(1.0, F.get("exp"), H.DEFAULT_B_LIST, H.DEFAULT_TK_TS, H.DEFAULT_TK_XS, Q)
    vals = [r.measured for r in rep.rows]
    assert all(b < a for a, b in zip(vals, vals[1:]))
    assert rep.passed and vals[-1] <= 1e-2
    assert 0.8 < rep.summary["log_log_slope"] < 1.2
    with pytest.raises(DomainError):
        H.trotter_kato_sweep(1.0, F.get("exp"), (0.1, 1.0), (0.1,), (1.0,), Q)


def test_cutoff():
    r = np.array([0.0, 1.0, 1.5, 2.0, 5.0])
    assert np.allclose(H.cutoff(r), [1, 1, 0.5, 0, 0])


def test_core_sequence_of_constant_is_constant():
    c = F.get("const:2")
    y = np.linspace(0, 100, 1001)
    for n in (1, 4, 32):
        un = H.core_approx_sequence(c, n)
        assert np.allclose(un(y), 2.0) and np.allclose(un.deriv2(y), 0.0)


@pytest.mark.parametrize("n", [2, 5, 16])
def test_core_sequence_is_c2_and_eventually_constant(n):
    u = F.get("exp1")
    un = H.core_approx_sequence(u, n)
    for fn in (un.eval, un.deriv1, un.deriv2):
        for y0 in (1.0 / n, float(n), 2.0 * n):
            left, right = fn(np.array([y0 - 1e-9])), fn(np.array([y0 + 1e-9]))
            assert left[0] == pytest.approx(right[0], abs=1e-6)
    far = np.linspace(2 * n, 10 * n, 50)
    assert np.all(un(far) == u.limit_at_infinity)
    # derivatives agree with differences of the values
    y = np.array([0.5 / n, 0.7, 1.5 * n])
    h = 1e-4 * np.maximum(1.0, y)
    assert np.allclose(un.deriv1(y), (un(y + h) - un(y - h)) / (2 * h), atol=1e-6)
    F.validate(un)


def test_core_sequence_converges():
    u = F.get("exp")
    rep = H.core_approx_report(u, Params(1.0, 1.0))
    errs = [r.measured for r in rep.rows if r.quantity.startswith("sup_un_minus_u")]
    gens = [r.measured for r in rep.rows if r.quantity.startswith("sup_Aun_minus_Au")]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert all(b < a for a, b in zip(gens, gens[1:]))
    assert rep.passed


def test_core_sequence_contract():
    with pytest.raises(ContractError):
        H.core_approx_sequence(F.TestFunction("plain", np.exp, 0.0, 1.0), 3)
    with pytest.raises(DomainError):
        H.core_approx_sequence(F.get("exp"), 0)


def test_resolvent_sweep_small():
    loose = QuadratureSpec(tol=1e-9)
    rep = H.resolvent_sweep([Params(1.0, 1.0)], [F.get("one")], (0.1, 10.0), (0.5,), loose)
    contraction = [r for r in rep.rows if r.quantity.startswith("lam_Rf_sup")]
    assert all(r.measured == pytest.approx(1.0, abs=1e-8) for r in contraction)
    assert rep.passed
    assert all(r.measured == 1.0 for r in rep.rows if r.quantity.endswith("stability"))
    with pytest.raises(DomainError):
        H.resolvent_sweep([Params(1.0, 1.0)], [F.get("exp")], (0.0, 1.0), (0.5,), loose)


def test_sweeps_are_deterministic():
    a = H.gradient_sweep([Params(0.5, 2.0)], [F.get("dsine")], (0.1,), XS, Q)
    H._jets_cached.cache_clear()
    b = H.gradient_sweep([Params(0.5, 2.0)], [F.get("dsine")], (0.1,), XS, Q)
    assert [r.measured for r in a.rows] == [r.measured for r in b.rows]
