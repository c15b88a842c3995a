"""Action of the transition semigroup on bounded test functions.

The main evaluation path integrates the kernel against ``f - c`` for a
centring constant ``c``. Spatial derivatives use the fact that the
derivative series of the kernel resums into drift-shifted kernels:

    (P_t f)'(x)   = (P^{b+g} f - P^b f)(x) / (g t)
    x (P_t f)''(x) = s (P^{b+2g} f - 2 P^{b+g} f + P^b f)(x) / (g t),   s = x / (g t)

so all three quantities come out of one vector-valued quadrature. The
per-term generalized Laguerre series is kept as an independent oracle.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .errors import ContractError, DomainError
from .functions import TestFunction
from .kernel import Params, _check_xt, expect
from .quadrature import QuadratureSpec
from .specialfn import bessel_series_constant

DEFAULT_QUAD = QuadratureSpec()
SQRT2 = math.sqrt(2.0)


def _breaks(f: TestFunction, x: float) -> list:
    return list(f.breakpoints) + ([x] if x > 0 else [])


def _y_max(f: TestFunction):
    return f.support_bound


def generator_apply(params: Params, f: TestFunction, x: float) -> float:
    """``gamma x f''(x) + b f'(x)``."""
    if not f.smooth:
        raise ContractError(f"{f.name} lacks the derivatives needed by the generator")
    return params.gamma * x * f.d2(x) + params.b * f.d1(x)


def apply(params: Params, f: TestFunction, t: float, x: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``P_t f(x)`` by kernel quadrature of ``p (f - f(0))``.

    Below ``quad.t_floor`` the first-order expansion ``f + t A f`` is
    returned for smooth ``f``; other functions raise ``DomainError``.
    """
    if not (math.isfinite(t) and t > 0):
        raise DomainError(f"t must be positive, got {t}")
    if t < quad.t_floor:
        if f.smooth:
            return f.value(x) + t * generator_apply(params, f, x)
        raise DomainError(f"t={t} below t_floor={quad.t_floor} for non-smooth {f.name}")
    _check_xt(x, t)
    c = f.value(0.0)
    if params.b == 0.0 and x == 0.0:
        return c
    q = quad.with_tol(quad.tol * f.sup_norm)
    return c + float(expect(params, x, t, f.eval, q, center=c, y_breaks=_breaks(f, x))[0])


def _jets(params: Params, f: TestFunction, t: float, x: float, quad: QuadratureSpec, order: int) -> np.ndarray:
    """``[P f, (P f)', x (P f)'']`` truncated to ``order + 1`` entries."""
    if not (math.isfinite(t) and t >= quad.t_floor):
        raise DomainError(f"t={t} below t_floor={quad.t_floor}")
    _check_xt(x, t)
    gt = params.gamma * t
    s = x / gt
    # the error control acts on the dimensionless rows gt*(Pf)' and
    # gt*x(Pf)'', which are O(||f||) uniformly in t
    if order == 1:
        shifts = (0, 1)
        combine = np.array([[1.0, 0.0], [-1.0, 1.0]])
    else:
        shifts = (0, 1, 2)
        combine = np.array([[1.0, 0.0, 0.0], [-1.0, 1.0, 0.0], [s, -2.0 * s, s]])
    c = f.value(x)
    rows = expect(
        params, x, t, f.eval, quad.with_tol(quad.tol * f.sup_norm),
        shifts=shifts, center=c, y_breaks=_breaks(f, x), combine=combine,
    )
    rows[0] += c
    rows[1:] /= gt
    if order >= 2 and x == 0.0:
        rows[2] = 0.0
    return rows


def derivative(params: Params, f: TestFunction, t: float, x: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``(P_t f)'(x)`` as a difference of drift-shifted kernels."""
    return float(_jets(params, f, t, x, quad, 1)[1])


def derivative_from_gradient(
    params: Params, f: TestFunction, t: float, x: float, quad: QuadratureSpec = DEFAULT_QUAD
) -> float:
    """``(P_t f)'(x) = P_t^{b+gamma} (f')(x)`` for ``f`` with bounded derivative."""
    if f.deriv1 is None:
        raise ContractError(f"{f.name} has no derivative")
    _check_xt(x, t)
    c = f.d1(x)
    q = quad.with_tol(quad.tol * max(1.0, f.lipschitz or 1.0))
    return c + float(expect(params.shifted(1), x, t, f.deriv1, q, center=c, y_breaks=_breaks(f, x))[0])


def x_second_derivative(
    params: Params, f: TestFunction, t: float, x: float, quad: QuadratureSpec = DEFAULT_QUAD
) -> float:
    """``x (P_t f)''(x)``; vanishes at ``x = 0``."""
    if x == 0.0:
        _check_xt(x, t)
        return 0.0
    return float(_jets(params, f, t, x, quad, 2)[2])


def jets(params: Params, f: TestFunction, t: float, x: float, quad: QuadratureSpec = DEFAULT_QUAD):
    """``(P_t f(x), (P_t f)'(x), x (P_t f)''(x))`` from a single quadrature."""
    v = _jets(params, f, t, x, quad, 2)
    return float(v[0]), float(v[1]), float(v[2])


def t_A_Pt(params: Params, f: TestFunction, t: float, x: float, quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    _, d1, xd2 = jets(params, f, t, x, quad)
    return t * (params.gamma * xd2 + params.b * d1)


def t_A_Pt_sup(params: Params, f: TestFunction, t: float, x_grid: Sequence[float], quad: QuadratureSpec = DEFAULT_QUAD) -> float:
    """``max_x |t A P_t f(x)|`` over ``x_grid``."""
    if len(x_grid) == 0:
        raise DomainError("x_grid must be nonempty")
    return max(abs(t_A_Pt(params, f, t, float(x), quad)) for x in x_grid)


def analyticity_bound(params: Params, sup_norm: float = 1.0) -> float:
    """Uniform constant ``2 (1 + sqrt 2 + b) / gamma`` times ``sup_norm``."""
    return 2.0 * (1.0 + SQRT2 + params.b) / params.gamma * sup_norm


# ---------------------------------------------------------------------------
# Series oracle
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4096)
def _laguerre(n: int, alpha: float):
    """Gauss rule for the Gamma(alpha + 1) probability law (Golub-Welsch).

    Working with the normalised Jacobi matrix avoids the overflow of
    ``Gamma(alpha + 1)`` for large shapes.
    """
    i = np.arange(n, dtype=float)
    diag = 2.0 * i + alpha + 1.0
    off = np.sqrt((i[1:]) * (i[1:] + alpha))
    z, vec = eigh_tridiagonal(diag, off)
    return z, vec[0] ** 2


def _series_window(s: float, budget: int) -> int:
    m_max = int(math.ceil(s + 12.0 * math.sqrt(s) + 40.0))
    if m_max > budget:
        raise DomainError(f"series needs {m_max} terms, budget is {budget}")
    return m_max


def _gamma_expectations(f: TestFunction, gt: float, shapes: np.ndarray, nodes: int) -> np.ndarray:
    """``E[f(gt Z)]`` for ``Z ~ Gamma(k)`` per shape ``k``; shape 0 is the point mass at 0."""
    out = np.empty(shapes.size)
    for i, k in enumerate(shapes):
        if k == 0.0:
            out[i] = f.value(0.0)
            continue
        z, w = _laguerre(nodes, float(k) - 1.0)
        out[i] = float(np.dot(w, f.eval(gt * z)))
    return out


def _series_parts(params: Params, f: TestFunction, t: float, x: float, quad: QuadratureSpec, nodes: int):
    _check_xt(x, t)
    if t < quad.t_floor:
        raise DomainError(f"t={t} below t_floor={quad.t_floor}")
    gt = params.gamma * t
    s = x / gt
    m_max = _series_window(s, quad.series_budget)
    m = np.arange(m_max + 1, dtype=float)
    with np.errstate(divide="ignore"):
        logpois = m * math.log(s) - s - gammaln(m + 1.0) if s > 0 else np.where(m == 0, 0.0, -np.inf)
    pois = np.exp(logpois)
    shapes = np.arange(m_max + 2, dtype=float) + params.beta
    e = _gamma_expectations(f, gt, shapes, nodes)
    return gt, s, m, pois, e


def apply_series(params: Params, f: TestFunction, t: float, x: float, quad: QuadratureSpec = DEFAULT_QUAD, nodes: int = 200) -> float:
    """Oracle: Poisson mixture of Gamma(m + b/gamma) laws, each by Gauss-Laguerre."""
    _, _, _, pois, e = _series_parts(params, f, t, x, quad, nodes)
    return float(np.dot(pois, e[:-1]))


def derivative_series(params: Params, f: TestFunction, t: float, x: float, quad: QuadratureSpec = DEFAULT_QUAD, nodes: int = 200) -> float:
    """Oracle for ``(P_t f)'``: ``sum_m pois_m (E_{m+beta+1} - E_{m+beta}) / (gamma t)``."""
    gt, _, _, pois, e = _series_parts(params, f, t, x, quad, nodes)
    return float(np.dot(pois, np.diff(e))) / gt


def x_second_derivative_series(params: Params, f: TestFunction, t: float, x: float, quad: QuadratureSpec = DEFAULT_QUAD, nodes: int = 200) -> float:
    """Oracle for ``x (P_t f)''`` in summed-by-parts form ``sum_m (m - s) pois_m D_m / (gamma t)``."""
    gt, s, m, pois, e = _series_parts(params, f, t, x, quad, nodes)
    return float(np.dot((m - s) * pois, np.diff(e))) / gt


# ---------------------------------------------------------------------------
# Moments
# ---------------------------------------------------------------------------

MAX_MOMENT = 12


def translated_moment(params: Params, x: float, t: float, k: int) -> float:
    """``int p(x, y, t) (y - x)^k dy`` (atom included) by exact recursion over drift shifts.

    ``M_j(k+1) = (b + j gamma) t M_{j+1}(k) + x (M_{j+2}(k) - M_j(k))``
    where ``M_j`` refers to the kernel with drift ``b + j gamma``. Grouping
    the two ``x`` terms avoids cancelling quantities of size ``x``.
    """
    _check_xt(x, t)
    if not (isinstance(k, (int, np.integer)) and 0 <= k <= MAX_MOMENT):
        raise DomainError(f"k must be an integer in [0, {MAX_MOMENT}], got {k}")
    g, b = params.gamma, params.b
    width = 2 * k + 1
    row = [1.0] * width
    for _ in range(k):
        row = [(b + j * g) * t * row[j + 1] + x * (row[j + 2] - row[j]) for j in range(len(row) - 2)]
    return float(row[0])


def abs_moment_bound_check(params: Params, x: float, t: float, quad: QuadratureSpec = DEFAULT_QUAD):
    """``(int p |y - x| dy, sqrt(2 gamma t x + t^2 b (b + gamma)))``."""
    _check_xt(x, t)
    rhs = math.sqrt(2.0 * params.gamma * t * x + t * t * params.b * (params.b + params.gamma))
    if params.b == 0.0 and x == 0.0:
        return 0.0, rhs
    lhs = float(expect(params, x, t, lambda y: np.abs(y - x), quad, y_breaks=[x])[0])
    return lhs, rhs


# ---------------------------------------------------------------------------
# Strong continuity and far field
# ---------------------------------------------------------------------------

def strong_continuity_bound(params: Params, f: TestFunction, t: float, M: float) -> float:
    """``min_delta L delta + 2 ||f|| V / delta`` with ``V = sqrt(2 gamma t M + t^2 b (b + gamma))``.

    The minimum is ``2 sqrt(2 L ||f|| V)``; for ``L = 0`` it is zero.
    """
    if f.lipschitz is None:
        raise ContractError(f"{f.name} has no Lipschitz constant")
    V = math.sqrt(2.0 * params.gamma * t * M + t * t * params.b * (params.b + params.gamma))
    return 2.0 * math.sqrt(2.0 * f.lipschitz * f.sup_norm * V)


def strong_continuity_defect(
    params: Params, f: TestFunction, t: float, x_grid: Sequence[float], quad: QuadratureSpec = DEFAULT_QUAD
) -> float:
    """``max_x |P_t f(x) - f(x)|`` over ``x_grid``."""
    if len(x_grid) == 0:
        raise DomainError("x_grid must be nonempty")
    return max(abs(apply(params, f, t, float(x), quad) - f.value(x)) for x in x_grid)


def far_field_bound(params: Params, f: TestFunction, t: float, x: float) -> float:
    """Decay bound for ``|P_t f(x)|`` when ``supp f`` lies in ``[0, M]`` and ``x > 9M``."""
    M = f.support_bound
    gt = params.gamma * t
    if params.b == 0.0:
        A, expo = 1.0, 0.25
    else:
        A, expo = params.beta + 1.0, 0.5 * params.beta + 0.25
    C = bessel_series_constant(A)
    r = math.sqrt(x * M)
    log_main = (
        math.log(C * f.sup_norm)
        - (x - 2.0 * r) / gt
        + expo * math.log(M / x)
        + 0.5 * math.log(gt / M)
    )
    factor = 1.0 + math.exp(C * gt / (2.0 * r)) * gt / r
    return math.exp(log_main) * factor


def far_field_decay_check(
    params: Params, f: TestFunction, t: float, x: float, quad: QuadratureSpec = DEFAULT_QUAD
):
    """``(|P_t f(x)|, bound)`` for compactly supported ``f`` and ``x > 9M``."""
    M = f.support_bound
    if M is None:
        raise ContractError(f"{f.name} has no support bound")
    if not x > 9.0 * M:
        raise DomainError(f"x={x} must exceed 9M={9.0 * M}")
    _check_xt(x, t)
    # the value is tiny, so request relative accuracy rather than absolute
    val = expect(params, x, t, f.eval, quad.with_tol(1e-300), y_breaks=f.breakpoints, rel_tol=1e-8, y_max=M)[0]
    return abs(float(val)), far_field_bound(params, f, t, x)
