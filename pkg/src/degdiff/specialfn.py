r"""Special functions behind the degenerate-diffusion kernels.

Everything here is built on one primitive, the entire series

.. math::
    S(a, u) = \sum_{m \ge 0} \frac{u^m}{m!\,\Gamma(m+a)}
            = u^{-(a-1)/2} I_{a-1}(2\sqrt{u}),

which is evaluated in the exponentially scaled form
:math:`\tilde S(a, u) = e^{-2\sqrt u} S(a, u)` (see :func:`scaled_series_S`).
The modified Bessel function follows from
:math:`e^{-x} I_\nu(x) = (x/2)^\nu \tilde S(\nu + 1, x^2/4)`.

Small arguments use the power series, large arguments the Hankel
asymptotic expansion; the crossover sits at ``2*sqrt(u) = X_SWITCH``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BudgetExceededError, DomainError

X_SWITCH = 30.0
S_BIG = 500.0

_HALF_LN_2PI = 0.91893853320467274178
# fdlibm split of ln 2: the high part has trailing zero bits so e*LN2_HI is exact.
_LN2_HI = 6.93147180369123816490e-01
_LN2_LO = 1.90821492927058770002e-10

_LANCZOS_G = 7.0
_LANCZOS_P = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
# B_{2k} / (2k (2k-1)) for the Stirling correction series.
_STIRLING = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
)
_STIRLING_MIN = 15.0


class LogScaled(NamedTuple):
    """A positive quantity stored as ``mantissa * exp(log_scale)``."""

    mantissa: float
    log_scale: float

    @property
    def value(self) -> float:
        if self.mantissa == 0.0:
            return 0.0
        return math.exp(math.log(self.mantissa) + self.log_scale)

    @property
    def log(self) -> float:
        return math.log(self.mantissa) + self.log_scale if self.mantissa > 0 else -math.inf


class BoundCheck(NamedTuple):
    """Both sides of an inequality ``lhs <= rhs``, each times ``exp(log_scale)``."""

    lhs: float
    rhs: float
    log_scale: float = 0.0

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else math.inf


@dataclass(frozen=True)
class SeriesResult:
    value: float
    terms_used: int
    tail_bound: float


# ---------------------------------------------------------------------------
# Gamma function
# ---------------------------------------------------------------------------

def _two_product(a, b):
    """Dekker's error-free product: a*b == p + e exactly."""
    p = a * b
    c = 134217729.0 * a
    a_hi = c - (c - a)
    a_lo = a - a_hi
    c = 134217729.0 * b
    b_hi = c - (c - b)
    b_lo = b - b_hi
    e = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return p, e


def _neumaier(terms):
    total = np.zeros_like(terms[0])
    comp = np.zeros_like(terms[0])
    for t in terms:
        s = total + t
        big = np.abs(total) >= np.abs(t)
        comp = comp + np.where(big, (total - s) + t, (t - s) + total)
        total = s
    return total + comp


def _stirling_pieces(a):
    # (a - 1/2) ln a - a + ln sqrt(2 pi) + corrections, with the two large
    # products carried exactly so the cancellation against -a stays clean.
    m, e = np.frexp(a)
    ln_m = np.log(m)
    e = e.astype(float)
    h = a - 0.5
    p1, e1 = _two_product(h, e * _LN2_HI)
    p2, e2 = _two_product(h, ln_m + e * _LN2_LO)
    inv = 1.0 / a
    inv2 = inv * inv
    series = np.zeros_like(a)
    for c in reversed(_STIRLING):
        series = series * inv2 + c
    series = series * inv
    return [p1, -a, p2, np.full_like(a, _HALF_LN_2PI), series, e1, e2]


def _lgamma_stirling(a):
    pieces = _stirling_pieces(a)
    if a.size == 1:
        return np.array([math.fsum(float(p[0]) for p in pieces)])
    return _neumaier(pieces)


def _lgamma_lanczos(a):
    # Valid for a >= 0.5.
    z = a - 1.0
    acc = np.full_like(a, _LANCZOS_P[0])
    for i in range(1, len(_LANCZOS_P)):
        acc = acc + _LANCZOS_P[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LN_2PI + (z + 0.5) * np.log(t) - t + np.log(acc)


def log_gamma(a):
    """Natural log of the gamma function for positive arguments.

    Lanczos approximation (g=7, nine terms) below 15 with the reflection
    formula under 1/2, and a Stirling series with error-free products above.
    Accepts a float or an array.
    """
    arr = np.asarray(a, dtype=float)
    if np.any(~(arr > 0)) or np.any(~np.isfinite(arr)):
        raise DomainError("log_gamma requires finite a > 0")
    flat = np.atleast_1d(arr).ravel()
    out = np.empty_like(flat)
    big = flat >= _STIRLING_MIN
    mid = (~big) & (flat >= 0.5)
    small = flat < 0.5
    if big.any():
        out[big] = _lgamma_stirling(flat[big])
    if mid.any():
        out[mid] = _lgamma_lanczos(flat[mid])
    if small.any():
        z = flat[small]
        # Gamma(z) Gamma(1-z) = pi / sin(pi z), and sin(pi z) > 0 on (0, 1/2).
        out[small] = np.log(np.pi / np.sin(np.pi * z)) - _lgamma_lanczos(1.0 - z)
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def rgamma(a: float) -> float:
    """1/Gamma(a) for a >= 0 (zero at the pole a = 0)."""
    if a == 0.0:
        return 0.0
    return math.exp(-log_gamma(a))


# ---------------------------------------------------------------------------
# The series S(a, s) and the scaled Bessel function
# ---------------------------------------------------------------------------

def series_S(a: float, s: float, tol: float = 1e-15, max_terms: int = 100_000) -> SeriesResult:
    """Sum ``S(a, s) = sum_m s^m / (m! Gamma(m+a))`` directly.

    Terms are added with ``math.fsum``. Summation stops once the terms are
    past their maximum (ratio below one) and the geometric tail bound is at
    most ``tol``; ``tail_bound`` is that bound.
    """
    if not (a > 0) or not math.isfinite(a):
        raise DomainError("series_S requires a > 0")
    if not (s >= 0) or not math.isfinite(s):
        raise DomainError("series_S requires finite s >= 0")
    if not tol > 0:
        raise DomainError("tol must be positive")
    term = rgamma(a)
    if s == 0.0:
        return SeriesResult(term, 1, 0.0)
    terms = [term]
    m = 0
    while True:
        ratio = s / ((m + 1) * (m + a))
        term *= ratio
        m += 1
        terms.append(term)
        next_ratio = s / ((m + 1) * (m + a))
        if next_ratio < 1.0:
            # ratios decrease monotonically from here on
            tail = term * next_ratio / (1.0 - next_ratio)
            if tail <= tol:
                return SeriesResult(math.fsum(terms), m + 1, tail)
        if m + 1 >= max_terms:
            partial = SeriesResult(math.fsum(terms), m + 1, math.inf)
            raise BudgetExceededError(f"series_S({a}, {s}) not converged in {max_terms} terms", partial)


def _series_terms_needed(umax: float) -> int:
    r = math.sqrt(umax)
    return int(2.0 * r + 10.0 * math.sqrt(r) + 30.0)


def _scaled_S_series(a: float, u: np.ndarray) -> np.ndarray:
    n_terms = _series_terms_needed(float(u.max()) if u.size else 0.0)
    m = np.arange(n_terms, dtype=float)
    coef = -log_gamma(m + 1.0) - log_gamma(m + a)
    with np.errstate(divide="ignore"):
        log_u = np.log(u)
    expo = np.empty((u.size, n_terms))
    expo[:, 0] = 0.0  # u**0 == 1 also at u == 0
    with np.errstate(invalid="ignore"):
        expo[:, 1:] = np.outer(log_u, m[1:])
    expo += coef[None, :] - 2.0 * np.sqrt(u)[:, None]
    return np.exp(expo).sum(axis=1)


def _bessel_scaled_asymptotic(nu: float, x: np.ndarray) -> np.ndarray:
    """Hankel expansion of exp(-x) I_nu(x), truncated at the smallest term."""
    mu = 4.0 * nu * nu
    term = np.ones_like(x)
    total = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 200):
        new = -term * (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        growing = np.abs(new) >= np.abs(term)
        active &= ~growing
        total = np.where(active, total + new, total)
        term = new
        active &= np.abs(new) > 1e-17 * np.abs(total)
        if not active.any():
            break
    return total / np.sqrt(2.0 * np.pi * x)


def _switch_point(nu: float) -> float:
    # The fixed crossover is validated for |nu| <= 6; larger orders need the
    # series further out before the Hankel expansion is accurate.
    return max(X_SWITCH, nu * nu)


def scaled_series_S(a: float, u):
    r"""``exp(-2 sqrt(u)) * S(a, u)`` for ``a >= 0`` and ``u >= 0`` (array-aware).

    ``a = 0`` uses ``S(0, u) = u S(2, u)``.
    """
    if not (a >= 0):
        raise DomainError("scaled_series_S requires a >= 0")
    arr = np.asarray(u, dtype=float)
    flat = np.atleast_1d(arr).ravel()
    if np.any(flat < 0):
        raise DomainError("scaled_series_S requires u >= 0")
    if a == 0.0:
        out = flat * scaled_series_S(2.0, flat)
    else:
        out = np.empty_like(flat)
        x = 2.0 * np.sqrt(flat)
        near = x <= _switch_point(a - 1.0)
        if near.any():
            out[near] = _scaled_S_series(a, flat[near])
        far = ~near
        if far.any():
            nu = a - 1.0
            out[far] = np.exp(-0.5 * nu * np.log(flat[far])) * _bessel_scaled_asymptotic(nu, x[far])
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def bessel_i_scaled(nu: float, x):
    """Exponentially scaled modified Bessel function ``exp(-x) I_nu(x)``.

    Defined for ``nu >= -1`` and ``x >= 0``; ``nu = -1`` is ``I_1``. At
    ``x = 0`` with ``-1 < nu < 0`` the function is infinite.
    """
    if not (nu >= -1.0) or not math.isfinite(nu):
        raise DomainError("bessel_i_scaled requires nu >= -1")
    arr = np.asarray(x, dtype=float)
    flat = np.atleast_1d(arr).ravel()
    if np.any(~(flat >= 0)):
        raise DomainError("bessel_i_scaled requires x >= 0")
    if nu == -1.0:
        nu = 1.0
    out = np.empty_like(flat)
    near = flat <= _switch_point(nu)
    if near.any():
        xn = flat[near]
        with np.errstate(divide="ignore"):
            pref = np.power(0.5 * xn, nu)
        out[near] = pref * scaled_series_S(nu + 1.0, 0.25 * xn * xn)
    far = ~near
    if far.any():
        out[far] = _bessel_scaled_asymptotic(nu, flat[far])
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


# ---------------------------------------------------------------------------
# Explicit-constant sums and integrals
# ---------------------------------------------------------------------------

def _check_positive(s: float) -> None:
    if not (s > 0) or not math.isfinite(s):
        raise DomainError("s must be a finite positive number")


def _poisson_window(s: float) -> np.ndarray:
    return np.arange(0.0, math.ceil(s + 12.0 * math.sqrt(s) + 40.0) + 1.0)


def _expm1_minus_x(s: float) -> float:
    """e^s - 1 - s without cancellation for small s."""
    if s > 0.1:
        return math.expm1(s) - s
    term = 0.5 * s * s
    total = 0.0
    k = 2
    while term > 1e-18 * (total + term):
        total += term
        k += 1
        term *= s / k
    return total + term


def _scaled_sum(log_terms: np.ndarray) -> float:
    return math.fsum(np.exp(log_terms).tolist())


def weighted_abs_sum(s: float):
    r"""``sum_{m>=0} |m - s| s^m / (m+1)!``.

    Returns a float for ``s <= S_BIG`` and a :class:`LogScaled` with
    ``log_scale = s`` (the mantissa is ``e^{-s}`` times the sum) above it.
    """
    _check_positive(s)
    m = _poisson_window(s)
    # e^{-s} s^m / (m+1)!  ==  Poisson(m+1; s) / s
    with np.errstate(divide="ignore"):
        log_terms = m * math.log(s) - s - log_gamma(m + 2.0) + np.log(np.abs(m - s))
    mantissa = _scaled_sum(log_terms[np.isfinite(log_terms)])
    if s > S_BIG:
        return LogScaled(mantissa, s)
    return mantissa * math.exp(s)


def weighted_abs_sum_bound(s: float, delta: float) -> LogScaled:
    r"""Right-hand side ``delta (e^s-1)/s + (e^s-2-s+(e^s-1)/s)/delta``, scaled by ``e^{-s}``."""
    _check_positive(s)
    if not delta > 0:
        raise DomainError("delta must be positive")
    # e^s - 2 - s + (e^s - 1)/s == (e^s - 1 - s)(1 + 1/s)
    if s > S_BIG:
        em1 = -math.expm1(-s)
        em1x = em1 - s * math.exp(-s)
        scale = s
    else:
        em1 = math.expm1(s)
        em1x = _expm1_minus_x(s)
        scale = 0.0
    return LogScaled(delta * em1 / s + em1x * (1.0 + 1.0 / s) / delta, scale)


def weighted_abs_sum_check(s: float, delta: float | None = None) -> BoundCheck:
    """Compare :func:`weighted_abs_sum` with its bound (``delta = sqrt(s)`` by default)."""
    if delta is None:
        delta = math.sqrt(s)
    value = weighted_abs_sum(s)
    bound = weighted_abs_sum_bound(s, delta)
    if isinstance(value, LogScaled):
        return BoundCheck(value.mantissa, bound.mantissa, s)
    return BoundCheck(value, bound.mantissa, 0.0)


def gamma_abs_integral(s: float) -> float:
    r"""``(1/Gamma(s)) int_0^inf e^{-z} z^{s-1} |z - s| dz = 2 s^s e^{-s} / Gamma(s)``."""
    _check_positive(s)
    return math.exp(math.log(2.0) + s * math.log(s) - s - log_gamma(s))


def holder_sum_bound_check(s: float) -> BoundCheck:
    r"""``sum_{m>=1} s^m/m! |s-m| m^{-1/2}`` against ``sqrt(2) e^s``.

    Both sides are reported times ``e^{-s}`` when ``s > S_BIG``.
    """
    _check_positive(s)
    m = _poisson_window(s)[1:]
    with np.errstate(divide="ignore"):
        log_terms = m * math.log(s) - s - log_gamma(m + 1.0) + np.log(np.abs(s - m)) - 0.5 * np.log(m)
    lhs = _scaled_sum(log_terms[np.isfinite(log_terms)])
    if s > S_BIG:
        return BoundCheck(lhs, math.sqrt(2.0), s)
    return BoundCheck(lhs * math.exp(s), math.sqrt(2.0) * math.exp(s), 0.0)


def bessel_series_constant(A: float) -> float:
    r"""``C(A) = max_{a in [0, A]} max{sqrt(pi)|4a^2-8a+3||4a^2-8a-5|, 2|4a^2-8a+3|}``."""
    if not A > 0:
        raise DomainError("A must be positive")
    p = np.polynomial.Polynomial([3.0, -8.0, 4.0])
    q = np.polynomial.Polynomial([-5.0, -8.0, 4.0])
    candidates = [0.0, float(A)]
    for poly in (p, p * q):
        for r in poly.deriv().roots():
            if abs(r.imag) < 1e-12 and 0.0 <= r.real <= A:
                candidates.append(float(r.real))
    best = 0.0
    for a in candidates:
        best = max(best, math.sqrt(math.pi) * abs(p(a) * q(a)), 2.0 * abs(p(a)))
    return best


def series_S_bound_log(a: float, s: float, A: float) -> float:
    r"""Log of ``C e^{2 sqrt s} s^{1/4 - a/2} (1 + e^{C/(2 sqrt s)} / sqrt s)`` with ``C = C(A)``."""
    _check_positive(s)
    C = bessel_series_constant(A)
    r = math.sqrt(s)
    return math.log(C) + 2.0 * r + (0.25 - 0.5 * a) * math.log(s) + float(
        np.logaddexp(0.0, C / (2.0 * r) - 0.5 * math.log(s))
    )


def series_S_bound_check(a: float, s: float, A: float) -> BoundCheck:
    """S(a, s) against its explicit-constant bound, both scaled by S(a, s)."""
    if not 0 < a <= A:
        raise DomainError("need 0 < a <= A")
    log_value = math.log(scaled_series_S(a, s)) + 2.0 * math.sqrt(s)
    return BoundCheck(1.0, math.exp(min(series_S_bound_log(a, s, A) - log_value, 700.0)), log_value)
