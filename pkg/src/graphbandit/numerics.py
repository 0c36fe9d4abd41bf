"""Beta and Binomial distribution functions and Beta/Gamma samplers.

The scalar kernels are compiled with numba so the simulation loop can call
them directly; the public wrappers validate arguments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from numba import njit

from .rng import Stream, next_double

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_CF_EPS = 1e-15
_CF_MAXIT = 200_000
_FPMIN = 1e-300
_SERIES_BAND = 3.0
_SERIES_MAXIT = 1_000_000

#: Largest trial count summed term by term in :func:`binom_cdf`.
BINOM_DIRECT_MAX_N = 1000


@dataclass(frozen=True)
class BetaParams:
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"Beta shapes must be positive, got ({self.alpha}, {self.beta})")


# ------------------------------------------------------------------ log-gamma pieces


@njit(cache=True)
def _stirling_correction(z):
    # lgamma(z) - [(z - 1/2) ln z - z + ln(2 pi)/2], valid for z >= 10.
    zi = 1.0 / z
    z2 = zi * zi
    return zi * (1.0 / 12.0 - z2 * (1.0 / 360.0 - z2 * (1.0 / 1260.0 - z2 * (
        1.0 / 1680.0 - z2 * (1.0 / 1188.0 - z2 * (691.0 / 360360.0 - z2 / 156.0))))))


@njit(cache=True)
def _log_beta_prefactor(a, b, x):
    """ln( x^a (1-x)^b / B(a, b) ) for 0 < x < 1."""
    if a >= 10.0 and b >= 10.0:
        s = a + b
        p = a / s
        # a ln(x/p) + b ln((1-x)/(1-p)) is stationary at p = a/s, so the
        # rounding of p only enters at second order as long as both terms
        # share the same p and the exact difference x - p.
        diff = x - p
        d1 = diff / p
        d2 = -diff / (1.0 - p)
        core = a * math.log1p(d1) if abs(d1) < 0.5 else a * math.log(x / p)
        if abs(d2) < 0.5:
            core += b * math.log1p(d2)
        else:
            core += b * (math.log1p(-x) - math.log1p(-p))
        corr = _stirling_correction(a) + _stirling_correction(b) - _stirling_correction(s)
        return core + 0.5 * math.log(a * (b / s)) - _HALF_LOG_2PI - corr
    base = a * math.log(x) + b * math.log1p(-x)
    if a >= 10.0:
        return (base + (a - 0.5) * math.log1p(b / a) + b * math.log(a + b) - b
                + _stirling_correction(a + b) - _stirling_correction(a) - math.lgamma(b))
    if b >= 10.0:
        return (base + (b - 0.5) * math.log1p(a / b) + a * math.log(a + b) - a
                + _stirling_correction(a + b) - _stirling_correction(b) - math.lgamma(a))
    return base + math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)


@njit(cache=True)
def _beta_continued_fraction(a, b, x):
    # Modified Lentz evaluation of the incomplete-beta continued fraction.
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _FPMIN:
        d = _FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2.0 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = 1.0 + aa / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        step = d * c
        h *= step
        if abs(step - 1.0) < _CF_EPS:
            break
    return h


@njit(cache=True)
def _hypergeometric_series(a, b, x):
    # sum_n (a+b)_n / (a+1)_n x^n, i.e. 2F1(a+b, 1; a+1; x).  Every term is
    # positive, so there is no cancellation to lose digits to.
    term = 1.0
    total = 1.0
    for n in range(_SERIES_MAXIT):
        term *= (a + b + n) * x / (a + 1.0 + n)
        total += term
        if term < total * 1e-17:
            break
    return total


@njit(cache=True)
def regularized_incomplete_beta(a, b, x):
    """I_x(a, b), the Beta(a, b) CDF at x."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    threshold = (a + 1.0) / (a + b + 2.0)
    sd = math.sqrt(a * b / ((a + b) * (a + b) * (a + b + 1.0)))
    if abs(x - threshold) <= _SERIES_BAND * sd:
        # Close to the switch point the continued fraction converges slowly
        # and loses digits when one shape is huge.  The prefactor cannot
        # underflow this near the mode, so the positive series is safe.
        if x <= 0.5:
            return (math.exp(_log_beta_prefactor(a, b, x))
                    * _hypergeometric_series(a, b, x) / a)
        y = 1.0 - x
        xs = 1.0 - y
        front = math.exp(_log_beta_prefactor(a, b, xs))
        value = 1.0 - front * _hypergeometric_series(b, a, y) / b
        value += front / (xs * y) * (x - xs)
        return min(max(value, 0.0), 1.0)
    if x < threshold:
        return math.exp(_log_beta_prefactor(a, b, x)) * _beta_continued_fraction(a, b, x) / a
    # Use the symmetry I_x(a, b) = 1 - I_{1-x}(b, a).  1 - x is generally not
    # representable, and with large shapes the fraction is sensitive to its
    # argument, so evaluate everything at xs = 1 - fl(1 - x) (exact) and
    # carry the exact residual x - xs through the density.
    y = 1.0 - x
    xs = 1.0 - y
    front = math.exp(_log_beta_prefactor(a, b, xs))
    value = 1.0 - front * _beta_continued_fraction(b, a, y) / b
    if xs != x:
        value += front / (xs * y) * (x - xs)
    return min(max(value, 0.0), 1.0)


@njit(cache=True)
def _binom_cdf(n, p, r):
    if r < 0:
        return 0.0
    if r >= n:
        return 1.0
    if p <= 0.0:
        return 1.0
    if p >= 1.0:
        return 0.0
    if n > BINOM_DIRECT_MAX_N:
        return regularized_incomplete_beta(n - r, r + 1.0, 1.0 - p)
    log_odds = math.log(p) - math.log1p(-p)
    log_term = n * math.log1p(-p)
    total = math.exp(log_term)
    for i in range(r):
        log_term += log_odds + math.log((n - i) / (i + 1.0))
        total += math.exp(log_term)
    return min(total, 1.0)


# ------------------------------------------------------------------ samplers


@njit(cache=True)
def standard_normal(s):
    u1 = next_double(s)
    u2 = next_double(s)
    return math.sqrt(-2.0 * math.log1p(-u1)) * math.cos(2.0 * math.pi * u2)


@njit(cache=True)
def gamma_variate(shape, s):
    """Gamma(shape, 1) by squeeze-rejection; shapes below 1 are boosted."""
    boost = 1.0
    if shape < 1.0:
        boost = (1.0 - next_double(s)) ** (1.0 / shape)
        shape += 1.0
    d = shape - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    while True:
        x = standard_normal(s)
        v = 1.0 + c * x
        if v <= 0.0:
            continue
        v = v * v * v
        u = next_double(s)
        x2 = x * x
        if u < 1.0 - 0.0331 * x2 * x2:
            return d * v * boost
        if math.log(u) < 0.5 * x2 + d * (1.0 - v + math.log(v)):
            return d * v * boost


@njit(cache=True)
def beta_variate(a, b, s):
    x = gamma_variate(a, s)
    y = gamma_variate(b, s)
    total = x + y
    if total == 0.0:
        # Both Gammas underflowed (tiny shapes); fall back on the mean split.
        return 1.0 if next_double(s) < a / (a + b) else 0.0
    return x / total


# ------------------------------------------------------------------ public API


def beta_cdf(p: BetaParams, y: float) -> float:
    """CDF of ``Beta(p.alpha, p.beta)`` at ``y``."""
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"y must lie in [0, 1], got {y}")
    return float(regularized_incomplete_beta(float(p.alpha), float(p.beta), float(y)))


def binom_cdf(n: int, p: float, r: int) -> float:
    """``P[Binomial(n, p) <= r]``."""
    if n < 0:
        raise ValueError(f"trial count must be nonnegative, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"success probability must lie in [0, 1], got {p}")
    return float(_binom_cdf(int(n), float(p), int(r)))


def beta_sample(p: BetaParams, rng: Stream) -> float:
    return float(beta_variate(float(p.alpha), float(p.beta), rng.state))


def gamma_sample(shape: float, rng: Stream) -> float:
    if not shape > 0:
        raise ValueError(f"Gamma shape must be positive, got {shape}")
    return float(gamma_variate(float(shape), rng.state))


def beta_binomial_identity_gap(successes: int, failures: int, y: float) -> float:
    """Distance between the two sides of
    ``BetaCDF(S+1, F+1; y) = 1 - BinomCDF(S+F+1, y; S)``."""
    lhs = beta_cdf(BetaParams(successes + 1, failures + 1), y)
    rhs = 1.0 - binom_cdf(successes + failures + 1, y, successes)
    return abs(lhs - rhs)
