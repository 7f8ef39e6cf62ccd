"""
Analytic bounds on the winning probability.

Every bound returns a probability clamped into [0, 1]; pass clamp=False to
get the raw expression for bound-quality diagnostics.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .conf import get_setting
from .dp import wbar
from .exceptions import (
    BetaNotStrict,
    DegenerateGamma,
    InvalidKstar,
    InvalidParams,
    InvalidV,
    RegimeNotCovered,
)
from .quadrature import adaptive_simpson
from .rates import shifted

logger = logging.getLogger(__name__)


def _clamp(value, clamp):
    if not clamp:
        return value
    if math.isnan(value):
        return 1.0
    return min(1.0, max(0.0, value))


def _exp(log_value):
    """exp that saturates to inf instead of overflowing."""
    if log_value > 709.0:
        return math.inf
    return math.exp(log_value)


def _log(value):
    return math.log(value) if value > 0 else -math.inf


@dataclass(frozen=True)
class SandwichResult:
    """Bracket lower <= w(k, tbud) <= upper."""

    lower: float
    upper: float
    v_used: int
    correction: float = 1.0

    def to_dict(self):
        return {
            'lower': self.lower,
            'upper': self.upper,
            'v_used': self.v_used,
            'correction': self.correction,
        }


@dataclass(frozen=True)
class AnalyticUBInputs:
    """theta, d and the integral constant c of the general upper bound."""

    theta: float
    d: float
    c: float


@dataclass(frozen=True)
class AnalyticBound:
    """Upper bound picked by the two-regime rule for theta."""

    value: float
    raw: float
    regime: str
    loose: bool
    inputs: AnalyticUBInputs

    def to_dict(self):
        return {
            'value': self.value,
            'raw': self.raw,
            'regime': self.regime,
            'loose': self.loose,
            'theta': self.inputs.theta,
            'd': self.inputs.d,
            'c': self.inputs.c,
        }


# ---------------------------------------------------------------------------
# Stagnating learning
# ---------------------------------------------------------------------------

def stagnating_lb(k, tbud, tau, p, clamp=True):
    """
    Lower bound 1 - k(1 - tau p)^(tbud/k) on w when 1 - f(l) >= tau.

    Example:
        >>> round(stagnating_lb(5, 50, 0.3, 1.0), 4)
        0.8588
    """
    if k < 1:
        raise InvalidParams(f"k must be at least 1, got {k}")
    if not (0.0 < tau <= 1.0 and 0.0 < p <= 1.0):
        raise InvalidParams(f"need 0 < tau <= 1 and 0 < p <= 1 (tau={tau}, p={p})")
    raw = 1.0 - k * (1.0 - tau * p) ** (tbud / k)
    return _clamp(raw, clamp)


# ---------------------------------------------------------------------------
# Sandwich
# ---------------------------------------------------------------------------

def sandwich(k, tbud, params, rate, v):
    """
    Bracket the exact w between w-bar at a shrunken budget and w-bar itself.

    upper = w-bar(k, tbud)
    lower = w-bar(k, floor(tbud/v)) * max(0, 1 - (k + tbud/v)(1-gamma)^(v/k))
    """
    if v < k:
        raise InvalidV(f"v must be at least k (v={v}, k={k})")
    upper = wbar(k, tbud, params, rate)
    correction = 1.0 - (k + tbud / v) * (1.0 - params.gamma) ** (v / k)
    shrunk = int(tbud // v)
    if shrunk < 1 or correction <= 0.0:
        lower = 0.0
    else:
        lower = wbar(k, shrunk, params, rate) * correction
    logger.debug(f"Sandwich k={k}, tbud={tbud}, v={v}: [{lower}, {upper}]")
    return SandwichResult(lower=min(lower, upper), upper=upper, v_used=int(v), correction=correction)


def v_for_epsilon(k, tbud, epsilon, gamma):
    """
    Smallest v that keeps the sandwich correction factor at least 1 - epsilon:
    ceil(k ln((tbud + k)/epsilon) / ln(1/(1-gamma))), never below k.
    """
    if gamma <= 0.0 or gamma >= 1.0:
        raise DegenerateGamma(f"gamma must lie strictly between 0 and 1, got {gamma}")
    if not 0.0 < epsilon < 1.0:
        raise InvalidParams(f"epsilon must lie in (0, 1), got {epsilon}")
    v = math.ceil(k * math.log((tbud + k) / epsilon) / math.log(1.0 / (1.0 - gamma)))
    return max(int(k), int(v))


# ---------------------------------------------------------------------------
# Power-law style learning: general and optimized upper bounds
# ---------------------------------------------------------------------------

def _require_f(rate):
    if rate.is_direct:
        raise InvalidParams("analytic bounds need an f-based learning rate")


def beta(rate, d, l):
    """beta(l) = sqrt((1 - f(l)) / d); scalar or array levels."""
    if d <= 0:
        raise InvalidParams(f"d must be positive, got {d}")
    _require_f(rate)
    miss = np.clip(1.0 - np.asarray(rate.f(l), dtype=float), 0.0, None)
    value = np.sqrt(miss / d)
    return float(value) if np.ndim(l) == 0 else value


def _check_theta(theta, gamma):
    if gamma <= 0.0:
        raise DegenerateGamma("the analytic bounds need gamma > 0")
    floor = (1.0 - gamma) / gamma
    if theta < floor * (1.0 - 1e-12):
        raise InvalidParams(f"theta must be at least (1-gamma)/gamma = {floor}, got {theta}")


def analytic_ub_general(k, tbud, params, rate, d, theta, clamp=True):
    """
    (1 + 1/theta) sum_{L<tbud} (theta p d)^k prod_{l<=L} (1 + (1 + 1/theta) beta/(1-beta)).

    Evaluated in log space with a running (cumulative) product.
    """
    _check_theta(theta, params.gamma)
    b = beta(rate, d, np.arange(tbud, dtype=float))
    if np.any(b >= 1.0):
        first = int(np.argmax(b >= 1.0))
        logger.warning(f"beta({first}) = {b[first]} is not below 1")
        raise BetaNotStrict(f"beta(l) >= 1 at l={first}", level=first)
    scale = 1.0 + 1.0 / theta
    log_products = np.cumsum(np.log1p(scale * b / (1.0 - b)))
    log_raw = math.log(scale) + k * _log(theta * params.p * d) + float(logsumexp(log_products))
    return _clamp(_exp(log_raw), clamp)


def c_constant(rate, d, tbud, rtol=None):
    """
    c = integral_0^{tbud-1} beta/(1-beta) dl + beta(0)/(1-beta(0)),
    by adaptive Simpson over the continuous extension of l.
    """
    rtol = get_setting('SIMPSON_RTOL') if rtol is None else rtol
    grid = beta(rate, d, np.arange(max(int(tbud), 1), dtype=float))
    if np.any(grid >= 1.0):
        raise BetaNotStrict("beta(l) >= 1 inside the budget")

    def integrand(l):
        value = beta(rate, d, l)
        if value >= 1.0:
            raise BetaNotStrict(f"beta({l}) >= 1")
        return value / (1.0 - value)

    head = integrand(0.0)
    if tbud <= 1:
        return head
    integral, error = adaptive_simpson(integrand, 0.0, float(tbud - 1), rtol=rtol)
    logger.debug(f"c-constant integral {integral} (error estimate {error})")
    return integral + head


def optimal_theta(k, gamma, c):
    """theta* = max((1-gamma)/gamma, c/k) from the two-regime rule."""
    if gamma <= 0.0:
        raise DegenerateGamma("theta* needs gamma > 0")
    return max((1.0 - gamma) / gamma, c / k)


def _log_optimized(k, tbud, params, d, c):
    g = params.gamma
    return (
        -math.log(1.0 - g)
        + math.log(tbud)
        + c / (1.0 - g)
        + k * _log((1.0 - g) * params.p * d / g)
    )


def analytic_ub_optimized(k, tbud, params, rate, d, clamp=True, c=None):
    """
    (1-gamma)^-1 tbud e^(c/(1-gamma)) ((1-gamma) p d / gamma)^k,
    valid in the regime c <= k (1-gamma)/gamma.
    """
    g = params.gamma
    if g <= 0.0 or g >= 1.0:
        raise DegenerateGamma(f"gamma must lie strictly between 0 and 1, got {g}")
    c = c_constant(rate, d, tbud) if c is None else c
    if c > k * (1.0 - g) / g:
        logger.warning(f"c={c} exceeds k(1-gamma)/gamma={k * (1.0 - g) / g}")
        raise RegimeNotCovered(f"c = {c} > k(1-gamma)/gamma = {k * (1.0 - g) / g}", c=c)
    return _clamp(_exp(_log_optimized(k, tbud, params, d, c)), clamp)


def analytic_ub_powerlaw(k, tbud, params, d, clamp=True):
    """
    Closed form for 1 - f(l) <= d/(l+2)^2:
    e^(1/(1-gamma))/(1-gamma) tbud^(1 + 1/(1-gamma)) ((1-gamma) p d / gamma)^k,
    valid while tbud <= e^(-1 + k(1-gamma)/gamma).
    """
    g = params.gamma
    if g <= 0.0 or g >= 1.0:
        raise DegenerateGamma(f"gamma must lie strictly between 0 and 1, got {g}")
    if math.log(tbud) > -1.0 + k * (1.0 - g) / g:
        raise RegimeNotCovered(f"tbud={tbud} exceeds e^(-1 + k(1-gamma)/gamma)")
    log_raw = (
        1.0 / (1.0 - g)
        - math.log(1.0 - g)
        + (1.0 + 1.0 / (1.0 - g)) * math.log(tbud)
        + k * _log((1.0 - g) * params.p * d / g)
    )
    return _clamp(_exp(log_raw), clamp)


def analytic_ub_loose(k, tbud, params, rate, d, clamp=True, c=None):
    """
    First regime (c/k >= (1-gamma)/gamma, theta = c/k):
    tbud (1 + k/c) (c p d / k)^k e^(k + c). Valid but often far from tight.
    """
    g = params.gamma
    if g <= 0.0:
        raise DegenerateGamma("the analytic bounds need gamma > 0")
    c = c_constant(rate, d, tbud) if c is None else c
    if c <= 0.0 or c / k < (1.0 - g) / g:
        raise RegimeNotCovered(f"c/k = {c / k} is below (1-gamma)/gamma = {(1.0 - g) / g}")
    log_raw = (
        math.log(tbud)
        + math.log1p(k / c)
        + k * _log(c * params.p * d / k)
        + k + c
    )
    return _clamp(_exp(log_raw), clamp)


def analytic_ub(k, tbud, params, rate, d):
    """
    Pick the analytic bound by the two-regime rule on theta* = max((1-gamma)/gamma, c/k).

    Returns:
        AnalyticBound with the regime name and the 'loose' flag set for the
        first regime.
    """
    c = c_constant(rate, d, tbud)
    theta = optimal_theta(k, params.gamma, c)
    inputs = AnalyticUBInputs(theta=theta, d=d, c=c)
    if c <= k * (1.0 - params.gamma) / params.gamma:
        raw = analytic_ub_optimized(k, tbud, params, rate, d, clamp=False, c=c)
        return AnalyticBound(value=_clamp(raw, True), raw=raw, regime='optimized', loose=False, inputs=inputs)
    raw = analytic_ub_loose(k, tbud, params, rate, d, clamp=False, c=c)
    logger.info(f"Analytic bound for k={k}, tbud={tbud} falls in the loose regime (c={c})")
    return AnalyticBound(value=_clamp(raw, True), raw=raw, regime='loose', loose=True, inputs=inputs)


# ---------------------------------------------------------------------------
# Delayed learning
# ---------------------------------------------------------------------------

def _check_delayed(kstar, lstar):
    if lstar < 1:
        raise InvalidKstar(f"lstar must be at least 1, got {lstar}")
    if kstar < lstar + 1:
        raise InvalidKstar(f"kstar must be at least lstar + 1 (kstar={kstar}, lstar={lstar})")


def delayed_ratio(params, simplified=False):
    """
    Per-level escape ratio (1-gamma)p / (1 - (1-gamma)(1-(p+h))), or its
    simplified upper bound (1-gamma)(1-h).
    """
    g, p, h = params.gamma, params.p, params.h
    if simplified:
        return (1.0 - g) * (1.0 - h)
    den = 1.0 - (1.0 - g) * (1.0 - (p + h))
    if den <= 0.0:
        return 0.0
    return (1.0 - g) * p / den


def delayed_u_lb(kstar, lstar, params, simplified=False, clamp=True):
    """
    Lower bound on u(k*, L*), the probability the defender collects L*
    samples before the attacker's progress exceeds k*:
    1 - L* ratio^((k*-1)/L*).
    """
    _check_delayed(kstar, lstar)
    ratio = delayed_ratio(params, simplified=simplified)
    raw = 1.0 - lstar * ratio ** ((kstar - 1) / lstar)
    return _clamp(raw, clamp)


def delayed_u_lb_simplified(kstar, lstar, gamma, h, clamp=True):
    """1 - L* ((1-gamma)(1-h))^((k*-1)/L*)"""
    _check_delayed(kstar, lstar)
    raw = 1.0 - lstar * ((1.0 - gamma) * (1.0 - h)) ** ((kstar - 1) / lstar)
    return _clamp(raw, clamp)


def delayed_w_ub(k, kstar, lstar, tbud, params, rate_after, clamp=True):
    """
    w(k, tbud) <= (1 - u(k*, L*)) + w-bar(k - k*, tbud) under the post-delay
    rate f(l + L*).
    """
    _check_delayed(kstar, lstar)
    if k <= kstar:
        raise InvalidKstar(f"k must exceed kstar (k={k}, kstar={kstar})")
    u = delayed_u_lb(kstar, lstar, params)
    raw = (1.0 - u) + wbar(k - kstar, tbud, params, rate_after)
    return _clamp(raw, clamp)


def delayed_w_ub_for(k, kstar, tbud, params, rate):
    """delayed_w_ub for a Delayed rate, deriving L* and the post-delay rate from it."""
    return delayed_w_ub(k, kstar, rate.lstar, tbud, params, shifted(rate, rate.lstar))
