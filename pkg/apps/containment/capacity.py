"""
Capacity regions.

A region (delta, mu, xi) guarantees winning probability at most 2^-s within
a budget of 2^t moves for every (s, t, k) with

    s * delta + t * mu <= k * 1 + xi        (componentwise)
"""
import json
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .exceptions import ConfigInvalid, InfeasibleRegion, InvalidRegime, InvalidZ

logger = logging.getLogger(__name__)

FEASIBILITY_SLACK = 1e-12
VARIANTS = ('stated', 'derived')


@dataclass(frozen=True)
class CapacityRegion:
    delta: Tuple[float, ...]
    mu: Tuple[float, ...]
    xi: Tuple[float, ...]

    def __post_init__(self):
        for name in ('delta', 'mu', 'xi'):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        n = len(self.delta)
        if n < 1 or len(self.mu) != n or len(self.xi) != n:
            raise ConfigInvalid("delta, mu and xi must have the same length >= 1")
        if not all(math.isfinite(v) for v in self.delta + self.mu + self.xi):
            raise ConfigInvalid("region components must be finite")

    @property
    def dimension(self):
        return len(self.delta)

    def arrays(self):
        return np.asarray(self.delta), np.asarray(self.mu), np.asarray(self.xi)

    def contains(self, s, k, t, slack=1e-9):
        d, m, x = self.arrays()
        return bool(np.all(s * d + t * m <= k + x + slack))

    def s_of(self, k, t):
        return s_of(self, k, t)

    def k_of(self, s, t):
        return k_of(self, s, t)

    def to_dict(self):
        return {'delta': list(self.delta), 'mu': list(self.mu), 'xi': list(self.xi)}


@dataclass(frozen=True)
class PiecewiseRegion:
    """
    Two regimes split at s = threshold: `high` applies for s >= threshold,
    `low` for 0 <= s <= threshold.
    """

    threshold: float
    high: CapacityRegion
    low: CapacityRegion

    def region_for(self, s):
        return self.high if s >= self.threshold else self.low

    def s_of(self, k, t):
        candidates = []
        try:
            s_high = s_of(self.high, k, t)
            if s_high >= self.threshold:
                candidates.append(s_high)
        except InfeasibleRegion:
            pass
        if self.threshold > 0:
            try:
                candidates.append(min(s_of(self.low, k, t), self.threshold))
            except InfeasibleRegion:
                pass
        if not candidates:
            raise InfeasibleRegion(f"(k={k}, t={t}) lies outside both regimes")
        return max(candidates)

    def k_of(self, s, t):
        return k_of(self.region_for(s), s, t)

    def to_dict(self):
        return {
            'threshold': self.threshold,
            'high': self.high.to_dict(),
            'low': self.low.to_dict(),
        }


def s_of(region, k, t):
    """
    Largest s >= 0 with s*delta + t*mu <= k + xi.

    Components with delta = 0 only constrain feasibility; components with
    delta < 0 give lower bounds on s. Returns math.inf when no component
    bounds s from above, and 0 when the maximum is negative.
    """
    if isinstance(region, PiecewiseRegion):
        return region.s_of(k, t)
    if k < 0 or t < 0:
        raise ConfigInvalid(f"k and t must be nonnegative (k={k}, t={t})")
    upper, lower = math.inf, -math.inf
    for d, m, x in zip(region.delta, region.mu, region.xi):
        room = k + x - t * m
        if d == 0.0:
            if room < -FEASIBILITY_SLACK:
                raise InfeasibleRegion(f"t*mu = {t * m} exceeds k + xi = {k + x}")
        elif d > 0.0:
            upper = min(upper, room / d)
        else:
            lower = max(lower, room / d)
    if upper < lower:
        raise InfeasibleRegion(f"no s satisfies the region at k={k}, t={t}")
    return max(0.0, upper)


def k_of(region, s, t):
    """Least k satisfying every component: max(0, max_j(s delta_j + t mu_j - xi_j))."""
    if isinstance(region, PiecewiseRegion):
        return region.k_of(s, t)
    d, m, x = region.arrays()
    return max(0.0, float(np.max(s * d + t * m - x)))


def region_powerlaw(gamma, p, d, variant='stated'):
    """
    Capacity region of a learning rate with 1 - f(l) <= d/(l+2)^2.

    With q = 1/ln(gamma/(p d (1-gamma)))::

        delta = (0, q ln2)
        mu    = (gamma ln2/(1-gamma), q ln2 (1 + 1/(1-gamma)))
        xi    = (-gamma/(1-gamma), q(-1/(1-gamma) + ln(1/(1-gamma))))

    variant='derived' uses xi_2 = -q(1/(1-gamma) + ln(1/(1-gamma))), the
    value obtained by taking log2 of the closed-form power-law bound
    directly; it is the more conservative of the two.
    """
    if variant not in VARIANTS:
        raise ConfigInvalid(f"variant must be one of {VARIANTS}")
    if not 0.0 < gamma < 1.0:
        raise InvalidRegime(f"gamma must lie strictly between 0 and 1, got {gamma}")
    if p * d * (1.0 - gamma) >= gamma:
        raise InvalidRegime(f"p d (1-gamma) = {p * d * (1.0 - gamma)} must be below gamma = {gamma}")
    ln2 = math.log(2.0)
    if p * d == 0.0:
        q = 0.0
    else:
        q = 1.0 / math.log(gamma / (p * d * (1.0 - gamma)))
    tail = math.log(1.0 / (1.0 - gamma))
    if variant == 'stated':
        xi2 = q * (-1.0 / (1.0 - gamma) + tail)
    else:
        xi2 = -q * (1.0 / (1.0 - gamma) + tail)
    return CapacityRegion(
        delta=(0.0, q * ln2),
        mu=(gamma * ln2 / (1.0 - gamma), q * ln2 * (1.0 + 1.0 / (1.0 - gamma))),
        xi=(-gamma / (1.0 - gamma), xi2),
    )


def delayed_z(params):
    """z = 1/ln((1 - (1-gamma)(1-(p+h))) / ((1-gamma)p)); 0 when no escape is possible."""
    g, p, h = params.gamma, params.p, params.h
    num = 1.0 - (1.0 - g) * (1.0 - (p + h))
    den = (1.0 - g) * p
    if den == 0.0:
        return 0.0
    if num / den <= 1.0:
        raise InvalidZ(f"log argument {num / den} must exceed 1")
    return 1.0 / math.log(num / den)


def region_delayed(inner, lstar, params, variant='stated'):
    """
    Capacity region of delayed learning built from the region (delta', mu', xi')
    of the post-delay rate.

    For s >= s0 = 1/(z ln2) - ln(2L*)/ln2:
        (delta' + L* ln2 z, mu', xi' - delta' + (L* ln(2L*) z - 1))
    For 0 <= s <= s0:
        (delta', mu', xi' - delta' - (L* + 1))

    variant='derived' uses the shift -(L* ln(2L*) z + 1) in the first regime,
    which is what substituting k* = 1 + z L*(ln(2L*) + s ln2) gives.
    """
    if variant not in VARIANTS:
        raise ConfigInvalid(f"variant must be one of {VARIANTS}")
    if lstar < 1:
        raise InvalidRegime(f"lstar must be at least 1, got {lstar}")
    z = delayed_z(params)
    ln2 = math.log(2.0)
    d, m, x = inner.arrays()
    if z == 0.0:
        threshold = math.inf
    else:
        threshold = 1.0 / (z * ln2) - math.log(2.0 * lstar) / ln2
    if variant == 'stated':
        shift = lstar * math.log(2.0 * lstar) * z - 1.0
    else:
        shift = -(lstar * math.log(2.0 * lstar) * z + 1.0)
    high = CapacityRegion(delta=d + lstar * ln2 * z, mu=m, xi=x - d + shift)
    low = CapacityRegion(delta=d, mu=m, xi=x - d - (lstar + 1.0))
    logger.debug(f"Delayed region: z={z}, threshold s0={threshold}")
    return PiecewiseRegion(threshold=threshold, high=high, low=low)


def compose(regions, s, t):
    """
    a games played simultaneously.

    k_total = sum_i k_of(region_i, s + ln a, t); the shift uses the natural
    log exactly as the composition theorem states it, alongside the 2^-s
    convention everywhere else. prob_bound = 1 - prod_i (1 - 2^-s / a),
    computed independently of the shift.
    """
    a = len(regions)
    if a < 1:
        raise ConfigInvalid("compose needs at least one region")
    if s < 0 or t < 0:
        raise ConfigInvalid(f"s and t must be nonnegative (s={s}, t={t})")
    shifted_s = s + math.log(a)
    k_total = sum(k_of(region, shifted_s, t) for region in regions)
    prob_bound = 1.0 - (1.0 - 2.0 ** (-s) / a) ** a
    return k_total, prob_bound


def tbud_from_realtime(t_seconds, k, delta_seconds):
    """
    Logical budget from real time: at most k moves run in parallel every
    delta seconds, so T_bud <= T k / delta.
    """
    if t_seconds <= 0 or k <= 0 or delta_seconds <= 0:
        raise ConfigInvalid("t_seconds, k and delta_seconds must be positive")
    # float noise is rounded off before the ceiling
    return max(1, math.ceil(round(t_seconds * k / delta_seconds, 9)))


def cost_of_budget(tbud, cost_per_move):
    """Adversary cost of spending tbud moves at cost_per_move each."""
    if tbud < 0 or cost_per_move < 0:
        raise ConfigInvalid("tbud and cost_per_move must be nonnegative")
    return cost_per_move * tbud


def region_to_json(region):
    return json.dumps(region.to_dict())


def region_from_dict(data):
    """Build a CapacityRegion or PiecewiseRegion from its dict form."""
    try:
        if 'threshold' in data:
            return PiecewiseRegion(
                threshold=float(data['threshold']),
                high=region_from_dict(data['high']),
                low=region_from_dict(data['low']),
            )
        return CapacityRegion(delta=data['delta'], mu=data['mu'], xi=data['xi'])
    except (KeyError, TypeError) as exc:
        raise ConfigInvalid(f"malformed region: {exc}") from exc


def region_from_json(text):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"region is not valid JSON: {exc}") from exc
    return region_from_dict(data)
