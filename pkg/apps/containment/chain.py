"""
The attacker-defender Markov chain.

State (i, l): i is the attacker's progress, l the defender's level (number
of attack samples collected). Each adversarial move from (i, l) is one of

    m1  self-loop    (i,   l)
    m2  horizontal   (i+1, l)      progress, unobserved
    m3  diagonal     (i+1, l+1)    progress, observed
    m4  vertical     (i,   l+1)    no progress, observed

Dropping self-loops leaves the reduced chain with horizontal (1-gamma)alpha,
diagonal gamma*alpha and vertical 1-alpha.
"""
import dataclasses
import numbers
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParams

SUM_TOLERANCE = 1e-12


def _is_probability(value):
    return 0.0 <= value <= 1.0


@dataclass(frozen=True)
class GameParams:
    """
    Per-move success probability p, host-level observation probability h
    and network sampling accuracy gamma.

    p is held constant (the adversary is granted p = sup_i p_i); state
    dependent p_i only appears in the simulators.
    """

    p: float = 1.0
    h: float = 0.0
    gamma: float = 0.5

    def __post_init__(self):
        for name in ('p', 'h', 'gamma'):
            value = getattr(self, name)
            if not isinstance(value, numbers.Real) or not _is_probability(float(value)):
                raise InvalidParams(f"{name} must lie in [0,1], got {value}", field=name)
            object.__setattr__(self, name, float(value))
        if self.p + self.h > 1.0 + SUM_TOLERANCE:
            raise InvalidParams(f"p + h must not exceed 1 (p={self.p}, h={self.h})", field='p')

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class TransitionProbs:
    """Self-loop, horizontal, diagonal and vertical probabilities at one level."""

    m1: float
    m2: float
    m3: float
    m4: float

    def __post_init__(self):
        for name in ('m1', 'm2', 'm3', 'm4'):
            if not _is_probability(getattr(self, name)):
                raise InvalidParams(f"{name}={getattr(self, name)} is not a probability")
        total = self.m1 + self.m2 + self.m3 + self.m4
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise InvalidParams(f"transition probabilities sum to {total}, not 1")

    def as_tuple(self):
        return (self.m1, self.m2, self.m3, self.m4)


def parse_params(text, base=None):
    """
    Parse 'p=..,h=..,gamma=..' into GameParams; omitted keys keep the values
    of `base` (GameParams defaults when not given).

    Example:
        >>> parse_params('gamma=0.05,p=8.15e-5')
        GameParams(p=8.15e-05, h=0.0, gamma=0.05)
    """
    values = {}
    for item in (text or '').split(','):
        if not item.strip():
            continue
        key, sep, raw = item.partition('=')
        key = key.strip()
        if not sep or key not in ('p', 'h', 'gamma'):
            raise InvalidParams(f"expected p=, h= or gamma=, got '{item.strip()}'")
        try:
            values[key] = float(raw)
        except ValueError as exc:
            raise InvalidParams(f"'{key}' is not a number: '{raw}'") from exc
    if base is None:
        return GameParams(**values)
    return base.replace(**values)


def _components(params, f):
    """m1..m4 for detection probability f (scalar or array)."""
    p, h, g = params.p, params.h, params.gamma
    stay = max(0.0, 1.0 - p - h)
    m1 = f * (1 - g) + (1 - f) * (1 - g) * stay
    m2 = (1 - f) * (1 - g) * p
    m3 = (1 - f) * g * p
    m4 = (1 - f) * ((1 - g) * h + g * (1 - p)) + f * g
    return m1, m2, m3, m4


def transitions(params, f_at_l):
    """
    Exact transition probabilities m1..m4 at a level with detection f_at_l.

    Args:
        params: GameParams
        f_at_l: Detection probability f(l) at the current level

    Returns:
        TransitionProbs
    """
    if not _is_probability(f_at_l):
        raise InvalidParams(f"f(l) must lie in [0,1], got {f_at_l}")
    return TransitionProbs(*(float(m) for m in _components(params, float(f_at_l))))


def transitions_at(params, rate, levels):
    """
    Vector form of transitions over an array of levels.

    Returns:
        tuple of four numpy arrays (m1, m2, m3, m4)
    """
    f = np.clip(np.asarray(rate.f(np.asarray(levels, dtype=float)), dtype=float), 0.0, 1.0)
    return tuple(np.asarray(m, dtype=float) for m in _components(params, f))


def alpha(params, rate, l):
    """
    Progress probability of the reduced chain at level l.

    alpha(l) = p(1-f) / (gamma + (1-gamma)(p+h)(1-f)) for f-based rates and
    (l+1)^-a for DirectAlpha. When the denominator vanishes (gamma = 0 and
    (p+h)(1-f) = 0) no progress is possible and alpha is 0.

    Accepts a scalar or an array of levels.
    """
    if rate.is_direct:
        return rate.direct_alpha(l)
    miss = 1.0 - np.asarray(rate.f(np.asarray(l, dtype=float)), dtype=float)
    num = params.p * miss
    den = params.gamma + (1.0 - params.gamma) * (params.p + params.h) * miss
    with np.errstate(divide='ignore', invalid='ignore'):
        value = np.where(den > 0, num / np.where(den > 0, den, 1.0), 0.0)
    value = np.clip(value, 0.0, 1.0)
    if np.ndim(l) == 0:
        return float(value)
    return value


def no_selfloop_split(params, rate, l):
    """(horizontal, diagonal, vertical) = ((1-gamma)alpha, gamma*alpha, 1-alpha) at level l."""
    a = alpha(params, rate, l)
    return ((1.0 - params.gamma) * a, params.gamma * a, 1.0 - a)
