"""
Defender learning rates.

A learning rate is the detection function f(l): the probability that, with
l attack samples collected, the defender filters the next adversarial move.
Every form accepts scalar or numpy-array levels and also evaluates at
non-integer levels (needed by the c-constant integral).

DirectAlpha is the exception: it fixes the reduced-chain progress
probability alpha(l) = (l+1)^-a directly and has no f.
"""
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Tuple

import numpy as np

from .exceptions import RateSpecError

logger = logging.getLogger(__name__)


def _out(values, like):
    """Return a float for scalar input, an array otherwise."""
    if np.ndim(like) == 0:
        return float(values)
    return values


@dataclass(frozen=True)
class LearningRate:
    """Base class for all learning-rate forms"""

    is_direct = False
    kind = 'base'

    def f(self, l):
        raise NotImplementedError

    def direct_alpha(self, l):
        raise RateSpecError(f"{self.kind} rate defines f(l), not alpha(l)")

    def miss(self, l):
        """1 - f(l), the probability a move goes undetected."""
        return _out(1.0 - np.asarray(self.f(l), dtype=float), l)


@dataclass(frozen=True)
class Stagnating(LearningRate):
    """f(l) = 1 - tau: a fixed fraction tau of moves always goes undetected."""

    tau: float = 0.2
    kind = 'stagnating'

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise RateSpecError(f"tau must lie in [0,1], got {self.tau}")

    def f(self, l):
        return _out(np.full(np.shape(l), 1.0 - self.tau), l)


@dataclass(frozen=True)
class PowerLaw(LearningRate):
    """f(l) = 1 - d / (l + offset)^a"""

    d: float = 1.0
    a: float = 2.0
    offset: float = 2.0
    kind = 'powerlaw'

    def __post_init__(self):
        if self.d < 0 or self.a <= 0 or self.offset < 0:
            raise RateSpecError(f"powerlaw needs d>=0, a>0, offset>=0 (got {self})")
        if self.d > 0 and (self.offset == 0 or self.d / self.offset ** self.a > 1.0):
            raise RateSpecError(
                f"powerlaw with d={self.d}, a={self.a}, offset={self.offset} "
                f"gives f(0) < 0"
            )

    def f(self, l):
        level = np.asarray(l, dtype=float)
        if self.d == 0:
            return _out(np.ones_like(level), l)
        return _out(1.0 - self.d / np.power(level + self.offset, self.a), l)


@dataclass(frozen=True)
class RationalCaseStudy(LearningRate):
    """f(l) = 1 - 1/(l/scale + 1), the signature-generation rate of the worm case study."""

    scale: float = 1000.0
    kind = 'rational'

    def __post_init__(self):
        if self.scale <= 0:
            raise RateSpecError(f"scale must be positive, got {self.scale}")

    def f(self, l):
        level = np.asarray(l, dtype=float)
        return _out(1.0 - 1.0 / (level / self.scale + 1.0), l)


@dataclass(frozen=True)
class Delayed(LearningRate):
    """No detection before L* samples, then the inner rate restarted at L*."""

    lstar: int = 1
    inner: LearningRate = field(default_factory=PowerLaw)
    kind = 'delayed'

    def __post_init__(self):
        if int(self.lstar) != self.lstar or self.lstar < 0:
            raise RateSpecError(f"lstar must be a nonnegative integer, got {self.lstar}")
        if self.inner.is_direct:
            raise RateSpecError("delayed rate needs an f-based inner rate")

    def f(self, l):
        level = np.asarray(l, dtype=float)
        inner = np.asarray(self.inner.f(np.maximum(level - self.lstar, 0.0)), dtype=float)
        return _out(np.where(level < self.lstar, 0.0, inner), l)


@dataclass(frozen=True)
class DirectAlpha(LearningRate):
    """alpha(l) = (l+1)^-a supplied directly, bypassing f."""

    a: float = 1.0
    kind = 'alpha'
    is_direct = True

    def __post_init__(self):
        if self.a <= 0:
            raise RateSpecError(f"alpha exponent must be positive, got {self.a}")

    def f(self, l):
        raise RateSpecError("alpha rate has no detection function f(l)")

    def direct_alpha(self, l):
        level = np.asarray(l, dtype=float)
        return _out(np.power(level + 1.0, -self.a), l)


@dataclass(frozen=True)
class Table(LearningRate):
    """
    Tabulated f(l), index = l starting at 0.

    Between entries the rate is linearly interpolated. Beyond the table the
    tail rule applies: 'hold' keeps the last value, 'powerlaw' continues
    1 - f(l) = d/(l+1)^a fitted through the last two entries.
    """

    values: Tuple[float, ...] = (0.0,)
    tail: str = 'hold'
    source: str = field(default='', compare=False)
    kind = 'table'

    def __post_init__(self):
        object.__setattr__(self, 'values', tuple(float(v) for v in self.values))
        if not self.values:
            raise RateSpecError("table rate needs at least one value")
        if self.tail not in ('hold', 'powerlaw'):
            raise RateSpecError(f"unknown table tail rule '{self.tail}'")
        arr = np.asarray(self.values)
        if np.any(arr < 0) or np.any(arr > 1):
            raise RateSpecError("table values must be probabilities")
        if np.any(np.diff(arr) < 0):
            raise RateSpecError("table values must be nondecreasing in l")

    @property
    def _tail_fit(self):
        """(d, a) of the power-law tail, or None when no decaying fit exists."""
        if self.tail != 'powerlaw' or len(self.values) < 2:
            return None
        l1, l2 = len(self.values) - 2, len(self.values) - 1
        y1, y2 = 1.0 - self.values[l1], 1.0 - self.values[l2]
        if y1 <= 0 or y2 <= 0 or y2 >= y1:
            return None
        a = np.log(y1 / y2) / np.log((l2 + 1.0) / (l1 + 1.0))
        return y2 * (l2 + 1.0) ** a, a

    def f(self, l):
        level = np.asarray(l, dtype=float)
        table = np.asarray(self.values)
        last = len(table) - 1
        inside = np.interp(level, np.arange(len(table)), table)
        fit = self._tail_fit
        if fit is None:
            return _out(inside, l)
        d, a = fit
        with np.errstate(divide='ignore'):
            beyond = 1.0 - d / np.power(level + 1.0, a)
        return _out(np.where(level > last, beyond, inside), l)


@dataclass(frozen=True)
class Shifted(LearningRate):
    """The base rate seen from level offset onwards: f(l + offset)."""

    base: LearningRate = field(default_factory=PowerLaw)
    offset: int = 0
    kind = 'shifted'

    @property
    def is_direct(self):
        return self.base.is_direct

    def f(self, l):
        return _out(self.base.f(np.asarray(l, dtype=float) + self.offset), l)

    def direct_alpha(self, l):
        return _out(self.base.direct_alpha(np.asarray(l, dtype=float) + self.offset), l)


def shifted(rate, offset):
    """
    Rate after `offset` levels have been collected, i.e. l -> f(l + offset).

    A Delayed rate shifted past its threshold is its inner rate (shifted by
    the remainder), which is the post-delay rate used by the delayed-learning
    bound.
    """
    offset = int(offset)
    if offset == 0:
        return rate
    if isinstance(rate, Delayed) and offset >= rate.lstar:
        return shifted(rate.inner, offset - rate.lstar)
    if isinstance(rate, Shifted):
        return shifted(rate.base, rate.offset + offset)
    return Shifted(base=rate, offset=offset)


# --------------------------------------------------------------------------
# Text specs: `stagnating:tau=0.2`, `powerlaw:d=1,a=2,offset=2`,
# `rational:scale=1000`, `delayed:lstar=100,inner=(powerlaw:d=1,a=2,offset=2)`,
# `alpha:a=0.9`, `table:file=PATH,tail=hold`
# --------------------------------------------------------------------------

_NAME = re.compile(r'^\s*([a-z_]+)\s*(?::(.*))?$', re.DOTALL)


def _split_top_level(body):
    """Split on commas that are not inside parentheses."""
    parts, depth, current = [], 0, []
    for ch in body:
        if ch == '(':
            depth += 1
        elif ch == ')':
            depth -= 1
            if depth < 0:
                raise RateSpecError(f"unbalanced parentheses in '{body}'")
        if ch == ',' and depth == 0:
            parts.append(''.join(current))
            current = []
        else:
            current.append(ch)
    if depth != 0:
        raise RateSpecError(f"unbalanced parentheses in '{body}'")
    parts.append(''.join(current))
    return [p.strip() for p in parts if p.strip()]


def _kv(body):
    pairs = {}
    for item in _split_top_level(body or ''):
        key, sep, value = item.partition('=')
        if not sep:
            raise RateSpecError(f"expected key=value, got '{item}'")
        value = value.strip()
        if value.startswith('(') and value.endswith(')'):
            value = value[1:-1]
        pairs[key.strip()] = value
    return pairs


def _number(pairs, key, default=None, cast=float):
    if key not in pairs:
        if default is None:
            raise RateSpecError(f"missing '{key}'")
        return default
    try:
        return cast(pairs.pop(key))
    except ValueError as exc:
        raise RateSpecError(f"'{key}' is not a number") from exc


def load_table(path, tail='hold'):
    """Read a table rate file: one probability per line, index = l from 0."""
    try:
        values = np.loadtxt(Path(path), dtype=float, ndmin=1, comments='#')
    except (OSError, ValueError) as exc:
        raise RateSpecError(f"cannot read table file '{path}': {exc}") from exc
    return Table(values=tuple(values), tail=tail, source=str(path))


def parse_rate(text):
    """
    Parse a learning-rate text spec.

    Args:
        text: Spec such as 'powerlaw:d=1,a=2,offset=2'

    Returns:
        LearningRate instance

    Example:
        >>> parse_rate('delayed:lstar=3,inner=(rational:scale=10)')
        Delayed(lstar=3, inner=RationalCaseStudy(scale=10.0))
    """
    match = _NAME.match(text or '')
    if not match:
        raise RateSpecError(f"malformed rate spec '{text}'")
    name, body = match.group(1), match.group(2)
    pairs = _kv(body)

    if name == 'stagnating':
        rate = Stagnating(tau=_number(pairs, 'tau'))
    elif name == 'powerlaw':
        rate = PowerLaw(
            d=_number(pairs, 'd', 1.0),
            a=_number(pairs, 'a', 2.0),
            offset=_number(pairs, 'offset', 2.0),
        )
    elif name == 'rational':
        rate = RationalCaseStudy(scale=_number(pairs, 'scale'))
    elif name == 'delayed':
        lstar = _number(pairs, 'lstar', cast=int)
        if 'inner' not in pairs:
            raise RateSpecError("delayed rate needs inner=(...)")
        rate = Delayed(lstar=lstar, inner=parse_rate(pairs.pop('inner')))
    elif name == 'alpha':
        rate = DirectAlpha(a=_number(pairs, 'a'))
    elif name == 'table':
        tail = pairs.pop('tail', 'hold')
        if 'file' in pairs:
            rate = load_table(pairs.pop('file'), tail=tail)
        elif 'values' in pairs:
            values = [float(v) for v in pairs.pop('values').split(';') if v.strip()]
            rate = Table(values=tuple(values), tail=tail)
        else:
            raise RateSpecError("table rate needs file=PATH or values=v0;v1;...")
    elif name == 'shifted':
        offset = _number(pairs, 'offset', cast=int)
        if 'base' not in pairs:
            raise RateSpecError("shifted rate needs base=(...)")
        rate = shifted(parse_rate(pairs.pop('base')), offset)
    else:
        raise RateSpecError(f"unknown rate form '{name}'")

    if pairs:
        raise RateSpecError(f"unexpected keys for {name}: {', '.join(sorted(pairs))}")
    logger.debug(f"Parsed rate spec '{text}' -> {rate}")
    return rate


def _fmt(value):
    text = repr(float(value))
    return text[:-2] if text.endswith('.0') else text


def rate_to_spec(rate):
    """Render a rate back to its text spec."""
    if isinstance(rate, Stagnating):
        return f"stagnating:tau={_fmt(rate.tau)}"
    if isinstance(rate, PowerLaw):
        return f"powerlaw:d={_fmt(rate.d)},a={_fmt(rate.a)},offset={_fmt(rate.offset)}"
    if isinstance(rate, RationalCaseStudy):
        return f"rational:scale={_fmt(rate.scale)}"
    if isinstance(rate, Delayed):
        return f"delayed:lstar={rate.lstar},inner=({rate_to_spec(rate.inner)})"
    if isinstance(rate, DirectAlpha):
        return f"alpha:a={_fmt(rate.a)}"
    if isinstance(rate, Table):
        if rate.source:
            return f"table:file={rate.source},tail={rate.tail}"
        return f"table:values={';'.join(_fmt(v) for v in rate.values)},tail={rate.tail}"
    if isinstance(rate, Shifted):
        return f"shifted:offset={rate.offset},base=({rate_to_spec(rate.base)})"
    raise RateSpecError(f"cannot render {rate!r}")
