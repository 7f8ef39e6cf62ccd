"""
Containment parameter k_c and fractional k(t) curves.

w-bar decays near-geometrically in k, so fractional crossings are read off
by linear interpolation of log w-bar between consecutive integers.
"""
import bisect
import logging
import math
from dataclasses import dataclass

import pandas as pd

from .conf import get_setting
from .dp import wbar_curve
from .exceptions import ConfigInvalid, InsufficientPoints, InvalidSize, TargetUnreachable

logger = logging.getLogger(__name__)

# 31 days of a worm host scanning 10,188 addresses per hour
MONTH_SCANS_PER_NODE = 31 * 24 * 10188


@dataclass(frozen=True)
class KcResult:
    """Least integer k with w-bar(k) <= target, and the fractional crossing."""

    k: int
    k_frac: float
    wbar_at_k: float
    wbar_before: float
    already_below: bool = False

    def to_dict(self):
        return {
            'k': self.k,
            'k_frac': self.k_frac,
            'wbar_at_k': self.wbar_at_k,
            'wbar_before': self.wbar_before,
            'already_below': self.already_below,
        }


@dataclass(frozen=True)
class KCurvePoint:
    t: float
    k_frac: float
    tbud: int = 0


def _ceiling(tbud, ceiling):
    if ceiling is not None:
        return int(ceiling)
    factor = get_setting('KC_CEILING_FACTOR')
    return max(2, int(math.ceil(factor * (1.0 + math.log2(tbud)))))


def _fractional(k, w_before, w_at, target):
    """Crossing of log w-bar = log target between k-1 and k."""
    if w_at <= 0.0:
        return float(k)
    lo, hi, lt = math.log(w_before), math.log(w_at), math.log(target)
    if lo == hi:
        return float(k)
    frac = (k - 1) + (lo - lt) / (lo - hi)
    return min(float(k), max(float(k - 1), frac))


def _crossing(values, target):
    """Index (0-based) of the first value <= target in a nonincreasing list, or None."""
    negated = [-v for v in values]
    idx = bisect.bisect_left(negated, -target)
    return idx if idx < len(values) else None


def solve_crossing(tbud, params, rate, target=0.5, ceiling=None, start=8):
    """
    Least k with w-bar(k, tbud) <= target.

    Grows k_max geometrically (each step one DP pass yields every k up to
    k_max), then binary-searches the monotone curve.

    Returns:
        KcResult
    """
    if int(tbud) != tbud or tbud < 1:
        raise InvalidSize(f"tbud must be a positive integer, got {tbud}")
    if not 0.0 < target < 1.0:
        raise ConfigInvalid(f"target must lie in (0, 1), got {target}")
    tbud = int(tbud)
    limit = _ceiling(tbud, ceiling)

    k_max = min(max(2, start), limit)
    while True:
        values = [w for _, w in wbar_curve(k_max, tbud, params, rate)]
        idx = _crossing(values, target)
        if idx is not None:
            break
        if k_max >= limit:
            logger.warning(f"w-bar never reaches {target} for k <= {limit} at tbud={tbud}")
            raise TargetUnreachable(
                f"w-bar({limit}, {tbud}) = {values[-1]} is still above {target}",
                ceiling=limit,
            )
        k_max = min(2 * k_max, limit)
        logger.debug(f"Widening k search to {k_max} at tbud={tbud}")

    if idx == 0:
        return KcResult(k=1, k_frac=1.0, wbar_at_k=values[0], wbar_before=1.0, already_below=True)
    k = idx + 1
    return KcResult(
        k=k,
        k_frac=_fractional(k, values[idx - 1], values[idx], target),
        wbar_at_k=values[idx],
        wbar_before=values[idx - 1],
    )


def k_c(tbud, params, rate, target=0.5, ceiling=None):
    """
    Containment parameter: least integer k with w-bar(k, tbud) <= target
    (0.5 by default) plus its fractional refinement.

    When w-bar(1, tbud) is already below the target the result is k=1 with
    already_below set.
    """
    result = solve_crossing(tbud, params, rate, target=target, ceiling=ceiling)
    logger.info(f"k_c at tbud={tbud}: k={result.k}, k_frac={result.k_frac:.4f}")
    return result


def k_curve(t_values, params, rate, target, ceiling=None):
    """
    Fractional k(t) with w-bar(k, round(2^t)) = target for each t.

    Returns:
        list of KCurvePoint in the order of t_values
    """
    points = []
    start = 8
    for t in t_values:
        if t < 0:
            raise ConfigInvalid(f"t must be nonnegative, got {t}")
        tbud = max(1, int(round(2.0 ** t)))
        result = solve_crossing(tbud, params, rate, target=target, ceiling=ceiling, start=start)
        start = result.k + 4
        points.append(KCurvePoint(t=float(t), k_frac=result.k_frac, tbud=tbud))
        logger.info(f"k({t}) = {result.k_frac:.4f} (tbud={tbud})")
    return points


def curve_frame(curve):
    """Curve as a DataFrame with columns t, k_frac, diff."""
    frame = pd.DataFrame({
        't': [point.t for point in curve],
        'k_frac': [point.k_frac for point in curve],
    })
    frame['diff'] = frame['k_frac'].diff()
    return frame


def _last_slope(curve):
    if len(curve) < 2:
        raise InsufficientPoints(f"extrapolation needs at least 2 points, got {len(curve)}")
    prev, last = curve[-2], curve[-1]
    if last.t == prev.t:
        raise InsufficientPoints("the last two points share the same t")
    return (last.k_frac - prev.k_frac) / (last.t - prev.t), last


def extrapolate_k(curve, t_prime):
    """
    Linear extrapolation with the last difference kappa:
    (t' - t_last) kappa + k(t_last).
    """
    kappa, last = _last_slope(curve)
    if t_prime < last.t:
        raise ConfigInvalid(f"t' = {t_prime} is before the last point t = {last.t}")
    return (t_prime - last.t) * kappa + last.k_frac


def extrapolate_k_realtime(curve, moves_per_node=MONTH_SCANS_PER_NODE, tol=1e-9, max_iter=200):
    """
    Extrapolate k when the budget grows with k itself.

    Every compromised node moves in parallel, so a window allowing
    `moves_per_node` moves per node gives T_bud = moves_per_node * k. The
    fixed point of k = (log2(moves_per_node * k) - t_last) kappa + k(t_last)
    is found by iteration.
    """
    kappa, last = _last_slope(curve)
    k = max(last.k_frac, 1.0)
    for _ in range(max_iter):
        updated = (math.log2(moves_per_node * k) - last.t) * kappa + last.k_frac
        if updated <= 0:
            raise ConfigInvalid("real-time extrapolation left the positive range")
        if abs(updated - k) < tol:
            return updated
        k = updated
    logger.warning(f"Real-time extrapolation did not settle after {max_iter} iterations")
    return k
