"""
w-bar(k, T_bud): probability of reaching progress k within T_bud levels of
the self-loop-free chain.

pr[j][i] is the probability of visiting state (progress j, level i):

    pr[j][0] = ((1-gamma) alpha(0))^j
    pr[0][i] = (1 - alpha(i-1)) pr[0][i-1]
    pr[j][i] = (1-gamma) alpha(i) pr[j-1][i]
               + gamma alpha(i-1) pr[j-1][i-1]
               + (1 - alpha(i-1)) pr[j][i-1]

    w-bar(k) = sum_i alpha(i) pr[k-1][i]

Within one column the first term makes pr[.][i] a first-order linear
recurrence in j, solved with scipy.signal.lfilter; columns are rolled so
memory stays O(k).
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .chain import alpha
from .exceptions import InvalidSize

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DPGrid:
    """The dense pr table (k rows, tbud columns) and its w-bar."""

    k: int
    tbud: int
    pr: np.ndarray
    wbar: float

    def column_mass(self):
        """Sum over progress rows of each level column."""
        return self.pr.sum(axis=0)


def _check_size(k, tbud):
    if int(k) != k or k < 1:
        raise InvalidSize(f"k must be a positive integer, got {k}")
    if int(tbud) != tbud or tbud < 1:
        raise InvalidSize(f"tbud must be a positive integer, got {tbud}")


def alpha_vector(params, rate, n):
    """alpha(0), ..., alpha(n-1) as an array."""
    return np.asarray(alpha(params, rate, np.arange(n, dtype=float)), dtype=float)


def _next_column(prev, a_prev, a_here, gamma):
    """Column i from column i-1."""
    b = (1.0 - a_prev) * prev
    b[1:] += gamma * a_prev * prev[:-1]
    return lfilter([1.0], [1.0, -(1.0 - gamma) * a_here], b)


def wbar_curve(k_max, tbud, params, rate):
    """
    w-bar(k, tbud) for k = 1..k_max from a single DP pass.

    Args:
        k_max: Largest attack objective
        tbud: Logical time budget (number of level columns)
        params: GameParams
        rate: LearningRate

    Returns:
        list of (k, probability) tuples
    """
    _check_size(k_max, tbud)
    k_max, tbud = int(k_max), int(tbud)
    gamma = params.gamma
    alphas = alpha_vector(params, rate, tbud)
    logger.debug(f"w-bar DP: k_max={k_max}, tbud={tbud}")

    seed = np.zeros(k_max)
    seed[0] = 1.0
    column = lfilter([1.0], [1.0, -(1.0 - gamma) * alphas[0]], seed)
    acc = alphas[0] * column
    for i in range(1, tbud):
        column = _next_column(column, alphas[i - 1], alphas[i], gamma)
        acc += alphas[i] * column

    values = np.clip(acc, 0.0, 1.0)
    return [(j + 1, float(values[j])) for j in range(k_max)]


def wbar(k, tbud, params, rate):
    """
    w-bar(k, tbud) by the column-rolled dynamic program.

    Example:
        >>> wbar(1, 10, GameParams(gamma=0.5), DirectAlpha(a=1))
        1.0
    """
    return wbar_curve(k, tbud, params, rate)[-1][1]


def wbar_table(k, tbud, params, rate):
    """
    Dense, non-rolled evaluation of the same recurrence, cell by cell.

    Kept as a straightforward second implementation so the rolled DP can be
    cross-checked; returns the full DPGrid.
    """
    _check_size(k, tbud)
    k, tbud = int(k), int(tbud)
    g = params.gamma
    a = alpha_vector(params, rate, tbud)
    pr = np.zeros((k, tbud))

    for j in range(k):
        pr[j][0] = ((1.0 - g) * a[0]) ** j
    for i in range(1, tbud):
        pr[0][i] = (1.0 - a[i - 1]) * pr[0][i - 1]
        for j in range(1, k):
            pr[j][i] = (
                (1.0 - g) * a[i] * pr[j - 1][i]
                + g * a[i - 1] * pr[j - 1][i - 1]
                + (1.0 - a[i - 1]) * pr[j][i - 1]
            )

    total = 0.0
    for i in range(tbud):
        total += a[i] * pr[k - 1][i]
    return DPGrid(k=k, tbud=tbud, pr=pr, wbar=min(1.0, max(0.0, total)))
