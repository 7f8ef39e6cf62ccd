"""
Small-instance ground truth for the winning probability.

forward_w propagates the full state distribution of the chain with
self-loops, closed_form_w evaluates the nested-sum closed form by structured
enumeration, no_selfloop_enumeration walks every path of the reduced chain,
and stagnating_exact_w is the negative-binomial law of the stagnating case.
"""
import itertools
import logging

import numpy as np
from scipy.special import gammaln
from scipy.stats import nbinom

from .chain import alpha, transitions_at
from .conf import get_setting
from .exceptions import InstanceTooLarge, InvalidParams, InvalidSize

logger = logging.getLogger(__name__)


def _check(k, tbud):
    if int(k) != k or k < 1:
        raise InvalidSize(f"k must be a positive integer, got {k}")
    if int(tbud) != tbud or tbud < 0:
        raise InvalidSize(f"tbud must be a nonnegative integer, got {tbud}")


def _check_enumeration(k, tbud):
    max_k = get_setting('ENUMERATION_MAX_K')
    max_tbud = get_setting('ENUMERATION_MAX_TBUD')
    if k > max_k or tbud > max_tbud:
        logger.warning(f"Enumeration refused for k={k}, tbud={tbud}")
        raise InstanceTooLarge(
            f"enumeration is limited to k <= {max_k}, tbud <= {max_tbud} (got k={k}, tbud={tbud})"
        )


def _require_f(rate):
    if rate.is_direct:
        raise InvalidParams("the chain with self-loops needs an f-based learning rate")


def forward_w(k, tbud, params, rate, guard=None):
    """
    Exact w(k, tbud) by forward propagation over states (i, l).

    Levels are truncated at tbud, which is exact since each move raises the
    level by at most one.

    Args:
        k: Attack objective
        tbud: Number of moves
        params: GameParams
        rate: f-based LearningRate
        guard: Maximum allowed k * tbud^2 (defaults to ORACLE_GUARD)

    Returns:
        float: total mass absorbed at progress k
    """
    _check(k, tbud)
    _require_f(rate)
    k, tbud = int(k), int(tbud)
    guard = get_setting('ORACLE_GUARD') if guard is None else guard
    if k * tbud * tbud > guard:
        logger.warning(f"Forward propagation refused for k={k}, tbud={tbud}")
        raise InstanceTooLarge(f"k * tbud^2 = {k * tbud * tbud} exceeds {guard}")
    if tbud == 0:
        return 0.0

    m1, m2, m3, m4 = transitions_at(params, rate, np.arange(tbud + 1))
    state = np.zeros((k, tbud + 2))
    state[0, 0] = 1.0
    absorbed = 0.0
    for step in range(tbud):
        # levels above `step` are still empty
        width = step + 1
        cur = state[:, :width]
        nxt = np.zeros_like(state)
        nxt[:, :width] += cur * m1[:width]
        nxt[:, 1:width + 1] += cur * m4[:width]
        nxt[1:, :width] += cur[:-1] * m2[:width]
        nxt[1:, 1:width + 1] += cur[:-1] * m3[:width]
        absorbed += float(np.sum(cur[-1] * (m2[:width] + m3[:width])))
        state = nxt
    return min(1.0, absorbed)


def _binomial(n, r):
    return np.exp(gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1))


def _selfloop_series(m1_l, g, degree):
    """Coefficients of sum_t C(t+g-1, t) m1^t x^t up to x^degree."""
    t = np.arange(degree + 1, dtype=float)
    return _binomial(t + g - 1, t) * np.power(m1_l, t)


def _compositions(total, parts):
    """All tuples of `parts` nonnegative integers summing to `total`."""
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev, out = -1, []
        for b in bars:
            out.append(b - prev - 1)
            prev = b
        out.append(total + parts - 1 - prev - 1)
        yield tuple(out)


def closed_form_w(k, tbud, params, rate):
    """
    Exact w(k, tbud) from the closed-form nested sums.

    A winning path ends at level L. Its level increments are described by a
    binary vector b_1..b_L (1 = diagonal, 0 = vertical), with B diagonals.
    At level l it takes g_l >= 1 non-self-loop moves (g_l - 1 horizontals
    plus the move leaving the level), with sum(g_l - 1) = k - 1 - B, and
    t_l self-loops placed in C(t_l + g_l - 1, t_l) ways. The self-loop sums
    are a truncated polynomial product bounded by the remaining budget.
    """
    _check(k, tbud)
    _require_f(rate)
    k, tbud = int(k), int(tbud)
    _check_enumeration(k, tbud)
    if tbud == 0:
        return 0.0

    m1, m2, m3, m4 = transitions_at(params, rate, np.arange(tbud + 1))
    total = 0.0
    for L in range(tbud):
        for B in range(min(L, k - 1) + 1):
            for diag in itertools.combinations(range(L), B):
                steps_prob = 1.0
                for level in range(L):
                    steps_prob *= m3[level] if level in diag else m4[level]
                steps_prob *= m2[L] + m3[L]
                if steps_prob == 0.0:
                    continue
                for extra in _compositions(k - 1 - B, L + 1):
                    g = [e + 1 for e in extra]
                    free = tbud - sum(g)
                    if free < 0:
                        continue
                    path = steps_prob
                    for level, e in enumerate(extra):
                        path *= m2[level] ** e
                    poly = np.array([1.0])
                    for level in range(L + 1):
                        poly = np.convolve(poly, _selfloop_series(m1[level], g[level], free))[:free + 1]
                    total += path * float(poly.sum())
    return min(1.0, total)


def stagnating_exact_w(k, tbud, tau, p):
    """
    Exact w under a stagnating rate: the reduced chain advances with
    probability tau*p per move, so w is the negative-binomial CDF
    sum_{T'=k}^{tbud} C(T'-1, k-1) (1-tau p)^(T'-k) (tau p)^k.
    """
    _check(k, tbud)
    if not (0.0 <= tau <= 1.0 and 0.0 <= p <= 1.0):
        raise InvalidParams(f"tau and p must be probabilities (tau={tau}, p={p})")
    q = tau * p
    if tbud < k or q == 0.0:
        return 0.0
    if q >= 1.0:
        return 1.0
    return float(nbinom.cdf(tbud - k, k, q))


def no_selfloop_enumeration(k, tbud, params, rate):
    """
    w-bar by walking every path of the self-loop-free chain that reaches
    progress k from a level at most tbud - 1.
    """
    _check(k, tbud)
    k, tbud = int(k), int(tbud)
    _check_enumeration(k, tbud)
    if tbud == 0:
        return 0.0
    a = [float(alpha(params, rate, level)) for level in range(tbud)]
    g = params.gamma

    def walk(i, level, prob):
        if prob == 0.0 or level >= tbud:
            return 0.0
        horizontal = (1.0 - g) * a[level] * prob
        diagonal = g * a[level] * prob
        vertical = (1.0 - a[level]) * prob
        if i + 1 == k:
            reached = horizontal + diagonal
        else:
            reached = walk(i + 1, level, horizontal) + walk(i + 1, level + 1, diagonal)
        return reached + walk(i, level + 1, vertical)

    return min(1.0, walk(0, 0, 1.0))

