"""
Deterministic epidemic baseline for random-scanning worms.

dI/dt = beta I (K - I) with beta = scan_rate / N per hour.
"""
import logging
import math

import numpy as np
import pandas as pd

from .exceptions import ConfigInvalid

logger = logging.getLogger(__name__)

MAX_SUBSTEP_HOURS = 0.01
AGREEMENT_RTOL = 1e-6


def logistic(n, k_vuln, scan_rate_per_hour, i0, hours):
    """Closed form I(t) = K / (1 + (K/I0 - 1) e^(-beta K t)); accepts an array of hours."""
    beta = scan_rate_per_hour / n
    t = np.asarray(hours, dtype=float)
    return k_vuln / (1.0 + (k_vuln / i0 - 1.0) * np.exp(-beta * k_vuln * t))


def _rk4_step(infected, dt, beta, k_vuln):
    def rhs(i):
        return beta * i * (k_vuln - i)

    s1 = rhs(infected)
    s2 = rhs(infected + 0.5 * dt * s1)
    s3 = rhs(infected + 0.5 * dt * s2)
    s4 = rhs(infected + dt * s3)
    return infected + dt / 6.0 * (s1 + 2.0 * s2 + 2.0 * s3 + s4)


def epidemic_curve(n, k_vuln, scan_rate_per_hour, i0, hours, step_hours=0.1):
    """
    Integrate the epidemic model with 4th-order Runge-Kutta.

    Output rows are spaced step_hours apart; each row interval is integrated
    in substeps of at most 0.01 h. The logistic closed form is reported next
    to the integrated value and a warning is logged when the two drift apart
    by more than 1e-6 relative.

    Args:
        n: Address space size N
        k_vuln: Vulnerable population K
        scan_rate_per_hour: Probes per infected host per hour
        i0: Initially infected hosts
        hours: Horizon in hours
        step_hours: Output spacing in hours

    Returns:
        DataFrame with columns hour, infected, logistic

    Example:
        >>> frame = epidemic_curve(2**32, 350000, 10188, 1, 30, 1.0)
        >>> frame['infected'].iloc[-1] > 0.99 * 350000
        True
    """
    if n <= 0 or k_vuln <= 0 or hours <= 0 or step_hours <= 0:
        raise ConfigInvalid("n, k_vuln, hours and step_hours must be positive")
    if scan_rate_per_hour < 0:
        raise ConfigInvalid("scan_rate_per_hour must be nonnegative")
    if not 0 < i0 <= k_vuln:
        raise ConfigInvalid(f"i0 must lie in (0, K], got {i0}")

    beta = scan_rate_per_hour / n
    rows = int(math.floor(hours / step_hours + 1e-9))
    grid = np.arange(rows + 1) * step_hours
    if grid[-1] < hours:
        grid = np.append(grid, hours)

    infected = np.empty(len(grid))
    infected[0] = float(i0)
    for idx in range(1, len(grid)):
        span = grid[idx] - grid[idx - 1]
        substeps = max(1, int(math.ceil(span / MAX_SUBSTEP_HOURS - 1e-9)))
        dt = span / substeps
        value = infected[idx - 1]
        for _ in range(substeps):
            value = _rk4_step(value, dt, beta, k_vuln)
        infected[idx] = value

    closed = logistic(n, k_vuln, scan_rate_per_hour, i0, grid)
    drift = float(np.max(np.abs(infected - closed) / np.maximum(closed, 1e-300)))
    if drift > AGREEMENT_RTOL:
        logger.warning(f"RK4 and logistic curves differ by {drift:.3e} relative")
    else:
        logger.debug(f"RK4 and logistic curves agree to {drift:.3e}")

    return pd.DataFrame({'hour': grid, 'infected': infected, 'logistic': closed})


def hours_to_fraction(n, k_vuln, scan_rate_per_hour, i0, fraction):
    """Hours for the logistic curve to reach fraction * K."""
    if not 0.0 < fraction < 1.0:
        raise ConfigInvalid(f"fraction must lie in (0, 1), got {fraction}")
    beta = scan_rate_per_hour / n
    if beta == 0.0 or i0 >= fraction * k_vuln:
        return 0.0 if i0 >= fraction * k_vuln else math.inf
    # K/(1 + (K/I0 - 1) e^{-beta K t}) = fK
    return math.log((k_vuln / i0 - 1.0) * fraction / (1.0 - fraction)) / (beta * k_vuln)
