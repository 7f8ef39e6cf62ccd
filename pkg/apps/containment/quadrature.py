"""
Adaptive Simpson quadrature.

Iterative (explicit stack) so deep subdivisions near steep ends of the
interval cannot hit the recursion limit.
"""
import logging

logger = logging.getLogger(__name__)


def _simpson(fa, fm, fb, width):
    return width / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(func, a, b, rtol=1e-8, max_depth=60, atol=None):
    """
    Integrate func over [a, b] by adaptive Simpson with Richardson correction.

    Args:
        func: Scalar function of one float
        a: Lower bound
        b: Upper bound
        rtol: Relative tolerance on the integral
        max_depth: Maximum bisection depth of any subinterval
        atol: Absolute tolerance; defaults to rtol times a coarse estimate

    Returns:
        tuple: (integral, error_estimate)
    """
    if a == b:
        return 0.0, 0.0
    if a > b:
        value, error = adaptive_simpson(func, b, a, rtol, max_depth, atol)
        return -value, error

    fa, fb = func(a), func(b)
    m = 0.5 * (a + b)
    fm = func(m)
    whole = _simpson(fa, fm, fb, b - a)

    if atol is None:
        # coarse composite estimate sets the absolute scale
        n = 64
        step = (b - a) / n
        samples = [func(a + i * step) for i in range(n + 1)]
        coarse = step / 3.0 * (
            samples[0] + samples[-1]
            + 4.0 * sum(samples[1:-1:2]) + 2.0 * sum(samples[2:-1:2])
        )
        atol = rtol * max(abs(coarse), abs(whole), 1e-300)

    total, error = 0.0, 0.0
    stack = [(a, b, fa, fm, fb, whole, atol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, s_whole, tol, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = func(lm), func(rm)
        s_left = _simpson(flo, flm, fmid, mid - lo)
        s_right = _simpson(fmid, frm, fhi, hi - mid)
        delta = (s_left + s_right - s_whole) / 15.0
        if depth >= max_depth or abs(delta) <= tol:
            if depth >= max_depth:
                logger.debug(f"Simpson depth limit reached on [{lo}, {hi}]")
            total += s_left + s_right + delta
            error += abs(delta)
            continue
        stack.append((lo, mid, flo, flm, fmid, s_left, tol / 2.0, depth + 1))
        stack.append((mid, hi, fmid, frm, fhi, s_right, tol / 2.0, depth + 1))
    return total, error
