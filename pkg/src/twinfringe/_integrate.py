"""Deterministic adaptive Simpson quadrature.

Plain recursive Simpson with the classical |S_fine - S_coarse|/15 error
estimate. The integrand may return a scalar or a numpy array (the whole
screen grid at once); array errors are judged in the max norm so every
component meets the tolerance. Evaluation order is fixed, which keeps
results bit-stable run to run.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .errors import ConvergenceError

MAX_DEPTH = 40


def _simpson(fa, fm, fb, h):
    return (h / 6.0) * (fa + 4.0 * fm + fb)


def _err(delta) -> float:
    return float(np.max(np.abs(delta)))


def adaptive_simpson(
    f: Callable[[float], "np.ndarray | float"],
    a: float,
    b: float,
    abs_tol: float = 1e-9,
    max_depth: int = MAX_DEPTH,
):
    """Integrate f over [a, b] to absolute tolerance abs_tol.

    Raises ConvergenceError if an interval cannot meet its tolerance share
    within max_depth bisections.
    """
    if not b > a:
        raise ValueError(f"empty or reversed interval [{a}, {b}]")
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = _simpson(fa, fm, fb, b - a)
    return _refine(f, a, b, fa, fm, fb, whole, abs_tol, max_depth)


def _refine(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm, rm = 0.5 * (a + m), 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = _simpson(fa, flm, fm, m - a)
    right = _simpson(fm, frm, fb, b - m)
    delta = left + right - whole
    if _err(delta) <= 15.0 * tol:
        return left + right + delta / 15.0
    if depth <= 0:
        raise ConvergenceError(
            f"adaptive Simpson failed to reach tol={tol:g} on [{a:g}, {b:g}]"
        )
    half = 0.5 * tol
    return _refine(f, a, m, fa, flm, fm, left, half, depth - 1) + _refine(
        f, m, b, fm, frm, fb, right, half, depth - 1
    )


def composite_simpson(y: np.ndarray, x: np.ndarray) -> float:
    """Composite Simpson over uniform samples; trapezoid tail for even counts.

    numpy's pairwise reduction keeps the sums deterministic for a given grid.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    h = float(x[1] - x[0])
    if n < 3:
        return float(0.5 * h * (y[0] + y[-1]))
    m = n if n % 2 == 1 else n - 1
    core = y[:m]
    total = core[0] + core[-1] + 4.0 * np.add.reduce(core[1:-1:2]) + 2.0 * np.add.reduce(core[2:-2:2])
    result = total * h / 3.0
    if m != n:
        result += 0.5 * h * (y[-2] + y[-1])
    return float(result)
