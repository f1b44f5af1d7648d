"""Adaptive Simpson quadrature for smooth one-dimensional integrands."""

from __future__ import annotations

import warnings
from collections.abc import Callable
from dataclasses import dataclass


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    abs_error: float
    evaluations: int
    converged: bool


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    *,
    rel_tol: float = 1e-10,
    abs_tol: float = 0.0,
    max_evaluations: int = 1_000_000,
    min_depth: int = 2,
) -> QuadratureResult:
    """Integrate ``f`` over ``[a, b]`` by adaptive Simpson with Richardson correction.

    Intervals are refined until the local estimate ``|S2 - S1| / 15`` drops
    below the tolerance share of that interval, where the global tolerance is
    ``max(abs_tol, rel_tol * |I|)`` using the coarse estimate of ``I``.
    Every interval is split at least ``min_depth`` times so that a
    coincidentally flat first estimate is not accepted.

    If ``max_evaluations`` is reached, the remaining intervals are accepted
    as they stand and ``converged`` is False.
    """
    if a == b:
        return QuadratureResult(0.0, 0.0, 0, True)
    if a > b:
        r = adaptive_simpson(
            f, b, a, rel_tol=rel_tol, abs_tol=abs_tol, max_evaluations=max_evaluations, min_depth=min_depth
        )
        return QuadratureResult(-r.value, r.abs_error, r.evaluations, r.converged)

    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    evaluations = 3
    width = b - a
    whole = width / 6.0 * (fa + 4.0 * fm + fb)
    tol = max(abs_tol, rel_tol * abs(whole))

    total = 0.0
    err_total = 0.0
    converged = True
    # stack of (a, b, fa, fm, fb, simpson estimate, depth)
    stack = [(a, b, fa, fm, fb, whole, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, est, depth = stack.pop()
        if evaluations + 2 > max_evaluations:
            # out of budget: keep the coarse estimate of what is left
            converged = False
            total += est
            continue
        mid = 0.5 * (lo + hi)
        flm = f(0.5 * (lo + mid))
        frm = f(0.5 * (mid + hi))
        evaluations += 2
        h = hi - lo
        left = h / 12.0 * (flo + 4.0 * flm + fmid)
        right = h / 12.0 * (fmid + 4.0 * frm + fhi)
        delta = left + right - est
        if depth >= min_depth and abs(delta) <= 15.0 * tol * h / width:
            total += left + right + delta / 15.0
            err_total += abs(delta) / 15.0
            continue
        stack.append((mid, hi, fmid, frm, fhi, right, depth + 1))
        stack.append((lo, mid, flo, flm, fmid, left, depth + 1))

    if not converged:
        warnings.warn(
            f"adaptive Simpson hit the cap of {max_evaluations} evaluations; error estimate {err_total:.3g}",
            RuntimeWarning,
            stacklevel=2,
        )
    return QuadratureResult(total, err_total, evaluations, converged)
