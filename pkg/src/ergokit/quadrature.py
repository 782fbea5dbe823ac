"""Adaptive Simpson quadrature, with a log-domain variant for extreme scales.

The workhorse is recursive interval bisection with the classic
|S_fine - S_coarse| / 15 error estimate and Richardson correction.  A
semi-infinite upper limit is folded to [0, 1) by u = lo + s/(1-s); the
endpoint panel is evaluated limit-safely (the integrand of a convergent
integral vanishes there, and a nonfinite sample anywhere else is an
error, not a zero).

``log_integrate`` integrates exp(g) for a log-scale integrand g whose
values may be far outside floating range (e.g. e^{C} with C ~ 1e6): the
maximum of g is located on a scan grid, the shifted integrand
exp(g - max) is integrated, and log of the integral is returned.
Splitting the range at the scan points keeps narrow exponential spikes
from slipping between the first Simpson samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["QuadratureResult", "QuadratureError", "integrate", "log_integrate"]

DEFAULT_TOL = 1e-10


class QuadratureError(ArithmeticError):
    """Nonfinite integrand sample at an interior point."""


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error_estimate: float
    evaluations: int
    converged: bool

    def __float__(self) -> float:
        return self.value


class _Budget:
    __slots__ = ("evals", "max_evals")

    def __init__(self, max_evals: int):
        self.evals = 0
        self.max_evals = max_evals

    def spend(self) -> bool:
        self.evals += 1
        return self.evals <= self.max_evals


def _sample(f, x: float, budget: _Budget) -> tuple[float, bool]:
    ok = budget.spend()
    try:
        y = float(f(x))
    except (ZeroDivisionError, OverflowError, ValueError) as exc:
        raise QuadratureError(f"integrand failed at x={x!r}: {exc}") from None
    if not math.isfinite(y):
        raise QuadratureError(f"integrand is not finite at x={x!r}")
    return y, ok


def _adaptive(f, a, fa, b, fb, m, fm, whole, tol_abs, floor, depth, budget):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, ok1 = _sample(f, lm, budget)
    frm, ok2 = _sample(f, rm, budget)
    h = b - a
    left = h / 12.0 * (fa + 4.0 * flm + fm)
    right = h / 12.0 * (fm + 4.0 * frm + fb)
    err = (left + right - whole) / 15.0
    if depth <= 0 or not (ok1 and ok2):
        return left + right + err, abs(err), ok1 and ok2 and depth > 0
    if abs(err) <= tol_abs or lm <= a or rm >= b:
        return left + right + err, abs(err), True
    # halve the tolerance on descent, but never below the floor: the floor
    # is what keeps narrow exponential spikes from exploding the panel
    # count once the split tolerance would underflow
    child_tol = max(0.5 * tol_abs, floor)
    lval, lerr, lok = _adaptive(f, a, fa, m, fm, lm, flm, left, child_tol, floor,
                                depth - 1, budget)
    rval, rerr, rok = _adaptive(f, m, fm, b, fb, rm, frm, right, child_tol, floor,
                                depth - 1, budget)
    return lval + rval, lerr + rerr, lok and rok


def _integrate_finite(f, lo, hi, tol, max_depth, budget, seed_points=()):
    """Composite adaptive Simpson over [lo, hi], split at the seed points."""
    knots = sorted({lo, hi, *(x for x in seed_points if lo < x < hi)})
    segments = list(zip(knots[:-1], knots[1:]))
    # first pass for a scale estimate
    pieces = []
    rough = 0.0
    for a, b in segments:
        fa, _ = _sample(f, a, budget)
        fb, _ = _sample(f, b, budget)
        m = 0.5 * (a + b)
        fm, _ = _sample(f, m, budget)
        whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
        pieces.append((a, fa, b, fb, m, fm, whole))
        rough += whole
    tol_abs = tol * max(1.0, abs(rough)) / max(len(segments), 1)
    floor = tol_abs * 1e-4
    total = 0.0
    err_total = 0.0
    ok_all = True
    for a, fa, b, fb, m, fm, whole in pieces:
        val, err, ok = _adaptive(f, a, fa, b, fb, m, fm, whole, tol_abs, floor,
                                 max_depth, budget)
        total += val
        err_total += err
        ok_all = ok_all and ok
    return total, err_total, ok_all


def integrate(f, lo: float, hi: float, tol: float = DEFAULT_TOL,
              max_depth: int = 48, max_evals: int = 200_000,
              seed_points=()) -> QuadratureResult:
    """Integrate f over [lo, hi]; ``hi`` may be ``math.inf``.

    ``converged`` guarantees error_estimate <= tol * max(1, |value|); on
    a exhausted recursion or evaluation budget the best estimate is
    returned with ``converged=False``.  ``seed_points`` force interval
    splits (used to pin known spike locations).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not math.isfinite(lo):
        raise ValueError("lower limit must be finite")
    if hi <= lo:
        return QuadratureResult(0.0, 0.0, 0, True)
    budget = _Budget(max_evals)
    if math.isinf(hi):
        s_cap = 1.0 - 1e-14  # endpoint clamped: evaluates f at x ~ 1e14

        def g(s: float) -> float:
            s = min(s, s_cap)
            u = lo + s / (1.0 - s)
            return f(u) / (1.0 - s) ** 2

        seeds = [x / (1.0 + x) for x in (p - lo for p in seed_points) if x > 0]
        value, err, ok = _integrate_finite(g, 0.0, 1.0, tol, max_depth, budget, seeds)
    else:
        value, err, ok = _integrate_finite(f, lo, hi, tol, max_depth, budget, seed_points)
    converged = ok and err <= tol * max(1.0, abs(value))
    return QuadratureResult(value, err, budget.evals, converged)


def log_integrate(g, lo: float, hi: float, tol: float = 1e-9,
                  scan: int = 65, max_evals: int = 200_000) -> tuple[float, QuadratureResult]:
    """log of the integral of exp(g) over finite [lo, hi].

    ``g`` returns log-scale values (may be -inf).  Returns
    ``(log_value, shifted_result)`` where the result describes the
    integral of the max-shifted integrand.
    """
    if hi <= lo:
        return -math.inf, QuadratureResult(0.0, 0.0, 0, True)
    xs = np.linspace(lo, hi, scan)
    if lo > 0 and hi / max(lo, 1e-300) > 100.0:
        xs = np.unique(np.concatenate([xs, np.geomspace(max(lo, 1e-300), hi, scan)]))
    gv = np.array([g(float(x)) for x in xs])
    if np.all(gv == -math.inf):
        return -math.inf, QuadratureResult(0.0, 0.0, len(xs), True)
    m = float(np.max(gv[np.isfinite(gv)])) if np.any(np.isfinite(gv)) else 0.0

    def shifted(x: float) -> float:
        v = g(x)
        if v == -math.inf:
            return 0.0
        return math.exp(min(v - m, 700.0))

    res = integrate(shifted, lo, hi, tol, max_evals=max_evals,
                    seed_points=tuple(float(x) for x in xs[1:-1]))
    if res.value <= 0.0:
        return -math.inf, res
    return m + math.log(res.value), res
