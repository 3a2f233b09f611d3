"""
Shared 1-D numerics: grid-scan maximization with golden-section refinement,
adaptive quadrature and bracketed root finding.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import integrate as _integrate
from scipy import optimize as _optimize

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class EmptyScanError(ValueError):
    """Raised when an objective is non-finite at every scan point."""


class BracketError(ValueError):
    """Raised when a root bracket does not contain a sign change."""


class IntegrationAccuracyWarning(RuntimeWarning):
    """Quadrature did not reach the requested tolerance."""


@dataclass(frozen=True)
class ScanSpec:
    """Domain and resolution of a 1-D maximization."""

    lower: float
    upper: float
    coarse_points: int = 400
    refine_tol: float | None = None

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"need lower < upper, got [{self.lower}, {self.upper}]")
        if self.coarse_points < 16:
            raise ValueError("coarse_points must be >= 16")
        if self.refine_tol is not None and not self.refine_tol > 0:
            raise ValueError("refine_tol must be positive")

    @property
    def tol(self) -> float:
        if self.refine_tol is None:
            return 1e-10 * (self.upper - self.lower)
        return self.refine_tol


def _finite_or_sentinel(values):
    values = np.asarray(values, dtype=float)
    return np.where(np.isfinite(values), values, -np.inf)


def golden_section_max(f, a, b, tol, max_iter=200):
    """Golden-section search for a maximum of ``f`` on ``[a, b]``.

    Returns ``(x, f(x))`` for the best point visited.
    """
    def val(x):
        y = f(x)
        return y if math.isfinite(y) else -math.inf

    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = val(x1), val(x2)
    best = max((f1, x1), (f2, x2))
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 >= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = val(x1)
            best = max(best, (f1, x1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = val(x2)
            best = max(best, (f2, x2))
    return best[1], best[0]


def maximize_1d(f: Callable, spec: ScanSpec, vectorized: bool = False,
                extra_points: Sequence[float] = ()):
    """Maximize a scalar function on ``[spec.lower, spec.upper]``.

    A uniform scan of ``spec.coarse_points`` points locates the best cell;
    golden-section search then refines inside the two neighbouring cells.
    Non-finite values are treated as ``-inf``.

    Parameters
    ----------
    f : callable
        Objective. With ``vectorized=True`` it is called once on the whole
        scan array, otherwise point by point.
    spec : ScanSpec
    vectorized : bool
    extra_points : sequence of float
        Additional candidate abscissae inside the domain (e.g. a known
        limiting point); they compete with the scan but are not refined.

    Returns
    -------
    (argmax, max) : tuple of float
    """
    grid = np.linspace(spec.lower, spec.upper, spec.coarse_points)
    if vectorized:
        values = _finite_or_sentinel(f(grid))
    else:
        values = _finite_or_sentinel([f(x) for x in grid])
    if not np.any(np.isfinite(values)):
        raise EmptyScanError("objective is non-finite on the whole scan grid")

    k = int(np.argmax(values))
    best_x, best_f = float(grid[k]), float(values[k])

    def scalar(x):
        if vectorized:
            return float(np.asarray(f(np.array([x])))[0])
        return float(f(x))

    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, len(grid) - 1)]
    x_ref, f_ref = golden_section_max(scalar, float(a), float(b), spec.tol)
    if f_ref > best_f:
        best_x, best_f = x_ref, f_ref

    for x in extra_points:
        fx = scalar(x)
        if math.isfinite(fx) and fx > best_f:
            best_x, best_f = float(x), fx
    return best_x, best_f


def integrate(f: Callable[[float], float], a: float, b: float, rel_tol: float = 1e-8,
              abs_tol: float = 1e-15, breakpoints: Sequence[float] | None = None,
              limit: int = 200) -> float:
    """Adaptive Gauss-Kronrod quadrature of ``f`` over ``[a, b]``.

    ``breakpoints`` split the interval into panels integrated separately,
    which is how oscillatory or kinked integrands should be passed in.
    An :class:`IntegrationAccuracyWarning` carries the achieved estimate
    when the subdivision budget runs out.
    """
    if b == a:
        return 0.0
    if b < a:
        return -integrate(f, b, a, rel_tol, abs_tol, breakpoints, limit)
    edges = [a]
    if breakpoints is not None:
        edges.extend(sorted(float(p) for p in breakpoints if a < p < b))
    edges.append(b)
    n_panels = len(edges) - 1

    total = 0.0
    err_total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", _integrate.IntegrationWarning)
        for lo, hi in zip(edges[:-1], edges[1:]):
            try:
                val, err = _integrate.quad(f, lo, hi, epsabs=abs_tol / n_panels,
                                           epsrel=rel_tol, limit=limit)
            except _integrate.IntegrationWarning:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    val, err = _integrate.quad(f, lo, hi, epsabs=abs_tol / n_panels,
                                               epsrel=rel_tol, limit=limit)
            total += val
            err_total += err
    if err_total > max(abs_tol, rel_tol * abs(total)):
        warnings.warn(
            f"quadrature error estimate {err_total:.3g} exceeds tolerance; "
            f"achieved estimate {total!r}",
            IntegrationAccuracyWarning, stacklevel=2)
    return total


def solve_root(f: Callable[[float], float], bracket: tuple[float, float],
               xtol: float = 1e-13) -> float:
    """Brent root of ``f`` inside ``bracket``."""
    lo, hi = bracket
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if np.sign(flo) == np.sign(fhi):
        raise BracketError(f"f({lo})={flo:.3g} and f({hi})={fhi:.3g} have the same sign")
    return float(_optimize.brentq(f, lo, hi, xtol=xtol, rtol=4 * np.finfo(float).eps,
                                  maxiter=500))
