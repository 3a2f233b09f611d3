"""
Analytic bounds for single-parameter phase estimation with pure probes.

For ``rho_x = exp(-ixH) |psi><psi| exp(ixH)`` the Weiss-Weinstein overlaps
factor into a prior part ``g_c`` and a probe part built from
``z(h) = <psi| exp(-ihH) |psi>``; ``nu`` independent probes enter only as
powers of ``z``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.special import erfc

from .models import (GaussianPrior, GridHybridModel, ModelError, PhaseModel, Prior,
                     average_state, z_overlap)
from .numerics import ScanSpec, integrate, maximize_1d, solve_root
from .operators import check_hermitian, dagger
from .wwcore import DegenerateTestPointError

DEGENERATE_TOL = 1e-14
DEFAULT_S = 0.5
S_GRID = np.linspace(0.05, 0.95, 21)
H_RANGE_SIGMAS = 10.0
H_FLOOR = 1e-5          # smallest scanned h as a fraction of the h range
MAX_SCAN_POINTS = 200_000


class UnsupportedModelError(ValueError):
    """The requested quantity is not available for this model/prior."""


class NoDynamicsError(ValueError):
    """The generator has no spread above its ground eigenvalue."""


def _require_gaussian(prior, what):
    if not isinstance(prior, GaussianPrior):
        raise UnsupportedModelError(f"{what} requires a Gaussian prior")


# ---------------------------------------------------------------------------
# Overlap functions
# ---------------------------------------------------------------------------

def g_quantum(model: PhaseModel, h):
    """Probe part of ``g(s, h)``: ``|z(h)|^(2 nu)`` (independent of s)."""
    return np.abs(z_overlap(model, h)) ** (2 * model.copies)


def g_tilde_quantum(model: PhaseModel, h):
    """Probe part of ``g~(s, 2h)``: ``Re[(z(h)^2 z(2h)^*)^nu]``."""
    h = np.asarray(h, dtype=float)
    w = z_overlap(model, h) ** 2 * np.conj(z_overlap(model, 2 * h))
    return np.real(w ** model.copies)


def g_total(model: PhaseModel, prior: Prior, s, h):
    return prior.overlap(s, h) * g_quantum(model, h)


def g_tilde_total(model: PhaseModel, prior: Prior, s, h):
    """``g~(s, 2h)`` for displacement ``h``."""
    return prior.overlap(s, 2 * np.asarray(h, dtype=float)) * g_tilde_quantum(model, h)


def qwwb_terms(model: PhaseModel, prior: Prior, s, h):
    """Numerator ``h^2 g(s,h)^2`` and denominator of the single-point bound."""
    h = np.asarray(h, dtype=float)
    zq = g_quantum(model, h)
    num = h * h * (prior.overlap(s, h) * zq) ** 2
    den = ((prior.overlap(2 * s, h) + prior.overlap(2 - 2 * s, -h)) * zq
           - 2.0 * g_tilde_total(model, prior, s, h))
    return num, den


def qwwb_objective(model: PhaseModel, prior: Prior, s, h):
    """Vectorized bound value; NaN where the denominator is degenerate."""
    num, den = qwwb_terms(model, prior, s, h)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > DEGENERATE_TOL, num / den, np.nan)


def qwwb_phase(model: PhaseModel, prior: Prior, s: float, h: float) -> float:
    """Single test-point quantum Weiss-Weinstein bound ``Sigma_W(s, h)``."""
    if not 0.0 < s < 1.0:
        raise ValueError(f"s must lie in (0, 1), got {s}")
    if h == 0:
        raise ValueError("h must be nonzero")
    num, den = qwwb_terms(model, prior, s, h)
    if not den > DEGENERATE_TOL:
        raise DegenerateTestPointError(f"denominator {float(den):.3g} at s={s}, h={h}")
    return float(num / den)


@dataclass(frozen=True)
class QwwbResult:
    value: float
    s: float
    h: float


def _scan_points(model: PhaseModel, h_max: float, minimum: int = 400) -> int:
    # ~16 samples per period of the fastest probe oscillation.
    n = math.ceil(16 * h_max * model.bandwidth / (2 * math.pi)) + 1
    return int(min(max(minimum, n), MAX_SCAN_POINTS))


def qwwb_optimized(model: PhaseModel, prior: Prior, s: float | None = DEFAULT_S,
                   h_max: float | None = None,
                   s_grid: Sequence[float] | None = None) -> QwwbResult:
    """Supremum of ``Sigma_W(s, h)`` over ``h in (0, h_max]``.

    ``h_max`` defaults to ten prior standard deviations. With ``s=None`` the
    exponent is also scanned over ``s_grid`` (21 points in [0.05, 0.95] by
    default) and the best pair is returned.
    """
    if h_max is None:
        h_max = H_RANGE_SIGMAS * prior.sigma
    s_values = [s] if s is not None else list(S_GRID if s_grid is None else s_grid)
    spec = ScanSpec(H_FLOOR * h_max, h_max, _scan_points(model, h_max))
    best = None
    for s_val in s_values:
        h_opt, val = maximize_1d(lambda hh: qwwb_objective(model, prior, s_val, hh),
                                 spec, vectorized=True)
        if best is None or val > best.value:
            best = QwwbResult(float(val), float(s_val), float(h_opt))
    return best


# ---------------------------------------------------------------------------
# Cramer-Rao, Fisher information, MMSE
# ---------------------------------------------------------------------------

def qcrb_bayes(model: PhaseModel, prior: GaussianPrior) -> float:
    """Bayesian QCRB ``1 / (1/sigma^2 + 4 nu Var_psi(H))``."""
    _require_gaussian(prior, "qcrb_bayes")
    return 1.0 / (1.0 / prior.sigma ** 2 + 4.0 * model.copies * model.energy_variance)


def qcrb_limit(model: PhaseModel, prior: Prior, s: float = DEFAULT_S,
               rel_h: float = 1e-4) -> float:
    """Small-displacement limit of ``Sigma_W``; the QCRB for any prior."""
    return qwwb_phase(model, prior, s, rel_h * prior.sigma)


def qfi(rho, H, cutoff: float = 1e-12) -> float:
    """Quantum Fisher information of ``exp(-i t H) rho exp(i t H)``."""
    rho = check_hermitian(rho, name="rho")
    H = check_hermitian(H, name="H")
    lam, vec = np.linalg.eigh(0.5 * (rho + dagger(rho)))
    lam = np.clip(lam, 0.0, None)
    Hr = dagger(vec) @ H @ vec
    lsum = lam[:, None] + lam[None, :]
    keep = lsum > cutoff * max(lam.max(), np.finfo(float).tiny)
    ldiff = lam[:, None] - lam[None, :]
    terms = np.where(keep, 2.0 * ldiff ** 2 * np.abs(Hr) ** 2 / np.where(keep, lsum, 1.0), 0.0)
    return float(terms.sum())


def mmse_gaussian(model, prior: GaussianPrior | None = None) -> float:
    """Exact MMSE ``sigma^2 - sigma^4 F(rho_bar, H)`` for unitary families with a
    Gaussian prior.

    Accepts a :class:`PhaseModel` (single probe, or qubit probes of any
    number) or a :class:`GridHybridModel` built from a unitary family.
    """
    if isinstance(model, GridHybridModel):
        prior = model.prior if prior is None else prior
        _require_gaussian(prior, "mmse_gaussian")
        if model.generator is None:
            raise UnsupportedModelError("grid model carries no generator")
        rho_bar = average_state(model)
        H = model.generator
    else:
        _require_gaussian(prior, "mmse_gaussian")
        if model.copies > 1 and model.kind != "qubit":
            raise UnsupportedModelError(
                f"MMSE is not available for {model.copies} {model.kind} probes")
        single = model.collapse_copies()
        rho_bar = average_state(single, prior)
        H = single.generator()
    var = prior.sigma ** 2
    return var - var * var * qfi(rho_bar, H)


# ---------------------------------------------------------------------------
# Ziv-Zakai
# ---------------------------------------------------------------------------

def qzzb_gaussian(model: PhaseModel, prior: GaussianPrior, rel_tol: float = 1e-8,
                  fidelity=None) -> float:
    """Quantum Ziv-Zakai bound for a Gaussian prior and pure probes.

    ``1/2 int_0^inf h erfc(h / (2 sqrt2 sigma)) [1 - sqrt(1 - F(h))] dh`` with
    ``F = |z|^(2 nu)``, truncated where ``erfc < 2e-16``. ``fidelity`` may
    override ``F`` (a callable of h).
    """
    _require_gaussian(prior, "qzzb_gaussian")
    sigma = prior.sigma
    h_max = 12.0 * math.sqrt(2.0) * sigma
    F = (lambda h: float(np.abs(z_overlap(model, h)) ** (2 * model.copies))) \
        if fidelity is None else fidelity
    scale = 2.0 * math.sqrt(2.0) * sigma

    def integrand(h):
        f = min(max(F(h), 0.0), 1.0)
        # 1 - sqrt(1 - f) without cancellation for f -> 0
        miss = f / (1.0 + math.sqrt(1.0 - f))
        return 0.5 * h * erfc(h / scale) * miss

    breakpoints = None
    if fidelity is None and model.bandwidth > 0:
        width = math.pi / model.bandwidth
        n = min(int(h_max / width), 4000)
        if n > 1:
            breakpoints = np.linspace(0.0, h_max, n + 1)[1:-1]
    return integrate(integrand, 0.0, h_max, rel_tol=rel_tol, breakpoints=breakpoints)


# ---------------------------------------------------------------------------
# Heisenberg limit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SineConstant:
    """Slope ``lam`` of the tightest line ``cos t >= 1 - lam |t|`` and its
    tangent point ``phi``."""

    lam: float
    phi: float


@lru_cache(maxsize=1)
def sine_constant() -> SineConstant:
    phi = solve_root(lambda p: p * math.sin(p) - 1.0 + math.cos(p), (2.0, 3.0))
    return SineConstant(lam=math.sin(phi), phi=phi)


def kappa(prior: Prior, h: float, s_points: int = 99) -> tuple[float, float]:
    """``sup_s g_c(s,h)^2 / [g_c(2s,h) + g_c(2-2s,-h)]`` and its maximizer."""
    def f(s):
        s = np.asarray(s, dtype=float)
        return prior.overlap(s, h) ** 2 / (prior.overlap(2 * s, h) + prior.overlap(2 - 2 * s, -h))

    spec = ScanSpec(1.0 / (s_points + 1), s_points / (s_points + 1), s_points, 1e-12)
    s_opt, val = maximize_1d(f, spec, vectorized=True)
    return val, s_opt


@dataclass(frozen=True)
class HeisenbergLimit:
    H_plus: float
    h_star: float
    kappa: float
    s_kappa: float
    bound_prime: float
    bound: float
    lam: float


def heisenberg_limit(model: PhaseModel, prior: Prior) -> HeisenbergLimit:
    lam = sine_constant().lam
    H_plus = model.copies * (model.mean_energy - float(model.energies.min()))
    if not H_plus > 0:
        raise NoDynamicsError("mean energy equals the ground eigenvalue")
    h_star = 1.0 / (4.0 * lam * H_plus)
    k, s_k = kappa(prior, h_star)
    zq = float(np.abs(z_overlap(model, h_star)) ** (2 * model.copies))
    bound_prime = k * h_star ** 2 * zq
    bound = k / (32.0 * lam ** 2 * H_plus ** 2)
    if bound_prime < bound * (1.0 - 1e-12):
        raise ArithmeticError(f"fidelity bound violated: {bound_prime!r} < {bound!r}")
    return HeisenbergLimit(H_plus, h_star, k, s_k, bound_prime, bound, lam)
