"""
Self-check suites run by ``qbounds validate``.

Each suite returns a :class:`SuiteResult`; the runner never raises on a
failed check so that every suite is reported.
"""
from __future__ import annotations

import math
import time
import traceback
from dataclasses import dataclass, field

import numpy as np

from .models import GaussianPrior, GridHybridModel, PhaseModel, Povm, simulate_measurement
from .models import conditional_mean_estimator
from .operators import solve_symmetric_lyapunov
from .phase import (mmse_gaussian, qcrb_bayes, qwwb_optimized, qwwb_phase, qzzb_gaussian,
                    sine_constant, heisenberg_limit)
from .wwcore import TestPoint, assemble, classical_ww, covariance_bound


@dataclass
class SuiteResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0


def qubit_povms() -> dict[str, Povm]:
    """Three fixed qubit measurements used for the Monte Carlo checks."""
    r2 = math.sqrt(2.0)
    y_basis = Povm.from_vectors([[1 / r2, 1j / r2], [1 / r2, -1j / r2]])
    w = np.exp(1j * math.pi / 3)
    tilted = Povm.from_vectors([[1 / r2, w / r2], [1 / r2, -w / r2]])
    trine = Povm.from_vectors([[1 / r2, np.exp(2j * math.pi * k / 3) / r2] for k in range(3)],
                              weights=[2 / 3] * 3)
    return {"y_basis": y_basis, "tilted": tilted, "trine": trine}


def random_density(rng, dim: int, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    a = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_hermitian(rng, dim: int) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (a + a.conj().T)


def random_commuting_hermitian(rng, rho) -> np.ndarray:
    """Random Hermitian operator diagonal in an eigenbasis of ``rho``."""
    _, vec = np.linalg.eigh(rho)
    return (vec * rng.normal(size=rho.shape[0])) @ vec.conj().T


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def suite_closed_form(seed, trials):
    prior = GaussianPrior(0.0, 0.1)
    worst = 0.0
    for E in (1.0, 5.0, 10.0, 20.0, 50.0):
        m = PhaseModel.qubit(E)
        s2 = prior.sigma ** 2
        ref_mmse = s2 - s2 * s2 * E * E * math.exp(-E * E * s2)
        ref_qcrb = 1.0 / (1.0 / s2 + E * E)
        worst = max(worst, abs(mmse_gaussian(m, prior) / ref_mmse - 1),
                    abs(qcrb_bayes(m, prior) / ref_qcrb - 1))
    return worst < 1e-10, {"max_rel_error": worst}


def suite_g_symmetry(seed, trials):
    prior = GaussianPrior(0.0, 0.1)
    gm = GridHybridModel.from_phase_model(PhaseModel.qubit(10.0), prior, 1001, 20.0)
    tps = [TestPoint(0.1, 0.5), TestPoint(0.2, 0.4), TestPoint(-0.3, 0.6)]
    asm = assemble(gm, tps)
    asym = float(np.max(np.abs(asm.G - asm.G.T)))
    return asym == 0.0, {"max_asymmetry": asym}


def suite_hermitian_minimality(seed, trials):
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(200):
        d = int(rng.integers(2, 7))
        rho = random_density(rng, d)
        D = random_hermitian(rng, d)
        L, _ = solve_symmetric_lyapunov(rho, D)
        N = random_commuting_hermitian(rng, rho)
        Lp = L + 1j * N
        herm = np.trace(L.conj().T @ L @ rho).real
        other = np.trace(Lp.conj().T @ Lp @ rho).real
        worst = min(worst, other - herm)
    return worst >= -1e-10, {"min_gap": worst}


def suite_qcrb_limit(seed, trials):
    worst = 0.0
    cases = [(PhaseModel.qubit(10.0), GaussianPrior(0.0, 0.1)),
             (PhaseModel.bosonic(0.1, 10), GaussianPrior(0.0, 0.5))]
    for m, prior in cases:
        v = qwwb_phase(m, prior, 0.5, 1e-4 * prior.sigma)
        worst = max(worst, abs(v / qcrb_bayes(m, prior) - 1))
    return worst < 1e-3, {"max_rel_error": worst}


def suite_cross_path(seed, trials):
    prior = GaussianPrior(0.0, 0.1)
    m = PhaseModel.qubit(10.0)
    gm = GridHybridModel.from_phase_model(m, prior, 2001, 20.0)
    worst = 0.0
    for k in (1, 2, 5):
        h = k * prior.sigma
        grid = covariance_bound(assemble(gm, [TestPoint(h, 0.5)]))[0, 0]
        worst = max(worst, abs(grid / qwwb_phase(m, prior, 0.5, h) - 1))
    return worst < 1e-4, {"max_rel_error": worst}


def suite_classical(seed, trials):
    prior = GaussianPrior(0.0, 0.1).tabulate(2001, 20.0)
    x = prior.grid
    lik = np.stack([0.5 * (1 + np.sin(10 * x)), 0.5 * (1 - np.sin(10 * x))], axis=1)
    gm = GridHybridModel.classical(prior, lik)
    worst = 0.0
    for k in (25, 50, 125):
        q = covariance_bound(assemble(gm, [TestPoint(k * prior.dx, 0.5)]))[0, 0]
        c = classical_ww(lik * prior.weights[:, None], k, prior.dx, 0.5)
        worst = max(worst, abs(q / c - 1))
    return worst < 1e-8, {"max_rel_error": worst}


def suite_two_point(seed, trials):
    rng = np.random.default_rng(seed)
    prior = GaussianPrior(0.0, 0.1)
    gm = GridHybridModel.from_phase_model(PhaseModel.qubit(10.0), prior, 1001, 20.0)
    worst = math.inf
    for _ in range(20):
        k1, k2 = rng.choice(np.arange(1, 150), size=2, replace=False)
        s1, s2 = rng.uniform(0.2, 0.8, size=2)
        tps = [TestPoint(k1 * gm.dx, s1), TestPoint(k2 * gm.dx, s2)]
        asm = assemble(gm, tps)
        combined = covariance_bound(asm)[0, 0]
        worst = min(worst, combined - max(1 / asm.G[0, 0], 1 / asm.G[1, 1]))
    return worst >= -1e-12, {"min_gap": worst}


def suite_heisenberg(seed, trials):
    lam = sine_constant().lam
    hl = heisenberg_limit(PhaseModel.bosonic(0.1, 10, 10_000), GaussianPrior(0.0, 0.5))
    ref = 1.0 / (64 * lam ** 2 * hl.H_plus ** 2)
    ok = (round(lam, 4) == 0.7246 and abs(hl.bound / ref - 1) < 1e-6
          and hl.bound > 1.0 / (80 * lam ** 2 * hl.H_plus ** 2))
    return ok, {"lambda": lam, "rel_error": abs(hl.bound / ref - 1)}


def suite_monte_carlo(seed, trials):
    prior = GaussianPrior(0.0, 0.1)
    m = PhaseModel.qubit(10.0)
    gm = GridHybridModel.from_phase_model(m, prior, 2001, 20.0)
    bounds = {"qwwb": qwwb_optimized(m, prior).value, "qzzb": qzzb_gaussian(m, prior),
              "qcrb": qcrb_bayes(m, prior)}
    details, ok = {}, True
    for i, (name, povm) in enumerate(qubit_povms().items()):
        smp = simulate_measurement(gm, povm, trials, seed + i)
        est = conditional_mean_estimator(gm, povm)
        sq = (est[smp.y] - smp.x) ** 2
        mse, se = float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(trials))
        passed = all(mse >= b - 3 * se for b in bounds.values())
        ok &= passed
        details[name] = {"mse": mse, "se": se, "passed": passed}
    details["bounds"] = bounds
    return ok, details


SUITES = {
    "closed_form": suite_closed_form,
    "g_symmetry": suite_g_symmetry,
    "hermitian_minimality": suite_hermitian_minimality,
    "qcrb_limit": suite_qcrb_limit,
    "cross_path": suite_cross_path,
    "classical_degeneration": suite_classical,
    "two_point_tightening": suite_two_point,
    "heisenberg": suite_heisenberg,
    "monte_carlo": suite_monte_carlo,
}


def run_suites(seed: int = 42, trials: int = 100_000, names=None) -> list[SuiteResult]:
    results = []
    for name, fn in SUITES.items():
        if names is not None and name not in names:
            continue
        t0 = time.perf_counter()
        try:
            passed, details = fn(seed, trials)
        except Exception as exc:  # reported, not raised
            passed, details = False, {"error": repr(exc), "trace": traceback.format_exc()}
        results.append(SuiteResult(name, bool(passed), details, time.perf_counter() - t0))
    return results
