"""Bayesian quantum estimation error bounds: quantum Weiss-Weinstein,
Ziv-Zakai and Cramer-Rao bounds, Heisenberg limits and exact MMSE for
finite-dimensional parametric quantum models."""

__version__ = "0.1.0"

from .models import (GaussianPrior, GridHybridModel, PhaseModel, Povm, TabulatedPrior,
                     average_state, evolve, prior_overlap_gc, simulate_measurement,
                     z_overlap)
from .phase import (heisenberg_limit, mmse_gaussian, qcrb_bayes, qfi, qwwb_optimized,
                    qwwb_phase, qzzb_gaussian, sine_constant)
from .wwcore import TestPoint, assemble, classical_ww, covariance_bound, ww_bound

__all__ = [
    "GaussianPrior", "GridHybridModel", "PhaseModel", "Povm", "TabulatedPrior",
    "TestPoint", "assemble", "average_state", "classical_ww", "covariance_bound",
    "evolve", "heisenberg_limit", "mmse_gaussian", "prior_overlap_gc", "qcrb_bayes",
    "qfi", "qwwb_optimized", "qwwb_phase", "qzzb_gaussian", "simulate_measurement",
    "sine_constant", "ww_bound", "z_overlap",
]
