"""
Quantum Weiss-Weinstein bounds on discretized hybrid models.

For each test point ``(h, s)`` the score operator ``L`` solves
``(L rho + rho L^dagger)/2 = D`` with

    V(x) = N * rho(x)^s o rho(x - h)^(1-s),     sum_x tr V(x) = 1
    D(x) = [V(x + h) - V(x)] / |h|

and the bound is ``C (G - Delta)^-1 C^T`` with ``G_kk' = sum_x Re tr[L_k^dagger
L_k' rho(x)]`` and ``C_jk = h_kj / |h_k|``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .models import GridHybridModel, ModelError
from .operators import (dagger, frac_power_on_support, jordan_product,
                        solve_symmetric_lyapunov)

log = logging.getLogger(__name__)

DEGENERATE_TOL = 1e-14
RESIDUAL_TOL = 1e-8
SINGULAR_TOL = 1e-12


class DegenerateTestPointError(ValueError):
    """The shifted and unshifted states have no overlap at this test point."""


class UnsolvableComponentError(ValueError):
    """``D`` has weight on the kernel-kernel block of ``rho``."""

    def __init__(self, residual: float, msg: str | None = None):
        self.residual = residual
        super().__init__(msg or f"D is not reachable from the support of rho "
                                f"(residual {residual:.3g})")


class SingularAssemblyError(ValueError):
    """``G - Delta`` is not strictly positive definite."""


@dataclass(frozen=True)
class TestPoint:
    """Displacement ``h`` (one component per parameter) and exponent ``s``."""

    __test__ = False  # keep pytest from collecting this class

    h: np.ndarray
    s: float = 0.5

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.h, dtype=float))
        if h.ndim != 1:
            raise ValueError("h must be a scalar or 1-D vector")
        if not np.linalg.norm(h) > 0:
            raise ValueError("test point displacement must be nonzero")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "s", float(self.s))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.h))


@dataclass
class WwAssembly:
    G: np.ndarray
    C: np.ndarray
    Delta: np.ndarray
    L_ops: list = field(default_factory=list, repr=False)
    testpoints: list = field(default_factory=list)
    snap_errors: list = field(default_factory=list)
    residuals: list = field(default_factory=list)


def _shift(arr: np.ndarray, offsets: Sequence[int]) -> np.ndarray:
    """``out[i] = arr[i - m]`` along the leading axes, zero where ``i - m`` is off-grid."""
    out = np.zeros_like(arr)
    src, dst = [], []
    for m, n in zip(offsets, arr.shape):
        if abs(m) >= n:
            return out
        if m >= 0:
            dst.append(slice(m, n))
            src.append(slice(0, n - m))
        else:
            dst.append(slice(0, n + m))
            src.append(slice(-m, n))
    out[tuple(dst)] = arr[tuple(src)]
    return out


def grid_offsets(model: GridHybridModel, tp: TestPoint) -> tuple[np.ndarray, np.ndarray]:
    """Integer grid offsets for ``tp.h`` and the snap error per component."""
    if tp.h.size != model.param_dim:
        raise ValueError(f"test point has {tp.h.size} components, model has {model.param_dim}")
    ratio = tp.h / model.steps
    offsets = np.rint(ratio).astype(int)
    snap = (offsets - ratio) * model.steps
    if not np.any(offsets):
        raise ValueError("test point displacement rounds to zero grid steps")
    return offsets, snap


def snap_testpoint(model: GridHybridModel, tp: TestPoint) -> TestPoint:
    """Test point moved to the nearest grid multiple."""
    offsets, snap = grid_offsets(model, tp)
    if np.any(np.abs(snap) > 1e-12 * np.abs(tp.h).max()):
        log.info("snapped h=%s by %s", tp.h, snap)
    return TestPoint(offsets * model.steps, tp.s)


def _unnormalized_V(model: GridHybridModel, tp: TestPoint):
    offsets, _ = grid_offsets(model, tp)
    rho = model.states
    shifted = _shift(rho, offsets)  # rho(x - h)
    return jordan_product(frac_power_on_support(rho, tp.s),
                          frac_power_on_support(shifted, 1.0 - tp.s))


def build_V(model: GridHybridModel, tp: TestPoint):
    """Normalized ``V(x_i)`` on the grid and its normalization factor.

    Returns
    -------
    V : ndarray, shape (*grid_shape, d, d)
    norm : float
        ``1 / sum_i tr[rho(x_i)^s o rho(x_i - h)^(1-s)]``.
    """
    raw = _unnormalized_V(model, tp)
    total = float(np.real(np.trace(raw, axis1=-2, axis2=-1)).sum())
    if total < DEGENERATE_TOL:
        raise DegenerateTestPointError(
            f"no overlap between shifted and unshifted states at h={tp.h}, s={tp.s}")
    return raw / total, 1.0 / total


def build_D(model: GridHybridModel, tp: TestPoint, V: np.ndarray | None = None) -> np.ndarray:
    """Finite shift difference ``[V(x + h) - V(x)] / |h|``."""
    if V is None:
        V, _ = build_V(model, tp)
    offsets, _ = grid_offsets(model, tp)
    h_norm = float(np.linalg.norm(offsets * model.steps))
    return (_shift(V, -offsets) - V) / h_norm


def solve_L_hermitian(rho, D, tol: float = RESIDUAL_TOL):
    """Hermitian ``L`` with ``(L rho + rho L)/2 = D``; raises when the residual
    exceeds ``tol * max|D|`` (a single matrix or a stack)."""
    L, residual = solve_symmetric_lyapunov(rho, D)
    scale = np.max(np.abs(D), axis=(-2, -1))
    bad = residual > tol * np.maximum(scale, np.finfo(float).tiny)
    if np.any(bad & (residual > 0)):
        worst = float(np.max(np.where(bad, residual, 0.0)))
        raise UnsolvableComponentError(worst)
    return L


def assemble(model: GridHybridModel, testpoints: Sequence[TestPoint],
             residual_tol: float = RESIDUAL_TOL) -> WwAssembly:
    """Assemble ``G``, ``C`` and ``Delta`` for a set of test points."""
    if len(testpoints) == 0:
        raise ValueError("at least one test point is required")
    rho = model.states
    grid_axes = tuple(range(model.param_dim))
    L_ops, snapped, snaps, residuals = [], [], [], []
    for tp in testpoints:
        offsets, snap = grid_offsets(model, tp)
        tp_grid = TestPoint(offsets * model.steps, tp.s)
        V, _ = build_V(model, tp_grid)
        D = build_D(model, tp_grid, V)
        L, res = solve_symmetric_lyapunov(rho, D)
        # Relative to the largest D on the grid; tail points carry ~0 weight.
        rel = float(np.max(res)) / max(float(np.max(np.abs(D))), np.finfo(float).tiny)
        if rel > residual_tol:
            raise UnsolvableComponentError(float(np.max(res)))
        L_ops.append(L)
        snapped.append(tp_grid)
        snaps.append(snap)
        residuals.append(rel)

    K = len(testpoints)
    G = np.empty((K, K))
    expect_im = np.empty(K)
    for k in range(K):
        expect_im[k] = float(np.imag(np.einsum("...ij,...ji->...", L_ops[k], rho)).sum())
        for kp in range(k, K):
            G[k, kp] = float(np.real(np.einsum("...ji,...jk,...ki->...",
                                               np.conj(L_ops[k]), L_ops[kp], rho)).sum(axis=grid_axes))
            G[kp, k] = G[k, kp]
    Delta = np.outer(expect_im, expect_im)
    C = np.stack([tp.h / tp.norm for tp in snapped], axis=1)
    return WwAssembly(G=G, C=C, Delta=Delta, L_ops=L_ops, testpoints=snapped,
                      snap_errors=snaps, residuals=residuals)


def covariance_bound(asm: WwAssembly) -> np.ndarray:
    """``C (G - Delta)^-1 C^T`` as a ``J x J`` matrix."""
    Geff = np.asarray(asm.G, dtype=float) - np.asarray(asm.Delta, dtype=float)
    if np.max(np.abs(Geff - Geff.T)) > 1e-12 * np.max(np.abs(Geff)):
        raise SingularAssemblyError("G - Delta is not symmetric")
    Geff = 0.5 * (Geff + Geff.T)
    lam = np.linalg.eigvalsh(Geff)
    if lam[-1] <= 0 or lam[0] <= SINGULAR_TOL * lam[-1]:
        names = [f"(h={tp.h.tolist()}, s={tp.s})" for tp in asm.testpoints] or "?"
        raise SingularAssemblyError(
            f"G - Delta is not strictly positive (eigenvalues {lam}); test points {names}")
    C = np.asarray(asm.C, dtype=float)
    bound = C @ np.linalg.solve(Geff, C.T)
    return 0.5 * (bound + bound.T)


def ww_bound(model: GridHybridModel, testpoints: Sequence[TestPoint] | TestPoint):
    """Bound matrix for the given test points; a float for single-parameter models."""
    if isinstance(testpoints, TestPoint):
        testpoints = [testpoints]
    bound = covariance_bound(assemble(model, testpoints))
    return float(bound[0, 0]) if bound.shape == (1, 1) else bound


def classical_ww(p, h_steps: int, dx: float, s: float = 0.5) -> float:
    """Classical single-test-point Weiss-Weinstein bound from a joint table.

    Parameters
    ----------
    p : ndarray, shape (n_x, n_y)
        Joint probabilities ``p(x_i, y)`` on a uniform x-grid, summing to 1.
    h_steps : int
        Displacement in grid steps (nonzero).
    dx : float
        Grid spacing.
    s : float
        Exponent in (0, 1).
    """
    p = np.asarray(p, dtype=float)
    if abs(p.sum() - 1.0) > 1e-8 or np.any(p < 0):
        raise ModelError("joint table must be nonnegative and normalized")
    if h_steps == 0:
        raise ValueError("h_steps must be nonzero")
    if not 0 < s < 1:
        raise ValueError("s must lie in (0, 1)")
    h = abs(h_steps) * dx
    p_plus = _shift(p, [-h_steps])   # p(x + h, y)
    p_minus = _shift(p, [h_steps])   # p(x - h, y)
    pos = p > 0
    safe = np.where(pos, p, 1.0)
    ratio_plus = np.where(pos, (p_plus / safe) ** s, 0.0)
    ratio_minus = np.where(pos, (p_minus / safe) ** (1.0 - s), 0.0)
    overlap = float(np.sum(p * ratio_plus))
    if overlap < DEGENERATE_TOL:
        raise DegenerateTestPointError("likelihood ratios vanish everywhere")
    L = (ratio_plus - ratio_minus) / (overlap * h)
    return 1.0 / float(np.sum(p * L * L))
