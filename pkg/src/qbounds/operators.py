"""
Dense Hermitian / positive-semidefinite matrix algebra.

Operators are plain complex ``numpy`` arrays. Every function accepts a
single ``(d, d)`` matrix or a stack ``(..., d, d)``; spectral cutoffs are
applied per matrix, relative to that matrix's own largest eigenvalue, so
the prior weight carried by a hybrid state does not move the rank decision.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

HERMITIAN_TOL = 1e-10
SUPPORT_TOL = 1e-10
NEGATIVITY_TOL = 1e-8
KERNEL_TOL = 1e-12


class OperatorError(ValueError):
    """Invalid operator input (shape, Hermiticity)."""


class NegativityError(OperatorError):
    """A supposedly positive operator has a significantly negative eigenvalue."""


class EigDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues[..., None, :]) @ dagger(v)


def dagger(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


def _as_square(a, name="operator") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise OperatorError(f"{name} must be square, got shape {a.shape}")
    return a


def check_hermitian(a, tol: float = HERMITIAN_TOL, name: str = "operator") -> np.ndarray:
    """Return ``a`` as a complex array after checking ``a == a^dagger`` entrywise."""
    a = _as_square(a, name)
    dev = np.max(np.abs(a - dagger(a))) if a.size else 0.0
    if dev > tol:
        raise OperatorError(f"{name} is not Hermitian (max deviation {dev:.3g})")
    return a


def check_state(rho, trace: float = 1.0, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate a density operator: Hermitian, PSD and of the declared trace."""
    rho = check_hermitian(rho, tol, "state")
    lam = np.linalg.eigvalsh(rho)
    if np.min(lam) < -tol:
        raise NegativityError(f"state has eigenvalue {np.min(lam):.3g}")
    tr = np.real(np.trace(rho, axis1=-2, axis2=-1))
    if np.max(np.abs(tr - trace)) > tol:
        raise OperatorError(f"state trace {tr} differs from {trace}")
    return rho


def eig_hermitian(a) -> EigDecomposition:
    """Eigendecomposition with ascending real eigenvalues and unitary eigenvectors."""
    a = check_hermitian(a)
    # Symmetrize so LAPACK sees an exactly Hermitian input.
    lam, vec = np.linalg.eigh(0.5 * (a + dagger(a)))
    return EigDecomposition(lam, vec)


def _clamped_spectrum(rho):
    lam, vec = np.linalg.eigh(0.5 * (rho + dagger(rho)))
    scale = np.max(np.abs(lam), axis=-1, keepdims=True)
    if np.any(lam < -NEGATIVITY_TOL * scale):
        worst = np.min(lam / np.where(scale > 0, scale, 1.0))
        raise NegativityError(f"operator is not positive semidefinite "
                              f"(relative eigenvalue {worst:.3g})")
    return np.clip(lam, 0.0, None), vec, scale


def frac_power_on_support(rho, s: float, support_tol: float = SUPPORT_TOL) -> np.ndarray:
    """``rho**s`` restricted to the support of ``rho``.

    Eigenvalues at or below ``support_tol * lambda_max`` are treated as zero
    and contribute nothing, so ``s = 0`` gives the support projector and
    negative ``s`` the generalized inverse power.
    """
    rho = _as_square(rho)
    lam, vec, scale = _clamped_spectrum(rho)
    keep = lam > support_tol * scale
    safe = np.where(keep, lam, 1.0)
    powered = np.where(keep, safe ** s, 0.0)
    return (vec * powered[..., None, :]) @ dagger(vec)


def support_projector(rho, support_tol: float = SUPPORT_TOL) -> np.ndarray:
    return frac_power_on_support(rho, 0.0, support_tol)


def jordan_product(a, b) -> np.ndarray:
    """Symmetrized product ``(ab + ba) / 2``."""
    a = _as_square(a)
    b = _as_square(b)
    if a.shape[-1] != b.shape[-1]:
        raise OperatorError(f"dimension mismatch {a.shape} vs {b.shape}")
    return 0.5 * (a @ b + b @ a)


def real_trace_form(a, b, rho):
    """``Re tr(a^dagger b rho)``, broadcast over leading axes."""
    a, b, rho = _as_square(a), _as_square(b), _as_square(rho)
    if not a.shape[-1] == b.shape[-1] == rho.shape[-1]:
        raise OperatorError("dimension mismatch")
    # tr(X Y) = sum_ij X_ij Y_ji
    return np.real(np.einsum("...ji,...jk,...ki->...", np.conj(a), b, rho))


def solve_symmetric_lyapunov(rho, d, kernel_tol: float = KERNEL_TOL):
    """Hermitian solution ``L`` of ``(L rho + rho L) / 2 = d``.

    Works in the eigenbasis of ``rho``: ``L_ab = 2 d_ab / (l_a + l_b)`` over
    pairs with ``l_a + l_b > kernel_tol * l_max``. Pairs in the kernel-kernel
    block are dropped; the returned residual ``max|(L rho + rho L)/2 - d|``
    measures the part of ``d`` that no solution can reach.

    Returns
    -------
    L : ndarray
    residual : ndarray or float
        One value per matrix in the stack.
    """
    rho = _as_square(rho, "rho")
    d = _as_square(d, "D")
    lam, vec, scale = _clamped_spectrum(rho)
    d_eig = dagger(vec) @ d @ vec
    denom = lam[..., :, None] + lam[..., None, :]
    keep = denom > kernel_tol * scale[..., None]
    l_eig = np.where(keep, 2.0 * d_eig / np.where(keep, denom, 1.0), 0.0)
    L = vec @ l_eig @ dagger(vec)
    residual = np.max(np.abs(0.5 * (L @ rho + rho @ L) - d), axis=(-2, -1))
    return L, residual
