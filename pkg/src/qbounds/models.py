"""
Priors, phase-estimation models, discretized hybrid states, POVMs and a
measurement simulator.

Conventions: hbar = 1, phases in radians, a model's generator acts as
``U_x = exp(-i x H)``.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence, Union

import numpy as np
from scipy.interpolate import CubicSpline

from .operators import OperatorError, check_hermitian, dagger

NORM_TOL = 1e-10


class ModelError(ValueError):
    """Invalid model, prior or POVM definition."""


class IntegrationDomainWarning(RuntimeWarning):
    """Shifted prior support extends beyond the tabulation grid."""


# ---------------------------------------------------------------------------
# Priors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GaussianPrior:
    mean: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ModelError(f"sigma must be positive, got {self.sigma}")

    def pdf(self, x):
        z = (np.asarray(x, dtype=float) - self.mean) / self.sigma
        return np.exp(-0.5 * z * z) / (math.sqrt(2 * math.pi) * self.sigma)

    def overlap(self, s, h):
        """Closed-form ``int p(x+h)^s p(x)^(1-s) dx``, valid for any real s."""
        s = np.asarray(s, dtype=float)
        h = np.asarray(h, dtype=float)
        return np.exp(-h * h * s * (1.0 - s) / (2.0 * self.sigma ** 2))

    def characteristic(self, t):
        """``int p(x) exp(-i x t) dx``."""
        t = np.asarray(t, dtype=float)
        return np.exp(-1j * self.mean * t - 0.5 * (self.sigma * t) ** 2)

    def tabulate(self, points: int = 2001, half_width: float = 8.0) -> "TabulatedPrior":
        """Uniform tabulation over ``mean +- half_width * sigma``."""
        grid = self.mean + self.sigma * np.linspace(-half_width, half_width, points)
        w = self.pdf(grid)
        return TabulatedPrior(grid, w / w.sum())

    @property
    def variance(self) -> float:
        return self.sigma ** 2


@dataclass(frozen=True, eq=False)
class TabulatedPrior:
    """Prior given as probability weights on a uniform grid."""

    grid: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if grid.ndim != 1 or grid.shape != w.shape or grid.size < 3:
            raise ModelError("grid and weights must be 1-D arrays of equal length >= 3")
        steps = np.diff(grid)
        if np.any(steps <= 0):
            raise ModelError("grid must be strictly ascending")
        if np.max(np.abs(steps - steps.mean())) > 1e-9 * abs(steps.mean()):
            raise ModelError("grid must be uniformly spaced")
        if np.any(w < 0):
            raise ModelError("weights must be nonnegative")
        if abs(w.sum() - 1.0) > NORM_TOL:
            raise ModelError(f"weights sum to {w.sum()!r}, not 1")
        if w[0] >= 1e-12 or w[-1] >= 1e-12:
            raise ModelError("prior weights must vanish (< 1e-12) at the grid boundary")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "weights", w)

    @property
    def dx(self) -> float:
        return float((self.grid[-1] - self.grid[0]) / (self.grid.size - 1))

    @property
    def mean(self) -> float:
        return float(self.weights @ self.grid)

    @property
    def variance(self) -> float:
        return float(self.weights @ (self.grid - self.mean) ** 2)

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    def density(self) -> np.ndarray:
        return self.weights / self.dx

    def _shifted_density(self, h: float) -> tuple[np.ndarray, float]:
        """Density at ``grid + h`` (zero off-grid) and the prior mass lost off-grid."""
        m = h / self.dx
        k = round(m)
        dens = self.density()
        out = np.zeros_like(dens)
        if abs(m - k) < 1e-9:
            k = int(k)
            if k >= 0:
                out[: dens.size - k] = dens[k:]
            else:
                out[-k:] = dens[: dens.size + k]
        else:
            spline = CubicSpline(self.grid, dens)
            xs = self.grid + h
            inside = (xs >= self.grid[0]) & (xs <= self.grid[-1])
            out[inside] = np.clip(spline(xs[inside]), 0.0, None)
        lost = float(self.weights[(self.grid + h < self.grid[0]) | (self.grid + h > self.grid[-1])].sum())
        return out, lost

    def overlap(self, s, h):
        """Quadrature of ``int p(x+h)^s p(x)^(1-s) dx`` over the prior support."""
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        h_arr = np.atleast_1d(np.asarray(h, dtype=float))
        s_arr, h_arr = np.broadcast_arrays(s_arr, h_arr)
        out = np.empty(s_arr.shape)
        dens = self.density()
        pos = dens > 0
        for idx, (si, hi) in enumerate(zip(s_arr.ravel(), h_arr.ravel())):
            if hi == 0.0:
                out.flat[idx] = 1.0
                continue
            shifted, lost = self._shifted_density(hi)
            if lost > 1e-10:
                warnings.warn(f"prior shifted by h={hi:g} leaves the grid (mass {lost:.3g}); "
                              "integrating over the overlap region only",
                              IntegrationDomainWarning, stacklevel=2)
            terms = np.zeros_like(dens)
            ok = pos & (shifted > 0)
            terms[ok] = shifted[ok] ** si * dens[ok] ** (1.0 - si)
            out.flat[idx] = terms.sum() * self.dx
        if np.ndim(s) == 0 and np.ndim(h) == 0:
            return float(out.ravel()[0])
        return out

    def characteristic(self, t):
        t = np.asarray(t, dtype=float)
        return np.exp(-1j * np.multiply.outer(t, self.grid)) @ self.weights

    def tabulate(self, points: int | None = None, half_width: float | None = None):
        return self


Prior = Union[GaussianPrior, TabulatedPrior]


def prior_overlap_gc(prior: Prior, s, h):
    """Classical overlap ``g_c(s, h) = int p(x+h)^s p(x)^(1-s) dx``."""
    return prior.overlap(s, h)


# ---------------------------------------------------------------------------
# Phase models
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PhaseModel:
    """Pure probe ``sum_j c_j |j>`` under ``exp(-i x H)``, ``H|j> = E_j |j>``,
    repeated over ``copies`` independent probes."""

    energies: np.ndarray
    amplitudes: np.ndarray
    copies: int = 1
    kind: str = "generic"

    def __post_init__(self):
        e = np.asarray(self.energies, dtype=float)
        c = np.asarray(self.amplitudes, dtype=complex)
        if e.ndim != 1 or e.shape != c.shape or e.size == 0:
            raise ModelError("energies and amplitudes must be equal-length 1-D arrays")
        if not np.all(np.isfinite(e)):
            raise ModelError("generator eigenvalues must be finite")
        norm = float(np.sum(np.abs(c) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise ModelError(f"amplitudes are not normalized (sum |c|^2 = {norm!r})")
        if int(self.copies) != self.copies or self.copies < 1:
            raise ModelError("copies must be a positive integer")
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "amplitudes", c)
        object.__setattr__(self, "copies", int(self.copies))

    @classmethod
    def qubit(cls, E: float, copies: int = 1) -> "PhaseModel":
        return cls(np.array([0.0, float(E)]), np.array([1.0, 1.0]) / math.sqrt(2.0),
                   copies, "qubit")

    @classmethod
    def bosonic(cls, epsilon: float, M: int, copies: int = 1) -> "PhaseModel":
        if not 0 < epsilon < 1:
            raise ModelError("epsilon must lie in (0, 1)")
        if int(M) != M or M < 1:
            raise ModelError("M must be a positive integer")
        c = np.full(M + 1, math.sqrt(epsilon / M))
        c[0] = math.sqrt(1.0 - epsilon)
        return cls(np.arange(M + 1, dtype=float), c, copies, "bosonic")

    @property
    def dim(self) -> int:
        return self.energies.size

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def with_copies(self, copies: int) -> "PhaseModel":
        return PhaseModel(self.energies, self.amplitudes, copies, self.kind)

    def state(self) -> np.ndarray:
        return np.outer(self.amplitudes, np.conj(self.amplitudes))

    def generator(self) -> np.ndarray:
        return np.diag(self.energies).astype(complex)

    @property
    def mean_energy(self) -> float:
        return float(self.populations @ self.energies)

    @property
    def energy_variance(self) -> float:
        p = self.populations
        return float(p @ self.energies ** 2 - (p @ self.energies) ** 2)

    @property
    def bandwidth(self) -> float:
        """Spread of the collective spectrum, ``copies * (E_max - E_min)``."""
        return self.copies * float(self.energies.max() - self.energies.min())

    def collapse_copies(self) -> "PhaseModel":
        """Equivalent single-probe model of the ``copies``-fold product state.

        Product-state components with equal total energy are merged into one
        normalized vector, so only the distribution of the summed eigenvalue
        survives; amplitudes are the square roots of its probabilities (the
        phases are irrelevant because the merged vectors are orthogonal).
        """
        if self.copies == 1:
            return self
        # Rounded keys merge numerically equal eigenvalue sums.
        dist = {0.0: 1.0}
        single = {}
        for e, p in zip(self.energies, self.populations):
            key = round(float(e), 12)
            single[key] = single.get(key, 0.0) + float(p)
        for _ in range(self.copies):
            nxt: dict[float, float] = {}
            for e1, p1 in dist.items():
                for e2, p2 in single.items():
                    key = round(e1 + e2, 10)
                    nxt[key] = nxt.get(key, 0.0) + p1 * p2
            dist = nxt
        energies = np.array(sorted(dist))
        probs = np.array([dist[e] for e in energies])
        probs /= probs.sum()
        return PhaseModel(energies, np.sqrt(probs), 1, self.kind)


def evolve(model: PhaseModel, x: float) -> np.ndarray:
    """Single-probe amplitudes ``c_j exp(-i x E_j)``."""
    return model.amplitudes * np.exp(-1j * x * model.energies)


def z_overlap(model: PhaseModel, h):
    """Single-probe overlap ``<psi| exp(-i h H) |psi>``; accepts arrays of h."""
    h = np.asarray(h, dtype=float)
    phases = np.exp(-1j * np.multiply.outer(h, model.energies))
    return phases @ model.populations


def fidelity(model: PhaseModel, h):
    """Copy-composed fidelity ``|z(h)|^(2 nu)``."""
    return np.abs(z_overlap(model, h)) ** (2 * model.copies)


# ---------------------------------------------------------------------------
# Discretized hybrid models
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class GridHybridModel:
    """Hybrid states ``rho(x_i) = rho_{x_i} p(x_i) dx`` on a uniform grid.

    ``axes`` holds one uniform 1-D grid per parameter; ``states`` has shape
    ``(n_1, ..., n_J, d, d)``. ``generator`` is kept when the model comes
    from a unitary family (needed for the MMSE formula).
    """

    axes: tuple
    states: np.ndarray
    generator: np.ndarray | None = None
    prior: Prior | None = None

    def __post_init__(self):
        axes = tuple(np.asarray(a, dtype=float) for a in self.axes)
        states = np.asarray(self.states, dtype=complex)
        J = len(axes)
        if states.ndim != J + 2 or states.shape[:J] != tuple(a.size for a in axes):
            raise ModelError("states shape must be (*grid_shape, d, d)")
        for a in axes:
            st = np.diff(a)
            if np.any(st <= 0) or np.max(np.abs(st - st.mean())) > 1e-9 * st.mean():
                raise ModelError("each grid axis must be uniform and ascending")
        total = float(np.real(np.trace(states, axis1=-2, axis2=-1)).sum())
        if abs(total - 1.0) > 1e-8:
            raise ModelError(f"hybrid states are not normalized (total trace {total!r})")
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "states", states)

    @property
    def param_dim(self) -> int:
        return len(self.axes)

    @property
    def steps(self) -> np.ndarray:
        return np.array([(a[-1] - a[0]) / (a.size - 1) for a in self.axes])

    @property
    def dim(self) -> int:
        return self.states.shape[-1]

    @property
    def grid(self) -> np.ndarray:
        if self.param_dim != 1:
            raise ModelError("grid is only defined for single-parameter models")
        return self.axes[0]

    @property
    def dx(self) -> float:
        return float(self.steps[0])

    def coordinates(self) -> list[np.ndarray]:
        return list(np.meshgrid(*self.axes, indexing="ij"))

    @classmethod
    def from_conditional_states(cls, prior: TabulatedPrior, cond_states, generator=None):
        """Weight conditional states ``rho_{x_i}`` (shape (n, d, d)) by the prior."""
        cond = np.asarray(cond_states, dtype=complex)
        if cond.shape[0] != prior.grid.size:
            raise ModelError("one conditional state per grid point required")
        states = cond * prior.weights[:, None, None]
        return cls((prior.grid,), states, generator, prior)

    @classmethod
    def from_unitary_family(cls, rho0, H, prior: Prior, points: int = 2001,
                            half_width: float = 20.0):
        """Discretize ``rho_x = U_x rho0 U_x^dagger`` with ``U_x = exp(-i x H)``.

        Gaussian priors are tabulated over ``mean +- half_width * sigma``; the
        wide default keeps the support of shifted states inside the grid for
        test points up to ``|h| ~ 6 sigma``.
        """
        rho0 = check_hermitian(rho0, name="rho0")
        H = check_hermitian(H, name="H")
        tab = prior.tabulate(points, half_width) if isinstance(prior, GaussianPrior) else prior
        lam, vec = np.linalg.eigh(H)
        r = dagger(vec) @ rho0 @ vec
        phase = np.exp(-1j * np.multiply.outer(tab.grid, lam))
        cond = phase[:, :, None] * r[None] * np.conj(phase)[:, None, :]
        cond = vec @ cond @ dagger(vec)
        gm = cls.from_conditional_states(tab, cond, H)
        object.__setattr__(gm, "prior", prior)
        return gm

    @classmethod
    def from_phase_model(cls, model: PhaseModel, prior: Prior, points: int = 2001,
                         half_width: float = 20.0):
        single = model.collapse_copies()
        return cls.from_unitary_family(single.state(), single.generator(), prior,
                                       points, half_width)

    @classmethod
    def classical(cls, prior: TabulatedPrior, likelihood):
        """Commuting family: ``rho(x_i) = diag(p(x_i, y))`` from ``p(y | x_i)``."""
        lik = np.asarray(likelihood, dtype=float)
        joint = lik * prior.weights[:, None]
        states = np.zeros(joint.shape + (joint.shape[1],), dtype=complex)
        idx = np.arange(joint.shape[1])
        states[:, idx, idx] = joint
        return cls((prior.grid,), states, None, prior)


def average_state(model, prior: Prior | None = None) -> np.ndarray:
    """Prior-averaged state ``int p(x) U_x rho U_x^dagger dx``.

    For a :class:`PhaseModel` the average is over the collapsed copies model
    and uses the prior's characteristic function (closed form for a Gaussian);
    for a :class:`GridHybridModel` it is the sum of the hybrid states.
    """
    if isinstance(model, GridHybridModel):
        axes = tuple(range(model.param_dim))
        return model.states.sum(axis=axes)
    if prior is None:
        raise ModelError("a prior is required to average a PhaseModel")
    single = model.collapse_copies()
    gaps = np.subtract.outer(single.energies, single.energies)
    return single.state() * prior.characteristic(gaps)


# ---------------------------------------------------------------------------
# Measurements
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Povm:
    elements: np.ndarray

    def __post_init__(self):
        el = np.asarray(self.elements, dtype=complex)
        if el.ndim != 3 or el.shape[1] != el.shape[2]:
            raise ModelError("POVM elements must have shape (n_outcomes, d, d)")
        try:
            check_hermitian(el, name="POVM element")
        except OperatorError as exc:
            raise ModelError(str(exc)) from None
        if np.min(np.linalg.eigvalsh(el)) < -1e-10:
            raise ModelError("POVM elements must be positive semidefinite")
        dev = np.max(np.abs(el.sum(axis=0) - np.eye(el.shape[1])))
        if dev > 1e-9:
            raise ModelError(f"POVM is not complete (deviation {dev:.3g})")
        object.__setattr__(self, "elements", el)

    @classmethod
    def from_vectors(cls, vectors: Sequence, weights: Sequence[float] | None = None):
        vs = np.asarray(vectors, dtype=complex)
        w = np.ones(len(vs)) if weights is None else np.asarray(weights, dtype=float)
        return cls(w[:, None, None] * np.einsum("ni,nj->nij", vs, np.conj(vs)))

    @property
    def n_outcomes(self) -> int:
        return self.elements.shape[0]


def joint_table(model: GridHybridModel, povm: Povm) -> np.ndarray:
    """``p(x_i, y) = tr[E_y rho(x_i)]`` with grid points flattened; shape (N, n_y)."""
    if povm.elements.shape[-1] != model.dim:
        raise ModelError("POVM and model dimensions differ")
    states = model.states.reshape(-1, model.dim, model.dim)
    p = np.real(np.einsum("yij,nji->ny", povm.elements, states))
    if np.min(p) < -1e-10:
        raise ModelError(f"model and POVM give negative probability {np.min(p):.3g}")
    return np.clip(p, 0.0, None)


@dataclass(frozen=True)
class MeasurementSamples:
    x: np.ndarray
    y: np.ndarray
    x_index: np.ndarray


def simulate_measurement(model: GridHybridModel, povm: Povm, trials: int,
                         seed: int) -> MeasurementSamples:
    """Draw ``trials`` i.i.d. pairs ``(x_i, y)`` from the joint distribution."""
    if trials < 1:
        raise ModelError("trials must be >= 1")
    p = joint_table(model, povm)
    flat = p.ravel() / p.sum()
    rng = np.random.default_rng(seed)
    draws = rng.choice(flat.size, size=trials, p=flat)
    xi, y = np.divmod(draws, p.shape[1])
    coords = np.stack([c.ravel() for c in model.coordinates()], axis=-1)
    x = coords[xi]
    if model.param_dim == 1:
        x = x[:, 0]
    return MeasurementSamples(x=x, y=y, x_index=xi)


def conditional_mean_estimator(model: GridHybridModel, povm: Povm) -> np.ndarray:
    """Posterior mean ``E[x | y]`` for each outcome, from the discretized joint."""
    p = joint_table(model, povm)
    coords = np.stack([c.ravel() for c in model.coordinates()], axis=-1)
    marg = p.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        est = (p.T @ coords) / marg[:, None]
    est[marg <= 0] = 0.0
    return est[:, 0] if model.param_dim == 1 else est


def exact_mse(model: GridHybridModel, povm: Povm, estimator=None) -> float:
    """Exact mean-square error of an estimator table on the discretized model."""
    if model.param_dim != 1:
        raise ModelError("exact_mse is implemented for single-parameter models")
    p = joint_table(model, povm)
    est = conditional_mean_estimator(model, povm) if estimator is None else np.asarray(estimator)
    err = est[None, :] - model.grid[:, None]
    return float(np.sum(p * err ** 2))


# ---------------------------------------------------------------------------
# Model definition files
# ---------------------------------------------------------------------------

_TOP_KEYS = {"type", "E", "nu", "prior", "amplitudes"}


@dataclass
class ModelSpec:
    model: PhaseModel
    prior: Prior
    source: dict = field(default_factory=dict)


def _parse_prior(obj) -> Prior:
    if not isinstance(obj, dict):
        raise ModelError("prior must be an object")
    keys = set(obj)
    if keys <= {"mean", "sigma"} and "sigma" in keys:
        return GaussianPrior(float(obj.get("mean", 0.0)), float(obj["sigma"]))
    if keys == {"grid", "weights"}:
        return TabulatedPrior(np.asarray(obj["grid"], float), np.asarray(obj["weights"], float))
    raise ModelError(f"unrecognised prior keys {sorted(keys)}")


def _parse_amplitudes(values) -> np.ndarray:
    out = []
    for v in values:
        if isinstance(v, (list, tuple)):
            if len(v) != 2:
                raise ModelError("complex amplitudes are given as [re, im]")
            out.append(complex(float(v[0]), float(v[1])))
        else:
            out.append(complex(float(v)))
    return np.array(out)


def parse_model(obj: dict) -> ModelSpec:
    """Build a model from its JSON object form; unknown keys are rejected."""
    if not isinstance(obj, dict):
        raise ModelError("model definition must be a JSON object")
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        raise ModelError(f"unknown model keys: {sorted(unknown)}")
    for key in ("type", "E", "prior"):
        if key not in obj:
            raise ModelError(f"missing model key {key!r}")
    kind = obj["type"]
    nu = obj.get("nu", 1)
    if not isinstance(nu, int) or isinstance(nu, bool) or nu < 1:
        raise ModelError("nu must be a positive integer")
    E = obj["E"]
    if kind != "generic" and "amplitudes" in obj:
        raise ModelError("amplitudes are only accepted for generic models")
    if kind == "qubit":
        if not isinstance(E, (int, float)) or isinstance(E, bool):
            raise ModelError("qubit model needs a numeric E")
        model = PhaseModel.qubit(float(E), nu)
    elif kind == "bosonic":
        if not isinstance(E, dict) or set(E) != {"epsilon", "M"}:
            raise ModelError('bosonic model needs E = {"epsilon": ..., "M": ...}')
        model = PhaseModel.bosonic(float(E["epsilon"]), E["M"], nu)
    elif kind == "generic":
        if not isinstance(E, list):
            raise ModelError("generic model needs E as a list of generator eigenvalues")
        energies = np.asarray(E, dtype=float)
        if "amplitudes" in obj:
            amps = _parse_amplitudes(obj["amplitudes"])
        else:
            amps = np.full(energies.size, 1.0 / math.sqrt(energies.size))
        model = PhaseModel(energies, amps, nu, "generic")
    else:
        raise ModelError(f"unknown model type {kind!r}")
    return ModelSpec(model, _parse_prior(obj["prior"]), dict(obj))


def load_model(path) -> ModelSpec:
    with open(Path(path)) as fh:
        return parse_model(json.load(fh))
