import math

import numpy as np
import pytest
from scipy.special import erfc

from qbounds.models import GaussianPrior
from qbounds.numerics import (BracketError, EmptyScanError, ScanSpec, integrate, maximize_1d,
                              solve_root)


def test_maximize_parabola():
    x, f = maximize_1d(lambda h: -(h - 1.0) ** 2, ScanSpec(0.0, 2.0))
    assert x == pytest.approx(1.0, abs=1e-8)
    assert f == pytest.approx(0.0, abs=1e-8)


def test_maximize_qwwb_objective_without_dynamics():
    # E = 0: Sigma_W(h) = sigma^2 (u/2)/sinh(u/2), u = h^2/(2 sigma^2); sup at h -> 0
    sigma = 0.1

    def f(h):
        u = h * h / (2 * sigma ** 2)
        return sigma ** 2 * (u / 2) / math.sinh(u / 2)

    x, val = maximize_1d(f, ScanSpec(1e-6, 10 * sigma))
    assert x < 1e-3
    assert val == pytest.approx(sigma ** 2, rel=1e-9)


def test_refinement_never_worse_than_grid():
    f = lambda h: np.cos(37 * h) ** 2 * np.exp(-h)
    spec = ScanSpec(0.0, 3.0, 50)
    grid = np.linspace(0.0, 3.0, 50)
    _, val = maximize_1d(f, spec)
    assert val >= f(grid).max()


def test_maximize_vectorized_matches_scalar():
    f = lambda h: np.sin(3 * h) * np.exp(-0.3 * h)
    a = maximize_1d(f, ScanSpec(0, 5), vectorized=True)
    b = maximize_1d(f, ScanSpec(0, 5))
    assert a == pytest.approx(b, rel=1e-12)


def test_maximize_skips_nonfinite_points():
    f = lambda h: np.where(h < 0.5, np.nan, -(h - 0.7) ** 2)
    x, _ = maximize_1d(f, ScanSpec(0, 1), vectorized=True)
    assert x == pytest.approx(0.7, abs=1e-8)


def test_maximize_all_nonfinite_raises():
    with pytest.raises(EmptyScanError):
        maximize_1d(lambda h: float("nan"), ScanSpec(0, 1))


def test_argmax_invariant_under_monotone_transform():
    f = lambda h: -(h - 0.3) ** 2 + 2
    x1, _ = maximize_1d(f, ScanSpec(0, 1))
    x2, _ = maximize_1d(lambda h: math.log(f(h)), ScanSpec(0, 1))
    assert x1 == pytest.approx(x2, abs=1e-8)


@pytest.mark.parametrize("kwargs", [dict(lower=1, upper=1), dict(lower=0, upper=1, coarse_points=8),
                                    dict(lower=0, upper=1, refine_tol=0)])
def test_scanspec_validation(kwargs):
    with pytest.raises(ValueError):
        ScanSpec(**kwargs)


def test_integrate_t_erfc():
    assert integrate(lambda t: t * erfc(t), 0, 12) == pytest.approx(0.25, abs=1e-8)


def test_integrate_gaussian_pdf():
    p = GaussianPrior(0.3, 0.2)
    assert integrate(lambda x: float(p.pdf(x)), 0.3 - 1.6, 0.3 + 1.6) == pytest.approx(1.0, abs=1e-8)


def test_integrate_gc_against_closed_form(rng):
    p = GaussianPrior(0.0, 0.1)
    for s, h in zip(rng.uniform(0.05, 0.95, 20), rng.uniform(-0.5, 0.5, 20)):
        quad = integrate(lambda x: float(p.pdf(x + h) ** s * p.pdf(x) ** (1 - s)), -2.0, 2.0,
                         breakpoints=[-h, 0.0])
        assert quad == pytest.approx(float(p.overlap(s, h)), abs=1e-7)


def test_integrate_linear_and_additive():
    f = lambda x: math.sin(x) ** 2
    g = lambda x: math.exp(-x)
    whole = integrate(lambda x: 2 * f(x) - 3 * g(x), 0, 4)
    assert whole == pytest.approx(2 * integrate(f, 0, 4) - 3 * integrate(g, 0, 4), rel=1e-10)
    assert integrate(f, 0, 4) == pytest.approx(integrate(f, 0, 1.3) + integrate(f, 1.3, 4), rel=1e-10)


def test_integrate_reversed_and_empty():
    assert integrate(lambda x: x, 1, 0) == pytest.approx(-0.5)
    assert integrate(lambda x: x, 2, 2) == 0.0


def test_solve_root_sine_constant():
    phi = solve_root(lambda p: p * math.sin(p) - 1 + math.cos(p), (2.0, 3.0))
    assert math.sin(phi) == pytest.approx(0.7246, abs=5e-5)


def test_solve_root_linear_and_residual():
    f = lambda x: x - 1
    r = solve_root(f, (0, 2))
    assert r == pytest.approx(1.0, abs=1e-13)
    g = lambda x: math.exp(x) - 3
    assert abs(g(solve_root(g, (0, 3)))) < 1e-12


def test_solve_root_bracket_error():
    with pytest.raises(BracketError):
        solve_root(lambda x: x * x + 1, (-1, 1))
