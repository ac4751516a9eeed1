import math

import numpy as np
import pytest
from scipy import stats

from fracwave.errors import DegenerateInput, DomainError, NonConvergence
from fracwave.quadrature import (
    IntegrationDomain,
    adaptive_integrate,
    divergence_verdict,
    graded_rule,
    growth_fit,
    importance_sample_mu,
)
from fracwave.spectral_core import HurstVector


def test_inverse_sqrt_singularity():
    res = adaptive_integrate(lambda x: x ** -0.5, IntegrationDomain.interval(0.0, 1.0, 0.5), 1e-8)
    assert abs(res.value - 2.0) < 1e-8
    assert res.abs_error_estimate <= 1e-8


def test_gaussian_integral():
    res = adaptive_integrate(lambda x: np.exp(-x * x), IntegrationDomain.interval(-8.0, 8.0), 1e-10)
    assert res.value == pytest.approx(math.sqrt(math.pi), abs=1e-10)


def test_density_times_gaussian_product():
    dom = IntegrationDomain(2, (((-8.0, 8.0), (-8.0, 8.0)),), {0: -0.4, 1: -0.4})
    f = lambda x, y: np.abs(x) ** 0.4 * np.abs(y) ** 0.4 * np.exp(-x * x - y * y)
    res = adaptive_integrate(f, dom, 1e-9)
    assert res.value == pytest.approx(math.gamma(0.7) ** 2, abs=1e-6)


@pytest.mark.parametrize("beta", [0.1, 0.5, 0.9])
def test_graded_mesh_power_singularity(beta):
    exact = 1.0 / (1.0 - beta)
    res = adaptive_integrate(lambda x: x ** -beta, IntegrationDomain.interval(0.0, 1.0, beta), 1e-10)
    assert abs(res.value - exact) / exact < 1e-10
    x, w = graded_rule(0.0, 1.0, 12, beta)
    assert abs(np.sum(w * x ** -beta) - exact) / exact < 1e-10


def test_empty_domain_and_budget():
    with pytest.raises(DomainError):
        adaptive_integrate(lambda x: x, IntegrationDomain.interval(1.0, 1.0), 1e-6)
    with pytest.raises(NonConvergence) as info:
        adaptive_integrate(lambda x: np.sin(1.0 / x), IntegrationDomain.interval(1e-6, 1.0), 1e-14,
                           max_evaluations=3000)
    assert info.value.best_estimate is not None


def test_flat_density_is_uniform():
    H = HurstVector((0.5, 0.5))
    s = importance_sample_mu(H, 3, 2.0, 1000, seed=1, mollifier=None)
    assert np.allclose(s.weights, 16.0 / 1000)
    assert np.all(np.abs(s.points) <= 2.0)


def test_power_law_ks_statistic():
    H = HurstVector((0.3, 0.2))
    s = importance_sample_mu(H, 5, 4.0, 100_000, seed=7, mollifier=None)
    for axis, h in enumerate(H.h):
        p = 2.0 - 2.0 * h
        ks = stats.kstest(np.abs(s.points[:, axis]), lambda r: (np.clip(r, 0, 4.0) / 4.0) ** p).statistic
        assert ks < 0.01


def test_sampler_matches_deterministic_integral():
    H = HurstVector((0.3, 0.3))
    f = lambda p: np.exp(-np.sum(p * p, axis=1))
    s = importance_sample_mu(H, 4, 3.0, 200_000, seed=2, mollifier=None)
    mean, se = s.estimate(f)
    dom = IntegrationDomain(2, (((-3.0, 3.0), (-3.0, 3.0)),), {0: -0.4, 1: -0.4})
    ref = adaptive_integrate(lambda x, y: np.abs(x * y) ** 0.4 * np.exp(-x * x - y * y), dom, 1e-9).value
    assert abs(mean - ref) < 3 * se


def test_sampler_is_bit_identical():
    H = HurstVector((0.2, 0.4, 0.6))
    a = importance_sample_mu(H, 3, 5.0, 70_000, seed=9)
    b = importance_sample_mu(H, 3, 5.0, 70_000, seed=9)
    assert np.array_equal(a.points, b.points) and np.array_equal(a.weights, b.weights)
    c = importance_sample_mu(H, 3, 5.0, 70_000, seed=10)
    assert not np.array_equal(a.points, c.points)


def test_growth_fit_examples():
    fit = growth_fit([(0, 1), (1, 2), (2, 4), (3, 8)])
    assert fit.slope == pytest.approx(1.0) and fit.residual == pytest.approx(0.0, abs=1e-14)
    assert growth_fit([(n, 7.0) for n in range(6)]).slope == pytest.approx(0.0, abs=1e-14)
    noise = np.random.default_rng(0).standard_normal(12)
    vals = [(n, 2 ** (0.5 * n) * (1 + 0.01 * e)) for n, e in enumerate(noise)]
    assert abs(growth_fit(vals).slope - 0.5) < 0.02


def test_growth_fit_degenerate():
    with pytest.raises(DegenerateInput):
        growth_fit([(0, 1), (1, 2)])
    with pytest.raises(DegenerateInput):
        growth_fit([(0, 1), (1, 0), (2, 3)])


def test_verdicts():
    assert divergence_verdict([(n, 2.0 ** (0.3 * n)) for n in range(4, 12)])[0]
    assert divergence_verdict([(n, 100.0 + n) for n in range(4, 12)])[2] == "marginal"
    assert not divergence_verdict([(n, 5.0 - 2.0 ** -n) for n in range(4, 12)])[0]
