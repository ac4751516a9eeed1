import math

import numpy as np
import pytest
from scipy.integrate import quad

from fracwave.errors import DomainError
from fracwave.spectral_core import HurstVector
from fracwave.wave_moments import (
    ConeCd,
    RegimeLabel,
    WeightSpec,
    classify_regime,
    reparametrize_h_prime,
    valid_exponent_range,
)


def test_classification_examples():
    assert classify_regime(2, (0.5, 0.5, 0.5)) is RegimeLabel.WICK_RENORMALIZABLE
    assert classify_regime(4, (0.5,) * 5) is RegimeLabel.ILL_POSED
    assert classify_regime(1, (0.4, 0.4)) is RegimeLabel.REGULAR_NO_RENORM
    with pytest.raises(DomainError):
        classify_regime(2, (0.4, 0.4))


def test_boundaries_belong_to_rougher_side():
    # sums landing exactly on d - 1/2 and 3d/4 - 1/2
    assert classify_regime(1, (0.25, 0.25)) is RegimeLabel.WICK_RENORMALIZABLE
    assert classify_regime(1, (0.125, 0.125)) is RegimeLabel.ILL_POSED
    assert classify_regime(2, (0.5, 0.25, 0.25)) is RegimeLabel.ILL_POSED
    assert classify_regime(2, (0.5, 0.5, 0.5)) is RegimeLabel.WICK_RENORMALIZABLE


def test_classification_partitions_parameter_space():
    rng = np.random.default_rng(0)
    for d in (1, 2, 3):
        for _ in range(300):
            H = HurstVector((rng.uniform(0.01, 0.99),) + tuple(rng.uniform(0.01, 0.74, d)))
            s = H.total
            label = classify_regime(d, H)
            expected = [s > d - 0.5, 0.75 * d - 0.5 < s <= d - 0.5, s <= 0.75 * d - 0.5]
            assert sum(expected) == 1
            assert label is [RegimeLabel.REGULAR_NO_RENORM, RegimeLabel.WICK_RENORMALIZABLE,
                             RegimeLabel.ILL_POSED][expected.index(True)]


def test_exponent_ranges():
    lo, hi = valid_exponent_range(2, HurstVector.white_noise(2))
    assert (lo, hi) == (0.25, 0.5)
    lo, hi = valid_exponent_range(1, (0.4, 0.4))
    assert lo == 0.0 and hi == pytest.approx(0.3, abs=1e-15)
    with pytest.raises(DomainError):
        valid_exponent_range(1, (0.12, 0.12))
    with pytest.raises(DomainError):
        valid_exponent_range(1, (0.4, 0.4), RegimeLabel.WICK_RENORMALIZABLE)


def test_weight_norm():
    w = WeightSpec(1)
    assert quad(w, -np.inf, np.inf)[0] == pytest.approx(w.l1_norm, rel=1e-12)
    assert WeightSpec(3, scale=2.0).l1_norm == pytest.approx(2.0 * math.pi ** 3)
    assert np.all(WeightSpec(2)(np.random.default_rng(1).normal(size=(100, 2))) > 0)


def test_cone_roundtrip():
    cone = ConeCd(3)
    rng = np.random.default_rng(4)
    for _ in range(100):
        theta = rng.uniform(math.pi / 8, 3 * math.pi / 8, 2)
        p = cone.point(2.5, theta)
        assert cone.contains(p)[0]
        np.testing.assert_allclose(cone.angles(p)[0], theta, atol=1e-12)
    assert not cone.contains(np.array([1.0, 0.0, 0.0]))[0]
    assert ConeCd(1).contains(np.array([[2.0], [-1.0]])).tolist() == [True, False]


@pytest.mark.parametrize("d,h", [(1, (0.12, 0.12)), (2, (0.3, 0.3, 0.3)), (1, (0.1, 0.05)),
                                 (3, (0.2, 0.3, 0.1, 0.4))])
def test_h_prime_invariants(d, h):
    hp = reparametrize_h_prime(d, h).h_prime
    assert math.fsum(hp) == 0.75 * d - 0.5
    assert all(a >= b for a, b in zip(hp, h))
    HurstVector(hp)


def test_h_prime_rejects_rough_side():
    assert reparametrize_h_prime(1, (0.125, 0.125)).h_prime == (0.125, 0.125)
    with pytest.raises(DomainError):
        reparametrize_h_prime(1, (0.3, 0.3))
