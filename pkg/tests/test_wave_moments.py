import numpy as np
import pytest

from fracwave.errors import DegenerateInput, DomainError
from fracwave.levy_area import TimeTestFunction
from fracwave.spectral_core import HurstVector
from fracwave.wave_moments import (
    ClassETestFunction,
    RegimeLabel,
    SpatialBump,
    WeightSpec,
    cherry_moment_ia,
    cherry_moment_ib,
    decay_bound,
    divergence_functional,
    divergence_functional_with_error,
    divergence_split,
    kh_double_integral,
    recov_decay_probe,
    threshold_scan,
)

ROUGH = (0.12, 0.12)


def test_zero_time_gives_zero_moments():
    m = cherry_moment_ia(1, (0.4, 0.4), 0.0, 0.1, 6)
    assert (m.first, m.second, m.total) == (0.0, 0.0, 0.0)
    assert cherry_moment_ib(1, (0.2, 0.2), 0.0, 0.3, 6) == 0.0


def test_moment_regime_checks():
    with pytest.raises(DomainError):
        cherry_moment_ia(1, (0.3, 0.3), 1.0, 0.1, 6)
    with pytest.raises(DomainError):
        cherry_moment_ia(1, (0.4, 0.4), 1.0, 0.31, 6)
    with pytest.raises(DomainError):
        cherry_moment_ib(1, (0.2, 0.2), 1.0, 0.05, 6)
    with pytest.raises(DomainError):
        cherry_moment_ia(3, (0.4, 0.4, 0.4, 0.4), 1.0, 0.1, 6)


def test_ia_is_positive_and_total_is_consistent():
    m = cherry_moment_ia(1, (0.4, 0.4), 1.0, 0.1, 6)
    assert m.first > 0 and m.second > 0
    assert m.total == pytest.approx(m.first + 2 * m.second, rel=1e-14)


def test_weight_rescaling_is_exact():
    base = cherry_moment_ib(1, (0.2, 0.2), 1.0, 0.3, 6)
    scaled = cherry_moment_ib(1, (0.2, 0.2), 1.0, 0.3, 6, weight=WeightSpec(1, scale=3.0))
    assert scaled == pytest.approx(3.0 * base, rel=1e-13)


def test_zero_test_function():
    zero = ClassETestFunction(1, psi=SpatialBump(amplitude=0.0))
    assert zero.is_zero
    assert divergence_functional(1, ROUGH, zero, 6) == 0.0
    assert tuple(divergence_split(1, ROUGH, zero, 6)) == (0.0, 0.0, 0.0)


def test_bilinearity_in_phi_and_psi():
    Phi = ClassETestFunction(1)
    base = divergence_functional(1, ROUGH, Phi, 5)
    assert divergence_functional(1, ROUGH, Phi.scaled(psi_factor=3.0), 5) == pytest.approx(9 * base, rel=1e-12)
    assert divergence_functional(1, ROUGH, Phi.scaled(phi_factor=0.5), 5) == pytest.approx(0.25 * base, rel=1e-12)


def test_divergence_grows_in_ill_posed_regime():
    vals = [divergence_functional(1, ROUGH, n=n) for n in (4, 6, 8)]
    assert vals == pytest.approx([0.1178, 0.4982, 0.8775], rel=2e-3)


def test_split_is_dominated_by_the_functional():
    n = 6
    split = divergence_split(1, ROUGH, n=n)
    assert split.main > 0
    assert abs(split.remainder) + abs(split.cross) < split.main
    assert split.total <= divergence_functional(1, ROUGH, n=n)


def test_functional_is_monotone_in_roughness():
    a = divergence_functional(1, (0.12, 0.12), n=6)
    b = divergence_functional(1, (0.2, 0.2), n=6)
    assert a > b


def test_d2_estimate_reports_error():
    value, err = divergence_functional_with_error(2, (0.2, 0.2, 0.2), n=3, count=20_000, seed=3)
    assert value > 0 and 0 < err < value
    again = divergence_functional_with_error(2, (0.2, 0.2, 0.2), n=3, count=20_000, seed=3)
    assert again == (value, err)


def test_test_function_construction():
    Phi = ClassETestFunction(2)
    assert Phi.psi_inf > 0.1 * Phi.psi.amplitude ** 2
    wide = ClassETestFunction(1, psi=SpatialBump(width=8.0))
    assert wide.psi.width < 8.0
    with pytest.raises(DomainError):
        ClassETestFunction(1, phi=TimeTestFunction(support=(0.1, 0.5)))
    with pytest.raises(DomainError):
        ClassETestFunction(1, phi=TimeTestFunction(support=(0.0, 1.0)))


@pytest.mark.parametrize("H0", [0.3, 0.5, 0.7])
def test_decay_probe_beats_bound(H0):
    a = np.geomspace(4, 256, 9)
    fit = recov_decay_probe(None, H0, 1.0, a, 0.05, 0.05)
    assert -fit.slope >= decay_bound(H0, 0.05, 0.05)


def test_decay_probe_inputs():
    with pytest.raises(DegenerateInput):
        recov_decay_probe(None, 0.5, 0.0, [4, 8, 16], 0.05, 0.05)
    with pytest.raises(DomainError):
        recov_decay_probe(None, 0.3, 1.0, [4, 8, 16], 0.3, 0.05)


def test_kh_integral_stabilizes_for_large_alpha():
    H = HurstVector((0.3, 0.3))
    a = kh_double_integral(1, H, 10.0, 0.01, 0.01, 64)
    b = kh_double_integral(1, H, 10.0, 0.01, 0.01, 128)
    assert b == pytest.approx(a, rel=1e-2)


def test_kh_integral_grows_below_band():
    H = HurstVector((0.2, 0.2))
    vals = [kh_double_integral(1, H, 0.0, 0.01, 0.01, R) for R in (64, 128, 256)]
    assert vals[1] > 1.5 * vals[0] and vals[2] > 1.5 * vals[1]


def test_threshold_scan_records_errors_and_continues():
    recs = threshold_scan(1, [(0.12, 0.12), (0.9, 0.9), (0.3, 0.3)], n_range=range(4, 7))
    assert len(recs) == 3
    assert recs[0].label is RegimeLabel.ILL_POSED and recs[0].error == ""
    assert recs[1].error and recs[1].label is None
    assert recs[2].label is RegimeLabel.REGULAR_NO_RENORM and not recs[2].diverges
    assert threshold_scan(1, []) == []
