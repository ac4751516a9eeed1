import numpy as np
import pytest
from scipy.integrate import dblquad

from fracwave.errors import DomainError
from fracwave.levy_area import (
    LevyAreaConfig,
    LevyRegime,
    TimeTestFunction,
    classify_levy,
    levy_m_split,
    levy_second_moment,
    m_phi,
    r_phi,
)

PHI = TimeTestFunction()
ZERO = TimeTestFunction(amplitude=0.0)


def test_time_test_function_shape():
    assert PHI.mass() == pytest.approx(1.0, rel=1e-13)
    t = np.linspace(0, 1, 101)
    assert np.all(PHI(t) >= 0) and PHI(0.4) == 0 and PHI(0.75) > 0
    with pytest.raises(DomainError):
        TimeTestFunction(support=(0.6, 0.5))


def test_m_phi_trivial_cases():
    assert m_phi(ZERO, 1.0, 2.0) == 0
    assert m_phi(PHI, 3.0, -3.0) == pytest.approx(PHI.moment(1), rel=1e-13)
    assert r_phi(ZERO, 4.0) == 0
    assert r_phi(PHI, 0.0) == pytest.approx(-m_phi(PHI, 0.0, 0.0), rel=1e-14)


def test_m_phi_matches_double_quadrature():
    z = 5.0 - 5.001
    re = dblquad(lambda s, t: PHI(t) * np.cos(z * s), 0.5, 1.0, 0.0, lambda t: t, epsabs=1e-13)[0]
    im = dblquad(lambda s, t: PHI(t) * np.sin(z * s), 0.5, 1.0, 0.0, lambda t: t, epsabs=1e-13)[0]
    assert abs(m_phi(PHI, 5.0, -5.001) - complex(re, im)) < 1e-10


def test_r_phi_decays_like_inverse_frequency():
    xi = np.geomspace(10, 1e4, 40)
    scaled = np.abs([x * r_phi(PHI, x) for x in xi])
    assert scaled.max() < 2.0 * PHI.mass() + 1e-9


def test_classify_levy():
    assert classify_levy(0.5) is LevyRegime.CONVERGENT
    assert classify_levy(0.25) is LevyRegime.DIVERGENT
    assert classify_levy(0.2501) is LevyRegime.CONVERGENT
    with pytest.raises(DomainError):
        classify_levy(1.0)


def test_zero_test_function_gives_zero():
    cfg = LevyAreaConfig(0.3, phi=ZERO)
    assert levy_second_moment(cfg, 4).value == 0
    assert levy_m_split(cfg, 4) == (0.0, 0.0)


def test_bilinearity_and_lower_bound():
    a = levy_second_moment(LevyAreaConfig(0.3), 4)
    b = levy_second_moment(LevyAreaConfig(0.3, phi=TimeTestFunction(amplitude=3.0)), 4)
    assert b.value == pytest.approx(9.0 * a.value, rel=1e-12)
    jm, jmr = levy_m_split(LevyAreaConfig(0.3), 4)
    assert a.value >= jm + jmr - a.abs_error_estimate
    assert a.abs_error_estimate < 1e-3 * a.value
