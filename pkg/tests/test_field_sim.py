import numpy as np
import pytest

from fracwave.errors import DomainError, GridMismatch
from fracwave.field_sim import (
    CnMode,
    PairingOperator,
    SimulationConfig,
    SpectralGrid,
    draw_coefficients,
    draw_noise,
    estimate_pairing_moment,
    pair_cherry,
    pairing_moment_cell_sum,
    pairing_samples,
    synthesize_psi,
    wick_square,
)
from fracwave.spectral_core import HurstVector
from fracwave.wave_moments import ClassETestFunction, SpatialBump

H = HurstVector((0.3, 0.3))


@pytest.fixture(scope="module")
def grid():
    return SpectralGrid(H, 3, cells_xi=8, cells_eta=8)


def _fields(grid, replicas, t, x, seed=0):
    Z = draw_coefficients(grid.size, seed, replicas)
    phase = np.exp(1j * (grid.nodes[:, 0] * t + grid.nodes[:, 1:] @ np.atleast_1d(x)))
    vals = Z @ (np.sqrt(grid.masses) * phase * grid.duhamel_at(t))
    return vals.real, vals.imag


def test_hermitian_draws_give_real_fields(grid):
    draw = draw_noise(grid, seed=5)
    assert np.allclose(draw.coefficients, np.conj(draw.coefficients[grid.reflection()]))
    for t in (0.3, 0.9):
        synthesize_psi(draw, 3, t, 0.7)
    _, imag = _fields(grid, 50, 0.6, 0.2)
    assert np.max(np.abs(imag)) < 1e-10


def test_zero_time_field_vanishes(grid):
    assert synthesize_psi(draw_noise(grid, 1), 3, 0.0, 0.4) == 0.0
    assert grid.wick_constant(0.0) == 0.0


def test_variance_matches_wick_constant_and_is_stationary(grid):
    c = grid.wick_constant(0.8)
    for x in (0.0, 1.0):
        vals, _ = _fields(grid, 20_000, 0.8, x, seed=2)
        sq = vals ** 2
        se = sq.std(ddof=1) / np.sqrt(sq.size)
        assert abs(sq.mean() - c) < 3 * se


def test_wick_square_is_centred_and_matches_twice_covariance_squared(grid):
    vals_x, _ = _fields(grid, 20_000, 0.7, 0.0, seed=3)
    vals_y, _ = _fields(grid, 20_000, 0.7, 0.5, seed=3)
    c = grid.wick_constant(0.7)
    wx, wy = vals_x ** 2 - c, vals_y ** 2 - c
    assert abs(wx.mean()) < 3 * wx.std(ddof=1) / np.sqrt(wx.size)
    prod = wx * wy
    target = 2 * grid.covariance(0.7, 0.0, 0.7, 0.5) ** 2
    assert abs(prod.mean() - target) < 3 * prod.std(ddof=1) / np.sqrt(prod.size)
    draw = draw_noise(grid, 3)
    assert wick_square(draw, 3, 0.7, 0.0) == pytest.approx(vals_x[0] ** 2 - c, rel=1e-10)


def test_grid_mismatch(grid):
    draw = draw_noise(grid, 0)
    with pytest.raises(GridMismatch):
        synthesize_psi(draw, 4, 0.5, 0.0)
    with pytest.raises(GridMismatch):
        synthesize_psi(draw, 3, 0.5, [0.0, 1.0])
    with pytest.raises(GridMismatch):
        PairingOperator(grid, ClassETestFunction(2))


def test_counterterm_modes(grid):
    Phi = ClassETestFunction(1)
    op = PairingOperator(grid, Phi)
    Z = draw_coefficients(grid.size, 9, 64)
    none = op.pair(Z, CnMode.NONE)
    wick = op.pair(Z, CnMode.STANDARD_WICK)
    diff = none - wick
    assert np.ptp(diff) < 1e-10 * max(1.0, abs(diff[0]))
    assert diff[0] == pytest.approx(op.counterterm(), rel=1e-12)
    custom = op.pair(Z, CnMode.CUSTOM, lambda t: 3.0 * t)
    assert np.var(custom) == pytest.approx(np.var(wick), rel=1e-9)
    with pytest.raises(DomainError):
        op.counterterm(CnMode.CUSTOM)


def test_pair_cherry_matches_operator(grid):
    Phi = ClassETestFunction(1)
    op = PairingOperator(grid, Phi)
    draw = draw_noise(grid, 4, replica=2)
    assert pair_cherry(draw, 3, Phi, operator=op) == pytest.approx(
        pairing_samples(SimulationConfig(H.h, Phi, 8, 8), 3, 3, 4)[2], rel=1e-12)
    assert pair_cherry(draw, 3, ClassETestFunction(1, psi=SpatialBump(amplitude=0.0))) == 0.0


def test_exact_second_moment_matches_cell_sum(grid):
    Phi = ClassETestFunction(1)
    op = PairingOperator(grid, Phi)
    exact = 2 * np.sum(np.abs(op.matrix) ** 2)
    assert exact == pytest.approx(2 * pairing_moment_cell_sum(grid, Phi), rel=1e-6)


def test_estimate_is_deterministic_and_validates():
    cfg = SimulationConfig(H.h, cells_xi=8, cells_eta=8)
    a = estimate_pairing_moment(cfg, 3, 200, 11)
    b = estimate_pairing_moment(cfg, 3, 200, 11)
    assert a == b
    assert a.std_error > 0
    with pytest.raises(DomainError):
        estimate_pairing_moment(cfg, 3, 1, 11)


def test_vectorized_wick_squares_match_single_draws(grid):
    from fracwave.field_sim import wick_square_samples

    batch = wick_square_samples(grid, 0.6, 0.3, seed=8, replicas=4, start=2)
    single = [wick_square(draw_noise(grid, 8, replica=r), 3, 0.6, 0.3) for r in range(2, 6)]
    np.testing.assert_allclose(batch, single, rtol=1e-10, atol=1e-14)


def test_doubling_replicas_halves_squared_error(grid):
    from fracwave.field_sim import summarize, wick_square_samples

    ratios = []
    for rep in range(50):
        small = summarize(wick_square_samples(grid, 0.8, 0.0, rep, 500), rep).std_error ** 2
        big = summarize(wick_square_samples(grid, 0.8, 0.0, 1000 + rep, 1000), rep).std_error ** 2
        ratios.append(big / small)
    assert np.mean(ratios) == pytest.approx(0.5, rel=0.2)
