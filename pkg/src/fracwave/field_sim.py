"""Spectral Monte Carlo oracle for the mollified noise, the linear wave field
Psi^n, its Wick square and the cherry pairing.

The noise is replaced by a finite harmonizable sum over the cells of a
frequency grid: each cell c carries the mass mu(c) of the mollified spectral
measure, a node (xi_c, eta_c) and one complex Gaussian Z_c with Z_{-c} =
conj(Z_c). Every second moment of the simulated objects is then an exact
finite cell sum, which ``pairing_moment_cell_sum`` evaluates independently.
"""

import hashlib
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from . import rng
from .errors import DomainError, GridMismatch
from .quadrature import panel_rule
from .spectral_core import HurstVector, MollifierSpec, duhamel_radial, wave_kernel_ft
from .wave_moments.engine import pairing_kernel, time_nodes
from .wave_moments.test_functions import ClassETestFunction

NOISE_STREAM = 7
IMAG_TOL = 1e-10


def _axis_cells(h, cells, radius, inner):
    """Symmetric partition of [-radius, radius] with ``cells`` cells (even).

    Positive edges are 0, inner, then geometric up to radius, so 0 is an edge
    and never a node. Returns (nodes, masses of |x|^(1-2h)).
    """
    if cells < 2 or cells % 2:
        raise DomainError("cells per axis must be an even number >= 2")
    half = cells // 2
    if half == 1:
        pos = np.array([0.0, radius])
    else:
        pos = np.concatenate([[0.0], np.geomspace(min(inner, radius / 2), radius, half)])
    p = 2.0 - 2.0 * h
    mass = (pos[1:] ** p - pos[:-1] ** p) / p
    mid = 0.5 * (pos[1:] + pos[:-1])
    nodes = np.concatenate([-mid[::-1], mid])
    masses = np.concatenate([mass[::-1], mass])
    return nodes, masses


@dataclass(frozen=True)
class SpectralGrid:
    """Tensor grid over (xi, eta_1, ..., eta_d) discretizing the mollified measure.

    Each axis is mirrored around 0, so the cell with flat index c reflects to
    ``size - 1 - c``.
    """

    H: HurstVector
    n: int
    cells_xi: int = 16
    cells_eta: int = 16
    radius_xi: Optional[float] = None
    inner: float = 0.25
    mollifier: MollifierSpec = MollifierSpec()

    def __post_init__(self):
        if not isinstance(self.H, HurstVector):
            object.__setattr__(self, "H", HurstVector(self.H))
        if self.n < 1:
            raise DomainError("n must be at least 1")
        if self.radius_xi is None:
            object.__setattr__(self, "radius_xi", float(self.mollifier.support_radius(1e-12) * 2.0 ** self.n))
        if self.radius_xi <= 0 or self.inner <= 0:
            raise DomainError("radii must be positive")

    @property
    def d(self):
        return self.H.d

    @cached_property
    def _axes(self):
        h = self.H.as_array()
        axes = [_axis_cells(h[0], self.cells_xi, self.radius_xi, self.inner)]
        axes += [_axis_cells(h[i + 1], self.cells_eta, float(self.n), self.inner) for i in range(self.d)]
        return axes

    @cached_property
    def nodes(self):
        """Array (size, d + 1) of cell nodes (xi, eta)."""
        mesh = np.meshgrid(*[a[0] for a in self._axes], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @cached_property
    def masses(self):
        """Cell masses of the mollified measure (power-law mass times midpoint mollifier)."""
        mesh = np.meshgrid(*[a[1] for a in self._axes], indexing="ij")
        mass = np.prod(np.stack([m.ravel() for m in mesh], axis=1), axis=1)
        scale = 2.0 ** (-self.n)
        return mass * np.prod(self.mollifier.ft_sq_1d(scale * self.nodes), axis=1)

    @property
    def size(self):
        return self.nodes.shape[0]

    def time_rule_size(self, horizon):
        """Gauss-Legendre size resolving exp(i xi u) on [0, horizon] for every cell."""
        return 24 + int(np.ceil(self.radius_xi * horizon))

    def reflection(self):
        return np.arange(self.size)[::-1]

    def spec_hash(self):
        text = repr((self.H.h, self.n, self.cells_xi, self.cells_eta, self.radius_xi,
                     self.inner, self.mollifier.kind.value, self.mollifier.scale))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def duhamel_at(self, t):
        """D^n(t; xi_c, eta_c) for every cell."""
        return duhamel_radial(t, self.nodes[:, 0], np.linalg.norm(self.nodes[:, 1:], axis=1), cutoff=self.n)

    def wick_constant(self, t):
        """Exact discrete c_n(t) = sum_c mass_c |D^n(t; c)|^2."""
        return float(np.sum(self.masses * np.abs(self.duhamel_at(t)) ** 2))

    def covariance(self, t, x, s, y):
        """Exact discrete E[Psi(t, x) Psi(s, y)]."""
        eta = self.nodes[:, 1:]
        shift = np.exp(1j * (self.nodes[:, 0] * (t - s) + eta @ (np.atleast_1d(x) - np.atleast_1d(y))))
        val = np.sum(self.masses * shift * self.duhamel_at(t) * np.conj(self.duhamel_at(s)))
        return float(val.real)


@dataclass(frozen=True)
class NoiseDraw:
    grid: SpectralGrid
    coefficients: np.ndarray
    seed: int
    replica: int = 0


def draw_coefficients(size, seed, replicas, start=0):
    """Hermitian standard complex Gaussians, one row per replica.

    Row r uses the stream keyed by (seed, replica start + r).
    """
    half = size // 2
    out = np.empty((replicas, size), dtype=complex)
    for r in range(replicas):
        g = rng.stream(seed, NOISE_STREAM, start + r).standard_normal((2, half))
        z = (g[0] + 1j * g[1]) / np.sqrt(2.0)
        out[r, half:] = z
        out[r, :half] = np.conj(z[::-1])
    return out


def draw_noise(grid, seed, replica=0):
    return NoiseDraw(grid, draw_coefficients(grid.size, seed, 1, replica)[0], seed, replica)


def _check_n(draw, n):
    if draw.grid.n != n:
        raise GridMismatch(f"draw was built for n = {draw.grid.n}, asked for n = {n}")


def synthesize_psi(draw, n, t, x):
    """Psi^n(t, x) for one draw; real by Hermitian symmetry."""
    _check_n(draw, n)
    g = draw.grid
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != g.d:
        raise GridMismatch(f"x has {x.size} coordinates, grid has d = {g.d}")
    phase = np.exp(1j * (g.nodes[:, 0] * t + g.nodes[:, 1:] @ x))
    val = np.sum(np.sqrt(g.masses) * draw.coefficients * phase * g.duhamel_at(t))
    if abs(val.imag) > IMAG_TOL * max(1.0, abs(val.real)):
        raise GridMismatch("synthesized field is not real; grid is not Hermitian")
    return float(val.real)


def wick_square(draw, n, t, x):
    """Psi^n(t, x)^2 minus the exact discrete Wick constant."""
    return synthesize_psi(draw, n, t, x) ** 2 - draw.grid.wick_constant(t)


def wick_square_samples(grid, t, x, seed, replicas, start=0):
    """Wick squares at (t, x) for replicas start..start+replicas-1, vectorized."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    Z = draw_coefficients(grid.size, seed, replicas, start)
    phase = np.exp(1j * (grid.nodes[:, 0] * t + grid.nodes[:, 1:] @ x))
    vals = Z @ (np.sqrt(grid.masses) * phase * grid.duhamel_at(t))
    if np.max(np.abs(vals.imag), initial=0.0) > IMAG_TOL * max(1.0, np.max(np.abs(vals.real), initial=0.0)):
        raise GridMismatch("synthesized field is not real; grid is not Hermitian")
    return vals.real ** 2 - grid.wick_constant(t)


# ------------------------------------------------------------- cherry pairing

class CnMode(str, Enum):
    STANDARD_WICK = "StandardWick"
    NONE = "None"
    CUSTOM = "Custom"


class PairingOperator:
    """The pairing <cherry^n, Phi> as ``Z^T A Z - r`` on one grid.

    Time integrals use Gauss-Legendre nodes u_j on [0, sup supp phi], enough
    of them to resolve the fastest cell frequency; the kernel K(u; lam)
    carries the outer t integral against phi.
    """

    def __init__(self, grid, Phi, time_count=None):
        if Phi.d != grid.d:
            raise GridMismatch(f"test function is for d = {Phi.d}, grid has d = {grid.d}")
        self.grid = grid
        self.Phi = Phi
        horizon = Phi.phi.support[1]
        u, om = time_nodes(0.0, horizon, time_count or grid.time_rule_size(horizon))
        self.u = u
        self.ramp = om * pairing_kernel(Phi.phi, u, [0.0])[:, 0]   # omega_j int (t - u_j) phi
        nodes, mass = grid.nodes, grid.masses
        eta = nodes[:, 1:]
        # P_jc = exp(i u_j xi_c) D(u_j; c)
        self.P = np.stack([np.exp(1j * uj * nodes[:, 0]) * grid.duhamel_at(uj) for uj in u])
        lam = eta[:, None, :] + eta[None, :, :]
        rl = np.sqrt(np.sum(lam * lam, axis=-1))
        psi = Phi.psi.ft(lam) if Phi.d > 1 else Phi.psi.ft_radial_1d(lam[..., 0])
        psi = np.where(rl <= grid.n, psi, 0.0)
        sq = np.sqrt(mass)
        flat = rl.ravel()
        uniq, inv = np.unique(flat, return_inverse=True)
        K = (pairing_kernel(Phi.phi, u, uniq) * om[:, None])[:, inv].reshape((u.size,) + rl.shape)
        self.matrix = np.einsum("jab,ja,jb->ab", K, self.P, self.P, optimize=True)
        self.matrix *= psi * np.outer(sq, sq)
        self.psi0 = float(Phi.psi.ft(np.zeros(grid.d)))

    def counterterm(self, mode=CnMode.STANDARD_WICK, custom=None):
        """psi_hat(0) int phi(t) int_0^t (t - u) c_n(u) du dt for the chosen c_n."""
        mode = CnMode(mode)
        if mode is CnMode.NONE:
            return 0.0
        if mode is CnMode.STANDARD_WICK:
            c = np.sum(self.grid.masses * np.abs(self.P) ** 2, axis=1)
        else:
            if custom is None:
                raise DomainError("Custom mode needs a callable c_n(t)")
            c = np.array([float(custom(uj)) for uj in self.u])
        return self.psi0 * float(self.ramp @ c)

    def quadratic(self, Z):
        """Z^T A Z for each row of Z (real part; the imaginary part is round-off)."""
        Z = np.atleast_2d(Z)
        val = np.einsum("ra,ab,rb->r", Z, self.matrix, Z, optimize=True)
        return val.real

    def pair(self, Z, mode=CnMode.STANDARD_WICK, custom=None):
        return self.quadratic(Z) - self.counterterm(mode, custom)


def pair_cherry(draw, n, Phi, c_n_mode=CnMode.STANDARD_WICK, custom=None, operator=None):
    """<cherry^n, Phi> for one draw; pass a prebuilt ``operator`` to reuse it."""
    _check_n(draw, n)
    if Phi.is_zero:
        return 0.0
    op = operator or PairingOperator(draw.grid, Phi)
    return float(op.pair(draw.coefficients, c_n_mode, custom)[0])


@dataclass(frozen=True)
class SimulationConfig:
    H: tuple
    Phi: ClassETestFunction = field(default_factory=ClassETestFunction)
    cells_xi: int = 16
    cells_eta: int = 16
    radius_xi: Optional[float] = None
    inner: float = 0.25
    mollifier: MollifierSpec = MollifierSpec()
    c_n_mode: CnMode = CnMode.STANDARD_WICK
    custom: Optional[Callable] = None

    def grid(self, n):
        return SpectralGrid(HurstVector(self.H), n, self.cells_xi, self.cells_eta,
                            self.radius_xi, self.inner, self.mollifier)


@dataclass(frozen=True)
class EmpiricalMoment:
    mean: float
    std_error: float
    replicas: int
    seed: int


def summarize(samples, seed):
    samples = np.asarray(samples, dtype=float)
    if samples.size < 2:
        raise DomainError("at least two replicas are needed")
    return EmpiricalMoment(float(np.mean(samples)), float(np.std(samples, ddof=1) / np.sqrt(samples.size)),
                           int(samples.size), int(seed))


def pairing_samples(config, n, replicas, seed, batch=2048):
    """Pairings for replicas 0..replicas-1; replica r uses stream (seed, r)."""
    grid = config.grid(n)
    if config.Phi.is_zero:
        return np.zeros(replicas)
    op = PairingOperator(grid, config.Phi)
    out = []
    for start in range(0, replicas, batch):
        Z = draw_coefficients(grid.size, seed, min(batch, replicas - start), start)
        out.append(op.pair(Z, config.c_n_mode, config.custom))
    return np.concatenate(out)


def estimate_pairing_moment(config, n, replicas, seed):
    """Empirical E|<cherry^n, Phi>|^2 with its standard error."""
    if replicas < 2:
        raise DomainError("at least two replicas are needed")
    return summarize(pairing_samples(config, n, replicas, seed) ** 2, seed)


# --------------------------------------------------------- cell-sum oracles

def pairing_moment_cell_sum(grid, Phi, t_panels=4, t_nodes=10):
    """Same-grid divergence functional; twice it is the exact second moment of
    the standard-Wick pairing.

    Evaluated as the cell double sum of mass mass' |psi_hat|^2 |U|^2 with U
    from a nested (t, u) quadrature that shares nothing with PairingOperator.
    """
    if Phi.is_zero:
        return 0.0
    nodes, mass = grid.nodes, grid.masses
    eta = nodes[:, 1:]
    t, wt = panel_rule(np.linspace(*Phi.phi.support, t_panels + 1), t_nodes)
    wt = wt * Phi.phi(t)
    lam = eta[:, None, :] + eta[None, :, :]
    rl = np.sqrt(np.sum(lam * lam, axis=-1))
    psi = Phi.psi.ft(lam) if grid.d > 1 else Phi.psi.ft_radial_1d(lam[..., 0])
    psi = np.where(rl <= grid.n, psi, 0.0)
    U = np.zeros(rl.shape, dtype=complex)
    for tk, wk in zip(t, wt):
        u, wu = time_nodes(0.0, tk, grid.time_rule_size(tk) + 8)
        for ul, wl in zip(u, wu):
            P = np.exp(1j * ul * nodes[:, 0]) * grid.duhamel_at(ul)
            U += (wk * wl) * wave_kernel_ft(tk - ul, rl[..., None], cutoff=grid.n) * np.outer(P, P)
    return float(np.sum(np.outer(mass, mass) * psi ** 2 * np.abs(U) ** 2))


def field_variance_cell_sum(grid, t):
    """Exact discrete Var[Psi^n(t, x)], independent of x."""
    return grid.wick_constant(t)
