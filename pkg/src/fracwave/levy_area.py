"""Second moment of the mollified fractional Levy area.

The moment of the area paired with a time test function phi reduces to

    A_n = int dxi |xi|^(1-2H) G_n(xi) int dy |y|^(-1-2H) G_n(y) |m(xi + y) - m(xi)|^2

with ``m(z) = int phi(t) E(z, t) dt`` and ``G_n`` the squared mollifier factor
at scale ``2^-n``. The inner density is not integrable at ``y = 0`` on its
own; the bracket vanishes quadratically there and the integrand is only ever
evaluated in combined form.
"""

from dataclasses import dataclass
from enum import Enum
from functools import cached_property, lru_cache
from math import factorial

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError
from .quadrature import QuadratureResult, geometric_edges, panel_rule
from .spectral_core import MollifierSpec, phase_integral

SERIES_RADIUS = 2.0   # |z| below which m is summed from its Taylor series
SERIES_TERMS = 32
COLLAR = 1e-3         # |y| below which the bracket is expanded in y
TABLE_STEP = 1.0 / 16.0


class TimeTestKind(str, Enum):
    BUMP_ON_01 = "BumpOn01"


@dataclass(frozen=True)
class TimeTestFunction:
    """Bump ``exp(-1/((t-a)(b-t)))`` on ``(a, b)``, normalized to integral ``amplitude``.

    ``amplitude = 0`` gives the zero function.
    """

    kind: TimeTestKind = TimeTestKind.BUMP_ON_01
    support: tuple = (0.5, 1.0)
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", TimeTestKind(self.kind))
        lo, hi = (float(x) for x in self.support)
        if not 0.0 <= lo < hi <= 1.0:
            raise DomainError("support must be an interval inside [0, 1]")
        if hi - lo < 0.05:
            raise DomainError("support narrower than 0.05 is not supported")
        if self.amplitude < 0:
            raise DomainError("amplitude must be nonnegative")
        object.__setattr__(self, "support", (lo, hi))
        object.__setattr__(self, "amplitude", float(self.amplitude))

    @property
    def is_zero(self):
        return self.amplitude == 0.0

    @property
    def center(self):
        return 0.5 * (self.support[0] + self.support[1])

    @property
    def half_width(self):
        return 0.5 * (self.support[1] - self.support[0])

    def _shape(self, t):
        lo, hi = self.support
        t = np.asarray(t, dtype=float)
        inside = (t > lo) & (t < hi)
        ts = np.where(inside, t, self.center)
        return np.where(inside, np.exp(-1.0 / ((ts - lo) * (hi - ts))), 0.0)

    @cached_property
    def _norm(self):
        t, w = self.rule(normalized=False)
        return float(np.sum(w))

    def rule(self, normalized=True):
        """Nodes ``t`` and weights ``w * phi(t)`` on the support (80 panels x 20 nodes)."""
        t, w = panel_rule(np.linspace(*self.support, 81), 20)
        w = w * self._shape(t)
        if normalized:
            w = w * (self.amplitude / self._norm)
        return t, w

    def __call__(self, t):
        return self.amplitude * self._shape(t) / self._norm

    def mass(self):
        return self.amplitude

    def moment(self, j):
        t, w = self.rule()
        return float(np.sum(w * t ** j))


# ------------------------------------------------------------------ m and R

class _PhiTransform:
    """Fast evaluation of m(z) and its first two derivatives for one phi.

    Small |z|: Taylor series in z. Mid range: the cosine transform g of the
    centred bump from a cubic spline table. Beyond the cutoff where g falls
    below 1e-16 of the mass: the pure ``i * mass / z`` tail.
    """

    def __init__(self, phi):
        self.mass = phi.amplitude
        self.c = phi.center
        self.zmax = 1500.0 * (0.25 / phi.half_width)
        t, w = phi.rule()
        k = np.arange(SERIES_TERMS + 2)
        self.moments = (w[None, :] * t[None, :] ** k[:, None]).sum(axis=1)
        grid = np.arange(0.0, self.zmax + 4 * TABLE_STEP, TABLE_STEP)
        g = np.empty_like(grid)
        for i in range(0, grid.size, 2048):
            g[i:i + 2048] = np.cos(np.multiply.outer(grid[i:i + 2048], t - self.c)) @ w
        self.spline = CubicSpline(grid, g)

    def __call__(self, z, order=0):
        z = np.asarray(z, dtype=float)
        out = np.empty(z.shape, dtype=complex)
        az = np.abs(z)
        small = az < SERIES_RADIUS
        big = az > self.zmax
        mid = ~small & ~big
        if small.any():
            out[small] = self._series(z[small], order)
        if mid.any():
            out[mid] = self._table(z[mid], order)
        if big.any():
            zb = z[big]
            out[big] = 1j * self.mass * (-1.0) ** order * factorial(order) / zb ** (order + 1)
        return out

    def _series(self, z, order):
        # m(z) = sum_k (iz)^k M_{k+1} / (k+1)!
        out = np.zeros(z.shape, dtype=complex)
        for k in range(order, SERIES_TERMS):
            coef = (1j) ** k * self.moments[k + 1] / factorial(k + 1)
            falling = factorial(k) // factorial(k - order)
            out += coef * falling * z ** (k - order)
        return out

    def _table(self, z, order):
        az = np.abs(z)
        sgn = np.sign(z)
        ph = np.exp(1j * self.c * z)
        g = self.spline(az)
        fhat = ph * g
        m = (fhat - self.mass) / (1j * z)
        if order == 0:
            return m
        g1 = sgn * self.spline(az, 1)
        fhat1 = ph * (1j * self.c * g + g1)
        m1 = fhat1 / (1j * z) - m / z
        if order == 1:
            return m1
        g2 = self.spline(az, 2)
        fhat2 = ph * (-self.c ** 2 * g + 2j * self.c * g1 + g2)
        return fhat2 / (1j * z) - fhat1 / (1j * z * z) - m1 / z + m / (z * z)

    def bracket(self, xi, y):
        """m(xi + y) - m(xi), expanded in y inside the collar and exact in the far tail."""
        xi, y = np.broadcast_arrays(np.asarray(xi, float), np.asarray(y, float))
        out = self(xi + y) - self(xi)
        collar = np.abs(y) < COLLAR
        if collar.any():
            xc, yc = xi[collar], y[collar]
            out[collar] = yc * self(xc, 1) + 0.5 * yc * yc * self(xc, 2)
        tail = (np.abs(xi) > self.zmax) & (np.abs(xi + y) > self.zmax) & ~collar
        if tail.any():
            xt, yt = xi[tail], y[tail]
            out[tail] = -1j * self.mass * yt / (xt * (xt + yt))
        return out


@lru_cache(maxsize=16)
def _transform(phi):
    return _PhiTransform(phi)


def m_phi(phi, xi, xi2):
    """int phi(t) E(xi + xi2, t) dt by Gauss-Legendre on the support of phi."""
    if phi.is_zero:
        return np.zeros(np.broadcast(np.asarray(xi), np.asarray(xi2)).shape, dtype=complex)[()]
    t, w = phi.rule()
    z = np.asarray(xi, dtype=float) + np.asarray(xi2, dtype=float)
    vals = phase_integral(z[..., None], t)
    out = vals @ w
    return out if np.ndim(out) else complex(out)


def r_phi(phi, xi):
    """-int phi(t) E(xi, t) dt."""
    return -m_phi(phi, xi, 0.0)


# ----------------------------------------------------------- second moment

@dataclass(frozen=True)
class LevyAreaConfig:
    H: float
    phi: TimeTestFunction = TimeTestFunction()
    mollifier: MollifierSpec = MollifierSpec()
    n_range: tuple = (4, 12)
    tol: float = 1e-3
    nodes: int = 16           # Gauss nodes per panel
    per_octave: int = 2       # geometric panels per doubling
    inner_floor: float = 1e-5 # smallest graded panel edge near the singular faces

    def __post_init__(self):
        if not 0.0 < self.H < 1.0:
            raise DomainError("H must lie in (0, 1)")
        lo, hi = self.n_range
        if hi < lo:
            raise DomainError("n_range is empty")


def _signed_edges(cfg, x, reach):
    """Panel edges for the inner variable y at outer frequency x > 0."""
    floor, po = cfg.inner_floor, cfg.per_octave
    ridge = 4.0
    pos = np.concatenate([[0.0], geometric_edges(floor, reach, po)])
    left = -(x + geometric_edges(ridge, reach, po))
    if x > 2 * ridge:
        mid = np.concatenate([
            np.linspace(-x - ridge, -x + ridge, 9),
            -geometric_edges(floor, x / 2, po),
            -(x - geometric_edges(ridge, x / 2, po)),
        ])
    else:
        mid = np.concatenate([np.linspace(-x - ridge, 0.0, 9), -geometric_edges(floor, x + ridge, po)])
    return np.unique(np.concatenate([left, mid, pos]))


def _moment_sum(cfg, n, q):
    tr = _transform(cfg.phi)
    scale = 2.0 ** (-n)
    reach = cfg.mollifier.support_radius(1e-20) / scale
    G = lambda v: cfg.mollifier.ft_sq_1d(scale * v)
    H = cfg.H
    outer_edges = np.unique(np.concatenate([[0.0], geometric_edges(cfg.inner_floor, reach, cfg.per_octave)]))
    xs, wx = panel_rule(outer_edges, q)
    wx = wx * xs ** (1.0 - 2.0 * H) * G(xs)
    total = 0.0
    count = 0
    batch_x, batch_y, batch_w = [], [], []
    pending = 0

    def flush():
        nonlocal total, pending, count
        if not batch_y:
            return
        y = np.concatenate(batch_y)
        xrep = np.concatenate(batch_x)
        w = np.concatenate(batch_w)
        f = np.abs(tr.bracket(xrep, y)) ** 2 * np.abs(y) ** (-1.0 - 2.0 * H) * G(y) * w
        total += float(np.sum(f))
        count += y.size
        batch_x.clear(), batch_y.clear(), batch_w.clear()
        pending = 0

    for x, w in zip(xs, wx):
        if w == 0.0:
            continue
        y, wy = panel_rule(_signed_edges(cfg, x, reach), q)
        batch_y.append(y)
        batch_x.append(np.full(y.size, x))
        batch_w.append(wy * w)
        pending += y.size
        if pending > 400_000:
            flush()
    flush()
    return 2.0 * total, count  # the integrand is even under (xi, y) -> (-xi, -y)


def levy_second_moment(cfg, n):
    """A_n with a two-resolution error estimate."""
    if n < 0:
        raise DomainError("n must be nonnegative")
    if cfg.phi.is_zero:
        return QuadratureResult(0.0, 0.0, 0)
    fine, n_fine = _moment_sum(cfg, n, cfg.nodes)
    coarse, n_coarse = _moment_sum(cfg, n, max(4, (3 * cfg.nodes) // 4))
    return QuadratureResult(fine, abs(fine - coarse), n_fine + n_coarse)


def levy_m_split(cfg, n):
    """(J_M, J_MR) on xi in (1, inf), y in (-2 xi, -xi).

    With ``z = xi + y`` in ``(-xi, 0)``, J_M integrates ``|m(z)|^2`` and J_MR the
    cross and remainder terms ``-2 Re(m(z) conj m(xi)) + |m(xi)|^2``.
    """
    if n < 0:
        raise DomainError("n must be nonnegative")
    if cfg.phi.is_zero:
        return 0.0, 0.0
    tr = _transform(cfg.phi)
    scale = 2.0 ** (-n)
    reach = cfg.mollifier.support_radius(1e-20) / scale
    G = lambda v: cfg.mollifier.ft_sq_1d(scale * v)
    H, q, po = cfg.H, cfg.nodes, cfg.per_octave
    xs, wx = panel_rule(geometric_edges(1.0, reach, 2 * po), q)
    wx = wx * xs ** (1.0 - 2.0 * H) * G(xs)
    jm = jmr = 0.0
    for x, w in zip(xs, wx):
        # z = x + y runs over (-x, 0); dense near z = 0 where m is O(1)
        near = np.linspace(-min(x, 8.0), 0.0, 9)
        far = -geometric_edges(8.0, x, po) if x > 8.0 else np.empty(0)
        z, wz = panel_rule(np.unique(np.concatenate([near, far])), q)
        y = z - x
        dens = np.abs(y) ** (-1.0 - 2.0 * H) * G(y) * wz
        mz = tr(z)
        mx = complex(tr(np.array([x]))[0])
        jm += w * float(np.sum(dens * np.abs(mz) ** 2))
        jmr += w * float(np.sum(dens * (-2.0 * np.real(mz * np.conj(mx)) + abs(mx) ** 2)))
    return jm, jmr


# ------------------------------------------------------------ classification

class LevyRegime(str, Enum):
    CONVERGENT = "Convergent"
    DIVERGENT = "Divergent"


LEVY_THRESHOLD = 0.25


def classify_levy(H):
    """Convergent iff H > 1/4."""
    if not 0.0 < H < 1.0:
        raise DomainError("H must lie in (0, 1)")
    return LevyRegime.CONVERGENT if H > LEVY_THRESHOLD else LevyRegime.DIVERGENT
