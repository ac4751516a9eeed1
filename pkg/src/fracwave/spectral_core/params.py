"""Parameter objects: Hurst indices and mollifier descriptions."""

import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from ..errors import DomainError

SPATIAL_CAP = 0.75


@dataclass(frozen=True)
class HurstVector:
    """Hurst index ``(H0, H1, ..., Hd)`` of a fractional space-time noise.

    ``h[0]`` is the time index and must lie in (0, 1); the spatial indices
    must lie in (0, 3/4).
    """

    h: tuple

    def __post_init__(self):
        h = tuple(float(x) for x in np.atleast_1d(self.h))
        if len(h) < 2:
            raise DomainError("a Hurst vector needs a time index and at least one spatial index")
        if not 0.0 < h[0] < 1.0:
            raise DomainError(f"H0 = {h[0]} must lie in (0, 1)")
        for i, hi in enumerate(h[1:], start=1):
            if not 0.0 < hi < SPATIAL_CAP:
                raise DomainError(f"H{i} = {hi} must lie in (0, 3/4)")
        object.__setattr__(self, "h", h)

    @classmethod
    def white_noise(cls, d):
        return cls((0.5,) * (d + 1))

    @property
    def d(self):
        return len(self.h) - 1

    @property
    def h0(self):
        return self.h[0]

    @property
    def spatial(self):
        return self.h[1:]

    @property
    def h_plus(self):
        return math.fsum(self.h[1:])

    @property
    def total(self):
        """H0 + H+, the quantity every regime boundary is expressed in."""
        return math.fsum(self.h)

    def as_array(self):
        return np.asarray(self.h, dtype=float)


class MollifierKind(str, Enum):
    GAUSSIAN_PRODUCT = "GaussianProduct"
    COMPACT_BUMP = "CompactBump"


@dataclass(frozen=True)
class MollifierSpec:
    """Product mollifier in space-time.

    Both kinds factorize over coordinates, so the squared Fourier factor of the
    rescaled mollifier splits into a time part and a spatial part.
    """

    kind: MollifierKind = MollifierKind.GAUSSIAN_PRODUCT
    scale: float = 1.0

    def __post_init__(self):
        try:
            kind = MollifierKind(self.kind)
        except ValueError:
            raise DomainError(f"unknown mollifier kind {self.kind!r}") from None
        if not self.scale > 0:
            raise DomainError("mollifier scale must be positive")
        object.__setattr__(self, "kind", kind)

    def ft_1d(self, k):
        """Fourier transform of the one-dimensional factor at frequency ``k``."""
        k = np.abs(np.asarray(k, dtype=float)) * self.scale
        if self.kind is MollifierKind.GAUSSIAN_PRODUCT:
            return np.exp(-0.5 * k * k)
        return _bump_ft(k)

    def ft_sq_1d(self, k):
        """Squared transform ``|F rho(k)|^2`` of one factor."""
        k = np.abs(np.asarray(k, dtype=float)) * self.scale
        if self.kind is MollifierKind.GAUSSIAN_PRODUCT:
            return np.exp(-k * k)
        return _bump_ft(k) ** 2

    def support_radius(self, tiny=1e-17):
        """Frequency beyond which the squared factor is below ``tiny``."""
        if self.kind is MollifierKind.GAUSSIAN_PRODUCT:
            return float(np.sqrt(-np.log(tiny))) / self.scale
        grid = np.linspace(0.0, _BUMP_KMAX, 4097)
        vals = _bump_ft(grid) ** 2
        above = np.nonzero(vals > tiny)[0]
        return float(grid[above[-1] + 1] if above.size and above[-1] + 1 < grid.size else _BUMP_KMAX) / self.scale


_BUMP_KMAX = 3000.0


@lru_cache(maxsize=1)
def _bump_rule():
    x, w = np.polynomial.legendre.leggauss(32)
    edges = np.linspace(-1.0, 1.0, 65)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    vals = np.exp(-1.0 / (1.0 - nodes * nodes))
    weights = weights * vals / np.sum(weights * vals)
    return nodes, weights


def _bump_ft(k):
    """Cosine transform of the unit-mass bump ``exp(-1/(1-x^2))`` on (-1, 1)."""
    k = np.asarray(k, dtype=float)
    flat = k.ravel()
    out = np.zeros(flat.shape)
    nodes, weights = _bump_rule()
    inside = np.nonzero(flat < _BUMP_KMAX)[0]
    for start in range(0, inside.size, 4096):
        idx = inside[start:start + 4096]
        out[idx] = np.cos(np.multiply.outer(flat[idx], nodes)) @ weights
    return out.reshape(k.shape)
