"""Regime arithmetic: classification, admissible Sobolev exponents, the cone
used by the divergence lower bound, and the raised Hurst vector H'."""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ..errors import DomainError
from ..spectral_core import HurstVector
from ..spectral_core.params import SPATIAL_CAP


class RegimeLabel(str, Enum):
    REGULAR_NO_RENORM = "RegularNoRenorm"
    WICK_RENORMALIZABLE = "WickRenormalizable"
    ILL_POSED = "IllPosed"


def _check(d, H):
    if not isinstance(H, HurstVector):
        H = HurstVector(H)
    if d < 1 or H.d != d:
        raise DomainError(f"Hurst vector has {H.d} spatial indices, expected d = {d}")
    return H


def regular_threshold(d):
    return d - 0.5


def wick_threshold(d):
    return 0.75 * d - 0.5


def classify_regime(d, H):
    """Label from the sum H0 + H+; both boundaries belong to the rougher side."""
    H = _check(d, H)
    s = H.total
    if s > regular_threshold(d):
        return RegimeLabel.REGULAR_NO_RENORM
    if s > wick_threshold(d):
        return RegimeLabel.WICK_RENORMALIZABLE
    return RegimeLabel.ILL_POSED


def valid_exponent_range(d, H, regime=None):
    """Open interval of admissible gamma (regular regime) or alpha (Wick regime)."""
    H = _check(d, H)
    actual = classify_regime(d, H)
    if regime is not None and RegimeLabel(regime) is not actual:
        raise DomainError(f"regime {RegimeLabel(regime).value} does not match H (it is {actual.value})")
    s = H.total
    if actual is RegimeLabel.REGULAR_NO_RENORM:
        return (0.0, s - regular_threshold(d))
    if actual is RegimeLabel.WICK_RENORMALIZABLE:
        return (max(regular_threshold(d) - s, (d - 1) / 4.0), d / 4.0)
    raise DomainError("no admissible exponent in the ill-posed regime")


class WeightKind(str, Enum):
    INVERSE_QUADRATIC_PRODUCT = "InverseQuadraticProduct"


@dataclass(frozen=True)
class WeightSpec:
    """Spatial weight ``c * prod_i (1 + x_i^2)^-1``; only its L1 norm enters the moments."""

    d: int = 1
    kind: WeightKind = WeightKind.INVERSE_QUADRATIC_PRODUCT
    scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", WeightKind(self.kind))
        if self.scale <= 0:
            raise DomainError("weight scale must be positive")

    def __call__(self, x):
        """Weight at points with coordinates on the last axis (bare numbers when d = 1)."""
        x = np.asarray(x, dtype=float)
        if self.d == 1:
            x = x[..., None]
        return self.scale * np.prod(1.0 / (1.0 + x * x), axis=-1)

    @property
    def l1_norm(self):
        return self.scale * math.pi ** self.d


@dataclass(frozen=True)
class ConeCd:
    """Points whose spherical angles all lie in [pi/8, 3pi/8].

    For d = 1 there are no angles and the cone is the positive half line.
    """

    d: int
    lo: float = math.pi / 8
    hi: float = 3 * math.pi / 8

    def angles(self, eta):
        """Spherical angles theta_1..theta_{d-1} of the points in ``eta``."""
        eta = np.atleast_2d(np.asarray(eta, dtype=float))
        out = []
        for i in range(self.d - 1):
            tail = np.sqrt(np.sum(eta[:, i:] ** 2, axis=1))
            ratio = np.divide(eta[:, i], tail, out=np.ones_like(tail), where=tail > 0)
            theta = np.arccos(np.clip(ratio, -1.0, 1.0))
            if i == self.d - 2:
                theta = np.where(eta[:, -1] < 0, 2 * math.pi - theta, theta)
            out.append(theta)
        return np.stack(out, axis=1) if out else np.empty((eta.shape[0], 0))

    def contains(self, eta):
        eta = np.atleast_2d(np.asarray(eta, dtype=float))
        r = np.sqrt(np.sum(eta * eta, axis=1))
        if self.d == 1:
            return eta[:, 0] > 0
        th = self.angles(eta)
        return (r > 0) & np.all((th >= self.lo) & (th <= self.hi), axis=1)

    def point(self, r, theta):
        """Inverse of the spherical parametrization."""
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        coords = []
        running = float(r)
        for th in theta:
            coords.append(running * math.cos(th))
            running *= math.sin(th)
        coords.append(running)
        return np.array(coords)


@dataclass(frozen=True)
class HPrime:
    h_prime: tuple

    def as_hurst(self):
        return HurstVector(self.h_prime)


def reparametrize_h_prime(d, H):
    """Raise H to the frontier H0' + H+' = 3d/4 - 1/2.

    The deficit is split in proportion to the headroom of each index (1 for
    H0, 3/4 for spatial indices); the last index absorbs rounding so that the
    sum is exact in floating point.
    """
    H = _check(d, H)
    target = wick_threshold(d)
    h = list(H.h)
    deficit = target - math.fsum(h)
    if deficit < -1e-15:
        raise DomainError("H0 + H+ exceeds 3d/4 - 1/2; no H' is needed")
    if deficit <= 0:
        return HPrime(tuple(h))
    caps = [1.0] + [SPATIAL_CAP] * d
    room = [c - x for c, x in zip(caps, h)]
    total_room = math.fsum(room)
    raised = [x + deficit * r / total_room for x, r in zip(h, room)]
    raised[-1] = target - math.fsum(raised[:-1])
    return HPrime(tuple(raised))
