"""Product test functions phi(t) psi(x) used to witness divergence."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError
from ..levy_area import TimeTestFunction
from ..spectral_core.params import _bump_ft

PSI_RATIO = 0.1   # required inf_{|theta| <= 1} |F psi|^2 / |F psi(0)|^2
MAX_HALVINGS = 12


@dataclass(frozen=True)
class SpatialBump:
    """Product of even bumps ``exp(-1/(1 - (x_i/width)^2))`` with total mass ``amplitude``."""

    width: float = 0.5
    amplitude: float = 1.0

    def __post_init__(self):
        if self.width <= 0:
            raise DomainError("bump width must be positive")
        if self.amplitude < 0:
            raise DomainError("amplitude must be nonnegative")

    def ft(self, eta):
        """Fourier transform at points with coordinates on the last axis."""
        eta = np.asarray(eta, dtype=float)
        return self.amplitude * np.prod(_bump_ft(np.abs(eta) * self.width), axis=-1)

    def ft_radial_1d(self, lam):
        """Transform in d = 1 at scalar frequencies."""
        return self.amplitude * _bump_ft(np.abs(np.asarray(lam, dtype=float)) * self.width)


def _inf_on_unit_ball(psi, d, points=129):
    """min over |theta| <= 1 of |F psi(theta)|^2, on a polar grid (d <= 2) or per axis."""
    r = np.linspace(0.0, 1.0, points)
    if d == 1:
        vals = psi.ft(r[:, None])
    else:
        ang = np.linspace(0.0, 2 * np.pi, 4 * points, endpoint=False)
        pts = np.zeros((r.size * ang.size, d))
        pts[:, 0] = np.outer(r, np.cos(ang)).ravel()
        pts[:, 1] = np.outer(r, np.sin(ang)).ravel()
        vals = psi.ft(pts)
    return float(np.min(vals ** 2))


@dataclass(frozen=True)
class ClassETestFunction:
    """phi (time bump in (0, 1)) times psi (even spatial bump).

    Construction checks that phi has mass on [3/4, 1] and that |F psi|^2 stays
    above a tenth of its peak on the unit ball, halving the bump width until it
    does. The zero function (``amplitude = 0`` in either factor) is accepted as
    a degenerate input.
    """

    d: int = 1
    phi: TimeTestFunction = TimeTestFunction()
    psi: SpatialBump = SpatialBump()
    psi_inf: float = field(init=False, default=0.0)

    def __post_init__(self):
        if self.d < 1:
            raise DomainError("d must be positive")
        lo, hi = self.phi.support
        if lo <= 0.0 or hi > 1.0:
            raise DomainError("phi must be supported inside (0, 1)")
        if not self.phi.is_zero and hi <= 0.75:
            raise DomainError("phi has no mass on [3/4, 1]")
        psi = self.psi
        if psi.amplitude > 0:
            for _ in range(MAX_HALVINGS + 1):
                low = _inf_on_unit_ball(psi, self.d)
                if low > PSI_RATIO * psi.amplitude ** 2:
                    break
                psi = SpatialBump(psi.width / 2, psi.amplitude)
            else:
                raise DomainError("could not find a psi whose transform stays away from 0 on the unit ball")
            object.__setattr__(self, "psi", psi)
            object.__setattr__(self, "psi_inf", low)

    @property
    def is_zero(self):
        return self.phi.is_zero or self.psi.amplitude == 0

    def psi_hat_sq(self, lam):
        """|F psi|^2 as a function of a scalar frequency (d = 1)."""
        return self.psi.ft_radial_1d(lam) ** 2

    def scaled(self, phi_factor=1.0, psi_factor=1.0):
        return ClassETestFunction(
            self.d,
            TimeTestFunction(self.phi.kind, self.phi.support, self.phi.amplitude * phi_factor),
            SpatialBump(self.psi.width, self.psi.amplitude * psi_factor),
        )
