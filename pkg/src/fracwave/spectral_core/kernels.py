"""Scalar building blocks: spectral density, mollifier factor, wave kernel, phase
and Duhamel integrals.

All functions broadcast over numpy arrays. The phase and Duhamel kernels run in
the compiled extension when it is importable and fall back to numpy otherwise;
set ``FRACWAVE_BACKEND=python`` to force the fallback.
"""

import os

import numpy as np

from ..errors import DomainError
from . import _fallback

BACKEND = "python"
_impl = _fallback
if os.environ.get("FRACWAVE_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _impl  # noqa: F811

        BACKEND = "compiled"
    except ImportError:  # extension not built
        _impl = _fallback


def _flat_call(fn, *args):
    arrays = np.broadcast_arrays(*[np.asarray(a, dtype=float) for a in args])
    shape = arrays[0].shape
    flat = [np.ascontiguousarray(a.ravel()) for a in arrays]
    out = fn(*flat)
    return out.reshape(shape) if shape else complex(out[0])


def _eta_norm(eta):
    eta = np.asarray(eta, dtype=float)
    if eta.ndim == 0:
        return np.abs(eta)
    return np.sqrt(np.sum(eta * eta, axis=-1))


def mu_density(H, xi, eta):
    """Spectral density |xi|^(1-2H0) * prod_i |eta_i|^(1-2H_i).

    ``eta`` has its spatial coordinates on the last axis (a scalar is read as
    a one-dimensional point).
    """
    xi = np.asarray(xi, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if eta.ndim == 0:
        eta = eta[None]
    if eta.shape[-1] != H.d:
        raise DomainError(f"eta has {eta.shape[-1]} coordinates, Hurst vector has d = {H.d}")
    if np.any(xi == 0) or np.any(eta == 0):
        raise DomainError("spectral density is singular on the coordinate hyperplanes")
    h = H.as_array()
    out = np.abs(xi) ** (1.0 - 2.0 * h[0])
    for i in range(H.d):
        out = out * np.abs(eta[..., i]) ** (1.0 - 2.0 * h[i + 1])
    return out if out.ndim else float(out)


def mollifier_ft(spec, n, xi, eta):
    """Fourier factor of the rescaled mollifier, F rho(2^-n xi, 2^-n eta)."""
    scale = 2.0 ** (-n)
    eta = np.asarray(eta, dtype=float)
    out = spec.ft_1d(scale * np.asarray(xi, dtype=float))
    if eta.ndim == 0:
        out = out * spec.ft_1d(scale * eta)
    else:
        for i in range(eta.shape[-1]):
            out = out * spec.ft_1d(scale * eta[..., i])
    return out if np.ndim(out) else float(out)


def wave_kernel_ft(t, eta, cutoff=None):
    """sin(t|eta|)/|eta|, with value t at eta = 0 and 0 beyond ``cutoff``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("wave kernel requires t >= 0")
    a = _eta_norm(eta)
    safe = np.where(a == 0, 1.0, a)
    out = np.where(a == 0, t, np.sin(t * a) / safe)
    if cutoff is not None:
        out = np.where(a > cutoff, 0.0, out)
    return out if np.ndim(out) else float(out)


def phase_integral(z, s):
    """E(z, s) = int_0^s exp(izr) dr = (exp(izs) - 1)/(iz)."""
    if np.any(np.asarray(s) < 0):
        raise DomainError("phase integral requires s >= 0")
    return _flat_call(_impl.phase_integral, z, s)


def duhamel_radial(s, xi, a, cutoff=None):
    """Duhamel integral as a function of the radius a = |eta|."""
    if np.any(np.asarray(s) < 0):
        raise DomainError("Duhamel integral requires s >= 0")
    out = _flat_call(_impl.duhamel_radial, s, xi, a)
    if cutoff is not None:
        out = np.where(np.abs(np.asarray(a)) > cutoff, 0.0, out)
        out = out if np.ndim(out) else complex(out)
    return out


def duhamel(n, s, xi, eta):
    """D^n(s; xi, eta) = int_0^s exp(-i xi r) sin(r|eta|)/|eta| dr, zero when |eta| > n.

    ``n=None`` disables the spectral cutoff.
    """
    return duhamel_radial(s, xi, _eta_norm(eta), cutoff=n)


def shifted_duhamel(u, xi, a, cutoff=None):
    """exp(i u xi) D(u; xi, a)."""
    out = _flat_call(_impl.shifted_duhamel, u, xi, a)
    if cutoff is not None:
        out = np.where(np.abs(np.asarray(a)) > cutoff, 0.0, out)
        out = out if np.ndim(out) else complex(out)
    return out


def shifted_duhamel_table(u, xi, a):
    """Matrix with entries exp(i u_j xi_k) D(u_j; xi_k, a) for one radius a."""
    u = np.ascontiguousarray(u, dtype=float)
    xi = np.ascontiguousarray(xi, dtype=float)
    return _impl.shifted_duhamel_table(u, xi, float(abs(a)))
