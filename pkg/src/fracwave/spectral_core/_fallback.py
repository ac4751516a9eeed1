"""Pure numpy versions of the hot kernels.

Used when the compiled extension is unavailable; the compiled module exposes
exactly the same functions operating on flat float64 arrays.
"""

import numpy as np

TAYLOR_THRESHOLD = 1e-4
SMALL_A_THRESHOLD = 1e-3
_SERIES_TERMS = 30


def phase_integral(z, s):
    """E(z, s) = (exp(izs) - 1)/(iz), written without cancellation."""
    z = np.asarray(z, dtype=float)
    s = np.asarray(s, dtype=float)
    w = z * s
    small = np.abs(w) < TAYLOR_THRESHOLD
    ws = np.where(small, 1.0, w)
    half = np.sin(0.5 * ws)
    regular = s * (np.sin(ws) / ws + 1j * (2.0 * half * half / ws))
    w2 = w * w
    taylor = s * ((1.0 - w2 / 6.0) + 1j * (0.5 * w - w2 * w / 24.0))
    return np.where(small, taylor, regular)


def _unit_moments(w, jmax):
    """F_j(w) = int_0^1 u^j exp(iwu) du for j = 0..jmax."""
    w = np.asarray(w, dtype=float)
    out = np.empty((jmax + 1,) + w.shape, dtype=complex)
    small = np.abs(w) <= 2.0
    if small.any():
        ws = w[small]
        iw = 1j * ws
        for j in range(jmax + 1):
            term = np.ones_like(iw)
            acc = term / (j + 1)
            for k in range(1, _SERIES_TERMS):
                term = term * iw / k
                acc = acc + term / (j + k + 1)
            out[j][small] = acc
    big = ~small
    if big.any():
        wb = w[big]
        e = np.exp(1j * wb)
        f = (e - 1.0) / (1j * wb)
        out[0][big] = f
        for j in range(1, jmax + 1):
            f = (e - j * f) / (1j * wb)
            out[j][big] = f
    return out


def duhamel_radial(s, xi, a):
    """D(s; xi, a) = int_0^s exp(-i xi r) sin(a r)/a dr for a = |eta| >= 0.

    No spectral cutoff is applied here.
    """
    s, xi, a = np.broadcast_arrays(np.asarray(s, float), np.asarray(xi, float), np.abs(np.asarray(a, float)))
    out = np.empty(s.shape, dtype=complex)
    small = a * s < SMALL_A_THRESHOLD
    reg = ~small
    if reg.any():
        ar, xr, sr = a[reg], xi[reg], s[reg]
        out[reg] = (phase_integral(ar - xr, sr) - phase_integral(-(ar + xr), sr)) / (2j * ar)
    if small.any():
        ar, xr, sr = a[small], xi[small], s[small]
        f = _unit_moments(-xr * sr, 5)
        a2 = ar * ar
        out[small] = (sr ** 2 * f[1] - a2 / 6.0 * sr ** 4 * f[3] + a2 * a2 / 120.0 * sr ** 6 * f[5])
    return out


def shifted_duhamel(u, xi, a):
    """exp(iu xi) D(u; xi, a), the factor entering every chaos-two kernel."""
    u, xi = np.broadcast_arrays(np.asarray(u, float), np.asarray(xi, float))
    return np.exp(1j * u * xi) * duhamel_radial(u, xi, a)


def shifted_duhamel_table(u, xi, a):
    """Matrix P[j, k] = exp(i u_j xi_k) D(u_j; xi_k, a)."""
    u = np.asarray(u, float)[:, None]
    xi = np.asarray(xi, float)[None, :]
    return shifted_duhamel(u, xi, np.full(np.broadcast(u, xi).shape, abs(float(a))))
