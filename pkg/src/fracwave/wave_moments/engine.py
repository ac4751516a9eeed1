"""Covariance tables and time kernels shared by the wave moment functionals.

Every moment in this package has the form

    int mu(dxi, deta) int mu(dxi', deta') W(eta + eta') |sum_j v_j P_j(xi, eta) P_j(xi', eta')|^2

with ``P_j(xi, eta) = exp(i u_j xi) D(u_j; xi, |eta|)`` on a fixed set of time
nodes ``u_j``. Integrating out the two time frequencies leaves the real
symmetric matrices

    C_jk(a) = int dxi v(xi) P_j(xi, a) conj(P_k(xi, a)),

so the remaining work is a spatial integral of ``v^T (C(|eta|) o C(|eta'|)) v``.
C is tabulated once per (H0, n) on a uniform radius grid and interpolated.
"""

from functools import lru_cache

import numpy as np

from ..quadrature import gauss_rule, geometric_edges, graded_rule, panel_rule
from ..spectral_core import shifted_duhamel_table

TABLE_STEP = 1.0 / 8.0
XI_BODY = 1500.0   # time frequencies beyond this use the asymptotic tail
XI_PANEL = 6.0
XI_NODES = 20


def time_nodes(lo, hi, count=24):
    """Gauss-Legendre nodes and weights on [lo, hi]."""
    x, w = gauss_rule(count)
    half = 0.5 * (hi - lo)
    return lo + half * (np.asarray(x) + 1.0), half * np.asarray(w)


def sinc_kernel(tau, lam):
    """sin(tau * |lam|) / |lam| with the limit ``tau`` at lam = 0."""
    lam = np.abs(lam)
    safe = np.where(lam == 0, 1.0, lam)
    return np.where(lam == 0, tau, np.sin(tau * lam) / safe)


def pairing_kernel(phi, u, lam, panels=8, nodes=12):
    """K(u; lam) = int_{t > u} phi(t) sin((t - u)|lam|)/|lam| dt, shape (len(u), len(lam)).

    Each u gets its own rule on [max(u, a), b] so the indicator t > u is never
    integrated across.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    a, b = phi.support
    out = np.zeros((u.size, lam.size))
    if phi.is_zero:
        return out
    for j, uj in enumerate(u):
        lo = max(uj, a)
        if lo >= b:
            continue
        t, w = panel_rule(np.linspace(lo, b, panels + 1), nodes)
        w = w * phi(t)
        out[j] = (sinc_kernel((t - uj)[:, None], lam[None, :]) * w[:, None]).sum(axis=0)
    return out


# ------------------------------------------------------------ tail integrals

def _power_tail(power, start, reach, factor):
    """int_start^reach xi^power * factor(xi) dxi on geometric panels."""
    if reach <= start:
        return 0.0
    x, w = panel_rule(geometric_edges(start, reach, 4), 16)
    return float(np.sum(w * x ** power * factor(x)))


class TimeFrequencyRule:
    """Quadrature in xi >= 0 for the weight ``xi^(1-2H0) |F rho(2^-n xi)|^2``.

    Nodes cover [0, body]; the remaining half line is summarized by the two
    tail moments ``int xi^(-1-2H0) G`` and ``int xi^(-3-2H0) G`` consumed by the
    asymptotic expansion of P.
    """

    def __init__(self, H0, n, mollifier, body=XI_BODY):
        self.H0 = H0
        if n is None:
            G = lambda x: np.ones_like(x)
            reach = np.inf
        else:
            scale = 2.0 ** (-n)
            G = lambda x: mollifier.ft_sq_1d(scale * x)
            reach = mollifier.support_radius(1e-20) / scale
        self.body = float(min(body, reach))
        edges = np.concatenate([[0.0], np.arange(XI_PANEL, self.body, XI_PANEL), [self.body]])
        edges = np.unique(edges)
        x0, w0 = graded_rule(0.0, edges[1], XI_NODES, beta=2.0 * H0 - 1.0, min_ratio=1e-4, per_octave=1)
        x1, w1 = panel_rule(edges[1:], XI_NODES)
        self.xi = np.concatenate([x0, x1])
        w = np.concatenate([w0, w1])
        self.weights = w * self.xi ** (1.0 - 2.0 * H0) * G(self.xi)
        if np.isinf(reach):
            self.tail1 = self.body ** (-2.0 * H0) / (2.0 * H0)
            self.tail3 = self.body ** (-2.0 - 2.0 * H0) / (2.0 + 2.0 * H0)
        else:
            self.tail1 = _power_tail(-1.0 - 2.0 * H0, self.body, reach, G)
            self.tail3 = _power_tail(-3.0 - 2.0 * H0, self.body, reach, G)

    def covariance(self, u, a):
        """C_jk(a) = int_R v(xi) P_j conj(P_k) dxi = 2 Re int_0^inf (...)."""
        P = shifted_duhamel_table(u, self.xi, a)
        body = 2.0 * np.real((P * self.weights) @ P.conj().T)
        if self.tail1 == 0.0:
            return body
        # P ~ (a cos(au) + i xi sin(au)) / (a (xi^2 - a^2)) beyond the body
        s = u * np.sinc(a * u / np.pi)   # sin(au)/a
        c = np.cos(a * u)
        ss = np.outer(s, s)
        return body + 2.0 * (ss * self.tail1 + (np.outer(c, c) + 2.0 * a * a * ss) * self.tail3)


class CovarianceTable:
    """C(a) on ``a = 0, h, 2h, ...`` up to ``a_max``, with cubic interpolation.

    C is even in a, so the grid is mirrored across 0 for interpolation.
    """

    def __init__(self, u, H0, n, mollifier, a_max, step=TABLE_STEP):
        self.u = np.ascontiguousarray(u, dtype=float)
        self.step = step
        self.rule = TimeFrequencyRule(H0, n, mollifier)
        count = int(np.ceil(a_max / step)) + 3
        grid = step * np.arange(count)
        vals = np.stack([self.rule.covariance(self.u, a) for a in grid])
        self.values = np.concatenate([vals[1:2], vals])   # index 0 holds a = -h
        self.a_max = a_max

    def __call__(self, a):
        a = np.abs(np.atleast_1d(np.asarray(a, dtype=float)))
        x = a / self.step
        i = np.clip(np.floor(x).astype(int), 0, self.values.shape[0] - 4)
        f = x - i
        w0 = -f * (f - 1.0) * (f - 2.0) / 6.0
        w1 = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0
        w2 = -(f + 1.0) * f * (f - 2.0) / 2.0
        w3 = (f + 1.0) * f * (f - 1.0) / 6.0
        V = self.values
        return (w0[:, None, None] * V[i] + w1[:, None, None] * V[i + 1]
                + w2[:, None, None] * V[i + 2] + w3[:, None, None] * V[i + 3])

    def diagonal(self, a):
        return np.diagonal(self(a), axis1=1, axis2=2)


@lru_cache(maxsize=32)
def covariance_table(u_key, H0, n, mollifier, a_max):
    return CovarianceTable(np.array(u_key), H0, n, mollifier, a_max)


# ----------------------------------------------------------- spatial integral

def _sided_rule(lo, hi, q, beta, left, right):
    """Rule on [lo, hi] graded toward the flagged singular endpoints."""
    if hi <= lo:
        return np.empty(0), np.empty(0)
    if left and right:
        mid = 0.5 * (lo + hi)
        x1, w1 = graded_rule(lo, mid, q, beta, min_ratio=1e-3, per_octave=1)
        x2, w2 = graded_rule(0.0, hi - mid, q, beta, min_ratio=1e-3, per_octave=1)
        return np.concatenate([x1, hi - x2]), np.concatenate([w1, w2])
    if left:
        return graded_rule(lo, hi, q, beta, min_ratio=1e-3, per_octave=1)
    if right:
        x, w = graded_rule(0.0, hi - lo, q, beta, min_ratio=1e-3, per_octave=1)
        return hi - x, w
    k = max(1, int(np.ceil(hi - lo)))
    return panel_rule(np.linspace(lo, hi, k + 1), q)


def convolution_rule(lam, cutoff, beta, q=10):
    """Nodes for eta with |eta| <= cutoff and |lam - eta| <= cutoff, lam >= 0.

    The spatial density is singular at eta = 0 and eta = lam.
    """
    lo, hi = lam - cutoff, cutoff
    pieces = []
    if lam > 0:
        pieces.append(_sided_rule(lo, 0.0, q, beta, False, True))
        pieces.append(_sided_rule(0.0, lam, q, beta, True, True))
        pieces.append(_sided_rule(lam, hi, q, beta, True, False))
    else:
        pieces.append(_sided_rule(lo, 0.0, q, beta, False, True))
        pieces.append(_sided_rule(0.0, hi, q, beta, True, False))
    return np.concatenate([p[0] for p in pieces]), np.concatenate([p[1] for p in pieces])


def outer_rule(cutoff, q=12):
    """Rule for lam in [0, cutoff], graded at 0."""
    x0, w0 = graded_rule(0.0, min(1.0, cutoff), q, 0.0, min_ratio=1e-3, per_octave=1)
    if cutoff <= 1.0:
        return x0, w0
    k = int(np.ceil(cutoff - 1.0))
    x1, w1 = panel_rule(np.linspace(1.0, cutoff, k + 1), q)
    return np.concatenate([x0, x1]), np.concatenate([w0, w1])


def quadratic_form_1d(table, spatial_weight, vec_of_lam, outer_weight, cutoff, beta):
    """2 int_0^cutoff dlam W(lam) int deta w(eta) w(lam-eta) v^T (C(eta) o C(lam-eta)) v.

    ``vec_of_lam(lam)`` returns v with shape (J, len(lam)).
    """
    lam, wl = outer_rule(cutoff)
    wl = wl * outer_weight(lam)
    V = vec_of_lam(lam)
    total = 0.0
    for i in np.nonzero(wl != 0.0)[0]:
        eta, we = convolution_rule(lam[i], cutoff, beta)
        other = lam[i] - eta
        we = we * spatial_weight(eta) * spatial_weight(other)
        C1 = table(eta)
        C2 = table(other)
        v = V[:, i]
        q = np.einsum("ejk,ejk,j,k->e", C1, C2, v, v, optimize=True)
        total += wl[i] * float(np.sum(we * q))
    return 2.0 * total
