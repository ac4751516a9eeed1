# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the phase and Duhamel kernels (flat float64 inputs)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, fabs

cnp.import_array()

cdef double TAYLOR_THRESHOLD = 1e-4
cdef double SMALL_A_THRESHOLD = 1e-3
cdef int SERIES_TERMS = 30


cdef inline void _phase_parts(double z, double s, double* re, double* im) noexcept nogil:
    # E(z, s) = s (sin w / w + i (1 - cos w) / w), w = zs, via half-angle identities
    cdef double w = z * s
    cdef double h, c, w2
    if fabs(w) < TAYLOR_THRESHOLD:
        w2 = w * w
        re[0] = s * (1.0 - w2 / 6.0)
        im[0] = s * (0.5 * w - w2 * w / 24.0)
        return
    h = sin(0.5 * w)
    c = cos(0.5 * w)
    re[0] = s * (2.0 * h * c / w)
    im[0] = s * (2.0 * h * h / w)


cdef inline double complex _phase(double z, double s) noexcept nogil:
    cdef double re, im
    _phase_parts(z, s, &re, &im)
    return re + 1j * im


cdef inline void _unit_moments(double w, double complex* out) noexcept nogil:
    # F_j(w) = int_0^1 u^j exp(iwu) du, j = 0..5
    cdef int j, k
    cdef double complex iw, term, acc, e, f
    if fabs(w) <= 2.0:
        iw = 1j * w
        for j in range(6):
            term = 1.0
            acc = term / (j + 1)
            for k in range(1, SERIES_TERMS):
                term = term * iw / k
                acc = acc + term / (j + k + 1)
            out[j] = acc
    else:
        e = cos(w) + 1j * sin(w)
        f = (e - 1.0) / (1j * w)
        out[0] = f
        for j in range(1, 6):
            f = (e - j * f) / (1j * w)
            out[j] = f


cdef inline double complex _duhamel(double s, double xi, double a) noexcept nogil:
    cdef double complex f[6]
    cdef double a2, s2
    if a < 0:
        a = -a
    cdef double r1, i1, r2, i2, inv
    if a * s >= SMALL_A_THRESHOLD:
        # (E(a - xi) - E(-(a + xi))) / (2ia)
        _phase_parts(a - xi, s, &r1, &i1)
        _phase_parts(-(a + xi), s, &r2, &i2)
        inv = 0.5 / a
        return (i1 - i2) * inv - 1j * ((r1 - r2) * inv)
    _unit_moments(-xi * s, f)
    a2 = a * a
    s2 = s * s
    return s2 * f[1] - a2 / 6.0 * s2 * s2 * f[3] + a2 * a2 / 120.0 * s2 * s2 * s2 * f[5]


def phase_integral(double[::1] z, double[::1] s):
    cdef Py_ssize_t i, n = z.shape[0]
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _phase(z[i], s[i])
    return out


def duhamel_radial(double[::1] s, double[::1] xi, double[::1] a):
    cdef Py_ssize_t i, n = s.shape[0]
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _duhamel(s[i], xi[i], a[i])
    return out


def shifted_duhamel(double[::1] u, double[::1] xi, double[::1] a):
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double ph
    out = np.empty(n, dtype=np.complex128)
    cdef double complex[::1] o = out
    with nogil:
        for i in range(n):
            ph = u[i] * xi[i]
            o[i] = (cos(ph) + 1j * sin(ph)) * _duhamel(u[i], xi[i], a[i])
    return out


def shifted_duhamel_table(double[::1] u, double[::1] xi, double a):
    """Matrix P[j, k] = exp(i u_j xi_k) D(u_j; xi_k, a)."""
    cdef Py_ssize_t j, k, nu = u.shape[0], nx = xi.shape[0]
    cdef double ph
    out = np.empty((nu, nx), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    with nogil:
        for j in range(nu):
            for k in range(nx):
                ph = u[j] * xi[k]
                o[j, k] = (cos(ph) + 1j * sin(ph)) * _duhamel(u[j], xi[k], a)
    return out
