# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stencil and pointwise-kinetics kernels.

Signatures and floating-point evaluation order mirror ``_fallback.py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport isfinite

cnp.import_array()

NAME = "cython"


def laplacian3(const double[:, :, ::1] f, ih2):
    cdef Py_ssize_t n0 = f.shape[0], n1 = f.shape[1], n2 = f.shape[2]
    cdef double a0 = ih2[0], a1 = ih2[1], a2 = ih2[2]
    cdef Py_ssize_t i, j, k, ip, im, jp, jm, kp, km
    cdef double c, acc
    out = np.empty((n0, n1, n2))
    cdef double[:, :, ::1] o = out
    for i in range(n0):
        ip = i + 1 if i + 1 < n0 else 0
        im = i - 1 if i > 0 else n0 - 1
        for j in range(n1):
            jp = j + 1 if j + 1 < n1 else 0
            jm = j - 1 if j > 0 else n1 - 1
            for k in range(n2):
                kp = k + 1 if k + 1 < n2 else 0
                km = k - 1 if k > 0 else n2 - 1
                c = f[i, j, k]
                acc = 0.0
                if a0 != 0.0:
                    acc = acc + (f[ip, j, k] - 2.0 * c + f[im, j, k]) * a0
                if a1 != 0.0:
                    acc = acc + (f[i, jp, k] - 2.0 * c + f[i, jm, k]) * a1
                if a2 != 0.0:
                    acc = acc + (f[i, j, kp] - 2.0 * c + f[i, j, km]) * a2
                o[i, j, k] = acc
    return out


def gradient_sq3(const double[:, :, ::1] f, ih, bint backward=False):
    cdef Py_ssize_t n0 = f.shape[0], n1 = f.shape[1], n2 = f.shape[2]
    cdef double a0 = ih[0], a1 = ih[1], a2 = ih[2]
    cdef Py_ssize_t i, j, k, i2, j2, k2
    cdef double c, d, acc
    out = np.empty((n0, n1, n2))
    cdef double[:, :, ::1] o = out
    for i in range(n0):
        if backward:
            i2 = i - 1 if i > 0 else n0 - 1
        else:
            i2 = i + 1 if i + 1 < n0 else 0
        for j in range(n1):
            if backward:
                j2 = j - 1 if j > 0 else n1 - 1
            else:
                j2 = j + 1 if j + 1 < n1 else 0
            for k in range(n2):
                if backward:
                    k2 = k - 1 if k > 0 else n2 - 1
                else:
                    k2 = k + 1 if k + 1 < n2 else 0
                c = f[i, j, k]
                acc = 0.0
                if a0 != 0.0:
                    d = (c - f[i2, j, k]) * a0 if backward else (f[i2, j, k] - c) * a0
                    acc = acc + d * d
                if a1 != 0.0:
                    d = (c - f[i, j2, k]) * a1 if backward else (f[i, j2, k] - c) * a1
                    acc = acc + d * d
                if a2 != 0.0:
                    d = (c - f[i, j, k2]) * a2 if backward else (f[i, j, k2] - c) * a2
                    acc = acc + d * d
                o[i, j, k] = acc
    return out


cdef struct Rates:
    double k0p, k0m, k1p, k1m, k2p, k2m, feed


cdef inline void _tend(Rates* k, double u, double v, double p, double q, double* out) noexcept nogil:
    cdef double r0, r1, r2
    if k.feed >= 0.0:
        r0 = k.k0p * (u - k.feed)
    else:
        r0 = k.k0p * u - k.k0m * q
    r1 = k.k1p * u * v * v - k.k1m * v * v * v
    r2 = k.k2p * v - k.k2m * p
    out[0] = -r1 - r0
    out[1] = r1 - r2
    out[2] = r2
    out[3] = 0.0 if k.feed >= 0.0 else r0


cdef Rates _rates(k, double feed):
    cdef Rates r
    r.k0p, r.k0m, r.k1p, r.k1m, r.k2p, r.k2m = [float(x) for x in k]
    r.feed = feed
    return r


def reaction_tendency(const double[:, ::1] c, k, double feed):
    cdef Rates r = _rates(k, feed)
    cdef Py_ssize_t n = c.shape[1], i
    cdef double t[4]
    out = np.empty((4, n))
    cdef double[:, ::1] o = out
    for i in range(n):
        _tend(&r, c[0, i], c[1, i], c[2, i], c[3, i], t)
        o[0, i] = t[0]
        o[1, i] = t[1]
        o[2, i] = t[2]
        o[3, i] = t[3]
    return out


def reaction_rk4(const double[:, ::1] c, k, double feed, double dt, double floor):
    cdef Rates r = _rates(k, feed)
    cdef Py_ssize_t n = c.shape[1], i, s
    cdef double half = 0.5 * dt, sixth = dt / 6.0
    cdef double y[4]
    cdef double ys[4]
    cdef double k1[4]
    cdef double k2[4]
    cdef double k3[4]
    cdef double k4[4]
    cdef double val
    cdef long clamps = 0
    cdef Py_ssize_t bad = -1
    out = np.empty((4, n))
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            for s in range(4):
                y[s] = c[s, i]
            _tend(&r, y[0], y[1], y[2], y[3], k1)
            for s in range(4):
                ys[s] = y[s] + half * k1[s]
            _tend(&r, ys[0], ys[1], ys[2], ys[3], k2)
            for s in range(4):
                ys[s] = y[s] + half * k2[s]
            _tend(&r, ys[0], ys[1], ys[2], ys[3], k3)
            for s in range(4):
                ys[s] = y[s] + dt * k3[s]
            _tend(&r, ys[0], ys[1], ys[2], ys[3], k4)
            for s in range(4):
                val = y[s] + sixth * (((k1[s] + 2.0 * k2[s]) + 2.0 * k3[s]) + k4[s])
                if not isfinite(val):
                    if bad < 0:
                        bad = i
                o[s, i] = val
        if bad < 0:
            for i in range(n):
                for s in range(4):
                    if o[s, i] < floor:
                        o[s, i] = floor
                        clamps += 1
    return out, clamps, bad


def clamp(double[:, ::1] c, double floor):
    cdef Py_ssize_t n = c.shape[1], i, s
    cdef long count = 0
    for s in range(c.shape[0]):
        for i in range(n):
            if c[s, i] < floor:
                c[s, i] = floor
                count += 1
    return count
