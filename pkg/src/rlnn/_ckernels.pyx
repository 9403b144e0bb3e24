# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the kernels in ``_pykernels``.

Loops are fused so no N x p temporaries are allocated. The RNG output is
bit-identical to the numpy version.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, fmax
from libc.stdint cimport uint32_t, uint64_t
from scipy.special.cython_special cimport ndtr, ndtri

cnp.import_array()

BACKEND = "cython"

cdef double INV_SQRT_2PI = 0.3989422804014327
cdef double SD_FLOOR = 1e-14
cdef double TWO_M53 = 2.0 ** -53


cdef inline void _philox(uint32_t* c, uint32_t k0, uint32_t k1) noexcept nogil:
    cdef uint64_t p0, p1
    cdef int r
    for r in range(10):
        p0 = <uint64_t>0xD2511F53 * c[0]
        p1 = <uint64_t>0xCD9E8D57 * c[2]
        c[0] = <uint32_t>(p1 >> 32) ^ c[1] ^ k0
        c[1] = <uint32_t>p1
        c[2] = <uint32_t>(p0 >> 32) ^ c[3] ^ k1
        c[3] = <uint32_t>p0
        k0 = k0 + <uint32_t>0x9E3779B9
        k1 = k1 + <uint32_t>0xBB67AE85


cdef inline double _unit(uint32_t hi, uint32_t lo) noexcept nogil:
    cdef uint64_t bits = ((<uint64_t>hi << 32) | lo) >> 11
    return (<double>bits + 0.5) * TWO_M53


def philox4x32(c0, c1, c2, c3, k0, k1):
    cdef uint32_t c[4]
    c[0] = c0
    c[1] = c1
    c[2] = c2
    c[3] = c3
    _philox(c, k0, k1)
    return c[0], c[1], c[2], c[3]


def _fill(uint64_t seed, uint64_t path_start, Py_ssize_t n_paths,
          Py_ssize_t n_dates, Py_ssize_t dim, bint gaussian):
    out = np.empty((n_paths, n_dates, dim))
    cdef double[:, :, ::1] o = out
    cdef uint32_t k0 = <uint32_t>seed
    cdef uint32_t k1 = <uint32_t>(seed >> 32)
    cdef uint32_t c[4]
    cdef Py_ssize_t n, m, j
    cdef uint64_t path
    cdef double u
    with nogil:
        for n in range(n_paths):
            path = path_start + n
            for m in range(n_dates):
                for j in range(dim):
                    if j % 2 == 0:
                        c[0] = <uint32_t>path
                        c[1] = <uint32_t>(path >> 32)
                        c[2] = <uint32_t>(m + 1)
                        c[3] = <uint32_t>(j // 2)
                        _philox(c, k0, k1)
                        u = _unit(c[0], c[1])
                    else:
                        u = _unit(c[2], c[3])
                    o[n, m, j] = ndtri(u) if gaussian else u
    return out


def uniforms(seed, path_start, n_paths, n_dates, dim):
    return _fill(int(seed) & 0xFFFFFFFFFFFFFFFF, path_start, n_paths, n_dates, dim, False)


def normals(seed, path_start, n_paths, n_dates, dim):
    return _fill(int(seed) & 0xFFFFFFFFFFFFFFFF, path_start, n_paths, n_dates, dim, True)


def forward(x, w1, b1, w2, double b2):
    cdef const double[:, ::1] X = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, ::1] W1 = np.ascontiguousarray(w1, dtype=np.float64)
    cdef const double[::1] B1 = np.ascontiguousarray(b1, dtype=np.float64)
    cdef const double[::1] W2 = np.ascontiguousarray(w2, dtype=np.float64)
    cdef Py_ssize_t n_rows = X.shape[0], d = X.shape[1], p = W1.shape[0]
    out = np.empty(n_rows)
    cdef double[::1] o = out
    cdef Py_ssize_t n, i, j
    cdef double z, acc
    with nogil:
        for n in range(n_rows):
            acc = 0.0
            for i in range(p):
                z = B1[i]
                for j in range(d):
                    z = z + W1[i, j] * X[n, j]
                # branch-free ReLU; the sign of z is unpredictable
                acc = acc + W2[i] * fmax(z, 0.0)
            o[n] = acc + b2
    return out


def mse_grad(x, y, w1, b1, w2, double b2):
    cdef const double[:, ::1] X = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[::1] Y = np.ascontiguousarray(y, dtype=np.float64)
    cdef const double[:, ::1] W1 = np.ascontiguousarray(w1, dtype=np.float64)
    cdef const double[::1] B1 = np.ascontiguousarray(b1, dtype=np.float64)
    cdef const double[::1] W2 = np.ascontiguousarray(w2, dtype=np.float64)
    cdef Py_ssize_t n_rows = X.shape[0], d = X.shape[1], p = W1.shape[0]
    gw1_arr = np.zeros((p, d))
    gb1_arr = np.zeros(p)
    gw2_arr = np.zeros(p)
    cdef double[:, ::1] gw1 = gw1_arr
    cdef double[::1] gb1 = gb1_arr
    cdef double[::1] gw2 = gw2_arr
    zbuf = np.empty(p)
    cdef double[::1] z = zbuf
    mbuf = np.empty(p)
    cdef double[::1] act = mbuf
    cdef Py_ssize_t n, i, j
    cdef double acc, g, dz, zi, loss = 0.0, gb2 = 0.0
    cdef double scale = 2.0 / n_rows
    # branch-free: active units are random, so branches mispredict
    with nogil:
        for n in range(n_rows):
            acc = b2
            for i in range(p):
                zi = B1[i]
                for j in range(d):
                    zi = zi + W1[i, j] * X[n, j]
                z[i] = fmax(zi, 0.0)
                act[i] = <double>(zi > 0.0)
                acc = acc + W2[i] * z[i]
            acc = acc - Y[n]
            loss = loss + acc * acc
            g = acc * scale
            gb2 = gb2 + g
            for i in range(p):
                gw2[i] = gw2[i] + z[i] * g
                dz = g * W2[i] * act[i]
                gb1[i] = gb1[i] + dz
                for j in range(d):
                    gw1[i, j] = gw1[i, j] + dz * X[n, j]
    return loss / n_rows, gw1_arr, gb1_arr, gw2_arr, gb2


def relu_expectation_sum(m, w1, b1, sd, w2):
    cdef const double[:, ::1] Mu = np.ascontiguousarray(m, dtype=np.float64)
    cdef const double[:, ::1] W1 = np.ascontiguousarray(w1, dtype=np.float64)
    cdef const double[::1] B1 = np.ascontiguousarray(b1, dtype=np.float64)
    cdef const double[::1] SD = np.ascontiguousarray(sd, dtype=np.float64)
    cdef const double[::1] W2 = np.ascontiguousarray(w2, dtype=np.float64)
    cdef Py_ssize_t n_rows = Mu.shape[0], d = Mu.shape[1], p = W1.shape[0]
    out = np.empty(n_rows)
    cdef double[::1] o = out
    cdef Py_ssize_t n, i, j
    cdef double mu, s, zz, e, acc
    with nogil:
        for n in range(n_rows):
            acc = 0.0
            for i in range(p):
                mu = B1[i]
                for j in range(d):
                    mu = mu + W1[i, j] * Mu[n, j]
                s = SD[i]
                if s < SD_FLOOR:
                    e = mu if mu > 0.0 else 0.0
                else:
                    zz = mu / s
                    e = s * INV_SQRT_2PI * exp(-0.5 * zz * zz) + mu * ndtr(zz)
                acc = acc + W2[i] * e
            o[n] = acc
    return out
