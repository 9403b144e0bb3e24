"""Pure-numpy implementations of the hot kernels.

These are the reference versions; ``_ckernels`` (Cython) must agree with them
bit-for-bit for the RNG and to rounding for the arithmetic kernels.
"""
import numpy as np
from scipy.special import ndtr, ndtri

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)
_SHIFT11 = np.uint64(11)
_TWO_M53 = 2.0 ** -53
_INV_SQRT_2PI = 0.3989422804014327
_SD_FLOOR = 1e-14
# rows per chunk for the N x p intermediates
_CHUNK = 4096

BACKEND = "python"


def philox4x32(c0, c1, c2, c3, k0, k1):
    """Philox4x32-10 block function, vectorized over the counter words."""
    c0 = np.asarray(c0, dtype=np.uint64)
    c1 = np.asarray(c1, dtype=np.uint64)
    c2 = np.asarray(c2, dtype=np.uint64)
    c3 = np.asarray(c3, dtype=np.uint64)
    k0 = np.uint64(k0)
    k1 = np.uint64(k1)
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (
            ((p1 >> _SHIFT32) ^ c1 ^ k0) & _MASK32,
            p1 & _MASK32,
            ((p0 >> _SHIFT32) ^ c3 ^ k1) & _MASK32,
            p0 & _MASK32,
        )
        k0 = (k0 + _W0) & _MASK32
        k1 = (k1 + _W1) & _MASK32
    return c0, c1, c2, c3


def _to_unit(hi, lo):
    bits = ((hi << _SHIFT32) | lo) >> _SHIFT11
    return (bits.astype(np.float64) + 0.5) * _TWO_M53


def uniforms(seed, path_start, n_paths, n_dates, dim):
    """Open-interval uniforms keyed by (seed, path, date, asset).

    Date indices run from 1 to ``n_dates``. Each Philox block yields two
    doubles, so asset ``j`` reads slot ``j % 2`` of block ``j // 2``.
    """
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    k0, k1 = seed & 0xFFFFFFFF, seed >> 32
    n_blocks = (dim + 1) // 2
    path = np.arange(path_start, path_start + n_paths, dtype=np.uint64)
    out = np.empty((n_paths, n_dates, 2 * n_blocks))
    for m in range(n_dates):
        for b in range(n_blocks):
            r0, r1, r2, r3 = philox4x32(
                path & _MASK32, path >> _SHIFT32,
                np.uint64(m + 1), np.uint64(b), k0, k1,
            )
            out[:, m, 2 * b] = _to_unit(r0, r1)
            out[:, m, 2 * b + 1] = _to_unit(r2, r3)
    return out[:, :, :dim]


def normals(seed, path_start, n_paths, n_dates, dim):
    return ndtri(uniforms(seed, path_start, n_paths, n_dates, dim))


def forward(x, w1, b1, w2, b2):
    """Network output for each row of ``x``."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty(x.shape[0])
    for s in range(0, x.shape[0], _CHUNK):
        z = x[s:s + _CHUNK] @ w1.T
        z += b1
        np.maximum(z, 0.0, out=z)
        out[s:s + _CHUNK] = z @ w2 + b2
    return out


def mse_grad(x, y, w1, b1, w2, b2):
    """Mean squared error and its gradient with respect to every parameter.

    Exactly-zero pre-activations get subgradient 0.
    """
    n = x.shape[0]
    z = x @ w1.T
    z += b1
    active = z > 0.0
    a = np.where(active, z, 0.0)
    resid = a @ w2 + b2 - y
    loss = float(resid @ resid) / n
    g = resid * (2.0 / n)
    gw2 = a.T @ g
    gb2 = float(g.sum())
    dz = np.multiply.outer(g, w2)
    dz *= active
    gw1 = dz.T @ x
    gb1 = dz.sum(axis=0)
    return loss, gw1, gb1, gw2, gb2


def _relu_expect(mu, sd):
    """E[max(Y, 0)] for Y ~ N(mu, sd^2), ``sd`` broadcast along rows."""
    safe = np.where(sd < _SD_FLOOR, 1.0, sd)
    z = mu / safe
    val = safe * _INV_SQRT_2PI * np.exp(-0.5 * z * z) + mu * ndtr(z)
    return np.where(sd < _SD_FLOOR, np.maximum(mu, 0.0), val)


def relu_expectation_sum(m, w1, b1, sd, w2):
    """Sum_i w2_i E[max(w1_i . X + b1_i, 0)] with X ~ N(m_row, .) per row.

    ``m`` holds the conditional mean of the network input for each row and
    ``sd`` the per-unit standard deviation of ``w1_i . X``. The mean is
    accumulated column by column so each row's result is independent of how
    many rows are passed.
    """
    m = np.asarray(m, dtype=np.float64)
    n, d = m.shape
    out = np.empty(n)
    for s in range(0, n, _CHUNK):
        blk = m[s:s + _CHUNK]
        mu = np.broadcast_to(b1, (blk.shape[0], b1.shape[0])).copy()
        for j in range(d):
            mu += np.multiply.outer(blk[:, j], w1[:, j])
        e = _relu_expect(mu, sd)
        e *= w2
        out[s:s + _CHUNK] = e.sum(axis=1)
    return out
