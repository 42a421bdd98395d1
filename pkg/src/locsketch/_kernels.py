"""Hot numeric kernels, each in a loop form (compiled by numba) and a numpy form.

The public names at the bottom are bound according to ``_accel.BACKEND``.
Both forms are kept importable so the test-suite and the backend benchmark
can exercise them side by side.
"""
import numpy as np

from . import _accel


def _block_apply_loops(s_flat, s_off, m_sizes, n_sizes, x):
    n_blocks = m_sizes.shape[0]
    d = x.shape[1]
    out = np.zeros((m_sizes.sum(), d))
    row = 0
    col = 0
    for j in range(n_blocks):
        mj = m_sizes[j]
        nj = n_sizes[j]
        base = s_off[j]
        for r in range(mj):
            o = out[row + r]
            for k in range(nj):
                s = s_flat[base + r * nj + k]
                xr = x[col + k]
                for c in range(d):
                    o[c] += s * xr[c]
        row += mj
        col += nj
    return out


def _block_apply_numpy(s_flat, s_off, m_sizes, n_sizes, x):
    out = np.empty((int(m_sizes.sum()), x.shape[1]))
    row = 0
    col = 0
    for j in range(m_sizes.shape[0]):
        mj = int(m_sizes[j])
        nj = int(n_sizes[j])
        sj = s_flat[s_off[j]:s_off[j] + mj * nj].reshape(mj, nj)
        out[row:row + mj] = sj @ x[col:col + nj]
        row += mj
        col += nj
    return out


def _cholesky_loops(m):
    # Returns (L, k) with k the first failing pivot, or -1.
    n = m.shape[0]
    low = np.zeros((n, n))
    for j in range(n):
        acc = m[j, j]
        for k in range(j):
            acc -= low[j, k] * low[j, k]
        if not acc > 0.0:
            return low, j
        piv = np.sqrt(acc)
        low[j, j] = piv
        for i in range(j + 1, n):
            acc = m[i, j]
            for k in range(j):
                acc -= low[i, k] * low[j, k]
            low[i, j] = acc / piv
    return low, -1


def _cholesky_numpy(m):
    n = m.shape[0]
    low = np.zeros((n, n))
    for j in range(n):
        row = low[j, :j]
        acc = m[j, j] - row @ row
        if not acc > 0.0:
            return low, j
        piv = np.sqrt(acc)
        low[j, j] = piv
        low[j + 1:, j] = (m[j + 1:, j] - low[j + 1:, :j] @ row) / piv
    return low, -1


def _householder_qr_loops(a):
    # Works on the transpose so every inner loop runs over contiguous memory.
    m, n = a.shape
    rt = a.T.copy()
    vs = np.zeros((n, m))
    betas = np.zeros(n)
    for j in range(n):
        rj = rt[j]
        norm2 = 0.0
        for i in range(j, m):
            norm2 += rj[i] * rj[i]
        alpha = np.sqrt(norm2)
        if alpha == 0.0:
            continue
        if rj[j] > 0.0:
            alpha = -alpha
        v0 = rj[j] - alpha
        vnorm2 = norm2 - rj[j] * rj[j] + v0 * v0
        if vnorm2 == 0.0:
            continue
        v = vs[j]
        v[j] = v0
        for i in range(j + 1, m):
            v[i] = rj[i]
        beta = 2.0 / vnorm2
        betas[j] = beta
        for c in range(j, n):
            rc = rt[c]
            dot = 0.0
            for i in range(j, m):
                dot += v[i] * rc[i]
            dot *= beta
            for i in range(j, m):
                rc[i] -= dot * v[i]
    qt = np.zeros((n, m))
    for i in range(n):
        qt[i, i] = 1.0
    for j in range(n - 1, -1, -1):
        beta = betas[j]
        if beta == 0.0:
            continue
        v = vs[j]
        for c in range(n):
            qc = qt[c]
            dot = 0.0
            for i in range(j, m):
                dot += v[i] * qc[i]
            dot *= beta
            for i in range(j, m):
                qc[i] -= dot * v[i]
    r = np.zeros((n, n))
    for i in range(n):
        for c in range(i, n):
            r[i, c] = rt[c, i]
    return np.ascontiguousarray(qt.T), r


def _householder_qr_numpy(a):
    q, r = np.linalg.qr(a, mode="reduced")
    return q, r


if _accel.HAS_NUMBA:
    _block_apply_numba = _accel.njit(_block_apply_loops)
    _cholesky_numba = _accel.njit(_cholesky_loops)
    _householder_qr_numba = _accel.njit(_householder_qr_loops)
else:  # pragma: no cover
    _block_apply_numba = _block_apply_loops
    _cholesky_numba = _cholesky_loops
    _householder_qr_numba = _householder_qr_loops

KERNELS = {
    "numba": {
        "block_apply": _block_apply_numba,
        "cholesky": _cholesky_numba,
        "householder_qr": _householder_qr_numba,
    },
    "numpy": {
        "block_apply": _block_apply_numpy,
        "cholesky": _cholesky_numpy,
        "householder_qr": _householder_qr_numpy,
    },
}

block_apply = KERNELS[_accel.BACKEND]["block_apply"]
cholesky = KERNELS[_accel.BACKEND]["cholesky"]
householder_qr = KERNELS[_accel.BACKEND]["householder_qr"]
