# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: cyclic Jacobi eigenvalues and certificate coefficients.

Behaviour matches ``_kernels_py`` exactly; see that module for the contract.
"""
import numpy as np

from libc.math cimport fabs, sqrt, copysign


def jacobi_eigenvalues(a, double tol=1e-15, int max_sweeps=100):
    cdef double[:, ::1] m = np.array(a, dtype=np.float64, order="C", copy=True)
    cdef Py_ssize_t n = m.shape[0]
    cdef Py_ssize_t p, q, r
    cdef double fro = 0.0, off, apq, diff, theta, t, c, s, xp, xq
    cdef int sweep
    if n == 0:
        return np.zeros(0)
    for p in range(n):
        for q in range(n):
            fro += m[p, q] * m[p, q]
    fro = sqrt(fro)
    if fro == 0.0:
        return np.zeros(n)
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(n):
                if p != q:
                    off += m[p, q] * m[p, q]
        if sqrt(off) <= tol * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = m[p, q]
                if apq == 0.0:
                    continue
                diff = m[q, q] - m[p, p]
                if fabs(apq) * 1e150 < fabs(diff):
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = copysign(1.0, theta) / (fabs(theta) + sqrt(theta * theta + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for r in range(n):
                    xp = m[r, p]
                    xq = m[r, q]
                    m[r, p] = c * xp - s * xq
                    m[r, q] = s * xp + c * xq
                for r in range(n):
                    xp = m[p, r]
                    xq = m[q, r]
                    m[p, r] = c * xp - s * xq
                    m[q, r] = s * xp + c * xq
                m[p, q] = 0.0
                m[q, p] = 0.0
    out = np.empty(n)
    cdef double[::1] o = out
    for p in range(n):
        o[p] = m[p, p]
    out.sort()
    return out


def s_coefficients(h, u):
    cdef const double[:, ::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef const double[::1] uv = np.ascontiguousarray(u, dtype=np.float64)
    cdef Py_ssize_t n = hv.shape[0]
    cdef Py_ssize_t i, j
    cdef double prev = 0.0, val
    du_arr = np.empty(n + 1)
    colacc_arr = np.zeros(n + 1)
    out_arr = np.zeros((n + 1, n + 1))
    cdef double[::1] du = du_arr
    cdef double[::1] colacc = colacc_arr
    cdef double[:, ::1] out = out_arr
    for i in range(n + 1):
        du[i] = uv[i] - prev
        prev = uv[i]
    for i in range(n + 1):
        if i < n:
            out[i, i] = -0.5 * du[i] * du[i] + uv[i]
        else:
            out[i, i] = -0.5 * du[i] * du[i] + 0.5 * uv[i]
        for j in range(i):
            val = du[i] * colacc[j] + uv[i - 1] * hv[i - 1, j] - du[i] * du[j]
            if j == i - 1:
                val -= uv[i - 1]
            out[i, j] = val
        if i < n:
            for j in range(i + 1):
                colacc[j] += hv[i, j]
    return out_arr


def t_coefficients(h, v):
    cdef const double[:, ::1] hv = np.ascontiguousarray(h, dtype=np.float64)
    cdef const double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t n = hv.shape[0]
    cdef Py_ssize_t i, j, k
    cdef double acc, dv, left, val
    tail_arr = np.zeros((n + 1, n + 1))
    out_arr = np.zeros((n + 1, n + 1))
    cdef double[:, ::1] tail = tail_arr
    cdef double[:, ::1] out = out_arr
    for i in range(n - 1, -1, -1):
        for j in range(n):
            tail[i, j] = tail[i + 1, j] + (hv[i, j] if j <= i else 0.0)
    for i in range(n + 1):
        if i == n:
            acc = 0.5 * (vv[0] - 1.0) + 0.5 * vv[n]
            for k in range(n):
                acc += 0.5 * (vv[k + 1] - vv[k])
            out[i, i] = acc
            for j in range(n):
                val = vv[n] * hv[n - 1, j] - (vv[j + 1] - vv[j])
                if j == n - 1:
                    val -= vv[n]
                out[i, j] = val
            continue
        dv = vv[i + 1] - vv[i]
        left = vv[i] if i > 0 else 0.0
        out[i, i] = 0.5 * (vv[i + 1] + left) + 0.5 * dv - dv * tail[i, i]
        for j in range(i):
            val = vv[i] * hv[i - 1, j] - dv * tail[i, j] - (vv[j + 1] - vv[j]) * tail[i, i]
            if j == i - 1:
                val -= vv[i]
            out[i, j] = val
    return out_arr
