"""Pure-Python kernels.

These mirror the compiled kernels in ``_kernels.pyx`` one for one and are
used whenever the extension is missing or ``HDUAL_PURE_PYTHON=1``.
"""
import math

import numpy as np


def jacobi_eigenvalues(a, tol=1e-15, max_sweeps=100):
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Returns the eigenvalues in ascending order.
    """
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    if n == 0:
        return np.zeros(0)
    fro = math.sqrt(float(np.sum(a * a)))
    if fro == 0.0:
        return np.zeros(n)
    for _ in range(max_sweeps):
        off = math.sqrt(max(float(np.sum(a * a) - np.sum(np.diag(a) ** 2)), 0.0))
        if off <= tol * fro:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = float(a[p, q])
                if apq == 0.0:
                    continue
                diff = float(a[q, q] - a[p, p])
                if abs(apq) * 1e150 < abs(diff):
                    # tiny rotation angle: t ~ 1 / (2 theta) without overflow
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = 0.0
                a[q, p] = 0.0
    return np.sort(np.diag(a).copy())


def s_coefficients(h, u):
    """Lower-triangular coefficients of the primal certificate form.

    ``h`` is the N x N step-size array (``h[k, i]`` multiplies the i-th
    gradient in step k) and ``u`` holds N + 1 weights.  Entry ``[i, j]`` with
    ``i >= j`` is the coefficient of ``<g_i, g_j> / L``.
    """
    h = np.asarray(h, dtype=float)
    u = np.asarray(u, dtype=float)
    n = h.shape[0]
    du = np.empty(n + 1)
    prev = 0.0
    for i in range(n + 1):
        du[i] = u[i] - prev
        prev = u[i]
    out = np.zeros((n + 1, n + 1))
    # colacc[j] holds sum_{l=j}^{i-1} h[l, j] when row i is processed
    colacc = np.zeros(n + 1)
    for i in range(n + 1):
        if i < n:
            out[i, i] = -0.5 * du[i] * du[i] + u[i]
        else:
            out[i, i] = -0.5 * du[i] * du[i] + 0.5 * u[i]
        for j in range(i):
            val = du[i] * colacc[j] + u[i - 1] * h[i - 1, j] - du[i] * du[j]
            if j == i - 1:
                val -= u[i - 1]
            out[i, j] = val
        if i < n:
            for j in range(i + 1):
                colacc[j] += h[i, j]
    return out


def t_coefficients(h, v):
    """Lower-triangular coefficients of the dual certificate form.

    Same layout as :func:`s_coefficients`; ``h`` is the dual method's array
    and ``v`` its N + 1 weights.
    """
    h = np.asarray(h, dtype=float)
    v = np.asarray(v, dtype=float)
    n = h.shape[0]
    # tail[i, j] = sum_{l=i}^{N-1} h[l, j]
    tail = np.zeros((n + 1, n + 1))
    for i in range(n - 1, -1, -1):
        for j in range(n):
            tail[i, j] = tail[i + 1, j] + (h[i, j] if j <= i else 0.0)
    out = np.zeros((n + 1, n + 1))
    for i in range(n + 1):
        if i == n:
            acc = 0.5 * (v[0] - 1.0) + 0.5 * v[n]
            for k in range(n):
                acc += 0.5 * (v[k + 1] - v[k])
            out[i, i] = acc
            for j in range(n):
                val = v[n] * h[n - 1, j] - (v[j + 1] - v[j])
                if j == n - 1:
                    val -= v[n]
                out[i, j] = val
            continue
        dv = v[i + 1] - v[i]
        left = v[i] if i > 0 else 0.0
        out[i, i] = 0.5 * (v[i + 1] + left) + 0.5 * dv - dv * tail[i, i]
        for j in range(i):
            val = v[i] * h[i - 1, j] - dv * tail[i, j] - (v[j + 1] - v[j]) * tail[i, i]
            if j == i - 1:
                val -= v[i]
            out[i, j] = val
    return out
