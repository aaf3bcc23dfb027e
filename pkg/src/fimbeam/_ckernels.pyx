# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.  ``_pykernels`` holds the reference semantics."""

import numpy as np

from libc.math cimport sin, cos, sqrt, fabs

ctypedef double complex cplx


cdef inline double abs2(cplx z) nogil:
    return z.real * z.real + z.imag * z.imag


def duality_multipliers(const cplx[:, :] Ht, const double[:] gamma, double tol, int max_iter,
                        double limit):
    cdef Py_ssize_t n = Ht.shape[0], k = Ht.shape[1]
    cdef Py_ssize_t i, j, m, u, it
    lam_arr = np.zeros(k)
    cdef double[:] lam = lam_arr
    cdef double[:] new = np.empty(k)
    cdef cplx[:, :] c = np.empty((n, n), dtype=complex)
    cdef cplx[:] v = np.empty(n, dtype=complex)
    cdef cplx acc
    cdef double s, q, worst, rel

    for it in range(1, max_iter + 1):
        # lower triangle of I + sum_u lam_u h_u h_u^H
        for i in range(n):
            for j in range(i + 1):
                acc = 1.0 if i == j else 0.0
                for u in range(k):
                    acc = acc + lam[u] * Ht[i, u] * Ht[j, u].conjugate()
                c[i, j] = acc
        # in-place Cholesky, lower factor
        for j in range(n):
            s = c[j, j].real
            for m in range(j):
                s -= abs2(c[j, m])
            s = sqrt(s)
            c[j, j] = s
            for i in range(j + 1, n):
                acc = c[i, j]
                for m in range(j):
                    acc = acc - c[i, m] * c[j, m].conjugate()
                c[i, j] = acc / s
        worst = 0.0
        for u in range(k):
            q = 0.0
            for i in range(n):
                acc = Ht[i, u]
                for m in range(i):
                    acc = acc - c[i, m] * v[m]
                v[i] = acc / c[i, i].real
                q += abs2(v[i])
            new[u] = gamma[u] * (1.0 - lam[u] * q) / q
            if not new[u] <= limit:  # also catches NaN
                return np.asarray(new).copy(), it, False
            rel = fabs(new[u] - lam[u]) / new[u]
            if rel > worst:
                worst = rel
        for u in range(k):
            lam[u] = new[u]
        if worst < tol:
            return lam_arr, it, True
    return lam_arr, max_iter, False


def evaluate(const double[:, :] phase0, const double[:] uy, double kappa, const double[:] y,
             const cplx[:, :] alpha, const cplx[:, :] W, const double[:] inv_gs,
             const double[:] inv_s, bint want_grad):
    cdef Py_ssize_t n = phase0.shape[0], npath = phase0.shape[1], k = alpha.shape[0]
    cdef Py_ssize_t i, l, u, j
    cdef double ph, pw, sig
    cdef cplx a, acc, accs

    cdef cplx[:, :] H = np.empty((n, k), dtype=complex)
    cdef cplx[:, :] Hs = np.empty((n, k), dtype=complex)
    cdef cplx[:, :] A = np.empty((n, npath), dtype=complex)
    cdef cplx[:, :] S = np.empty((k, k), dtype=complex)
    eps_arr = np.empty(k)
    cdef double[:] eps = eps_arr

    for i in range(n):
        for l in range(npath):
            ph = phase0[i, l] + kappa * y[i] * uy[l]
            A[i, l] = cos(ph) + 1j * sin(ph)
        for u in range(k):
            acc = 0.0
            accs = 0.0
            for l in range(npath):
                a = A[i, l] * alpha[u, l]
                acc = acc + a
                accs = accs + a * uy[l]
            H[i, u] = acc
            Hs[i, u] = accs

    for u in range(k):
        pw = 0.0
        sig = 0.0
        for j in range(k):
            acc = 0.0
            for i in range(n):
                acc = acc + H[i, u].conjugate() * W[i, j]
            S[u, j] = acc
            if j == u:
                sig = abs2(acc)
            else:
                pw += abs2(acc)
        eps[u] = inv_gs[u] * sig - inv_s[u] * pw - 1.0

    if not want_grad:
        return eps_arr, None

    grad_arr = np.empty((n, k))
    cdef double[:, :] grad = grad_arr
    for i in range(n):
        for u in range(k):
            acc = 0.0
            for j in range(k):
                if j == u:
                    acc = acc + W[i, j].conjugate() * (inv_gs[u] * S[u, j])
                else:
                    acc = acc - W[i, j].conjugate() * (inv_s[u] * S[u, j])
            grad[i, u] = -2.0 * kappa * (Hs[i, u] * acc).imag
    return eps_arr, grad_arr
