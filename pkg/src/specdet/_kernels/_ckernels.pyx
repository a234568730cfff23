# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: log/arg sums over level arrays and ladder inversion.

Semantics match specdet._kernels._pyref exactly (same principal branches,
same Newton iteration); the test suite asserts agreement.
"""

import numpy as np

cdef extern from "complex.h" nogil:
    double complex clog(double complex z)
    double complex cpow(double complex z, double complex p)
    double cabs(double complex z)
    double carg(double complex z)

IMPL = "cython"


def logsum_shifted(double complex[::1] levels, double complex lam):
    """Sum of principal logarithms of (levels[i] + lam)."""
    cdef Py_ssize_t i, n = levels.shape[0]
    cdef double complex acc = 0
    with nogil:
        for i in range(n):
            acc = acc + clog(levels[i] + lam)
    return complex(acc)


def argsum_shifted(double complex[::1] levels, double complex lam):
    """Sum of principal arguments of (levels[i] + lam)."""
    cdef Py_ssize_t i, n = levels.shape[0]
    cdef double acc = 0
    with nogil:
        for i in range(n):
            acc += carg(levels[i] + lam)
    return float(acc)


def invert_ladder(double[::1] alphas, double complex[::1] coeffs,
                  double[::1] targets, guess, double tol=5e-16,
                  int max_iter=80):
    """Solve sum_j coeffs[j]*E**alphas[j] = targets element-wise by Newton."""
    out = np.array(guess, dtype=np.complex128, copy=True)
    cdef double complex[::1] E = out
    cdef Py_ssize_t i, j, it
    cdef Py_ssize_t n = targets.shape[0], m = alphas.shape[0]
    cdef double complex S, dS, Ea, step
    with nogil:
        for i in range(n):
            for it in range(max_iter):
                S = 0
                dS = 0
                for j in range(m):
                    Ea = cpow(E[i], alphas[j])
                    S = S + coeffs[j] * Ea
                    dS = dS + alphas[j] * coeffs[j] * Ea / E[i]
                step = (S - targets[i]) / dS
                E[i] = E[i] - step
                if cabs(step) < tol * cabs(E[i]):
                    break
    return out
