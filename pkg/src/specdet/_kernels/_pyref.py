"""NumPy reference implementations of the hot kernels.

These are the import-time fallback when the compiled extension is not
available, and the ground truth the extension is tested against.
"""

import numpy as np

__all__ = ["logsum_shifted", "argsum_shifted", "invert_ladder", "IMPL"]

IMPL = "numpy"


def logsum_shifted(levels, lam):
    """Sum of principal logarithms of (levels[i] + lam)."""
    return complex(np.sum(np.log(np.asarray(levels) + lam)))


def argsum_shifted(levels, lam):
    """Sum of principal arguments of (levels[i] + lam)."""
    return float(np.sum(np.angle(np.asarray(levels) + lam)))


def invert_ladder(alphas, coeffs, targets, guess, tol=5e-16, max_iter=80):
    """Solve sum_j coeffs[j]*E**alphas[j] = targets element-wise by Newton.

    `guess` must be within the basin of the intended (principal) root; the
    callers seed it from the leading-term inversion.
    """
    alphas = np.asarray(alphas, dtype=np.float64)
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    t = np.asarray(targets, dtype=np.float64)
    E = np.array(guess, dtype=np.complex128, copy=True)
    for _ in range(max_iter):
        S = np.zeros_like(E)
        dS = np.zeros_like(E)
        for a, b in zip(alphas, coeffs):
            Ea = E**a
            S += b * Ea
            dS += a * b * Ea / E
        step = (S - t) / dS
        E -= step
        if np.max(np.abs(step) / np.abs(E)) < tol:
            break
    return E
