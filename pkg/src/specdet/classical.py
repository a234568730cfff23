"""Classical layer: action function, eigenvalue-growth ladder, regularized
improper action integrals, and classical determinants.

The action S(E) is the phase-space area (over 2*pi) enclosed by
p**2 + V(|q|) = E.  Its large-E expansion on the exponent ladder
mu - j/N supplies both the quantization counterterms (positive exponents)
and the tail-prediction terms (non-positive exponents).  The improper
action integral is the zeta-regularized value of int_0^inf (V+lam)^(1/2) dq,
with the finite-part convention at the log-critical order plus the
normalization anomaly, calibrated so the known closed forms hold exactly.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad
from scipy.optimize import brentq

from . import _kernels
from .errors import (
    BranchPointError,
    IllConditionedFitError,
    TruncationError,
    UnsupportedGeometryError,
)
from .potential import PolynomialPotential, anomaly_constant, beta_expansion, beta_minus1

__all__ = [
    "AsymptoticModel",
    "RegularizedAction",
    "action",
    "asymptotic_model",
    "improper_action",
    "classical_determinant",
    "large_v_ratio",
    "homogeneous_action_coefficient",
]

_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(n):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = leggauss(n)
    return _GL_CACHE[n]


def _turning_point(pot: PolynomialPotential, E: float) -> float:
    """Largest positive root of V(q) = E; errors on multi-interval geometry."""
    if E <= 0:
        raise UnsupportedGeometryError("need E > 0 so the origin is classically allowed")
    scale = max([1.0] + [abs(v) ** (1.0 / j) for j, v in enumerate(pot.coefficients, 1) if abs(v) > 0])
    hi = 2.0 * scale + (2.0 * E) ** (1.0 / pot.degree) + 1.0
    while pot(hi).real < E:
        hi *= 1.5
    grid = np.geomspace(1e-9, hi, 4000)
    vals = np.real(pot(grid)) - E
    signs = np.sign(vals)
    crossings = np.nonzero(np.diff(signs) != 0)[0]
    if len(crossings) != 1:
        raise UnsupportedGeometryError(
            f"expected a single classical interval at E={E}, found {len(crossings)} crossings"
        )
    i = crossings[0]
    return brentq(lambda q: pot(q).real - E, grid[i], grid[i + 1], xtol=1e-300, rtol=8.9e-16)


def action(pot: PolynomialPotential, E: float) -> float:
    """Classical action S(E): enclosed phase-space area / (2*pi).

    Equals (2/pi) * int_0^qt sqrt(E - V(q)) dq for the symmetric well built
    from V(|q|).  The turning-point square root is absorbed by the q = qt*sin
    substitution, so fixed-order Gauss-Legendre converges spectrally; orders
    are doubled until two evaluations agree to 1e-13 relative.
    """
    if not pot.is_real:
        raise UnsupportedGeometryError("classical action needs real coefficients")
    qt = _turning_point(pot, E)

    def eval_order(n):
        x, w = _gauss(n)
        th = (x + 1.0) * (math.pi / 4.0)
        q = qt * np.sin(th)
        f = np.sqrt(np.maximum(E - np.real(pot(q)), 0.0)) * qt * np.cos(th)
        return (2.0 / math.pi) * (math.pi / 4.0) * float(w @ f)

    prev = eval_order(80)
    for n in (160, 320, 640):
        cur = eval_order(n)
        if abs(cur - prev) <= 1e-13 * abs(cur):
            return cur
        prev = cur
    return prev


def homogeneous_action_coefficient(N: int) -> float:
    """Closed form of the leading action coefficient for the pure q^N well."""
    mu = 0.5 + 1.0 / N
    return (2.0 / math.pi) * math.gamma(1.0 / N) * math.gamma(1.5) / (N * math.gamma(1.0 / N + 1.5))


@dataclass(frozen=True)
class AsymptoticModel:
    """Eigenvalue-growth model sum_a b_a E^a with S(E_k) ~ k + 1/2.

    `exponents`/`coefficients` hold the positive ladder slots (the
    counterterm-grade data), `sub_*` the fitted non-positive classical slots
    used for tail prediction, and `extra_*` optional per-spectrum refinements
    fitted at run time.  Rotated copies (complex coefficients) serve the
    conjugate problems.
    """

    degree: int
    mu: float
    exponents: tuple[float, ...]
    coefficients: tuple[complex, ...]
    sub_exponents: tuple[float, ...] = ()
    sub_coefficients: tuple[complex, ...] = ()
    extra_exponents: tuple[float, ...] = ()
    extra_coefficients: tuple[complex, ...] = ()

    def __post_init__(self):
        ex = np.asarray(self.exponents)
        if len(ex) == 0 or np.any(np.diff(ex) >= 0) or np.any(ex <= 0):
            raise ValueError("exponents must be strictly decreasing and positive")

    # -- term access -------------------------------------------------------
    def terms(self, include_extras: bool = True):
        a = self.exponents + self.sub_exponents
        c = self.coefficients + self.sub_coefficients
        if include_extras:
            a = a + self.extra_exponents
            c = c + self.extra_coefficients
        return np.asarray(a, dtype=float), np.asarray(c, dtype=complex)

    @property
    def is_real(self) -> bool:
        _, c = self.terms()
        return bool(np.allclose(c.imag, 0.0, atol=1e-12))

    # -- counting function and inversion ------------------------------------
    def counting(self, E, positive_only: bool = False):
        if positive_only:
            a, c = np.asarray(self.exponents), np.asarray(self.coefficients, dtype=complex)
        else:
            a, c = self.terms()
        E = np.asarray(E, dtype=complex)
        return sum(b * E**al for al, b in zip(a, c))

    def counting_deriv(self, E):
        a, c = self.terms()
        E = np.asarray(E, dtype=complex)
        return sum(al * b * E ** (al - 1) for al, b in zip(a, c))

    def invert(self, targets, positive_only: bool = False):
        """Levels E with counting(E) = targets (vector Newton via kernels)."""
        t = np.asarray(targets, dtype=float)
        b0 = complex(self.coefficients[0]).real
        guess = np.maximum((t / b0), 1e-6) ** (1.0 / self.exponents[0]) + 0j
        if positive_only:
            a = np.asarray(self.exponents, dtype=float)
            c = np.asarray(self.coefficients, dtype=complex)
        else:
            a, c = self.terms()
        return _kernels.invert_ladder(np.ascontiguousarray(a), np.ascontiguousarray(c),
                                      np.ascontiguousarray(t), guess)

    def semiclassical_levels(self, k_indices):
        """Solve sum_(a>0) b_a E^a = k + 1/2 for each index."""
        return self.invert(np.asarray(k_indices, dtype=float) + 0.5, positive_only=True)

    # -- sector rotation -----------------------------------------------------
    def rotated(self, ell: int, phi: float) -> "AsymptoticModel":
        """Model of the ell-th conjugate problem.

        Each ladder slot of weight j = N*(mu - a) picks up exp(+i*j*ell*phi/2),
        matching the coefficient rotation of the conjugate potential.  Runtime
        extras are dropped; they are refitted per sector.
        """
        def rot(a_list, c_list):
            out = []
            for a, b in zip(a_list, c_list):
                j = round(self.degree * (self.mu - a))
                out.append(b * np.exp(1j * j * ell * phi / 2.0))
            return tuple(out)

        return replace(
            self,
            coefficients=rot(self.exponents, self.coefficients),
            sub_coefficients=rot(self.sub_exponents, self.sub_coefficients),
            extra_exponents=(),
            extra_coefficients=(),
        )

    def with_extras(self, exponents, coefficients) -> "AsymptoticModel":
        return replace(self, extra_exponents=tuple(float(a) for a in exponents),
                       extra_coefficients=tuple(complex(c) for c in coefficients))


def asymptotic_model(
    pot: PolynomialPotential,
    n_sub: int = 4,
    grid_points: int = 48,
    grid_span: float = 1e4,
    seed: int | None = 0,
) -> AsymptoticModel:
    """Extract the growth ladder of S(E) by least squares on a geometric grid.

    The exponent ladder {mu - j/N} is known; only the coefficients are fitted.
    For N > 2 every positive-exponent term comes from the classical action, so
    quadrature values of S(E) on a large-E grid determine them; `n_sub`
    additional non-positive slots are kept for tail prediction.  Parity-
    forbidden slots (odd weight j for an even polynomial) are excluded.
    """
    n = pot.degree
    if n < 2:
        raise UnsupportedGeometryError("asymptotic model needs degree >= 2")
    if not pot.is_real:
        raise UnsupportedGeometryError("asymptotic model fits need real coefficients")
    mu = pot.order

    js: list[int] = []
    j = 0
    subs_taken = 0
    while True:
        alpha = mu - j / n
        if pot.is_even and j % 2 == 1:
            j += 1
            continue
        if alpha > 0:
            js.append(j)
        elif subs_taken < n_sub:
            js.append(j)
            subs_taken += 1
        else:
            break
        j += 1
    alphas = np.array([mu - jj / n for jj in js])

    scale = max([1.0] + [abs(v) ** (n / j) for j, v in enumerate(pot.coefficients, 1) if abs(v) > 0])
    grid = np.geomspace(1e3 * scale, 1e3 * grid_span * scale, grid_points)
    if seed is not None:
        rng = np.random.default_rng(seed)
        grid = grid * (1.0 + 1e-3 * rng.uniform(-1.0, 1.0, size=grid.size))
    svals = np.array([action(pot, E) for E in grid])

    A = np.vstack([grid**a for a in alphas]).T
    col = np.linalg.norm(A, axis=0)
    A = A / col
    sv = np.linalg.svd(A, compute_uv=False)
    cond = sv[0] / sv[-1]
    if cond > 1e10:
        raise IllConditionedFitError(
            f"ladder fit condition number {cond:.2e} (grid [{grid[0]:.3g}, {grid[-1]:.3g}], "
            f"{grid_points} points); enlarge or shift the grid"
        )
    coeffs, *_ = np.linalg.lstsq(A, svals, rcond=None)
    coeffs = coeffs / col

    resid = svals - np.vstack([grid**a for a in alphas]).T @ coeffs
    rel_resid = float(np.max(np.abs(resid) / svals))

    # clamp numerically-zero slots (homogeneity / parity zeros)
    lead = abs(coeffs[0])
    ref = lead * grid[0] ** (mu - alphas)
    coeffs = np.where(np.abs(coeffs) < 1e-11 * ref, 0.0, coeffs)

    pos = alphas > 0
    model = AsymptoticModel(
        degree=n,
        mu=mu,
        exponents=tuple(alphas[pos]),
        coefficients=tuple(coeffs[pos].astype(complex)),
        sub_exponents=tuple(alphas[~pos]),
        sub_coefficients=tuple(coeffs[~pos].astype(complex)),
    )
    counting = np.real(model.counting(grid))
    if np.any(np.diff(counting) <= 0):
        raise IllConditionedFitError("fitted counting function is not increasing on the grid")
    if rel_resid > 1e-6:
        raise IllConditionedFitError(
            f"ladder fit residual {rel_resid:.2e} too large; grid not asymptotic"
        )
    return model


# ---------------------------------------------------------------------------
# regularized improper action
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegularizedAction:
    """Value of the regularized improper action and how it was obtained."""

    value: complex
    anomalous: bool
    q_split: float = field(default=0.0, compare=False)
    remainder_estimate: float = field(default=0.0, compare=False)


def _sqrt_integral(pot: PolynomialPotential, lam: complex, q0: float) -> complex:
    """int_0^q0 (V + lam)^(1/2) dq with principal branch.

    For real lam the integrand may change sign once inside (0, q0); the
    turning point is passed to the quadrature as a known singular point.
    """
    pts = None
    lam_c = complex(lam)
    if abs(lam_c.imag) == 0.0 and lam_c.real < 0.0:
        try:
            qt = _turning_point(pot, -lam_c.real)
            if qt < q0:
                pts = [qt]
        except UnsupportedGeometryError:
            pass

    def fre(q):
        return np.sqrt(pot(complex(q)) + lam_c).real

    def fim(q):
        return np.sqrt(pot(complex(q)) + lam_c).imag

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        re = quad(fre, 0.0, q0, epsabs=1e-13, epsrel=1e-13, limit=400, points=pts)[0]
        im = quad(fim, 0.0, q0, epsabs=1e-13, epsrel=1e-13, limit=400, points=pts)[0]
    return complex(re, im)


def improper_action(
    pot: PolynomialPotential,
    lam: complex = 0.0,
    tol: float = 1e-12,
    depth: int = 32,
) -> RegularizedAction:
    """Zeta-regularized int_0^inf (V + lam)^(1/2) dq.

    Numeric integral on [0, q0] plus the analytically continued descending-
    power tail on [q0, inf): every order integrates to -beta*q0^(s+1)/(s+1),
    the critical order contributes its finite part, and the normalization
    anomaly is added exactly once here.
    """
    n = pot.degree
    exp = beta_expansion(pot, sigma_min=n / 2.0 - 2 * depth)
    scale = max(
        [1.0]
        + [abs(v) ** (1.0 / j) for j, v in enumerate(pot.coefficients, 1) if abs(v) > 0]
        + [abs(lam) ** (1.0 / n)]
    )
    q0 = 2.2 * scale

    def tail_remainder(q):
        direct = complex(np.sqrt(pot(complex(q)) + complex(lam)))
        return direct - exp.value_at(q, lam)

    sigma_min = min(exp.sigma_values())
    for _ in range(40):
        rem = abs(tail_remainder(q0)) * q0 / max(1.0, abs(sigma_min))
        if rem < 0.05 * tol:
            break
        q0 *= 1.3
        if q0 > 1e4:
            raise TruncationError(
                f"series split point exceeded cap (remainder {rem:.2e} at q0={q0:.3g})"
            )

    val = _sqrt_integral(pot, lam, q0)
    b0 = b1 = 0.0 + 0.0j
    anomalous = False
    for key, term in exp.terms.items():
        sigma = key / 2.0
        bval = term.value(lam)
        if key == -2:
            # critical order: finite part -b*log(q0); the s-dependence of the
            # coefficient itself belongs to the anomaly constant added below
            b0 = bval
            b1 = term.ds_value(lam)
            anomalous = abs(b0) > 0 or abs(b1) > 0
            val += -b0 * math.log(q0)
        else:
            val += -bval * q0 ** (sigma + 1.0) / (sigma + 1.0)
    val += anomaly_constant(pot, lam)

    # leftover beyond the truncated series, integrated directly
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rem_re = quad(lambda q: tail_remainder(q).real, q0, 3.0 * q0,
                      epsabs=0.02 * tol, epsrel=1e-10, limit=200)[0]
        rem_im = quad(lambda q: tail_remainder(q).imag, q0, 3.0 * q0,
                      epsabs=0.02 * tol, epsrel=1e-10, limit=200)[0]
    val += complex(rem_re, rem_im)
    rest = abs(tail_remainder(3.0 * q0)) * 3.0 * q0 / max(1.0, abs(sigma_min) - 1.0)
    if pot.is_real and abs(complex(lam).imag) == 0 and complex(lam).real >= 0:
        val = complex(val.real, 0.0)
    return RegularizedAction(value=val, anomalous=anomalous, q_split=q0,
                             remainder_estimate=rest)


def classical_determinant(pot: PolynomialPotential, lam: complex, parity: int) -> complex:
    """log of the classical determinant: +-(1/2) log sqrt(lam) + improper action."""
    if lam == 0:
        raise BranchPointError("classical prefactor has a branch point at lambda = 0")
    sign = 1.0 if parity == 0 else -1.0
    return sign * 0.25 * np.log(complex(lam)) + improper_action(pot, lam).value


def large_v_ratio(N: int, M: int, v: float, lam: complex) -> complex:
    """log of the classical determinant ratio for q^N + v*q^M vs v*q^M.

    The v*q^M reference is reduced to the monic q^M case by the substitution
    q -> v^(-1/M) q, which commutes with the regularization.
    """
    if not N > M >= 1:
        raise ValueError("need N > M >= 1")
    if v <= 0:
        raise ValueError("need v > 0")
    coeffs = [0.0] * (N - 1)
    coeffs[N - M - 1] = v
    full = improper_action(PolynomialPotential(N, tuple(coeffs)), lam).value
    mono = improper_action(PolynomialPotential(M, (0.0,) * (M - 1)), lam).value
    return full - v ** (-1.0 / M) * mono
