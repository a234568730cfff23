"""Spectral determinants from spectra via zeta-regularized limit formulas.

A determinant log D(lambda) is evaluated from a finite stored window of
levels plus an asymptotic tail model: the window contributes exact log
factors, the modeled tail is summed with Euler-Maclaurin corrections, and
the divergence is removed by the counterterm ladder evaluated in the
shifted variable E_K + lambda (whose expansion reproduces the printed
counterterm and keeps the degenerate N = 2 family convergent).  Closed
forms for the harmonic and the supersymmetric families live here as well,
as do spectral zeta sums and the canonical large-lambda form check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gamma as _gamma
from scipy.special import rgamma as _rgamma

from . import _kernels
from .classical import AsymptoticModel
from .errors import ConvergenceDomainError, PoleError, TruncationError
from .potential import PolynomialPotential

__all__ = [
    "EVEN",
    "ODD",
    "SpectrumApproximation",
    "LogDetValue",
    "DeterminantEvaluator",
    "log_det",
    "arg_det_homogeneous",
    "fit_tail_extras",
    "harmonic_spectrum",
    "harmonic_det",
    "susy_det",
    "susy_fullline_det",
    "susy_reflection_product",
    "zeta_sum",
    "stirling_check",
    "StirlingReport",
]

EVEN = 0  # Neumann half-line sector, full-line indices k = 0, 2, 4, ...
ODD = 1   # Dirichlet sector, k = 1, 3, 5, ...

_POLE_TOL = 1e-11

# central finite-difference rows on nine integer offsets (M-4 .. M+4)
_D1 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0.0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
_D3 = np.array([-7 / 240, 3 / 10, -169 / 120, 61 / 30, 0.0, -61 / 30, 169 / 120, -3 / 10, 7 / 240])
_D5 = np.array([0.0, -1 / 2, 2, -5 / 2, 0.0, 5 / 2, -2, 1 / 2, 0.0])


@dataclass(frozen=True)
class SpectrumApproximation:
    """Finite window of one parity sector of one conjugate problem.

    levels[i] is the level with full-line index k = 2*i + parity; the tail
    model predicts everything beyond the window.  `lam_phase` records the
    spectral-parameter phase of the conjugate problem (1 for the base one).
    """

    parity: int
    levels: np.ndarray
    tail: AsymptoticModel
    conj_index: int = 0
    lam_phase: complex = 1.0

    def __post_init__(self):
        lv = np.ascontiguousarray(np.asarray(self.levels, dtype=complex))
        object.__setattr__(self, "levels", lv)
        if self.parity not in (EVEN, ODD):
            raise ValueError("parity must be EVEN (0) or ODD (1)")
        if lv.size < 1:
            raise ValueError("need at least one stored level")
        if self.conj_index == 0 and np.allclose(lv.imag, 0.0, atol=1e-9):
            if np.any(np.diff(lv.real) <= 0):
                raise ValueError("base-sector levels must be strictly increasing")

    @property
    def size(self) -> int:
        return int(self.levels.size)

    @property
    def k_indices(self) -> np.ndarray:
        return 2 * np.arange(self.size) + self.parity

    def validate_tail(self, rel_tol: float = 0.10) -> None:
        """Check the tail model against the last stored level."""
        k_last = float(self.k_indices[-1])
        pred = complex(self.tail.invert(np.array([k_last + 0.5]))[0])
        got = complex(self.levels[-1])
        if abs(pred - got) > rel_tol * abs(got):
            raise TruncationError(
                f"tail model predicts {pred:.6g} at index {int(k_last)}, stored {got:.6g}"
            )


@dataclass
class LogDetValue:
    """Branch-resolved logarithm of a spectral determinant."""

    value: complex
    winding: int = 0
    branch_note: str = "principal per-factor logarithms"

    def __complex__(self):
        return complex(self.value)


@lru_cache(maxsize=4096)
def _binom_row(alpha: float, tmax: int) -> np.ndarray:
    """Generalized binomial coefficients C(alpha, t) for t = 0..tmax."""
    out = np.empty(tmax + 1)
    out[0] = 1.0
    for t in range(tmax):
        out[t + 1] = out[t] * (alpha - t) / (t + 1)
    out.setflags(write=False)
    return out


class DeterminantEvaluator:
    """Frozen, reusable structure-equation evaluator for one spectrum.

    Model levels, the stencil window, and the counterterm data depend only
    on the spectrum, so sweeps over many lambda values share them.
    """

    def __init__(self, spectrum: SpectrumApproximation, k_ext: int = 8):
        if k_ext < 2:
            raise ValueError("k_ext must be >= 2")
        self.spectrum = spectrum
        tail = spectrum.tail
        ks = spectrum.size
        self.m_index = k_ext * ks
        n_all = np.arange(ks, self.m_index + 5)
        targets = (2 * n_all + spectrum.parity) + 0.5
        model_levels = tail.invert(targets)
        self.all_levels = np.ascontiguousarray(
            np.concatenate([spectrum.levels, model_levels[: self.m_index - ks]])
        )
        self.stencil = model_levels[-9:]
        self.alphas, self.coeffs = tail.terms()
        lead = np.abs(self.all_levels[-1])
        self._scale = float(lead)

    # -- counterterm in the shifted variable --------------------------------
    def _counterterm(self, lam: complex, w_m: complex) -> complex:
        ratio = abs(lam) / abs(w_m)
        if ratio > 0.75:
            raise TruncationError(
                f"|lambda| = {abs(lam):.3g} too close to the tail edge |E_M| = {abs(w_m):.3g}; "
                "increase k_ext"
            )
        tmax = 8 if lam == 0 else max(8, min(400, int(46.0 / max(1e-12, -math.log(max(ratio, 1e-12))))))
        logw = np.log(w_m)
        total = 0.0 + 0.0j
        for a, b in zip(self.alphas, self.coeffs):
            ab = 0.5 * a * b
            if ab == 0:
                continue
            row = _binom_row(float(a - 1.0), tmax)
            t = np.arange(tmax + 1)
            c = a - t
            keep = np.abs(c) > 1e-9
            lam_pow = np.power(-lam, t[keep]) if lam != 0 else (t[keep] == 0).astype(complex)
            total += ab * np.sum(row[keep] * lam_pow * w_m ** c[keep] / c[keep]
                                 * (logw - 1.0 / c[keep]))
        return total

    # -- the limit formula ---------------------------------------------------
    def log_det(self, lam: complex) -> LogDetValue:
        lam = complex(lam)
        dist = np.min(np.abs(self.all_levels + lam))
        if dist < _POLE_TOL * (1.0 + abs(lam)):
            raise PoleError(f"lambda within {dist:.2e} of a determinant zero")
        val = _kernels.logsum_shifted(self.all_levels, lam)
        w = self.stencil + lam
        phi = np.log(w)
        val += 0.5 * phi[4]
        val += -np.dot(_D1, phi) / 12.0 + np.dot(_D3, phi) / 720.0 - np.dot(_D5, phi) / 30240.0
        val -= self._counterterm(lam, w[4])
        return LogDetValue(value=complex(val))

    def arg(self, lam: complex) -> float:
        return self.log_det(lam).value.imag

    def d_log_det(self, lam: complex) -> complex:
        """Exact lambda-derivative of log_det (for Newton solves)."""
        lam = complex(lam)
        val = complex(np.sum(1.0 / (self.all_levels + lam)))
        w = self.stencil + lam
        inv = 1.0 / w
        val += 0.5 * inv[4]
        val += -np.dot(_D1, inv) / 12.0 + np.dot(_D3, inv) / 720.0 - np.dot(_D5, inv) / 30240.0
        w_m = w[4]
        ratio = abs(lam) / abs(w_m)
        if ratio > 0.75:
            raise TruncationError("tail edge too close to |lambda|; increase k_ext")
        tmax = 8 if lam == 0 else max(8, min(400, int(46.0 / max(1e-12, -math.log(max(ratio, 1e-12))))))
        logw = np.log(w_m)
        total = 0.0 + 0.0j
        for a, b in zip(self.alphas, self.coeffs):
            ab = 0.5 * a * b
            if ab == 0:
                continue
            row = _binom_row(float(a - 1.0), tmax)
            t = np.arange(tmax + 1)
            c = a - t
            keep = np.abs(c) > 1e-9
            tk, ck, rk = t[keep], c[keep], row[keep]
            if lam == 0:
                lam_pow = (tk == 0).astype(complex)
                dlam_pow = (tk == 1).astype(complex) * (-1.0)
            else:
                lam_pow = np.power(-lam, tk)
                dlam_pow = np.where(tk > 0, -tk * np.power(-lam, np.maximum(tk - 1, 0)), 0.0)
            total += ab * np.sum(
                rk * (dlam_pow * w_m**ck / ck * (logw - 1.0 / ck)
                      + lam_pow * w_m ** (ck - 1) * logw)
            )
        return val - total

    # -- spectral zeta sum ----------------------------------------------------
    def zeta(self, s: complex, lam: complex) -> complex:
        s = complex(s)
        lam = complex(lam)
        total = complex(np.sum((self.all_levels + lam) ** (-s)))
        w = self.stencil + lam
        f = w ** (-s)
        total += 0.5 * f[4]
        total += -np.dot(_D1, f) / 12.0 + np.dot(_D3, f) / 720.0 - np.dot(_D5, f) / 30240.0
        # analytically continued integral of the model tail
        w_m = w[4]
        ratio = abs(lam) / abs(w_m)
        if ratio > 0.75:
            raise TruncationError("tail edge too close to |lambda|; increase k_ext")
        tmax = 8 if lam == 0 else max(8, min(400, int(46.0 / max(1e-12, -math.log(max(ratio, 1e-12))))))
        for a, b in zip(self.alphas, self.coeffs):
            ab = 0.5 * a * b
            if ab == 0:
                continue
            row = _binom_row(float(a - 1.0), tmax)
            t = np.arange(tmax + 1)
            c = a - t
            lam_pow = np.power(-lam, t) if lam != 0 else (t == 0).astype(complex)
            total += ab * np.sum(row * lam_pow * w_m ** (c - s) / (s - c))
        return total


def log_det(spectrum: SpectrumApproximation, lam: complex, k_ext: int = 8) -> LogDetValue:
    """Structure-equation value of log D(lambda) for one spectrum.

    One-shot convenience; reuse a DeterminantEvaluator for sweeps.
    """
    return DeterminantEvaluator(spectrum, k_ext=k_ext).log_det(lam)


def arg_det_homogeneous(spectrum: SpectrumApproximation, E: float, k_ext: int = 8) -> float:
    """arg D(-e^{-i phi} E) for a homogeneous potential, E > 0.

    Strictly increasing in E; each stored factor contributes
    arg(E_k - e^{-i phi} E) with positive derivative.
    """
    if E <= 0:
        raise ValueError("E must be positive")
    n = spectrum.tail.degree
    if n <= 2:
        raise ValueError("homogeneous quantization path needs degree > 2")
    phi = 4.0 * math.pi / (n + 2)
    lam = -np.exp(-1j * phi) * E
    return DeterminantEvaluator(spectrum, k_ext=k_ext).log_det(lam).value.imag


def fit_tail_extras(
    levels: np.ndarray,
    parity: int,
    model: AsymptoticModel,
    n_extras: int = 2,
) -> AsymptoticModel:
    """Refit sub-semiclassical tail corrections from a stored window.

    The correction exponents mu - r*(N+2)/N, r = 1..n_extras, carry the
    leading quantum corrections to the counting function; coefficients are
    fitted to the residual k + 1/2 - counting(E_k) on the upper half of the
    window.  Extras previously attached to the model are replaced.
    """
    levels = np.asarray(levels, dtype=complex)
    base = model.with_extras((), ())
    ks = 2 * np.arange(levels.size) + parity
    resid = (ks + 0.5) - base.counting(levels)
    exps = [model.mu - r * (model.degree + 2.0) / model.degree for r in range(1, n_extras + 1)]
    half = levels.size // 2
    cols = np.vstack([levels**a for a in exps]).T
    fit, *_ = np.linalg.lstsq(cols[half:], resid[half:], rcond=None)
    return base.with_extras(exps, fit)


def spectrum_with_refined_tail(
    parity: int,
    levels: np.ndarray,
    model: AsymptoticModel,
    conj_index: int = 0,
    lam_phase: complex = 1.0,
    n_extras: int = 2,
) -> SpectrumApproximation:
    """Bundle levels with a runtime-refined tail model."""
    refined = fit_tail_extras(levels, parity, model, n_extras=n_extras)
    return SpectrumApproximation(parity=parity, levels=np.asarray(levels, complex),
                                 tail=refined, conj_index=conj_index, lam_phase=lam_phase)


# ---------------------------------------------------------------------------
# closed forms: harmonic and supersymmetric families
# ---------------------------------------------------------------------------

def harmonic_spectrum(parity: int, K: int = 48) -> SpectrumApproximation:
    """Exact harmonic sector spectrum {2k+1} with its one-term growth model."""
    ks = 2 * np.arange(K) + parity
    model = AsymptoticModel(degree=2, mu=1.0, exponents=(1.0,), coefficients=(0.5 + 0j,))
    return SpectrumApproximation(parity=parity, levels=(2 * ks + 1).astype(complex), tail=model)


def harmonic_det(parity: int, lam: complex) -> complex:
    """Closed-form harmonic determinants.

    D+ = 2^(-lam/2) * 2*sqrt(pi) / Gamma((1+lam)/4), D- with (3+lam)/4 and a
    single sqrt(pi).  Gamma poles are determinant zeros and return 0.
    """
    lam = complex(lam)
    pref = np.exp(-lam / 2.0 * math.log(2.0))
    if parity == EVEN:
        return complex(pref * 2.0 * math.sqrt(math.pi) * _rgamma((1.0 + lam) / 4.0))
    return complex(pref * math.sqrt(math.pi) * _rgamma((3.0 + lam) / 4.0))


def susy_det(N: int, parity: int, lam_g: complex) -> complex:
    """Half-line determinants of the exactly solvable generalized family.

    The potential is q^N + LAM * q^(N/2-1) at zero energy, nu = 1/(N+2).
    """
    if N % 2 != 0 or N < 2:
        raise ValueError("the solvable generalized family needs even N >= 2")
    nu = 1.0 / (N + 2)
    lam_g = complex(lam_g)
    two = np.exp(-lam_g / N * math.log(2.0))
    if parity == EVEN:
        return complex(
            -two * (4 * nu) ** 0.5 * np.exp((nu * (lam_g + 1)) * math.log(4 * nu))
            * _gamma(-2 * nu) * _rgamma(nu * (lam_g - 1) + 0.5)
        )
    return complex(
        two * (4 * nu) ** 0.5 * np.exp((nu * (lam_g - 1)) * math.log(4 * nu))
        * _gamma(2 * nu) * _rgamma(nu * (lam_g + 1) + 0.5)
    )


def susy_fullline_det(N: int, lam_g: complex) -> complex:
    """Whole-line determinant of the generalized family.

    Product of the half-line pair when N = 2 (mod 4) (even potential);
    cos(pi nu LAM)/sin(pi nu) when N = 0 (mod 4).
    """
    if N % 2 != 0 or N < 2:
        raise ValueError("need even N >= 2")
    nu = 1.0 / (N + 2)
    if N % 4 == 0:
        return complex(np.cos(math.pi * nu * complex(lam_g)) / math.sin(math.pi * nu))
    return susy_det(N, EVEN, lam_g) * susy_det(N, ODD, lam_g)


def susy_reflection_product(N: int, lam_g: complex) -> complex:
    """Closed form of D_N^+(LAM) * D_N^-(-LAM) by Gamma reflection.

    Equals 2 cos(pi nu (LAM - 1))/sin(2 pi nu); at N = 2 this is the
    degenerate harmonic product relation.
    """
    nu = 1.0 / (N + 2)
    return complex(2.0 * np.cos(math.pi * nu * (complex(lam_g) - 1.0)) / math.sin(2 * math.pi * nu))


# ---------------------------------------------------------------------------
# spectral zeta and the canonical large-lambda form
# ---------------------------------------------------------------------------

def zeta_sum(
    spectrum: SpectrumApproximation,
    s: complex,
    lam: complex = 0.0,
    k_ext: int = 8,
    margin: float = 0.1,
) -> complex:
    """sum over the sector of (E_k + lam)^(-s), tail-accelerated.

    Restricted to the convergence half-plane Re s > mu + margin.
    """
    if complex(s).real <= spectrum.tail.mu + margin:
        raise ConvergenceDomainError(
            f"Re s = {complex(s).real} not above order + margin = "
            f"{spectrum.tail.mu + margin}"
        )
    return DeterminantEvaluator(spectrum, k_ext=k_ext).zeta(s, lam)


@dataclass
class StirlingReport:
    """Fit of log D against the canonical large-lambda basis."""

    coefficients: dict = field(default_factory=dict)
    constant_coefficient: float = 0.0
    integer_power_coefficient: float = 0.0
    fit_residual: float = 0.0
    condition: float = 0.0

    @property
    def max_banned(self) -> float:
        return max(abs(self.constant_coefficient), abs(self.integer_power_coefficient))


def stirling_check(
    spectrum: SpectrumApproximation,
    lam_grid,
    k_ext: int = 8,
    values=None,
) -> StirlingReport:
    """Fit log_det on a large-lambda grid against the canonical basis.

    Basis: lam*(log lam - 1), log lam, and the non-integer ladder powers;
    a constant column and a bare lam column are deliberately added and must
    come back statistically zero.  `values` can inject precomputed log-det
    values (used by the detector-sensitivity test).
    """
    lam_grid = np.asarray(lam_grid, dtype=float)
    if np.any(lam_grid <= 0) or lam_grid.size < 8:
        raise ValueError("need a positive grid with at least 8 points")
    if values is None:
        needed = float(np.max(lam_grid)) * 2.6
        kx = k_ext
        ev = DeterminantEvaluator(spectrum, k_ext=kx)
        while abs(ev.stencil[4]) < needed and kx < 4096:
            kx *= 2
            ev = DeterminantEvaluator(spectrum, k_ext=kx)
        vals = np.array([ev.log_det(l).value.real for l in lam_grid])
    else:
        vals = np.asarray(values, dtype=float)

    mu = spectrum.tail.mu
    n = spectrum.tail.degree
    labels = ["lam*(log lam - 1)", "log lam", "const", "lam"]
    cols = [lam_grid * (np.log(lam_grid) - 1.0), np.log(lam_grid),
            np.ones_like(lam_grid), lam_grid]
    j = 0
    added = 0
    while added < 6:
        a = mu - j / n
        j += 1
        if a > -1e-9 and abs(a - round(a)) < 1e-9:
            continue  # powers lam^n, n in {0, 1, 2, ...} are banned from the basis
        labels.append(f"lam^{a:g}")
        cols.append(lam_grid**a)
        added += 1

    A = np.vstack(cols).T
    norm = np.linalg.norm(A, axis=0)
    sv = np.linalg.svd(A / norm, compute_uv=False)
    cond = float(sv[0] / sv[-1])
    if cond > 1e12:
        raise ConvergenceDomainError(f"canonical-form fit ill conditioned ({cond:.2e}); enlarge grid")
    fit, *_ = np.linalg.lstsq(A / norm, vals, rcond=None)
    fit = fit / norm
    resid = float(np.max(np.abs(A @ fit - vals)))
    coeffs = dict(zip(labels, (float(c) for c in fit)))
    return StirlingReport(
        coefficients=coeffs,
        constant_coefficient=coeffs["const"],
        integer_power_coefficient=coeffs["lam"],
        fit_residual=resid,
        condition=cond,
    )
