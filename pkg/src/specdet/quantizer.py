"""Self-consistent exact quantization engine.

The spectra of the rotated ("conjugate") family of problems are coupled:
each level solves a Bohr-Sommerfeld-like condition whose left side invokes
the neighbor sectors' determinants, themselves expressed from their spectra
by the structure equations.  Forward Jacobi iteration from semiclassically
correct trial spectra converges to the exact spectra; this module provides
the homogeneous single-sector fast path, the general multi-sector loop,
contraction diagnostics, and the Wronskian-identity residual used as an
independent exactness check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .classical import AsymptoticModel, asymptotic_model
from .determinant import (
    EVEN,
    ODD,
    DeterminantEvaluator,
    SpectrumApproximation,
    fit_tail_extras,
)
from .errors import ConvergenceError
from .potential import PolynomialPotential, beta_minus1, conjugation_data

__all__ = [
    "FixedPointConfig",
    "ConjugateSpectraState",
    "init_semiclassical",
    "iterate_homogeneous",
    "solve_homogeneous",
    "iterate_general",
    "solve_general",
    "contraction_factor",
    "wronskian_residual",
    "parity_offset",
]


@dataclass(frozen=True)
class FixedPointConfig:
    """Iteration controls for the fixed-point solvers."""

    K: int = 12
    k_ext: int = 8
    tol_fixed: float = 1e-12
    tol_root: float = 1e-14
    max_iter: int = 200
    relaxation: float = 1.0
    n_extras: int = 2        # runtime tail-correction slots
    refit_period: int = 8    # sweeps between tail refits (first sweeps always refit)
    accelerate: bool = True  # per-level Aitken extrapolation on slow linear modes

    def __post_init__(self):
        if self.K < 4:
            raise ValueError("K must be >= 4")
        if not self.tol_root < self.tol_fixed:
            raise ValueError("tol_root must be below tol_fixed")
        if not 0.0 < self.relaxation <= 1.0:
            raise ValueError("relaxation must lie in (0, 1]")


def parity_offset(N: int, parity: int) -> float:
    """The +-(N-2)/(2(N+2)) shift in the quantization right-hand side."""
    off = (N - 2.0) / (2.0 * (N + 2.0))
    return off if parity == EVEN else -off


def _condition_targets(N: int, parity: int, k_indices) -> np.ndarray:
    return math.pi * (np.asarray(k_indices) + 0.5 + parity_offset(N, parity))


def init_semiclassical(
    pot: PolynomialPotential,
    parity: int,
    K: int,
    model: AsymptoticModel | None = None,
) -> SpectrumApproximation:
    """Trial spectrum from the positive-exponent growth ladder.

    Each level solves sum_(a>0) b_a E^a = k + 1/2; that is all the accuracy
    the fixed-point iteration needs from its starting point.
    """
    if model is None:
        model = asymptotic_model(pot)
    ks = 2 * np.arange(K) + parity
    levels = model.semiclassical_levels(ks)
    if np.allclose(levels.imag, 0.0, atol=1e-10):
        levels = levels.real.astype(complex)
        if np.any(np.diff(levels.real) <= 0):
            raise ConvergenceError("semiclassical levels not increasing")
    return SpectrumApproximation(parity=parity, levels=levels, tail=model)


def _refit(spec: SpectrumApproximation, n_extras: int) -> SpectrumApproximation:
    refined = fit_tail_extras(spec.levels, spec.parity, spec.tail, n_extras=n_extras)
    return replace(spec, tail=refined)


def _solve_real_level(fun, e_old: float, tol_root: float) -> float:
    """Bracketed monotone root solve around the current level."""
    for lo, hi in ((e_old / 4.0, 4.0 * e_old), (e_old / 16.0, 16.0 * e_old)):
        flo, fhi = fun(lo), fun(hi)
        if flo == 0.0:
            return lo
        if flo * fhi < 0.0:
            return brentq(fun, lo, hi, xtol=tol_root, rtol=8.9e-16)
    raise ConvergenceError(
        "quantization condition not bracketed",
        diagnostics={"level": e_old, "bracket": (e_old / 16.0, 16.0 * e_old),
                     "f_lo": fun(e_old / 16.0), "f_hi": fun(16.0 * e_old)},
    )


def _solve_complex_level(fun, dfun, e_old: complex, tol_root: float,
                         f_tol: float, max_steps: int = 60) -> complex:
    """Damped Newton in the complex plane with the analytic derivative."""
    e = complex(e_old)
    f = fun(e)
    for _ in range(max_steps):
        if abs(f) < f_tol:
            return e
        df = dfun(e)
        if df == 0:
            raise ConvergenceError("vanishing derivative in complex level solve",
                                   diagnostics={"level": e})
        step = f / df
        e_new, f_new = e, f
        for _ in range(8):
            e_new = e - step
            f_new = fun(e_new)
            if abs(f_new) <= abs(f):
                break
            step /= 2.0
        e, f = e_new, f_new
        if abs(step) < tol_root * max(1.0, abs(e)):
            return e
    if abs(f) < 1e3 * f_tol:  # stalled at derivative-noise floor but converged in residual
        return e
    raise ConvergenceError("complex level solve did not converge",
                           diagnostics={"level": e, "residual": abs(f)})


# ---------------------------------------------------------------------------
# homogeneous path
# ---------------------------------------------------------------------------

def iterate_homogeneous(
    spec: SpectrumApproximation,
    cfg: FixedPointConfig,
    refit: bool = True,
) -> tuple[SpectrumApproximation, float]:
    """One Jacobi sweep of the single-pair quantization condition.

    Every level is re-solved against the frozen snapshot:
    2 arg D(-e^{-i phi} E) = pi*(k + 1/2 +- (N-2)/(2(N+2))).
    """
    n = spec.tail.degree
    if n <= 2:
        raise ConvergenceError("iteration applies to degree > 2")
    phi = 4.0 * math.pi / (n + 2)
    rot = -np.exp(-1j * phi)
    snap = _refit(spec, cfg.n_extras) if refit else spec
    ev = DeterminantEvaluator(snap, k_ext=cfg.k_ext)
    targets = _condition_targets(n, spec.parity, spec.k_indices)

    new = np.empty(spec.size, dtype=complex)
    for i, tgt in enumerate(targets):
        fun = lambda e: 2.0 * ev.log_det(rot * e).value.imag - tgt
        new[i] = _solve_real_level(fun, float(spec.levels[i].real), cfg.tol_root)
    if cfg.relaxation < 1.0:
        new = spec.levels + cfg.relaxation * (new - spec.levels)
    if np.any(np.diff(new.real) <= 0):
        raise ConvergenceError("level ordering lost during sweep",
                               diagnostics={"levels": new})
    sup = float(np.max(np.abs(new - spec.levels) / np.abs(new)))
    return replace(snap, levels=new), sup


def solve_homogeneous(
    pot: PolynomialPotential,
    parity: int,
    cfg: FixedPointConfig | None = None,
    init: SpectrumApproximation | None = None,
) -> tuple[SpectrumApproximation, dict]:
    """Iterate the homogeneous quantization condition to its fixed point."""
    if not pot.is_homogeneous or pot.degree <= 2:
        raise ConvergenceError("homogeneous solver needs a pure q^N potential, N > 2")
    cfg = cfg or FixedPointConfig()
    model = asymptotic_model(pot)
    spec = init if init is not None else init_semiclassical(pot, parity, cfg.K, model)
    history: list[float] = []
    prev = prev2 = None
    for it in range(cfg.max_iter):
        refit = (it < 4 or it % cfg.refit_period == 0) and \
            (not history or history[-1] > 1e3 * cfg.tol_fixed)
        spec_new, sup = iterate_homogeneous(spec, cfg, refit=refit)
        history.append(sup)
        if cfg.accelerate and prev is not None and prev2 is not None and it % 8 == 5:
            r = _dominant_ratio(prev - prev2, spec_new.levels - prev)
            spec_new = _aitken(spec_new, prev, prev2, ratio=r)
            prev = prev2 = None
        else:
            prev2, prev = prev, spec.levels
        spec = spec_new
        if sup < cfg.tol_fixed:
            diag = {"iterations": it + 1, "history": history,
                    "kappa": contraction_factor(history) if len(history) >= 5 else float("nan")}
            return spec, diag
    raise ConvergenceError(
        f"no fixed point within {cfg.max_iter} sweeps (last change {history[-1]:.2e})",
        diagnostics={"history": history,
                     "kappa": contraction_factor(history) if len(history) >= 5 else float("nan")},
    )


def _aitken(spec: SpectrumApproximation, prev_levels, prev2_levels,
            ratio: complex | None = None) -> SpectrumApproximation:
    """Geometric extrapolation of a slow linear mode.

    With `ratio` given (dominant-mode estimate of the whole coupled system)
    all levels are extrapolated coherently; otherwise per-level ratios are
    used.  Ordering violations cancel the extrapolation.
    """
    cur = spec.levels
    d1 = prev_levels - prev2_levels
    d2 = cur - prev_levels
    if ratio is None:
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(np.abs(d1) > 0, d2 / d1, 0.0)
        r = np.where(np.abs(r) < 0.97, r, 0.0)
    else:
        r = ratio
    ext = cur + d2 * r / (1.0 - r)
    if np.any(np.diff(ext.real) <= 0):  # keep ordering sacred
        return spec
    return replace(spec, levels=ext)


def _dominant_ratio(d1_all: np.ndarray, d2_all: np.ndarray) -> float | None:
    """Rayleigh estimate <d2, d1>/<d1, d1> of the slow-mode multiplier.

    For a conjugate-symmetric state the estimate is real; a large imaginary
    part signals an unstructured mode and cancels the extrapolation.
    """
    denom = np.vdot(d1_all, d1_all)
    if abs(denom) == 0:
        return None
    r = complex(np.vdot(d1_all, d2_all) / denom)
    if abs(r) >= 0.97 or abs(r.imag) > 0.05 * max(abs(r), 1e-12):
        return None
    return r.real


def contraction_factor(history, window: int = 6) -> float:
    """Geometric-mean ratio of successive sup-norm changes (final window)."""
    h = [float(x) for x in history if x > 0]
    if len(h) < 4:
        raise ValueError("need at least 4 recorded sup-norm changes")
    w = min(window, len(h))
    tail = h[-w:]
    return float((tail[-1] / tail[0]) ** (1.0 / (w - 1)))


# ---------------------------------------------------------------------------
# general multi-sector path
# ---------------------------------------------------------------------------

@dataclass
class ConjugateSpectraState:
    """All conjugate sectors of one potential plus the iteration history."""

    potential: PolynomialPotential
    sectors: dict = field(default_factory=dict)  # (ell, parity) -> SpectrumApproximation
    history: list = field(default_factory=list)

    @property
    def count(self) -> int:
        return conjugation_data(self.potential).count

    @property
    def phi(self) -> float:
        return conjugation_data(self.potential).phi

    def sector(self, ell: int, parity: int) -> SpectrumApproximation:
        return self.sectors[(ell % self.count, parity)]

    def check_symmetry(self, tol: float = 1e-8) -> None:
        """Conjugation symmetry: sectors ell and L-ell are complex conjugate."""
        L = self.count
        for ell in range(1, L // 2 + 1):
            for p in (EVEN, ODD):
                a = self.sectors[(ell, p)].levels
                b = self.sectors[((L - ell) % L, p)].levels
                if not np.allclose(np.conj(a), b, rtol=tol, atol=tol):
                    raise ConvergenceError(f"conjugation symmetry broken at sector {ell}")

    @classmethod
    def from_homogeneous(cls, pot: PolynomialPotential, spec_even: SpectrumApproximation,
                         spec_odd: SpectrumApproximation) -> "ConjugateSpectraState":
        """All conjugate spectra of a pure power potential coincide."""
        state = cls(potential=pot)
        L = conjugation_data(pot).count
        for ell in range(L):
            for p, s in ((EVEN, spec_even), (ODD, spec_odd)):
                state.sectors[(ell, p)] = replace(s, conj_index=ell,
                                                  lam_phase=np.exp(-1j * ell * state.phi))
        return state


def _init_state(pot: PolynomialPotential, cfg: FixedPointConfig,
                model: AsymptoticModel) -> ConjugateSpectraState:
    state = ConjugateSpectraState(potential=pot)
    L = conjugation_data(pot).count
    phi = state.phi
    for ell in range(L):
        m = model.rotated(ell, phi)
        for p in (EVEN, ODD):
            ks = 2 * np.arange(cfg.K) + p
            levels = m.semiclassical_levels(ks)
            if ell == 0 or (L % 2 == 0 and ell == L // 2):
                levels = levels.real.astype(complex)
            state.sectors[(ell, p)] = SpectrumApproximation(
                parity=p, levels=levels, tail=m, conj_index=ell,
                lam_phase=np.exp(-1j * ell * phi))
    return state


def iterate_general(
    state: ConjugateSpectraState,
    cfg: FixedPointConfig,
    refit: bool = True,
) -> tuple[ConjugateSpectraState, float]:
    """One Jacobi sweep of the coupled multi-sector conditions.

    For each sector and level, solve
      (1/i)[log D^(ell+1)(-e^{-i phi} E) - log D^(ell-1)(-e^{+i phi} E)]
        = pi*(k + 1/2 +- (N-2)/(2(N+2))) + (-1)^ell * phi * beta
    against the frozen snapshot; sectors ell and L-ell stay complex
    conjugate by construction.
    """
    pot = state.potential
    n = pot.degree
    if n <= 2:
        raise ConvergenceError("iteration applies to degree > 2")
    L = state.count
    phi = state.phi
    beta = beta_minus1(pot)[0].real
    snap = {key: (_refit(s, cfg.n_extras) if refit else s) for key, s in state.sectors.items()}
    evals = {key: DeterminantEvaluator(s, k_ext=cfg.k_ext) for key, s in snap.items()}

    rot_m, rot_p = -np.exp(-1j * phi), -np.exp(+1j * phi)

    def lhs(ell, p, e):
        zp = evals[((ell + 1) % L, p)].log_det(rot_m * e).value
        zm = evals[((ell - 1) % L, p)].log_det(rot_p * e).value
        return (zp - zm) / 1j - (-1.0) ** ell * phi * beta

    def dlhs(ell, p, e):
        zp = evals[((ell + 1) % L, p)].d_log_det(rot_m * e) * rot_m
        zm = evals[((ell - 1) % L, p)].d_log_det(rot_p * e) * rot_p
        return (zp - zm) / 1j

    new = ConjugateSpectraState(potential=pot, history=list(state.history))
    sup = 0.0
    for ell in range(L // 2 + 1):
        self_conjugate = ell == 0 or (L % 2 == 0 and ell == L // 2)
        for p in (EVEN, ODD):
            spec = state.sectors[(ell, p)]
            targets = _condition_targets(n, p, spec.k_indices)
            out = np.empty(spec.size, dtype=complex)
            for i, tgt in enumerate(targets):
                if self_conjugate:
                    fun = lambda e: lhs(ell, p, e).real - tgt
                    out[i] = _solve_real_level(fun, float(spec.levels[i].real), cfg.tol_root)
                else:
                    fun = lambda e: lhs(ell, p, e) - tgt
                    dfun = lambda e: dlhs(ell, p, e)
                    out[i] = _solve_complex_level(fun, dfun, complex(spec.levels[i]),
                                                  cfg.tol_root, f_tol=3e-13 * (1.0 + abs(tgt)))
            if cfg.relaxation < 1.0:
                out = spec.levels + cfg.relaxation * (out - spec.levels)
            if self_conjugate and np.any(np.diff(out.real) <= 0):
                raise ConvergenceError("level ordering lost during sweep",
                                       diagnostics={"sector": ell, "levels": out})
            sup = max(sup, float(np.max(np.abs(out - spec.levels) / np.abs(out))))
            new.sectors[(ell, p)] = replace(snap[(ell, p)], levels=out)
            mirror = (L - ell) % L
            if mirror != ell:
                m_spec = snap[(mirror, p)]
                m_tail = fit_tail_extras(np.conj(out), p, m_spec.tail, cfg.n_extras) \
                    if refit else m_spec.tail
                new.sectors[(mirror, p)] = replace(m_spec, levels=np.conj(out), tail=m_tail)
    return new, sup


def solve_general(
    pot: PolynomialPotential,
    cfg: FixedPointConfig | None = None,
) -> tuple[ConjugateSpectraState, dict]:
    """Drive the coupled fixed point from semiclassical initialization."""
    if pot.degree <= 2:
        raise ConvergenceError("general solver needs degree > 2 (lower degrees have closed forms)")
    if not pot.is_real:
        raise ConvergenceError("general solver expects a real-coefficient potential")
    cfg = cfg or FixedPointConfig()
    model = asymptotic_model(pot)
    state = _init_state(pot, cfg, model)
    prev: dict | None = None
    prev2: dict | None = None
    keys_order = sorted(state.sectors)
    for it in range(cfg.max_iter):
        refit = (it < 4 or it % cfg.refit_period == 0) and \
            (not state.history or state.history[-1] > 1e3 * cfg.tol_fixed)
        state_new, sup = iterate_general(state, cfg, refit=refit)
        state_new.history.append(sup)
        if cfg.accelerate and prev is not None and prev2 is not None and it % 8 == 5:
            d1 = np.concatenate([prev[k] - prev2[k] for k in keys_order])
            d2 = np.concatenate([state_new.sectors[k].levels - prev[k] for k in keys_order])
            r = _dominant_ratio(d1, d2)
            if r is not None:
                for key, s in state_new.sectors.items():
                    state_new.sectors[key] = _aitken(s, prev[key], prev2[key], ratio=r)
            prev = prev2 = None
        else:
            prev2 = prev
            prev = {k: s.levels for k, s in state.sectors.items()}
        state = state_new
        if sup < cfg.tol_fixed:
            state.check_symmetry(tol=1e-7)
            diag = {"iterations": it + 1, "history": state.history,
                    "kappa": contraction_factor(state.history)
                    if len(state.history) >= 5 else float("nan")}
            return state, diag
    hist = state.history
    worst = max(state.sectors, key=lambda k: float(np.max(np.abs(state.sectors[k].levels.imag))))
    raise ConvergenceError(
        f"no fixed point within {cfg.max_iter} sweeps (last change {hist[-1]:.2e})",
        diagnostics={"history": hist, "worst_sector": worst,
                     "kappa": contraction_factor(hist) if len(hist) >= 5 else float("nan")},
    )


def wronskian_residual(
    pot: PolynomialPotential,
    state: ConjugateSpectraState,
    lam: complex,
    k_ext: int = 8,
) -> complex:
    """Residual of the determinant functional relation at one lambda.

    e^{+i phi/4} D1+(e^{-i phi} lam) D0-(lam)
      - e^{-i phi/4} D0+(lam) D1-(e^{-i phi} lam) - 2i e^{i phi beta / 2};
    vanishes identically at the exact spectra.
    """
    phi = state.phi
    beta = beta_minus1(pot)[0]
    lam = complex(lam)
    rot = np.exp(-1j * phi) * lam
    d0p = np.exp(DeterminantEvaluator(state.sector(0, EVEN), k_ext).log_det(lam).value)
    d0m = np.exp(DeterminantEvaluator(state.sector(0, ODD), k_ext).log_det(lam).value)
    d1p = np.exp(DeterminantEvaluator(state.sector(1, EVEN), k_ext).log_det(rot).value)
    d1m = np.exp(DeterminantEvaluator(state.sector(1, ODD), k_ext).log_det(rot).value)
    target = 2j * np.exp(1j * phi * beta / 2.0)
    return complex(np.exp(1j * phi / 4.0) * d1p * d0m
                   - np.exp(-1j * phi / 4.0) * d0p * d1m - target)
