"""Independent Sturm-Liouville verification: finite differences and shooting.

Nothing here knows about structure equations or quantization conditions;
the eigenvalues and wavefunction ratios produced by this module are the
ground truth the fixed-point solvers are tested against.

The half-line problems use a staggered grid q_i = (i + 1/2) h so that both
the Neumann (even-sector) and Dirichlet (odd-sector) conditions at the
origin are second-order mirror conditions; Richardson extrapolation in h
then gives fourth-order eigenvalues.  Shooting integrates inward from the
far classically-forbidden region, where the decaying solution grows inward
and therefore dominates any contamination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .errors import OracleError
from .potential import PolynomialPotential

__all__ = [
    "GridSpec",
    "auto_grid",
    "fd_spectrum",
    "shoot_eigenvalue",
    "recessive_ratio",
    "recessive_profile",
    "susy_zero",
]


@dataclass(frozen=True)
class GridSpec:
    """Half-line discretization: [0, q_max] with n_points staggered nodes."""

    q_max: float
    n_points: int
    richardson: bool = True

    def __post_init__(self):
        if self.n_points < 200:
            raise ValueError("need at least 200 grid points")
        if self.q_max <= 0:
            raise ValueError("q_max must be positive")


def _poly_deriv(pot: PolynomialPotential, q: float) -> complex:
    n = pot.degree
    full = [1.0 + 0j] + list(pot.coefficients) + [0.0]
    out = 0.0 + 0j
    for k, c in enumerate(full[:-1]):
        out = out * q + (n - k) * c
    return out


def _energy_estimate(pot: PolynomialPotential, K: int) -> float:
    """Rough top-level estimate from the leading semiclassical term."""
    n = pot.degree
    mu = 0.5 + 1.0 / n
    b = (2.0 / math.pi) * math.gamma(1 / n) * math.gamma(1.5) / (n * math.gamma(1 / n + 1.5))
    scale = max([1.0] + [abs(v) ** (n / j) for j, v in enumerate(pot.coefficients, 1) if abs(v)])
    return ((2.0 * K + 2.5) / b) ** (1.0 / mu) + 4.0 * scale


def auto_grid(pot: PolynomialPotential, K: int, agmon: float = 36.0,
              density: float = 14.0) -> GridSpec:
    """Grid sized by the classical turning point plus a decay margin.

    q_max is extended until the tunneling integral past the top requested
    level exceeds `agmon` (e^-36 is below double precision); the node count
    resolves the shortest oscillation with `density` points per radian.
    """
    e_top = _energy_estimate(pot, K)
    q = e_top ** (1.0 / pot.degree)
    while pot(q).real < e_top:
        q *= 1.2
    qt = q
    total = 0.0
    step = 0.05 * qt + 0.01
    while total < agmon:
        total += math.sqrt(max(pot(q).real - e_top, 0.0)) * step
        q += step
        if q > 1e4:
            raise OracleError("could not reach the decay margin; potential too shallow")
    n = int(max(1500, density * q * math.sqrt(e_top)))
    return GridSpec(q_max=float(q), n_points=n)


def _fd_once(pot: PolynomialPotential, parity: int, K: int, grid: GridSpec) -> np.ndarray:
    h = grid.q_max / grid.n_points
    q = (np.arange(grid.n_points) + 0.5) * h
    v = np.real(pot(q))
    diag = 2.0 / h**2 + v
    # mirror condition at the origin: psi(-q0) = +-psi(q0)
    diag[0] = (2.0 - (1.0 if parity == 0 else -1.0)) / h**2 + v[0]
    off = -np.ones(grid.n_points - 1) / h**2
    return eigh_tridiagonal(diag, off, select="i", select_range=(0, K - 1),
                            eigvals_only=True)


def fd_spectrum(
    pot: PolynomialPotential,
    parity: int,
    K: int,
    grid: GridSpec | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Lowest K eigenvalues of the half-line problem, with error estimates.

    Returns (levels, per-level error estimate from the Richardson pair).
    """
    if not pot.is_real:
        raise OracleError("finite-difference oracle needs real coefficients")
    if grid is None:
        grid = auto_grid(pot, K)
    e_top = _energy_estimate(pot, K)
    if pot(grid.q_max).real < 1.4 * e_top:
        raise OracleError(
            f"grid too small: V(q_max) = {pot(grid.q_max).real:.3g} is not safely above "
            f"the top requested level ~{e_top:.3g}"
        )
    e1 = _fd_once(pot, parity, K, grid)
    if not grid.richardson:
        return e1, np.full(K, np.nan)
    e2 = _fd_once(pot, parity, K, GridSpec(grid.q_max, 2 * grid.n_points, False))
    return (4.0 * e2 - e1) / 3.0, np.abs(e2 - e1) / 3.0


# ---------------------------------------------------------------------------
# inward shooting
# ---------------------------------------------------------------------------

def _integrate_inward(pot, lam, q_start, q_end=0.0, keep=None, count_nodes=False,
                      rtol=1e-12):
    """Integrate psi'' = (V + lam) psi from q_start down to q_end.

    The solution is renormalized chunk by chunk (positive factors only), so
    overflow never occurs and boundary functionals keep their signs.
    Returns (psi, dpsi, log_scale, nodes, kept) where kept maps requested
    q values to (psi, log_scale at capture time).
    """
    lam = complex(lam)
    real_path = pot.is_real and abs(lam.imag) == 0.0
    lam_eff = lam.real if real_path else lam

    def rhs(q, y):
        vv = pot(q) + lam_eff
        return [y[1], vv * y[0]]

    pi0 = np.sqrt(complex(pot(q_start) + lam_eff))
    slope = -pi0 - _poly_deriv(pot, q_start) / (4.0 * (pot(q_start) + lam_eff))
    y = np.array([1.0, slope], dtype=complex)
    if real_path:
        y = y.real.astype(float)

    log_scale = 0.0
    nodes = 0
    kept = {}
    keep_sorted = sorted(keep, reverse=True) if keep else []
    q = q_start
    last_sign = math.copysign(1.0, y[0].real) if y[0].real != 0 else 1.0
    while q > q_end + 1e-14:
        pi_here = abs(np.sqrt(pot(q) + lam))
        dq = min(q - q_end, max(30.0 / max(pi_here, 1.0), 1e-3))
        q_next = max(q_end, q - dq)
        t_eval = np.linspace(q, q_next, 48) if count_nodes else None
        sol = solve_ivp(rhs, (q, q_next), y, method="DOP853", rtol=rtol, atol=1e-14,
                        t_eval=t_eval, dense_output=bool(keep_sorted))
        if not sol.success:
            raise OracleError(f"inward integration failed near q={q:.4g}: {sol.message}")
        if count_nodes:
            vals = np.real(sol.y[0])
            for v in vals[1:]:
                s = math.copysign(1.0, v) if v != 0 else last_sign
                if s != last_sign:
                    nodes += 1
                    last_sign = s
        while keep_sorted and q_next <= keep_sorted[0] <= q:
            qq = keep_sorted.pop(0)
            val = sol.sol(qq)[0] if sol.sol is not None else sol.y[0, -1]
            kept[qq] = (complex(val), log_scale)
        y = sol.y[:, -1].copy()
        mag = max(abs(y[0]), abs(y[1]))
        if mag > 1e6:
            y /= mag
            log_scale += math.log(mag)
        q = q_next
    return y[0], y[1], log_scale, nodes, kept


def shoot_eigenvalue(
    pot: PolynomialPotential,
    parity: int,
    k: int,
    bracket: tuple[float, float] | None = None,
    tol: float = 1e-12,
) -> float:
    """Eigenvalue via inward shooting on the parity boundary functional.

    The decaying large-q data is imposed at q_max; the root in E of psi'(0)
    (even sector) or psi(0) (odd sector) inside `bracket` is returned after
    a node-count check.
    """
    if k % 2 != parity:
        raise ValueError(f"full-line index k={k} does not belong to parity {parity}")
    i = (k - parity) // 2
    if bracket is None:
        levels, err = fd_spectrum(pot, parity, i + 2)
        gap = levels[i + 1] - levels[i] if i + 1 < len(levels) else levels[i]
        width = max(50.0 * err[i], 1e-7 * levels[i], 1e-9)
        bracket = (levels[i] - min(width, 0.4 * gap), levels[i] + min(width, 0.4 * gap))
    grid = auto_grid(pot, k + 2)

    def functional(E):
        psi, dpsi, _, _, _ = _integrate_inward(pot, -E, grid.q_max)
        return float(np.real(dpsi if parity == 0 else psi))

    f_lo, f_hi = functional(bracket[0]), functional(bracket[1])
    if f_lo * f_hi > 0:
        raise OracleError(f"bracket {bracket} does not straddle an eigenvalue")
    e = brentq(functional, bracket[0], bracket[1], xtol=tol, rtol=8.9e-16)
    _, _, _, nodes, _ = _integrate_inward(pot, -e, grid.q_max, count_nodes=True)
    expected = (k - parity) // 2
    if nodes != expected:
        raise OracleError(f"node count {nodes} does not match index k={k} (expected {expected})")
    return float(e)


def recessive_ratio(pot: PolynomialPotential, lam: complex, q_start: float | None = None) -> complex:
    """psi(0)/psi'(0) of the decaying solution, by inward integration.

    Normalization-free; under the canonical conventions this ratio equals
    -D-(lam)/D+(lam).  Complex lam is accepted on the conservative domain
    Re lam > 0.
    """
    lam = complex(lam)
    if lam.imag != 0.0 and lam.real <= 0.0:
        raise OracleError("complex spectral parameter restricted to Re(lam) > 0")
    if q_start is None:
        scale = max([1.0] + [abs(v) ** (1.0 / j) for j, v in enumerate(pot.coefficients, 1)
                             if abs(v)] + [abs(lam) ** (1.0 / pot.degree)])
        q_start = 3.5 * scale + 6.0
    psi, dpsi, _, _, _ = _integrate_inward(pot, lam, q_start)
    if abs(dpsi) == 0:
        raise OracleError("psi'(0) vanished; lam sits on a determinant zero")
    return complex(psi / dpsi)


def recessive_profile(pot: PolynomialPotential, lam: complex, points) -> dict[float, complex]:
    """psi(Q)/psi(0) of the decaying solution at the requested points."""
    pts = sorted(float(p) for p in points)
    if any(p < 0 for p in pts):
        raise ValueError("profile points must be non-negative")
    scale = max([1.0] + [abs(v) ** (1.0 / j) for j, v in enumerate(pot.coefficients, 1)
                         if abs(v)] + [abs(complex(lam)) ** (1.0 / pot.degree)])
    q_start = 3.5 * scale + 6.0 + max(pts)
    psi0, _, log0, _, kept = _integrate_inward(pot, complex(lam), q_start, keep=pts)
    out = {}
    for q, (val, logs) in kept.items():
        out[q] = complex(val * np.exp(logs - log0) / psi0)
    return out


def susy_zero(N: int, bracket: tuple[float, float], coupling_degree: int | None = None,
              xtol: float = 1e-8) -> float:
    """Root in the coupling of the zero-energy whole-line problem.

    The potential is q^N + c * q^(N/2-1); both half-axes are integrated
    inward with decaying data and the Wronskian is matched at the origin.
    """
    if N % 2 != 0:
        raise ValueError("even N required")
    m = coupling_degree if coupling_degree is not None else N // 2 - 1

    def wronsk(c):
        coeffs = [0.0] * (N - 1)
        coeffs[N - m - 1] = c
        right = PolynomialPotential(N, tuple(coeffs))
        refl = [0.0] * (N - 1)
        refl[N - m - 1] = c * (-1.0) ** (N - m)
        left = PolynomialPotential(N, tuple(refl))
        qr = 3.5 * max(1.0, abs(c) ** (1.0 / (N - m))) + 5.0
        pr, dpr, _, _, _ = _integrate_inward(right, 0.0, qr)
        pl, dpl, _, _, _ = _integrate_inward(left, 0.0, qr)
        # left side: psi_-(q) = chi(-q), so psi_-'(0) = -chi'(0)
        return float(np.real(pr * (-dpl) - dpr * pl))

    lo, hi = bracket
    if wronsk(lo) * wronsk(hi) > 0:
        raise OracleError(f"bracket {bracket} does not straddle a zero-energy state")
    return float(brentq(wronsk, lo, hi, xtol=xtol))
