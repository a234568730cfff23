"""Polynomial potential algebra.

Potentials are monic polynomials V(q) = q^N + v_1 q^(N-1) + ... + v_(N-1) q
with no constant term (the spectral parameter absorbs it).  This module
provides construction and validation, the discrete rotation ("conjugation")
symmetry data, descending-power expansions of (V + lam)^(1/2 - s) at large q
with exact s-dependence, the resulting normalization anomaly constant, and
re-centering of the potential.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import PotentialError

__all__ = [
    "PolynomialPotential",
    "ConjugationData",
    "BetaExpansion",
    "make_potential",
    "conjugation_data",
    "num_conjugates",
    "conjugate",
    "beta_expansion",
    "beta_minus1",
    "anomaly_constant",
    "shift",
    "binom_half",
    "binom_half_ds",
]

_ZERO_TOL = 1e-14


@dataclass(frozen=True)
class PolynomialPotential:
    """Monic polynomial potential of degree N with zero constant term.

    `coefficients[j-1]` multiplies q^(N-j), j = 1..N-1.  All operations
    treat instances as immutable values.
    """

    degree: int
    coefficients: tuple[complex, ...]
    is_even: bool = field(init=False)

    def __post_init__(self):
        if self.degree < 1:
            raise PotentialError(f"degree must be >= 1, got {self.degree}")
        if len(self.coefficients) != self.degree - 1:
            raise PotentialError(
                f"degree {self.degree} needs {self.degree - 1} lower coefficients, "
                f"got {len(self.coefficients)}"
            )
        even = self.degree % 2 == 0 and all(
            abs(v) <= _ZERO_TOL for j, v in enumerate(self.coefficients, start=1) if j % 2 == 1
        )
        object.__setattr__(self, "is_even", even)
        object.__setattr__(self, "coefficients", tuple(complex(v) for v in self.coefficients))

    @property
    def is_real(self) -> bool:
        return all(abs(v.imag) <= _ZERO_TOL for v in self.coefficients)

    @property
    def is_homogeneous(self) -> bool:
        return all(abs(v) <= _ZERO_TOL for v in self.coefficients)

    @property
    def order(self) -> float:
        """Growth order 1/2 + 1/N of the associated spectral functions."""
        return 0.5 + 1.0 / self.degree

    def __call__(self, q):
        """Evaluate V(q); accepts scalars or arrays, real or complex."""
        q = np.asarray(q)
        # Horner over (1, v_1, ..., v_{N-1}), then one final multiply (no constant)
        out = np.ones_like(q, dtype=complex)
        for v in self.coefficients:
            out = out * q + v
        out = out * q
        if self.is_real and np.isrealobj(q):
            return out.real if out.ndim else float(out.real)
        return out if out.ndim else complex(out)

    def describe(self) -> str:
        terms = [f"q^{self.degree}"]
        for j, v in enumerate(self.coefficients, start=1):
            if abs(v) > _ZERO_TOL:
                p = self.degree - j
                c = f"{v.real:g}" if abs(v.imag) <= _ZERO_TOL else f"({v:g})"
                terms.append(f"{c}*q^{p}" if p > 1 else f"{c}*q")
        return " + ".join(terms)


@dataclass(frozen=True)
class ConjugationData:
    """Rotation angle and count of distinct conjugate problems."""

    phi: float
    count: int


def make_potential(degree: int, coeffs: Sequence[complex]) -> PolynomialPotential:
    """Validated monic potential; `coeffs` are v_1..v_(N-1).

    Trailing zero coefficients may be omitted: make_potential(2, []) is the
    harmonic well.  Too many coefficients is an error.
    """
    coeffs = tuple(coeffs)
    if degree >= 1 and len(coeffs) < degree - 1:
        coeffs = coeffs + (0.0,) * (degree - 1 - len(coeffs))
    return PolynomialPotential(degree, coeffs)


def conjugation_data(pot: PolynomialPotential) -> ConjugationData:
    """Angle phi = 4*pi/(N+2) and the number L of distinct conjugates.

    L = N + 2 generically and N/2 + 1 for an even polynomial.
    """
    n = pot.degree
    count = n // 2 + 1 if pot.is_even else n + 2
    return ConjugationData(phi=4.0 * math.pi / (n + 2), count=count)


def num_conjugates(pot: PolynomialPotential) -> int:
    return conjugation_data(pot).count


def conjugate(pot: PolynomialPotential, ell: int) -> tuple[PolynomialPotential, complex]:
    """The ell-th conjugate potential and the accompanying eigenvalue phase.

    The coefficient of q^(N-j) picks up exp(-i*ell*phi*(N+2-j)/2) and the
    spectral parameter is rescaled by exp(-i*ell*phi).  ell is taken mod the
    conjugate count; ell = 0 is the identity.
    """
    data = conjugation_data(pot)
    ell = ell % data.count
    n = pot.degree
    phi = data.phi
    new = tuple(
        v * np.exp(-1j * ell * phi * (n + 2 - j) / 2.0)
        for j, v in enumerate(pot.coefficients, start=1)
    )
    lam_phase = complex(np.exp(-1j * ell * phi))
    return PolynomialPotential(n, new), lam_phase


# ---------------------------------------------------------------------------
# descending-power expansion of (V + lam)^(1/2 - s)
# ---------------------------------------------------------------------------

def binom_half(m: int, s: float = 0.0) -> float:
    """Generalized binomial coefficient C(1/2 - s, m)."""
    out = 1.0
    x = 0.5 - s
    for i in range(m):
        out *= (x - i) / (i + 1)
    return out


def binom_half_ds(m: int) -> float:
    """d/ds C(1/2 - s, m) at s = 0.

    Equals -C(1/2, m) * [psi(3/2) - psi(3/2 - m)]; the digamma difference is
    the exact finite sum over the shifted half-integers, which is what is
    evaluated here (no cancellation, no poles: 1/2 - i is never 0).
    """
    total = sum(1.0 / (0.5 - i) for i in range(m))
    return -binom_half(m) * total


@lru_cache(maxsize=None)
def _weight_partitions(d: int, max_part: int) -> tuple[tuple[tuple[int, int], ...], ...]:
    """All multisets over parts 1..max_part summing to d, as ((part, mult), ...)."""
    if d == 0:
        return (tuple(),)
    out = []

    def rec(remaining, largest, acc):
        if remaining == 0:
            out.append(tuple(acc))
            return
        for part in range(min(remaining, largest), 0, -1):
            mult = 1
            while part * mult <= remaining:
                rec(remaining - part * mult, part - 1, acc + [(part, mult)])
                mult += 1

    rec(d, max_part, [])
    return tuple(out)


@dataclass(frozen=True)
class SigmaTerm:
    """One expansion order: a finite list of monomials (m, const, lam_power).

    The value at (s, lam) is sum const * C(1/2 - s, m) * lam**lam_power; the
    s-derivative at 0 replaces the binomial by its derivative.
    """

    monomials: tuple[tuple[int, complex, int], ...]

    def value(self, lam: complex = 0.0, s: float = 0.0) -> complex:
        return sum(c * binom_half(m, s) * (lam**p if p else 1.0)
                   for m, c, p in self.monomials)

    def ds_value(self, lam: complex = 0.0) -> complex:
        """s-derivative at s = 0."""
        return sum(c * binom_half_ds(m) * (lam**p if p else 1.0)
                   for m, c, p in self.monomials)


@dataclass(frozen=True)
class BetaExpansion:
    """Coefficients of the large-q reexpansion of (V + lam)^(1/2 - s).

    Keys are twice the exponent offset (2*sigma, always integral); the
    exponent of q in the corresponding term is sigma - N*s.  lam is carried
    formally so the same object serves every spectral point.
    """

    degree: int
    terms: dict[int, SigmaTerm]

    def sigma_values(self):
        return sorted((k / 2.0 for k in self.terms), reverse=True)

    def term(self, sigma) -> SigmaTerm | None:
        return self.terms.get(int(round(2 * sigma)))

    def value_at(self, q, lam: complex = 0.0, s: float = 0.0):
        """Evaluate the truncated series at large q (s fixed, usually 0)."""
        q = complex(q)
        return sum(t.value(lam, s) * q ** (k / 2.0 - self.degree * s)
                   for k, t in self.terms.items())


def beta_expansion(pot: PolynomialPotential, sigma_min: float = -3.0) -> BetaExpansion:
    """All expansion coefficients with exponent sigma >= sigma_min.

    Exponents descend from N/2 in integer steps (half-integers for odd N).
    The leading coefficient is identically 1; for N > 2 every sigma >= 0
    coefficient is independent of lam.
    """
    n = pot.degree
    if sigma_min > n / 2.0:
        raise PotentialError("sigma_min must not exceed N/2")
    d_max = int(math.floor(n / 2.0 - sigma_min))
    support = {j: v for j, v in enumerate(pot.coefficients, start=1) if abs(v) > _ZERO_TOL}
    terms: dict[int, SigmaTerm] = {}
    for d in range(d_max + 1):
        monos: dict[tuple[int, int], complex] = {}
        for partition in _weight_partitions(d, n):
            m = 0
            const = 1.0 + 0.0j
            lam_pow = 0
            ok = True
            for part, mult in partition:
                m += mult
                if part == n:
                    lam_pow += mult
                elif part in support:
                    const *= support[part] ** mult
                else:
                    ok = False
                    break
            if not ok:
                continue
            # multinomial count of ordered factor sequences
            count = math.factorial(m)
            for _, mult in partition:
                count //= math.factorial(mult)
            key = (m, lam_pow)
            monos[key] = monos.get(key, 0.0) + const * count
        packed = tuple((m, c, p) for (m, p), c in sorted(monos.items()) if abs(c) > 0.0)
        if packed:
            terms[n - 2 * d] = SigmaTerm(packed)
    return BetaExpansion(n, terms)


def beta_minus1(pot: PolynomialPotential, lam: complex = 0.0) -> tuple[complex, complex]:
    """Value and s-derivative at s = 0 of the sigma = -1 coefficient.

    Identically zero for every odd degree and for even polynomials of degree
    N = 4M; lam only matters for N <= 2.
    """
    exp = beta_expansion(pot, sigma_min=-1.0)
    t = exp.term(-1.0)
    if t is None:
        return 0.0 + 0.0j, 0.0 + 0.0j
    return complex(t.value(lam)), complex(t.ds_value(lam))


def anomaly_constant(pot: PolynomialPotential, lam: complex = 0.0) -> complex:
    """Normalization correction from the sigma = -1 expansion coefficient.

    (1/N) * [-(2 log 2) * b(s) + d/ds(b(s)/(1-2s))] at s = 0 where b is the
    sigma = -1 coefficient; the derivative term evaluates exactly to
    b'(0) + 2 b(0).
    """
    b0, b1 = beta_minus1(pot, lam)
    return ((2.0 - 2.0 * math.log(2.0)) * b0 + b1) / pot.degree


def shift(pot: PolynomialPotential, center: float) -> tuple[PolynomialPotential, complex]:
    """Re-expand V(center + q); returns the recentered potential and V(center).

    The constant term V(center) is returned separately as a spectral-parameter
    offset so the result stays in the monic no-constant normalization.
    """
    n = pot.degree
    full = np.zeros(n + 1, dtype=complex)  # full[k] multiplies q^(n-k)
    full[0] = 1.0
    full[1:n] = pot.coefficients
    shifted = np.zeros(n + 1, dtype=complex)
    # binomial re-expansion of each q^(n-k) about `center`
    for k in range(n):
        p = n - k
        for i in range(p + 1):
            shifted[n - i] += full[k] * math.comb(p, i) * center ** (p - i)
    offset = complex(shifted[n])
    new = PolynomialPotential(n, tuple(shifted[1:n]))
    if new.is_real and abs(offset.imag) <= _ZERO_TOL:
        offset = offset.real
    return new, offset
