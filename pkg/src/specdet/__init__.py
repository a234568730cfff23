"""specdet: exact spectra and spectral determinants of polynomial
Schrodinger operators through self-consistent quantization conditions."""

from ._kernels import IMPL as kernel_backend
from .classical import (
    AsymptoticModel,
    RegularizedAction,
    action,
    asymptotic_model,
    classical_determinant,
    improper_action,
    large_v_ratio,
)
from .determinant import (
    EVEN,
    ODD,
    DeterminantEvaluator,
    LogDetValue,
    SpectrumApproximation,
    arg_det_homogeneous,
    harmonic_det,
    harmonic_spectrum,
    log_det,
    stirling_check,
    susy_det,
    susy_fullline_det,
    susy_reflection_product,
    zeta_sum,
)
from .potential import (
    BetaExpansion,
    ConjugationData,
    PolynomialPotential,
    anomaly_constant,
    beta_expansion,
    beta_minus1,
    conjugate,
    conjugation_data,
    make_potential,
    num_conjugates,
    shift,
)
from .quantizer import (
    ConjugateSpectraState,
    FixedPointConfig,
    contraction_factor,
    init_semiclassical,
    iterate_general,
    iterate_homogeneous,
    solve_general,
    solve_homogeneous,
    wronskian_residual,
)

__version__ = "0.1.0"

__all__ = [
    "kernel_backend",
    "AsymptoticModel",
    "RegularizedAction",
    "action",
    "asymptotic_model",
    "classical_determinant",
    "improper_action",
    "large_v_ratio",
    "EVEN",
    "ODD",
    "DeterminantEvaluator",
    "LogDetValue",
    "SpectrumApproximation",
    "arg_det_homogeneous",
    "harmonic_det",
    "harmonic_spectrum",
    "log_det",
    "stirling_check",
    "susy_det",
    "susy_fullline_det",
    "susy_reflection_product",
    "zeta_sum",
    "BetaExpansion",
    "ConjugationData",
    "PolynomialPotential",
    "anomaly_constant",
    "beta_expansion",
    "beta_minus1",
    "conjugate",
    "conjugation_data",
    "make_potential",
    "num_conjugates",
    "shift",
    "ConjugateSpectraState",
    "FixedPointConfig",
    "contraction_factor",
    "init_semiclassical",
    "iterate_general",
    "iterate_homogeneous",
    "solve_general",
    "solve_homogeneous",
    "wronskian_residual",
    "__version__",
]
