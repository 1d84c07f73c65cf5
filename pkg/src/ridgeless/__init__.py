"""Asymptotic and finite-sample risk of ridgeless and ridge least squares."""

__version__ = "0.1.0"

from ._jit import backend
from .errors import (AccuracyWarning, CVUndefinedError, DegenerateSpectrumError, DomainError, InSpectrumError,
                     InterpolationBoundaryError, NoSpectrumModelError, NumericalError, ParameterError,
                     RankAmbiguityWarning, RRLError, ValidationError)
from .spectra import (AR1, Custom, DiscreteSpectrum, Equicorrelated, GeometryPair, Isotropic, Latent,
                      Misspecified, Nonlinear, build_geometry, empirical_geometry)
from .stieltjes import CompanionEval, StieltjesEval, mp_stieltjes, silverstein_v0, solve_c0, solve_m_ridge
from .risk_theory import (RiskDecomposition, cv_asymptotic, equicorrelated_risk, isotropic_closed_forms,
                          latent_minnorm_risk, minnorm_risk, misspecified_risk, norm_limit, ridge_risk,
                          theory_curve)
from .estimators import (Dataset, FitResult, conditional_risk, gcv, gd_minnorm, loo_cv, naive_loo, ridge_fit,
                         tune)
from .simulate import Activation, SimulationResult, gen_dataset, mc_cv_curve, mc_risk_curve
from .nonlinear import (LaurentCoefficients, ResolventPair, laurent_variance, resolvent_general,
                        resolvent_simple, stieltjes_nonlinear)

__all__ = [
    "__version__",
    "backend",
    "AccuracyWarning",
    "CVUndefinedError",
    "DegenerateSpectrumError",
    "DomainError",
    "InSpectrumError",
    "InterpolationBoundaryError",
    "NoSpectrumModelError",
    "NumericalError",
    "ParameterError",
    "RankAmbiguityWarning",
    "RRLError",
    "ValidationError",
    "AR1",
    "Custom",
    "DiscreteSpectrum",
    "Equicorrelated",
    "GeometryPair",
    "Isotropic",
    "Latent",
    "Misspecified",
    "Nonlinear",
    "build_geometry",
    "empirical_geometry",
    "CompanionEval",
    "StieltjesEval",
    "mp_stieltjes",
    "silverstein_v0",
    "solve_c0",
    "solve_m_ridge",
    "RiskDecomposition",
    "cv_asymptotic",
    "equicorrelated_risk",
    "isotropic_closed_forms",
    "latent_minnorm_risk",
    "minnorm_risk",
    "misspecified_risk",
    "norm_limit",
    "ridge_risk",
    "theory_curve",
    "Dataset",
    "FitResult",
    "conditional_risk",
    "gcv",
    "gd_minnorm",
    "loo_cv",
    "naive_loo",
    "ridge_fit",
    "tune",
    "Activation",
    "SimulationResult",
    "gen_dataset",
    "mc_cv_curve",
    "mc_risk_curve",
    "LaurentCoefficients",
    "ResolventPair",
    "laurent_variance",
    "resolvent_general",
    "resolvent_simple",
    "stieltjes_nonlinear",
]
