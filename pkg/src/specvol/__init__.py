"""Spectral option pricing under fast mean-reverting stochastic volatility.

The package prices European and barrier-style contracts by expanding the
pricing operator around its averaged constant-volatility limit.  The
zeroth order is an exact Sturm-Liouville eigenfunction expansion; the first
order is an O(sqrt(eps)) perturbative correction driven by two group
parameters (v2, v3).  A Monte Carlo path simulator and an implied-volatility
calibration layer close the loop against simulated or quoted markets.
"""

from .calibration import (CalibrationResult, Quote, RecoveredParams,
                          calibrate, fit_lmmr, forward_ab, implied_vol,
                          load_quotes, recover_params)
from .core import (UNBOUNDED, Interval, MarketParams, OptionKind, OptionSpec,
                   SmoothstepPayoff, SpectrumCase, classify_spectrum,
                   derived_c, eval_payoff, load_market_params,
                   load_option_spec)
from .errors import (CalibrationFailure, CenteringViolation,
                     ContractViolation, ConvergenceViolation, Degeneracy,
                     DegenerateFit, IntegrationFailure, InvalidGrid,
                     InvalidIndex, InvalidInterval, InvalidParams, NoSolution,
                     SpecvolError, TruncationFailure, UnsupportedCase)
from .groupparams import (ClippedExp, GroupParameters, SVModelPrimitives,
                          clipped_exp_model, group_parameters, load_model,
                          phi_prime, stationary_average)
from .montecarlo import (EpsilonStudyResult, EpsilonStudyRow, MCEstimate,
                         SimConfig, epsilon_convergence_study, simulate_price)
from .perturbation import (A1Operator, EigenCorrection, MatrixElements,
                           eigen_correction, matrix_elements,
                           matrix_elements_numeric)
from .pricing import (DEFAULT_SERIES, PriceBreakdown, RebateDecomposition,
                      SeriesConfig, bs_reference, bs_vega, coeff_a0, coeff_a1,
                      price, price_first, price_knock_in, price_rebate,
                      price_zeroth, time_factors)
from .quadrature import (DEFAULT_CONFIG, DoubleIntegralSpec, QuadratureConfig,
                         gaussian_truncation_radius, integrate_1d,
                         integrate_contour, integrate_double_antisym)
from .spectral import (EigenPair, WeightDensity, eigen_residual, eigenpair,
                       inner_product)

__version__ = "0.1.0"

__all__ = [
    "A1Operator",
    "CalibrationFailure",
    "CalibrationResult",
    "CenteringViolation",
    "ClippedExp",
    "ContractViolation",
    "ConvergenceViolation",
    "DEFAULT_CONFIG",
    "DEFAULT_SERIES",
    "Degeneracy",
    "DegenerateFit",
    "DoubleIntegralSpec",
    "EigenCorrection",
    "EigenPair",
    "EpsilonStudyResult",
    "EpsilonStudyRow",
    "GroupParameters",
    "IntegrationFailure",
    "Interval",
    "InvalidGrid",
    "InvalidIndex",
    "InvalidInterval",
    "InvalidParams",
    "MCEstimate",
    "MarketParams",
    "MatrixElements",
    "NoSolution",
    "OptionKind",
    "OptionSpec",
    "PriceBreakdown",
    "QuadratureConfig",
    "Quote",
    "RebateDecomposition",
    "RecoveredParams",
    "SVModelPrimitives",
    "SeriesConfig",
    "SimConfig",
    "SmoothstepPayoff",
    "SpecvolError",
    "SpectrumCase",
    "TruncationFailure",
    "UNBOUNDED",
    "UnsupportedCase",
    "WeightDensity",
    "bs_reference",
    "bs_vega",
    "calibrate",
    "classify_spectrum",
    "clipped_exp_model",
    "coeff_a0",
    "coeff_a1",
    "derived_c",
    "eigen_correction",
    "eigen_residual",
    "eigenpair",
    "epsilon_convergence_study",
    "eval_payoff",
    "fit_lmmr",
    "forward_ab",
    "gaussian_truncation_radius",
    "group_parameters",
    "implied_vol",
    "inner_product",
    "integrate_1d",
    "integrate_contour",
    "integrate_double_antisym",
    "load_market_params",
    "load_model",
    "load_option_spec",
    "load_quotes",
    "matrix_elements",
    "matrix_elements_numeric",
    "phi_prime",
    "price",
    "price_first",
    "price_knock_in",
    "price_rebate",
    "price_zeroth",
    "recover_params",
    "simulate_price",
    "stationary_average",
    "time_factors",
]
