from .badic import BadicPoint, ElementaryInterval, interval_contains, locate, point_from_rational, snap
from .config import ExperimentConfig, load_config, parse_config
from .cubature import QmcRule, WaveletSumCache, exactness_report, qmc, qmc_wavelet, wavelet_sums
from .errors import ConfigError, FormatError, NumericBudgetExceeded, QmcError, ValidationError
from .experiments import RateFit, fit_rate, run_convergence, run_experiment, run_sharpness
from .fractional import (
    FracFunction,
    PanelDensity,
    delta_alpha,
    extremal_function,
    frac_discrepancy,
    frac_integral,
    kernel_K,
    kernel_Ks,
    phi_synthesize,
    phi_term,
    reflected_l2_star,
    rkhs_worst_case_error,
    rl_derivative,
    seminorm_V,
)
from .haar import (
    CoeffMap,
    Exponent,
    PiecewiseConstant,
    SpaceParams,
    Surd,
    WaveletIndex,
    coeff_smooth,
    coefficients_pc,
    frame_check,
    haar_norm,
    point_evaluation_constant,
    psi_value,
    Psi_value,
    series_eval,
    synthesize_pc,
)
from .nets import (
    GeneratorMatrices,
    NetCertificate,
    PointSet,
    digital_net,
    faure_net,
    random_point_set,
    t_value,
    van_der_corput,
    verify_net,
)
from .wce import WceBound, mock_function, mock_lower_bound, theorem_constant, wce_exact_hilbert, wce_upper_dual

__all__ = [
    "BadicPoint", "ElementaryInterval", "interval_contains", "locate", "point_from_rational", "snap",
    "ExperimentConfig", "load_config", "parse_config",
    "QmcRule", "WaveletSumCache", "exactness_report", "qmc", "qmc_wavelet", "wavelet_sums",
    "ConfigError", "FormatError", "NumericBudgetExceeded", "QmcError", "ValidationError",
    "RateFit", "fit_rate", "run_convergence", "run_experiment", "run_sharpness",
    "FracFunction", "PanelDensity", "delta_alpha", "extremal_function", "frac_discrepancy", "frac_integral",
    "kernel_K", "kernel_Ks", "phi_synthesize", "phi_term", "reflected_l2_star", "rkhs_worst_case_error",
    "rl_derivative", "seminorm_V",
    "CoeffMap", "Exponent", "PiecewiseConstant", "SpaceParams", "Surd", "WaveletIndex", "coeff_smooth",
    "coefficients_pc", "frame_check", "haar_norm", "point_evaluation_constant", "psi_value", "Psi_value",
    "series_eval", "synthesize_pc",
    "GeneratorMatrices", "NetCertificate", "PointSet", "digital_net", "faure_net", "random_point_set", "t_value",
    "van_der_corput", "verify_net",
    "WceBound", "mock_function", "mock_lower_bound", "theorem_constant", "wce_exact_hilbert", "wce_upper_dual",
]
