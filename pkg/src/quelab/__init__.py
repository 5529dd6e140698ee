"""quelab: a high-precision laboratory for mass equidistribution of
holomorphic Hecke eigenforms on the modular surface."""

from .eigenforms import (
    EigenBasis,
    Eigenform,
    deligne_check,
    eigen_decompose,
    lambda_extend_by_hecke,
)
from .logreal import LogReal, SignSplitSum
from .massmeasure import (
    MassProfile,
    Rectangle,
    SiegelDomain,
    admissible_mass,
    cross_mass,
    main_error_split,
    petersson_norm_sq,
    rect_mass,
    siegel_mass,
    sym2_l_value,
    vertical_mass,
)
from .qseries import (
    HeckeMatrix,
    PowerSeries,
    VictorMillerBasis,
    cusp_dim,
    delta_series,
    eisenstein_series,
    hecke_matrix,
    victor_miller_basis,
)
from .specfun import (
    exp_poly_tail_bound,
    gamma_transition_gap,
    log_factorial,
    reg_inc_gamma_p,
    reg_inc_gamma_q,
    series_truncation_index,
)
from .store import ProfileStore

__version__ = "0.1.0"

__all__ = [
    "EigenBasis",
    "Eigenform",
    "HeckeMatrix",
    "LogReal",
    "MassProfile",
    "PowerSeries",
    "ProfileStore",
    "Rectangle",
    "SiegelDomain",
    "SignSplitSum",
    "VictorMillerBasis",
    "admissible_mass",
    "cross_mass",
    "cusp_dim",
    "delta_series",
    "deligne_check",
    "eigen_decompose",
    "eisenstein_series",
    "exp_poly_tail_bound",
    "gamma_transition_gap",
    "hecke_matrix",
    "lambda_extend_by_hecke",
    "log_factorial",
    "main_error_split",
    "petersson_norm_sq",
    "rect_mass",
    "reg_inc_gamma_p",
    "reg_inc_gamma_q",
    "series_truncation_index",
    "siegel_mass",
    "sym2_l_value",
    "vertical_mass",
    "victor_miller_basis",
]
