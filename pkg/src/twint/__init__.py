"""Twin-t distributions, skewed and multivariate variants, and robust fitting."""

from twint._random import DEFAULT_SEED
from twint.core import ConvergenceError, LocationScale, TwinT, TwinTMoments, kernel_terms, log_norm_const
from twint.data import DataError, Dataset, read_csv, write_csv
from twint.estimation import (
    CurveFitSpec,
    ErrorFamily,
    FitConfig,
    FitReport,
    RegressionSpec,
    Skew,
    fit_curve,
    fit_regression,
)
from twint.extended import (
    GeneralizedMultivariateTwinT,
    GeneralizedTwinT,
    MultivariateTwinT,
    SingularCovarianceError,
    mv_mom_init,
    mv_second_moment_coef,
)
from twint.simulation import ScenarioConfig, abs_diff_ecdf, run_scenario
from twint.skew import AzzaliniTwinT, EnvelopeError, JonesTwinT, TwoPieceTwinT, skew_weight
from twint.special import log_beta, log_gamma, reg_inc_beta

__version__ = "0.1.0"
