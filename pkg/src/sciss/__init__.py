"""Semi-supervised estimation of Ising graphical models.

The package fits an Ising model for a vector of binary outcomes from a
small labeled sample, then sharpens it with a large unlabeled sample by
projecting the supervised estimator's score onto auxiliary features through
a conditional outcome model (an augmented Ising model or post-hoc surrogate
densities).  Refinements include intrinsic-efficient tuning of the
conditional model, a variance-optimal ensemble, and a density-ratio
weighting baseline for comparison.
"""

from .conditional import AugParams, PosParams, fit_aug, fit_pos, project_score
from .estimators import (
    DensityRatioIsing,
    EnsembleIsing,
    ScissIsing,
    SupervisedIsing,
    check_semisupervised,
)
from .exceptions import (
    ConvergenceError,
    DegenerateSurrogateError,
    DimensionError,
    EmptyLabeledError,
    EmptyUnlabeledError,
    EnumerationLimitError,
    InvalidMechanismError,
    NumericalUnderflowError,
    ParseError,
    SchemaError,
    ScissError,
    SingularCovarianceError,
    SingularMatrixError,
)
from .ising import IsingParams, conditional_logodds, enumerate_configs, joint_pmf, sample
from .io import Dataset, parse_dataset, read_report, write_dataset, write_report
from .pipeline import fit_methods
from .report import EstimateReport
from .semisupervised import two_sample_contrast
from .simulate import PRESETS, SimConfig, SimSummary, generate, preset_config, run
from .solvers import SolverConfig, finite_diff_grad, newton_root, solve_linear
from .supervised import fit_node_logistic, fit_sl, score_rows, var_sl

__version__ = "0.1.0"

__all__ = [
    "AugParams",
    "ConvergenceError",
    "Dataset",
    "DegenerateSurrogateError",
    "DensityRatioIsing",
    "DimensionError",
    "EmptyLabeledError",
    "EmptyUnlabeledError",
    "EnsembleIsing",
    "EnumerationLimitError",
    "EstimateReport",
    "InvalidMechanismError",
    "IsingParams",
    "NumericalUnderflowError",
    "ParseError",
    "PosParams",
    "PRESETS",
    "SchemaError",
    "ScissError",
    "ScissIsing",
    "SimConfig",
    "SimSummary",
    "SingularCovarianceError",
    "SingularMatrixError",
    "SolverConfig",
    "SupervisedIsing",
    "check_semisupervised",
    "conditional_logodds",
    "enumerate_configs",
    "finite_diff_grad",
    "fit_aug",
    "fit_methods",
    "fit_node_logistic",
    "fit_pos",
    "fit_sl",
    "generate",
    "joint_pmf",
    "newton_root",
    "parse_dataset",
    "preset_config",
    "project_score",
    "read_report",
    "run",
    "sample",
    "score_rows",
    "solve_linear",
    "two_sample_contrast",
    "var_sl",
    "write_dataset",
    "write_report",
]
