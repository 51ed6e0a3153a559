"""Weak-to-strong generalization lab for ridgeless and ridge linear probing.

Modules
-------
linalg    minimum-norm and ridge solvers, seeded random matrices
features  synthetic task, feature covariances and dataset sampling
pipeline  weak teacher, W2S student, strong SFT baseline and ceiling fits
risk      Monte-Carlo excess risk with variance/bias split, PGR and OPR
theory    closed-form variances, PGR/OPR bounds, ridge bound
dims      intrinsic, correlation and sketched correlation dimensions
harness   sweeps, CSV/SVG output and the ``w2slab`` command line
"""

from .linalg import SolverConfig, make_rng, min_norm_solve, ridge_solve, solve
from .features import (CovarianceSpec, Dataset, SyntheticConfig, TaskSpec, build_synthetic,
                       ft_approx_error, population_approx_error, sample_dataset)
from .pipeline import MODELS, FitPlan, run_pipeline
from .risk import RiskEstimate, RiskSetup, estimate_risk, estimate_risks, metric_pair, opr, pgr, run_trials

__version__ = "0.1.0"

__all__ = [
    "SolverConfig", "make_rng", "min_norm_solve", "ridge_solve", "solve",
    "CovarianceSpec", "Dataset", "SyntheticConfig", "TaskSpec", "build_synthetic",
    "ft_approx_error", "population_approx_error", "sample_dataset",
    "MODELS", "FitPlan", "run_pipeline",
    "RiskEstimate", "RiskSetup", "estimate_risk", "estimate_risks", "metric_pair", "opr", "pgr", "run_trials",
]
