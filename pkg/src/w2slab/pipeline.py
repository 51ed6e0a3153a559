"""The four finetuning procedures and the end-to-end weak-to-strong run.

* weak teacher: fit on the weak features of the labeled set ``S~``
* W2S student: fit on the strong features of ``S`` against teacher pseudo-labels
* strong SFT baseline: fit on the strong features of ``S~``
* strong ceiling: fit on the strong features of ``S~ u S`` with true labels

Every fit is linear in its label vector. The fitting functions accept an
explicit ``labels`` array (vector or ``(m, k)`` block) so callers can push
several label variants (noisy, noiseless, pure noise) through a single
factorisation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Union

import numpy as np

from .features import CovarianceSpec, Dataset, Frame, TaskSpec, sample_dataset, support_frame
from .linalg import SeedLike, SolverConfig, make_rng, solve

__all__ = [
    "FitCoefficients",
    "FitPlan",
    "PipelineRun",
    "fit_weak",
    "pseudo_label",
    "fit_w2s",
    "fit_strong_sft",
    "fit_ceiling",
    "run_pipeline",
    "MODELS",
]

MODELS = ("weak", "w2s", "strong_sft", "ceiling")


@dataclass(frozen=True, eq=False)
class FitCoefficients:
    """Linear head in frame coordinates plus which feature view it reads."""

    theta: np.ndarray
    which_features: str
    solver: SolverConfig

    def __post_init__(self):
        if self.which_features not in ("weak", "strong"):
            raise ValueError(f"unknown feature tag {self.which_features!r}")
        if not np.all(np.isfinite(self.theta)):
            raise ValueError("fit produced non-finite coefficients")

    def predict(self, data: Dataset) -> np.ndarray:
        feats = data.weak_features if self.which_features == "weak" else data.strong_features
        return feats @ self.theta

    def ambient_theta(self, frame: Frame) -> np.ndarray:
        return frame.lift(self.theta)


@dataclass(frozen=True)
class FitPlan:
    """Solver settings for each of the four fits."""

    weak: SolverConfig = SolverConfig()
    w2s: SolverConfig = SolverConfig()
    strong_sft: SolverConfig = SolverConfig()
    ceiling: SolverConfig = SolverConfig()

    @classmethod
    def uniform(cls, cfg: SolverConfig) -> "FitPlan":
        return cls(cfg, cfg, cfg, cfg)

    @classmethod
    def coerce(cls, cfg: Union["FitPlan", SolverConfig, None]) -> "FitPlan":
        if cfg is None:
            return cls()
        if isinstance(cfg, SolverConfig):
            return cls.uniform(cfg)
        return cfg


def _labels(data: Dataset, labels) -> np.ndarray:
    y = data.noisy_labels if labels is None else np.asarray(labels, dtype=np.float64)
    if y.shape[0] != data.size:
        raise ValueError(f"{y.shape[0]} labels for a dataset of {data.size} rows")
    return y


def fit_weak(labeled: Dataset, cfg: SolverConfig = SolverConfig(), labels=None) -> FitCoefficients:
    if labeled.size < 1:
        raise ValueError("the labeled set is empty")
    theta = solve(labeled.weak_features, _labels(labeled, labels), cfg)
    return FitCoefficients(theta, "weak", cfg)


def pseudo_label(teacher: FitCoefficients, unlabeled: Dataset) -> np.ndarray:
    """Teacher outputs ``Phi_w theta_w`` on the unlabeled set."""
    if teacher.which_features != "weak":
        raise ValueError("pseudo-labels must come from a weak-feature teacher")
    return unlabeled.weak_features @ teacher.theta


def fit_w2s(unlabeled: Dataset, pseudo, cfg: SolverConfig = SolverConfig()) -> FitCoefficients:
    if unlabeled.size < 1:
        raise ValueError("the unlabeled set is empty")
    pseudo = np.asarray(pseudo, dtype=np.float64)
    if pseudo.shape[0] != unlabeled.size:
        raise ValueError("one pseudo-label per unlabeled row is required")
    return FitCoefficients(solve(unlabeled.strong_features, pseudo, cfg), "strong", cfg)


def fit_strong_sft(labeled: Dataset, cfg: SolverConfig = SolverConfig(), labels=None) -> FitCoefficients:
    if labeled.size < 1:
        raise ValueError("the labeled set is empty")
    theta = solve(labeled.strong_features, _labels(labeled, labels), cfg)
    return FitCoefficients(theta, "strong", cfg)


def fit_ceiling(labeled: Dataset, unlabeled_with_true_labels: Dataset,
                cfg: SolverConfig = SolverConfig(), labels=None) -> FitCoefficients:
    """Strong fit on the concatenated ``(n + N)`` design.

    ``labels``, when given, covers the concatenation (labeled rows first).
    """
    both = labeled.concat(unlabeled_with_true_labels)
    theta = solve(both.strong_features, _labels(both, labels), cfg)
    return FitCoefficients(theta, "strong", cfg)


@dataclass(frozen=True, eq=False)
class PipelineRun:
    labeled_set: Dataset
    unlabeled_set: Dataset
    fits: Dict[str, FitCoefficients]

    @property
    def test_set(self) -> Dataset:
        """Evaluation set of the weak, W2S and SFT models (the W2S sample ``S``)."""
        return self.unlabeled_set

    @property
    def ceiling_test_set(self) -> Dataset:
        return self.labeled_set.concat(self.unlabeled_set)


def draw_sets(task: TaskSpec, cov_s: CovarianceSpec, cov_w: CovarianceSpec, n: int, N: int,
              seed: SeedLike, latent: str = "gaussian", frame: Optional[Frame] = None):
    """Independent labeled (``n``) and unlabeled (``N``) samples for one run."""
    if frame is None:
        frame = support_frame(task, cov_s, cov_w, latent=latent)
    labeled = sample_dataset(task, cov_s, cov_w, n, make_rng(seed, 0), latent, frame)
    unlabeled = sample_dataset(task, cov_s, cov_w, N, make_rng(seed, 1), latent, frame)
    return labeled, unlabeled


def run_pipeline(task: TaskSpec, cov_s: CovarianceSpec, cov_w: CovarianceSpec, n: int, N: int,
                 cfg: Union[FitPlan, SolverConfig, None] = None, seed: SeedLike = 0,
                 latent: str = "gaussian", frame: Optional[Frame] = None) -> PipelineRun:
    if n < 1 or N < 1:
        raise ValueError("both sample sizes must be at least 1")
    plan = FitPlan.coerce(cfg)
    labeled, unlabeled = draw_sets(task, cov_s, cov_w, n, N, seed, latent, frame)
    weak = fit_weak(labeled, plan.weak)
    fits = {
        "weak": weak,
        "w2s": fit_w2s(unlabeled, pseudo_label(weak, unlabeled), plan.w2s),
        "strong_sft": fit_strong_sft(labeled, plan.strong_sft),
        "ceiling": fit_ceiling(labeled, unlabeled, plan.ceiling),
    }
    return PipelineRun(labeled, unlabeled, fits)
