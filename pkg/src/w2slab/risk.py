"""Monte-Carlo excess risk with an exact variance/bias split, plus PGR and OPR.

For an estimator that is linear in its labels, the conditional mean over the
label noise given the design equals the same fit run on the noiseless
labels. Each trial therefore pushes the block ``[noisy, clean, noise]`` through
one factorisation and reads off

    variance = mean_test (f_noisy - f_clean)^2
    bias     = mean_test (f_clean - f*)^2

with the third column checking that ``f_noisy - f_clean == f(noise)``.
The reported excess risk is ``variance + bias`` per trial.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional

import numpy as np

from .features import CovarianceSpec, Frame, TaskSpec, support_frame
from .linalg import SeedLike, solve
from .pipeline import MODELS, FitPlan, draw_sets

__all__ = [
    "LinearityError",
    "RiskEstimate",
    "RiskSetup",
    "TrialTable",
    "MetricPair",
    "decompose_trial",
    "trial_decomposition",
    "run_trials",
    "estimate_risks",
    "estimate_risk",
    "pgr",
    "opr",
    "metric_pair",
]


class LinearityError(RuntimeError):
    """The fit procedure is not linear in its labels."""


@dataclass(frozen=True)
class RiskEstimate:
    excess_risk: float
    variance: float
    bias: float
    trials: int
    excess_risk_se: float
    variance_se: float
    bias_se: float

    @classmethod
    def from_samples(cls, var_samples, bias_samples) -> "RiskEstimate":
        var_samples = np.asarray(var_samples, dtype=np.float64)
        bias_samples = np.asarray(bias_samples, dtype=np.float64)
        er_samples = var_samples + bias_samples
        t = var_samples.size
        if t < 2:
            raise ValueError("at least two trials are needed for a standard error")

        def se(x):
            return float(np.std(x, ddof=1) / np.sqrt(t))

        return cls(float(er_samples.mean()), float(var_samples.mean()), float(bias_samples.mean()), t,
                   se(er_samples), se(var_samples), se(bias_samples))


@dataclass(frozen=True, eq=False)
class RiskSetup:
    """Everything one Monte-Carlo trial needs besides its seed."""

    task: TaskSpec
    cov_s: CovarianceSpec
    cov_w: CovarianceSpec
    n: int
    N: int
    plan: FitPlan = FitPlan()
    latent: str = "gaussian"
    frame: Optional[Frame] = field(default=None, repr=False)

    def __post_init__(self):
        if self.n < 1 or self.N < 1:
            raise ValueError("both sample sizes must be at least 1")
        if self.frame is None:
            frame = support_frame(self.task, self.cov_s, self.cov_w, latent=self.latent)
            object.__setattr__(self, "frame", frame)


def decompose_trial(predict: Callable[[np.ndarray], np.ndarray], noisy_labels, clean_labels, target,
                    check_linearity: bool = True, rtol: float = 1e-8):
    """Variance and bias contributions of one design draw.

    ``predict`` maps a label vector or an ``(m, k)`` label block to test-set
    predictions. Returns ``(var_contrib, bias_contrib)``.
    """
    noisy = np.asarray(noisy_labels, dtype=np.float64)
    clean = np.asarray(clean_labels, dtype=np.float64)
    cols = [noisy, clean]
    if check_linearity:
        cols.append(noisy - clean)
    preds = np.asarray(predict(np.column_stack(cols)))
    f_noisy, f_clean = preds[:, 0], preds[:, 1]
    diff = f_noisy - f_clean
    if check_linearity:
        scale = max(np.abs(preds).max(initial=0.0), 1.0)
        if not np.allclose(diff, preds[:, 2], rtol=0.0, atol=rtol * scale):
            raise LinearityError("fit output does not split as f(clean) + f(noise)")
    target = np.asarray(target, dtype=np.float64)
    return float(np.mean(diff ** 2)), float(np.mean((f_clean - target) ** 2))


def trial_decomposition(setup: RiskSetup, seed: SeedLike, check_linearity: bool = True) -> Dict[str, tuple]:
    """One joint draw of ``(S~, S, noise)``; returns ``{model: (var, bias)}``.

    Test policy: ``S`` for the weak, W2S and SFT models; ``S~ u S`` for the
    ceiling.
    """
    labeled, unlabeled = draw_sets(setup.task, setup.cov_s, setup.cov_w, setup.n, setup.N,
                                   seed, setup.latent, setup.frame)
    plan = setup.plan

    def weak_pred(y):
        return unlabeled.weak_features @ solve(labeled.weak_features, y, plan.weak)

    def w2s_pred(y):
        pseudo = weak_pred(y)
        return unlabeled.strong_features @ solve(unlabeled.strong_features, pseudo, plan.w2s)

    def sft_pred(y):
        return unlabeled.strong_features @ solve(labeled.strong_features, y, plan.strong_sft)

    both = labeled.concat(unlabeled)

    def ceiling_pred(y):
        return both.strong_features @ solve(both.strong_features, y, plan.ceiling)

    out = {}
    for name, fn in (("weak", weak_pred), ("w2s", w2s_pred), ("strong_sft", sft_pred)):
        out[name] = decompose_trial(fn, labeled.noisy_labels, labeled.clean_labels,
                                    unlabeled.clean_labels, check_linearity)
    out["ceiling"] = decompose_trial(ceiling_pred, both.noisy_labels, both.clean_labels,
                                     both.clean_labels, check_linearity)
    return out


@dataclass(frozen=True, eq=False)
class TrialTable:
    """Per-trial variance and bias for each model, trials in seed order."""

    variance: Dict[str, np.ndarray]
    bias: Dict[str, np.ndarray]

    @property
    def trials(self) -> int:
        return next(iter(self.variance.values())).size

    def excess_risk(self, model: str) -> np.ndarray:
        return self.variance[model] + self.bias[model]

    def estimate(self, model: str) -> RiskEstimate:
        return RiskEstimate.from_samples(self.variance[model], self.bias[model])

    def estimates(self) -> Dict[str, RiskEstimate]:
        return {m: self.estimate(m) for m in self.variance}


def _trial_chunk(args):
    setup, seed, indices, check = args
    return [trial_decomposition(setup, (*_seed_tuple(seed), int(t)), check) for t in indices]


def _seed_tuple(seed) -> tuple:
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(s) for s in seed)


def run_trials(setup: RiskSetup, trials: int, seed: SeedLike = 0, workers: int = 1,
               check_linearity: bool = True) -> TrialTable:
    """Trial ``t`` uses seed ``(*seed, t)``, so results do not depend on ``workers``."""
    if trials < 2:
        raise ValueError("at least two trials are required")
    idx = np.arange(trials)
    if workers > 1:
        chunks = [c for c in np.array_split(idx, workers * 4) if c.size]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_trial_chunk, [(setup, seed, c, check_linearity) for c in chunks]))
        records = [r for part in parts for r in part]
    else:
        records = _trial_chunk((setup, seed, idx, check_linearity))
    var = {m: np.array([r[m][0] for r in records]) for m in MODELS}
    bias = {m: np.array([r[m][1] for r in records]) for m in MODELS}
    return TrialTable(var, bias)


def estimate_risks(setup: RiskSetup, trials: int = 40, seed: SeedLike = 0, workers: int = 1) -> Dict[str, RiskEstimate]:
    return run_trials(setup, trials, seed, workers).estimates()


def estimate_risk(setup: RiskSetup, model_choice: str, trials: int = 40, seed: SeedLike = 0) -> RiskEstimate:
    if model_choice not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got {model_choice!r}")
    return run_trials(setup, trials, seed).estimate(model_choice)


def pgr(er_w: float, er_w2s: float, er_c: float) -> float:
    """Performance gap recovery ``(ER_w - ER_w2s) / (ER_w - ER_c)``."""
    denom = er_w - er_c
    if denom == 0:
        raise ZeroDivisionError("PGR is undefined when ER(f_w) == ER(f_c)")
    return (er_w - er_w2s) / denom


def opr(er_s: float, er_w2s: float) -> float:
    """Outperforming ratio ``ER_s / ER_w2s``."""
    if er_w2s == 0:
        raise ZeroDivisionError("OPR is undefined when ER(f_w2s) == 0")
    return er_s / er_w2s


@dataclass(frozen=True)
class MetricPair:
    pgr: float
    opr: float
    pgr_se: float = float("nan")
    opr_se: float = float("nan")


def metric_pair(table: TrialTable) -> MetricPair:
    """PGR/OPR of the trial means with delta-method standard errors.

    Trials are paired across models, so the errors use the per-trial
    linearisation of each ratio.
    """
    w, s2, s, c = (table.excess_risk(m) for m in ("weak", "w2s", "strong_sft", "ceiling"))
    t = w.size
    g = pgr(w.mean(), s2.mean(), c.mean())
    o = opr(s.mean(), s2.mean())
    g_lin = ((w - s2) - g * (w - c)) / (w.mean() - c.mean())
    o_lin = (s - o * s2) / s2.mean()
    return MetricPair(float(g), float(o), float(np.std(g_lin, ddof=1) / np.sqrt(t)),
                      float(np.std(o_lin, ddof=1) / np.sqrt(t)))
