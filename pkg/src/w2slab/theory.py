"""Closed-form predictions: Gaussian-case variances, PGR/OPR lower bounds and
their optimal labeled-sample sizes, and the ridge-regression W2S bound.

Throughout, ``q = n - d_w - 1`` and ``d_w2s(N) = d_sw + (d_w - d_sw) d_s / N``
is the effective variance dimension of the W2S model. The unspecified
constant in front of ``rho_w`` in the bias bounds is exposed as ``c`` and
defaults to 1; values computed with it are heuristic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

__all__ = [
    "UndefinedPrediction",
    "DimProfile",
    "RidgeProfile",
    "BiasBounds",
    "OptimalQ",
    "RidgeBound",
    "OptimalRidge",
    "d_w2s",
    "varrho",
    "var_w2s",
    "var_weak",
    "var_strong_sft",
    "var_ceiling",
    "bias_bounds",
    "pgr_lower",
    "opr_lower",
    "pgr_lower_tight",
    "opr_lower_tight",
    "optimal_q",
    "ridge_bound",
    "optimal_ridge_alphas",
    "alignment_norm",
    "ridge_profile",
    "dim_profile",
]


class UndefinedPrediction(ValueError):
    """A closed form is evaluated outside its domain (e.g. ``n <= d_w + 1``)."""


@dataclass(frozen=True)
class DimProfile:
    d_s: int
    d_w: int
    d_overlap: float
    n: int
    N: int
    sigma2: float
    rho_s: float = 0.0
    rho_w: float = 0.0
    c: float = 1.0

    def __post_init__(self):
        if self.d_s < 0 or self.d_w < 0:
            raise ValueError("intrinsic dimensions must be nonnegative")
        if not (0.0 <= self.d_overlap <= min(self.d_s, self.d_w) + 1e-9):
            raise ValueError(f"d_overlap={self.d_overlap} outside [0, min(d_s, d_w)]")
        if self.n < 1 or self.N < 1:
            raise ValueError("sample sizes must be at least 1")
        if self.sigma2 < 0 or self.rho_s < 0 or self.rho_w < 0 or self.c < 0:
            raise ValueError("noise level, approximation errors and c must be nonnegative")

    @property
    def q(self) -> int:
        return self.n - self.d_w - 1

    def with_q(self, q: int) -> "DimProfile":
        return replace(self, n=self.d_w + 1 + q)


def d_w2s(p: DimProfile) -> float:
    return p.d_overlap + (p.d_w - p.d_overlap) * p.d_s / p.N


def varrho(p: DimProfile) -> float:
    """``(c rho_w + rho_s) / sigma^2``."""
    num = p.c * p.rho_w + p.rho_s
    if p.sigma2 == 0:
        if num == 0:
            return 0.0
        raise UndefinedPrediction("varrho is infinite without label noise")
    return num / p.sigma2


def _require_gap(n: int, dim: int, who: str):
    if n <= dim + 1:
        raise UndefinedPrediction(f"{who} needs n > {dim} + 1, got n = {n}")


def var_w2s(p: DimProfile) -> float:
    _require_gap(p.n, p.d_w, "Var(f_w2s)")
    return p.sigma2 / (p.n - p.d_w - 1) * d_w2s(p)


def var_weak(p: DimProfile) -> float:
    _require_gap(p.n, p.d_w, "Var(f_w)")
    return p.sigma2 * p.d_w / (p.n - p.d_w - 1)


def var_strong_sft(p: DimProfile) -> float:
    _require_gap(p.n, p.d_s, "Var(f_s)")
    return p.sigma2 * p.d_s / (p.n - p.d_s - 1)


def var_ceiling(p: DimProfile) -> float:
    return p.sigma2 * p.d_s / (p.N + p.n)


@dataclass(frozen=True)
class BiasBounds:
    bias_w2s_ub: float
    bias_w_ub: float
    bias_s_ub: float
    bias_c_ub: float
    heuristic: bool = True


def bias_bounds(p: DimProfile) -> BiasBounds:
    """Upper bounds with ``c rho_w`` standing in for the weak/SFT hidden constants."""
    return BiasBounds(
        bias_w2s_ub=p.c * p.rho_w + p.rho_s,
        bias_w_ub=p.c * p.rho_w,
        bias_s_ub=p.c * p.rho_s,
        bias_c_ub=p.rho_s,
    )


def _require_q(p: DimProfile) -> int:
    if p.q < 1:
        raise UndefinedPrediction(f"the PGR/OPR bounds need q = n - d_w - 1 >= 1, got {p.q}")
    return p.q


def pgr_lower(p: DimProfile) -> float:
    q = _require_q(p)
    return 1.0 - d_w2s(p) / p.d_w - q / p.d_w * varrho(p)


def opr_lower(p: DimProfile) -> float:
    q = _require_q(p)
    return 1.0 / (p.n / q * d_w2s(p) / p.d_s + p.n / p.d_s * varrho(p))


def pgr_lower_tight(p: DimProfile, bias_w: Optional[float] = None) -> float:
    """PGR bound before relaxation, with the teacher bias kept explicit.

    ``(sigma^2 (d_w - d_w2s)/q - rho_s) / (sigma^2 d_w/q + bias_w - sigma^2 d_s/(N+n) - rho_s)``;
    ``bias_w`` defaults to ``c rho_w``.
    """
    q = _require_q(p)
    if bias_w is None:
        bias_w = p.c * p.rho_w
    if not math.isfinite(bias_w) or bias_w < 0:
        raise ValueError("bias_w must be finite and nonnegative")
    num = p.sigma2 * (p.d_w - d_w2s(p)) / q - p.rho_s
    den = p.sigma2 * p.d_w / q + bias_w - var_ceiling(p) - p.rho_s
    if den <= 0:
        raise UndefinedPrediction("nonpositive denominator in the tight PGR bound")
    return num / den


def opr_lower_tight(p: DimProfile) -> float:
    q = _require_q(p)
    den = p.sigma2 * d_w2s(p) / q + p.c * p.rho_w + p.rho_s
    if den <= 0:
        raise UndefinedPrediction("nonpositive denominator in the tight OPR bound")
    return var_strong_sft(p) / den


@dataclass(frozen=True)
class OptimalQ:
    q_pgr: int
    pgr_at_opt: float
    q_opr: float
    opr_at_opt: float


def optimal_q(p: DimProfile) -> OptimalQ:
    """Maximisers over ``q`` of the simple PGR/OPR bounds and the optimal values.

    ``q_opr`` is the continuous optimum ``sqrt((d_w + 1) d_w2s / varrho)``.
    """
    dw2s = d_w2s(p)
    rho = varrho(p)
    if rho <= 0:
        raise UndefinedPrediction("varrho = 0: the OPR bound increases without limit in q")
    q_opr = math.sqrt((p.d_w + 1) * dw2s / rho)
    opr_opt = p.d_s / (math.sqrt(dw2s) + math.sqrt(rho * (p.d_w + 1))) ** 2
    return OptimalQ(q_pgr=0, pgr_at_opt=1.0 - dw2s / p.d_w, q_opr=q_opr, opr_at_opt=opr_opt)


@dataclass(frozen=True)
class RidgeProfile:
    tr_ss: float
    tr_sw: float
    tr_cross: float
    varrho_s: float
    varrho_w: float
    n: int
    N: int
    sigma2: float
    alpha_w: Optional[float] = None
    alpha_w2s: Optional[float] = None

    def __post_init__(self):
        if min(self.tr_ss, self.tr_sw, self.tr_cross) <= 0:
            raise ValueError("all traces must be positive")
        if self.varrho_s < 0 or self.varrho_w < 0 or self.sigma2 < 0:
            raise ValueError("alignment norms and noise level must be nonnegative")
        if self.n < 1 or self.N < 1:
            raise ValueError("sample sizes must be at least 1")

    def variance_constant(self) -> float:
        """``(1 + 1/N) tr(S_s S_w) + tr(S_s) tr(S_w) / N``."""
        return (1.0 + 1.0 / self.N) * self.tr_cross + self.tr_ss * self.tr_sw / self.N

    def cross_trace_headroom(self, op_norm_s: float, op_norm_w: float) -> float:
        """``min(tr_ss ||S_w||, tr_sw ||S_s||) - tr_cross``; negative means inconsistent inputs."""
        return min(self.tr_ss * op_norm_w, self.tr_sw * op_norm_s) - self.tr_cross


@dataclass(frozen=True)
class RidgeBound:
    var_ub: float
    bias_ub: float
    er_ub: float


def ridge_bound(r: RidgeProfile) -> RidgeBound:
    if r.alpha_w is None or r.alpha_w2s is None or r.alpha_w <= 0 or r.alpha_w2s <= 0:
        raise ValueError("ridge_bound needs positive alpha_w and alpha_w2s")
    var_ub = r.sigma2 / (4.0 * (r.alpha_w * r.n) * (r.alpha_w2s * r.N)) * r.variance_constant()
    bias_ub = r.alpha_w * r.varrho_w + r.alpha_w2s * r.varrho_s
    return RidgeBound(var_ub, bias_ub, var_ub + bias_ub)


@dataclass(frozen=True)
class OptimalRidge:
    alpha_w: float
    alpha_w2s: float
    er_opt: float


def optimal_ridge_alphas(r: RidgeProfile) -> OptimalRidge:
    """Regularisers minimising the ridge excess-risk bound (full variance constant)."""
    if r.varrho_s <= 0 or r.varrho_w <= 0:
        raise UndefinedPrediction("optimal regularisers need positive alignment norms")
    base = r.sigma2 / (4.0 * r.n * r.N) * r.variance_constant()
    alpha_w = (base * r.varrho_s / r.varrho_w ** 2) ** (1.0 / 3.0)
    alpha_w2s = (base * r.varrho_w / r.varrho_s ** 2) ** (1.0 / 3.0)
    er_opt = 3.0 * (base * r.varrho_s * r.varrho_w) ** (1.0 / 3.0)
    return OptimalRidge(alpha_w, alpha_w2s, er_opt)


def alignment_norm(task, cov) -> float:
    """``||Sigma^{-1/2} Sigma_*^{1/2} theta_*||^2`` (pseudo-inverse on ``range(Sigma)``).

    Infinite when part of the signal falls outside ``range(Sigma)``.
    """
    sig = task.signal()
    coef = cov.basis.T @ sig
    resid = sig - cov.basis @ coef
    if float(resid @ resid) > 1e-12 * max(float(sig @ sig), 1e-300):
        return math.inf
    return float(np.sum(coef ** 2 / cov.eigenvalues))


def ridge_profile(task, cov_s, cov_w, n: int, N: int, alpha_w: Optional[float] = None,
                  alpha_w2s: Optional[float] = None) -> RidgeProfile:
    """Traces and alignment norms of a synthetic setup, computed from the population covariances alone."""
    s_mat, w_mat = cov_s.matrix(), cov_w.matrix()
    return RidgeProfile(
        tr_ss=cov_s.trace(),
        tr_sw=cov_w.trace(),
        tr_cross=float(np.sum(s_mat * w_mat)),
        varrho_s=alignment_norm(task, cov_s),
        varrho_w=alignment_norm(task, cov_w),
        n=n, N=N, sigma2=task.noise_variance,
        alpha_w=alpha_w, alpha_w2s=alpha_w2s,
    )


def dim_profile(task, cov_s, cov_w, n: int, N: int, c: float = 1.0) -> DimProfile:
    """Ridgeless profile with exact ``rho``'s and correlation dimension from the population covariances."""
    from .features import population_approx_error

    overlap = float(np.sum((cov_s.basis.T @ cov_w.basis) ** 2))
    overlap = min(max(overlap, 0.0), float(min(cov_s.rank, cov_w.rank)))
    return DimProfile(
        d_s=cov_s.rank, d_w=cov_w.rank, d_overlap=overlap, n=n, N=N,
        sigma2=task.noise_variance,
        rho_s=population_approx_error(task, cov_s),
        rho_w=population_approx_error(task, cov_w),
        c=c,
    )
