"""Synthetic downstream task, weak/strong feature models and dataset sampling.

Every sample starts from an isotropic latent vector ``x`` in ``R^d``. The
strong and weak features are ``Sigma_s^{1/2} x`` and ``Sigma_w^{1/2} x`` and the
clean label is ``x @ Sigma_*^{1/2} theta_*``, so both feature views of a row
share the same latent draw.

Only the coordinates of ``x`` inside the joint support of the three
covariances influence anything, so datasets are sampled in a compact frame
``U`` (``d x k`` with orthonormal columns) and carry it along; the
``ambient_*`` properties rebuild the full ``d``-dimensional matrices on
demand. For a Gaussian latent any orthonormal frame is exact; for other
i.i.d. latents only coordinate-subset frames are used.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .linalg import SeedLike, make_rng, min_norm_solve

__all__ = [
    "CovarianceSpec",
    "TaskSpec",
    "SyntheticConfig",
    "Frame",
    "Dataset",
    "population_approx_error",
    "inverse_index_spectrum",
    "build_synthetic",
    "support_frame",
    "sample_dataset",
    "ft_approx_error",
    "signal_variance",
]

_ORTHO_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class CovarianceSpec:
    """``Sigma = V diag(eigenvalues) V^T`` with ``V`` of shape ``(d, r)``."""

    eigenvalues: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=np.float64).reshape(-1)
        v = np.asarray(self.basis, dtype=np.float64)
        if v.ndim != 2 or v.shape[1] != lam.size:
            raise ValueError(f"basis shape {v.shape} does not match {lam.size} eigenvalues")
        if v.shape[1] > v.shape[0]:
            raise ValueError("rank cannot exceed the ambient dimension")
        if np.any(lam < 0) or np.any(np.diff(lam) > 1e-12 * max(1.0, float(lam.max(initial=0.0)))):
            raise ValueError("eigenvalues must be nonnegative and nonincreasing")
        gram_err = np.linalg.norm(v.T @ v - np.eye(v.shape[1]))
        if gram_err > _ORTHO_TOL:
            raise ValueError(f"basis columns are not orthonormal (||V^T V - I||_F = {gram_err:.2e})")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "basis", v)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues > 0))

    def matrix(self) -> np.ndarray:
        return (self.basis * self.eigenvalues) @ self.basis.T

    def sqrt_matrix(self) -> np.ndarray:
        return (self.basis * np.sqrt(self.eigenvalues)) @ self.basis.T

    def trace(self) -> float:
        return float(self.eigenvalues.sum())


@dataclass(frozen=True, eq=False)
class TaskSpec:
    """Ground truth ``f*(x) = x^T Sigma_*^{1/2} theta_*`` plus Gaussian label noise."""

    eigenvalues: np.ndarray
    basis: np.ndarray
    theta_star: np.ndarray
    noise_variance: float

    def __post_init__(self):
        gt = CovarianceSpec(self.eigenvalues, self.basis)
        theta = np.asarray(self.theta_star, dtype=np.float64).reshape(-1)
        if theta.size != gt.ambient_dim:
            raise ValueError("theta_star length must equal the ambient dimension")
        if abs(np.linalg.norm(theta) - 1.0) > 1e-10:
            raise ValueError("theta_star must be a unit vector")
        if not self.noise_variance >= 0:
            raise ValueError("noise variance must be nonnegative")
        object.__setattr__(self, "eigenvalues", gt.eigenvalues)
        object.__setattr__(self, "basis", gt.basis)
        object.__setattr__(self, "theta_star", theta)
        object.__setattr__(self, "noise_variance", float(self.noise_variance))

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def covariance(self) -> CovarianceSpec:
        return CovarianceSpec(self.eigenvalues, self.basis)

    def signal(self) -> np.ndarray:
        """``Sigma_*^{1/2} theta_*``; clean labels are ``x @ signal``."""
        coef = np.sqrt(self.eigenvalues) * (self.basis.T @ self.theta_star)
        return self.basis @ coef

    def with_noise(self, noise_variance: float) -> "TaskSpec":
        return TaskSpec(self.eigenvalues, self.basis, self.theta_star, noise_variance)


def signal_variance(task: TaskSpec) -> float:
    """``E[f*(x)^2]`` for an isotropic latent."""
    return float(np.sum(task.signal() ** 2))


@dataclass(frozen=True)
class SyntheticConfig:
    """Canonical-coordinate construction of the synthetic regression task.

    The ground truth uses coordinates ``1..d_star`` with eigenvalues
    ``lambda_i``; the strong model covers ``1..d_s`` and the weak model the
    window ``d_s - d_overlap + 1 .. d_s - d_overlap + d_w`` (1-based), so the
    correlation dimension is exactly ``d_overlap``.
    """

    d: int = 400
    d_star: int = 60
    d_s: int = 20
    d_w: int = 40
    d_overlap: int = 2
    sigma2: float = 0.01
    eigenvalue_profile: Union[str, Sequence[float]] = "inverse_index"

    def __post_init__(self):
        ints = dict(d=self.d, d_star=self.d_star, d_s=self.d_s, d_w=self.d_w, d_overlap=self.d_overlap)
        for name, val in ints.items():
            if int(val) != val or val < 0:
                raise ValueError(f"{name} must be a nonnegative integer, got {val}")
        if self.d_overlap > min(self.d_s, self.d_w):
            raise ValueError("d_overlap cannot exceed min(d_s, d_w)")
        if self.d_s + self.d_w - self.d_overlap > self.d_star:
            raise ValueError(
                f"infeasible overlap geometry: d_s + d_w - d_overlap = "
                f"{self.d_s + self.d_w - self.d_overlap} exceeds d_star = {self.d_star}"
            )
        if self.d_star > self.d:
            raise ValueError("d_star cannot exceed d")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        if not isinstance(self.eigenvalue_profile, str):
            object.__setattr__(self, "eigenvalue_profile", tuple(float(v) for v in self.eigenvalue_profile))
            if len(self.eigenvalue_profile) != self.d_star:
                raise ValueError("a custom eigenvalue profile needs exactly d_star entries")
        elif self.eigenvalue_profile != "inverse_index":
            raise ValueError(f"unknown eigenvalue profile {self.eigenvalue_profile!r}")

    def spectrum(self) -> np.ndarray:
        if self.eigenvalue_profile == "inverse_index":
            return inverse_index_spectrum(self.d_star)
        lam = np.asarray(self.eigenvalue_profile, dtype=np.float64)
        if np.any(lam <= 0) or np.any(np.diff(lam) > 0):
            raise ValueError("custom eigenvalues must be positive and nonincreasing")
        return lam

    @property
    def weak_offset(self) -> int:
        """0-based index of the first weak coordinate."""
        return self.d_s - self.d_overlap


def inverse_index_spectrum(k: int) -> np.ndarray:
    return 1.0 / np.arange(1, k + 1, dtype=np.float64)


def _coordinate_basis(d: int, start: int, count: int) -> np.ndarray:
    v = np.zeros((d, count))
    v[start + np.arange(count), np.arange(count)] = 1.0
    return v


def build_synthetic(config: SyntheticConfig, seed: SeedLike):
    """Return ``(task, cov_s, cov_w)`` for ``config``; only ``theta_*`` is random."""
    lam = config.spectrum()
    d = config.d
    task_basis = _coordinate_basis(d, 0, config.d_star)
    theta = make_rng(seed).standard_normal(d)
    theta /= np.linalg.norm(theta)
    task = TaskSpec(lam, task_basis, theta, config.sigma2)
    cov_s = CovarianceSpec(lam[: config.d_s], _coordinate_basis(d, 0, config.d_s))
    off = config.weak_offset
    cov_w = CovarianceSpec(lam[off: off + config.d_w], _coordinate_basis(d, off, config.d_w))
    return task, cov_s, cov_w


@dataclass(frozen=True, eq=False)
class Frame:
    """Orthonormal ``d x k`` frame holding every direction the task touches.

    ``rows`` is set when the frame is a coordinate subset (columns of the
    identity), which keeps it exact for any i.i.d. latent distribution.
    """

    basis: Optional[np.ndarray]
    ambient_dim: int
    rows: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.ambient_dim if self.basis is None else self.basis.shape[1]

    def reduce(self, mat: np.ndarray) -> np.ndarray:
        """Coordinates ``U^T mat`` of ambient vectors/columns in the frame."""
        if self.basis is None:
            return np.asarray(mat, dtype=np.float64)
        if self.rows is not None:
            return np.asarray(mat, dtype=np.float64)[self.rows]
        return self.basis.T @ mat

    def lift(self, coords: np.ndarray) -> np.ndarray:
        """Ambient vectors from frame coordinates (column-wise, ``U @ coords``)."""
        if self.basis is None:
            return coords
        return self.basis @ coords


def support_frame(*specs, latent: str = "gaussian") -> Frame:
    """Smallest convenient frame containing the ranges of ``specs``.

    ``specs`` are :class:`CovarianceSpec` or :class:`TaskSpec` objects that
    share one ambient dimension.
    """
    if not specs:
        raise ValueError("need at least one spec")
    d = specs[0].ambient_dim
    if any(s.ambient_dim != d for s in specs):
        raise ValueError("specs disagree on the ambient dimension")
    stacked = np.hstack([s.basis for s in specs])
    rows = np.flatnonzero(np.any(stacked != 0.0, axis=1))
    if rows.size < d:
        basis = np.zeros((d, rows.size))
        basis[rows, np.arange(rows.size)] = 1.0
        return Frame(basis, d, rows)
    if latent != "gaussian":
        return Frame(None, d)
    u, s, _ = np.linalg.svd(stacked, full_matrices=False)
    k = int(np.count_nonzero(s > 1e-10 * max(s[0], 1.0))) if s.size else 0
    if k >= d:
        return Frame(None, d)
    return Frame(u[:, :k], d)


@dataclass(frozen=True, eq=False)
class Dataset:
    """``m`` rows sharing one latent draw across both feature views.

    Arrays are stored in frame coordinates; ``ambient_*`` give the
    ``m x d`` matrices.
    """

    latent: np.ndarray
    weak_features: np.ndarray
    strong_features: np.ndarray
    clean_labels: np.ndarray
    noisy_labels: np.ndarray
    frame: Frame = field(repr=False)

    @property
    def size(self) -> int:
        return self.clean_labels.shape[0]

    @property
    def ambient_inputs(self) -> np.ndarray:
        return self.frame.lift(self.latent.T).T

    @property
    def ambient_weak_features(self) -> np.ndarray:
        return self.frame.lift(self.weak_features.T).T

    @property
    def ambient_strong_features(self) -> np.ndarray:
        return self.frame.lift(self.strong_features.T).T

    def with_labels(self, noisy_labels: np.ndarray) -> "Dataset":
        return Dataset(self.latent, self.weak_features, self.strong_features,
                       self.clean_labels, np.asarray(noisy_labels, dtype=np.float64), self.frame)

    def concat(self, other: "Dataset") -> "Dataset":
        if other.frame is not self.frame and other.frame.dim != self.frame.dim:
            raise ValueError("cannot concatenate datasets sampled in different frames")
        return Dataset(
            np.vstack([self.latent, other.latent]),
            np.vstack([self.weak_features, other.weak_features]),
            np.vstack([self.strong_features, other.strong_features]),
            np.concatenate([self.clean_labels, other.clean_labels]),
            np.concatenate([self.noisy_labels, other.noisy_labels]),
            self.frame,
        )


def _sqrt_in_frame(cov: CovarianceSpec, frame: Frame) -> np.ndarray:
    v = frame.reduce(cov.basis)
    return (v * np.sqrt(cov.eigenvalues)) @ v.T


def _draw_latent(rng: np.random.Generator, m: int, k: int, latent: str) -> np.ndarray:
    if latent == "gaussian":
        return rng.standard_normal((m, k))
    if latent == "rademacher":
        return rng.choice(np.array([-1.0, 1.0]), size=(m, k))
    raise ValueError(f"unknown latent distribution {latent!r}")


def sample_dataset(task: TaskSpec, cov_s: CovarianceSpec, cov_w: CovarianceSpec, m: int,
                   seed: SeedLike, latent: str = "gaussian", frame: Optional[Frame] = None) -> Dataset:
    """Draw ``m`` i.i.d. rows; noise is drawn from a stream separate from the latent."""
    if m < 0:
        raise ValueError("sample size must be nonnegative")
    if frame is None:
        frame = support_frame(task, cov_s, cov_w, latent=latent)
    elif frame.basis is not None and frame.rows is None and latent != "gaussian":
        raise ValueError("rotated frames are only exact for a Gaussian latent")
    rng = make_rng(seed, 0) if not isinstance(seed, np.random.Generator) else seed
    noise_rng = make_rng(seed, 1) if not isinstance(seed, np.random.Generator) else seed
    x = _draw_latent(rng, m, frame.dim, latent)
    strong = x @ _sqrt_in_frame(cov_s, frame)
    weak = x @ _sqrt_in_frame(cov_w, frame)
    clean = x @ frame.reduce(task.signal())
    noise = np.sqrt(task.noise_variance) * noise_rng.standard_normal(m)
    return Dataset(x, weak, strong, clean, clean + noise, frame)


def population_approx_error(task: TaskSpec, cov: CovarianceSpec) -> float:
    """Exact ``rho`` for a latent with identity second moment.

    The best head over ``Sigma^{1/2} x`` is the projection of the signal
    vector onto ``range(Sigma)``, leaving ``||(I - V V^T) Sigma_*^{1/2} theta_*||^2``.
    """
    if task.ambient_dim != cov.ambient_dim:
        raise ValueError("task and covariance disagree on the ambient dimension")
    sig = task.signal()
    resid = sig - cov.basis @ (cov.basis.T @ sig)
    return float(resid @ resid)


def ft_approx_error(task: TaskSpec, cov: CovarianceSpec, m_probe: Optional[int] = None,
                    seed: SeedLike = 0, latent: str = "gaussian") -> float:
    """Monte-Carlo estimate of ``min_theta E[(phi(x)^T theta - f*(x))^2]``.

    Fits the best linear head by least squares on one probe sample of clean
    labels and reports its mean squared error on a second, independent probe.
    """
    rank = max(cov.rank, 1)
    if m_probe is None:
        m_probe = 50 * rank
    if m_probe <= 2 * rank:
        raise ValueError(f"probe of {m_probe} rows is too small for a rank-{rank} design")
    frame = support_frame(task, cov, latent=latent)
    fit = sample_dataset(task.with_noise(0.0), cov, cov, m_probe, make_rng(seed, 0), latent, frame)
    test = sample_dataset(task.with_noise(0.0), cov, cov, m_probe, make_rng(seed, 1), latent, frame)
    theta = min_norm_solve(fit.strong_features, fit.clean_labels)
    resid = test.strong_features @ theta - test.clean_labels
    return float(np.mean(resid ** 2))
