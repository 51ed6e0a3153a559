"""Intrinsic and correlation dimensions of feature representations.

The intrinsic dimension is the smallest rank whose best low-rank
approximation of a covariance loses less than a fraction ``tau`` of its
trace. The correlation dimension of two subspaces with orthonormal bases
``V_s``, ``V_w`` is ``||V_s^T V_w||_F^2``, the sum of squared cosines of their
canonical angles. When the two feature spaces live in different ambient
dimensions they are matched by a seeded random partial isometry, and for
very wide features a column-subsampled randomized rangefinder gives a
cheap estimate.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .linalg import SeedLike, gaussian_matrix, make_rng, random_orthonormal

__all__ = [
    "SpectralSummary",
    "SketchConfig",
    "CorrelationResult",
    "empirical_covariance",
    "intrinsic_dimension",
    "correlation_dimension",
    "canonical_cosines",
    "correlation_dimension_mismatched",
    "rangefinder",
    "planted_overlap_features",
    "sketched_correlation_dimension",
    "read_features",
    "write_binary_features",
    "DimsReport",
    "dims_report",
]

_BASIS_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class SpectralSummary:
    """Eigenpairs of a PSD matrix, eigenvalues nonincreasing."""

    eigenvalues: np.ndarray
    basis: np.ndarray
    trace: float

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=np.float64)
        basis = np.asarray(self.basis, dtype=np.float64)
        if lam.ndim != 1 or basis.ndim != 2 or basis.shape[1] != lam.size:
            raise ValueError("basis must have one column per eigenvalue")
        if np.any(np.diff(lam) > 1e-12 * max(1.0, abs(lam[0]) if lam.size else 1.0)):
            raise ValueError("eigenvalues must be nonincreasing")
        if abs(float(lam.sum()) - self.trace) > 1e-8 * max(1.0, abs(self.trace)):
            raise ValueError("trace does not match the eigenvalue sum")
        if basis.size and np.max(np.abs(basis.T @ basis - np.eye(lam.size))) > 1e-8:
            raise ValueError("basis columns are not orthonormal")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "basis", basis)

    def top(self, k: int) -> np.ndarray:
        """Orthonormal basis of the leading ``k``-dimensional eigenspace."""
        return self.basis[:, :k]


@dataclass(frozen=True)
class SketchConfig:
    """Sizes for the sketched correlation-dimension estimator.

    ``common_dim_fraction`` scales ``min(D_s, D_w)`` to the common column
    count ``D`` after subsampling.
    """

    d_s: int
    d_w: int
    common_dim_fraction: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.common_dim_fraction <= 1.0):
            raise ValueError("common_dim_fraction must lie in (0, 1]")
        if self.d_s < 0 or self.d_w < 0:
            raise ValueError("target ranks must be nonnegative")

    def common_dim(self, D_s: int, D_w: int) -> int:
        D = max(1, int(math.floor(self.common_dim_fraction * min(D_s, D_w))))
        if D < max(self.d_s, self.d_w):
            raise ValueError(
                f"common dimension {D} is smaller than the target ranks ({self.d_s}, {self.d_w}); "
                "raise common_dim_fraction"
            )
        return D


def empirical_covariance(features, center: bool = False) -> SpectralSummary:
    """Eigendecomposition of ``(1/m) Phi^T Phi`` (uncentered unless ``center``).

    For ``m < D`` the decomposition goes through the SVD of ``Phi`` and keeps
    only the ``m`` leading directions; the rest have zero eigenvalue.
    """
    phi = np.asarray(features, dtype=np.float64)
    if phi.ndim != 2 or phi.shape[0] < 1:
        raise ValueError("features must be a nonempty 2-d array")
    if center:
        phi = phi - phi.mean(axis=0)
    m = phi.shape[0]
    _, s, vt = np.linalg.svd(phi, full_matrices=False)
    lam = s ** 2 / m
    return SpectralSummary(lam, vt.T, float(lam.sum()))


def intrinsic_dimension(summary: SpectralSummary, tau: float = 0.01) -> int:
    """Smallest ``k`` with ``(trace - sum_{i<=k} lambda_i) / trace < tau``."""
    if not (0.0 < tau < 1.0):
        raise ValueError("tau must lie in (0, 1)")
    lam = np.clip(summary.eigenvalues, 0.0, None)
    total = float(lam.sum())
    if total <= 0:
        raise ValueError("intrinsic dimension is undefined for a zero-trace spectrum")
    remainder = (total - np.cumsum(lam)) / total
    return int(np.argmax(remainder < tau)) + 1


def _check_basis(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError(f"{name} must be a 2-d matrix")
    if v.shape[1] and np.max(np.abs(v.T @ v - np.eye(v.shape[1]))) > _BASIS_TOL:
        raise ValueError(f"{name} does not have orthonormal columns")
    return v


@dataclass(frozen=True, eq=False)
class CorrelationResult:
    value: float
    cosines: np.ndarray

    @property
    def angles(self) -> np.ndarray:
        """Canonical angles in radians, ascending."""
        return np.arccos(np.clip(self.cosines, -1.0, 1.0))

    def __float__(self) -> float:
        return self.value


def canonical_cosines(vs, vw) -> np.ndarray:
    """Singular values of ``V_s^T V_w``, descending."""
    vs, vw = _check_basis(vs, "Vs"), _check_basis(vw, "Vw")
    if vs.shape[0] != vw.shape[0]:
        raise ValueError("bases live in different ambient dimensions")
    if vs.shape[1] == 0 or vw.shape[1] == 0:
        return np.zeros(0)
    return np.linalg.svd(vs.T @ vw, compute_uv=False)


def correlation_dimension(vs, vw) -> CorrelationResult:
    """``||V_s^T V_w||_F^2`` with the canonical cosines it is made of."""
    vs, vw = _check_basis(vs, "Vs"), _check_basis(vw, "Vw")
    if vs.shape[0] != vw.shape[0]:
        raise ValueError("use correlation_dimension_mismatched for different ambient dimensions")
    cos = canonical_cosines(vs, vw)
    value = float(np.sum((vs.T @ vw) ** 2)) if cos.size else 0.0
    return CorrelationResult(value, cos)


def matching_isometry(D_s: int, D_w: int, seed: SeedLike) -> np.ndarray:
    """Seeded ``D_s x D_w`` partial isometry (orthonormal along the shorter side)."""
    if D_s >= D_w:
        return random_orthonormal(D_s, D_w, seed)
    return random_orthonormal(D_w, D_s, seed).T


def correlation_dimension_mismatched(vs, vw, seed: SeedLike = 0, identity: bool = False) -> float:
    """``||V_s^T Gamma V_w||_F^2`` for bases in ambient dimensions ``D_s``, ``D_w``.

    ``identity=True`` (only for ``D_s == D_w``) sets ``Gamma = I``.
    """
    vs, vw = _check_basis(vs, "Vs"), _check_basis(vw, "Vw")
    if vs.shape[1] == 0 or vw.shape[1] == 0:
        return 0.0
    D_s, D_w = vs.shape[0], vw.shape[0]
    if identity:
        if D_s != D_w:
            raise ValueError("identity matching requires equal ambient dimensions")
        return correlation_dimension(vs, vw).value
    gamma = matching_isometry(D_s, D_w, seed)
    return float(np.sum((vs.T @ (gamma @ vw)) ** 2))


def rangefinder(phi, rank: int, seed: SeedLike = 0) -> np.ndarray:
    """Orthonormal ``D x rank`` approximation of the top right singular subspace.

    ``V = orth(Phi^T G)`` with a Gaussian ``G`` of shape ``m x rank``.
    """
    phi = np.asarray(phi, dtype=np.float64)
    m, D = phi.shape
    if rank > min(m, D):
        raise ValueError(f"rank {rank} exceeds the sketch size {min(m, D)}")
    if rank == 0:
        return np.zeros((D, 0))
    y = phi.T @ gaussian_matrix(m, rank, seed)
    q, _ = np.linalg.qr(y)
    return q


def planted_overlap_features(k: int, d_s: int, d_w: int, D: int, m: int, seed: SeedLike = 0):
    """Feature matrices whose row spaces share exactly ``k`` directions.

    Returns ``(phi_s, phi_w, Vs, Vw)``: ``phi_s = Z_s Vs^T`` and
    ``phi_w = Z_w Vw^T`` with ``Vs``, ``Vw`` drawn from one random
    ``D x (d_s + d_w - k)`` frame and a shared Gaussian latent ``Z``.
    """
    if not 0 <= k <= min(d_s, d_w) or d_s + d_w - k > D:
        raise ValueError("planted overlap needs 0 <= k <= min(d_s, d_w) and d_s + d_w - k <= D")
    width = d_s + d_w - k
    q = random_orthonormal(D, width, make_rng(seed, 1))
    vs, vw = q[:, :d_s], q[:, d_s - k:]
    z = make_rng(seed, 5).standard_normal((m, width))
    return z[:, :d_s] @ vs.T, z[:, d_s - k:] @ vw.T, vs, vw


def sketched_correlation_dimension(phi_s, phi_w, cfg: SketchConfig) -> float:
    """Column-subsample both feature matrices to a common width, then compare rangefinder bases."""
    phi_s = np.asarray(phi_s, dtype=np.float64)
    phi_w = np.asarray(phi_w, dtype=np.float64)
    if phi_s.ndim != 2 or phi_w.ndim != 2 or phi_s.shape[0] != phi_w.shape[0]:
        raise ValueError("feature matrices must be 2-d with the same number of rows")
    m = phi_s.shape[0]
    if m < max(cfg.d_s, cfg.d_w):
        raise ValueError("fewer samples than the target ranks")
    D_s, D_w = phi_s.shape[1], phi_w.shape[1]
    D = cfg.common_dim(D_s, D_w)
    rng = make_rng(cfg.seed, 0)
    cols_s = np.sort(rng.choice(D_s, size=D, replace=False)) if D < D_s else np.arange(D_s)
    if D_s == D_w:
        cols_w = cols_s
    else:
        cols_w = np.sort(rng.choice(D_w, size=D, replace=False)) if D < D_w else np.arange(D_w)
    vs = rangefinder(phi_s[:, cols_s], cfg.d_s, make_rng(cfg.seed, 1))
    vw = rangefinder(phi_w[:, cols_w], cfg.d_w, make_rng(cfg.seed, 2))
    return float(np.sum((vs.T @ vw) ** 2))


def read_features(path, shape: Optional[Tuple[int, int]] = None, delimiter: Optional[str] = None) -> np.ndarray:
    """Load an ``m x D`` feature dump.

    Files ending in ``.bin``/``.f64`` (or any file when ``shape`` is given)
    are read as raw little-endian float64 in row-major order; everything
    else is parsed as delimited text (comma, tab or whitespace).
    """
    path = os.fspath(path)
    binary = shape is not None or path.endswith((".bin", ".f64"))
    try:
        if binary:
            raw = np.fromfile(path, dtype="<f8")
            if shape is None:
                raise ValueError("binary dumps need an explicit (rows, cols) shape")
            if raw.size != shape[0] * shape[1]:
                raise ValueError(f"{path}: {raw.size} values do not fit shape {shape}")
            return raw.reshape(shape).astype(np.float64)
        if delimiter is None:
            with open(path, encoding="utf-8") as fh:
                head = fh.readline()
            delimiter = "," if "," in head else ("\t" if "\t" in head else None)
        data = np.loadtxt(path, delimiter=delimiter, ndmin=2, dtype=np.float64)
    except OSError as exc:
        raise OSError(f"cannot read feature dump {path}: {exc}") from exc
    return data


def write_binary_features(path, features) -> None:
    np.ascontiguousarray(features, dtype="<f8").tofile(os.fspath(path))


@dataclass(frozen=True)
class DimsReport:
    d_s: int
    d_w: int
    d_overlap: float
    cosines: Tuple[float, ...]
    tau: float
    method: str

    FIELDS = ("d_s", "d_w", "d_overlap", "tau", "method", "cosines")

    def to_text(self, delimiter: str = ",") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
        w.writerow(self.FIELDS)
        w.writerow([self.d_s, self.d_w, repr(self.d_overlap), repr(self.tau), self.method,
                    " ".join(repr(float(c)) for c in self.cosines)])
        return buf.getvalue()


def dims_report(phi_s, phi_w, tau: float = 0.01, center: bool = False, seed: SeedLike = 0,
                sketch_fraction: Optional[float] = None) -> DimsReport:
    """Intrinsic dimensions of both feature sets and their correlation dimension.

    Equal widths are compared directly; unequal widths go through a random
    partial isometry. ``sketch_fraction`` switches to the sketched estimator.
    """
    cov_s = empirical_covariance(phi_s, center)
    cov_w = empirical_covariance(phi_w, center)
    d_s, d_w = intrinsic_dimension(cov_s, tau), intrinsic_dimension(cov_w, tau)
    vs, vw = cov_s.top(d_s), cov_w.top(d_w)
    if sketch_fraction is not None:
        seed_int = seed if isinstance(seed, (int, np.integer)) else 0
        value = sketched_correlation_dimension(phi_s, phi_w, SketchConfig(d_s, d_w, sketch_fraction, int(seed_int)))
        return DimsReport(d_s, d_w, value, (), tau, "sketched")
    if vs.shape[0] == vw.shape[0]:
        res = correlation_dimension(vs, vw)
        return DimsReport(d_s, d_w, res.value, tuple(float(c) for c in res.cosines), tau, "exact")
    gamma = matching_isometry(vs.shape[0], vw.shape[0], seed)
    mat = vs.T @ gamma @ vw
    cos = np.linalg.svd(mat, compute_uv=False) if mat.size else np.zeros(0)
    return DimsReport(d_s, d_w, float(np.sum(mat ** 2)), tuple(float(c) for c in cos), tau, "matched")
