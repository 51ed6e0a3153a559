"""Dense linear-algebra kernels shared by every fit in the package.

All routines work in float64 and are pure functions of their arguments.
Randomness is routed through :func:`make_rng`, which derives an independent
``numpy.random.Generator`` from an integer seed plus an optional tuple of
integer keys (trial index, stream id, ...), so any single draw of a sweep can
be reproduced without replaying the ones before it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

SeedLike = Union[int, Sequence[int], np.random.SeedSequence, np.random.Generator]

__all__ = [
    "SolverConfig",
    "make_rng",
    "default_rcond",
    "min_norm_solve",
    "ridge_solve",
    "solve",
    "random_orthonormal",
    "gaussian_matrix",
]


@dataclass(frozen=True)
class SolverConfig:
    """How a linear head is fitted.

    ``ridge_alpha == 0`` selects the ridgeless (minimum-norm) path. ``rcond``
    is the relative singular-value cutoff of that path; ``None`` means
    ``1e-10 * max(n, d)`` evaluated at solve time.
    """

    ridge_alpha: float = 0.0
    rcond: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.ridge_alpha) or self.ridge_alpha < 0:
            raise ValueError(f"ridge_alpha must be >= 0, got {self.ridge_alpha}")
        if self.rcond is not None and not (0.0 < self.rcond < 1.0):
            raise ValueError(f"rcond must lie in (0, 1), got {self.rcond}")

    @property
    def ridgeless(self) -> bool:
        return self.ridge_alpha == 0.0


def make_rng(seed: SeedLike, *keys: int) -> np.random.Generator:
    """Return a Generator for ``seed`` refined by integer ``keys``.

    ``make_rng(s, 3, 1)`` and ``make_rng(s, 3, 2)`` are statistically
    independent streams; the same arguments always give the same stream.
    """
    if isinstance(seed, np.random.Generator):
        if keys:
            raise TypeError("keys cannot refine an existing Generator")
        return seed
    if isinstance(seed, np.random.SeedSequence):
        entropy = seed.entropy
        spawn_key = tuple(seed.spawn_key) + tuple(int(k) for k in keys)
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy, spawn_key=spawn_key)))
    if isinstance(seed, (int, np.integer)):
        entropy = int(seed)
    else:
        entropy = [int(s) for s in seed]
    ss = np.random.SeedSequence(entropy, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def _as_matrix(phi) -> np.ndarray:
    phi = np.asarray(phi, dtype=np.float64)
    if phi.ndim != 2:
        raise ValueError(f"expected a 2-d design matrix, got shape {phi.shape}")
    if not np.all(np.isfinite(phi)):
        raise ValueError("design matrix contains non-finite entries")
    return phi


def _as_rhs(y, n: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim not in (1, 2) or y.shape[0] != n:
        raise ValueError(f"label array of shape {y.shape} does not match {n} rows")
    if not np.all(np.isfinite(y)):
        raise ValueError("labels contain non-finite entries")
    return y


def default_rcond(n: int, d: int) -> float:
    return 1e-10 * max(n, d, 1)


def min_norm_solve(phi, y, rcond: Optional[float] = None) -> np.ndarray:
    """Minimum-norm least-squares solution ``pinv(phi) @ y`` via a thin SVD.

    Singular values below ``rcond * s_max`` are treated as zero. ``y`` may be
    a vector or an ``(n, k)`` block of right-hand sides solved together.
    """
    phi = _as_matrix(phi)
    n, d = phi.shape
    y = _as_rhs(y, n)
    out_shape = (d,) + y.shape[1:]
    if n == 0 or d == 0:
        return np.zeros(out_shape)
    if rcond is None:
        rcond = default_rcond(n, d)
    u, s, vt = np.linalg.svd(phi, full_matrices=False)
    keep = s > rcond * s[0] if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
    if not keep.any():
        return np.zeros(out_shape)
    u, s, vt = u[:, keep], s[keep], vt[keep]
    coef = u.T @ y
    coef = coef / s if coef.ndim == 1 else coef / s[:, None]
    return vt.T @ coef


def ridge_solve(phi, y, alpha: float) -> np.ndarray:
    """Minimiser of ``(1/n)||phi @ theta - y||^2 + alpha ||theta||^2``.

    Solved through the SVD so it stays stable for tiny ``alpha`` and for wide
    designs: ``theta = V diag(s / (s^2 + alpha n)) U^T y``.
    """
    if not np.isfinite(alpha) or alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    phi = _as_matrix(phi)
    n, d = phi.shape
    y = _as_rhs(y, n)
    out_shape = (d,) + y.shape[1:]
    if n == 0 or d == 0:
        return np.zeros(out_shape)
    u, s, vt = np.linalg.svd(phi, full_matrices=False)
    shrink = s / (s * s + alpha * n)
    coef = u.T @ y
    coef = coef * shrink if coef.ndim == 1 else coef * shrink[:, None]
    return vt.T @ coef


def solve(phi, y, cfg: SolverConfig) -> np.ndarray:
    if cfg.ridgeless:
        return min_norm_solve(phi, y, cfg.rcond)
    return ridge_solve(phi, y, cfg.ridge_alpha)


def gaussian_matrix(rows: int, cols: int, seed: SeedLike) -> np.ndarray:
    """I.i.d. standard normal ``rows x cols`` matrix, deterministic per seed."""
    if rows < 0 or cols < 0:
        raise ValueError("matrix dimensions must be nonnegative")
    return make_rng(seed).standard_normal((rows, cols))


def random_orthonormal(rows: int, cols: int, seed: SeedLike) -> np.ndarray:
    """Haar-distributed ``rows x cols`` matrix with orthonormal columns.

    QR of a seeded Gaussian matrix with the sign of ``diag(R)`` folded back
    into ``Q``, so the distribution is exactly uniform on the Stiefel manifold.
    """
    if cols > rows:
        raise ValueError(f"cannot fit {cols} orthonormal columns in dimension {rows}")
    if cols == 0:
        return np.zeros((rows, 0))
    g = gaussian_matrix(rows, cols, seed)
    q, r = np.linalg.qr(g)
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs
