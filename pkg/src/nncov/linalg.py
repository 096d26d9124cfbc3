"""Dense symmetric-matrix statistics.

Streaming covariance accumulation (single pass, mergeable), the entrywise
L1 norm, and eigenvalue-based summaries (log-determinant, trace, spectral
norm) of covariance matrices.

Covariance is the population covariance (divide by ``n``): the worked
coverage numbers this package reproduces only arise with that convention.
With fewer than two committed rows the covariance is defined as the zero
matrix.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

__all__ = [
    "CovarianceAccumulator",
    "SpectralSummary",
    "batch_moments",
    "default_ridge",
    "l1_norm",
    "merge_moments",
    "spectral_summary",
]


def batch_moments(rows: np.ndarray) -> tuple[int, np.ndarray, np.ndarray]:
    """Two-pass mean and centered co-moment of a k x m batch.

    Returns ``(k, mean, comoment)`` with ``comoment = sum((x-mean)(x-mean)^T)``.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise DimensionError(f"expected a 2-D row batch, got shape {rows.shape}")
    k = rows.shape[0]
    if k == 0:
        m = rows.shape[1]
        return 0, np.zeros(m), np.zeros((m, m))
    mean = rows.mean(axis=0)
    centered = rows - mean
    return k, mean, centered.T @ centered


def merge_moments(n_a, mean_a, com_a, n_b, mean_b, com_b):
    """Pairwise merge of two (count, mean, co-moment) triples.

    Numerically stable and the basis for both batched updates and
    accumulator merging:

        delta    = mean_b - mean_a
        mean     = mean_a + delta * n_b / n
        comoment = com_a + com_b + outer(delta, delta) * n_a * n_b / n
    """
    n = n_a + n_b
    if n == 0:
        return 0, mean_a.copy(), com_a.copy()
    delta = mean_b - mean_a
    mean = mean_a + delta * (n_b / n)
    comoment = com_a + com_b + np.outer(delta, delta) * (n_a * n_b / n)
    return n, mean, comoment


class CovarianceAccumulator:
    """Streaming count/mean/co-moment state for one layer's activations.

    Single-writer: update from one thread at a time. Independent
    accumulators may be filled in parallel and combined with `merge`.
    """

    __slots__ = ("n", "mean", "comoment")

    def __init__(self, m: int):
        if m < 1:
            raise DimensionError(f"neuron count must be >= 1, got {m}")
        self.n = 0
        self.mean = np.zeros(m)
        self.comoment = np.zeros((m, m))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    def update(self, rows: np.ndarray) -> "CovarianceAccumulator":
        """Commit a k x m batch of rows. Returns self."""
        rows = np.asarray(rows, dtype=np.float64)
        if rows.ndim != 2 or rows.shape[1] != self.dim:
            raise DimensionError(
                f"row batch of shape {rows.shape} does not match dimension {self.dim}"
            )
        k, mean_b, com_b = batch_moments(rows)
        self.n, self.mean, self.comoment = merge_moments(
            self.n, self.mean, self.comoment, k, mean_b, com_b
        )
        return self

    def merge(self, other: "CovarianceAccumulator") -> "CovarianceAccumulator":
        """Return a new accumulator equivalent to the union of committed rows."""
        if other.dim != self.dim:
            raise DimensionError(f"cannot merge dimensions {self.dim} and {other.dim}")
        out = CovarianceAccumulator(self.dim)
        out.n, out.mean, out.comoment = merge_moments(
            self.n, self.mean, self.comoment, other.n, other.mean, other.comoment
        )
        return out

    def covariance(self) -> np.ndarray:
        """Population covariance of the committed rows (zeros for n <= 1)."""
        if self.n < 2:
            return np.zeros((self.dim, self.dim))
        return self.comoment / self.n

    def copy(self) -> "CovarianceAccumulator":
        out = CovarianceAccumulator(self.dim)
        out.n = self.n
        out.mean = self.mean.copy()
        out.comoment = self.comoment.copy()
        return out


def l1_norm(matrix: np.ndarray) -> float:
    """Sum of absolute values of all entries."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if not np.isfinite(matrix).all():
        raise ValueError("matrix contains non-finite entries")
    return float(np.abs(matrix).sum())


def default_ridge(sigma: np.ndarray) -> float:
    """Eigenvalue floor used for log-determinants of singular covariances.

    Covariance matrices are singular whenever n <= m, so raw determinants
    collapse to zero; the floor keeps the log finite and scale-aware.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    return 1e-8 * float(np.mean(np.diag(sigma))) + 1e-30


@dataclass(frozen=True)
class SpectralSummary:
    """Eigenvalue view of a symmetric covariance matrix."""

    eigenvalues: np.ndarray  # sorted descending
    log_determinant: float  # sum of log of ridge-clamped eigenvalues
    trace: float
    spectral_norm: float  # largest eigenvalue


def spectral_summary(sigma: np.ndarray, ridge: float | None = None) -> SpectralSummary:
    """Eigen-decompose a symmetric matrix and summarise its spectrum.

    ``ridge`` clamps eigenvalues from below inside the log-determinant
    (``None`` selects `default_ridge`; ``0`` gives the raw log-det, which
    is ``-inf`` for singular input). Input must be symmetric to within
    1e-9 relative.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {sigma.shape}")
    scale = max(float(np.abs(sigma).max(initial=0.0)), 1e-300)
    asym = float(np.abs(sigma - sigma.T).max(initial=0.0))
    if asym > 1e-9 * scale:
        raise ValueError(f"matrix is not symmetric (max asymmetry {asym:g})")
    if ridge is None:
        ridge = default_ridge(sigma)
    if ridge < 0:
        raise ValueError(f"ridge must be >= 0, got {ridge}")
    eigenvalues = np.linalg.eigvalsh((sigma + sigma.T) / 2.0)[::-1]
    with np.errstate(divide="ignore"):
        log_det = float(np.sum(np.log(np.maximum(eigenvalues, ridge))))
    return SpectralSummary(
        eigenvalues=eigenvalues,
        log_determinant=log_det,
        trace=float(np.trace(sigma)),
        spectral_norm=float(eigenvalues[0]),
    )
