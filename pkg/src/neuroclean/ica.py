"""Whitening and symmetric fixed-point ICA with the log-cosh contrast.

The decomposition operates on active channels only; the caller records
which full-matrix channel each row maps to via ``channel_index_map``.
Non-convergence within the iteration budget is reported through a flag on
the result, never as an exception: a partial unmixing is still usable for
component screening.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientChannels, InsufficientSamples, RankDeficientData

EIGENVALUE_CUTOFF = 1e-10


@dataclass(frozen=True)
class ComponentDecomposition:
    """Result of one ICA run on the active channels of a recording.

    ``sources`` is ``(n_components, n_samples)``; ``mixing`` maps sources
    back to the active-channel space, so
    ``mixing @ sources + mean_vector[:, None]`` reconstructs the input.
    """

    sources: np.ndarray
    mixing: np.ndarray
    unmixing: np.ndarray
    whitening: np.ndarray
    mean_vector: np.ndarray
    channel_index_map: np.ndarray
    converged: bool
    n_iterations: int

    @property
    def n_components(self) -> int:
        return int(self.sources.shape[0])

    def reconstruct(self) -> np.ndarray:
        """Active-channel signal implied by the decomposition."""
        return self.mixing @ self.sources + self.mean_vector[:, None]


def whiten(data: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Decorrelate and scale channels to unit variance.

    Returns ``(whitened, transform, mean)`` where
    ``whitened = transform @ (data - mean)``. Dimensions whose covariance
    eigenvalue falls below ``EIGENVALUE_CUTOFF`` times the largest are
    dropped, so the output may have fewer rows than the input.
    """
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise InsufficientChannels(f"need a matrix with >= 2 rows, got shape {x.shape}")
    n_ch, n = x.shape
    if n <= n_ch:
        raise InsufficientSamples(f"need more samples than channels, got {n} <= {n_ch}")
    mean = x.mean(axis=1)
    centered = x - mean[:, None]
    cov = (centered @ centered.T) / n
    eigvals, eigvecs = np.linalg.eigh(cov)
    # ascending order; keep numerically meaningful directions, largest first
    keep = eigvals > EIGENVALUE_CUTOFF * max(float(eigvals[-1]), 0.0)
    if not np.any(keep) or eigvals[-1] <= 0.0:
        raise RankDeficientData("covariance has no usable eigenvalues")
    eigvals = eigvals[keep][::-1]
    eigvecs = eigvecs[:, keep][:, ::-1]
    # deterministic sign: largest-magnitude loading of each eigenvector positive
    flip = eigvecs[np.argmax(np.abs(eigvecs), axis=0), np.arange(eigvecs.shape[1])] < 0
    eigvecs[:, flip] *= -1.0
    transform = eigvecs.T / np.sqrt(eigvals)[:, None]
    return transform @ centered, transform, mean


def _sym_decorrelate(w: np.ndarray) -> np.ndarray:
    """Symmetric decorrelation: w <- (w w^T)^(-1/2) w."""
    vals, vecs = np.linalg.eigh(w @ w.T)
    vals = np.maximum(vals, np.finfo(float).tiny)
    return (vecs / np.sqrt(vals)) @ vecs.T @ w


def fast_ica(
    data: np.ndarray,
    n_components: int | None = None,
    seed: int = 0,
    tol: float = 1e-4,
    max_iter: int = 200,
    channel_index_map: np.ndarray | None = None,
) -> ComponentDecomposition:
    """Symmetric fixed-point ICA on a (channels x samples) matrix.

    All rotations start from a seeded Gaussian matrix, so results are
    bit-reproducible for a given seed on the same platform. Convergence is
    declared when every unmixing row moves by less than ``tol`` (up to
    sign) in one sweep.
    """
    x = np.asarray(data, dtype=np.float64)
    z, transform, mean = whiten(x)
    n_white = z.shape[0]
    if n_components is None:
        n_components = n_white
    if not (1 <= n_components <= n_white):
        raise RankDeficientData(
            f"n_components must be in [1, {n_white}] after whitening, got {n_components}"
        )
    z = z[:n_components]
    transform = transform[:n_components]
    n = z.shape[1]

    rng = np.random.default_rng(seed)
    w = _sym_decorrelate(rng.standard_normal((n_components, n_components)))
    converged = False
    iteration = 0
    for iteration in range(1, max_iter + 1):
        u = w @ z
        g = np.tanh(u)
        g_prime_mean = np.mean(1.0 - g * g, axis=1)
        w_new = _sym_decorrelate((g @ z.T) / n - g_prime_mean[:, None] * w)
        delta = float(np.max(np.abs(np.abs(np.einsum("ij,ij->i", w_new, w)) - 1.0)))
        w = w_new
        if delta < tol:
            converged = True
            break

    sources = w @ z
    unmixing = w @ transform
    mixing = np.linalg.pinv(unmixing)
    if channel_index_map is None:
        channel_index_map = np.arange(x.shape[0])
    return ComponentDecomposition(
        sources=sources,
        mixing=mixing,
        unmixing=unmixing,
        whitening=transform,
        mean_vector=mean,
        channel_index_map=np.asarray(channel_index_map, dtype=np.intp),
        converged=converged,
        n_iterations=iteration,
    )
