"""Per-view Gaussian affinity graphs, normalized Laplacians and spectral embeddings."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.spatial.distance import pdist, squareform

from dsmc.errors import NumericalError, ValidationError


@dataclass
class AffinityGraph:
    W: np.ndarray
    sigma: float


@dataclass
class LaplacianPair:
    D: np.ndarray
    L: np.ndarray


@dataclass
class SpectralEmbedding:
    F: np.ndarray
    eigenvalues: np.ndarray

    @property
    def p(self) -> int:
        return self.F.shape[0]

    @property
    def k(self) -> int:
        return self.F.shape[1]


def parse_sigma(policy) -> str | float:
    """Normalize a sigma policy: ``"median"`` or a positive float."""
    if policy is None or policy == "median":
        return "median"
    try:
        value = float(policy)
    except (TypeError, ValueError):
        raise ValidationError(f"sigma must be 'median' or a positive number, got {policy!r}") from None
    if not value > 0 or not np.isfinite(value):
        raise ValidationError(f"fixed sigma must be > 0, got {policy!r}")
    return value


def build_affinity(X, sigma_policy="median") -> AffinityGraph:
    """Dense Gaussian kernel ``w_ij = exp(-||x_i - x_j||^2 / (2 sigma^2))``.

    ``sigma_policy`` is ``"median"`` (median of the pairwise Euclidean
    distances) or a fixed positive bandwidth.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValidationError(f"need a p x d matrix with p >= 2, got shape {X.shape}")
    policy = parse_sigma(sigma_policy)
    # one distance per unordered pair, mirrored, so W is exactly symmetric
    dist = pdist(X)
    if policy == "median":
        sigma = float(np.median(dist))
        if sigma == 0.0:
            raise ValidationError(
                "median pairwise distance is 0 (instances are identical); use a fixed sigma"
            )
    else:
        sigma = policy
    W = squareform(np.exp(-(dist**2) / (2.0 * sigma**2)))
    np.fill_diagonal(W, 1.0)
    return AffinityGraph(W, sigma)


def build_laplacian(g: AffinityGraph) -> LaplacianPair:
    W = g.W
    deg = W.sum(axis=1)
    assert np.all(deg > 0), "affinity rows must have positive sums"
    s = 1.0 / np.sqrt(deg)
    L = np.eye(W.shape[0]) - s[:, None] * W * s[None, :]
    L = 0.5 * (L + L.T)
    return LaplacianPair(np.diag(deg), L)


def spectral_embedding(lp: LaplacianPair, k: int, view: int | None = None) -> SpectralEmbedding:
    """Eigenvectors of ``L`` for its ``k`` algebraically smallest eigenvalues.

    Each column is flipped so its largest-magnitude entry is positive (the
    first such row wins ties).
    """
    L = lp.L
    p = L.shape[0]
    if not 1 <= k <= p:
        raise ValidationError(f"k must lie in [1, {p}], got {k}")
    try:
        vals, vecs = scipy.linalg.eigh(L, subset_by_index=[0, k - 1])
    except (np.linalg.LinAlgError, ValueError) as exc:
        where = f" for view {view}" if view is not None else ""
        raise NumericalError(f"eigensolver failed{where}: {exc}") from exc
    idx = np.argmax(np.abs(vecs), axis=0)
    signs = np.sign(vecs[idx, np.arange(k)])
    signs[signs == 0] = 1.0
    return SpectralEmbedding(vecs * signs, vals)


def embed_view(X, k: int, sigma_policy="median", view: int | None = None) -> SpectralEmbedding:
    return spectral_embedding(build_laplacian(build_affinity(X, sigma_policy)), k, view=view)
