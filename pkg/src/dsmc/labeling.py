"""Hard labels from the relaxed consensus indicator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dsmc.errors import ValidationError

METHODS = ("kmeans", "argmax")


@dataclass
class LabelAssignment:
    labels: np.ndarray
    method: str


def _sq_dists(X, centers):
    d = (X * X).sum(1)[:, None] - 2.0 * X @ centers.T + (centers * centers).sum(1)[None, :]
    return np.maximum(d, 0.0)


def kmeans_plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    p = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[rng.integers(p)]
    closest = _sq_dists(X, centers[:1])[:, 0]
    for c in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = rng.choice(p, p=closest / total)
        else:
            idx = rng.integers(p)
        centers[c] = X[idx]
        closest = np.minimum(closest, _sq_dists(X, centers[c : c + 1])[:, 0])
    return centers


def lloyd(X: np.ndarray, centers: np.ndarray, max_iter: int = 300):
    """Lloyd iterations from the given centers.

    Returns ``(labels, centers, history)`` where ``history`` holds the
    within-cluster sum of squares after every assignment step. When a
    cluster goes empty, the point farthest from its centroid is moved into
    it (unless every point already sits on its centroid).
    """
    k = centers.shape[0]
    centers = centers.copy()
    history = []
    labels = None
    for _ in range(max_iter):
        d = _sq_dists(X, centers)
        new = np.argmin(d, axis=1)
        cost = d[np.arange(len(X)), new]
        counts = np.bincount(new, minlength=k)
        for c in np.flatnonzero(counts == 0):
            far = int(np.argmax(cost))
            if cost[far] <= 0:
                break
            counts[new[far]] -= 1
            new[far] = c
            counts[c] = 1
            cost[far] = 0.0
        for c in range(k):
            members = new == c
            if members.any():
                centers[c] = X[members].mean(axis=0)
        history.append(float(_sq_dists(X, centers)[np.arange(len(X)), new].sum()))
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
    return new, centers, history


def kmeans(points, k: int, seed: int = 0, restarts: int = 10, max_iter: int = 300) -> LabelAssignment:
    """k-means++ seeded Lloyd, best of ``restarts`` by within-cluster sum of squares.

    Rows are processed in a canonical (lexicographic) order so that permuting
    the input rows permutes the labels the same way.
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    p = X.shape[0]
    if not 1 <= k <= p:
        raise ValidationError(f"k must lie in [1, p={p}], got {k}")
    if restarts < 1:
        raise ValidationError("restarts must be >= 1")
    order = np.lexsort(X.T[::-1])
    Xs = X[order]
    rng = np.random.default_rng(seed)
    best, best_cost = None, np.inf
    for _ in range(restarts):
        labels, _, history = lloyd(Xs, kmeans_plusplus(Xs, k, rng), max_iter)
        if history[-1] < best_cost:
            best, best_cost = labels, history[-1]
    # relabel clusters by first appearance in canonical order
    _, first = np.unique(best, return_index=True)
    remap = np.empty(k, dtype=np.int64)
    remap[best[np.sort(first)]] = np.arange(len(first))
    out = np.empty(p, dtype=np.int64)
    out[order] = remap[best]
    return LabelAssignment(out, "kmeans")


def argmax_labels(Y) -> LabelAssignment:
    Y = np.asarray(Y, dtype=float)
    if not np.all(np.isfinite(Y)):
        raise ValidationError("Y must be finite")
    return LabelAssignment(np.argmax(Y, axis=1).astype(np.int64), "argmax")


def extract_labels(Y, k: int, method: str = "kmeans", seed: int = 0) -> LabelAssignment:
    if method == "kmeans":
        return kmeans(Y, k, seed=seed)
    if method == "argmax":
        return argmax_labels(Y)
    raise ValidationError(f"label extraction must be one of {METHODS}, got {method!r}")
