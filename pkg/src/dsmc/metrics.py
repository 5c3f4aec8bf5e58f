"""Clustering accuracy, normalized mutual information and purity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from dsmc.errors import ValidationError


@dataclass
class ContingencyTable:
    """Co-occurrence counts, predicted clusters on rows, true classes on columns."""

    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def row_marginals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_marginals(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def contingency(pred, truth) -> ContingencyTable:
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise ValidationError(f"length mismatch: pred has {pred.size} labels, truth has {truth.size}")
    if pred.size == 0:
        raise ValidationError("empty label sequences")
    _, pi = np.unique(pred, return_inverse=True)
    _, ti = np.unique(truth, return_inverse=True)
    counts = np.zeros((pi.max() + 1, ti.max() + 1), dtype=np.int64)
    np.add.at(counts, (pi, ti), 1)
    return ContingencyTable(counts)


def accuracy(pred, truth) -> float:
    """Fraction of instances agreeing under the best one-to-one cluster/class matching."""
    table = contingency(pred, truth).counts
    r, s = table.shape
    padded = np.zeros((max(r, s), max(r, s)), dtype=np.int64)
    padded[:r, :s] = table
    rows, cols = linear_sum_assignment(-padded)
    return float(padded[rows, cols].sum() / table.sum())


def _entropy(counts: np.ndarray, total: int) -> float:
    q = counts[counts > 0] / total
    return float(-(q * np.log(q)).sum())


def nmi(pred, truth) -> float:
    """Mutual information over the geometric mean of the two entropies (natural log)."""
    t = contingency(pred, truth)
    c, total = t.counts, t.total
    h_pred = _entropy(t.row_marginals, total)
    h_true = _entropy(t.col_marginals, total)
    if h_pred == 0.0 or h_true == 0.0:
        # a single cluster on either side: identical only if both are single
        return 1.0 if h_pred == h_true else 0.0
    nz = c > 0
    joint = c[nz] / total
    outer = (t.row_marginals[:, None] * t.col_marginals[None, :])[nz] / total**2
    mi = float((joint * np.log(joint / outer)).sum())
    return float(min(max(mi / np.sqrt(h_pred * h_true), 0.0), 1.0))


def purity(pred, truth) -> float:
    t = contingency(pred, truth)
    return float(t.counts.max(axis=1).sum() / t.total)


def evaluate(pred, truth) -> dict[str, float]:
    return {"acc": accuracy(pred, truth), "nmi": nmi(pred, truth), "purity": purity(pred, truth)}
