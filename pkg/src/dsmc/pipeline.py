"""End-to-end clustering: embeddings, solver, rounding, metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from dsmc.dataset import MultiViewDataset
from dsmc.graph import embed_view
from dsmc.labeling import extract_labels
from dsmc.metrics import evaluate
from dsmc.solver import IterationTrace, SolverConfig, ViewState, run


@dataclass
class ClusteringResult:
    labels: np.ndarray
    Y: np.ndarray
    weights: list[float]
    trace: IterationTrace
    states: list[ViewState]
    metrics: dict[str, float] | None


def cluster(ds: MultiViewDataset, cfg: SolverConfig, sigma="median", labels: str = "kmeans",
            standardize: bool = False, observer=None) -> ClusteringResult:
    if standardize:
        ds = ds.standardized()
    embeddings = [embed_view(X, cfg.k, sigma, view=v) for v, X in enumerate(ds.views)]
    Y, states, trace = run(embeddings, cfg, observer=observer)
    pred = extract_labels(Y, cfg.k, labels, seed=cfg.seed).labels
    metrics = evaluate(pred, ds.labels) if ds.labels is not None else None
    return ClusteringResult(pred, Y, [s.w for s in states], trace, states, metrics)
