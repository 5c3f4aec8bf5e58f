"""Multi-view datasets: directory I/O and synthetic benchmarks.

A dataset directory holds ``view_0.csv`` ... ``view_{n-1}.csv`` (no header,
comma separated, one instance per row) and an optional ``labels.csv`` with one
integer per row.
"""

from __future__ import annotations

import csv
import os
import re
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from dsmc.errors import DatasetError, ValidationError

_VIEW_RE = re.compile(r"^view_(\d+)\.csv$")


@dataclass
class MultiViewDataset:
    """n views over the same p instances, plus optional ground-truth labels."""

    views: list[np.ndarray]
    labels: np.ndarray | None = None

    def __post_init__(self):
        if len(self.views) < 1:
            raise ValidationError("a dataset needs at least one view")
        views = []
        for v, X in enumerate(self.views):
            X = np.asarray(X, dtype=float)
            if X.ndim != 2:
                raise ValidationError(f"view {v} must be a 2-D matrix, got shape {X.shape}")
            if X.shape[1] < 1:
                raise ValidationError(f"view {v} has no features")
            if not np.all(np.isfinite(X)):
                raise ValidationError(f"view {v} contains non-finite values")
            views.append(X)
        p = views[0].shape[0]
        if p < 2:
            raise ValidationError(f"need at least 2 instances, got {p}")
        for v, X in enumerate(views):
            if X.shape[0] != p:
                raise ValidationError(f"view {v} has {X.shape[0]} rows, view 0 has {p}")
        self.views = views
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.ndim != 1 or labels.shape[0] != p:
                raise ValidationError(f"labels must have length {p}, got shape {labels.shape}")
            if labels.size and (not np.issubdtype(labels.dtype, np.integer) or labels.min() < 0):
                raise ValidationError("labels must be nonnegative integers")
            self.labels = labels.astype(np.int64)

    @property
    def p(self) -> int:
        return self.views[0].shape[0]

    @property
    def n(self) -> int:
        return len(self.views)

    def standardized(self) -> "MultiViewDataset":
        """Per-feature z-scoring of every view; constant features become 0."""
        out = []
        for X in self.views:
            sd = X.std(axis=0)
            sd[sd == 0] = 1.0
            out.append((X - X.mean(axis=0)) / sd)
        return MultiViewDataset(out, self.labels)


@dataclass
class SynthSpec:
    p: int
    n: int
    k: int
    d: int
    separation: float
    noise_sigma: Sequence[float] = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        self.noise_sigma = [float(s) for s in self.noise_sigma]
        if self.n < 1:
            raise ValidationError("n must be >= 1")
        if self.k < 1:
            raise ValidationError("k must be >= 1")
        if self.p < 2:
            raise ValidationError("p must be >= 2")
        if self.k > self.p:
            raise ValidationError(f"k={self.k} exceeds p={self.p}")
        if self.d < 1:
            raise ValidationError("d must be >= 1")
        if not self.separation > 0:
            raise ValidationError("separation must be > 0")
        if len(self.noise_sigma) != self.n:
            raise ValidationError(f"noise_sigma needs {self.n} entries, got {len(self.noise_sigma)}")
        if any(s < 0 for s in self.noise_sigma):
            raise ValidationError("noise_sigma entries must be >= 0")


def generate_synthetic(spec: SynthSpec) -> MultiViewDataset:
    """Gaussian latent clusters seen through independent random linear maps.

    The latent space has ``k`` dimensions; cluster centers sit on the scaled
    coordinate axes so that every pair of centers is ``separation`` apart, and
    points scatter around them with unit variance. View ``v`` maps the latent
    points through a ``k x d`` standard-normal matrix and adds isotropic noise
    with standard deviation ``noise_sigma[v]``.
    """
    seeds = np.random.SeedSequence(spec.seed).spawn(spec.n + 1)
    rng = np.random.default_rng(seeds[0])
    sizes = [spec.p // spec.k + (c < spec.p % spec.k) for c in range(spec.k)]
    labels = rng.permutation(np.repeat(np.arange(spec.k), sizes))
    centers = np.eye(spec.k) * spec.separation / np.sqrt(2.0)
    latent = centers[labels] + rng.standard_normal((spec.p, spec.k))
    views = []
    for v in range(spec.n):
        vrng = np.random.default_rng(seeds[v + 1])
        A = vrng.standard_normal((spec.k, spec.d))
        noise = vrng.standard_normal((spec.p, spec.d)) * spec.noise_sigma[v]
        views.append(latent @ A + noise)
    return MultiViewDataset(views, labels)


def _read_rows(path: Path) -> list[list[str]]:
    with open(path, newline="") as fh:
        return [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]


def _parse_matrix(path: Path) -> np.ndarray:
    rows = _read_rows(path)
    if not rows:
        raise DatasetError(f"{path}: file is empty")
    width = len(rows[0])
    out = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DatasetError(f"{path}:{i + 1}: expected {width} columns, found {len(row)}")
        for j, cell in enumerate(row):
            try:
                out[i, j] = float(cell)
            except ValueError:
                raise DatasetError(f"{path}:{i + 1}: non-numeric cell {cell!r} in column {j + 1}") from None
    if not np.all(np.isfinite(out)):
        raise DatasetError(f"{path}: non-finite values")
    return out


def read_label_file(path: str | os.PathLike) -> np.ndarray:
    """Read a single-column integer CSV (labels.csv, predictions)."""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"{path}: no such file")
    rows = _read_rows(path)
    out = np.empty(len(rows), dtype=np.int64)
    for i, row in enumerate(rows):
        if len(row) != 1:
            raise DatasetError(f"{path}:{i + 1}: expected a single column, found {len(row)}")
        try:
            out[i] = int(row[0].strip())
        except ValueError:
            raise DatasetError(f"{path}:{i + 1}: not an integer: {row[0]!r}") from None
        if out[i] < 0:
            raise DatasetError(f"{path}:{i + 1}: negative label {out[i]}")
    return out


def load_dataset(dir: str | os.PathLike) -> MultiViewDataset:
    root = Path(dir)
    if not root.is_dir():
        raise DatasetError(f"{root}: not a directory")
    found = {}
    for entry in root.iterdir():
        m = _VIEW_RE.match(entry.name)
        if m:
            found[int(m.group(1))] = entry
    if not found:
        raise DatasetError(f"{root}: no view_<i>.csv files")
    missing = [i for i in range(max(found) + 1) if i not in found]
    if missing:
        names = ", ".join(f"view_{i}.csv" for i in missing)
        raise DatasetError(f"{root}: missing {names} (view indices must be contiguous from 0)")
    paths = [found[i] for i in range(len(found))]
    views = [_parse_matrix(path) for path in paths]
    for path, X in zip(paths[1:], views[1:]):
        if X.shape[0] != views[0].shape[0]:
            raise DatasetError(
                f"row count mismatch: {paths[0].name} has {views[0].shape[0]} rows, "
                f"{path.name} has {X.shape[0]}"
            )
    labels = None
    label_path = root / "labels.csv"
    if label_path.exists():
        labels = read_label_file(label_path)
        if labels.shape[0] != views[0].shape[0]:
            raise DatasetError(
                f"{label_path.name} has {labels.shape[0]} rows, {paths[0].name} has {views[0].shape[0]}"
            )
    try:
        return MultiViewDataset(views, labels)
    except ValidationError as exc:
        raise DatasetError(f"{root}: {exc}") from None


def format_float(x: float) -> str:
    # repr is the shortest string that round-trips exactly (up to 17 digits)
    return repr(float(x))


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_labels(path: str | os.PathLike, labels) -> None:
    atomic_write_text(path, "".join(f"{int(x)}\n" for x in labels))


def write_dataset(ds: MultiViewDataset, dir: str | os.PathLike) -> None:
    root = Path(dir)
    root.mkdir(parents=True, exist_ok=True)
    for v, X in enumerate(ds.views):
        text = "".join(",".join(format_float(x) for x in row) + "\n" for row in X)
        atomic_write_text(root / f"view_{v}.csv", text)
    if ds.labels is not None:
        write_labels(root / "labels.csv", ds.labels)
