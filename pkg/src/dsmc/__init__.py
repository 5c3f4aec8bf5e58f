"""Double self-weighted multi-view spectral clustering."""

from dsmc.dataset import MultiViewDataset, SynthSpec, generate_synthetic, load_dataset, write_dataset
from dsmc.errors import DatasetError, NumericalError, ValidationError
from dsmc.graph import build_affinity, build_laplacian, spectral_embedding
from dsmc.labeling import argmax_labels, kmeans
from dsmc.metrics import accuracy, nmi, purity
from dsmc.solver import SolverConfig, run

__all__ = [
    "DatasetError",
    "MultiViewDataset",
    "NumericalError",
    "SolverConfig",
    "SynthSpec",
    "ValidationError",
    "accuracy",
    "argmax_labels",
    "build_affinity",
    "build_laplacian",
    "generate_synthetic",
    "kmeans",
    "load_dataset",
    "nmi",
    "purity",
    "run",
    "spectral_embedding",
    "write_dataset",
]

__version__ = "0.1.0"
