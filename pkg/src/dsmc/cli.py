"""Batch command line: ``dsmc run``, ``dsmc synth``, ``dsmc eval``.

Exit status is 0 on success, 1 on validation errors (bad config, malformed
files) and 2 on runtime or numerical failures.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from dsmc.dataset import (
    MultiViewDataset,
    SynthSpec,
    atomic_write_text,
    format_float,
    generate_synthetic,
    load_dataset,
    read_label_file,
    write_dataset,
    write_labels,
)
from dsmc.errors import ValidationError
from dsmc.graph import embed_view, parse_sigma
from dsmc.labeling import METHODS, extract_labels
from dsmc.metrics import evaluate
from dsmc.solver import SolverConfig, run

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2

_SOLVER_FIELDS = [f.name for f in dataclasses.fields(SolverConfig)]
_SYNTH_FIELDS = [f.name for f in dataclasses.fields(SynthSpec)]


class StageError(Exception):
    def __init__(self, stage: str, exc: Exception):
        super().__init__(f"{stage}: {exc}")
        self.stage = stage
        self.exc = exc


@dataclass
class RunConfig:
    data_dir: str | None = None
    synth: dict | None = None
    k: int | None = None
    mu0: float = 0.01
    mu_max: float = 1e6
    rho: float = 1.1
    max_iter: int = 100
    tol_residual: float = 1e-4
    tol_objective: float = 1e-6
    w_mode: str = "reciprocal"
    w_cap: float = 1e8
    eps_w: float = 1e-8
    ablation_uniform_M: bool = False
    seed: int = 0
    sigma: str | float = "median"
    label_extraction: str = "kmeans"
    standardize: bool = False
    output_dir: str = "dsmc_out"

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ValidationError("config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValidationError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def validate(self) -> None:
        if (self.data_dir is None) == (self.synth is None):
            raise ValidationError("exactly one of data_dir / synth must be given")
        if self.synth is not None:
            unknown = sorted(set(self.synth) - set(_SYNTH_FIELDS))
            if unknown:
                raise ValidationError(f"unknown synth keys: {', '.join(unknown)}")
        if self.label_extraction not in METHODS:
            raise ValidationError(f"label_extraction must be one of {METHODS}")
        self.sigma = parse_sigma(self.sigma)

    def solver_config(self, k: int) -> SolverConfig:
        values = {name: getattr(self, name) for name in _SOLVER_FIELDS if name != "k"}
        return SolverConfig(k=k, **values)


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ValidationError, ArithmeticError, RuntimeError, OSError, ValueError, TypeError) as exc:
        raise StageError(name, exc) from exc


def _resolve_k(cfg: RunConfig, ds: MultiViewDataset) -> int:
    if cfg.k is not None:
        return int(cfg.k)
    if ds.labels is not None:
        return len(set(ds.labels.tolist()))
    raise ValidationError("k is required when the dataset has no labels")


def _trace_csv(trace, n: int) -> str:
    header = ["iter", "objective", "primal_residual", "mu"] + [f"w_{v + 1}" for v in range(n)]
    lines = [",".join(header)]
    for rec in trace.records:
        cells = [str(rec.iteration), format_float(rec.objective), format_float(rec.primal_residual),
                 format_float(rec.mu)] + [format_float(w) for w in rec.weights]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def cmd_run(cfg: RunConfig) -> dict:
    """Run the whole pipeline and write results.json, trace.csv and labels_pred.csv."""
    start = time.perf_counter()
    _stage("config", cfg.validate)
    if cfg.synth is not None:
        ds = _stage("synth", lambda: generate_synthetic(SynthSpec(**cfg.synth)))
    else:
        ds = _stage("load", load_dataset, cfg.data_dir)
    out = Path(cfg.output_dir)
    _stage("output", out.mkdir, parents=True, exist_ok=True)
    k = _stage("config", _resolve_k, cfg, ds)
    solver_cfg = _stage("config", cfg.solver_config, k)
    if cfg.standardize:
        ds = ds.standardized()
    embeddings = [_stage(f"embed view {v}", embed_view, X, k, cfg.sigma, view=v) for v, X in enumerate(ds.views)]
    Y, states, trace = _stage("solve", run, embeddings, solver_cfg)
    pred = _stage("label", extract_labels, Y, k, cfg.label_extraction, seed=cfg.seed).labels
    if ds.labels is not None:
        metrics = _stage("evaluate", evaluate, pred, ds.labels)
    else:
        metrics = {"acc": None, "nmi": None, "purity": None}
    report = {
        "metrics": metrics,
        "weights": [s.w for s in states],
        "iterations": len(trace),
        "stop_reason": trace.stop_reason,
        "wall_time": time.perf_counter() - start,
        "config": dataclasses.asdict(cfg),
    }
    _stage("write", atomic_write_text, out / "trace.csv", _trace_csv(trace, len(states)))
    _stage("write", write_labels, out / "labels_pred.csv", pred)
    _stage("write", atomic_write_text, out / "results.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    return report


def cmd_synth(spec: SynthSpec, out_dir) -> None:
    write_dataset(generate_synthetic(spec), out_dir)


def cmd_eval(pred_file, truth_file) -> dict:
    pred = read_label_file(pred_file)
    truth = read_label_file(truth_file)
    if pred.shape[0] != truth.shape[0]:
        raise ValidationError(f"length mismatch: {pred_file} has {pred.shape[0]} labels, "
                              f"{truth_file} has {truth.shape[0]}")
    return evaluate(pred, truth)


def _sigma_arg(text):
    return text if text == "median" else float(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dsmc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="cluster a dataset and write results")
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.add_argument("--data", dest="data_dir", help="dataset directory")
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--w-mode", dest="w_mode", choices=["reciprocal", "norm"])
    p.add_argument("--ablation-uniform-m", dest="ablation_uniform_M", action="store_true", default=None)
    p.add_argument("--labels", dest="label_extraction", choices=list(METHODS))
    p.add_argument("--sigma", type=_sigma_arg, help="'median' or a fixed bandwidth")
    p.add_argument("--standardize", action="store_true", default=None)

    s = sub.add_parser("synth", help="write a synthetic multi-view dataset")
    s.add_argument("--p", type=int, required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--d", type=int, required=True)
    s.add_argument("--separation", type=float, required=True)
    s.add_argument("--noise", required=True, help="comma-separated per-view noise sigmas")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    e = sub.add_parser("eval", help="score predicted labels against ground truth")
    e.add_argument("--pred", required=True)
    e.add_argument("--truth", required=True)
    return parser


_RUN_FLAGS = ["data_dir", "output_dir", "seed", "k", "w_mode", "ablation_uniform_M",
              "label_extraction", "sigma", "standardize"]


def _load_run_config(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{args.config}: invalid JSON: {exc}") from None
    cfg = RunConfig.from_dict(data)
    for name in _RUN_FLAGS:
        value = getattr(args, name)
        if value is not None:
            setattr(cfg, name, value)
    if args.data_dir is not None:
        cfg.synth = None
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = _stage("config", _load_run_config, args)
            report = cmd_run(cfg)
            print(json.dumps({"metrics": report["metrics"], "iterations": report["iterations"],
                              "stop_reason": report["stop_reason"]}, sort_keys=True))
        elif args.command == "synth":
            try:
                noise = [float(x) for x in args.noise.split(",")]
            except ValueError:
                raise ValidationError(f"--noise must be a comma-separated list of numbers: {args.noise!r}") from None
            spec = SynthSpec(args.p, args.n, args.k, args.d, args.separation, noise, args.seed)
            cmd_synth(spec, args.out)
        else:
            print(json.dumps(cmd_eval(args.pred, args.truth), sort_keys=True))
    except StageError as err:
        print(f"dsmc: error in stage '{err.stage}': {err.exc}", file=sys.stderr)
        return EXIT_VALIDATION if isinstance(err.exc, ValidationError) else EXIT_RUNTIME
    except ValidationError as exc:
        print(f"dsmc: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, RuntimeError, ArithmeticError) as exc:
        print(f"dsmc: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK
