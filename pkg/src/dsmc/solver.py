"""Alternating-direction solver for double self-weighted multi-view clustering.

Every view ``v`` contributes a fixed spectral embedding ``F_v`` (p x k). The
solver learns, per view, an orthogonal alignment ``R_v`` (k x k), a
nonnegative feature-weight matrix ``M_v`` (p x k, columns on the probability
simplex), an auxiliary residual ``U_v`` standing in for ``Y - F_v R_v``, a
multiplier ``C_v`` and a scalar view weight ``w_v``, together with a shared
relaxed indicator ``Y`` (p x k). The augmented Lagrangian is

    J = sum_v  w_v ||sqrt(M_v) * U_v||_F^2 + mu/2 ||M_v||_F^2
             + mu/2 ||Y - F_v R_v - U_v + C_v / mu||_F^2

and one outer iteration updates Y, R, M, U, w, C in that order before growing
the penalty ``mu``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from dsmc.errors import NumericalError, ValidationError
from dsmc.graph import SpectralEmbedding

W_MODES = ("reciprocal", "norm")

# tolerance for accepting the unclipped closed-form M column
_COLUMN_SUM_TOL = 1e-10


@dataclass
class SolverConfig:
    k: int
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

    def __post_init__(self):
        if self.k < 1:
            raise ValidationError(f"k must be >= 1, got {self.k}")
        if not self.mu0 > 0:
            raise ValidationError("mu0 must be > 0")
        if not self.rho > 1:
            raise ValidationError("rho must be > 1")
        if not self.mu_max >= self.mu0:
            raise ValidationError("mu_max must be >= mu0")
        if not (self.tol_residual > 0 and self.tol_objective > 0):
            raise ValidationError("tolerances must be > 0")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be >= 1")
        if self.w_mode not in W_MODES:
            raise ValidationError(f"w_mode must be one of {W_MODES}, got {self.w_mode!r}")
        if not (self.w_cap > 0 and self.eps_w > 0):
            raise ValidationError("w_cap and eps_w must be > 0")


@dataclass
class ViewState:
    F: np.ndarray
    R: np.ndarray
    M: np.ndarray
    U: np.ndarray
    C: np.ndarray
    w: float

    def copy(self) -> "ViewState":
        return ViewState(self.F, self.R.copy(), self.M.copy(), self.U.copy(), self.C.copy(), self.w)


@dataclass
class TraceRecord:
    iteration: int
    objective: float
    primal_residual: float
    mu: float
    weights: list[float]


@dataclass
class IterationTrace:
    records: list[TraceRecord] = field(default_factory=list)
    stop_reason: str = ""

    def __len__(self) -> int:
        return len(self.records)

    @property
    def objectives(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])

    @property
    def residuals(self) -> np.ndarray:
        return np.array([r.primal_residual for r in self.records])

    def relative_changes(self) -> np.ndarray:
        """|J_t - J_{t-1}| / |J_{t-1}|; the first entry is inf."""
        J = self.objectives
        out = np.full(J.shape, np.inf)
        if J.size > 1:
            out[1:] = np.abs(np.diff(J)) / np.maximum(np.abs(J[:-1]), np.finfo(float).tiny)
        return out


def init_states(embeddings: Sequence[SpectralEmbedding | np.ndarray], cfg: SolverConfig):
    """Initial ``(Y, states, mu)``: uniform M, w = 1/n, R = I, U = C = 0."""
    Fs = [np.asarray(getattr(e, "F", e), dtype=float) for e in embeddings]
    if not Fs:
        raise ValidationError("need at least one embedding")
    p, k = Fs[0].shape
    for v, F in enumerate(Fs):
        if F.shape != (p, k):
            raise ValidationError(f"embedding {v} has shape {F.shape}, embedding 0 has {(p, k)}")
    n = len(Fs)
    states = [
        ViewState(
            F=F,
            R=np.eye(k),
            M=np.full((p, k), 1.0 / p),
            U=np.zeros((p, k)),
            C=np.zeros((p, k)),
            w=1.0 / n,
        )
        for F in Fs
    ]
    Y = np.mean(Fs, axis=0)
    return Y, states, float(cfg.mu0)


def update_Y(states: Sequence[ViewState], mu: float) -> np.ndarray:
    """Minimizer of the summed coupling terms: the average of ``F R + U - C/mu``."""
    return np.mean([s.F @ s.R + s.U - s.C / mu for s in states], axis=0)


def procrustes(A: np.ndarray) -> np.ndarray:
    """Orthogonal ``R`` maximizing ``tr(R^T A)``: ``P Q^T`` from ``A = P S Q^T``."""
    P, _, Qt = np.linalg.svd(A)
    return P @ Qt


def update_R(state: ViewState, Y: np.ndarray, mu: float, view: int | None = None) -> np.ndarray:
    A = state.F.T @ (Y - state.U + state.C / mu)
    try:
        return procrustes(A)
    except np.linalg.LinAlgError as exc:
        where = f" for view {view}" if view is not None else ""
        raise NumericalError(f"SVD failed in the alignment update{where}: {exc}") from exc


def project_simplex(V: np.ndarray) -> np.ndarray:
    """Euclidean projection of each column of ``V`` onto the probability simplex.

    Sort-and-threshold: with ``u`` the column sorted descending, the threshold
    is ``(cumsum(u)[r] - 1) / (r + 1)`` for the largest ``r`` keeping
    ``u[r]`` above it.
    """
    V = np.asarray(V, dtype=float)
    squeeze = V.ndim == 1
    if squeeze:
        V = V[:, None]
    p = V.shape[0]
    u = -np.sort(-V, axis=0)
    css = np.cumsum(u, axis=0) - 1.0
    ind = np.arange(1, p + 1)[:, None]
    cond = u - css / ind > 0
    r = p - 1 - np.argmax(cond[::-1], axis=0)
    theta = css[r, np.arange(V.shape[1])] / (r + 1)
    out = np.maximum(V - theta, 0.0)
    return out[:, 0] if squeeze else out


def update_M(state: ViewState, mu: float) -> np.ndarray:
    """Column-wise minimizer of ``w ||sqrt(M) * U||^2 + mu/2 ||M||^2`` over the simplex.

    The KKT closed form ``max(alpha - k/mu, 0)`` with
    ``alpha = 1/p + sum(k)/(p mu)`` is exact whenever no entry gets clipped;
    columns where clipping breaks the unit sum fall back to the exact
    projection of ``-k/mu``.
    """
    K = state.w * state.U * state.U
    p = K.shape[0]
    alpha = 1.0 / p + K.sum(axis=0) / (p * mu)
    M = np.maximum(alpha[None, :] - K / mu, 0.0)
    bad = np.abs(M.sum(axis=0) - 1.0) > _COLUMN_SUM_TOL
    if np.any(bad):
        M[:, bad] = project_simplex(-K[:, bad] / mu)
    return M


def update_U(state: ViewState, Y: np.ndarray, mu: float) -> np.ndarray:
    H = Y - state.F @ state.R + state.C / mu
    return mu * H / (mu + 2.0 * state.w * state.M)


def weighted_residual(state: ViewState, Y: np.ndarray) -> float:
    """``||sqrt(M) * (Y - F R)||_F``."""
    return float(np.linalg.norm(np.sqrt(state.M) * (Y - state.F @ state.R)))


def view_weight(r: float, mode: str = "reciprocal", eps_w: float = 1e-8, w_cap: float = 1e8) -> float:
    if mode == "reciprocal":
        return min(1.0 / (2.0 * max(r, eps_w)), w_cap)
    if mode == "norm":
        return float(r)
    raise ValidationError(f"unknown w_mode {mode!r}")


def update_w(state: ViewState, Y: np.ndarray, mode: str = "reciprocal", eps_w: float = 1e-8,
             w_cap: float = 1e8) -> float:
    return view_weight(weighted_residual(state, Y), mode, eps_w, w_cap)


def update_C(state: ViewState, Y: np.ndarray, mu: float, rho: float, mu_max: float):
    """Dual ascent on ``C`` and the next penalty ``min(mu_max, rho mu)``.

    The returned penalty is advanced once per outer iteration by ``run``,
    not once per view.
    """
    C = state.C + mu * (Y - state.F @ state.R - state.U)
    return C, min(mu_max, rho * mu)


def primal_residual(state: ViewState, Y: np.ndarray) -> float:
    return float(np.linalg.norm(Y - state.F @ state.R - state.U))


def view_lagrangian(state: ViewState, Y: np.ndarray, mu: float) -> float:
    coupling = Y - state.F @ state.R - state.U + state.C / mu
    return float(
        state.w * np.sum(state.M * state.U * state.U)
        + 0.5 * mu * np.sum(state.M * state.M)
        + 0.5 * mu * np.sum(coupling * coupling)
    )


def augmented_lagrangian(Y: np.ndarray, states: Sequence[ViewState], mu: float) -> float:
    return sum(view_lagrangian(s, Y, mu) for s in states)


StepObserver = Callable[[str, int, np.ndarray, Sequence[ViewState]], None]


def run(embeddings: Sequence[SpectralEmbedding | np.ndarray], cfg: SolverConfig,
        observer: StepObserver | None = None):
    """Iterate the six block updates until convergence.

    Stops when the largest per-view primal residual ``||Y - F R - U||_F``
    drops to ``tol_residual``, when the objective changes by at most
    ``tol_objective`` relative to the previous iteration, or after
    ``max_iter`` iterations.

    ``observer(step, iteration, Y, states)`` is called after each block
    update, with ``step`` one of ``"Y", "R", "M", "U", "w", "C"``.

    Returns ``(Y, states, trace)``.
    """
    Y, states, mu = init_states(embeddings, cfg)
    trace = IterationTrace()

    def notify(step, it):
        if observer is not None:
            observer(step, it, Y, states)

    prev = None
    for it in range(1, cfg.max_iter + 1):
        try:
            Y = update_Y(states, mu)
            notify("Y", it)
            for v, s in enumerate(states):
                s.R = update_R(s, Y, mu, view=v)
            notify("R", it)
            if not cfg.ablation_uniform_M:
                for s in states:
                    s.M = update_M(s, mu)
                notify("M", it)
            for s in states:
                s.U = update_U(s, Y, mu)
            notify("U", it)
            for s in states:
                s.w = update_w(s, Y, cfg.w_mode, cfg.eps_w, cfg.w_cap)
            notify("w", it)
            residual = max(primal_residual(s, Y) for s in states)
            new_mu = mu
            for s in states:
                s.C, new_mu = update_C(s, Y, mu, cfg.rho, cfg.mu_max)
            notify("C", it)
        except NumericalError as exc:
            raise NumericalError(f"iteration {it}: {exc}") from exc
        objective = augmented_lagrangian(Y, states, mu)
        if not (math.isfinite(objective) and np.all(np.isfinite(Y))):
            raise NumericalError(f"iteration {it}: non-finite objective or consensus")
        trace.records.append(TraceRecord(it, objective, residual, mu, [s.w for s in states]))
        mu = new_mu
        if residual <= cfg.tol_residual:
            trace.stop_reason = "residual"
            break
        if prev is not None and abs(objective - prev) <= cfg.tol_objective * max(abs(prev), np.finfo(float).tiny):
            trace.stop_reason = "objective"
            break
        prev = objective
    else:
        trace.stop_reason = "max_iter"
    return Y, states, trace
