import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsmc.dataset import SynthSpec, generate_synthetic
from dsmc.errors import ValidationError
from dsmc.graph import embed_view
from dsmc.solver import (
    SolverConfig,
    ViewState,
    augmented_lagrangian,
    init_states,
    primal_residual,
    project_simplex,
    run,
    update_C,
    update_M,
    update_R,
    update_U,
    update_w,
    update_Y,
    view_weight,
)

import oracles


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def _state(p, k, **overrides):
    base = dict(F=np.eye(p)[:, :k], R=np.eye(k), M=np.full((p, k), 1.0 / p),
                U=np.zeros((p, k)), C=np.zeros((p, k)), w=1.0)
    base.update(overrides)
    return ViewState(**base)


# --- configuration and initialization ---------------------------------------

def test_config_rejects_bad_values():
    for bad in [dict(mu0=0), dict(rho=1.0), dict(mu_max=1e-3), dict(tol_residual=0), dict(w_mode="x")]:
        with pytest.raises(ValidationError):
            SolverConfig(k=2, **bad)


def test_init_three_views(rng):
    Fs = [np.linalg.qr(rng.standard_normal((6, 2)))[0] for _ in range(3)]
    Y, states, mu = init_states(Fs, SolverConfig(k=2))
    assert mu == 0.01
    assert all(s.w == pytest.approx(1 / 3) for s in states)
    for s in states:
        assert np.all(s.M == 1 / 6)
        np.testing.assert_allclose(s.M.sum(axis=0), 1.0, atol=1e-12)
        assert np.array_equal(s.R, np.eye(2))
        assert not s.U.any() and not s.C.any()
    np.testing.assert_allclose(Y, np.mean(Fs, axis=0))


def test_init_single_view_y_is_embedding(rng):
    F = np.linalg.qr(rng.standard_normal((5, 2)))[0]
    Y, _, _ = init_states([F], SolverConfig(k=2))
    assert np.array_equal(Y, F)


def test_init_rejects_mismatched_shapes(rng):
    with pytest.raises(ValidationError):
        init_states([np.zeros((5, 2)), np.zeros((4, 2))], SolverConfig(k=2))


# --- Y ----------------------------------------------------------------------

def test_update_y_single_view_zero_aux(rng):
    s = oracles.random_state(rng, 4, 2)
    s.U[:] = 0
    s.C[:] = 0
    np.testing.assert_allclose(update_Y([s], 0.5), s.F @ s.R)


def test_update_y_matches_gradient_descent(rng):
    states = [oracles.random_state(rng, 4, 2) for _ in range(2)]
    mu = 0.7
    np.testing.assert_allclose(update_Y(states, mu), oracles.y_by_gradient_descent(states, mu), atol=1e-6)


def test_update_y_local_optimality(rng):
    states = [oracles.random_state(rng, 5, 3) for _ in range(3)]
    mu = 0.3
    Y = update_Y(states, mu)
    base = augmented_lagrangian(Y, states, mu)
    for _ in range(100):
        d = rng.standard_normal(Y.shape)
        d *= 1e-3 / np.linalg.norm(d)
        assert base <= augmented_lagrangian(Y + d, states, mu)


# --- R ----------------------------------------------------------------------

@pytest.mark.parametrize("A", [np.eye(2), np.diag([2.0, 3.0])])
def test_update_r_identity_cases(A):
    # F = I_k, U = C = 0 makes F^T (Y - U + C/mu) = Y
    s = _state(2, 2, F=np.eye(2))
    np.testing.assert_allclose(update_R(s, A, 1.0), np.eye(2), atol=1e-12)


def test_update_r_recovers_rotation_against_grid(rng):
    F = np.linalg.qr(rng.standard_normal((4, 2)))[0]
    target = oracles.rotation(0.7)
    s = _state(4, 2, F=F)
    R = update_R(s, F @ target, 1.0)
    np.testing.assert_allclose(R, target, atol=1e-10)
    _, (grid_theta, reflect) = oracles.r_by_search(s, F @ target, 1.0)
    assert not reflect
    assert abs(grid_theta - 0.7) < 1e-3


def test_update_r_is_orthogonal(rng):
    for _ in range(20):
        s = oracles.random_state(rng, 6, 3)
        Y = rng.standard_normal((6, 3))
        R = update_R(s, Y, 0.2)
        assert np.abs(R.T @ R - np.eye(3)).max() <= 1e-8


# --- M ----------------------------------------------------------------------

def test_update_m_zero_u_is_uniform():
    s = _state(5, 2)
    np.testing.assert_allclose(update_M(s, 0.3), 0.2)


def test_update_m_closed_form_regime():
    s = _state(2, 1, U=np.array([[0.0], [np.sqrt(0.5)]]))
    M = update_M(s, 1.0)
    np.testing.assert_allclose(M[:, 0], [0.75, 0.25], atol=1e-12)
    np.testing.assert_allclose(M[:, 0], oracles.m_column_by_active_sets([0.0, 0.5], 1.0), atol=1e-12)


def test_update_m_clipping_regime_falls_back_to_projection():
    s = _state(2, 1, U=np.array([[0.0], [np.sqrt(10.0)]]))
    M = update_M(s, 1.0)
    np.testing.assert_allclose(M[:, 0], [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(M[:, 0], oracles.m_column_by_active_sets([0.0, 10.0], 1.0), atol=1e-12)


def test_update_m_matches_active_set_enumeration(rng):
    for _ in range(30):
        p, k = rng.integers(2, 6), rng.integers(1, 3)
        s = oracles.random_state(rng, p, k)
        mu = float(rng.uniform(0.05, 5.0))
        M = update_M(s, mu)
        K = s.w * s.U**2
        for j in range(k):
            np.testing.assert_allclose(M[:, j], oracles.m_column_by_active_sets(K[:, j], mu), atol=1e-10)


def test_project_simplex_examples():
    np.testing.assert_allclose(project_simplex(np.array([0.0, -0.5])), [0.75, 0.25])
    np.testing.assert_allclose(project_simplex(np.array([0.2, 0.3, 0.5])), [0.2, 0.3, 0.5])
    np.testing.assert_allclose(project_simplex(np.array([5.0, 0.0, 0.0])), [1.0, 0.0, 0.0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=8))
def test_project_simplex_properties(values):
    v = np.array(values)
    m = project_simplex(v)
    assert m.min() >= 0
    assert abs(m.sum() - 1) <= 1e-10
    # variational inequality: (v - m) . (z - m) <= 0 for simplex vertices z
    for i in range(v.size):
        z = np.zeros(v.size)
        z[i] = 1.0
        assert (v - m) @ (z - m) <= 1e-9


# --- U ----------------------------------------------------------------------

def test_update_u_zero_weight_passes_h_through(rng):
    s = oracles.random_state(rng, 3, 2)
    s.M[:] = 0.0
    Y = rng.standard_normal((3, 2))
    np.testing.assert_allclose(update_U(s, Y, 0.4), Y - s.F @ s.R + s.C / 0.4)


def test_update_u_scalar_formula():
    s = _state(1, 1, F=np.zeros((1, 1)), M=np.ones((1, 1)), w=1.0)
    assert update_U(s, np.ones((1, 1)), 2.0)[0, 0] == pytest.approx(0.5)


def test_update_u_matches_scalar_minimizer(rng):
    s = oracles.random_state(rng, 3, 2)
    Y = rng.standard_normal((3, 2))
    np.testing.assert_allclose(update_U(s, Y, 0.8), oracles.u_by_scalar_search(s, Y, 0.8), atol=1e-8)


# --- w and C ----------------------------------------------------------------

def test_view_weight_modes():
    assert view_weight(0.5, "reciprocal") == 1.0
    assert view_weight(0.5, "norm") == 0.5
    # guard path: min(1/(2 eps_w), w_cap); with the defaults the eps guard binds first
    assert view_weight(0.0, "reciprocal") == min(1 / (2 * 1e-8), 1e8) == 5e7
    assert view_weight(0.0, "reciprocal", eps_w=1e-12, w_cap=1e8) == 1e8


def test_update_w_uses_weighted_residual():
    s = _state(1, 1, F=np.zeros((1, 1)), M=np.full((1, 1), 0.25))
    # sqrt(0.25) * 1 = 0.5
    assert update_w(s, np.ones((1, 1))) == pytest.approx(1.0)
    assert update_w(s, np.ones((1, 1)), mode="norm") == pytest.approx(0.5)


@given(st.floats(0, 1e6), st.floats(0, 1e6))
def test_reciprocal_weight_is_antitone(r1, r2):
    lo, hi = sorted((r1, r2))
    assert view_weight(lo) >= view_weight(hi)


def test_update_c_zero_residual_and_mu_schedule(rng):
    s = oracles.random_state(rng, 3, 2)
    Y = s.F @ s.R + s.U
    C, mu = update_C(s, Y, 0.01, 1.1, 1e6)
    np.testing.assert_allclose(C, s.C)
    assert mu == pytest.approx(0.011)
    _, mu = update_C(s, Y, 1e6, 1.1, 1e6)
    assert mu == 1e6


# --- block descent ----------------------------------------------------------

@pytest.mark.parametrize("seed", range(20))
def test_each_block_update_does_not_increase_lagrangian(seed):
    rng = np.random.default_rng(seed)
    p, k, n = int(rng.integers(2, 7)), int(rng.integers(1, 4)), int(rng.integers(1, 4))
    k = min(k, p)
    states = [oracles.random_state(rng, p, k) for _ in range(n)]
    mu = float(rng.uniform(0.01, 5.0))
    Y = rng.standard_normal((p, k))

    before = augmented_lagrangian(Y, states, mu)
    Y = update_Y(states, mu)
    after = augmented_lagrangian(Y, states, mu)
    assert after <= before + 1e-9

    for step in (update_R, update_M, update_U):
        before = augmented_lagrangian(Y, states, mu)
        for s in states:
            if step is update_R:
                s.R = update_R(s, Y, mu)
            elif step is update_M:
                s.M = update_M(s, mu)
            else:
                s.U = update_U(s, Y, mu)
        after = augmented_lagrangian(Y, states, mu)
        assert after <= before + 1e-9, step.__name__


# --- full runs --------------------------------------------------------------

@pytest.fixture(scope="module")
def clean_embeddings():
    ds = generate_synthetic(SynthSpec(150, 3, 3, 10, 10.0, [0.1, 0.1, 0.1], 7))
    return ds, [embed_view(X, 3) for X in ds.views]


def test_run_converges_on_clean_data(clean_embeddings):
    _, embs = clean_embeddings
    _, states, trace = run(embs, SolverConfig(k=3))
    assert trace.stop_reason == "residual"
    assert trace.residuals[-1] <= 1e-4
    assert len(trace) <= 100
    assert all(r.iteration == i + 1 for i, r in enumerate(trace.records))


def test_run_mu_schedule(clean_embeddings):
    _, embs = clean_embeddings
    _, _, trace = run(embs, SolverConfig(k=3, mu_max=0.05, max_iter=40, tol_residual=1e-12, tol_objective=1e-15))
    mus = np.array([r.mu for r in trace.records])
    assert mus[0] == 0.01
    assert np.all(np.diff(mus) >= 0)
    assert mus.max() <= 0.05


def test_run_is_deterministic(clean_embeddings):
    _, embs = clean_embeddings
    a = run(embs, SolverConfig(k=3))
    b = run(embs, SolverConfig(k=3))
    assert np.array_equal(a[0], b[0])
    assert [vars(r) for r in a[2].records] == [vars(r) for r in b[2].records]


def test_single_view_first_y_update_is_fixed_point(rng):
    F = np.linalg.qr(rng.standard_normal((8, 2)))[0]
    seen = {}

    def observer(step, it, Y, states):
        if step == "Y" and it == 1:
            s = states[0]
            seen["gap"] = np.linalg.norm(Y - s.F @ s.R)
            seen["residual"] = primal_residual(s, Y)

    run([F], SolverConfig(k=2, max_iter=1), observer=observer)
    assert seen["gap"] == 0.0
    assert seen["residual"] == 0.0


def test_ablation_keeps_m_uniform(clean_embeddings):
    _, embs = clean_embeddings
    _, states, _ = run(embs, SolverConfig(k=3, ablation_uniform_M=True, max_iter=10))
    for s in states:
        assert np.all(s.M == 1 / 150)


def test_constraints_hold_after_every_update(clean_embeddings):
    _, embs = clean_embeddings
    worst = {"R": 0.0, "Mneg": 0.0, "Msum": 0.0}

    def observer(step, it, Y, states):
        for s in states:
            if step == "R":
                worst["R"] = max(worst["R"], np.abs(s.R.T @ s.R - np.eye(3)).max())
            if step == "M":
                worst["Mneg"] = max(worst["Mneg"], -s.M.min())
                worst["Msum"] = max(worst["Msum"], np.abs(s.M.sum(axis=0) - 1).max())

    run(embs, SolverConfig(k=3), observer=observer)
    assert worst["R"] <= 1e-8
    assert worst["Mneg"] <= 0.0
    assert worst["Msum"] <= 1e-10
