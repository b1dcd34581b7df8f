import numpy as np
import pytest

from kaczmarz.bench import gen_gaussian, gen_sparse, make_ridge_system
from kaczmarz.diagnostics import ridge_operator_dense
from kaczmarz.engine import StopRule, Termination
from kaczmarz.errors import ConfigError
from kaczmarz.matrix import Matrix
from kaczmarz.ridge import (NormMode, RidgeConfig, RidgeOperator, RidgeState, ridge_prk_step,
                            ridge_prks_step, ridge_residual, ridge_row_norms_exact,
                            ridge_solve, ridge_y_estimate)
from kaczmarz.utils import make_rng


def _wide(seed, m=20, n=60):
    return gen_gaussian(m, n, seed)


def _solve(A, tau, **kwargs):
    system = make_ridge_system(A, tau)
    return ridge_solve(A, system.b, tau, RidgeConfig(**kwargs), x_star=system.x_star), system


# ----------------------------------------------------------------------------------------
# Implicit operator
def test_tau_must_be_positive():
    A = _wide(0)
    for tau in (0., -1.):
        with pytest.raises(ConfigError):
            RidgeOperator(A, tau)
    with pytest.raises(ConfigError):
        ridge_solve(A, np.ones(A.m), 0., RidgeConfig(), x_star=np.ones(A.m))


@pytest.mark.parametrize('storage', ['dense', 'sparse'])
def test_operator_rows_and_products(storage):
    A = _wide(1) if storage == 'dense' else gen_sparse(20, 60, 0.1, 1)
    op = RidgeOperator(A, 0.3)
    K = ridge_operator_dense(op)
    for i in (0, 5, A.m - 1):
        np.testing.assert_allclose(op.row(i), K[i], rtol=1e-12, atol=1e-12)
    x = make_rng(2).standard_normal(A.m)
    np.testing.assert_allclose(op.apply(x), K @ x, rtol=1e-12)
    np.testing.assert_allclose(ridge_row_norms_exact(op), np.linalg.norm(K, axis=1), rtol=1e-12)


def test_operator_never_holds_an_m_by_m_array():
    A = _wide(3)
    system = make_ridge_system(A, 0.1)
    op = RidgeOperator(A, 0.1, NormMode.ESTIMATED)
    op.denominators()
    state = RidgeState.start(op, system.b)
    for _ in range(5):
        ridge_prk_step(op, state, system.b)
    held = list(vars(op).values()) + list(vars(state).values())
    for value in held:
        assert not (isinstance(value, np.ndarray) and value.ndim == 2)


def test_y_estimate_sandwich():
    rng = make_rng(4)
    violations = 0
    for trial in range(100):
        m, n = int(rng.integers(2, 25)), int(rng.integers(2, 25))
        if trial % 2:
            A = gen_sparse(m, n, 0.3, trial)
        else:
            A = gen_gaussian(m, n, trial)
        tau = float(10. ** rng.uniform(-3., 0.))
        op = RidgeOperator(A, tau, NormMode.ESTIMATED)
        ridge_y_estimate(op)
        y1, y2 = op.y_bounds
        z = ridge_row_norms_exact(op)
        slack = 1e-12 * y2
        violations += int(np.sum(y1 > y2 + slack)) + int(np.sum(z > y2 + slack))
        assert np.all(op.y_est >= y1 - slack) and np.all(op.y_est <= y2 + slack)
    assert violations == 0


def test_y_estimate_exact_for_nonnegative_diagonal():
    A = Matrix.from_dense(np.diag([1., 2., 3.]))
    op = RidgeOperator(A, 0.5, NormMode.ESTIMATED)
    np.testing.assert_allclose(ridge_y_estimate(op), [1.5, 4.5, 9.5])
    np.testing.assert_allclose(ridge_row_norms_exact(op), [1.5, 4.5, 9.5])


# ----------------------------------------------------------------------------------------
# Steps
@pytest.mark.parametrize('residual_mode', ['recompute', 'incremental'])
def test_exact_step_zeroes_active_residual(residual_mode):
    A = _wide(5)
    system = make_ridge_system(A, 0.1)
    op = RidgeOperator(A, 0.1)
    state = RidgeState.start(op, system.b)
    b_norm = np.linalg.norm(system.b)
    for _ in range(10):
        i = ridge_prk_step(op, state, system.b, residual_mode)
        assert abs(state.r[i]) <= 1e-10 * b_norm
        np.testing.assert_allclose(state.r, ridge_residual(op, state, system.b),
                                   atol=1e-10 * b_norm)


@pytest.mark.parametrize('residual_mode', ['recompute', 'incremental'])
def test_step_product_accounting(residual_mode):
    A = _wide(6)
    system = make_ridge_system(A, 0.1)
    op = RidgeOperator(A, 0.1)
    op.denominators()
    state = RidgeState.start(op, system.b)
    applies, transposes = op.applies, op.transpose_applies
    ridge_prk_step(op, state, system.b, residual_mode)
    assert op.applies - applies == 2
    assert op.transpose_applies - transposes == 1


def test_sampled_step_picks_from_sample_or_falls_back():
    A = _wide(7)
    system = make_ridge_system(A, 0.1)
    op = RidgeOperator(A, 0.1)
    state = RidgeState.start(op, system.b)
    i = ridge_prks_step(op, state, system.b, 0.2, np.inf, make_rng(0))
    assert 0 <= i < A.m
    assert abs(state.r[i]) <= 1e-10 * np.linalg.norm(system.b)


def test_state_start_from_x0():
    A = _wide(8)
    system = make_ridge_system(A, 0.1)
    op = RidgeOperator(A, 0.1)
    state = RidgeState.start(op, system.b, x0=system.x_star)
    assert np.linalg.norm(state.r) <= 1e-12 * np.linalg.norm(system.b)


# ----------------------------------------------------------------------------------------
# Solves
def test_identity_converges_within_m_steps():
    A = Matrix.from_dense(np.eye(5))
    report, _ = _solve(A, 0.7)
    assert report.converged
    assert report.iterations <= 5
    np.testing.assert_allclose(report.x_final, np.ones(5))


def test_start_at_solution():
    A = _wide(9)
    report, _ = _solve(A, 0.1, x0=np.ones(A.m))
    assert report.converged
    assert report.iterations == 0


@pytest.mark.parametrize('norms', [NormMode.EXACT, NormMode.ESTIMATED])
@pytest.mark.parametrize('residual_mode', ['recompute', 'incremental'])
def test_ridge_prk_converges(norms, residual_mode):
    A = gen_sparse(40, 200, 0.05, 10)
    report, system = _solve(A, 0.1, norms=norms, residual_mode=residual_mode, tol=1e-8,
                            resync_every=50)
    assert report.converged
    np.testing.assert_allclose(report.x_final, system.x_star, rtol=1e-3)


def test_recompute_mode_costs_three_products_per_step():
    A = _wide(11)
    report, _ = _solve(A, 0.1, tol=1e-6)
    assert report.matvec_count == 3 * report.iterations


def test_relative_residual_rule():
    A = _wide(12)
    system = make_ridge_system(A, 0.1)
    config = RidgeConfig(stop_rule=StopRule.RELATIVE_RESIDUAL, tol=1e-8)
    report = ridge_solve(A, system.b, 0.1, config)
    assert report.converged
    assert np.linalg.norm(report.residual) <= 1e-8 * np.linalg.norm(system.b)


def test_max_iters():
    report, _ = _solve(_wide(13), 0.1, max_iters=4)
    assert report.terminated is Termination.MAX_ITERS
    assert report.iterations == 4


@pytest.mark.parametrize('seed', range(10))
def test_full_ungated_sampling_equals_prk(seed):
    A = gen_sparse(30, 90, 0.1, seed)
    prk, _ = _solve(A, 0.05, tol=1e-8, seed=seed)
    prks, _ = _solve(A, 0.05, tol=1e-8, seed=seed, method='prks', eta=1.)
    assert [i for _, i, _ in prk.history] == [i for _, i, _ in prks.history]
    np.testing.assert_array_equal(prk.x_final, prks.x_final)


@pytest.mark.parametrize('seed', range(3))
def test_sampled_solve_matches_dense_oracle(seed):
    # the 300x20 Gaussian instance enters transposed; K + tau I is 20x20
    A = gen_gaussian(300, 20, seed).transpose()
    tau = 0.01
    system = make_ridge_system(A, tau)
    config = RidgeConfig(method='prks', eta=0.1, tol=1e-8, max_iters=100000, seed=seed)
    report = ridge_solve(A, system.b, tau, config, x_star=system.x_star)
    assert report.converged
    oracle = np.linalg.solve(ridge_operator_dense(RidgeOperator(A, tau)), system.b)
    err = np.linalg.norm(report.x_final - oracle) / np.linalg.norm(oracle)
    assert err < 1e-3


@pytest.mark.parametrize('kwargs', [
    dict(method='grk'), dict(method='prks'), dict(method='prks', eta=1.5),
    dict(method='prks', eta=0.1, q=0.), dict(tol=0.), dict(residual_mode='lazy'),
    dict(resync_every=0), dict(norms='approximate'),
])
def test_ridge_config_validation(kwargs):
    with pytest.raises(ValueError):
        RidgeConfig(**kwargs)


def test_ridge_config_names():
    assert RidgeConfig().name == 'ridge-prk/exact'
    assert RidgeConfig(method='prks', eta=0.01, norms='estimated').name == \
        'ridge-prks(0.01,inf)/estimated'


# ----------------------------------------------------------------------------------------
@pytest.mark.slow
def test_oracle_agreement():
    shapes = [(40, 200), (60, 300), (80, 400)]
    taus = [0.1, 0.01, 0.001]
    methods = [dict(norms=NormMode.EXACT), dict(norms=NormMode.ESTIMATED),
               dict(method='prks', eta=0.1)]
    for seed in range(20):
        m, n = shapes[seed % 3]
        tau = taus[(seed // 3) % 3]
        A = gen_sparse(m, n, 0.05, seed)
        system = make_ridge_system(A, tau)
        oracle = np.linalg.solve(ridge_operator_dense(RidgeOperator(A, tau)), system.b)
        for kwargs in methods:
            config = RidgeConfig(tol=1e-8, seed=seed, **kwargs)
            report = ridge_solve(A, system.b, tau, config, x_star=system.x_star)
            assert report.converged, (seed, config.name)
            err = np.linalg.norm(report.x_final - oracle) / np.linalg.norm(oracle)
            assert err <= 1e-3, (seed, config.name, err)


@pytest.mark.slow
def test_iterations_insensitive_to_tau():
    for seed in range(3):
        A = gen_gaussian(60, 300, seed)
        counts = [_solve(A, tau)[0].iterations for tau in (0.1, 0.01, 0.001)]
        assert (max(counts) - min(counts)) / min(counts) < 0.25
