import math

import numpy as np
import pytest

from kaczmarz.bench import (BenchReport, ExperimentSpec, GaussianSource, MatrixMarketSource,
                            RidgeMethod, SparseSource, emit_history_csv, gen_gaussian,
                            gen_sparse, make_consistent_system, make_ridge_system,
                            read_history_csv, run_experiment, write_history_csv)
from kaczmarz.diagnostics import ridge_operator_dense
from kaczmarz.errors import ConfigError, InconsistentSystem
from kaczmarz.matrix import Matrix
from kaczmarz.mmio import write_matrix_market
from kaczmarz.ridge import RidgeOperator
from kaczmarz.selection import SelectionStrategy


# ----------------------------------------------------------------------------------------
# Instances
def test_gaussian_is_seeded():
    a, b = gen_gaussian(20, 5, 3), gen_gaussian(20, 5, 3)
    np.testing.assert_array_equal(a.toarray(), b.toarray())
    assert np.any(gen_gaussian(20, 5, 4).toarray() != a.toarray())


def test_gaussian_entry_statistics():
    values = gen_gaussian(100, 100, 0).toarray().ravel()
    assert abs(values.mean()) <= 4. / math.sqrt(values.size)
    assert abs(values.var() - 1.) <= 0.1


def test_gaussian_rejects_empty_shape():
    with pytest.raises(ConfigError):
        gen_gaussian(0, 3)


def test_sparse_has_an_entry_in_every_row():
    A = gen_sparse(300, 20, 0.01, 6)
    assert A.is_sparse
    assert np.all(np.diff(A.storage.indptr) >= 1)
    np.testing.assert_array_equal(A.toarray(), gen_sparse(300, 20, 0.01, 6).toarray())


def test_sparse_rejects_bad_density():
    with pytest.raises(ConfigError):
        gen_sparse(3, 3, 0.)


def test_consistent_system():
    system = make_consistent_system(Matrix.from_dense(np.eye(3)))
    np.testing.assert_array_equal(system.b, [1., 1., 1.])
    system = make_consistent_system(Matrix.from_dense([[1., 2.], [3., 4.]]))
    np.testing.assert_array_equal(system.b, [3., 7.])
    np.testing.assert_array_equal(system.x_star, [1., 1.])


def test_generated_systems_pass_consistency_check():
    for seed in range(5):
        try:
            make_consistent_system(gen_sparse(50, 10, 0.2, seed))
        except InconsistentSystem:
            pytest.fail('generated system reported inconsistent')


def test_ridge_system():
    A = gen_gaussian(6, 4, 1)
    system = make_ridge_system(A, 0.2)
    dense = ridge_operator_dense(RidgeOperator(A, 0.2))
    np.testing.assert_allclose(system.b, dense @ np.ones(6), rtol=1e-12)
    assert system.x_star.shape == (6,)


# ----------------------------------------------------------------------------------------
# Experiments
def _spec(**kwargs):
    defaults = dict(source=GaussianSource(100, 20, 1),
                    methods=[SelectionStrategy.rk(), SelectionStrategy.grk(),
                             SelectionStrategy.prk()],
                    trials=3)
    defaults.update(kwargs)
    return ExperimentSpec(**defaults)


def test_run_experiment_rows():
    report = run_experiment(_spec())
    assert [r.method for r in report.results] == ['rk', 'grk', 'prk']
    assert (report.m, report.n, report.nnz) == (100, 20, 2000)
    for r in report.results:
        assert r.trials == 3 and len(r.iterations) == 3 and len(r.seconds) == 3
        assert not r.failed
    assert len(set(report.result('prk').iterations)) == 1


def test_deterministic_method_repeats_exactly():
    report = run_experiment(_spec(methods=[SelectionStrategy.prk()], trials=5))
    assert len(set(report.result('prk').iterations)) == 1


def test_failed_runs_are_reported():
    report = run_experiment(_spec(methods=[SelectionStrategy.rk()], max_iters=5, trials=2))
    r = report.result('rk')
    assert r.failed
    assert r.iterations == [5, 5]


def test_same_spec_same_report():
    spec = _spec(keep_histories=True)
    a, b = run_experiment(spec), run_experiment(spec)
    assert a.to_json(timing=False) == b.to_json(timing=False)


def test_report_json_round_trip():
    report = run_experiment(_spec(keep_histories=True, trials=2))
    text = report.to_json()
    again = BenchReport.from_json(text)
    assert again.to_json() == text
    assert again.result('grk').histories == report.result('grk').histories


def test_run_experiment_does_not_mutate_matrix():
    A = gen_gaussian(60, 10, 2)
    before = A.toarray()
    run_experiment(_spec(source=GaussianSource(60, 10, 2)), matrix=A)
    np.testing.assert_array_equal(A.toarray(), before)


def test_ridge_methods_in_experiment():
    spec = ExperimentSpec(source=SparseSource(20, 80, 0.1, 3),
                          methods=[RidgeMethod(tau=0.1), RidgeMethod(tau=0.1, method='prks',
                                                                     eta=0.5)],
                          trials=2)
    report = run_experiment(spec)
    assert [r.method for r in report.results] == ['ridge-prk/exact@tau=0.1',
                                                  'ridge-prks(0.5,inf)/exact@tau=0.1']
    assert not any(r.failed for r in report.results)


def test_matrix_market_source(tmp_path):
    path = str(tmp_path / 'inst.mtx')
    write_matrix_market(gen_sparse(50, 8, 0.3, 1), path)
    source = MatrixMarketSource(path, transpose=False)
    assert source.name == 'inst'
    assert MatrixMarketSource(path, transpose=True).name == 'inst^T'
    report = run_experiment(_spec(source=source, methods=[SelectionStrategy.prk()], trials=1))
    assert report.m == 50 and not report.result('prk').failed


@pytest.mark.parametrize('kwargs', [
    dict(trials=0), dict(methods=[]), dict(methods=['prk']), dict(tol=0.),
])
def test_spec_validation(kwargs):
    with pytest.raises(ConfigError):
        _spec(**kwargs)


def test_ridge_method_validation():
    with pytest.raises(ConfigError):
        RidgeMethod(tau=0.)
    with pytest.raises(ConfigError):
        RidgeMethod(tau=0.1, method='prks')


# ----------------------------------------------------------------------------------------
# History files
def test_empty_history_is_header_only(tmp_path):
    path = str(tmp_path / 'h.csv')
    write_history_csv({'prk': []}, path)
    with open(path) as f:
        assert f.read().splitlines() == ['iteration,prk']


def test_history_line_count(tmp_path):
    path = str(tmp_path / 'h.csv')
    write_history_csv({'rk': [(1, 0.5), (2, 0.25), (3, 0.125)]}, path)
    with open(path) as f:
        assert len(f.read().splitlines()) == 4


def test_history_parse_back(tmp_path):
    path = str(tmp_path / 'h.csv')
    histories = {'rk': [(0, math.inf), (1, 0.1 + 0.2), (3, 1e-300)],
                 'prk': [(0, math.inf), (2, 1. / 3.)]}
    write_history_csv(histories, path)
    assert read_history_csv(path) == histories


def test_emit_history_from_report(tmp_path):
    report = run_experiment(_spec(keep_histories=True, trials=1))
    path = str(tmp_path / 'h.csv')
    emit_history_csv(report, path)
    parsed = read_history_csv(path)
    assert list(parsed) == ['rk', 'grk', 'prk']
    expected = [(k, metric) for k, _, metric in report.result('prk').histories[0]]
    assert parsed['prk'] == expected


def test_emit_history_needs_histories(tmp_path):
    report = run_experiment(_spec(trials=1))
    with pytest.raises(ConfigError):
        emit_history_csv(report, str(tmp_path / 'h.csv'))
