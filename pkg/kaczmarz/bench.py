"""Benchmark harness: instance generation, experiment runs and their reports.

Every trial of every method runs with seed `seed_base + trial`, so two runs of
the same `ExperimentSpec` agree on everything but the timing fields.
"""
import csv
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from kaczmarz.config import (DEFAULT_MAX_ITERS, DEFAULT_RIDGE_TOL, DEFAULT_TIME_BUDGET,
                             DEFAULT_TOL, DEFAULT_TRIALS, NO_GATE, SEED)
from kaczmarz.engine import LinearSystem, SolveConfig, solve
from kaczmarz.errors import ConfigError
from kaczmarz.matrix import Matrix, matvec
from kaczmarz.mmio import read_matrix_market
from kaczmarz.ridge import NormMode, RidgeConfig, RidgeOperator, ridge_solve
from kaczmarz.selection import SelectionStrategy
from kaczmarz.utils import make_rng

logger = logging.getLogger(__name__)


# ----------------------------------------------------------------------------------------
# Instances
def gen_gaussian(m, n, seed=SEED):
    """Dense m x n matrix of i.i.d. standard normal entries."""
    if m < 1 or n < 1:
        raise ConfigError('matrix dimensions must be positive, got {}x{}'.format(m, n))
    return Matrix.from_dense(make_rng(seed).standard_normal((m, n)))


def gen_sparse(m, n, density, seed=SEED):
    """Sparse m x n Gaussian matrix with every row holding at least one entry."""
    if m < 1 or n < 1:
        raise ConfigError('matrix dimensions must be positive, got {}x{}'.format(m, n))
    if not 0. < density <= 1.:
        raise ConfigError('density must lie in (0, 1], got {}'.format(density))
    rng = make_rng(seed)
    coo = sp.random(m, n, density=density, format='coo', random_state=rng,
                    data_rvs=rng.standard_normal)
    empty = np.flatnonzero(np.bincount(coo.row, minlength=m) == 0)
    rows = np.concatenate([coo.row, empty])
    cols = np.concatenate([coo.col, rng.integers(0, n, size=len(empty))])
    vals = np.concatenate([coo.data, rng.standard_normal(len(empty))])
    return Matrix.from_sparse(sp.coo_array((vals, (rows, cols)), shape=(m, n)))


def make_consistent_system(A):
    """A x = b with x_star the all-ones vector and b = A x_star."""
    x_star = np.ones(A.n)
    return LinearSystem(A=A, b=matvec(A, x_star), x_star=x_star)


@dataclass(frozen=True)
class RidgeSystem:
    """(A A^T + tau I) x = b with x_star of length m."""
    A: Matrix
    tau: float
    b: np.ndarray
    x_star: np.ndarray


def make_ridge_system(A, tau):
    """b = (A A^T + tau I) 1, applied through the implicit operator."""
    x_star = np.ones(A.m)
    return RidgeSystem(A=A, tau=float(tau), b=RidgeOperator(A, tau).apply(x_star), x_star=x_star)


# ----------------------------------------------------------------------------------------
# Experiment description
@dataclass(frozen=True)
class MatrixMarketSource:
    path: str
    transpose: bool = False

    @property
    def name(self):
        base = os.path.splitext(os.path.basename(self.path))[0]
        return base + '^T' if self.transpose else base

    def load(self):
        return read_matrix_market(self.path, transpose=self.transpose)


@dataclass(frozen=True)
class GaussianSource:
    m: int
    n: int
    seed: int = SEED

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise ConfigError('matrix dimensions must be positive, got {}x{}'.format(self.m, self.n))

    @property
    def name(self):
        return 'gaussian-{}x{}-s{}'.format(self.m, self.n, self.seed)

    def load(self):
        return gen_gaussian(self.m, self.n, self.seed)


@dataclass(frozen=True)
class SparseSource:
    m: int
    n: int
    density: float
    seed: int = SEED

    @property
    def name(self):
        return 'sparse-{}x{}-d{:g}-s{}'.format(self.m, self.n, self.density, self.seed)

    def load(self):
        return gen_sparse(self.m, self.n, self.density, self.seed)


@dataclass(frozen=True)
class RidgeMethod:
    """Ridge solve (full or sampled argmax) for a fixed tau."""
    tau: float
    method: str = 'prk'
    norms: NormMode = NormMode.EXACT
    eta: float = None
    q: float = NO_GATE
    two_sided: bool = False

    def __post_init__(self):
        if not self.tau > 0.:
            raise ConfigError('tau must be positive, got {}'.format(self.tau))
        # fail early on a bad method/eta combination
        self.config(DEFAULT_RIDGE_TOL, DEFAULT_MAX_ITERS, SEED, None)

    def config(self, tol, max_iters, seed, time_budget, history_stride=1):
        return RidgeConfig(method=self.method, norms=self.norms, eta=self.eta, q=self.q,
                           two_sided=self.two_sided, tol=tol, max_iters=max_iters, seed=seed,
                           time_budget=time_budget, history_stride=history_stride)

    @property
    def name(self):
        return '{}@tau={:g}'.format(self.config(DEFAULT_RIDGE_TOL, 1, SEED, None).name, self.tau)


@dataclass(frozen=True)
class ExperimentSpec:
    """One instance, a list of methods and the protocol they all run under.

    Arguments:
    source: `MatrixMarketSource`, `GaussianSource` or `SparseSource`.
    methods: `SelectionStrategy` and/or `RidgeMethod` items.
    tol: stopping threshold; None picks the linear or ridge default per method.
    trials: repetitions per method.
    seed_base: trial t runs with seed seed_base + t.
    keep_histories: store every trial's history in the report.
    """
    source: object
    methods: tuple
    tol: float = None
    trials: int = DEFAULT_TRIALS
    seed_base: int = SEED
    max_iters: int = DEFAULT_MAX_ITERS
    time_budget: float = DEFAULT_TIME_BUDGET
    history_stride: int = 1
    keep_histories: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'methods', tuple(self.methods))
        if self.trials < 1:
            raise ConfigError('trials must be >= 1, got {}'.format(self.trials))
        if not self.methods:
            raise ConfigError('an experiment needs at least one method')
        for method in self.methods:
            if not isinstance(method, (SelectionStrategy, RidgeMethod)):
                raise ConfigError('unsupported method {!r}'.format(method))
        if self.tol is not None and not self.tol > 0.:
            raise ConfigError('tol must be positive, got {}'.format(self.tol))


# ----------------------------------------------------------------------------------------
# Reports
@dataclass
class MethodResult:
    method: str
    trials: int
    iterations: list
    seconds: list
    setup_seconds: list
    failed: bool
    histories: list = None

    @property
    def mean_it(self):
        return float(np.mean(self.iterations))

    @property
    def mean_seconds(self):
        return float(np.mean(self.seconds))


@dataclass
class BenchReport:
    """Per-method results on one instance plus the instance metadata."""
    instance: str
    m: int
    n: int
    nnz: int
    frobenius_norm: float
    results: list = field(default_factory=list)

    def result(self, method):
        for r in self.results:
            if r.method == method:
                return r
        raise KeyError(method)

    def to_dict(self, timing=True):
        rows = []
        for r in self.results:
            row = {'instance': self.instance, 'method': r.method, 'trials': r.trials,
                   'mean_it': r.mean_it, 'failed': r.failed, 'iterations': list(r.iterations)}
            if timing:
                row['mean_seconds'] = r.mean_seconds
                row['seconds'] = list(r.seconds)
                row['setup_seconds'] = list(r.setup_seconds)
            if r.histories is not None:
                row['histories'] = [[list(h) for h in hist] for hist in r.histories]
            rows.append(row)
        return {'instance': {'name': self.instance, 'm': self.m, 'n': self.n, 'nnz': self.nnz,
                             'frobenius_norm': self.frobenius_norm},
                'results': rows}

    def to_json(self, timing=True):
        return json.dumps(self.to_dict(timing=timing), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        meta = data['instance']
        results = []
        for row in data['results']:
            histories = row.get('histories')
            if histories is not None:
                histories = [[(int(k), int(i), float(v)) for k, i, v in hist]
                             for hist in histories]
            trials = row['trials']
            results.append(MethodResult(method=row['method'], trials=trials,
                                        iterations=list(row['iterations']),
                                        seconds=list(row.get('seconds', [0.] * trials)),
                                        setup_seconds=list(row.get('setup_seconds', [0.] * trials)),
                                        failed=row['failed'], histories=histories))
        return cls(instance=meta['name'], m=meta['m'], n=meta['n'], nnz=meta['nnz'],
                   frobenius_norm=meta['frobenius_norm'], results=results)

    def save(self, path):
        with open(path, 'w', encoding='utf-8') as f:
            f.write(self.to_json())
            f.write('\n')


# ----------------------------------------------------------------------------------------
def _default_tol(method, tol):
    if tol is not None:
        return tol
    return DEFAULT_RIDGE_TOL if isinstance(method, RidgeMethod) else DEFAULT_TOL


def run_experiment(spec, matrix=None):
    """Run every method of `spec` for `spec.trials` trials on one instance.

    `matrix` skips loading when the caller already holds the instance. A trial
    that does not converge is kept and marks its method as failed.
    """
    A = spec.source.load() if matrix is None else matrix
    report = BenchReport(instance=spec.source.name, m=A.m, n=A.n, nnz=A.nnz,
                         frobenius_norm=A.frobenius_norm())
    linear = None
    ridge_systems = {}

    for method in spec.methods:
        tol = _default_tol(method, spec.tol)
        iterations, seconds, setup_seconds, histories = [], [], [], []
        failed = False
        for trial in range(spec.trials):
            seed = spec.seed_base + trial
            if isinstance(method, RidgeMethod):
                system = ridge_systems.get(method.tau)
                if system is None:
                    system = ridge_systems[method.tau] = make_ridge_system(A, method.tau)
                config = method.config(tol, spec.max_iters, seed, spec.time_budget,
                                       spec.history_stride)
                result = ridge_solve(A, system.b, system.tau, config, x_star=system.x_star)
                name = method.name
            else:
                if linear is None:
                    linear = make_consistent_system(A)
                config = SolveConfig(strategy=method, tol=tol, max_iters=spec.max_iters,
                                     seed=seed, time_budget=spec.time_budget,
                                     history_stride=spec.history_stride)
                result = solve(linear, config)
                name = method.name
            iterations.append(result.iterations)
            seconds.append(result.wall_time)
            setup_seconds.append(result.setup_time)
            if spec.keep_histories:
                histories.append(list(result.history))
            failed = failed or not result.converged
            logger.info('%s %s trial %d/%d: IT=%d %s (%.3f s)', report.instance, name,
                        trial + 1, spec.trials, result.iterations, result.terminated.value,
                        result.wall_time)
        report.results.append(MethodResult(method=name, trials=spec.trials,
                                           iterations=iterations, seconds=seconds,
                                           setup_seconds=setup_seconds, failed=failed,
                                           histories=histories if spec.keep_histories else None))
    return report


# ----------------------------------------------------------------------------------------
# Convergence histories
def write_history_csv(histories, path):
    """Write {method: [(iteration, metric), ...]} as one column per method.

    Rows follow increasing iteration; a method without a value at some
    iteration leaves its cell empty.
    """
    methods = list(histories)
    columns = {method: dict(histories[method]) for method in methods}
    iterations = sorted(set(k for values in columns.values() for k in values))
    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(['iteration'] + methods)
        for k in iterations:
            writer.writerow([k] + [repr(float(columns[m][k])) if k in columns[m] else ''
                                   for m in methods])


def read_history_csv(path):
    with open(path, 'r', newline='', encoding='utf-8') as f:
        reader = csv.reader(f)
        header = next(reader)
        if not header or header[0] != 'iteration':
            raise ValueError('history file must start with an "iteration" column')
        methods = header[1:]
        histories = {method: [] for method in methods}
        for row in reader:
            k = int(row[0])
            for method, cell in zip(methods, row[1:]):
                if cell != '':
                    histories[method].append((k, float(cell)))
    return histories


def emit_history_csv(report, path, trial=0):
    """Write the `trial`-th stored history of every method in `report`."""
    histories = {}
    for r in report.results:
        if r.histories is None:
            raise ConfigError('report holds no histories; run with keep_histories=True')
        histories[r.method] = [(k, metric) for k, _, metric in r.histories[trial]]
    write_history_csv(histories, path)
