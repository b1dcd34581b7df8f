"""The Kaczmarz iteration loop.

Each iteration selects a row with a pluggable `SelectionStrategy`, projects the
iterate onto that row's hyperplane, keeps the residual current, and evaluates
the stopping rule.
"""
import enum
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from kaczmarz.config import (CONSISTENCY_RTOL, DEFAULT_MAX_ITERS, DEFAULT_RECOMPUTE_EVERY, DEFAULT_TOL,
                             SEED, STAGNATION_FACTOR, STAGNATION_RTOL)
from kaczmarz.errors import ConfigError, DimensionMismatch, InconsistentSystem, ZeroResidual
from kaczmarz.matrix import axpy_row, matvec, row_dot, row_gram, row_norms
from kaczmarz.selection import SelectionState, SelectionStrategy, select_row
from kaczmarz.utils import make_rng

logger = logging.getLogger(__name__)


class StopRule(enum.Enum):
    KNOWN_SOLUTION_ERROR = 'known'
    RELATIVE_RESIDUAL = 'residual'


class Termination(enum.Enum):
    CONVERGED = 'converged'
    MAX_ITERS = 'max_iters'
    STAGNANT_RESIDUAL = 'stagnant_residual'
    TIME_BUDGET = 'time_budget'


@dataclass(frozen=True)
class LinearSystem:
    """A x = b, optionally with the known solution used by benchmark runs."""
    A: object
    b: np.ndarray
    x_star: np.ndarray = None

    def __post_init__(self):
        b = np.asarray(self.b, dtype=np.float64)
        if b.ndim != 1 or b.shape[0] != self.A.m:
            raise DimensionMismatch(self.A.m, b.shape[0] if b.ndim else 0, 'b')
        object.__setattr__(self, 'b', b)
        if self.x_star is not None:
            x_star = np.asarray(self.x_star, dtype=np.float64)
            if x_star.ndim != 1 or x_star.shape[0] != self.A.n:
                raise DimensionMismatch(self.A.n, x_star.shape[0] if x_star.ndim else 0, 'x_star')
            object.__setattr__(self, 'x_star', x_star)
            b_norm = np.linalg.norm(b)
            gap = np.linalg.norm(b - matvec(self.A, x_star))
            if gap > CONSISTENCY_RTOL * max(b_norm, np.finfo(float).tiny):
                raise InconsistentSystem(
                    '||b - A x_star|| / ||b|| = {:.3e} exceeds {:g}'.format(
                        gap / b_norm if b_norm else math.inf, CONSISTENCY_RTOL))


@dataclass(frozen=True)
class SolveConfig:
    """Everything a solve needs besides the system.

    Arguments:
    strategy: `SelectionStrategy`.
    tol: threshold on the stopping metric.
    max_iters: iteration cap.
    seed: seed of the solve's own generator.
    stop_rule: `StopRule`; KNOWN_SOLUTION_ERROR needs `x_star`.
    history_stride: record every history_stride-th iteration.
    recompute_every: full residual recomputation period (1 recomputes every step).
    time_budget: wall-clock seconds before giving up, None for no limit.
    x0: starting vector, zero when None.
    """
    strategy: SelectionStrategy
    tol: float = DEFAULT_TOL
    max_iters: int = DEFAULT_MAX_ITERS
    seed: int = SEED
    stop_rule: StopRule = StopRule.KNOWN_SOLUTION_ERROR
    history_stride: int = 1
    recompute_every: int = DEFAULT_RECOMPUTE_EVERY
    time_budget: float = None
    x0: np.ndarray = None

    def __post_init__(self):
        if not self.tol > 0.:
            raise ConfigError('tol must be positive, got {}'.format(self.tol))
        if self.max_iters < 0:
            raise ConfigError('max_iters must be nonnegative')
        if self.history_stride < 1:
            raise ConfigError('history_stride must be >= 1')
        if self.recompute_every < 1:
            raise ConfigError('recompute_every must be >= 1')
        if self.time_budget is not None and not self.time_budget > 0.:
            raise ConfigError('time_budget must be positive')


@dataclass
class SolveReport:
    """Outcome of one solve.

    `history` holds (iteration, selected row, metric) triples; the entry for
    iteration 0 carries row -1 since no row has been used yet.
    """
    x_final: np.ndarray
    iterations: int
    terminated: Termination
    metric: float
    history: list = field(default_factory=list)
    wall_time: float = 0.
    setup_time: float = 0.
    matvec_count: int = 0
    row_op_count: int = 0
    method: str = ''
    residual: np.ndarray = None

    @property
    def converged(self):
        return self.terminated is Termination.CONVERGED

    def metric_history(self):
        return [(k, value) for k, _, value in self.history]


# ----------------------------------------------------------------------------------------
def kaczmarz_step(system, x, i, norm_cache):
    """Project x in place onto {x : A_(i) x = b_i}; returns the step coefficient."""
    alpha = (system.b[i] - row_dot(system.A, i, x)) / norm_cache.norms_sq[i]
    axpy_row(system.A, i, alpha, x)
    return alpha


def residual_update(r, system, i, alpha):
    """r <- r - alpha * A A_(i)^T in place, with r_i pinned to 0."""
    if alpha != 0.:
        r -= alpha * row_gram(system.A, i)
    r[i] = 0.
    return r


def expected_progress(state, probabilities):
    """sum_i p_i r_i^2 / ||A_(i)||^2, the expected squared step length."""
    p = np.asarray(probabilities, dtype=np.float64)
    return float(np.dot(p, state.residual ** 2 / state.norm_cache.norms_sq))


def known_solution_error(x_star, x):
    """||x_star - x||^2 / ||x||^2, infinite while x is the zero vector."""
    d = x_star - x
    num = float(np.dot(d, d))
    if num == 0.:
        return 0.
    den = float(np.dot(x, x))
    return num / den if den > 0. else math.inf


def _relative_residual(r, b_norm):
    if b_norm == 0.:
        return float(np.linalg.norm(r))
    return float(np.linalg.norm(r)) / b_norm


def solve(system, config, on_step=None):
    """Run the Kaczmarz iteration for `system` under `config`.

    `on_step(k, i, x)` is called after every projection with the live iterate;
    it must not modify x.
    """
    strategy = config.strategy
    known = config.stop_rule is StopRule.KNOWN_SOLUTION_ERROR
    if known and system.x_star is None:
        raise ConfigError('the known-solution stopping rule needs x_star')

    setup_start = time.perf_counter()
    A, b = system.A, system.b
    norm_cache = row_norms(A)
    x = np.zeros(A.n) if config.x0 is None else np.array(config.x0, dtype=np.float64)
    if x.shape != (A.n,):
        raise DimensionMismatch(A.n, x.shape[0] if x.ndim else 0, 'x0')
    matvecs = 0
    track_residual = strategy.needs_residual or not known
    r = None
    if track_residual:
        r = b - matvec(A, x)
        matvecs += 1
    state = SelectionState(residual=r, norm_cache=norm_cache, rng=make_rng(config.seed))
    b_norm = float(np.linalg.norm(b))
    setup_time = time.perf_counter() - setup_start

    def metric_of():
        if known:
            return known_solution_error(system.x_star, x)
        return _relative_residual(r, b_norm)

    metric = metric_of()
    history = [(0, -1, metric)]
    best, last_improvement = metric, 0
    patience = STAGNATION_FACTOR * A.m
    terminated = Termination.MAX_ITERS
    row_ops = 0
    k = 0

    logger.info('solve %s: m=%d n=%d tol=%g', strategy.name, A.m, A.n, config.tol)
    start = time.perf_counter()
    while True:
        if metric < config.tol:
            terminated = Termination.CONVERGED
            break
        if k >= config.max_iters:
            break
        if config.time_budget is not None and time.perf_counter() - start > config.time_budget:
            terminated = Termination.TIME_BUDGET
            break
        state.k = k
        try:
            i = select_row(strategy, state)
        except ZeroResidual:
            terminated = Termination.CONVERGED
            break
        alpha = kaczmarz_step(system, x, i, norm_cache)
        row_ops += 2
        if track_residual:
            if (k + 1) % config.recompute_every == 0:
                r[:] = b - matvec(A, x)
            else:
                residual_update(r, system, i, alpha)
            matvecs += 1
        state.prev_row = i
        k += 1
        if on_step is not None:
            on_step(k, i, x)

        metric = metric_of()
        if k % config.history_stride == 0:
            history.append((k, i, metric))
            logger.debug('it %d row %d metric %.3e', k, i, metric)
        if metric < best * (1. - STAGNATION_RTOL):
            best, last_improvement = metric, k
        elif k - last_improvement >= patience:
            terminated = Termination.STAGNANT_RESIDUAL
            break
    wall_time = time.perf_counter() - start

    if history[-1][0] != k:
        history.append((k, state.prev_row if state.prev_row is not None else -1, metric))
    logger.info('solve %s: %s after %d iterations (metric %.3e, %.3f s)',
                strategy.name, terminated.value, k, metric, wall_time)
    return SolveReport(x_final=x, iterations=k, terminated=terminated, metric=metric,
                       history=history, wall_time=wall_time, setup_time=setup_time,
                       matvec_count=matvecs, row_op_count=row_ops, method=strategy.name,
                       residual=r)
