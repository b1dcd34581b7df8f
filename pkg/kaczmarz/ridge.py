"""Matrix-free Kaczmarz solvers for the ridge system (A A^T + tau I) x = b.

The m-by-m operator K + tau I is never formed. Its rows are applied through one
product with A, and the iterate carries the auxiliary w = A^T x so that the
residual costs one more product with A.
"""
import enum
import logging
import time
from dataclasses import dataclass

import numpy as np

from kaczmarz.config import (DEFAULT_MAX_ITERS, DEFAULT_RIDGE_RESYNC_EVERY, DEFAULT_RIDGE_TOL,
                             NO_GATE, SAMPLE_ATTEMPT_CAP, SEED, STAGNATION_FACTOR,
                             STAGNATION_RTOL)
from kaczmarz.engine import SolveReport, StopRule, Termination, known_solution_error
from kaczmarz.errors import ConfigError, DimensionMismatch, ZeroResidual
from kaczmarz.matrix import matvec, rmatvec, row_norms
from kaczmarz.selection import draw_sample
from kaczmarz.utils import make_rng

logger = logging.getLogger(__name__)


class NormMode(enum.Enum):
    EXACT = 'exact'
    ESTIMATED = 'estimated'


class RidgeOperator:
    """Implicit K + tau I with K = A A^T.

    Exposes single rows and full products through A and A^T only, and counts
    the products it performs.

    Arguments:
    A: `Matrix`, m x n.
    tau: regularisation weight, strictly positive.
    mode: `NormMode` choosing z (exact row norms) or y (estimate) as the
        row scale used in both the selection ratio and the step.
    """

    def __init__(self, A, tau, mode=NormMode.EXACT):
        if not tau > 0.:
            raise ConfigError('tau must be positive, got {}'.format(tau))
        self.A = A
        self.tau = float(tau)
        self.mode = NormMode(mode)
        self.exact_row_norms = None
        self.y_est = None
        self.y_bounds = None
        self._norm_cache = None
        self.applies = 0
        self.transpose_applies = 0

    @property
    def m(self):
        return self.A.m

    def apply_A(self, v):
        self.applies += 1
        return matvec(self.A, v)

    def apply_At(self, v):
        self.transpose_applies += 1
        return rmatvec(self.A, v)

    def row(self, i):
        """Row i of K + tau I (equal to its column): A A_(i)^T + tau e_i."""
        g = self.apply_A(self.A.row(i))
        g[i] += self.tau
        return g

    def apply(self, x):
        return self.apply_A(self.apply_At(x)) + self.tau * x

    @property
    def norm_cache(self):
        """Row norms of A itself, used by the sampling gate."""
        if self._norm_cache is None:
            self._norm_cache = row_norms(self.A)
        return self._norm_cache

    def denominators(self):
        if self.mode is NormMode.EXACT:
            return ridge_row_norms_exact(self)
        return ridge_y_estimate(self)

    @property
    def product_count(self):
        return self.applies + self.transpose_applies


@dataclass
class RidgeState:
    """Iterate x (length m), w = A^T x (length n) and r = b - (K + tau I) x."""
    x: np.ndarray
    w: np.ndarray
    r: np.ndarray

    @classmethod
    def start(cls, op, b, x0=None):
        if x0 is None:
            return cls(x=np.zeros(op.m), w=np.zeros(op.A.n), r=np.array(b, dtype=np.float64))
        x = np.array(x0, dtype=np.float64)
        if x.shape != (op.m,):
            raise DimensionMismatch(op.m, x.shape[0] if x.ndim else 0, 'x0')
        state = cls(x=x, w=op.apply_At(x), r=None)
        state.r = ridge_residual(op, state, b)
        return state

    def resync(self, op, b):
        self.w = op.apply_At(self.x)
        self.r = ridge_residual(op, self, b)


# ----------------------------------------------------------------------------------------
def ridge_row_norms_exact(op):
    """z_i = ||A_(i) A^T + tau e_i||_2, one product with A per row, cached."""
    if op.exact_row_norms is None:
        z = np.empty(op.m)
        for i in range(op.m):
            z[i] = np.linalg.norm(op.row(i))
        op.exact_row_norms = z
    return op.exact_row_norms


def ridge_y_estimate(op):
    """y = (y1 + y2) / 2 with y1 = |A (A^T e) + tau e| and y2 = |A| (|A|^T e) + tau e.

    Two transpose-applies and two applies, computed once and cached. Both
    bounds are kept on `op.y_bounds`.
    """
    if op.y_est is None:
        e = np.ones(op.m)
        y1 = np.abs(op.apply_A(op.apply_At(e)) + op.tau * e)
        abs_a = op.A.abs()
        op.transpose_applies += 1
        op.applies += 1
        y2 = matvec(abs_a, rmatvec(abs_a, e)) + op.tau * e
        op.y_bounds = (y1, y2)
        op.y_est = (y1 + y2) / 2.
    return op.y_est


def ridge_residual(op, state, b):
    """b - A w - tau x, valid while w is in sync with x."""
    return b - op.apply_A(state.w) - op.tau * state.x


def _project(op, state, b, i, d, residual_mode):
    g = op.row(i)
    alpha = state.r[i] / d[i] ** 2
    state.x += alpha * g
    at_g = op.apply_At(g)
    state.w += alpha * at_g
    if residual_mode == 'incremental':
        state.r -= alpha * (op.apply_A(at_g) + op.tau * g)
        if op.mode is NormMode.EXACT:
            state.r[i] = 0.
    else:
        state.r = ridge_residual(op, state, b)
    return state


def ridge_prk_step(op, state, b, residual_mode='recompute'):
    """Project onto the row with the largest |r_i| / d_i over all m rows."""
    d = op.denominators()
    h = np.abs(state.r) / d
    i = int(np.argmax(h))
    if h[i] == 0.:
        raise ZeroResidual()
    _project(op, state, b, i, d, residual_mode)
    return i


def ridge_prks_step(op, state, b, eta, q, rng, two_sided=False, residual_mode='recompute'):
    """Same projection, with the argmax taken over a Z-test gated random sample."""
    d = op.denominators()
    cache = op.norm_cache
    for _ in range(SAMPLE_ATTEMPT_CAP):
        sample = draw_sample(op.m, eta, q, cache, rng, cache.mu, two_sided=two_sided)
        idx = sample.indices
        h = np.abs(state.r[idx]) / d[idx]
        j = int(np.argmax(h))
        if h[j] > 0.:
            i = int(idx[j])
            _project(op, state, b, i, d, residual_mode)
            return i
    # the samples kept landing on solved rows; fall back to the full scan
    return ridge_prk_step(op, state, b, residual_mode)


# ----------------------------------------------------------------------------------------
@dataclass(frozen=True)
class RidgeConfig:
    """Configuration of a ridge solve.

    Arguments:
    method: 'prk' (full argmax) or 'prks' (sampled argmax).
    norms: `NormMode`.
    eta, q, two_sided: sampling parameters of 'prks'.
    residual_mode: 'recompute' rebuilds r from (w, x) each step; 'incremental'
        updates r in place and resynchronises every `resync_every` steps.
    """
    method: str = 'prk'
    norms: NormMode = NormMode.EXACT
    eta: float = None
    q: float = NO_GATE
    two_sided: bool = False
    tol: float = DEFAULT_RIDGE_TOL
    max_iters: int = DEFAULT_MAX_ITERS
    seed: int = SEED
    stop_rule: StopRule = StopRule.KNOWN_SOLUTION_ERROR
    history_stride: int = 1
    residual_mode: str = 'recompute'
    resync_every: int = DEFAULT_RIDGE_RESYNC_EVERY
    time_budget: float = None
    x0: np.ndarray = None

    def __post_init__(self):
        if self.method not in ('prk', 'prks'):
            raise ConfigError('ridge method must be prk or prks, got "{}"'.format(self.method))
        object.__setattr__(self, 'norms', NormMode(self.norms))
        if self.method == 'prks':
            if self.eta is None or not 0. < self.eta <= 1.:
                raise ConfigError('eta must lie in (0, 1], got {}'.format(self.eta))
            if not self.q > 0.:
                raise ConfigError('q must be positive, got {}'.format(self.q))
        if not self.tol > 0.:
            raise ConfigError('tol must be positive, got {}'.format(self.tol))
        if self.residual_mode not in ('recompute', 'incremental'):
            raise ConfigError('residual_mode must be recompute or incremental')
        if self.resync_every < 1 or self.history_stride < 1:
            raise ConfigError('resync_every and history_stride must be >= 1')

    @property
    def name(self):
        if self.method == 'prks':
            return 'ridge-prks({:g},{:g})/{}'.format(self.eta, self.q, self.norms.value)
        return 'ridge-prk/{}'.format(self.norms.value)


def ridge_solve(A, b, tau, config, x_star=None):
    """Solve (A A^T + tau I) x = b with the ridge PRK or PRKS iteration."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape != (A.m,):
        raise DimensionMismatch(A.m, b.shape[0] if b.ndim else 0, 'b')
    known = config.stop_rule is StopRule.KNOWN_SOLUTION_ERROR
    if known and x_star is None:
        raise ConfigError('the known-solution stopping rule needs x_star')

    setup_start = time.perf_counter()
    op = RidgeOperator(A, tau, config.norms)
    op.denominators()
    state = RidgeState.start(op, b, config.x0)
    rng = make_rng(config.seed)
    b_norm = float(np.linalg.norm(b))
    setup_time = time.perf_counter() - setup_start
    setup_products = op.product_count

    def metric_of():
        if known:
            return known_solution_error(x_star, state.x)
        r_norm = float(np.linalg.norm(state.r))
        return r_norm / b_norm if b_norm else r_norm

    metric = metric_of()
    history = [(0, -1, metric)]
    best, last_improvement = metric, 0
    patience = STAGNATION_FACTOR * A.m
    terminated = Termination.MAX_ITERS
    last_row = -1
    k = 0

    logger.info('ridge solve %s: m=%d n=%d tau=%g', config.name, A.m, A.n, tau)
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
        try:
            if config.method == 'prk':
                last_row = ridge_prk_step(op, state, b, config.residual_mode)
            else:
                last_row = ridge_prks_step(op, state, b, config.eta, config.q, rng,
                                           config.two_sided, config.residual_mode)
        except ZeroResidual:
            terminated = Termination.CONVERGED
            break
        k += 1
        if config.residual_mode == 'incremental' and k % config.resync_every == 0:
            state.resync(op, b)

        metric = metric_of()
        if k % config.history_stride == 0:
            history.append((k, last_row, metric))
        if metric < best * (1. - STAGNATION_RTOL):
            best, last_improvement = metric, k
        elif k - last_improvement >= patience:
            terminated = Termination.STAGNANT_RESIDUAL
            break
    wall_time = time.perf_counter() - start

    if history[-1][0] != k:
        history.append((k, last_row, metric))
    logger.info('ridge solve %s: %s after %d iterations (metric %.3e, %.3f s)',
                config.name, terminated.value, k, metric, wall_time)
    return SolveReport(x_final=state.x, iterations=k, terminated=terminated, metric=metric,
                       history=history, wall_time=wall_time, setup_time=setup_time,
                       matvec_count=op.product_count - setup_products, row_op_count=k,
                       method=config.name, residual=state.r)
