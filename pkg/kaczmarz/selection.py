"""Row-selection rules and the Z-test gated simple random sampler.

Every rule maps the current residual state to one row index. Probabilistic
rules draw by inverse CDF over prefix sums; argmax rules break ties towards the
smallest row index.
"""
import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from kaczmarz import config
from kaczmarz.errors import AllSampledResidualsZero, ConfigError, EmptySample, ZeroResidual

logger = logging.getLogger(__name__)


class Variant(enum.Enum):
    CYCLIC = 'cyclic'
    NORM_WEIGHTED = 'rk'
    GREEDY = 'grk'
    RELAXED_GREEDY = 'rgrk'
    POWER_T = 'powert'
    MAX_HOMOGENIZED = 'prk'
    SAMPLED_MAX = 'prks'


@dataclass(frozen=True)
class SelectionStrategy:
    """Tagged configuration of one of the seven row-selection rules.

    Arguments:
    variant: which rule.
    theta: relaxation weight of RELAXED_GREEDY, in [0, 1].
    t: exponent of POWER_T, integer >= 1.
    eta: sampling ratio of SAMPLED_MAX, in (0, 1].
    q: Z-test critical value of SAMPLED_MAX, > 0 (`math.inf` disables the gate).
    two_sided: compare |Z| < q instead of the signed Z < q.
    """
    variant: Variant
    theta: float = None
    t: int = None
    eta: float = None
    q: float = None
    two_sided: bool = False

    def __post_init__(self):
        v = self.variant
        if v is Variant.RELAXED_GREEDY:
            if self.theta is None or not 0. <= self.theta <= 1.:
                raise ConfigError('theta must lie in [0, 1], got {}'.format(self.theta))
        elif self.theta is not None:
            raise ConfigError('theta only applies to rgrk')
        if v is Variant.POWER_T:
            if self.t is None or int(self.t) != self.t or self.t < 1:
                raise ConfigError('t must be an integer >= 1, got {}'.format(self.t))
        elif self.t is not None:
            raise ConfigError('t only applies to powert')
        if v is Variant.SAMPLED_MAX:
            if self.eta is None or not 0. < self.eta <= 1.:
                raise ConfigError('eta must lie in (0, 1], got {}'.format(self.eta))
            if self.q is None or not self.q > 0.:
                raise ConfigError('q must be positive, got {}'.format(self.q))
        elif self.eta is not None or self.q is not None or self.two_sided:
            raise ConfigError('eta, q and two_sided only apply to prks')

    # ------------------------------------------------------------------------------------
    @classmethod
    def cyclic(cls):
        return cls(Variant.CYCLIC)

    @classmethod
    def rk(cls):
        return cls(Variant.NORM_WEIGHTED)

    @classmethod
    def grk(cls):
        return cls(Variant.GREEDY)

    @classmethod
    def rgrk(cls, theta=config.DEFAULT_THETA):
        return cls(Variant.RELAXED_GREEDY, theta=float(theta))

    @classmethod
    def power_t(cls, t):
        return cls(Variant.POWER_T, t=int(t))

    @classmethod
    def prk(cls):
        return cls(Variant.MAX_HOMOGENIZED)

    @classmethod
    def prks(cls, eta, q=config.DEFAULT_Q, two_sided=False):
        return cls(Variant.SAMPLED_MAX, eta=float(eta), q=float(q), two_sided=two_sided)

    @classmethod
    def from_name(cls, name, theta=None, t=None, eta=None, q=None, two_sided=False):
        """Build from a CLI method name, filling the documented defaults."""
        try:
            variant = Variant(name)
        except ValueError:
            raise ConfigError('unknown method "{}"'.format(name))
        if variant is Variant.RELAXED_GREEDY and theta is None:
            theta = config.DEFAULT_THETA
        if variant is Variant.SAMPLED_MAX and q is None:
            q = config.DEFAULT_Q
        return cls(variant, theta=theta, t=t, eta=eta, q=q, two_sided=two_sided)

    @property
    def name(self):
        v = self.variant
        if v is Variant.RELAXED_GREEDY:
            return 'rgrk({:g})'.format(self.theta)
        if v is Variant.POWER_T:
            return 'powert({})'.format(self.t)
        if v is Variant.SAMPLED_MAX:
            return 'prks({:g},{:g})'.format(self.eta, self.q)
        return v.value

    @property
    def needs_residual(self):
        return self.variant not in (Variant.CYCLIC, Variant.NORM_WEIGHTED)


@dataclass
class SelectionState:
    """Residual state a rule reads; `rng` is the only mutable piece it touches.

    Arguments:
    residual: r_k = b - A x_k, length m (may be None for rules that ignore it).
    norm_cache: `RowNormCache` of A.
    rng: `numpy.random.Generator` owned by the solve.
    prev_row: row selected at iteration k - 1, if any.
    k: iteration index.
    """
    residual: np.ndarray
    norm_cache: object
    rng: np.random.Generator
    prev_row: int = None
    k: int = 0


@dataclass
class SampleSet:
    indices: np.ndarray
    z_score: float
    accepted: bool
    attempts: int = field(default=1)


# ----------------------------------------------------------------------------------------
# Helpers
def _draw_weighted(rng, cumulative):
    """Inverse-CDF draw over prefix sums; zero-weight slots are never hit."""
    u = rng.random() * cumulative[-1]
    i = int(np.searchsorted(cumulative, u, side='right'))
    return min(i, len(cumulative) - 1)


def _residual_sq_norm(state):
    r = state.residual
    rr = float(np.dot(r, r))
    if rr == 0.:
        raise ZeroResidual()
    return rr


def homogenized(state):
    """|r_i| / ||A_(i)||_2 for every row."""
    return np.abs(state.residual) / state.norm_cache.norms


def sample_size(m, eta):
    # rounding guard so that e.g. 0.05 * 20000 is 1000, not 1001
    return max(1, math.ceil(round(eta * m, 9)))


# ----------------------------------------------------------------------------------------
# Rules
def select_cyclic(k, m):
    assert m >= 1
    return k % m


def select_rk(state):
    return _draw_weighted(state.rng, state.norm_cache.cumulative)


def relaxed_epsilon(state, theta):
    """theta * max_i(r_i^2/||A_i||^2) / ||r||^2 + (1 - theta) / ||A||_F^2."""
    rr = _residual_sq_norm(state)
    cache = state.norm_cache
    ratios = state.residual ** 2 / cache.norms_sq
    return theta * float(ratios.max()) / rr + (1. - theta) / cache.frobenius_sq


def grk_epsilon(state):
    return relaxed_epsilon(state, 0.5)


def grk_index_set(state, epsilon):
    """Rows whose squared residual reaches epsilon * ||r||^2 * ||A_(i)||^2.

    The argmax row is always a member, even when rounding in epsilon would
    push it a hair below its own threshold.
    """
    r = state.residual
    rr = float(np.dot(r, r))
    r_sq = r ** 2
    mask = r_sq >= epsilon * rr * state.norm_cache.norms_sq
    mask[int(np.argmax(r_sq / state.norm_cache.norms_sq))] = True
    return np.flatnonzero(mask)


def select_rgrk(state, theta):
    if theta == 1.:
        # the index set collapses to the argmax rows
        return select_prk(state)
    epsilon = relaxed_epsilon(state, theta)
    upsilon = grk_index_set(state, epsilon)
    weights = state.residual[upsilon] ** 2
    return int(upsilon[_draw_weighted(state.rng, np.cumsum(weights))])


def select_grk(state):
    return select_rgrk(state, 0.5)


def power_t_probabilities(state, t):
    """Normalised (|r_i|/||A_(i)||)^t, with the max ratio divided out first."""
    h = homogenized(state)
    h_max = float(h.max())
    if h_max == 0.:
        raise ZeroResidual()
    weights = (h / h_max) ** t
    return weights / weights.sum()


def select_power_t(state, t):
    h = homogenized(state)
    h_max = float(h.max())
    if h_max == 0.:
        raise ZeroResidual()
    return _draw_weighted(state.rng, np.cumsum((h / h_max) ** t))


def select_prk(state):
    h = homogenized(state)
    i = int(np.argmax(h))
    if h[i] == 0.:
        raise ZeroResidual()
    return i


# ----------------------------------------------------------------------------------------
# Simple random sampling with a Z-test gate
def z_score(sample, norm_cache, mu):
    """(mean - mu) / (s / sqrt(|sample|)) over the squared row norms of the sample.

    `s` uses divisor |sample|. A sample without spread, or one that is the
    whole population, scores 0.
    """
    sample = np.asarray(sample)
    size = len(sample)
    if size == 0:
        raise EmptySample('cannot score an empty sample')
    if size == norm_cache.m:
        return 0.
    values = norm_cache.norms_sq[sample]
    mean = float(values.mean())
    s = float(values.std())
    if s == 0.:
        return 0.
    return (mean - mu) / (s / math.sqrt(size))


def draw_sample(m, eta, q, norm_cache, rng, mu, two_sided=False,
                attempt_cap=config.SAMPLE_ATTEMPT_CAP):
    """Draw ceil(eta*m) distinct rows until the Z-test accepts the sample.

    After `attempt_cap` rejections the draw with the smallest |Z| seen is
    accepted. Indices are returned sorted so argmax ties resolve to the
    smallest row.
    """
    size = sample_size(m, eta)
    if size >= m:
        return SampleSet(indices=np.arange(m), z_score=0., accepted=True, attempts=1)
    best = None
    for attempt in range(1, attempt_cap + 1):
        indices = np.sort(rng.choice(m, size=size, replace=False))
        z = z_score(indices, norm_cache, mu)
        passed = abs(z) < q if two_sided else z < q
        if passed:
            return SampleSet(indices=indices, z_score=z, accepted=True, attempts=attempt)
        if best is None or abs(z) < abs(best[1]):
            best = (indices, z)
    logger.debug('sample gate hit the attempt cap (%d); keeping |Z|=%.3g',
                 attempt_cap, abs(best[1]))
    return SampleSet(indices=best[0], z_score=best[1], accepted=True, attempts=attempt_cap)


def select_prks(state, sample):
    idx = sample.indices
    h = np.abs(state.residual[idx]) / state.norm_cache.norms[idx]
    j = int(np.argmax(h))
    if h[j] == 0.:
        raise AllSampledResidualsZero()
    return int(idx[j])


def select_row(strategy, state):
    """Dispatch one selection for `strategy` in `state`."""
    v = strategy.variant
    cache = state.norm_cache
    if v is Variant.CYCLIC:
        return select_cyclic(state.k, cache.m)
    if v is Variant.NORM_WEIGHTED:
        return select_rk(state)
    if v is Variant.GREEDY:
        return select_grk(state)
    if v is Variant.RELAXED_GREEDY:
        return select_rgrk(state, strategy.theta)
    if v is Variant.POWER_T:
        return select_power_t(state, strategy.t)
    if v is Variant.MAX_HOMOGENIZED:
        return select_prk(state)
    # SAMPLED_MAX
    for _ in range(config.SAMPLE_ATTEMPT_CAP):
        sample = draw_sample(cache.m, strategy.eta, strategy.q, cache, state.rng, cache.mu,
                             two_sided=strategy.two_sided)
        try:
            return select_prks(state, sample)
        except AllSampledResidualsZero:
            continue
    # every sample kept landing on solved rows; fall back to the full scan
    return select_prk(state)
