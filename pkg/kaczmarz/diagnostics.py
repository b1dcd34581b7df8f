"""Dense-oracle diagnostics: selection probabilities and convergence factors.

Everything here materialises dense matrices or decompositions; none of it is
used by the solvers.
"""
import numpy as np

from kaczmarz.errors import ConfigError
from kaczmarz.matrix import row_norms
from kaczmarz.selection import (Variant, grk_index_set, homogenized, power_t_probabilities,
                                relaxed_epsilon, sample_size)


def _point_mass(m, i):
    p = np.zeros(m)
    p[i] = 1.
    return p


def selection_probabilities(state, strategy):
    """Distribution the strategy draws its next row from in `state`."""
    cache = state.norm_cache
    v = strategy.variant
    if v is Variant.CYCLIC:
        return _point_mass(cache.m, state.k % cache.m)
    if v is Variant.NORM_WEIGHTED:
        return cache.norms_sq / cache.frobenius_sq
    if v is Variant.POWER_T:
        return power_t_probabilities(state, strategy.t)

    theta = {Variant.GREEDY: 0.5, Variant.RELAXED_GREEDY: strategy.theta}.get(v, 1.)
    if v is Variant.SAMPLED_MAX and sample_size(cache.m, strategy.eta) < cache.m:
        raise ConfigError('the sampled rule has no closed-form distribution for eta < 1')
    if theta == 1.:
        return _point_mass(cache.m, int(np.argmax(homogenized(state))))
    upsilon = grk_index_set(state, relaxed_epsilon(state, theta))
    p = np.zeros(cache.m)
    p[upsilon] = state.residual[upsilon] ** 2
    return p / p.sum()


# ----------------------------------------------------------------------------------------
# Convergence factors
def kappa_inv_sq(A):
    """sigma_min(A)^2 / ||A||_F^2 from a dense SVD."""
    sigma = np.linalg.svd(A.toarray(), compute_uv=False)
    return float(sigma[-1] ** 2 / A.frobenius_norm() ** 2)


def _norm_sums(A):
    cache = row_norms(A)
    ordered = np.sort(cache.norms_sq)
    gamma = cache.frobenius_sq - ordered[0]
    return cache.frobenius_sq, gamma, ordered


def rk_factor(A):
    return 1. - kappa_inv_sq(A)


def rgrk_factor(A, theta):
    """1 - (theta ||A||_F^2 / gamma + (1 - theta)) kappa^-2, gamma = max_i sum_(j != i) ||A_j||^2."""
    if not 0. <= theta <= 1.:
        raise ConfigError('theta must lie in [0, 1], got {}'.format(theta))
    frob_sq, gamma, _ = _norm_sums(A)
    return 1. - (theta * frob_sq / gamma + (1. - theta)) * kappa_inv_sq(A)


def grk_factor(A):
    return rgrk_factor(A, 0.5)


def prk_two_step_factor(A):
    """Contraction bound over two consecutive steps of the maximal rule.

    The second step cannot reselect the row just used, so its denominator
    drops the second smallest row norm instead of the smallest.
    """
    if A.m < 2:
        raise ConfigError('the two-step factor needs at least two rows')
    frob_sq, gamma, ordered = _norm_sums(A)
    xi = frob_sq - ordered[1]
    k2 = kappa_inv_sq(A)
    return (1. - frob_sq * k2 / gamma) * (1. - frob_sq * k2 / xi)


def ridge_operator_dense(op):
    """A A^T + tau I as a dense array."""
    dense = op.A.toarray()
    return dense @ dense.T + op.tau * np.eye(op.m)
