"""Script to compare Kaczmarz row-selection rules on Gaussian linear systems."""
import os

import numpy as np

from kaczmarz.bench import (ExperimentSpec, GaussianSource, emit_history_csv, gen_gaussian,
                            make_consistent_system, run_experiment)
from kaczmarz.diagnostics import (grk_factor, prk_two_step_factor, rgrk_factor, rk_factor,
                                  selection_probabilities)
from kaczmarz.matrix import row_norms
from kaczmarz.selection import SelectionState, SelectionStrategy
from kaczmarz.utils import configure_logging, make_rng, set_random_seed


def print_table(report):
    print('{:} ({:}x{:})'.format(report.instance, report.m, report.n))
    for r in report.results:
        print('  {:<16} IT : {:>9.1f}   CPU : {:.4f} s{:}'.format(
            r.method, r.mean_it, r.mean_seconds, '   failed' if r.failed else ''))


def main():
    # ------------------------------------------------------------------------------------
    # Defining random seeds
    random_seed = 42
    set_random_seed(random_seed)
    configure_logging(1)

    output_dir = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'results')
    os.makedirs(output_dir, exist_ok=True)

    # ------------------------------------------------------------------------------------
    # Generating data
    m = 1000
    n = 200
    A = gen_gaussian(m, n, random_seed)
    system = make_consistent_system(A)

    # ------------------------------------------------------------------------------------
    # Convergence factors of the expected squared error
    print('rk factor : {:.6f}'.format(rk_factor(A)))
    print('grk factor : {:.6f}'.format(grk_factor(A)))
    print('rgrk(0.75) factor : {:.6f}'.format(rgrk_factor(A, 0.75)))
    print('prk two-step factor : {:.6f} (grk^2 {:.6f})'.format(prk_two_step_factor(A),
                                                                grk_factor(A) ** 2))

    # ------------------------------------------------------------------------------------
    # Method table
    n_trials = 5
    tol = 1e-6
    methods = [SelectionStrategy.rk(),
               SelectionStrategy.grk(),
               SelectionStrategy.rgrk(0.75),
               SelectionStrategy.rgrk(1.),
               SelectionStrategy.prk()]
    spec = ExperimentSpec(source=GaussianSource(m, n, random_seed), methods=methods, tol=tol,
                          trials=n_trials, seed_base=random_seed, keep_histories=True)
    report = run_experiment(spec, matrix=A)
    print_table(report)
    report.save(os.path.join(output_dir, 'method_table.json'))
    emit_history_csv(report, os.path.join(output_dir, 'method_table_history.csv'))

    # ------------------------------------------------------------------------------------
    # Selection probabilities of power-t at the first iteration
    state = SelectionState(residual=system.b.copy(), norm_cache=row_norms(A),
                           rng=make_rng(random_seed))
    for t in (2, 4, 8, 16):
        p = selection_probabilities(state, SelectionStrategy.power_t(t))
        top = np.sort(p)[::-1]
        print('t = {:>2} : max p {:.4f}, top-10 mass {:.4f}'.format(t, top[0], top[:10].sum()))

    # ------------------------------------------------------------------------------------
    # Power-t sweep
    ts = [1, 2, 4, 6, 8, 16, 64]
    methods = [SelectionStrategy.power_t(t) for t in ts] + [SelectionStrategy.prk()]
    spec = ExperimentSpec(source=GaussianSource(1000, 100, random_seed), methods=methods,
                          tol=tol, trials=n_trials, seed_base=random_seed)
    print_table(run_experiment(spec))

    # ------------------------------------------------------------------------------------
    # Sampling ratio sweep
    etas = [0.5, 0.2, 0.05]
    methods = ([SelectionStrategy.prk(), SelectionStrategy.grk()]
               + [SelectionStrategy.prks(eta) for eta in etas])
    spec = ExperimentSpec(source=GaussianSource(20000, 50, random_seed), methods=methods,
                          tol=tol, trials=n_trials, seed_base=random_seed)
    report = run_experiment(spec)
    print_table(report)
    report.save(os.path.join(output_dir, 'sampling_sweep.json'))


if __name__ == '__main__':
    main()
