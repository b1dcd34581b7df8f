"""Script to solve ridge systems (A A^T + tau I) x = b without forming A A^T."""
import os

import numpy as np

from kaczmarz.bench import (ExperimentSpec, RidgeMethod, SparseSource, gen_sparse,
                            make_ridge_system, run_experiment)
from kaczmarz.diagnostics import ridge_operator_dense
from kaczmarz.ridge import (NormMode, RidgeConfig, RidgeOperator, ridge_row_norms_exact,
                            ridge_solve, ridge_y_estimate)
from kaczmarz.utils import configure_logging, set_random_seed


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
    m = 400
    n = 1600
    density = 0.01
    source = SparseSource(m, n, density, random_seed)
    A = source.load()
    print('A : {:}x{:}, nnz {:}'.format(A.m, A.n, A.nnz))

    # ------------------------------------------------------------------------------------
    # Quality of the row-norm estimate
    op = RidgeOperator(A, 0.1, NormMode.ESTIMATED)
    y = ridge_y_estimate(op)
    z = ridge_row_norms_exact(op)
    y1, y2 = op.y_bounds
    print('y1 <= y2 everywhere : {:}'.format(bool(np.all(y1 <= y2 * (1. + 1e-12)))))
    print('z <= y2 everywhere : {:}'.format(bool(np.all(z <= y2 * (1. + 1e-12)))))
    print('max |y - z| / z : {:.4f}'.format(float(np.max(np.abs(y - z) / z))))

    # ------------------------------------------------------------------------------------
    # Both norm modes and the sampled variant over a tau sweep
    n_trials = 5
    taus = [0.1, 0.01, 0.001]
    methods = []
    for tau in taus:
        methods.append(RidgeMethod(tau=tau, norms=NormMode.EXACT))
        methods.append(RidgeMethod(tau=tau, norms=NormMode.ESTIMATED))
        methods.append(RidgeMethod(tau=tau, method='prks', eta=0.01))
    spec = ExperimentSpec(source=source, methods=methods, trials=n_trials,
                          seed_base=random_seed)
    report = run_experiment(spec, matrix=A)
    for r in report.results:
        print('{:<36} IT : {:>9.1f}   CPU : {:.4f} s{:}'.format(
            r.method, r.mean_it, r.mean_seconds, '   failed' if r.failed else ''))
    report.save(os.path.join(output_dir, 'tau_sweep.json'))

    # ------------------------------------------------------------------------------------
    # Agreement with a dense direct solve on a smaller instance
    small = gen_sparse(100, 500, 0.05, random_seed)
    tau = 0.01
    system = make_ridge_system(small, tau)
    oracle = np.linalg.solve(ridge_operator_dense(RidgeOperator(small, tau)), system.b)
    for norms in NormMode:
        config = RidgeConfig(norms=norms, tol=1e-8, seed=random_seed)
        result = ridge_solve(small, system.b, tau, config, x_star=system.x_star)
        err = np.linalg.norm(result.x_final - oracle) / np.linalg.norm(oracle)
        print('{:} : IT {:}, relative error vs direct solve {:.2e}'.format(
            config.name, result.iterations, err))


if __name__ == '__main__':
    main()
