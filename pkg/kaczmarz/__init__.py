"""Kaczmarz row-action solvers for consistent linear systems and ridge regression."""
from kaczmarz.bench import (BenchReport, ExperimentSpec, GaussianSource, MatrixMarketSource,
                            RidgeMethod, SparseSource, gen_gaussian, gen_sparse,
                            make_consistent_system, make_ridge_system, run_experiment)
from kaczmarz.engine import (LinearSystem, SolveConfig, SolveReport, StopRule, Termination,
                             solve)
from kaczmarz.errors import KaczmarzError
from kaczmarz.matrix import Matrix, row_norms
from kaczmarz.mmio import read_matrix_market, write_matrix_market
from kaczmarz.ridge import NormMode, RidgeConfig, RidgeOperator, ridge_solve
from kaczmarz.selection import SelectionStrategy, Variant
