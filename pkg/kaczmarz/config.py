"""Default parameters shared by the solvers, the bench harness and the CLI."""
import math

SEED = 42

# Stopping
DEFAULT_TOL = 1e-6
DEFAULT_RIDGE_TOL = 1e-3
DEFAULT_MAX_ITERS = 400000
DEFAULT_TIME_BUDGET = 600.

# Selection
DEFAULT_THETA = 0.75
DEFAULT_Q = 1.96
NO_GATE = math.inf
SAMPLE_ATTEMPT_CAP = 100

# Residual bookkeeping
DEFAULT_RECOMPUTE_EVERY = 10000
DEFAULT_RIDGE_RESYNC_EVERY = 1000

# Stagnation: no relative improvement of STAGNATION_RTOL over
# STAGNATION_FACTOR * m consecutive iterations.
STAGNATION_FACTOR = 10
STAGNATION_RTOL = 1e-16

CONSISTENCY_RTOL = 1e-10

DEFAULT_TRIALS = 5
