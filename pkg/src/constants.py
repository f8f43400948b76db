"""
Configuration constants for the one-shot quantum information toolkit.
"""

from pathlib import Path

# Paths
PROJECT_ROOT = Path(__file__).parent.parent
FIXTURES_DIR = PROJECT_ROOT / "fixtures"
REPORTS_DIR = PROJECT_ROOT / "reports"

# Operator validation
HERMITIAN_RTOL = 1e-12  # relative Frobenius norm of M - M^dagger
PSD_TOL = 1e-10  # min eigenvalue >= -PSD_TOL * ||op||
TRACE_TOL = 1e-10
PURE_NORM_TOL = 1e-10

# Support: eigenvalues below KERNEL_CUTOFF * max|eigenvalue| are kernel, everywhere
KERNEL_CUTOFF = 1e-12
SUPPORT_LEAK_TOL = 1e-10

# Dense storage limit (qubit pairs to the 6th tensor power)
MAX_DENSE_DIM = 4096

# Channels
TRACE_PRESERVING_TOL = 1e-10
MAX_CHANNEL_INPUT_DIM = 8
CAPACITY_SET_TOL = 1e-7
CHANNEL_DISTANCE_STARTS = 32
CHANNEL_FUNCTIONAL_STARTS = 64
OPTIMIZER_GAP_FLOOR = 1e-6
META_CONVERSE_SIGMA_SAMPLES = 16

# Hypothesis testing
DH_DIM_CUTOFF = MAX_DENSE_DIM
DH_BISECTION_STEPS = 200
DH_TYPE_CLASS_MAX_N = 100_000
DH_TYPE_CLASS_MAX_ALPHABET = 8
DH_TYPE_CLASS_MAX_COMPOSITIONS = 5_000_000
COMMUTE_TOL = 1e-13

# Conic programs
SDP_SOLVERS = ("CLARABEL", "SCS")
SDP_TOLERANCE = 1e-10
IMAX_GAP_TOL = 1e-7
IMAX_FEASIBILITY_TOL = 1e-9

# Sandwiched Renyi mutual information at alpha = 1/2
FIXED_POINT_TOL = 1e-9
FIXED_POINT_RESTARTS = 64
FIXED_POINT_MAX_ITER = 500
RENYI_GRID_SAMPLES = 64

# Smoothing
DEFAULT_DMIN_K = 2.0
ORACLE_MARGINAL_GRID = 101
ORACLE_PRECISION = 1e-6

# Moderate deviation
RESIDUAL_SLACK_FRACTION = 0.05
RESIDUAL_CSV_COLUMNS = ["n", "a_n", "eps_n", "computed", "predicted", "residual_over_an"]

# Protocols
MAX_PERMUTATION_REGISTERS = 5
DE_FINETTI_MC_TOL = 2e-2
BOUND_TOL = 1e-9

# Verification suites
SUITE_TOL = 1e-9
SDP_SUITE_TOL = 1e-6
VARIANCE_IDENTITY_TOL = 1e-8
NP_RANDOM_TESTS = 64
DE_FINETTI_MC_SAMPLES = 10_000
EA_CODING_BLOCK = 3  # smallest n with a non-negative coding error at a_n = n^(-1/3)
TREND_MAX_EXPONENT = 14
TREND_N_STAR_LIMIT = 2**10
REPORT_COLUMNS = ["name", "labels", "passed", "trials", "failures", "max_violation", "detail"]

# Runtime
THREADS_ENV_VAR = "ONE_SHOT_QIT_THREADS"
DEFAULT_WORKERS = 1

# CLI exit codes
EXIT_OK = 0
EXIT_PROPERTY_FAIL = 1
EXIT_PARSE = 2
EXIT_DOMAIN = 3

# MLflow configuration
MLFLOW_EXPERIMENT_NAME = "one-shot-qit-verification"
