"""
상수 정의 / numeric contracts
- rank / residual tolerances
- period and Hurwitz thresholds
- exit-code taxonomy
"""

# Rank decisions (relative singular-value threshold)
RANK_RTOL = 1e-8

# Data-based representation residual (relative)
REPRESENTATION_TOL = 1e-9

# Regulator data equations (relative residual)
REGULATOR_TOL = 1e-8

# Hurwitz predicate: spectral abscissa < -HURWITZ_TOL
HURWITZ_TOL = 1e-9

# Lyapunov certificate acceptance: max eig <= -LYAPUNOV_TOL
LYAPUNOV_TOL = 1e-9

# Period admissibility (distance to a forbidden resonant period)
PERIOD_TOL = 1e-9

# Imaginary-axis test for leader eigenvalues
IMAG_AXIS_TOL = 1e-9

# ARE residual bound, scaled by (1 + ||P||)
ARE_RESIDUAL_TOL = 1e-8

# Coupling scalar search: c = 1, 2, 4, ..., C_CAP
C_CAP = 2 ** 20

# Grid alignment slack when reading times as sample indices
GRID_TOL = 1e-9

# Rank checks are done at t = 0 plus this many further sampled t
RANK_CHECK_POINTS = 10

# PCPE generation
PCPE_MAX_REDRAWS = 10
LEADER_MAX_REDRAWS = 10

# Closed-loop metrics
SETTLING_BAND = 0.01
HOMOGENEOUS_DECAY_RATIO = 1e-3
HETEROGENEOUS_SYNC_THRESHOLD = 1e-2
HETEROGENEOUS_CHECK_TIME = 30.0
DERIVATIVE_CHECK_TOL = 1e-3

# Exit codes
EXIT_OK = 0
EXIT_DATA = 2
EXIT_IO = 3
EXIT_DESIGN = 4
EXIT_SIMULATION = 5

# CSV float format (>= 12 significant digits, round-trip exact)
CSV_FLOAT_FORMAT = "%.17g"

# RK4 step * spectral radius kept inside the stability region
RK4_STABILITY_RADIUS = 2.5
MAX_SUBSTEPS = 64
