import math
from typing import Tuple


SQRT2 = math.sqrt(2.0)

# measures
ATOM_MERGE_TOL = 1e-12
ATOMIC_MASS_TOL = 1e-9
MAX_MOMENT_ORDER = 64
DBL_MAX_NODES = 10_000

# transforms
DEFAULT_EPS_SCHEDULE: Tuple[float, ...] = (0.1, 0.05, 0.025)
DEFAULT_CUMULANT_ORDER = 16
MAX_CUMULANT_ORDER = 32
POLE_REALNESS_TOL = 1e-8
RESIDUE_CLIP_TOL = -1e-10
RESIDUE_SUM_TOL = 1e-10
INVERSION_MASS_TOL = 0.2
SINGULAR_G_TOL = 1e-300

# entropy
REFERENCE_GRID_STEP = 1e-3
SYMMETRY_TOL = 1e-8
SYMMETRY_CHECK_ORDER = 5
PAIR_MASS_TOL = 1e-9
POTENTIAL_CHUNK_SIZE = 512
POTENTIAL_SEARCH_STEP = 1e-3
IGAMMAV_DEFAULT_DOMAIN: Tuple[float, float] = (-10.0, 10.0)
I1_INFIMUM = 0.75

# ensembles
THETA_DAMPING = 0.5
THETA_MAX_ITERATIONS = 10_000
THETA_RESIDUAL_TOL = 1e-9
MCMC_TARGET_ACCEPTANCE = 0.3
MCMC_ADAPTATION_EXPONENT = 0.6
DEFAULT_BURNIN = 2_000
DEFAULT_STEPS = 2_000
DEFAULT_PROPOSAL_SD = 0.1

# booleanclt
SEMIGROUP_MEAN_TOL = 1e-8
MONOTONICITY_TOL = 5e-3
ZERO_MASS_TOL = 1e-6
DEFAULT_CLT_GRID: Tuple[float, float, float] = (-3.0, 0.005, 3.0)

# verify
M0_GRID_SIZE = 1_000
RATIO_REL_TOL = 0.15
EULER_LAGRANGE_TOL = 1e-2
MAXIMALITY_TOL = 1e-12

# cli / output
THREADS_ENV = "BEL_THREADS"
CSV_FLOAT_FORMAT = "%.17g"
EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_NUMERICAL = 2
EXIT_USAGE = 64
