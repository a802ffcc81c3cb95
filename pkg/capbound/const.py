"""Constants for the capbound package."""

DOMAIN = "capbound"

# Numerical tolerances
HERMITIAN_TOL = 1e-10  # absolute, after normalising by ||M||_inf
DENSITY_TOL = 1e-10  # eigenvalue floor and trace deviation for states
PROBABILITY_CLAMP = 1e-12  # negative weights above -this are clamped to 0
PROBABILITY_TOL = 1e-10  # normalisation of probability vectors
INTEGER_SNAP = 1e-12  # eps/nu this close to an integer is treated as integral
CHANNEL_TOL = 1e-9  # CP and TP flags on Choi matrices
KRAUS_CUTOFF = 1e-10  # Choi eigenvalues <= cutoff * Tr(choi) are dropped
NORM_CLAMP = 1e-9  # norm values below this are reported as 0

# SDP engine
SOLVER_CLARABEL = "CLARABEL"
SOLVER_SCS = "SCS"
SUPPORTED_SOLVERS: list[str] = [SOLVER_CLARABEL, SOLVER_SCS]
DEFAULT_SOLVER = SOLVER_CLARABEL
FALLBACK_SOLVER = SOLVER_SCS
DEFAULT_FEAS_TOL = 1e-8  # primal residual and dual slack
DEFAULT_GAP_TOL = 1e-7  # relative duality gap
DEFAULT_MAX_ITERATIONS = 200
MAX_PSD_DIMENSION = 128  # total complex PSD dimension per problem
SCS_MAX_ITERATIONS = 20_000  # first-order fallback needs many more iterations

# Qubit state search
SEARCH_DIRECTIONS = 2000  # Fibonacci-sphere Bloch directions
SEARCH_RADII = 21  # radii 0, 1/20, ..., 1
SEARCH_REFINEMENTS = 5  # Nelder-Mead starts from the best grid points
SEARCH_MAX_ITERATIONS = 200
SEARCH_SIMPLEX_STEP = 0.05  # initial simplex edge in Bloch coordinates

# Sampling oracle for unstabilised norms
SAMPLING_STATES = 10_000
SAMPLING_REFINEMENTS = 50

# Depolarizing sweep
DEFAULT_P_MIN = 0.0
DEFAULT_P_MAX = 0.025
DEFAULT_N_POINTS = 251
MAX_P_THETA = 0.25  # theta(p) and gamma(p) are defined on [0, 1/4]
CERTIFIED_P_MAX = 0.025  # capacity hypothesis verified up to here
DEFAULT_SEED = 1234
DEFAULT_POINT_TIMEOUT = 600.0  # seconds
DEFAULT_MAX_RETRIES = 1
ENV_THREADS = "CAPBOUND_THREADS"

# Sign rule combining M_1^- and M_1^+ into eps_1
EPS1_RULE_MAX = "max"
EPS1_RULE_MIN = "min"
EPS1_RULES: list[str] = [EPS1_RULE_MAX, EPS1_RULE_MIN]
DEFAULT_EPS1_RULE = EPS1_RULE_MAX

# Config keys
CONF_COMMAND = "command"
CONF_P_MIN = "p_min"
CONF_P_MAX = "p_max"
CONF_N_POINTS = "n_points"
CONF_SEED = "seed"
CONF_TOLERANCES = "tolerances"
CONF_FEAS_TOL = "feasibility"
CONF_GAP_TOL = "gap"
CONF_OUTPUT_DIR = "output_dir"
CONF_FORMAT = "format"
CONF_THREADS = "threads"
CONF_SOLVER = "solver"
CONF_POINT_TIMEOUT = "point_timeout"
CONF_MAX_RETRIES = "max_retries"
CONF_SAMPLE_NORMS = "sample_norms"
CONF_CB_NORM = "cb_norm"
CONF_EPS1_RULE = "eps1_rule"

# Commands
COMMAND_BOUND_SHANNON = "bound-shannon"
COMMAND_NORMS = "norms"
COMMAND_DEPOL_SWEEP = "depol-sweep"
COMMAND_SELFTEST = "selftest"
COMMAND_FD_CURVES = "fd-curves"
COMMANDS: list[str] = [
    COMMAND_BOUND_SHANNON,
    COMMAND_NORMS,
    COMMAND_DEPOL_SWEEP,
    COMMAND_SELFTEST,
    COMMAND_FD_CURVES,
]

# Output formats
FORMAT_CSV = "csv"
FORMAT_JSON = "json"
FORMAT_SVG = "svg"
FORMATS: list[str] = [FORMAT_CSV, FORMAT_JSON, FORMAT_SVG]

# Output files
BOUNDS_CSV = "bounds.csv"
NORMS_CSV = "norms.csv"
BOUNDS_SVG = "bounds.svg"
NORMS_SVG = "norms.svg"
REPORT_JSON = "report.json"
FD_SVG = "fd.svg"
CSV_SIGNIFICANT_DIGITS = 12

# Exit codes
EXIT_OK = 0
EXIT_SELFTEST_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_SOLVER_FAILURE = 3
