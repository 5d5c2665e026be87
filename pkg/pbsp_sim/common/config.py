import os
from pathlib import Path

_PACKAGE_DIR = Path(__file__).resolve().parent.parent


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        return default


# Largest number of complex entries any dense array may hold.
DENSE_BUDGET = _env_int("PBSP_SIM_DENSE_BUDGET", 2 ** 20)

DEFAULT_SEED = _env_int("PBSP_SIM_SEED", 42)
DEFAULT_TRIALS = 100_000
DEFAULT_WORKERS = _env_int("PBSP_SIM_WORKERS", 1)

# Grids used when neither flags nor a config file give one
DEFAULT_D_LIST = (2, 3)
DEFAULT_N_LIST = (1, 2, 3)
DEFAULT_EPS_LIST = (0.2, 0.1)

# Haar samples drawn by the verification suites
DEFAULT_HAAR_SAMPLES = 20
DEFAULT_FVDG_PAIRS = 200

TOLERANCES = {
    "hermitian": 1e-10,       # max elementwise |A - A^dagger|
    "psd": 1e-10,             # eigenvalues >= -psd * lambda_max
    "norm": 1e-9,             # state vector norm
    "trace": 1e-9,            # unit trace of normalized states
    "completeness": 1e-10,    # sum of POVM elements vs identity
    "agreement": 1e-10,       # formula vs dense vs structured
    "pinv_cutoff": 1e-12,     # relative support threshold of pinv_sqrt
    "pinv_negative": 1e-8,    # most negative eigenvalue pinv_sqrt accepts
    "pgm_completeness": 1e-9,
    "bound": 1e-10,           # lhs <= rhs + bound
    "dimension_rel": 1e-9,    # log2 dimension comparisons
    "fvdg": 1e-9,
}

SIGMA_LEVEL = 3.0
SIGNIFICANT_DIGITS = 12

TIMEZONE = "UTC"

CSV_COLUMNS = (
    "task", "d", "N", "epsilon", "formula", "dense", "sampled", "sigma", "verdict", "provenance",
)

# Rows whose Monte Carlo draws are chunked to bound memory
SAMPLE_CHUNK = 50_000


class Config:
    """Central access point for all configuration."""

    package_dir = _PACKAGE_DIR

    dense_budget = DENSE_BUDGET
    default_seed = DEFAULT_SEED
    default_trials = DEFAULT_TRIALS
    default_workers = DEFAULT_WORKERS

    default_d_list = DEFAULT_D_LIST
    default_n_list = DEFAULT_N_LIST
    default_eps_list = DEFAULT_EPS_LIST
    default_haar_samples = DEFAULT_HAAR_SAMPLES
    default_fvdg_pairs = DEFAULT_FVDG_PAIRS

    tolerances = TOLERANCES
    sigma_level = SIGMA_LEVEL
    significant_digits = SIGNIFICANT_DIGITS
    timezone = TIMEZONE
    csv_columns = CSV_COLUMNS
    sample_chunk = SAMPLE_CHUNK

    @classmethod
    def tol(cls, name: str) -> float:
        return cls.tolerances[name]
