"""caplab: capacity computations and a Monte Carlo laboratory for planar
Brownian double-point intersection estimates."""

import warnings

# the sandbox TBB is older than numba wants; the omp/workqueue fallback is fine
warnings.filterwarnings("ignore", message=".*TBB.*", module="numba.*")

__version__ = "0.1.0"
