# Default isotropic prior precision (alpha) on every weight and bias
DEFAULT_PRIOR_PRECISION = 1.0

# Plug-in observation noise variance estimates are floored at this value
NOISE_VAR_FLOOR = 1e-3

# Largest principal submatrix that may be materialized
MAX_SUBSET_SIZE = 20000
