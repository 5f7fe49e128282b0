# Greedy-Laplace pivots at or below this value are degenerate
PIVOT_TOLERANCE = 1e-12

# Extended pool policy: min(2k + EXTENDED_POOL_MARGIN, p - 1, EXTENDED_POOL_CAP)
EXTENDED_POOL_MARGIN = 1000
EXTENDED_POOL_CAP = 30000

POOL_DEFAULT = "default"
POOL_EXTENDED = "extended"
