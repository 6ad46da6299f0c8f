"""Constants shared by the compiled and vectorized kernel backends."""

import numpy as np

# Duplicates of the values in ..group; kernels keep plain module globals so
# the compiled backend can fold them at compile time.
EPS_CUT = 1e-6
SMALL_ANGLE = 1e-8
THETA_SERIES_R = 1e-4
TWO_PI = 2.0 * np.pi

# Polar Newton converges from any positive-determinant start but only
# linearly while the singular values are far from 1, so the iteration runs
# to a stall (update below NEWTON_DELTA_TOL) with a hard cap. Typical SDE
# steps stall after 3-4 iterations; metrics with tiny eigenvalues produce
# huge noise factors that need 10-15.
NEWTON_MAX_ITERS = 30
NEWTON_DELTA_TOL = 1e-14

# Per-path status codes.
STATUS_OK = 0
STATUS_RADIAL_DOMAIN = 1
STATUS_NONFINITE = 2

SCHEME_EULER_HEUN = 0
SCHEME_LIE_EXPONENTIAL = 1

FORMULA_DERIVED = 0
FORMULA_PAPER_VERBATIM = 1
