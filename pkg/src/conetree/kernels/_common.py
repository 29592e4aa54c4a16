"""Constants shared by both kernel backends."""
import numpy as np

ST_OK = 0
ST_MAXITER = 1
ST_DEGENERATE = 2

# |denominator| below this is treated as a breakdown (cannot happen for Im g > 0)
DENOM_FLOOR = 1e-300

# successive iterates closer than EPS_SCALE * eps * |g| are indistinguishable in float64
EPS_SCALE = 16.0 * np.finfo(np.float64).eps

NEWTON_STEP_RTOL = 64.0 * np.finfo(np.float64).eps
