"""Unit conventions and conversions used across the package.

Internal unit system: frequency THz, time ps, distance km, power W,
spectral density W/THz.  With these choices every phase expression of the
form (THz)^2 * (ps^2/km) * km is already in radians, so no hidden unit
factors appear in the integration kernels.
"""

import numpy as np
from scipy.constants import c as _C_M_S, h as H_PLANCK  # noqa: F401  (h re-exported)

# Speed of light in nm/ps; numerically equal to km/s.
C_NM_PS = _C_M_S * 1e-3

# dB/km -> Np/km (field-power attenuation in natural units).
DB_TO_NP = np.log(10.0) / 10.0


def db(x):
    """Linear ratio -> dB."""
    return 10.0 * np.log10(x)


def from_db(x):
    """dB -> linear ratio."""
    return 10.0 ** (np.asarray(x) / 10.0)


def dbm_to_w(p_dbm):
    """dBm -> W."""
    return 1e-3 * 10.0 ** (np.asarray(p_dbm) / 10.0)


def w_to_dbm(p_w):
    """W -> dBm."""
    return 10.0 * np.log10(np.asarray(p_w) / 1e-3)
