"""Physical constants and unit helpers shared across the package.

Internal units: frequency in THz, wavelength in nm, distance in km,
optical power in mW, time in ps.
"""

import numpy as np
from scipy import constants as _sc

#: speed of light [nm THz] (equivalently nm/ps)
C_NM_THZ = 299792.458
#: Planck constant [J s]
PLANCK = _sc.h

SYMBOL_RATE_THZ = 0.148
CHANNEL_SPACING_THZ = 0.150
SPAN_LENGTH_KM = 80.0


def thz_to_nm(f):
    return C_NM_THZ / np.asarray(f, dtype=float)


def nm_to_thz(wl):
    return C_NM_THZ / np.asarray(wl, dtype=float)


def db_to_lin(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


def lin_to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(x, dtype=float))


def dbm_to_mw(p_dbm):
    """Convert dBm to mW; ``inf`` maps to ``inf``."""
    return db_to_lin(p_dbm)


def mw_to_dbm(p_mw):
    return lin_to_db(p_mw)
