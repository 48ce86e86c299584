"""Wavelength-dependent fibre parameters and the Raman gain spectrum.

A :class:`FibreProfile` holds tabulated attenuation, dispersion, effective
area and nonlinear coefficient on a wavelength grid, plus a Raman gain
efficiency sampled against frequency shift.  All quantities are linearly
interpolated in wavelength; queries outside the grid raise
:class:`ProfileRangeError`.
"""

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .constants import C_NM_THZ

PROFILE_COLUMNS = (
    "wavelength_nm",
    "attenuation_dB_km",
    "dispersion_ps_nm_km",
    "aeff_um2",
    "gamma_per_W_km",
)
RAMAN_COLUMNS = ("delta_f_THz", "gain_1_per_W_km")

# default single-mode fibre stand-in
RAYLEIGH_ALPHA_1550 = 0.19  # dB/km, total attenuation at 1550 nm
WATER_PEAK_NM = 1383.0
WATER_PEAK_DB_KM = 0.1
WATER_PEAK_WIDTH_NM = 15.0
IR_AMPLITUDE_DB_KM = 0.006
IR_ONSET_NM = 1600.0
IR_SCALE_NM = 30.0
ZERO_DISPERSION_NM = 1310.0
DISPERSION_SLOPE_PS_NM2_KM = 0.092
AEFF_ANCHORS = ((1260.0, 65.0), (1675.0, 95.0))
N2_M2_PER_W = 2.6e-20
RAMAN_PEAK_SHIFT_THZ = 13.2
RAMAN_CUTOFF_THZ = 15.0
RAMAN_PEAK_PER_W_KM = 0.39
RAMAN_REFERENCE_NM = 1550.0


class ProfileError(ValueError):
    """Malformed or physically invalid fibre data."""


class ProfileRangeError(ValueError):
    """Query outside the tabulated wavelength range."""


class FibreParameters(NamedTuple):
    """Local fibre parameters at one or more wavelengths.

    ``alpha`` is the power attenuation in natural units [1/km], ``beta2`` in
    [ps^2/km], ``beta3`` in [ps^3/km], ``gamma`` in [1/W/km], ``aeff`` in
    [um^2].
    """

    alpha: np.ndarray
    beta2: np.ndarray
    beta3: np.ndarray
    gamma: np.ndarray
    aeff: np.ndarray


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FibreProfile:
    wavelength_nm: np.ndarray
    attenuation_db_km: np.ndarray
    dispersion_ps_nm_km: np.ndarray
    aeff_um2: np.ndarray
    gamma_per_w_km: np.ndarray
    raman_shift_thz: np.ndarray = field(default=None)
    raman_gain_per_w_km: np.ndarray = field(default=None)
    raman_reference_area_um2: float = None
    name: str = "custom"

    def __post_init__(self):
        cols = {}
        for key in ("wavelength_nm", "attenuation_db_km", "dispersion_ps_nm_km",
                    "aeff_um2", "gamma_per_w_km"):
            cols[key] = _readonly(getattr(self, key))
            object.__setattr__(self, key, cols[key])
        wl = cols["wavelength_nm"]
        n = wl.size
        if n < 2:
            raise ProfileError("profile needs at least 2 wavelength samples")
        for key, arr in cols.items():
            if arr.shape != (n,):
                raise ProfileError(f"{key} has shape {arr.shape}, expected ({n},)")
            if not np.all(np.isfinite(arr)):
                raise ProfileError(f"{key} contains non-finite values")
        bad = np.flatnonzero(np.diff(wl) <= 0)
        if bad.size:
            raise ProfileError(f"non-monotone wavelength at row {bad[0] + 2}")
        for key in ("attenuation_db_km", "aeff_um2", "gamma_per_w_km"):
            bad = np.flatnonzero(cols[key] <= 0)
            if bad.size:
                raise ProfileError(f"non-positive {key} at row {bad[0] + 1}")

        if self.raman_shift_thz is None:
            shift, gain = triangular_raman_gain()
        else:
            shift, gain = self.raman_shift_thz, self.raman_gain_per_w_km
        shift, gain = _readonly(shift), _readonly(gain)
        if shift.shape != gain.shape or shift.size < 2:
            raise ProfileError("Raman shift and gain arrays must match, >= 2 samples")
        if np.any(np.diff(shift) <= 0) or shift[0] != 0.0:
            raise ProfileError("Raman shift grid must start at 0 THz and increase")
        if np.any(gain < 0) or gain[0] != 0.0:
            raise ProfileError("Raman gain must be >= 0 with g(0) = 0")
        object.__setattr__(self, "raman_shift_thz", shift)
        object.__setattr__(self, "raman_gain_per_w_km", gain)
        if self.raman_reference_area_um2 is None:
            ref = RAMAN_REFERENCE_NM if wl[0] <= RAMAN_REFERENCE_NM <= wl[-1] else wl[n // 2]
            object.__setattr__(self, "raman_reference_area_um2",
                               float(np.interp(ref, wl, cols["aeff_um2"])))

    @property
    def wavelength_range(self):
        return float(self.wavelength_nm[0]), float(self.wavelength_nm[-1])

    def _check_range(self, wl):
        lo, hi = self.wavelength_range
        wl = np.asarray(wl, dtype=float)
        if np.any(wl < lo) or np.any(wl > hi) or np.any(~np.isfinite(wl)):
            bad = wl[(wl < lo) | (wl > hi) | ~np.isfinite(wl)]
            raise ProfileRangeError(
                f"wavelength {float(np.ravel(bad)[0]):.3f} nm outside profile range [{lo}, {hi}] nm")
        return wl

    def interp(self, name, wavelength_nm):
        """Linear interpolation of one tabulated column."""
        wl = self._check_range(wavelength_nm)
        return np.interp(wl, self.wavelength_nm, getattr(self, name))

    def dispersion_slope(self, wavelength_nm):
        """Centred finite difference of D [ps/nm^2/km], one grid step wide."""
        wl = self._check_range(wavelength_nm)
        grid = self.wavelength_nm
        step = np.interp(wl, grid[1:], np.diff(grid))
        lo = np.maximum(wl - step, grid[0])
        hi = np.minimum(wl + step, grid[-1])
        d = self.dispersion_ps_nm_km
        return (np.interp(hi, grid, d) - np.interp(lo, grid, d)) / (hi - lo)

    def query(self, wavelength_nm):
        wl = self._check_range(wavelength_nm)
        alpha_db = np.interp(wl, self.wavelength_nm, self.attenuation_db_km)
        d = np.interp(wl, self.wavelength_nm, self.dispersion_ps_nm_km)
        s = self.dispersion_slope(wl)
        two_pi_c = 2.0 * np.pi * C_NM_THZ
        beta2 = -d * wl ** 2 / two_pi_c
        beta3 = wl ** 2 / two_pi_c ** 2 * (wl ** 2 * s + 2.0 * wl * d)
        return FibreParameters(
            alpha=alpha_db * np.log(10.0) / 10.0,
            beta2=beta2,
            beta3=beta3,
            gamma=np.interp(wl, self.wavelength_nm, self.gamma_per_w_km),
            aeff=np.interp(wl, self.wavelength_nm, self.aeff_um2),
        )

    def at_frequency(self, freq_thz):
        return self.query(C_NM_THZ / np.asarray(freq_thz, dtype=float))

    def raman_efficiency(self, shift_thz):
        """Raman gain efficiency [1/W/km] at the reference area; 0 off-grid."""
        shift = np.abs(np.asarray(shift_thz, dtype=float))
        return np.interp(shift, self.raman_shift_thz, self.raman_gain_per_w_km,
                         left=0.0, right=0.0)

    def zero_dispersion_wavelength(self):
        """First sign change of D on the grid (linearly interpolated), or None."""
        d = self.dispersion_ps_nm_km
        idx = np.flatnonzero(np.sign(d[:-1]) * np.sign(d[1:]) <= 0)
        if idx.size == 0:
            return None
        k = idx[0]
        wl = self.wavelength_nm
        if d[k + 1] == d[k]:
            return float(wl[k])
        return float(wl[k] - d[k] * (wl[k + 1] - wl[k]) / (d[k + 1] - d[k]))

    def with_gamma_scaled(self, factor):
        return FibreProfile(
            self.wavelength_nm, self.attenuation_db_km, self.dispersion_ps_nm_km,
            self.aeff_um2, self.gamma_per_w_km * factor, self.raman_shift_thz,
            self.raman_gain_per_w_km, self.raman_reference_area_um2, self.name)

    def without_raman(self):
        return FibreProfile(
            self.wavelength_nm, self.attenuation_db_km, self.dispersion_ps_nm_km,
            self.aeff_um2, self.gamma_per_w_km, self.raman_shift_thz,
            np.zeros_like(self.raman_gain_per_w_km), self.raman_reference_area_um2,
            self.name + "-noraman")


def query(profile, wavelength_nm):
    """Return ``(alpha [1/km], beta2, beta3, gamma, aeff)`` at ``wavelength_nm``."""
    return profile.query(wavelength_nm)


# -- default parametric profile ---------------------------------------------

def water_peak_db_km(wl):
    wl = np.asarray(wl, dtype=float)
    return WATER_PEAK_DB_KM * np.exp(-0.5 * ((wl - WATER_PEAK_NM) / WATER_PEAK_WIDTH_NM) ** 2)


def infrared_db_km(wl):
    wl = np.asarray(wl, dtype=float)
    return IR_AMPLITUDE_DB_KM * np.exp((wl - IR_ONSET_NM) / IR_SCALE_NM)


def rayleigh_coefficient():
    """Coefficient A [dB/km nm^4] of the A/lambda^4 term, fitted at 1550 nm."""
    rest = water_peak_db_km(1550.0) + infrared_db_km(1550.0)
    return (RAYLEIGH_ALPHA_1550 - rest) * 1550.0 ** 4


def default_attenuation_db_km(wl):
    wl = np.asarray(wl, dtype=float)
    return rayleigh_coefficient() / wl ** 4 + infrared_db_km(wl) + water_peak_db_km(wl)


def default_dispersion_ps_nm_km(wl):
    wl = np.asarray(wl, dtype=float)
    s0, l0 = DISPERSION_SLOPE_PS_NM2_KM, ZERO_DISPERSION_NM
    return s0 / 4.0 * (wl - l0 ** 4 / wl ** 3)


def default_aeff_um2(wl):
    (w0, a0), (w1, a1) = AEFF_ANCHORS
    return a0 + (a1 - a0) * (np.asarray(wl, dtype=float) - w0) / (w1 - w0)


def nonlinear_coefficient(wl, aeff_um2, n2=N2_M2_PER_W):
    """gamma = 2 pi n2 / (lambda Aeff) in [1/W/km]."""
    wl_m = np.asarray(wl, dtype=float) * 1e-9
    return 2.0 * np.pi * n2 / (wl_m * np.asarray(aeff_um2) * 1e-12) * 1e3


def triangular_raman_gain(peak=RAMAN_PEAK_PER_W_KM, peak_shift=RAMAN_PEAK_SHIFT_THZ,
                          cutoff=RAMAN_CUTOFF_THZ, max_shift=40.0, step=0.1):
    """Triangular Raman gain efficiency sampled on ``[0, max_shift]`` THz."""
    shift = np.round(np.arange(0.0, max_shift + step / 2, step), 10)
    shift = np.union1d(shift, [peak_shift, cutoff])
    gain = np.where(shift <= peak_shift, peak * shift / peak_shift,
                    peak * np.clip((cutoff - shift) / (cutoff - peak_shift), 0.0, None))
    return shift, gain


def make_default_profile():
    """Standard single-mode fibre stand-in on 1 nm spacing over 1250-1690 nm."""
    wl = np.arange(1250.0, 1690.0 + 0.5, 1.0)
    aeff = default_aeff_um2(wl)
    shift, gain = triangular_raman_gain()
    return FibreProfile(
        wavelength_nm=wl,
        attenuation_db_km=default_attenuation_db_km(wl),
        dispersion_ps_nm_km=default_dispersion_ps_nm_km(wl),
        aeff_um2=aeff,
        gamma_per_w_km=nonlinear_coefficient(wl, aeff),
        raman_shift_thz=shift,
        raman_gain_per_w_km=gain,
        raman_reference_area_um2=float(default_aeff_um2(RAMAN_REFERENCE_NM)),
        name="default-ssmf",
    )


def make_uniform_profile(alpha_db_km=0.2, beta2_ps2_km=-21.0, gamma_per_w_km=1.3,
                         aeff_um2=80.0, wl_range=(1250.0, 1690.0), raman=False):
    """Synthetic fibre with flat attenuation, gamma, Aeff and constant beta2.

    D is set to ``-2 pi c beta2 / lambda^2`` so that beta2 is the same at every
    wavelength (beta3 is then zero up to finite-difference error).
    """
    wl = np.arange(wl_range[0], wl_range[1] + 0.5, 1.0)
    d = -2.0 * np.pi * C_NM_THZ * beta2_ps2_km / wl ** 2
    shift, gain = triangular_raman_gain()
    if not raman:
        gain = np.zeros_like(gain)
    return FibreProfile(
        wavelength_nm=wl,
        attenuation_db_km=np.full_like(wl, alpha_db_km),
        dispersion_ps_nm_km=d,
        aeff_um2=np.full_like(wl, aeff_um2),
        gamma_per_w_km=np.full_like(wl, gamma_per_w_km),
        raman_shift_thz=shift,
        raman_gain_per_w_km=gain,
        raman_reference_area_um2=aeff_um2,
        name="uniform",
    )


# -- file I/O ----------------------------------------------------------------

def _read_table(path, required):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"profile not found: {path}")
    lines = [ln for ln in path.read_text().splitlines()
             if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ProfileError(f"{path}: empty file")
    header = lines[0]
    if "," in header:
        rows = list(csv.reader(lines, skipinitialspace=True))
    elif "\t" in header:
        rows = list(csv.reader(lines, delimiter="\t"))
    else:
        rows = [ln.split() for ln in lines]
    names = [h.strip() for h in rows[0]]
    missing = [c for c in required if c not in names]
    if missing:
        raise ProfileError(f"{path}: missing columns {missing}")
    idx = [names.index(c) for c in required]
    data = []
    for rowno, row in enumerate(rows[1:], start=1):
        try:
            data.append([float(row[k]) for k in idx])
        except (ValueError, IndexError):
            raise ProfileError(f"{path}: malformed row {rowno}: {row!r}") from None
    if len(data) < 2:
        raise ProfileError(f"{path}: need at least 2 data rows")
    return np.array(data)


def load_raman_gain(path):
    """Read a ``delta_f_THz, gain_1_per_W_km`` table."""
    data = _read_table(path, RAMAN_COLUMNS)
    return data[:, 0], data[:, 1]


def load_profile(path, raman_path=None):
    """Load a fibre profile from a delimited text table with a header row.

    Without ``raman_path`` the triangular Raman gain is used.
    """
    data = _read_table(path, PROFILE_COLUMNS)
    wl = data[:, 0]
    bad = np.flatnonzero(np.diff(wl) <= 0)
    if bad.size:
        raise ProfileError(f"non-monotone wavelength at row {bad[0] + 2}")
    shift = gain = None
    if raman_path is not None:
        shift, gain = load_raman_gain(raman_path)
    return FibreProfile(wl, data[:, 1], data[:, 2], data[:, 3], data[:, 4],
                        shift, gain, name=Path(path).stem)


def save_profile(profile, path):
    table = np.column_stack([profile.wavelength_nm, profile.attenuation_db_km,
                             profile.dispersion_ps_nm_km, profile.aeff_um2,
                             profile.gamma_per_w_km])
    np.savetxt(path, table, delimiter=",", header=",".join(PROFILE_COLUMNS),
               comments="", fmt="%.17g")
