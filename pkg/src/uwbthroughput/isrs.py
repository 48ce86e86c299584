"""Inter-channel stimulated Raman scattering along a single span.

The coupled power equations

    dP_i/dz = -alpha_i P_i + P_i sum_j M_ij P_j

are integrated for the normalised profile rho_i(z) = P_i(z)/P_i(0) in
logarithmic form, ``d ln rho_i/dz = -alpha_i + sum_j M_ij P_j(0) rho_j``, so
zero-power channels are carried as infinitesimal probes and the pure
attenuation case is integrated exactly.
"""

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class PowerEvolution:
    z_grid: np.ndarray  # km
    rho: np.ndarray  # (n_z, n_ch)
    launch_powers: np.ndarray  # mW
    frequency: np.ndarray  # THz
    alpha: np.ndarray  # 1/km

    @property
    def span_length(self):
        return float(self.z_grid[-1])

    def end_rho(self):
        return self.rho[-1]

    def to_rows(self):
        """``(z_km, channel_index, rho)`` triples."""
        n_z, n_ch = self.rho.shape
        z = np.repeat(self.z_grid, n_ch)
        ch = np.tile(np.arange(n_ch), n_z)
        return np.column_stack([z, ch, self.rho.ravel()])


def raman_matrix(freq_thz, fibre):
    """Coupling matrix M [1/mW/km] with photon-conserving pump depletion.

    For ``f_j > f_i`` channel ``i`` is amplified by ``g(f_j - f_i)``; for
    ``f_j < f_i`` it is depleted by ``(f_i/f_j) g(f_i - f_j)``.  The gain is
    scaled by ``2 A_ref / (A_i + A_j)``.
    """
    f = np.asarray(freq_thz, dtype=float)
    aeff = fibre.at_frequency(f).aeff
    df = f[None, :] - f[:, None]  # f_j - f_i
    g = fibre.raman_efficiency(df)
    overlap = 2.0 * fibre.raman_reference_area_um2 / (aeff[:, None] + aeff[None, :])
    ratio = np.where(df < 0, f[:, None] / f[None, :], 1.0)
    return np.sign(df) * g * overlap * ratio * 1e-3  # 1/W -> 1/mW


def solve_span(freq_thz, powers_mw, fibre, span_length_km, dz=0.1, rtol=1e-8, atol=1e-12,
               method="RK45"):
    """Integrate the span and return the normalised power profile on a ``dz`` grid.

    ``freq_thz`` may be a :class:`~uwbthroughput.grid.ChannelGrid`.
    """
    f = np.asarray(getattr(freq_thz, "frequency", freq_thz), dtype=float)
    p = np.asarray(powers_mw, dtype=float)
    if p.shape != f.shape:
        raise ValueError(f"{p.size} powers for {f.size} channels")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("launch powers must be finite and >= 0")
    if not span_length_km > 0:
        raise ValueError("span_length must be > 0")
    alpha = fibre.at_frequency(f).alpha
    coupling = raman_matrix(f, fibre) * p[None, :]

    n_z = int(round(span_length_km / dz)) + 1
    z_grid = np.linspace(0.0, span_length_km, n_z)
    if not np.any(coupling):
        rho = np.exp(-np.outer(z_grid, alpha))
        return PowerEvolution(z_grid, rho, p.copy(), f, alpha)

    def rhs(z, u):
        return coupling @ np.exp(u) - alpha

    sol = solve_ivp(rhs, (0.0, span_length_km), np.zeros(f.size), method=method,
                    t_eval=z_grid, rtol=rtol, atol=atol)
    if sol.status != 0:
        z_fail = sol.t[-1] if sol.t.size else 0.0
        raise SolverError(f"ISRS integration failed at z = {z_fail:.4f} km: {sol.message}")
    rho = np.exp(sol.y.T)
    rho[0] = 1.0
    bad = ~np.isfinite(rho) | (rho <= 0.0)
    if bad.any():
        z_fail = z_grid[np.flatnonzero(bad.any(axis=1))[0]]
        raise SolverError(f"ISRS integration lost a channel (rho out of range) at "
                          f"z = {z_fail:.4f} km")
    return PowerEvolution(z_grid, rho, p.copy(), f, alpha)


def span_gain(evolution):
    """Per-channel linear gain restoring the launch profile, ``1/rho(L)``."""
    return 1.0 / evolution.end_rho()


def write_evolution(evolution, path):
    np.savetxt(path, evolution.to_rows(), delimiter=",", header="z_km,channel_index,rho",
               comments="", fmt=["%.4f", "%d", "%.12e"])
