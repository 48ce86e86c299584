"""Nonlinear interference coefficients from the integral ISRS GN model.

For a probe channel ``i`` the NLI power spectral density is

    G(f_i) = 16/27 gamma_i^2 ∬ S(f1) S(f2) S(f1 + f2 - f_i) |L(f1, f2, f_i)|^2 df1 df2

with the ISRS-aware link function

    L = ∫_0^Lspan sqrt(rho(z,f1) rho(z,f2) rho(z,f1+f2-f_i) / rho(z,f_i)) exp(j phi z) dz,
    phi = -4 pi^2 (f1 - f_i)(f2 - f_i) [beta2_i + pi beta3_i (f1 + f2 - 2 f_i)].

The integral is restricted to the two strips where ``f1`` or ``f2`` lies in
the probe channel (SPM and XPM islands, including the partially degenerate
corners where ``f1 + f2 - f_i`` falls into a neighbour of ``f1``).  Inside the
strip ``f2 = f_i + v`` the amplitude reduces to ``sqrt(rho_j rho_m)`` and the
link function depends on ``phi`` only, so for every interferer/neighbour pair
``(j, m)`` the antiderivatives

    Q(psi)  = ∫_0^psi |L(phi)|^2 dphi,      Q1(psi) = ∫_0^psi phi |L(phi)|^2 dphi

are tabulated once and the v-integral becomes a difference of table lookups
(with a first-order correction for the beta3 curvature of ``phi`` in ``v``).
Beyond the tabulated range the closed-form large-phase asymptote of
``|L|^2`` is used.  The u-integral is Gauss-Legendre with ``n_r`` nodes per
island, geometrically graded towards the SPM singular line ``f1 = f_i``.
"""

from dataclasses import dataclass

import numba
import numpy as np
from scipy.integrate import cumulative_simpson, simpson
from scipy.interpolate import CubicSpline
from scipy.special import sici

PREFACTOR = 16.0 / 27.0


class NliError(ValueError):
    pass


@dataclass(frozen=True)
class NliConfig:
    """Accuracy controls.

    ``n_r`` sets the Gauss-Legendre node count along the interferer
    frequency for the SPM island and XPM islands within ``near_cells``
    channels (``n_r // 12`` beyond); ``n_m_bar`` multiplies the z-sample
    density of the link-function quadrature (base step 0.1 km); ``n_v`` is
    the node count of the fallback v-quadrature used where the beta3
    curvature of the phase is too strong for the tabulated form.
    """

    n_r: int = 150
    n_m_bar: float = 1.4
    coherent: bool = False
    phase_max: float = 8.0  # 1/km, end of the tabulated range
    phase_samples_per_period: int = 32
    series_tol: float = 0.02
    spm_grading: float = 1e-4
    n_v: int = 32
    near_cells: int = 8
    base_dz: float = 0.1

    def __post_init__(self):
        if self.n_r < 8:
            raise ValueError("n_r must be >= 8")
        if not self.n_m_bar > 0:
            raise ValueError("n_m_bar must be > 0")
        if self.coherent:
            raise NotImplementedError("coherent span accumulation is not supported")


@dataclass(frozen=True)
class NliResult:
    eta: np.ndarray  # 1/mW^2 for the whole link
    reference_powers: np.ndarray  # mW
    frequency: np.ndarray
    n_spans: int

    @property
    def p_nli(self):
        return self.eta * self.reference_powers ** 3

    def to_rows(self):
        idx = np.arange(self.eta.size)
        return np.column_stack([idx, self.frequency, self.eta])


# -- link-function tables -----------------------------------------------------

def _filon_weights(psi, z):
    """Weights W[k, n] with ∫ a(z) exp(j psi_k z) dz = W @ a for piecewise-linear a."""
    dz = z[1] - z[0]
    theta = psi * dz
    small = np.abs(theta) < 1e-3
    ts = np.where(small, 1.0, theta)
    sinc2 = np.where(small, 1.0 - theta ** 2 / 12.0, (np.sin(ts / 2) / (ts / 2)) ** 2)
    edge = np.where(small, 0.5 + 1j * theta / 6 - theta ** 2 / 24 - 1j * theta ** 3 / 120,
                    1j / ts - (np.exp(1j * ts) - 1.0) / ts ** 2)
    w = dz * sinc2[:, None] * np.exp(1j * np.outer(psi, z))
    w[:, 0] = dz * edge
    w[:, -1] = dz * np.exp(1j * psi * z[-1]) * np.conj(edge)
    return w


def _si_ci(x):
    si, ci = sici(x)
    return si, ci


@dataclass
class LinkTables:
    """Per link-function tables on a uniform phase grid ``[0, phase_max]``."""

    dpsi: float
    phase_max: float
    span_length: float
    K: np.ndarray  # (n_func, n_psi) |L|^2 [km^2]
    Q: np.ndarray
    Q1: np.ndarray
    B: np.ndarray  # a(0)^2 + a(L)^2
    C: np.ndarray  # 2 a(0) a(L)
    Qc: np.ndarray  # asymptotic constants
    Q1c: np.ndarray
    R0: np.ndarray  # ∫ a^2 dz
    width: np.ndarray  # phase half-width scale of |L|^2

    def q_inf(self):
        return self.Qc + self.C * self.span_length * np.pi / 2


def link_tables(amplitudes, z, config=NliConfig()):
    """Build tables for amplitude functions ``amplitudes`` (n_func, n_z) on ``z``."""
    span = float(z[-1])
    dpsi = 2 * np.pi / (span * config.phase_samples_per_period)
    phase_max = max(config.phase_max, 100.0 / span)
    n_psi = int(np.ceil(phase_max / dpsi)) + 1
    if n_psi % 2 == 0:
        n_psi += 1
    psi = np.arange(n_psi) * dpsi
    phase_max = float(psi[-1])
    w = _filon_weights(psi, z)
    a = np.ascontiguousarray(amplitudes.T)
    K = np.empty((amplitudes.shape[0], n_psi))
    chunk = 256
    for s in range(0, amplitudes.shape[0], chunk):
        lk = w @ a[:, s:s + chunk]
        K[s:s + chunk] = (lk.real ** 2 + lk.imag ** 2).T
    Q = cumulative_simpson(K, dx=dpsi, axis=1, initial=0.0)
    Q1 = cumulative_simpson(K * psi[None, :], dx=dpsi, axis=1, initial=0.0)
    a0, aL = amplitudes[:, 0], amplitudes[:, -1]
    B = a0 ** 2 + aL ** 2
    C = 2 * a0 * aL
    xk = phase_max * span
    si_k, ci_k = _si_ci(xk)
    Qc = Q[:, -1] + B / phase_max - C * np.cos(xk) / phase_max - C * span * si_k
    Q1c = Q1[:, -1] - B * np.log(phase_max) + C * ci_k
    R0 = simpson(amplitudes ** 2, x=z, axis=1)
    width = np.pi * R0 / (2 * K[:, 0])
    return LinkTables(dpsi, phase_max, span, K, Q, Q1, B, C, Qc, Q1c, R0, width)


# -- quadrature nodes -----------------------------------------------------------

def _gl(n):
    t, wt = np.polynomial.legendre.leggauss(n)
    return 0.5 * (t + 1.0), 0.5 * wt


def island_pieces(offset, h):
    """u-intervals of the sub-island where f3 sits in the channel ``offset`` THz from f1's.

    With u = f1 - f_j and v = f2 - f_i both in ``[-h, h]`` the sub-island is
    ``|u + v - offset| <= h``; v-limits are linear in u on each returned piece.
    """
    d = -offset
    u_lo = max(-h, -2 * h - d)
    u_hi = min(h, 2 * h - d)
    if u_hi <= u_lo:
        return np.empty((0, 2))
    if u_lo < -d < u_hi:
        return np.array([[u_lo, -d], [-d, u_hi]])
    return np.array([[u_lo, u_hi]])


# -- numba kernel -----------------------------------------------------------------

@numba.njit(cache=True)
def _aux_fg(x):
    x2 = 1.0 / (x * x)
    f = (1.0 - x2 * (2.0 - x2 * (24.0 - x2 * 720.0))) / x
    g = x2 * (1.0 - x2 * (6.0 - x2 * (120.0 - x2 * 5040.0)))
    return f, g


@numba.njit(cache=True)
def _lookup(Q, Q1, fn, psi, dpsi, n_tab, phase_max, Qc, Q1c, B, C, span):
    a = abs(psi)
    if a <= phase_max:
        x = a / dpsi
        k = int(x)
        if k > n_tab - 2:
            k = n_tab - 2
        t = x - k
        q = Q[fn, k] * (1.0 - t) + Q[fn, k + 1] * t
        q1 = Q1[fn, k] * (1.0 - t) + Q1[fn, k + 1] * t
    else:
        xl = a * span
        f, g = _aux_fg(xl)
        c = np.cos(xl)
        s = np.sin(xl)
        si = 0.5 * np.pi - f * c - g * s
        ci = f * s - g * c
        q = Qc[fn] - B[fn] / a + C[fn] * c / a + C[fn] * span * si
        q1 = Q1c[fn] + B[fn] * np.log(a) - C[fn] * ci
    if psi < 0.0:
        q = -q
    return q, q1


@numba.njit(cache=True)
def _kval(K, fn, psi, dpsi, n_tab, phase_max, B, C, span):
    a = abs(psi)
    if a <= phase_max:
        x = a / dpsi
        k = int(x)
        if k > n_tab - 2:
            k = n_tab - 2
        t = x - k
        return K[fn, k] * (1.0 - t) + K[fn, k + 1] * t
    return (B[fn] - C[fn] * np.cos(a * span)) / (a * a)


@numba.njit(cache=True)
def _graded(a, b, grade, scale, k, gt, gw):
    """k-th node and weight of GL on [a, b], geometrically graded at a (1) or b (2)."""
    length = b - a
    if grade == 0 or scale >= length:
        return a + length * gt[k], length * gw[k]
    r = 1.0 + length / scale
    rt = r ** gt[k]
    g = scale * (rt - 1.0)
    wk = gw[k] * scale * np.log(r) * rt
    if grade == 1:
        return a + g, wk
    return b - g, wk


@numba.njit(cache=True)
def _direct(lo, hi, c1, c2, fn, K, dpsi, n_tab, phase_max, B, C, span, width, vt, vw):
    # ∫_lo^hi |L(c1 v + c2 v^2)|^2 dv, split at v = 0 and at the stationary point
    cuts = np.empty(4)
    nc = 0
    cuts[nc] = lo
    nc += 1
    p0 = 0.0
    p1 = -c1 / (2.0 * c2) if c2 != 0.0 else 1e300
    if p1 < p0:
        p0, p1 = p1, p0
    if lo < p0 < hi:
        cuts[nc] = p0
        nc += 1
    if lo < p1 < hi:
        cuts[nc] = p1
        nc += 1
    cuts[nc] = hi
    nc += 1
    scale = width[fn] / max(abs(c1), 1e-300)
    total = 0.0
    for q in range(nc - 1):
        a = cuts[q]
        b = cuts[q + 1]
        if b <= a:
            continue
        grade = 1 if a == 0.0 else (2 if b == 0.0 else 0)
        for k in range(vt.size):
            v, wk = _graded(a, b, grade, scale, k, vt, vw)
            total += wk * _kval(K, fn, c1 * v + c2 * v * v, dpsi, n_tab, phase_max, B, C, span)
    return total


@numba.njit(cache=True)
def _v_integral(lo, hi, c1, c2, fn, K, Q, Q1, dpsi, n_tab, phase_max, Qc, Q1c, B, C, span,
                width, series_tol, vt, vw):
    psi_h = c1 * hi + c2 * hi * hi
    psi_l = c1 * lo + c2 * lo * lo
    if c1 != 0.0:
        eps = 4.0 * c2 / (c1 * c1)
        if abs(eps) * max(abs(psi_h), abs(psi_l)) < series_tol:
            qh, q1h = _lookup(Q, Q1, fn, psi_h, dpsi, n_tab, phase_max, Qc, Q1c, B, C, span)
            ql, q1l = _lookup(Q, Q1, fn, psi_l, dpsi, n_tab, phase_max, Qc, Q1c, B, C, span)
            return ((qh - ql) - 0.5 * eps * (q1h - q1l)) / c1
    return _direct(lo, hi, c1, c2, fn, K, dpsi, n_tab, phase_max, B, C, span, width, vt, vw)


@numba.njit(cache=True)
def _piece_sum(a, b, grade, scale, d, h, dj, b2, b3, fn, ut, uw, K, Q, Q1, dpsi, n_tab,
               phase_max, Qc, Q1c, B, C, span, width, series_tol, vt, vw):
    four_pi2 = 4.0 * np.pi ** 2
    s = 0.0
    for k in range(ut.size):
        u, wk = _graded(a, b, grade, scale, k, ut, uw)
        lo = max(-h, -h - d - u)
        hi = min(h, h - d - u)
        if hi <= lo:
            continue
        w = dj + u
        c1 = -four_pi2 * w * (b2 + np.pi * b3 * w)
        c2 = -four_pi2 * np.pi * b3 * w
        s += wk * _v_integral(lo, hi, c1, c2, fn, K, Q, Q1, dpsi, n_tab, phase_max, Qc, Q1c,
                              B, C, span, width, series_tol, vt, vw)
    return s


@numba.njit(cache=True)
def _strip_kernel(probes, f_ch, beta2, beta3, pair_j, pair_m, pair_fn, pieces, n_pieces,
                  h, near, spm_scale, K, Q, Q1, dpsi, phase_max, Qc, Q1c, B, C, span, width,
                  series_tol, nt, nw, ft, fw, vt, vw, powers, out):
    n_tab = Q.shape[1]
    for ii in range(probes.size):
        i = probes[ii]
        fi = f_ch[i]
        b2 = beta2[i]
        b3 = beta3[i]
        # walk-off zero: beta2 + pi beta3 w = 0
        wstar = -b2 / (np.pi * b3) if b3 != 0.0 else 1e300
        acc = 0.0
        for p in range(pair_j.size):
            j = pair_j[p]
            m = pair_m[p]
            pw = powers[j] * powers[m]
            if pw == 0.0:
                continue
            fn = pair_fn[p]
            dj = f_ch[j] - fi
            d = f_ch[j] - f_ch[m]
            s = 0.0
            for q in range(n_pieces[p]):
                a = pieces[p, q, 0]
                b = pieces[p, q, 1]
                if j == i:
                    grade = 1 if abs(a) <= abs(b) else 2
                    s += _piece_sum(a, b, grade, spm_scale, d, h, dj, b2, b3, fn, nt, nw, K,
                                    Q, Q1, dpsi, n_tab, phase_max, Qc, Q1c, B, C, span, width,
                                    series_tol, vt, vw)
                    continue
                if abs(dj) <= near:
                    ut, uw = nt, nw
                else:
                    ut, uw = ft, fw
                ustar = wstar - dj
                if a < ustar < b:
                    scale = spm_scale
                    s += _piece_sum(a, ustar, 2, scale, d, h, dj, b2, b3, fn, nt, nw, K, Q, Q1,
                                    dpsi, n_tab, phase_max, Qc, Q1c, B, C, span, width,
                                    series_tol, vt, vw)
                    s += _piece_sum(ustar, b, 1, scale, d, h, dj, b2, b3, fn, nt, nw, K, Q, Q1,
                                    dpsi, n_tab, phase_max, Qc, Q1c, B, C, span, width,
                                    series_tol, vt, vw)
                else:
                    s += _piece_sum(a, b, 0, 1.0, d, h, dj, b2, b3, fn, ut, uw, K, Q, Q1,
                                    dpsi, n_tab, phase_max, Qc, Q1c, B, C, span, width,
                                    series_tol, vt, vw)
            acc += (1.0 if j == i else 2.0) * pw * s
        out[ii] = acc


# -- public API -------------------------------------------------------------------

def _amplitudes(evolution, n_m_bar, base_dz, pairs_adjacent):
    z0 = evolution.z_grid
    span = evolution.span_length
    n_z = int(np.ceil(span / base_dz * n_m_bar)) + 1
    z = np.linspace(0.0, span, n_z)
    log_rho = np.log(evolution.rho)
    if z0.size >= 4:
        log_rho_z = CubicSpline(z0, log_rho, axis=0)(z)
    else:
        log_rho_z = np.stack([np.interp(z, z0, c) for c in log_rho.T], axis=1)
    own = np.exp(log_rho_z.T)
    k = pairs_adjacent
    cross = np.exp(0.5 * (log_rho_z[:, k] + log_rho_z[:, k + 1]).T)
    return z, np.vstack([own, cross])


class _Plan:
    """Interferer/neighbour pairs and their u-pieces for one channel grid."""

    def __init__(self, freq, symbol_rate, spacing):
        h = symbol_rate / 2
        self.adjacent = np.flatnonzero(np.abs(np.diff(freq) - spacing) < 1e-6)
        n_ch = freq.size
        cross_of = {int(k): n_ch + q for q, k in enumerate(self.adjacent)}
        pj, pm, pf = [], [], []
        for j in range(n_ch):
            pj.append(j), pm.append(j), pf.append(j)
            if j in cross_of:
                pj.append(j), pm.append(j + 1), pf.append(cross_of[j])
            if j - 1 in cross_of:
                pj.append(j), pm.append(j - 1), pf.append(cross_of[j - 1])
        self.pair_j = np.array(pj, dtype=np.int64)
        self.pair_m = np.array(pm, dtype=np.int64)
        self.pair_fn = np.array(pf, dtype=np.int64)
        self.pieces = np.zeros((self.pair_j.size, 2, 2))
        self.n_pieces = np.zeros(self.pair_j.size, dtype=np.int64)
        for p, (j, m) in enumerate(zip(pj, pm)):
            pc = island_pieces(freq[m] - freq[j], h)
            self.pieces[p, :len(pc)] = pc
            self.n_pieces[p] = len(pc)


def strip_integrals(freq, beta2, beta3, powers, evolution, symbol_rate, spacing,
                    config=NliConfig(), probes=None):
    """Sum over islands of ``c P_j P_m ∬ |L|^2 du dv`` per probe [mW^2 km^2 THz^2].

    ``c`` is 1 for the SPM island and 2 for XPM islands (both strips).
    """
    freq = np.asarray(freq, dtype=float)
    plan = _Plan(freq, symbol_rate, spacing)
    z, amps = _amplitudes(evolution, config.n_m_bar, config.base_dz, plan.adjacent)
    tab = link_tables(amps, z, config)
    probes = np.arange(freq.size) if probes is None else np.asarray(probes, dtype=np.int64)
    h = symbol_rate / 2
    nt, nw = _gl(max(4, config.n_r // 2))
    ft, fw = _gl(max(4, config.n_r // 12))
    vt, vw = _gl(config.n_v)
    out = np.zeros(probes.size)
    _strip_kernel(probes, freq, np.asarray(beta2, float), np.asarray(beta3, float),
                  plan.pair_j, plan.pair_m, plan.pair_fn, plan.pieces, plan.n_pieces,
                  h, config.near_cells * spacing + 1e-9, config.spm_grading * h,
                  tab.K, tab.Q, tab.Q1, tab.dpsi, tab.phase_max, tab.Qc, tab.Q1c, tab.B,
                  tab.C, tab.span_length, tab.width, config.series_tol, nt, nw, ft, fw, vt, vw,
                  np.asarray(powers, dtype=float), out)
    return out


def compute_nli(grid, powers, fibre, evolution, n_spans=1, config=NliConfig()):
    """Per-channel NLI coefficient eta [1/mW^2] of an ``n_spans`` link.

    Spans add incoherently; ``powers`` are the launch powers [mW] at which
    ``evolution`` was solved.
    """
    freq = np.asarray(grid.frequency, dtype=float)
    p = np.asarray(powers, dtype=float)
    if p.shape != freq.shape:
        raise NliError(f"{p.size} powers for {freq.size} channels")
    if evolution.rho.shape[1] != freq.size:
        raise NliError(f"evolution has {evolution.rho.shape[1]} channels, grid has {freq.size}")
    if not np.allclose(evolution.launch_powers, p, rtol=1e-12, atol=0.0):
        raise NliError("evolution was solved at different launch powers")
    if n_spans < 1:
        raise NliError("n_spans must be >= 1")
    par = fibre.at_frequency(freq)
    fs = grid.symbol_rate
    strips = strip_integrals(freq, par.beta2, par.beta3, p, evolution, fs, grid.spacing, config)
    # per unit probe power: 16/27 gamma^2 [1/W^2 -> 1/mW^2: 1e-6] / fs^3 * fs
    nli_per_power = PREFACTOR * par.gamma ** 2 * 1e-6 * strips / fs ** 2
    with np.errstate(divide="ignore"):
        eta = n_spans * nli_per_power / np.where(p > 0, p, np.nan) ** 2
    eta = np.where(p > 0, eta, np.inf)
    return NliResult(eta, p.copy(), freq, int(n_spans))


def nli_dip_locator(result, grid, fibre=None):
    """Index of the O-band channel with the largest eta."""
    idx = grid.band_indices("O")
    if idx.size == 0:
        raise NliError("O-band is not populated")
    return int(idx[np.argmax(result.eta[idx])])


def write_eta(result, path):
    np.savetxt(path, result.to_rows(), delimiter=",",
               header="channel_index,frequency_THz,eta_per_mW2", comments="",
               fmt=["%d", "%.6f", "%.10e"])
