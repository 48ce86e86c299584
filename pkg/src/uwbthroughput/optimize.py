"""Launch-power optimisation under a total-power cap.

The decision variables are launch powers [dBm] at segment edges; channel
powers follow by linear interpolation in dBm between the edges of their band.
A global factor ``tau = min(1, P_lim / sum P)`` keeps the total launch power
at or below the cap, so every candidate is feasible by construction.

The cost is the negated Shannon sum

    L = -sum_i log2(1 + tau P_i / (eta_i (tau P_i)^3 + P_ASE,i + tau P_i / SNR_b2b))

minimised with L-BFGS-B at frozen ``eta`` and ASE; an outer loop recomputes
both at the new powers (they depend on the launch profile through ISRS and
cross-channel NLI) until the throughput settles.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from scipy.optimize import minimize

from .constants import dbm_to_mw, mw_to_dbm
from .grid import BANDS, SPECTRAL_ORDER
from .noise import channel_snr, link_budget
from .nli import NliConfig

log = logging.getLogger(__name__)

LN2 = np.log(2.0)
DB_PER_NEPER = 10.0 / np.log(10.0)
#: segment bandwidth per band [THz] for the formula mode
SEGMENT_BANDWIDTH_THZ = {"O": 0.75}
DEFAULT_SEGMENT_BANDWIDTH_THZ = 1.5
SEGMENT_MODES = ("formula", "table1", "per_channel")


class OptimizerError(ValueError):
    pass


@dataclass(frozen=True)
class OptimizerOptions:
    segment_mode: str = "formula"
    segment_override: Optional[Dict[str, int]] = None
    bounds_dbm: tuple = (-30.0, 10.0)
    initial_dbm: float = 0.0
    max_outer: int = 10
    outer_tol: float = 1e-3  # relative throughput change
    pgtol: float = 1e-6  # bits/symbol/dBm
    max_inner: int = 500
    span_length: float = 80.0
    nli: NliConfig = field(default_factory=NliConfig)

    def __post_init__(self):
        if self.segment_mode not in SEGMENT_MODES:
            raise OptimizerError(f"segment_mode must be one of {SEGMENT_MODES}")
        lo, hi = self.bounds_dbm
        if not lo < hi:
            raise OptimizerError("bounds_dbm must satisfy lo < hi")
        if self.max_outer < 1:
            raise OptimizerError("max_outer must be >= 1")


def _round_half_up(x):
    return int(np.floor(x + 0.5))


def segment_counts(grid, mode="formula", override=None):
    """Number of segments per populated band.

    ``formula``: round(populated bandwidth / segment bandwidth), 0.75 THz in
    the O-band and 1.5 THz elsewhere.  ``table1``: the preset per-band counts
    scaled by the populated fraction of the band.  At least one segment per
    band, and never more segments than channel gaps.
    """
    counts = {}
    for b, n in grid.band_counts().items():
        if n == 0:
            continue
        if override and b in override:
            nb = int(override[b])
        elif mode == "table1":
            nb = _round_half_up(BANDS[b].segments * n / BANDS[b].capacity)
        else:
            bw = n * grid.spacing
            nb = _round_half_up(bw / SEGMENT_BANDWIDTH_THZ.get(b, DEFAULT_SEGMENT_BANDWIDTH_THZ))
        counts[b] = max(1, min(nb, n - 1)) if n > 1 else 0
    return counts


@dataclass(frozen=True)
class SegmentParameterization:
    """Segment edges and the linear map from edge dBm to channel dBm."""

    band_segments: Dict[str, int]
    edge_frequency: np.ndarray
    edge_band: np.ndarray
    matrix: np.ndarray  # (n_channels, n_edges)
    bounds_dbm: tuple = (-30.0, 10.0)

    @classmethod
    def from_grid(cls, grid, mode="formula", override=None, bounds_dbm=(-30.0, 10.0)):
        f = grid.frequency
        if mode == "per_channel":
            eye = np.eye(len(grid))
            return cls({b: n for b, n in grid.band_counts().items() if n}, f.copy(),
                       grid.band.copy(), eye, tuple(bounds_dbm))
        counts = segment_counts(grid, mode, override)
        edges, names, blocks = [], [], []
        for b in SPECTRAL_ORDER:
            if b not in counts:
                continue
            idx = grid.band_indices(b)
            fb = f[idx]
            if counts[b] == 0:
                e = fb[:1].copy()
            else:
                e = np.linspace(fb.min(), fb.max(), counts[b] + 1)
            edges.append(e)
            names.extend([b] * e.size)
            blocks.append((idx, fb, e))
        n_e = sum(e.size for e in edges)
        w = np.zeros((f.size, n_e))
        col = 0
        for idx, fb, e in blocks:
            if e.size == 1:
                w[idx, col] = 1.0
            else:
                for k in range(e.size):
                    unit = np.zeros(e.size)
                    unit[k] = 1.0
                    w[idx, col + k] = np.interp(fb, e, unit)
            col += e.size
        return cls(counts, np.concatenate(edges), np.array(names), w, tuple(bounds_dbm))

    @property
    def n_edges(self):
        return self.edge_frequency.size

    def channel_dbm(self, edge_dbm):
        return self.matrix @ np.asarray(edge_dbm, dtype=float)

    def channel_powers(self, edge_dbm):
        return dbm_to_mw(self.channel_dbm(edge_dbm))

    def fit(self, channel_dbm):
        """Least-squares edge powers reproducing per-channel dBm, clipped to bounds."""
        x, *_ = np.linalg.lstsq(self.matrix, np.asarray(channel_dbm, dtype=float), rcond=None)
        return np.clip(x, *self.bounds_dbm)


def apply_tau(powers, p_lim):
    """Scale factor ``tau = min(1, p_lim / sum P)`` and the scaled powers.

    An all-zero profile gets ``tau = 1``.
    """
    p = np.asarray(powers, dtype=float)
    if np.any(p < 0):
        raise OptimizerError("powers must be >= 0")
    if not p_lim > 0:
        raise OptimizerError("p_lim must be > 0")
    total = p.sum()
    if total <= p_lim or total == 0.0:
        return 1.0, p.copy()
    tau = p_lim / total
    return tau, tau * p


def objective(powers, budget, p_lim):
    """Cost ``L`` [bit/symbol, negated] of per-channel powers [mW]."""
    tau, _ = apply_tau(powers, p_lim)
    return -np.sum(np.log2(1.0 + channel_snr(powers, budget, tau)))


def cost(edge_dbm, param, budget, p_lim):
    """``(L, dL/d edge_dbm)`` with the gradient taken through interpolation, dBm and tau."""
    p = param.channel_powers(edge_dbm)
    total = p.sum()
    constrained = np.isfinite(p_lim) and total > p_lim
    tau = p_lim / total if constrained else 1.0
    q = tau * p
    eta, a = budget.eta, budget.p_ase
    d = eta * q ** 3 + a + q / budget.trx_snr
    snr = q / d
    value = -np.sum(np.log2(1.0 + snr))
    g_q = -(a - 2.0 * eta * q ** 3) / (d * d) / ((1.0 + snr) * LN2)
    if constrained:
        g_p = tau * g_q - (tau / total) * np.dot(g_q, p)
    else:
        g_p = g_q
    g_dbm = g_p * p / DB_PER_NEPER
    return value, param.matrix.T @ g_dbm


def throughput_bps(cost_value, symbol_rate_thz):
    """Dual-polarisation throughput ``C = -2 f_s L`` [bit/s]."""
    return -2.0 * symbol_rate_thz * 1e12 * cost_value


@dataclass
class OptimizationResult:
    edge_dbm: np.ndarray
    powers: np.ndarray  # mW before tau scaling
    tau: float
    throughput: float  # bit/s
    snr: np.ndarray  # linear, at tau * powers
    converged: bool
    outer_iterations: int
    inner_iterations: int
    history: list  # self-consistent throughput per outer iteration
    budget: object = None
    parameterization: Optional[SegmentParameterization] = None
    message: str = ""

    @property
    def launch_powers(self):
        return self.tau * self.powers

    @property
    def total_power_dbm(self):
        return float(mw_to_dbm(self.launch_powers.sum()))


def optimize_frozen(param, budget, p_lim, x0, options=OptimizerOptions()):
    """L-BFGS-B over edge powers with ``budget`` (eta, ASE) held fixed."""
    lo, hi = options.bounds_dbm
    return minimize(cost, np.asarray(x0, dtype=float), args=(param, budget, p_lim), jac=True,
                    method="L-BFGS-B", bounds=[(lo, hi)] * param.n_edges,
                    options={"gtol": options.pgtol, "maxiter": options.max_inner,
                             "ftol": 1e-15, "maxcor": 20})


def optimize(grid, fibre, bands=None, n_spans=1, p_lim=np.inf, trx_snr=np.inf,
             options=OptimizerOptions(), initial=None):
    """Maximise throughput over segment-edge launch powers.

    ``p_lim`` is in mW (``inf`` for no cap), ``trx_snr`` linear.  ``initial``
    may hold per-channel launch powers [dBm] used as a warm start.  Returns
    the best self-consistent result seen; ``converged`` is False when the
    outer loop hit ``max_outer`` without settling.
    """
    if len(grid) == 0:
        raise OptimizerError("empty grid")
    if not p_lim > 0:
        raise OptimizerError("p_lim must be > 0 (use inf for no cap)")
    param = SegmentParameterization.from_grid(grid, options.segment_mode,
                                              options.segment_override, options.bounds_dbm)
    if initial is None:
        x = np.full(param.n_edges, float(options.initial_dbm))
    else:
        x = param.fit(initial)
    fs = grid.symbol_rate

    def evaluate(edges):
        p = param.channel_powers(edges)
        tau, q = apply_tau(p, p_lim)
        budget, _ = link_budget(grid, fibre, q, n_spans, trx_snr, bands, options.span_length,
                                options.nli)
        c = throughput_bps(objective(p, budget, p_lim), fs)
        return p, tau, budget, c

    p, tau, budget, c_prev = evaluate(x)
    best = (c_prev, x.copy(), p, tau, budget)
    history = [c_prev]
    converged = False
    n_inner = 0
    message = ""
    for outer in range(1, options.max_outer + 1):
        res = optimize_frozen(param, budget, p_lim, x, options)
        n_inner += int(res.nit)
        message = str(res.message)
        x = res.x
        p, tau, budget, c = evaluate(x)
        history.append(c)
        log.debug("outer %d: %.6g bit/s (frozen model %.6g)", outer, c,
                  throughput_bps(res.fun, fs))
        if c > best[0]:
            best = (c, x.copy(), p, tau, budget)
        if abs(c - c_prev) <= options.outer_tol * abs(c_prev):
            converged = True
            break
        c_prev = c
    c, x, p, tau, budget = best
    return OptimizationResult(x, p, tau, c, channel_snr(p, budget, tau), converged, outer,
                              n_inner, history, budget, param, message)


def write_launch_powers(grid, result, path, header=""):
    """Delimited table of the optimised per-channel launch powers."""
    q = result.launch_powers
    with open(path, "w") as fh:
        fh.write(header)
        fh.write("channel_index,band,frequency_THz,wavelength_nm,launch_power_dBm\n")
        for i in range(len(grid)):
            fh.write("%d,%s,%.6f,%.6f,%.6f\n" % (i, grid.band[i], grid.frequency[i],
                                                 grid.wavelength[i], mw_to_dbm(q[i])))
