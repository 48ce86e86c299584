"""Noise terms of the per-channel SNR: amplifier ASE, NLI and transceiver noise.

All powers are in mW and refer to the symbol-rate bandwidth of a channel.
The transceiver contribution scales with the signal, ``P_TRX = tau P / SNR_b2b``,
so the back-to-back SNR is an exact ceiling on the link SNR.
"""

from dataclasses import dataclass

import numpy as np

from .constants import PLANCK, db_to_lin, lin_to_db
from .isrs import solve_span, span_gain
from .nli import NliConfig, compute_nli


class NoiseError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseBudget:
    """Per-channel noise for the whole link.

    ``trx_snr`` is linear; ``np.inf`` models an ideal transceiver.
    """

    p_ase: np.ndarray  # mW
    trx_snr: float
    eta: np.ndarray  # 1/mW^2

    def __post_init__(self):
        p_ase = np.asarray(self.p_ase, dtype=float)
        eta = np.asarray(self.eta, dtype=float)
        if p_ase.shape != eta.shape:
            raise NoiseError("p_ase and eta must have the same length")
        if np.any(p_ase < 0):
            raise NoiseError("ASE power must be >= 0")
        if not self.trx_snr > 0:
            raise NoiseError("trx_snr must be > 0")
        object.__setattr__(self, "p_ase", p_ase)
        object.__setattr__(self, "eta", eta)

    def __len__(self):
        return self.p_ase.size


def compute_ase(grid, gains, bands=None, n_spans=1):
    """ASE power [mW] accumulated over ``n_spans`` amplified spans.

    ``P = n_spans h f (F G - 1) f_s`` with the noise figure ``F`` of each
    channel's band and the gain ``G`` restoring the span loss.
    """
    g = np.asarray(gains, dtype=float)
    if g.shape != grid.frequency.shape:
        raise NoiseError(f"{g.size} gains for {len(grid)} channels")
    if np.any(g < 1.0):
        bad = int(np.flatnonzero(g < 1.0)[0])
        raise NoiseError(f"amplifier gain {g[bad]:.6g} < 1 at channel {bad}")
    if n_spans < 1:
        raise NoiseError("n_spans must be >= 1")
    nf = db_to_lin(grid.noise_figures_db(bands))
    hz = 1e12
    watts = PLANCK * grid.frequency * hz * (nf * g - 1.0) * grid.symbol_rate * hz
    return n_spans * watts * 1e3


def channel_snr(powers, budget, tau=1.0):
    """Linear SNR per channel at launch powers ``tau * powers``.

    Zero-power channels report SNR 0.
    """
    if not 0.0 < tau <= 1.0:
        raise NoiseError("tau must lie in (0, 1]")
    q = tau * np.asarray(powers, dtype=float)
    if np.any(q < 0):
        raise NoiseError("powers must be >= 0")
    with np.errstate(invalid="ignore"):
        nli = np.where(q > 0, budget.eta * q ** 3, 0.0)
    denom = nli + budget.p_ase + q / budget.trx_snr
    with np.errstate(invalid="ignore", divide="ignore"):
        snr = np.where(q > 0, q / denom, 0.0)
    return snr


def snr_components(powers, budget, tau=1.0):
    """``(snr_ase, snr_nli, snr_trx)`` whose inverses add up to ``1/SNR``."""
    q = tau * np.asarray(powers, dtype=float)
    with np.errstate(divide="ignore"):
        snr_ase = q / budget.p_ase
        snr_nli = 1.0 / (budget.eta * q ** 2)
    return snr_ase, snr_nli, np.full(q.shape, float(budget.trx_snr))


def link_budget(grid, fibre, launch_powers, n_spans=1, trx_snr=np.inf, bands=None,
                span_length=80.0, config=NliConfig()):
    """Solve ISRS at the given launch powers and assemble the noise budget.

    Returns ``(budget, evolution)``; the amplifier gains are the inverse span
    transmissions, so the launch profile is restored after every span.
    """
    p = np.asarray(launch_powers, dtype=float)
    evolution = solve_span(grid, p, fibre, span_length)
    p_ase = compute_ase(grid, span_gain(evolution), bands, n_spans)
    eta = compute_nli(grid, p, fibre, evolution, n_spans, config).eta
    return NoiseBudget(p_ase, trx_snr, eta), evolution


def write_snr(grid, powers, budget, path, tau=1.0, header=""):
    """Delimited table ``channel_index,frequency_THz,snr_dB,p_ase_mW,p_nli_mW``."""
    q = tau * np.asarray(powers, dtype=float)
    snr = channel_snr(powers, budget, tau)
    with np.errstate(invalid="ignore"):
        p_nli = np.where(q > 0, budget.eta * q ** 3, 0.0)
    with open(path, "w") as fh:
        fh.write(header)
        fh.write("channel_index,frequency_THz,snr_dB,p_ase_mW,p_nli_mW\n")
        for i in range(len(grid)):
            fh.write("%d,%.6f,%.6f,%.6e,%.6e\n" % (i, grid.frequency[i], lin_to_db(snr[i]),
                                                   budget.p_ase[i], p_nli[i]))


__all__ = ["NoiseBudget", "NoiseError", "compute_ase", "channel_snr", "snr_components",
           "link_budget", "write_snr"]
