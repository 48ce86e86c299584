"""Optimise launch powers for a full C band and show where the power goes.

Run with ``python3 demos/c_band_optimum.py``.  One span, ideal transceivers,
first without a power cap and then with a 15 dBm total-power cap.
"""

import numpy as np

from uwbthroughput.constants import dbm_to_mw
from uwbthroughput.fibre import make_default_profile
from uwbthroughput.grid import build_grid
from uwbthroughput.nli import NliConfig
from uwbthroughput.optimize import OptimizerOptions, optimize

fibre = make_default_profile()
grid = build_grid(29)
options = OptimizerOptions(segment_mode="table1", nli=NliConfig(n_r=64))

for label, p_lim in (("no cap", np.inf), ("15 dBm cap", dbm_to_mw(15.0))):
    res = optimize(grid, fibre, p_lim=p_lim, options=options)
    dbm = 10 * np.log10(res.launch_powers)
    snr = 10 * np.log10(res.snr)
    print(f"{label}: {res.throughput / 1e12:.2f} Tb/s, total {res.total_power_dbm:.2f} dBm, "
          f"tau {res.tau:.3f}, {res.outer_iterations} refreshes")
    print(f"  launch {dbm.min():.2f} .. {dbm.max():.2f} dBm, SNR {snr.min():.2f} .. "
          f"{snr.max():.2f} dB")
