"""A small throughput-versus-bandwidth sweep and its saturation points.

Run with ``python3 demos/saturation_sweep.py``.  Channels are added from the
C band outwards, once with a 10 dBm cap and once without; the script prints
each curve and the bandwidth at which 90% of the final throughput is reached.
A coarse schedule keeps it to a few minutes.
"""

import numpy as np

from uwbthroughput.fibre import make_default_profile
from uwbthroughput.nli import NliConfig
from uwbthroughput.optimize import OptimizerOptions
from uwbthroughput.sweep import SweepPlan, run_sweep, saturation_report

plan = SweepPlan([10, 29, 50, 76, 110, 138], spans=(1,), caps_dbm=(10.0, np.inf),
                 trx_snr_db=(20.0,), fibre=make_default_profile(),
                 options=OptimizerOptions(segment_mode="table1", nli=NliConfig(n_r=48)))
result = run_sweep(plan)
for sid in result.scenario_ids():
    print(sid)
    for r in result.curve(sid):
        print(f"  {r.bandwidth_thz:6.2f} THz  {r.throughput_tbps:7.2f} Tb/s  tau {r.tau:.3f}")
for sid, (bw, monotone) in saturation_report(result).items():
    print(f"{sid}: 90% of final throughput at {bw:.2f} THz" + ("" if monotone else " (non-monotone)"))
