"""How stimulated Raman scattering tilts a wideband launch along one span.

Run with ``python3 demos/raman_tilt.py``.  Every channel of the full O to U
grid is launched at 0 dBm and the span gain needed to restore it is compared
with plain attenuation.
"""

import numpy as np

from uwbthroughput.fibre import make_default_profile
from uwbthroughput.grid import build_grid
from uwbthroughput.isrs import solve_span, span_gain

fibre = make_default_profile()
grid = build_grid("full")
ev = solve_span(grid, np.ones(len(grid)), fibre, 80.0)
with_raman = 10 * np.log10(span_gain(ev))
plain = 10 * np.log10(span_gain(solve_span(grid, np.ones(len(grid)), fibre.without_raman(), 80.0)))

for b in grid.populated_bands:
    i = grid.band_indices(b)
    print(f"{b}: span loss {plain[i].mean():6.2f} dB, Raman adds {np.mean(with_raman[i] - plain[i]):+6.2f} dB of loss")
