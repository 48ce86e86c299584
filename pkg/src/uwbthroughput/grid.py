"""WDM channel plan: band definitions, guard bands and population order.

Bands are laid out outward from the C-band, each one separated from its
inner neighbour by a 5 nm guard measured between the outer edges of the
occupied 150 GHz slots.  Channels are added C (centre-out), L, S, U, E, O,
each band filling from the side facing the bands already populated.
"""

from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .constants import C_NM_THZ, CHANNEL_SPACING_THZ, SYMBOL_RATE_THZ

GUARD_NM = 5.0


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Band:
    name: str
    wavelength_range: Tuple[float, float]
    noise_figure_db: float
    capacity: int
    segments: int
    fill_direction: str  # 'center-out', 'from-low-wavelength', 'from-high-wavelength'

    @property
    def frequency_range(self):
        lo, hi = self.wavelength_range
        return C_NM_THZ / hi, C_NM_THZ / lo

    @property
    def nominal_bandwidth(self):
        f_lo, f_hi = self.frequency_range
        return f_hi - f_lo


BANDS: Dict[str, Band] = {
    "O": Band("O", (1260.0, 1360.0), 5.0, 116, 15, "from-high-wavelength"),
    "E": Band("E", (1360.0, 1460.0), 7.0, 100, 6, "from-high-wavelength"),
    "S": Band("S", (1460.0, 1530.0), 7.0, 62, 4, "from-high-wavelength"),
    "C": Band("C", (1530.0, 1565.0), 5.0, 29, 2, "center-out"),
    "L": Band("L", (1565.0, 1625.0), 6.0, 47, 3, "from-low-wavelength"),
    "U": Band("U", (1625.0, 1675.0), 8.0, 36, 2, "from-low-wavelength"),
}
POPULATION_ORDER = ("C", "L", "S", "U", "E", "O")
SPECTRAL_ORDER = ("O", "E", "S", "C", "L", "U")  # short to long wavelength


def parse_bands(text):
    """``"OESCLU"`` or an iterable of names -> tuple in population order."""
    if isinstance(text, str):
        names = list(text.upper().replace(",", "").replace("+", ""))
    else:
        names = [str(b).upper() for b in text]
    unknown = [n for n in names if n not in BANDS]
    if unknown or not names:
        raise GridError(f"unknown band(s) {unknown or text!r}; expected subset of OESCLU")
    return tuple(b for b in POPULATION_ORDER if b in names)


def _slot_edge_shift(f_edge, nm):
    """Frequency of the point ``nm`` nanometres longer in wavelength than ``f_edge``."""
    return C_NM_THZ / (C_NM_THZ / f_edge + nm)


def band_slots(spacing=CHANNEL_SPACING_THZ, guard_nm=GUARD_NM):
    """Channel centre frequencies of every fully populated band, in fill order.

    Returns a dict ``band -> array`` where element ``k`` is the ``k``-th channel
    to be added in that band.
    """
    c = BANDS["C"]
    f_lo, f_hi = c.frequency_range
    centre = np.round(0.5 * (f_lo + f_hi) / spacing) * spacing
    k = np.arange(1, c.capacity)
    offsets = np.concatenate([[0], np.where(k % 2 == 1, (k + 1) // 2, -(k // 2))])
    slots = {"C": centre + offsets * spacing}

    half = spacing / 2
    # long-wavelength chain C -> L -> U
    edge = slots["C"].min() - half
    for name in ("L", "U"):
        start = _slot_edge_shift(edge, guard_nm) - half
        slots[name] = start - np.arange(BANDS[name].capacity) * spacing
        edge = slots[name].min() - half
    # short-wavelength chain C -> S -> E -> O
    edge = slots["C"].max() + half
    for name in ("S", "E", "O"):
        start = _slot_edge_shift(edge, -guard_nm) + half
        slots[name] = start + np.arange(BANDS[name].capacity) * spacing
        edge = slots[name].max() + half
    return slots


@dataclass(frozen=True)
class ChannelGrid:
    """Channels sorted by ascending centre frequency.

    ``added_at_step[i]`` is the 0-based step at which channel ``i`` was added.
    """

    frequency: np.ndarray
    band: np.ndarray
    added_at_step: np.ndarray
    symbol_rate: float = SYMBOL_RATE_THZ
    spacing: float = CHANNEL_SPACING_THZ

    def __post_init__(self):
        f = np.array(self.frequency, dtype=float)
        b = np.array(self.band, dtype="<U1")
        s = np.array(self.added_at_step, dtype=int)
        if f.ndim != 1 or f.shape != b.shape or f.shape != s.shape:
            raise GridError("frequency/band/added_at_step must be 1-D and equally long")
        if f.size > 1 and np.any(np.diff(f) <= 0):
            raise GridError("channel frequencies must be strictly increasing")
        for a in (f, b, s):
            a.setflags(write=False)
        object.__setattr__(self, "frequency", f)
        object.__setattr__(self, "band", b)
        object.__setattr__(self, "added_at_step", s)

    def __len__(self):
        return self.frequency.size

    @property
    def wavelength(self):
        return C_NM_THZ / self.frequency

    @property
    def population_order(self):
        """Channel indices in the order they were added."""
        return np.argsort(self.added_at_step, kind="stable")

    @property
    def populated_bands(self):
        present = set(self.band.tolist())
        return tuple(b for b in SPECTRAL_ORDER if b in present)

    def band_indices(self, name):
        return np.flatnonzero(self.band == name)

    def band_counts(self):
        return {b: int(np.sum(self.band == b)) for b in SPECTRAL_ORDER}

    def noise_figures_db(self, bands=None):
        table = BANDS if bands is None else bands
        return np.array([table[b].noise_figure_db for b in self.band])

    @classmethod
    def from_frequencies(cls, freq_thz, band="C", **kw):
        """Ad-hoc grid (e.g. toy systems) with channels added in frequency order."""
        f = np.sort(np.asarray(freq_thz, dtype=float))
        return cls(f, np.full(f.size, band), np.arange(f.size), **kw)

    def to_table(self):
        """Rows ``(index, band, center_frequency_THz, wavelength_nm, added_at_step)``."""
        return [(i, str(self.band[i]), float(self.frequency[i]), float(self.wavelength[i]),
                 int(self.added_at_step[i])) for i in range(len(self))]


def capacity(bands=POPULATION_ORDER):
    return sum(BANDS[b].capacity for b in parse_bands(bands))


def build_grid(n_channels, bands=POPULATION_ORDER):
    """Populate ``n_channels`` in the standard order restricted to ``bands``."""
    order = parse_bands(bands)
    cap = sum(BANDS[b].capacity for b in order)
    if n_channels in ("full", None):
        n_channels = cap
    n_channels = int(n_channels)
    if n_channels < 1:
        raise GridError("n_channels must be >= 1")
    if n_channels > cap:
        raise GridError(f"n_channels={n_channels} exceeds capacity {cap} of bands {''.join(order)}")
    slots = band_slots()
    freqs, names = [], []
    remaining = n_channels
    for b in order:
        take = min(remaining, BANDS[b].capacity)
        freqs.append(slots[b][:take])
        names.extend([b] * take)
        remaining -= take
        if remaining == 0:
            break
    freqs = np.concatenate(freqs)
    steps = np.arange(n_channels)
    idx = np.argsort(freqs)
    return ChannelGrid(freqs[idx], np.array(names)[idx], steps[idx])


def occupied_bandwidth(grid, convention="slots"):
    """Occupied bandwidth [THz] of a grid.

    ``"slots"`` sums ``max - min + spacing`` per populated band (guards
    excluded); ``"band_edges"`` sums the nominal widths of populated bands.
    """
    if len(grid) == 0:
        raise GridError("empty grid")
    total = 0.0
    for b in grid.populated_bands:
        f = grid.frequency[grid.band == b]
        if convention == "slots":
            total += f.max() - f.min() + grid.spacing
        elif convention == "band_edges":
            total += BANDS[b].nominal_bandwidth
        else:
            raise ValueError(f"unknown convention {convention!r}")
    return float(total)


def write_grid(grid, path, header=""):
    with open(path, "w") as fh:
        if header:
            fh.write(header)
        fh.write("index,band,center_frequency_THz,wavelength_nm,added_at_step\n")
        for row in grid.to_table():
            fh.write("%d,%s,%.6f,%.6f,%d\n" % row)
