import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uwbthroughput.constants import C_NM_THZ
from uwbthroughput.grid import (BANDS, ChannelGrid, GridError, build_grid, capacity,
                                occupied_bandwidth, parse_bands, write_grid)


def test_capacity_table():
    assert capacity("OESCLU") == 390
    assert {b: BANDS[b].capacity for b in BANDS} == {"O": 116, "E": 100, "S": 62, "C": 29,
                                                     "L": 47, "U": 36}


def test_c_band_full():
    g = build_grid("full", "C")
    assert len(g) == 29
    assert np.allclose(np.diff(g.frequency), 0.15)
    assert g.frequency[14] == pytest.approx(193.8)
    # centre-out fill: first channel in the middle, then alternating sides
    first = g.frequency[g.population_order[:3]]
    assert first[0] == pytest.approx(193.8)
    assert {round(first[1], 3), round(first[2], 3)} == {193.95, 193.65}


def test_population_order_bands():
    g = build_grid("full")
    order = g.band[g.population_order]
    seen = list(dict.fromkeys(order.tolist()))
    assert seen == ["C", "L", "S", "U", "E", "O"]


def test_full_grid_sorted_and_guarded():
    g = build_grid("full")
    assert len(g) == 390
    assert np.all(np.diff(g.frequency) > 0)
    half = g.spacing / 2
    for lo_band, hi_band in zip("ULCSE", "LCSEO"):
        f_lo = g.frequency[g.band == lo_band].max() + half
        f_hi = g.frequency[g.band == hi_band].min() - half
        guard_nm = C_NM_THZ / f_lo - C_NM_THZ / f_hi
        assert guard_nm == pytest.approx(5.0, abs=1e-9)


def test_bandwidths():
    assert occupied_bandwidth(build_grid("full", "C")) == pytest.approx(4.35)
    assert occupied_bandwidth(build_grid("full")) == pytest.approx(58.5)
    assert occupied_bandwidth(build_grid("full", "C"), "band_edges") == pytest.approx(4.38, abs=0.01)
    assert occupied_bandwidth(build_grid("full"), "band_edges") == pytest.approx(58.95, abs=0.01)


def test_validation():
    with pytest.raises(GridError):
        build_grid(391)
    with pytest.raises(GridError):
        build_grid(0)
    with pytest.raises(GridError):
        parse_bands("CX")


def test_partial_fill_takes_bands_in_order():
    g = build_grid(40)
    assert g.band_counts()["C"] == 29 and g.band_counts()["L"] == 11
    l_freq = g.frequency[g.band == "L"]
    # L fills from its low-wavelength (high-frequency) side, next to C
    full_l = build_grid(76).frequency[build_grid(76).band == "L"]
    assert np.allclose(np.sort(l_freq), np.sort(full_l)[-11:])


def test_write_grid(tmp_path):
    path = tmp_path / "g.csv"
    write_grid(build_grid(5), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "index,band,center_frequency_THz,wavelength_nm,added_at_step"
    assert len(lines) == 6


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=1, max_value=389))
def test_growth_is_nested(n):
    """Adding a channel keeps all previous channels in place."""
    a, b = build_grid(n), build_grid(n + 1)
    assert np.all(np.isin(np.round(a.frequency, 9), np.round(b.frequency, 9)))
    assert len(b) == len(a) + 1
    assert np.all(np.diff(b.frequency) > 0)


def test_every_channel_inside_nominal_band():
    """Literal band-range invariant.

    Cannot hold together with the 5 nm guards and the per-band counts; see
    ``test_guards_and_counts_do_not_fit_nominal_window``.  Left as is.
    """
    g = build_grid("full")
    for b in BANDS:
        wl = g.wavelength[g.band == b]
        lo, hi = BANDS[b].wavelength_range
        assert np.all((wl >= lo) & (wl <= hi)), f"{b}: {wl.min():.2f}-{wl.max():.2f} nm"


def test_guards_and_counts_do_not_fit_nominal_window():
    """Occupied slots plus five 5 nm guards exceed the 1260-1675 nm window."""
    window = C_NM_THZ / 1260.0 - C_NM_THZ / 1675.0
    slots = 390 * 0.15
    boundaries = [1360.0, 1460.0, 1530.0, 1565.0, 1625.0]
    guards = sum(C_NM_THZ / (wl - 2.5) - C_NM_THZ / (wl + 2.5) for wl in boundaries)
    assert slots + guards > window


def test_inner_bands_inside_nominal_ranges():
    g = build_grid("full")
    for b in "SCL":
        wl = g.wavelength[g.band == b]
        lo, hi = BANDS[b].wavelength_range
        assert np.all((wl > lo - 10) & (wl < hi + 10))
    assert g.wavelength.min() > 1250 and g.wavelength.max() < 1690


def test_single_channel_and_bandwidth():
    g = build_grid(1)
    assert g.frequency[0] == pytest.approx(193.8)
    assert occupied_bandwidth(g) == pytest.approx(0.15)
    assert [len(build_grid("full").band_indices(b)) for b in "OESCLU"] == [116, 100, 62, 29, 47, 36]
    with pytest.raises(GridError, match="capacity 390"):
        build_grid(400)


def test_from_frequencies():
    g = ChannelGrid.from_frequencies([193.3, 193.0, 193.15])
    assert np.allclose(g.frequency, [193.0, 193.15, 193.3])
