import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uwbthroughput.grid import BANDS, Band, ChannelGrid, build_grid
from uwbthroughput.noise import (NoiseBudget, NoiseError, channel_snr, compute_ase, link_budget,
                                 snr_components, write_snr)

H = 6.62607015e-34  # exact SI value


def one_channel(f=193.4):
    return ChannelGrid.from_frequencies([f], band="C")


def test_ase_arithmetic_example():
    p = compute_ase(one_channel(), [39.81], n_spans=1)[0]
    expected = H * 193.4e12 * (10 ** 0.5 * 39.81 - 1) * 148e9 * 1e3
    assert p == pytest.approx(expected, rel=1e-12)
    assert p == pytest.approx(2.37e-3, rel=2e-3)


def test_ase_linear_in_spans():
    g = build_grid(29)
    gains = np.linspace(30, 50, 29)
    assert compute_ase(g, gains, n_spans=6) == pytest.approx(6 * compute_ase(g, gains), rel=1e-15)


def test_ase_zero_for_ideal_amplifier():
    ideal = dict(BANDS)
    ideal["C"] = Band("C", (1530.0, 1565.0), 0.0, 29, 2, "center-out")
    assert compute_ase(one_channel(), [1.0], bands=ideal)[0] == 0.0


def test_ase_validation():
    with pytest.raises(NoiseError, match="gain"):
        compute_ase(one_channel(), [0.5])
    with pytest.raises(NoiseError):
        compute_ase(one_channel(), [10.0, 10.0])


def test_snr_examples():
    b = NoiseBudget([0.01], np.inf, [0.0])
    assert channel_snr([1.0], b)[0] == pytest.approx(100.0, rel=1e-14)
    b = NoiseBudget([0.0], 100.0, [0.0])
    for p in (0.01, 1.0, 50.0):
        assert channel_snr([p], b)[0] == pytest.approx(100.0, rel=1e-14)
    assert channel_snr([0.0], b)[0] == 0.0


def test_snr_optimum_against_scan():
    eta, ase = 0.01, 0.001
    b = NoiseBudget([ase], np.inf, [eta])
    grid = np.linspace(0.01, 2.0, 400001)
    snr = channel_snr(grid, NoiseBudget(np.full(grid.size, ase), np.inf, np.full(grid.size, eta)))
    scan = grid[np.argmax(snr)]
    analytic = (ase / (2 * eta)) ** (1 / 3)
    assert analytic == pytest.approx(0.368, abs=1e-3)
    assert scan == pytest.approx(analytic, abs=1e-5)
    assert channel_snr([analytic], b)[0] >= channel_snr([analytic * 1.01], b)[0]


def test_tau_applies_to_all_terms():
    b = NoiseBudget([0.01], 100.0, [0.02])
    q = 0.5 * 2.0
    direct = q / (0.02 * q ** 3 + 0.01 + q / 100.0)
    assert channel_snr([2.0], b, tau=0.5)[0] == pytest.approx(direct, rel=1e-14)
    with pytest.raises(NoiseError):
        channel_snr([1.0], b, tau=0.0)


def test_budget_validation():
    with pytest.raises(NoiseError):
        NoiseBudget([0.1], 0.0, [0.0])
    with pytest.raises(NoiseError):
        NoiseBudget([0.1, 0.2], 10.0, [0.0])


budgets = st.tuples(st.floats(1e-5, 1e-1), st.floats(1e-6, 1e-1), st.floats(1.0, 1e4))


@settings(max_examples=80, deadline=None)
@given(budgets, st.floats(1e-3, 20.0))
def test_inverse_snr_decomposes(b, p):
    ase, eta, trx = b
    budget = NoiseBudget([ase], trx, [eta])
    s = channel_snr([p], budget)[0]
    a, n, t = snr_components([p], budget)
    assert 1 / s == pytest.approx(1 / a[0] + 1 / n[0] + 1 / t[0], rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(budgets)
def test_snr_unimodal_in_power(b):
    ase, eta, trx = b
    p = np.geomspace(1e-4, 1e3, 2000)
    budget = NoiseBudget(np.full(p.size, ase), trx, np.full(p.size, eta))
    s = channel_snr(p, budget)
    d = np.sign(np.diff(s))
    d = d[d != 0]
    # at most one sign change, from rising to falling
    assert np.count_nonzero(d[1:] != d[:-1]) <= 1
    if d.size:
        assert d[-1] <= 0 or np.all(d > 0)


@settings(max_examples=30, deadline=None)
@given(st.floats(3.0, 9.0), st.floats(0.1, 3.0))
def test_snr_drops_with_noise_figure(nf, extra):
    lo, hi = dict(BANDS), dict(BANDS)
    lo["C"] = Band("C", (1530.0, 1565.0), nf, 29, 2, "center-out")
    hi["C"] = Band("C", (1530.0, 1565.0), nf + extra, 29, 2, "center-out")
    g = one_channel()
    b_lo = NoiseBudget(compute_ase(g, [40.0], lo), 100.0, [1e-4])
    b_hi = NoiseBudget(compute_ase(g, [40.0], hi), 100.0, [1e-4])
    assert channel_snr([1.0], b_hi)[0] < channel_snr([1.0], b_lo)[0]


def test_link_budget_and_dump(tmp_path, default_fibre):
    g = build_grid(5)
    p = np.full(5, 1.0)
    from uwbthroughput.nli import NliConfig
    budget, ev = link_budget(g, default_fibre, p, n_spans=2, trx_snr=100.0,
                             config=NliConfig(n_r=32))
    assert np.all(budget.p_ase > 0) and np.all(budget.eta > 0)
    assert ev.rho.shape[1] == 5
    path = tmp_path / "snr.csv"
    write_snr(g, p, budget, path, header="# test\n")
    lines = path.read_text().splitlines()
    assert lines[1] == "channel_index,frequency_THz,snr_dB,p_ase_mW,p_nli_mW"
    assert len(lines) == 7
