import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from oracles import brute_force_strips, closed_form_spm_eta, link_power_exp
from uwbthroughput.fibre import make_uniform_profile, query
from uwbthroughput.grid import ChannelGrid
from uwbthroughput.isrs import PowerEvolution, solve_span
from uwbthroughput.nli import (NliConfig, NliError, compute_nli, link_tables, nli_dip_locator,
                               write_eta)

SPAN = 80.0
FS = 0.148


def toy(n, powers=None, fibre=None, start=193.0):
    fibre = fibre or make_uniform_profile()
    f = start + 0.15 * np.arange(n)
    grid = ChannelGrid.from_frequencies(f)
    p = np.linspace(0.5, 2.0, n) if powers is None else np.asarray(powers, float)
    ev = solve_span(grid, p, fibre, SPAN)
    return grid, p, fibre, ev


def brute_eta(grid, p, fibre, n_coarse):
    par = fibre.at_frequency(grid.frequency)
    g = brute_force_strips(grid.frequency, p, FS, float(par.alpha[0]), par.beta2, par.beta3,
                           par.gamma, SPAN, n_coarse=n_coarse)
    return g * FS / p ** 3


@pytest.mark.parametrize("n", [3, 9])
def test_engine_vs_brute_force(n):
    grid, p, fibre, ev = toy(n)
    eta = compute_nli(grid, p, fibre, ev).eta
    ref = brute_eta(grid, p, fibre, n_coarse=4 * 150)
    assert np.max(np.abs(eta / ref - 1)) <= 0.01


def test_engine_vs_brute_force_with_beta3():
    """Near-zero beta2 with strong beta3: exercises the curvature-corrected v-integral."""
    wl = np.arange(1250.0, 1691.0)
    base = make_uniform_profile(beta2_ps2_km=-0.5)
    # build D so that beta2 = -0.5 and beta3 = 0.1 at 193 THz (linear in frequency)
    from uwbthroughput.constants import C_NM_THZ
    from uwbthroughput.fibre import FibreProfile
    f = C_NM_THZ / wl
    b2 = -0.5 + 0.1 * 2 * np.pi * (f - 193.0)
    d = -2 * np.pi * C_NM_THZ * b2 / wl ** 2
    fib = FibreProfile(wl, base.attenuation_db_km, d, base.aeff_um2, base.gamma_per_w_km,
                       base.raman_shift_thz, base.raman_gain_per_w_km, 80.0)
    grid, p, fib, ev = toy(3, fibre=fib)
    assert query(fib, C_NM_THZ / 193.0).beta3 == pytest.approx(0.1, rel=0.02)
    eta = compute_nli(grid, p, fib, ev).eta
    ref = brute_eta(grid, p, fib, n_coarse=600)
    assert np.max(np.abs(eta / ref - 1)) <= 0.01


def test_single_channel_near_closed_form():
    grid, p, fibre, ev = toy(1, [1.0])
    eta = compute_nli(grid, p, fibre, ev).eta[0]
    par = query(fibre, 1550.0)
    cf = closed_form_spm_eta(float(par.gamma), float(par.alpha), -21.0, SPAN, FS)
    # the closed form drops the finite-span and channel-edge terms; a few percent apart
    assert eta == pytest.approx(cf, rel=0.06)


def test_n_r_convergence_is_monotone():
    grid, p, fibre, ev = toy(9)
    etas = [compute_nli(grid, p, fibre, ev, config=NliConfig(n_r=n)).eta for n in (32, 64, 150, 300)]
    steps = [np.abs(b / a - 1) for a, b in zip(etas, etas[1:])]
    assert np.all(steps[0] > steps[1]) and np.all(steps[1] > steps[2])
    assert np.max(steps[2]) < 1e-4


def test_gamma_scaling():
    grid, p, fibre, ev = toy(5)
    eta = compute_nli(grid, p, fibre, ev).eta
    eta2 = compute_nli(grid, p, fibre.with_gamma_scaled(2.0), ev).eta
    assert eta2 == pytest.approx(4 * eta, rel=1e-12)


def test_spans_add_incoherently():
    grid, p, fibre, ev = toy(3)
    one = compute_nli(grid, p, fibre, ev, n_spans=1).eta
    six = compute_nli(grid, p, fibre, ev, n_spans=6).eta
    assert six == pytest.approx(6 * one, rel=1e-14)


def test_flat_spectrum_symmetry():
    grid, p, fibre, ev = toy(7, np.ones(7))
    eta = compute_nli(grid, p, fibre, ev).eta
    # mirror symmetry holds up to the finite-difference beta3 residual of the profile
    assert abs(query(fibre, 1550.0).beta3) < 1e-5
    assert eta == pytest.approx(eta[::-1], rel=1e-6)
    assert eta[3] == eta.max()


def test_zero_power_channel_has_infinite_eta():
    grid, p, fibre, ev = toy(3, [1.0, 0.0, 1.0])
    res = compute_nli(grid, p, fibre, ev)
    assert np.isinf(res.eta[1]) and np.all(np.isfinite(res.eta[[0, 2]]))


def test_validation():
    grid, p, fibre, ev = toy(3)
    with pytest.raises(NliError):
        compute_nli(grid, p[:2], fibre, ev)
    with pytest.raises(NliError):
        compute_nli(grid, 2 * p, fibre, ev)
    with pytest.raises(ValueError):
        NliConfig(n_r=4)
    with pytest.raises(NotImplementedError):
        NliConfig(coherent=True)


def test_link_tables_against_closed_form():
    alpha = 0.2 * np.log(10) / 10
    z = np.linspace(0, SPAN, 1121)
    amp = np.exp(-alpha * z)[None, :]  # sqrt(rho rho rho / rho) = rho for flat loss
    tab = link_tables(amp, z)
    psi = np.arange(tab.K.shape[1]) * tab.dpsi
    exact = link_power_exp(psi, alpha, SPAN)
    assert np.max(np.abs(tab.K[0] / exact - 1)) < 1e-5
    # Parseval: the integral of |L|^2 over all phases is pi * int a^2 dz
    assert tab.q_inf()[0] == pytest.approx(np.pi * tab.R0[0], rel=1e-4)


def test_link_tables_against_quadrature_for_arbitrary_profile():
    def amp(x):
        return np.exp(-0.02 * x) * (1 + 0.3 * np.sin(x / 9.0))

    z = np.linspace(0, SPAN, 1121)
    tab = link_tables(amp(z)[None, :], z)
    for k in (0, 7, 40, 333):
        phi = k * tab.dpsi
        re = quad(amp, 0, SPAN, weight="cos", wvar=phi, limit=200)[0]
        im = quad(amp, 0, SPAN, weight="sin", wvar=phi, limit=200)[0]
        # tables integrate the piecewise-linear interpolant of the samples
        assert tab.K[0, k] == pytest.approx(re * re + im * im, rel=1e-5, abs=1e-8)


def test_dip_locator_and_dump(tmp_path):
    grid, p, fibre, ev = toy(3)
    res = compute_nli(grid, p, fibre, ev)
    with pytest.raises(NliError):
        nli_dip_locator(res, grid)
    path = tmp_path / "eta.csv"
    write_eta(res, path)
    assert path.read_text().splitlines()[0] == "channel_index,frequency_THz,eta_per_mW2"


@settings(max_examples=10, deadline=None)
@given(st.floats(min_value=0.1, max_value=10.0))
def test_power_scale_invariance_without_isrs(scale):
    """Without ISRS, eta depends only on relative powers."""
    grid, p, fibre, ev = toy(4, [1.0, 2.0, 0.5, 1.5])
    ev2 = PowerEvolution(ev.z_grid, ev.rho, ev.launch_powers * scale, ev.frequency, ev.alpha)
    eta1 = compute_nli(grid, p, fibre, ev).eta
    eta2 = compute_nli(grid, p * scale, fibre, ev2).eta
    assert eta2 == pytest.approx(eta1, rel=1e-10)
