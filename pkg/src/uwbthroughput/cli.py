"""Command-line entry point.

``uwbthroughput [run]`` optimises one scenario and writes the channel plan,
launch powers, per-channel SNR and a summary.  ``uwbthroughput sweep`` (or
``--sweep``) runs a throughput-versus-bandwidth sweep and a saturation report.

Settings come from built-in defaults, then an optional INI file (``--config``)
whose sections mirror the package modules, then command-line flags.

Exit codes: 0 ok, 1 invalid configuration, 2 finished with a convergence
warning, 3 internal error.
"""

import argparse
import configparser
import logging
import os
import sys

import numpy as np

from . import __version__
from .constants import SPAN_LENGTH_KM, db_to_lin, dbm_to_mw
from .fibre import ProfileError, ProfileRangeError, load_profile, make_default_profile
from .grid import GridError, build_grid, occupied_bandwidth, parse_bands, write_grid
from .nli import NliConfig
from .noise import write_snr
from .optimize import OptimizerError, OptimizerOptions, optimize, write_launch_powers
from .report import (plot_channels, plot_throughput, provenance_header, write_saturation,
                     write_summary)
from .sweep import (SweepError, SweepFailed, SweepPlan, default_schedule, run_sweep,
                    saturation_report)

log = logging.getLogger("uwbthroughput")

EXIT_OK, EXIT_INVALID, EXIT_NOT_CONVERGED, EXIT_INTERNAL = 0, 1, 2, 3
OUTPUT_ROOT_ENV = "UWB_OUTPUT_ROOT"

DEFAULTS = {
    "fibre": "default",
    "raman": "",
    "bands": "OESCLU",
    "channels": "full",
    "spans": "1",
    "plim_dbm": "inf",
    "trx_snr_db": "ideal",
    "seg_mode": "formula",
    "segment_override": "",
    "bounds_dbm": "-30,10",
    "initial_dbm": "0",
    "max_outer": "10",
    "outer_tol": "1e-3",
    "pgtol": "1e-6",
    "max_inner": "500",
    "n_r": "150",
    "n_m_bar": "1.4",
    "span_length_km": str(SPAN_LENGTH_KM),
    "schedule": "default",
    "out": "",
    "workers": "1",
    "plots": "yes",
}

# INI section -> keys it may set
SECTIONS = {
    "fibre_profile": ("fibre", "raman", "span_length_km"),
    "channel_grid": ("bands", "channels"),
    "noise_budget": ("spans", "trx_snr_db"),
    "nli_engine": ("n_r", "n_m_bar"),
    "power_optimizer": ("plim_dbm", "seg_mode", "segment_override", "bounds_dbm", "initial_dbm",
                        "max_outer", "outer_tol", "pgtol", "max_inner"),
    "scenario_sweep": ("schedule",),
    "cli_reporting": ("out", "workers", "plots"),
}
# keys that do not influence results and stay out of artifact headers
NON_RESULT_KEYS = ("out", "workers", "plots")


class ConfigError(ValueError):
    pass


def build_parser():
    p = argparse.ArgumentParser(prog="uwbthroughput", description=__doc__.split("\n\n")[0])
    p.add_argument("command", nargs="?", choices=("run", "sweep"), default="run")
    p.add_argument("--config", help="INI file with module-named sections")
    p.add_argument("--fibre", help="fibre profile table or 'default'")
    p.add_argument("--raman", help="Raman gain table (delta_f_THz, gain_1_per_W_km)")
    p.add_argument("--bands", help="band letters, e.g. OESCLU or C")
    p.add_argument("--channels", help="channel count or 'full'")
    p.add_argument("--spans", help="span count (comma list for sweeps)")
    p.add_argument("--plim-dbm", dest="plim_dbm", help="total power cap in dBm or 'inf'")
    p.add_argument("--trx-snr-db", dest="trx_snr_db",
                   help="transceiver back-to-back SNR in dB or 'ideal'")
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ROOT_ENV}/<command>)")
    p.add_argument("--workers", help="worker processes for sweeps")
    p.add_argument("--sweep", action="store_true", help="same as the 'sweep' command")
    p.add_argument("--seg-mode", dest="seg_mode", choices=("formula", "table1", "per_channel"))
    p.add_argument("--accuracy", help="n_r[,n_m_bar] of the NLI quadrature")
    p.add_argument("--schedule", help="sweep channel counts: 'default', 'step:N' or a list")
    p.add_argument("--no-plots", action="store_true")
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def resolve_config(args):
    """Merge defaults, the INI file and flags into a flat ``{key: str}`` dict."""
    cfg = dict(DEFAULTS)
    if args.config:
        if not os.path.exists(args.config):
            raise ConfigError(f"config not found: {args.config}")
        ini = configparser.ConfigParser()
        ini.read(args.config)
        for section in ini.sections():
            if section not in SECTIONS:
                raise ConfigError(f"unknown config section [{section}]")
            for key, value in ini[section].items():
                if key not in SECTIONS[section]:
                    raise ConfigError(f"unknown key '{key}' in [{section}]")
                cfg[key] = value.strip()
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = str(value)
    if args.accuracy:
        parts = args.accuracy.split(",")
        cfg["n_r"] = parts[0].strip()
        if len(parts) > 1:
            cfg["n_m_bar"] = parts[1].strip()
    if args.no_plots:
        cfg["plots"] = "no"
    return cfg


def _num(text, what):
    t = text.strip().lower()
    if t in ("inf", "ideal", "none", "unconstrained"):
        return np.inf
    try:
        return float(t)
    except ValueError:
        raise ConfigError(f"invalid {what}: {text!r}") from None


def _list(text, what):
    return [_num(x, what) for x in text.split(",") if x.strip()]


def _int(text, what, minimum=None):
    try:
        v = int(text)
    except ValueError:
        raise ConfigError(f"invalid {what}: {text!r}") from None
    if minimum is not None and v < minimum:
        raise ConfigError(f"{what} must be >= {minimum}")
    return v


def options_from(cfg):
    try:
        lo, hi = (float(x) for x in cfg["bounds_dbm"].split(","))
    except ValueError:
        raise ConfigError(f"invalid bounds_dbm: {cfg['bounds_dbm']!r}") from None
    override = None
    if cfg["segment_override"]:
        override = {}
        for item in cfg["segment_override"].split(","):
            band, _, n = item.partition("=")
            override[band.strip().upper()] = _int(n, "segment override", 0)
    try:
        nli = NliConfig(n_r=_int(cfg["n_r"], "n_r", 8), n_m_bar=float(cfg["n_m_bar"]))
        return OptimizerOptions(
            segment_mode=cfg["seg_mode"], segment_override=override, bounds_dbm=(lo, hi),
            initial_dbm=float(cfg["initial_dbm"]), max_outer=_int(cfg["max_outer"], "max_outer"),
            outer_tol=float(cfg["outer_tol"]), pgtol=float(cfg["pgtol"]),
            max_inner=_int(cfg["max_inner"], "max_inner", 1),
            span_length=float(cfg["span_length_km"]), nli=nli)
    except (ValueError, OptimizerError) as exc:
        raise ConfigError(str(exc)) from None


def fibre_from(cfg):
    raman = cfg["raman"] or None
    if cfg["fibre"] in ("", "default"):
        if raman:
            raise ConfigError("a Raman table needs an explicit fibre profile")
        return make_default_profile()
    return load_profile(cfg["fibre"], raman)


def output_dir(cfg, command):
    out = cfg["out"] or os.path.join(os.environ.get(OUTPUT_ROOT_ENV, "uwb_output"), command)
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise ConfigError(f"output directory not writable: {out}")
    return out


def _header(cfg, command):
    shown = {k: v for k, v in cfg.items() if k not in NON_RESULT_KEYS}
    shown["command"] = command
    return provenance_header(shown)


def run_single(cfg):
    """Optimise one scenario and write its artifacts; returns an exit code."""
    bands = parse_bands(cfg["bands"])
    channels = cfg["channels"].strip().lower()
    grid = build_grid("full" if channels == "full" else _int(channels, "channels", 1), bands)
    spans = _int(cfg["spans"], "spans", 1)
    p_lim_dbm = _num(cfg["plim_dbm"], "plim_dbm")
    trx_db = _num(cfg["trx_snr_db"], "trx_snr_db")
    options = options_from(cfg)
    fibre = fibre_from(cfg)
    out = output_dir(cfg, "run")

    res = optimize(grid, fibre, None, spans, dbm_to_mw(p_lim_dbm), db_to_lin(trx_db), options)
    header = _header(cfg, "run")
    write_grid(grid, os.path.join(out, "grid.csv"), header)
    write_launch_powers(grid, res, os.path.join(out, "launch_power.csv"), header)
    write_snr(grid, res.powers, res.budget, os.path.join(out, "snr.csv"), res.tau, header)
    summary = [
        ("n_channels", len(grid)),
        ("bands", "".join(grid.populated_bands)),
        ("bandwidth_THz", "%.6f" % occupied_bandwidth(grid)),
        ("spans", spans),
        ("p_lim_dBm", cfg["plim_dbm"]),
        ("trx_snr_dB", cfg["trx_snr_db"]),
        ("throughput_Tbps", "%.6f" % (res.throughput / 1e12)),
        ("total_power_dBm", "%.6f" % res.total_power_dbm),
        ("tau", "%.10f" % res.tau),
        ("converged", int(res.converged)),
        ("outer_iterations", res.outer_iterations),
        ("inner_iterations", res.inner_iterations),
    ]
    write_summary(os.path.join(out, "summary.csv"), header, summary)
    if cfg["plots"].lower() in ("yes", "true", "1", "on"):
        plot_channels(os.path.join(out, "launch_power.svg"), grid.wavelength,
                      10 * np.log10(res.launch_powers), grid.band, "launch power [dBm]")
        plot_channels(os.path.join(out, "snr.svg"), grid.wavelength, 10 * np.log10(res.snr),
                      grid.band, "SNR [dB]")
    print(f"{len(grid)} channels, throughput {res.throughput / 1e12:.3f} Tb/s, "
          f"total power {res.total_power_dbm:.3f} dBm, tau = {res.tau:.6g}")
    if not res.converged:
        log.warning("power optimisation did not converge within %d outer iterations",
                    options.max_outer)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _schedule(text, bands):
    t = text.strip().lower()
    if t == "default":
        return default_schedule(bands)
    if t.startswith("step:"):
        return default_schedule(bands, _int(t[5:], "schedule step", 1))
    try:
        return [int(x) for x in t.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"invalid schedule: {text!r}") from None


def run_sweep_cmd(cfg):
    """Run a sweep, write the results table, saturation report and plot."""
    bands = "".join(parse_bands(cfg["bands"]))
    spans = [int(s) for s in _list(cfg["spans"], "spans")]
    caps = sorted(_list(cfg["plim_dbm"], "plim_dbm"))
    trx = _list(cfg["trx_snr_db"], "trx_snr_db")
    plan = SweepPlan(_schedule(cfg["schedule"], bands), spans, caps, trx, fibre_from(cfg), bands,
                     options_from(cfg))
    out = output_dir(cfg, "sweep")
    header = _header(cfg, "sweep") + "# schedule = %s\n" % " ".join(map(str, plan.schedule))
    result = run_sweep(plan, os.path.join(out, "sweep_results.csv"),
                       workers=_int(cfg["workers"], "workers", 1), header=header)
    full = plan.schedule[-1]
    sat = saturation_report(result, 0.9, full_channels=full)
    write_saturation(os.path.join(out, "saturation.csv"), header, sat)
    if cfg["plots"].lower() in ("yes", "true", "1", "on"):
        plot_throughput(os.path.join(out, "throughput.svg"), result, sat)
    for sid, (bw, mono) in sat.items():
        print(f"{sid}: 90% saturation at {bw:.3f} THz" + ("" if mono else " (non-monotone)"))
    if any(r.status != "ok" or not r.converged for r in result.records):
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    logging.getLogger("numba").setLevel(logging.WARNING)
    command = "sweep" if args.sweep else args.command
    try:
        cfg = resolve_config(args)
        if command == "sweep":
            return run_sweep_cmd(cfg)
        return run_single(cfg)
    except FileNotFoundError as exc:
        msg = exc.args[0] if exc.args and isinstance(exc.args[0], str) else str(exc)
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except SweepFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (ConfigError, GridError, ProfileError, ProfileRangeError, OptimizerError,
            SweepError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # pragma: no cover - last-resort guard
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
