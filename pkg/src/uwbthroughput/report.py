"""Artifact headers, summary tables and optional vector plots.

Every data file starts with ``#``-prefixed lines holding the package version
and the fully resolved configuration, so a table can be traced back to the
run that produced it.  Plots are conveniences: any plotting failure is
logged and swallowed.
"""

import logging
import os

import numpy as np

from . import __version__

log = logging.getLogger(__name__)

ARTIFACT_VERSION = f"uwbthroughput {__version__}"


def provenance_header(config):
    """``#`` comment block with the version string and sorted ``key = value`` pairs."""
    lines = [f"# {ARTIFACT_VERSION}"]
    for key in sorted(config):
        lines.append(f"# {key} = {config[key]}")
    return "\n".join(lines) + "\n"


def write_summary(path, header, items):
    with open(path, "w") as fh:
        fh.write(header)
        fh.write("key,value\n")
        for k, v in items:
            fh.write(f"{k},{v}\n")


def write_saturation(path, header, report):
    with open(path, "w") as fh:
        fh.write(header)
        fh.write("scenario_id,saturation_bandwidth_THz,monotone\n")
        for sid, (bw, mono) in report.items():
            fh.write("%s,%.6f,%d\n" % (sid, bw, mono))


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path):
    # fixed metadata keeps the SVG free of timestamps
    fig.savefig(path, format="svg", metadata={"Date": None})


def plot_channels(path, wavelength, values, bands, ylabel):
    """Per-channel quantity versus wavelength, coloured by band."""
    try:
        plt = _pyplot()
        fig, ax = plt.subplots(figsize=(7, 3.5))
        for b in dict.fromkeys(bands):
            sel = np.asarray(bands) == b
            ax.plot(np.asarray(wavelength)[sel], np.asarray(values)[sel], ".", ms=3, label=b)
        ax.set_xlabel("wavelength [nm]")
        ax.set_ylabel(ylabel)
        ax.grid(alpha=0.3)
        ax.legend(fontsize=7, ncol=6)
        fig.tight_layout()
        _save(fig, path)
        plt.close(fig)
        return True
    except Exception as exc:  # plots never fail a run
        log.warning("plot %s skipped: %s", os.path.basename(path), exc)
        return False


def plot_throughput(path, result, saturation=None):
    """Throughput versus occupied bandwidth, one line per scenario."""
    try:
        plt = _pyplot()
        fig, ax = plt.subplots(figsize=(7, 4))
        for sid in result.scenario_ids():
            recs = result.curve(sid)
            if not recs:
                continue
            line, = ax.plot([r.bandwidth_thz for r in recs], [r.throughput_tbps for r in recs],
                            "-o", ms=2, label=sid)
            if saturation and sid in saturation:
                ax.axvline(saturation[sid][0], color=line.get_color(), ls=":", lw=0.8)
        ax.set_xlabel("occupied bandwidth [THz]")
        ax.set_ylabel("throughput [Tb/s]")
        ax.grid(alpha=0.3)
        ax.legend(fontsize=6)
        fig.tight_layout()
        _save(fig, path)
        plt.close(fig)
        return True
    except Exception as exc:
        log.warning("plot %s skipped: %s", os.path.basename(path), exc)
        return False
