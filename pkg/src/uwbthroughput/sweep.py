"""Throughput versus occupied bandwidth as channels are added band by band.

A sweep is a set of curves, one per (spans, power cap, transceiver) scenario,
each evaluated on a schedule of channel counts.  Points along a curve are
warm-started from the previous optimum, so a curve runs sequentially while
distinct curves may run in parallel worker processes.  Completed points are
persisted after every step and skipped when the sweep is rerun.
"""

import hashlib
import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .constants import db_to_lin, dbm_to_mw, mw_to_dbm
from .grid import (BANDS, POPULATION_ORDER, SPECTRAL_ORDER, build_grid, capacity,
                   occupied_bandwidth, parse_bands)
from .optimize import OptimizerOptions, optimize

log = logging.getLogger(__name__)

RESULT_COLUMNS = ("scenario_id", "n_channels", "bandwidth_THz", "spans", "p_lim_dBm",
                  "trx_snr_dB", "throughput_Tbps", "total_power_dBm", "tau", "converged")
EXTRA_COLUMNS = ("point_index", "key", "status") + tuple(f"{b}_Tbps" for b in SPECTRAL_ORDER)


class SweepError(RuntimeError):
    pass


class SweepFailed(SweepError):
    """Raised when not a single point of a sweep could be evaluated."""


def default_schedule(bands=POPULATION_ORDER, step=10):
    """Every ``step`` channels plus the point where each band is complete."""
    order = parse_bands(bands)
    cap = capacity(order)
    ends = np.cumsum([BANDS[b].capacity for b in order])
    pts = set(range(step, cap + 1, step)) | set(int(e) for e in ends)
    return sorted(pts)


def _fmt_db(x):
    return "inf" if np.isinf(x) else f"{x:g}"


@dataclass(frozen=True)
class Scenario:
    spans: int
    p_lim_dbm: float  # inf for no cap
    trx_snr_db: float  # inf for an ideal transceiver

    @property
    def scenario_id(self):
        trx = "ideal" if np.isinf(self.trx_snr_db) else f"trx{_fmt_db(self.trx_snr_db)}dB"
        return f"{self.spans}span_{_fmt_db(self.p_lim_dbm)}dBm_{trx}"


@dataclass(frozen=True)
class SweepPlan:
    schedule: Sequence[int]
    spans: Sequence[int] = (1, 6)
    caps_dbm: Sequence[float] = (15.0, 20.0, 25.0, np.inf)
    trx_snr_db: Sequence[float] = (np.inf, 20.0)
    fibre: object = None
    bands: str = "OESCLU"
    options: OptimizerOptions = field(default_factory=OptimizerOptions)

    def __post_init__(self):
        sched = [int(n) for n in self.schedule]
        if not sched:
            raise SweepError("empty channel-count schedule")
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise SweepError("schedule must be strictly increasing")
        if sched[0] < 1 or sched[-1] > capacity(self.bands):
            raise SweepError(f"schedule must lie in [1, {capacity(self.bands)}]")
        caps = [float(c) for c in self.caps_dbm]
        if not caps or any(b <= a for a, b in zip(caps, caps[1:])):
            raise SweepError("power caps must be strictly increasing")
        if any(np.isinf(c) for c in caps[:-1]):
            raise SweepError("an unconstrained cap may only appear last")
        if not self.spans or min(self.spans) < 1:
            raise SweepError("span counts must be >= 1")
        object.__setattr__(self, "schedule", tuple(sched))
        object.__setattr__(self, "caps_dbm", tuple(caps))
        object.__setattr__(self, "spans", tuple(int(s) for s in self.spans))
        object.__setattr__(self, "trx_snr_db", tuple(float(t) for t in self.trx_snr_db))

    def scenarios(self):
        return [Scenario(s, c, t) for s in self.spans for t in self.trx_snr_db
                for c in self.caps_dbm]

    def fingerprint(self):
        """Configuration digest shared by every point of the sweep."""
        opts = asdict(self.options)
        fib = self.fibre
        fib_digest = None
        if fib is not None:
            h = hashlib.sha1()
            for name in ("wavelength_nm", "attenuation_db_km", "dispersion_ps_nm_km", "aeff_um2",
                         "gamma_per_w_km", "raman_shift_thz", "raman_gain_per_w_km"):
                h.update(np.ascontiguousarray(getattr(fib, name)).tobytes())
            fib_digest = h.hexdigest()
        payload = json.dumps({"bands": self.bands, "options": opts, "fibre": fib_digest},
                             sort_keys=True, default=str)
        return hashlib.sha1(payload.encode()).hexdigest()


def point_key(fingerprint, scenario, n_channels):
    payload = f"{fingerprint}|{scenario.scenario_id}|{n_channels}"
    return hashlib.sha1(payload.encode()).hexdigest()[:16]


@dataclass
class SweepRecord:
    point_index: int
    key: str
    scenario_id: str
    n_channels: int
    bandwidth_thz: float
    spans: int
    p_lim_dbm: float
    trx_snr_db: float
    throughput_tbps: float
    total_power_dbm: float
    tau: float
    converged: bool
    band_tbps: dict
    status: str = "ok"
    launch_power_dbm: Optional[list] = None
    snr_db: Optional[list] = None
    completed_at: float = 0.0

    def row(self):
        vals = [self.scenario_id, "%d" % self.n_channels, "%.6f" % self.bandwidth_thz,
                "%d" % self.spans, _fmt_db(self.p_lim_dbm), _fmt_db(self.trx_snr_db),
                "%.6f" % self.throughput_tbps, "%.6f" % self.total_power_dbm, "%.10f" % self.tau,
                "%d" % self.converged, "%d" % self.point_index, self.key, self.status]
        vals += ["%.6f" % self.band_tbps.get(b, 0.0) for b in SPECTRAL_ORDER]
        return ",".join(vals)


@dataclass
class SweepResult:
    records: list
    plan: Optional[SweepPlan] = None

    def curve(self, scenario_id):
        recs = [r for r in self.records if r.scenario_id == scenario_id and r.status == "ok"]
        return sorted(recs, key=lambda r: r.n_channels)

    def scenario_ids(self):
        seen = []
        for r in sorted(self.records, key=lambda r: r.point_index):
            if r.scenario_id not in seen:
                seen.append(r.scenario_id)
        return seen


def saturation_bandwidth(bandwidth, throughput, fraction=0.9):
    """Smallest bandwidth reaching ``fraction`` of the last (full-band) throughput.

    Linear interpolation between schedule points.  Returns
    ``(bandwidth, monotone)``; for a non-monotone curve the first crossing is
    used and ``monotone`` is False.
    """
    b = np.asarray(bandwidth, dtype=float)
    c = np.asarray(throughput, dtype=float)
    if b.size == 0 or b.shape != c.shape:
        raise SweepError("need matching, non-empty bandwidth and throughput arrays")
    monotone = bool(np.all(np.diff(c) >= 0))
    target = fraction * c[-1]
    k = int(np.argmax(c >= target))
    if k == 0:
        return float(b[0]), monotone
    t = (target - c[k - 1]) / (c[k] - c[k - 1])
    return float(b[k - 1] + t * (b[k] - b[k - 1])), monotone


def saturation_report(result, fraction=0.9, full_channels=None):
    """``{scenario_id: (bandwidth_THz, monotone)}`` for curves ending at full band."""
    out = {}
    for sid in result.scenario_ids():
        recs = result.curve(sid)
        if not recs:
            continue
        if full_channels is not None and recs[-1].n_channels != full_channels:
            log.warning("%s has no full-band endpoint; skipped", sid)
            continue
        out[sid] = saturation_bandwidth([r.bandwidth_thz for r in recs],
                                        [r.throughput_tbps for r in recs], fraction)
    return out


# -- execution ----------------------------------------------------------------------

def _extend_powers(prev_grid, prev_dbm, grid):
    """Carry known channel powers over; new channels take the nearest known power."""
    known = dict(zip(np.round(prev_grid.frequency, 6), prev_dbm))
    f_prev = prev_grid.frequency
    out = np.empty(len(grid))
    for i, f in enumerate(grid.frequency):
        key = round(float(f), 6)
        out[i] = known[key] if key in known else prev_dbm[int(np.argmin(np.abs(f_prev - f)))]
    return out


def _run_curve(plan, scenario, index_of, done):
    """Evaluate one scenario along the schedule; yields records as they complete."""
    fp = plan.fingerprint()
    prev = None  # (grid, per-channel pre-tau dBm)
    p_lim = dbm_to_mw(scenario.p_lim_dbm)
    trx = db_to_lin(scenario.trx_snr_db)
    for n in plan.schedule:
        key = point_key(fp, scenario, n)
        grid = build_grid(n, plan.bands)
        if key in done and done[key].status == "ok" and done[key].launch_power_dbm is not None:
            rec = done[key]
            pre_tau = np.asarray(rec.launch_power_dbm) - mw_to_dbm(rec.tau)
            prev = (grid, pre_tau)
            continue
        initial = None if prev is None else _extend_powers(prev[0], prev[1], grid)
        bw = occupied_bandwidth(grid)
        try:
            res = optimize(grid, plan.fibre, None, scenario.spans, p_lim, trx, plan.options,
                           initial=initial)
        except Exception as exc:  # recorded, the sweep carries on
            log.error("%s n=%d failed: %s", scenario.scenario_id, n, exc)
            prev = None
            yield SweepRecord(index_of[(scenario.scenario_id, n)], key, scenario.scenario_id, n,
                              bw, scenario.spans, scenario.p_lim_dbm, scenario.trx_snr_db,
                              float("nan"), float("nan"), float("nan"), False, {},
                              status="failed: " + str(exc).replace(",", ";").replace("\n", " "),
                              completed_at=time.time())
            continue
        bits = np.log2(1.0 + res.snr) * 2 * grid.symbol_rate  # Tbps per channel
        band_tbps = {b: float(bits[grid.band == b].sum()) for b in grid.populated_bands}
        launch = mw_to_dbm(res.launch_powers)
        prev = (grid, mw_to_dbm(res.powers))
        yield SweepRecord(index_of[(scenario.scenario_id, n)], key, scenario.scenario_id, n, bw,
                          scenario.spans, scenario.p_lim_dbm, scenario.trx_snr_db,
                          res.throughput / 1e12, res.total_power_dbm, res.tau, res.converged,
                          band_tbps, launch_power_dbm=[float(x) for x in launch],
                          snr_db=[float(x) for x in 10 * np.log10(res.snr)],
                          completed_at=time.time())


def _curve_job(plan, scenario, index_of, done):
    return list(_run_curve(plan, scenario, index_of, done))


def _record_from_json(d):
    return SweepRecord(**d)


def load_state(state_path):
    """Previously completed records keyed by point key."""
    if not state_path or not os.path.exists(state_path):
        return {}
    out = {}
    with open(state_path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                rec = _record_from_json(json.loads(line))
                out[rec.key] = rec
    return out


class _Writer:
    """Single serialised writer for the results table and the state log."""

    def __init__(self, results_path, state_path, header):
        self.results_path = results_path
        self.state_path = state_path
        self.header = header
        self.records = {}

    def add(self, rec, persist_state=True):
        self.records[rec.point_index] = rec
        if persist_state and self.state_path:
            with open(self.state_path, "a") as fh:
                fh.write(json.dumps(asdict(rec)) + "\n")
        self.flush()

    def flush(self):
        if not self.results_path:
            return
        tmp = self.results_path + ".tmp"
        with open(tmp, "w") as fh:
            fh.write(self.header)
            fh.write(",".join(RESULT_COLUMNS + EXTRA_COLUMNS) + "\n")
            for idx in sorted(self.records):
                fh.write(self.records[idx].row() + "\n")
        os.replace(tmp, self.results_path)


def run_sweep(plan, results_path=None, state_path=None, workers=1, header=""):
    """Run every (scenario, channel count) point of ``plan``.

    With ``results_path`` the delimited results table is rewritten after each
    completed point (ordered by point index); ``state_path`` (defaults to
    ``results_path + '.state.jsonl'``) keeps full records so a rerun skips
    finished points.
    """
    if plan.fibre is None:
        raise SweepError("plan has no fibre profile")
    if results_path and state_path is None:
        state_path = results_path + ".state.jsonl"
    scenarios = plan.scenarios()
    index_of = {}
    for s in scenarios:
        for n in plan.schedule:
            index_of[(s.scenario_id, n)] = len(index_of)
    done = load_state(state_path)
    writer = _Writer(results_path, state_path, header)
    fp = plan.fingerprint()
    for s in scenarios:
        for n in plan.schedule:
            rec = done.get(point_key(fp, s, n))
            if rec is not None and rec.status == "ok":
                rec.point_index = index_of[(s.scenario_id, n)]
                writer.add(rec, persist_state=False)

    pending = [s for s in scenarios
               if any(point_key(fp, s, n) not in done or done[point_key(fp, s, n)].status != "ok"
                      for n in plan.schedule)]
    if workers <= 1 or len(pending) <= 1:
        for s in pending:
            for rec in _run_curve(plan, s, index_of, done):
                writer.add(rec)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_curve_job, plan, s, index_of, done) for s in pending]
            for fut in as_completed(futures):
                for rec in fut.result():
                    writer.add(rec)
    records = [writer.records[i] for i in sorted(writer.records)]
    if records and all(r.status != "ok" for r in records):
        raise SweepFailed("every sweep point failed")
    return SweepResult(records, plan)
