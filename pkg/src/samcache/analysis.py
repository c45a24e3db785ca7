#
# Copyright (c) 2025 samcache developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in
# all copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN
# THE SOFTWARE.
#
"""post-run analytics over run traces

Every function here is a pure function of a RunTrace (plus, where the
metric needs it, ground truth like curves or an oracle plan), so analyses
never re-run a simulation.

Traces are CSV files, one row per cycle, preceded by '# ' comment lines
holding the run metadata as TOML.
"""

import dataclasses
import io
import itertools
import logging
import math

import numpy as np
import pandas as pd
import scipy.stats
import tomlkit

from .domain import AllocationPlan, apportion_fixed_pool, effective_lower_bounds
from .exceptions import AnalysisError, TraceSchemaError

log = logging.getLogger(__name__)

TRACE_SCHEMA = 1

CYCLE_COLUMNS = [
    "cycle",
    "utility",
    "latency",
    "duration",
    "global_scan",
    "active_size",
    "touched",
    "heap_ops",
    "alpha",
    "violations",
]
TENANT_PREFIXES = ("pages", "ops", "hr", "true_hr")


def tenant_columns(n_tenants, prefixes=TENANT_PREFIXES):
    return [f"{prefix}_{t}" for prefix in prefixes for t in range(n_tenants)]


@dataclasses.dataclass
class RunTrace:
    """per-cycle records of one run plus its metadata

    meta holds at least schema, policy, scenario, seed, n_tenants,
    total_pages, boundaries and fixed_shares
    """

    meta: dict
    frame: pd.DataFrame

    def __post_init__(self):
        if len(self.frame) and not self.frame["cycle"].is_monotonic_increasing:
            raise AnalysisError("trace cycles must be strictly increasing")
        if self.frame["cycle"].duplicated().any():
            raise AnalysisError("trace has more than one record for a cycle")

    def __len__(self):
        return len(self.frame)

    @property
    def n_tenants(self) -> int:
        return int(self.meta["n_tenants"])

    def column(self, name):
        try:
            return self.frame[name].to_numpy(dtype=float)
        except KeyError as exc:
            raise AnalysisError(f"trace has no '{name}' column") from exc

    def tenant_matrix(self, prefix):
        """(cycles, tenants) array of one per-tenant quantity"""
        columns = [f"{prefix}_{t}" for t in range(self.n_tenants)]
        missing = [c for c in columns if c not in self.frame.columns]
        if missing:
            raise AnalysisError(f"trace has no '{prefix}' columns")
        return self.frame[columns].to_numpy(dtype=float)

    @property
    def utility(self):
        return self.column("utility")

    @property
    def pages(self):
        return self.tenant_matrix("pages")

    def plan_at(self, row):
        return AllocationPlan(self.pages[row].astype(int))

    def phase_rows(self):
        """row ranges of the phases the trace covers"""
        starts = [int(b) for b in self.meta.get("boundaries", [0])]
        ends = starts[1:] + [math.inf]
        ranges = []
        for start, end in zip(starts, ends, strict=True):
            stop = int(min(end, len(self)))
            if start < stop:
                ranges.append(range(start, stop))
        return ranges

    def steady_rows(self, fraction=0.5):
        """the trailing fraction of every phase"""
        return [
            rows[int(math.floor(len(rows) * (1.0 - fraction))) :]
            for rows in self.phase_rows()
        ]


#
# trace files
#
def write_trace_header(meta, fobj):
    text = tomlkit.dumps(_plain(meta))
    for line in text.splitlines():
        fobj.write(f"# {line}\n" if line else "#\n")


def write_trace(trace, fobj):
    write_trace_header(trace.meta, fobj)
    trace.frame.to_csv(fobj, index=False)


def read_trace(fobj):
    """load a trace, refusing any other schema version"""
    header = []
    body = []
    for line in fobj:
        if line.startswith("#"):
            header.append(line[2:] if line.startswith("# ") else line[1:])
        else:
            body.append(line)
    meta = tomlkit.loads("".join(header)).unwrap()
    schema = meta.get("schema")
    if schema != TRACE_SCHEMA:
        raise TraceSchemaError(
            f"trace schema is {schema}, this version reads schema {TRACE_SCHEMA}"
        )
    frame = pd.read_csv(io.StringIO("".join(body)))
    return RunTrace(meta, frame)


def _plain(value):
    """numpy scalars and tuples as plain python for tomlkit"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items() if v is not None}
    if isinstance(value, list | tuple | np.ndarray):
        return [_plain(v) for v in value]
    if isinstance(value, np.generic):
        return value.item()
    return value


#
# regret and slopes
#
@dataclasses.dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    stderr: float
    r2: float
    points: int


def _linregress(x, y):
    if len(x) < 3:
        raise AnalysisError("need at least three points to fit a line")
    result = scipy.stats.linregress(x, y)
    return LineFit(
        float(result.slope),
        float(result.intercept),
        float(result.stderr),
        float(result.rvalue**2),
        len(x),
    )


def utility_of(pages, ops, curves):
    """sum of ops times ground-truth hit rate for every row"""
    pages = np.atleast_2d(pages)
    rates = np.column_stack(
        [curve.evaluate(pages[:, t]) for t, curve in enumerate(curves)]
    )
    return (np.atleast_2d(ops) * rates).sum(axis=1)


def regret_series(trace, oracle, curves):
    """cumulative utility shortfall against the oracle, per cycle

    oracle is one AllocationPlan for the whole run, or a sequence with one
    plan per phase. Both sides are scored with the observed ops and the
    ground-truth curves.
    """
    ops = trace.tenant_matrix("ops")
    if isinstance(oracle, AllocationPlan):
        plans = np.tile(oracle.as_array(), (len(trace), 1))
    else:
        plans = np.zeros((len(trace), trace.n_tenants))
        for phase, rows in enumerate(trace.phase_rows()):
            plans[rows.start : rows.stop] = oracle[phase].as_array()
    gap = utility_of(plans, ops, curves) - utility_of(trace.pages, ops, curves)
    return np.cumsum(gap)


def loglog_slope(series, window=0.5):
    """slope of log(series) against log(t) over the trailing window

    t counts from 1. When the window holds non-positive values it is
    shrunk to start after the last of them.
    """
    values = np.asarray(series, dtype=float)
    start = int(math.floor(values.size * (1.0 - window)))
    tail = values[start:]
    bad = np.flatnonzero(tail <= 0)
    if bad.size:
        log.warning(
            "%d non-positive values in the slope window, shrinking it", bad.size
        )
        start += int(bad[-1]) + 1
    t = np.arange(start + 1, values.size + 1, dtype=float)
    return _linregress(np.log(t), np.log(values[start:]))


#
# jitter
#
@dataclasses.dataclass(frozen=True)
class Jitter:
    deltas: np.ndarray
    cumulative: np.ndarray
    sigma: float


def jitter_series(trace):
    """L1 movement between consecutive plans

    deltas[i] is the movement into row i + 1. sigma is the standard
    deviation of the movements inside the steady-state windows.
    """
    if len(trace) < 2:
        raise AnalysisError("jitter needs at least two cycles")
    deltas = np.abs(np.diff(trace.pages, axis=0)).sum(axis=1)
    steady = [row - 1 for rows in trace.steady_rows() for row in rows if row >= 1]
    sigma = float(np.std(deltas[steady])) if steady else 0.0
    return Jitter(deltas, np.cumsum(deltas), sigma)


def inverse_decay_fit(deltas, warmup=0):
    """fit deltas against 1/t after warmup, t counting from 1"""
    deltas = np.asarray(deltas, dtype=float)
    t = np.arange(1, deltas.size + 1, dtype=float)
    keep = t > warmup
    return _linregress(1.0 / t[keep], deltas[keep])


def log_variation_fit(deltas, warmup=0):
    """fit the cumulative variation against log t after warmup"""
    deltas = np.asarray(deltas, dtype=float)
    t = np.arange(1, deltas.size + 1, dtype=float)
    keep = t > warmup
    return _linregress(np.log(t[keep]), np.cumsum(deltas)[keep])


#
# stability and adaptation
#
def stability_sigma_tps(trace, window=50):
    """mean rolling standard deviation of utility in each phase's steady state"""
    utility = trace.utility
    sigmas = []
    for rows in trace.steady_rows():
        if window > len(rows):
            raise AnalysisError(
                f"window of {window} cycles is longer than the steady state"
                f" ({len(rows)} cycles)"
            )
        rolling = pd.Series(utility[rows.start : rows.stop]).rolling(window).std(ddof=0)
        sigmas.append(float(rolling.dropna().mean()))
    return sigmas


@dataclasses.dataclass(frozen=True)
class Lag:
    cycles: int
    censored: bool


def adaptation_lag(trace, boundary, target_utility, threshold=0.95, sustain=5):
    """cycles from boundary until utility holds threshold * target

    the utility has to stay there for sustain cycles. A run that never gets
    there reports the cycles to the end of the phase, censored.
    """
    rows = next((r for r in trace.phase_rows() if r.start == boundary), None)
    if rows is None:
        raise AnalysisError(f"cycle {boundary} is not a phase boundary of this trace")
    utility = trace.utility[rows.start : rows.stop]
    good = utility >= threshold * target_utility
    run = 0
    for offset, ok in enumerate(good):
        run = run + 1 if ok else 0
        if run >= sustain or (ok and offset == len(good) - 1):
            return Lag(offset - run + 1, False)
    return Lag(len(utility), True)


#
# decision cost
#
@dataclasses.dataclass(frozen=True)
class CostReport:
    mean_duration: float
    p95_duration: float
    scan_fraction: float
    steady_scan_fraction: float
    fast_path_fraction: float
    mean_touched: float
    p95_touched: float
    touched_histogram: dict


def amortized_cost(trace):
    if not len(trace):
        raise AnalysisError("empty trace")
    duration = trace.column("duration")
    scans = trace.column("global_scan")
    touched = trace.column("touched")
    steady = [row for rows in trace.steady_rows() for row in rows]
    values, counts = np.unique(touched.astype(int), return_counts=True)
    return CostReport(
        mean_duration=float(duration.mean()),
        p95_duration=float(np.percentile(duration, 95)),
        scan_fraction=float(scans.mean()),
        steady_scan_fraction=float(scans[steady].mean()),
        fast_path_fraction=float(1.0 - scans.mean()),
        mean_touched=float(touched.mean()),
        p95_touched=float(np.percentile(touched, 95)),
        touched_histogram={int(v): int(c) for v, c in zip(values, counts, strict=True)},
    )


#
# theory
#
@dataclasses.dataclass(frozen=True)
class TheoryParams:
    """constants of the regret bound, for reporting only"""

    G: float
    D: float
    L: float
    delta: float
    alpha_cc: float


def alpha_cc(curves, max_pages, samples=33):
    """smallest ratio of curve value to chord value at chord midpoints

    1.0 for concave curves, below 1 where a curve is convex
    """
    grid = np.linspace(0, max_pages, samples)
    ratio = 1.0
    for curve in curves:
        values = curve.evaluate(grid)
        for i, j in itertools.combinations(range(samples), 2):
            chord = 0.5 * (values[i] + values[j])
            if chord <= 1e-12:
                continue
            mid = float(curve.evaluate(0.5 * (grid[i] + grid[j])))
            ratio = min(ratio, mid / chord)
    return ratio


def theory_params(scenario):
    env = scenario.env
    cfg = scenario.pool
    peak_ops = np.max(
        [env.schedule.mean_ops(c) for c in env.schedule.boundaries], axis=0
    )
    lipschitz = np.array([curve.lipschitz for curve in env.curves])
    slopes = peak_ops * lipschitz
    slack = cfg.total_pages - float(effective_lower_bounds(cfg).sum())
    return TheoryParams(
        G=float(np.linalg.norm(slopes)),
        D=math.sqrt(2.0) * slack,
        L=float(slopes.max()),
        delta=float(slopes.sum()),
        alpha_cc=alpha_cc(env.curves, cfg.total_pages),
    )


def regret_bound(params, horizon):
    """G * D * sqrt(2T) + delta * T"""
    return params.G * params.D * math.sqrt(2.0 * horizon) + params.delta * horizon


#
# comparisons
#
def oracle_gap(trace, oracle_utility):
    """steady-state mean utility over oracle utility, one ratio per phase"""
    utility = trace.utility
    ratios = []
    for rows, target in zip(trace.steady_rows(), oracle_utility, strict=False):
        if target <= 0:
            raise AnalysisError("oracle utility must be greater than 0")
        ratios.append(float(utility[rows.start : rows.stop].mean() / target))
    return ratios


def _misses(trace, tenants):
    ops = trace.tenant_matrix("ops")[:, tenants]
    hit = trace.tenant_matrix("true_hr")[:, tenants]
    return float((ops * (1.0 - hit)).sum())


def qos_miss_increase(trace, reference, tenants):
    """relative increase of misses for tenants against a reference run"""
    tenants = list(tenants)
    base = _misses(reference, tenants)
    ours = _misses(trace, tenants)
    if base <= 0:
        return 0.0 if ours <= 0 else math.inf
    return (ours - base) / base


def elastic_ratio(trace, cfg, a, b, window=0.5):
    """steady-state ratio of tenant a's elastic pages to tenant b's

    cfg gives the fixed shares to subtract. With cfg None the shares
    recorded in the trace are used.
    """
    shares = (
        np.asarray(apportion_fixed_pool(cfg))
        if cfg is not None
        else np.asarray(trace.meta.get("fixed_shares", [0] * trace.n_tenants))
    )
    pages = trace.pages
    start = int(math.floor(len(pages) * (1.0 - window)))
    elastic = pages[start:] - shares
    top = float(elastic[:, a].mean())
    bottom = float(elastic[:, b].mean())
    if bottom <= 0:
        return math.inf if top > 0 else 1.0
    return top / bottom


def summarize(trace):
    """headline numbers of one run as a flat dict"""
    summary = {
        "policy": trace.meta.get("label", trace.meta.get("policy")),
        "scenario": trace.meta.get("scenario"),
        "seed": trace.meta.get("seed"),
        "cycles": len(trace),
    }
    if not len(trace):
        return summary
    summary["mean_utility"] = float(trace.utility.mean())
    summary["mean_latency"] = float(trace.column("latency").mean())
    summary["violations"] = int(trace.column("violations").sum())
    cost = amortized_cost(trace)
    summary["scan_fraction"] = cost.scan_fraction
    summary["mean_touched"] = cost.mean_touched
    if len(trace) >= 2:
        summary["sigma_delta"] = jitter_series(trace).sigma
    window = min(50, min(len(rows) for rows in trace.steady_rows()))
    if window >= 2:
        summary["sigma_tps"] = float(np.mean(stability_sigma_tps(trace, window)))
    return summary


def write_summary(summaries, fobj):
    """a TOML document with one [[runs]] table per summary"""
    doc = tomlkit.document()
    runs = tomlkit.aot()
    for summary in summaries:
        runs.append(_plain(summary))
    doc["schema"] = TRACE_SCHEMA
    doc["runs"] = runs
    fobj.write(tomlkit.dumps(doc))
