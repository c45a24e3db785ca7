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
"""acceptance suites

Each suite runs a fixed set of scenarios and policies and checks the
measured numbers against thresholds. run_suite() returns a SuiteReport;
`quick` shrinks run lengths and instance counts for a fast smoke pass.
"""

import dataclasses
import logging
import math

import numpy as np
import tomlkit

from . import analysis, aura, oracle, simenv
from .domain import PoolConfig, effective_lower_bounds
from .exceptions import SamError
from .experiment import run_scenario
from .policies import PolicyBase

log = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class Check:
    name: str
    measured: object
    threshold: str
    passed: bool


@dataclasses.dataclass
class SuiteReport:
    name: str
    checks: list = dataclasses.field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def check(self, name, measured, threshold, passed):
        self.checks.append(Check(name, measured, threshold, bool(passed)))
        log.info("%s: %s = %s (%s)", self.name, name, measured, threshold)

    def as_document(self):
        doc = tomlkit.document()
        doc["suite"] = self.name
        doc["passed"] = self.passed
        checks = tomlkit.aot()
        for check in self.checks:
            measured = check.measured
            if isinstance(measured, float) and math.isinf(measured):
                measured = str(measured)
            checks.append(
                {
                    "name": check.name,
                    "measured": measured,
                    "threshold": check.threshold,
                    "passed": check.passed,
                }
            )
        doc["checks"] = checks
        return doc


SUITES = {}


def _suite(name):
    def register(func):
        SUITES[name] = func
        return func

    return register


def run_suite(name, quick=False):
    try:
        suite = SUITES[name]
    except KeyError as exc:
        raise SamError(f"{name}: unknown suite") from exc
    report = SuiteReport(name)
    suite(report, quick)
    return report


def _round(value, digits=4):
    return round(float(value), digits)


#
# oracle correctness
#
def _tiny_scenario(rng):
    n = int(rng.integers(1, 4))
    budget = int(rng.integers(4, 33))
    bounds = [int(rng.integers(0, 3)) for _ in range(n)]
    while sum(bounds) > budget:
        bounds = [max(0, b - 1) for b in bounds]
    curves = [
        simenv.HitRateCurve(
            simenv.CurveKind.EXP_SATURATING,
            h_max=float(rng.uniform(0.3, 1.0)),
            scale=float(rng.uniform(2.0, 40.0)),
        )
        for _ in range(n)
    ]
    schedule = simenv.WorkloadSchedule(
        (simenv.Phase(1, [1.0] * n),), [float(rng.uniform(1, 100)) for _ in range(n)]
    )
    env = simenv.EnvironmentModel(curves, schedule, simenv.NoiseModel(0.0, 0.0))
    pool = PoolConfig(budget, 0, [1.0] * n, bounds)
    return env, pool


@_suite("oracle")
def _oracle_suite(report, quick):
    rng = np.random.default_rng(20240601)
    instances = 40 if quick else 200
    mismatches = 0
    for _ in range(instances):
        env, pool = _tiny_scenario(rng)
        grid = range(pool.total_pages + 1)
        _, value = oracle.solve_mckp(
            oracle.build_instance(oracle.true_profiles(env, 0, grid), pool, 1)
        )
        _, best = oracle.brute_force_best(env, 0, pool)
        if not math.isclose(value, best, rel_tol=1e-9, abs_tol=1e-9):
            mismatches += 1
    report.check(
        "dp_equals_brute_force", mismatches, "== 0 mismatches", mismatches == 0
    )

    refinements = 10 if quick else 50
    drops = 0
    for _ in range(refinements):
        env, pool = _tiny_scenario(rng)
        pool = dataclasses.replace(pool, total_pages=32)
        profiles = oracle.true_profiles(env, 0, range(33))
        values = [
            oracle.solve_mckp(oracle.build_instance(profiles, pool, chunk))[1]
            for chunk in (8, 4, 2, 1)
        ]
        if any(b < a - 1e-9 for a, b in zip(values, values[1:], strict=False)):
            drops += 1
    report.check("chunk_refinement_monotone", drops, "== 0 drops", drops == 0)


#
# regret
#
def _static_oracle(scenario):
    grid = range(scenario.pool.total_pages + 1)
    profiles = oracle.true_profiles(scenario.env, 0, grid)
    plan, _ = oracle.solve_mckp(oracle.build_instance(profiles, scenario.pool, 1))
    return plan


@_suite("regret")
def _regret_suite(report, quick):
    cycles = 1500 if quick else 5000
    seeds = [0] if quick else [0, 1, 2]
    scenario = simenv.make_scenario("stationary_concave", cycles=cycles)
    best = _static_oracle(scenario)
    for kind in ("sam_core", "aura"):
        slopes = []
        for seed in seeds:
            trace = run_scenario(scenario, kind, seed=seed)
            series = analysis.regret_series(trace, best, scenario.env.curves)
            slopes.append(analysis.loglog_slope(series).slope)
        slope = float(np.mean(slopes))
        report.check(
            f"{kind}_regret_slope",
            _round(slope),
            "in [0.40, 0.60]",
            0.4 <= slope <= 0.6,
        )


#
# stability
#
@_suite("stability")
def _stability_suite(report, quick):
    cycles = 1500 if quick else 5000
    seeds = [0] if quick else [0, 1, 2]
    warmup = 50
    scenario = simenv.make_scenario("stationary_concave", cycles=cycles)
    decay, variation, ratios = [], [], []
    for seed in seeds:
        damped = analysis.jitter_series(run_scenario(scenario, "aura", seed=seed))
        undamped = analysis.jitter_series(
            run_scenario(scenario, "aura_undamped", seed=seed)
        )
        decay.append(analysis.inverse_decay_fit(damped.deltas, warmup).r2)
        variation.append(analysis.log_variation_fit(damped.deltas, warmup).r2)
        ratios.append(
            damped.sigma / undamped.sigma if undamped.sigma > 0 else 0.0
        )
    report.check("jitter_inverse_t_r2", _round(min(decay)), ">= 0.8", min(decay) >= 0.8)
    report.check(
        "variation_log_t_r2", _round(min(variation)), ">= 0.9", min(variation) >= 0.9
    )
    report.check(
        "sigma_delta_ratio", _round(max(ratios)), "<= 0.6", max(ratios) <= 0.6
    )

    hotspot = simenv.make_scenario("hotspot_shift")
    sigma = {
        kind: float(
            np.mean(analysis.stability_sigma_tps(run_scenario(hotspot, kind), 20))
        )
        for kind in ("aura", "b12")
    }
    report.check(
        "sigma_tps_b12_over_aura",
        _round(sigma["b12"] / sigma["aura"]) if sigma["aura"] > 0 else math.inf,
        "> 1.0",
        sigma["b12"] > sigma["aura"],
    )


#
# pollution robustness
#
@_suite("robustness")
def _robustness_suite(report, quick):
    cycles = 300 if quick else 600
    scenario = simenv.make_scenario("pollution_attack", cycles=cycles)
    vip = scenario.roles["vip"]
    attacker = scenario.roles["attacker"]
    traces = {kind: run_scenario(scenario, kind) for kind in ("aura", "b7")}
    ratios = {
        kind: analysis.elastic_ratio(trace, scenario.pool, vip, attacker)
        for kind, trace in traces.items()
    }
    aura_ratio = ratios["aura"]
    report.check("aura_vip_ratio", _round(aura_ratio), ">= 1.0", aura_ratio >= 1.0)
    report.check("b7_vip_ratio", _round(ratios["b7"]), "< 1.0", ratios["b7"] < 1.0)

    burst = scenario.env.schedule.bursts[attacker]
    steady = range(cycles // 2, cycles)
    hit = traces["aura"].tenant_matrix("true_hr")[:, vip]
    during = [hit[c] for c in steady if burst.active(c)]
    outside = [hit[c] for c in steady if not burst.active(c)]
    drop = float(np.mean(outside) - np.mean(during)) if during and outside else 0.0
    report.check("aura_vip_hit_rate_drop", _round(drop), "<= 0.02", drop <= 0.02)


#
# adaptation and oracle gap
#
def _sigma_adjusted_lag(trace, boundary, target):
    """lag stretched by the coefficient of variation of the phase utility"""
    lag = analysis.adaptation_lag(trace, boundary, target)
    rows = next(r for r in trace.phase_rows() if r.start == boundary)
    utility = trace.utility[rows.start : rows.stop]
    spread = float(np.std(utility) / np.mean(utility)) if np.mean(utility) > 0 else 0.0
    return lag.cycles * (1.0 + spread)


@_suite("adaptation")
def _adaptation_suite(report, quick):
    seeds = 1 if quick else 5
    scenario = simenv.make_scenario("hotspot_shift")
    phases = len(scenario.env.schedule.phases)
    targets = [oracle.phase_oracle(scenario, p, seeds=seeds)[1] for p in range(phases)]
    traces = {kind: run_scenario(scenario, kind) for kind in ("aura", "b8", "b12")}
    boundary = scenario.boundaries[-1]
    lags = {
        kind: analysis.adaptation_lag(traces[kind], boundary, targets[-1])
        for kind in ("aura", "b8")
    }
    report.check(
        "aura_lag_below_b8",
        f"{lags['aura'].cycles} vs {lags['b8'].cycles}",
        "aura < b8",
        lags["aura"].cycles < lags["b8"].cycles,
    )
    b12 = _sigma_adjusted_lag(traces["b12"], boundary, targets[-1])
    report.check(
        "aura_lag_below_b12_adjusted",
        f"{lags['aura'].cycles} vs {_round(b12, 1)}",
        "aura < b12",
        lags["aura"].cycles < b12,
    )

    hotspot = scenario.roles["hotspot_to"]
    shares = traces["aura"].meta["fixed_shares"]
    row = min(boundary + 50, len(traces["aura"]) - 1)
    moved = (traces["aura"].pages[row, hotspot] - shares[hotspot]) / (
        scenario.pool.elastic_pages
    )
    report.check("aura_hotspot_elastic_share", _round(moved), ">= 0.5", moved >= 0.5)

    core_trace = run_scenario(scenario, "sam_core")
    aura_gap = analysis.oracle_gap(traces["aura"], targets)
    core_gap = analysis.oracle_gap(core_trace, targets)
    report.check(
        "aura_oracle_gap", [_round(g) for g in aura_gap], ">= 0.90 each phase",
        min(aura_gap) >= 0.9,
    )
    report.check(
        "aura_at_least_core",
        f"{_round(np.mean(aura_gap))} vs {_round(np.mean(core_gap))}",
        "aura >= sam_core",
        np.mean(aura_gap) >= np.mean(core_gap),
    )


#
# decision cost
#
@_suite("scalability")
def _scalability_suite(report, quick):
    sizes = (20, 60) if quick else (20, 60, 120)
    cycles = 300 if quick else 600
    costs = {}
    for k in sizes:
        scenario = simenv.make_scenario("scale_K", k=k, cycles=cycles)
        trace = run_scenario(scenario, "aura", params={"k_max": 8}, timing=True)
        costs[k] = analysis.amortized_cost(trace)
    growth = costs[sizes[-1]].mean_touched / costs[sizes[0]].mean_touched
    report.check("touched_growth", _round(growth), "< 2.0", growth < 2.0)
    worst = max(cost.steady_scan_fraction for cost in costs.values())
    report.check("steady_scan_fraction", _round(worst), "<= 0.15", worst <= 0.15)
    fast = costs[sizes[-1]].fast_path_fraction
    report.check("fast_path_fraction", _round(fast), ">= 0.85", fast >= 0.85)


#
# archetypes
#
@_suite("archetypes")
def _archetype_suite(report, quick):
    scenario = simenv.make_scenario("archetypes", cycles=400 if quick else 800)
    policy = PolicyBase.create("aura", scenario)
    plan = policy.initial_plan()
    info = None
    for cycle in range(scenario.env.total_cycles):
        observations = simenv.step(scenario.env, plan, cycle)
        plan, info = policy.decide(observations, plan, cycle)
    roles = scenario.roles
    states = policy.state.signal_states
    v = aura.v_factor(states, policy.aura_params.signal_params)
    scores = np.nan_to_num(np.asarray(info.scores, dtype=float))
    bounds = effective_lower_bounds(policy.pool)

    saturated_v = abs(float(v[roles["saturated"]]))
    report.check("saturated_v", _round(saturated_v), "< 0.05", saturated_v < 0.05)
    polluter = float(scores[roles["polluter"]])
    report.check("polluter_score", _round(polluter), "< 0.05", polluter < 0.05)
    quiescent = float(scores[roles["quiescent"]])
    report.check("quiescent_score", _round(quiescent), "== 0", quiescent == 0.0)
    at_bound = plan[roles["polluter"]] == bounds[roles["polluter"]]
    report.check(
        "polluter_at_bound",
        f"{plan[roles['polluter']]} vs {int(bounds[roles['polluter']])}",
        "equal",
        at_bound,
    )


#
# plan invariants
#
FUZZ_SCENARIOS = (
    ("hotspot_shift", {}),
    ("pollution_attack", {}),
    ("archetypes", {"hr_sigma": 0.02, "ops_sigma": 0.05}),
    ("sshape_stress", {}),
    ("scale_K", {"k": 24, "cycles": 400}),
)


@_suite("invariants")
def _invariant_suite(report, quick):
    budget = 5_000 if quick else 100_000
    kinds = sorted(name for name in PolicyBase.classmap if not name.startswith("b5_"))
    rng = np.random.default_rng(7)
    done = 0
    runs = 0
    failures = []
    while done < budget:
        name, overrides = FUZZ_SCENARIOS[int(rng.integers(len(FUZZ_SCENARIOS)))]
        kind = kinds[int(rng.integers(len(kinds)))]
        scenario = simenv.make_scenario(name, **overrides)
        if kind.startswith("b6_") and scenario.pool.data_size is None:
            continue
        params = {"seeds": 1} if kind.startswith("b14_") else None
        cycles = min(scenario.env.total_cycles, budget - done)
        try:
            run_scenario(
                scenario, kind, params, seed=int(rng.integers(1000)), cycles=cycles
            )
        except SamError as exc:
            failures.append(f"{kind} on {name}: {exc}")
        done += cycles
        runs += 1
    log.info("invariants: %d decision cycles over %d runs", done, runs)
    for failure in failures:
        log.warning("invariants: %s", failure)
    report.check("feasible_plans", len(failures), "== 0 failures", not failures)

    broken = 0
    for name in ("pollution_attack", "hotspot_shift"):
        trace = run_scenario(simenv.make_scenario(name), "b5")
        broken += int(trace.column("violations").sum())
    report.check("b5_breaks_bounds", broken, "> 0 violations", broken > 0)
