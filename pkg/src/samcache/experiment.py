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
"""experiment configuration and the Sense-Decide-Act run loop"""

import concurrent.futures
import contextlib
import dataclasses
import logging
import math
import os
import pathlib
import time

import jinja2
import pandas as pd
import tomlkit
import tomlkit.exceptions
from benedict import benedict

from . import analysis, simenv
from .domain import apportion_fixed_pool, validate_plan
from .exceptions import SamError, SamSyntaxError
from .filters import jinja_filters
from .policies import PolicyBase
from .utils import coerce_number

log = logging.getLogger(__name__)

DEFAULT_OUT_DIR = "results"
VERBOSITY = ("full", "summary")


def _plain(value):
    """benedicts and nested tables as plain dicts and lists"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_plain(v) for v in value]
    return value


@dataclasses.dataclass(frozen=True)
class PolicySpec:
    kind: str
    label: str
    params: dict = dataclasses.field(default_factory=dict)


class ExperimentConfig:
    """load and process an experiment file

    see the README for the schema
    """

    @staticmethod
    def loads(tomlstring=None, filename=None):
        """Load an experiment from a string and return a new config object"""
        config = ExperimentConfig()
        config.filename = filename
        config.definition = config._parse(tomlstring or "")
        config.process()
        return config

    @staticmethod
    def load(fobj, filename=None):
        """Load an experiment from a file object"""
        text = fobj.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
        return ExperimentConfig.loads(text, filename=filename)

    #
    # initialization and properties
    #
    def __init__(self):
        self.definition = benedict()
        self.filename = None
        self.variables = {}

        self.name = "experiment"
        self.scenario_name = "hotspot_shift"
        self.scenario_overrides = {}
        self.scenario_definition = None
        self.policies = []
        self.seeds = [0]
        self.cycles = None
        self.out_dir = None
        self.verbosity = "full"
        self.timing = False
        self.jobs = 1

    def _parse(self, text):
        try:
            return benedict(tomlkit.loads(text).unwrap())
        except tomlkit.exceptions.ParseError as exc:
            where = self.filename or "<string>"
            raise SamSyntaxError(f"{where}:{exc.line}:{exc.col}: {exc}") from exc

    def process(self):
        """render templates and validate every setting"""
        jinja_env = jinja2.Environment(undefined=jinja2.StrictUndefined)
        jinja_env.filters = jinja_filters()
        self._process_variables(jinja_env)

        jinja_env.globals = {
            "var": self.variables,
            "vars": self.variables,
            "variable": self.variables,
            "variables": self.variables,
        }

        def render_func(d, key, value):
            # only process strings
            if isinstance(value, str):
                try:
                    d[key] = coerce_number(jinja_env.from_string(value).render())
                except jinja2.TemplateError as exc:
                    raise SamSyntaxError(f"{key}: {exc}") from exc

        definition = benedict(
            {k: v for k, v in self.definition.items() if k != "variables"}
        )
        definition.traverse(render_func)

        self.name = str(definition.get("name", self.name))
        self.cycles = self._optional_int(definition, "cycles")
        self.out_dir = definition.get("out_dir", None)
        self.timing = definition.get("timing", False)
        if not isinstance(self.timing, bool):
            raise SamSyntaxError("'timing' must be true or false")
        self.jobs = self._optional_int(definition, "jobs") or 1
        self.verbosity = definition.get("verbosity", "full")
        if self.verbosity not in VERBOSITY:
            raise SamSyntaxError(f"'verbosity' must be one of {', '.join(VERBOSITY)}")

        seeds = definition.get("seeds", [0])
        if isinstance(seeds, int):
            seeds = [seeds]
        if not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
            raise SamSyntaxError("'seeds' must be a non-empty list of integers >= 0")
        self.seeds = list(seeds)

        self._process_scenario(definition.get("scenario", {}))
        self._process_policies(definition.get("policies", []))

    def _process_variables(self, jinja_env):
        """render [variables] in the order they are defined"""
        processed_vars = {}
        raw_vars = self.definition.get("variables", {}) or {}
        for var, definition in raw_vars.items():
            if not isinstance(definition, str):
                processed_vars[var] = definition
                continue
            try:
                template = jinja_env.from_string(definition)
                processed_vars[var] = coerce_number(
                    template.render(
                        var=processed_vars,
                        vars=processed_vars,
                        variable=processed_vars,
                        variables=processed_vars,
                    )
                )
            except jinja2.TemplateError as exc:
                raise SamSyntaxError(f"variables.{var}: {exc}") from exc
        self.variables = processed_vars

    @staticmethod
    def _optional_int(definition, key):
        value = definition.get(key, None)
        if value is None:
            return None
        if not isinstance(value, int) or isinstance(value, bool) or value < 0:
            raise SamSyntaxError(f"'{key}' must be an integer >= 0")
        return value

    def _process_scenario(self, scenario):
        if not isinstance(scenario, dict):
            raise SamSyntaxError("'scenario' must be a table")
        if "pool" in scenario:
            self.scenario_name = str(scenario.get("name", "custom"))
            self.scenario_definition = _plain(scenario)
            # build it once so errors show up at load time
            simenv.scenario_from_definition(
                self.scenario_definition, self.scenario_name
            )
            return
        self.scenario_name = str(scenario.get("name", self.scenario_name))
        if self.scenario_name not in simenv.SCENARIOS:
            raise SamSyntaxError(
                f"scenario.name: {self.scenario_name}: unknown scenario"
            )
        self.scenario_overrides = _plain(scenario.get("overrides", {}))

    def _process_policies(self, policies):
        if not isinstance(policies, list) or not policies:
            raise SamSyntaxError("at least one [[policies]] table is required")
        specs = []
        for index, policy in enumerate(policies):
            where = f"policies[{index}]"
            try:
                kind = str(policy["kind"])
            except (KeyError, TypeError) as exc:
                raise SamSyntaxError(f"{where}: missing required key 'kind'") from exc
            try:
                clss = PolicyBase.lookup(kind)
            except SamError as exc:
                raise SamSyntaxError(f"{where}: {exc}") from exc
            params = _plain(policy.get("params", {}))
            unknown = set(params) - set(clss.defaults)
            if unknown:
                raise SamSyntaxError(
                    f"{where}: unknown parameters: {', '.join(sorted(unknown))}"
                )
            label = str(policy.get("label", kind))
            specs.append(PolicySpec(kind, label, params))
        labels = [spec.label for spec in specs]
        duplicates = sorted({label for label in labels if labels.count(label) > 1})
        if duplicates:
            raise SamSyntaxError(f"duplicate policy labels: {', '.join(duplicates)}")
        self.policies = specs

    #
    # building things
    #
    def build_scenario(self, seed=0):
        if self.scenario_definition is not None:
            scenario = simenv.scenario_from_definition(
                self.scenario_definition, self.scenario_name
            )
            return scenario.with_seed(seed)
        return simenv.make_scenario(
            self.scenario_name, **{**self.scenario_overrides, "seed": seed}
        )

    def resolve_out_dir(self, cli_out=None):
        """--out, then out_dir in the file, then $SAM_OUT_DIR, then ./results"""
        if cli_out:
            return pathlib.Path(cli_out)
        if self.out_dir:
            return pathlib.Path(self.out_dir)
        with contextlib.suppress(KeyError):
            return pathlib.Path(os.environ["SAM_OUT_DIR"])
        return pathlib.Path(DEFAULT_OUT_DIR)


#
# the run loop
#
class TraceWriter:
    """collect cycle records and flush them to a CSV file as they arrive"""

    def __init__(self, meta, columns, fobj=None, flush_every=256):
        self.meta = meta
        self.columns = columns
        self.fobj = fobj
        self.flush_every = flush_every
        self.rows = []
        self._pending = []
        self._header_written = False

    def append(self, row):
        self.rows.append(row)
        self._pending.append(row)
        if len(self._pending) >= self.flush_every:
            self.flush()

    def flush(self):
        if self.fobj is None:
            self._pending = []
            return
        if not self._header_written:
            analysis.write_trace_header(self.meta, self.fobj)
        frame = pd.DataFrame(self._pending, columns=self.columns)
        frame.to_csv(self.fobj, index=False, header=not self._header_written)
        self._header_written = True
        self._pending = []
        self.fobj.flush()

    def trace(self):
        self.flush()
        frame = pd.DataFrame(self.rows, columns=self.columns)
        return analysis.RunTrace(self.meta, frame)


def run_meta(scenario, spec, policy, seed, cycles, verbosity):
    return {
        "schema": analysis.TRACE_SCHEMA,
        "policy": policy.policy_name,
        "label": spec.label,
        "params": policy.metadata["params"],
        "note": policy.note or None,
        "scenario": scenario.name,
        "seed": seed,
        "cycles": cycles,
        "verbosity": verbosity,
        "n_tenants": scenario.pool.n_tenants,
        "total_pages": scenario.pool.total_pages,
        "tenant_names": list(scenario.tenant_names),
        "boundaries": [b for b in scenario.boundaries if b < max(cycles, 1)],
        "fixed_shares": list(apportion_fixed_pool(policy.pool)),
    }


def run_single(
    scenario, spec, seed=0, cycles=None, timing=False, verbosity="full", fobj=None
):
    """run one policy against one scenario and return its RunTrace

    each cycle senses the environment under the plan in force, lets the
    policy decide the next plan and adopts it. Only the decision is timed.
    With fobj the trace is written to it as it grows.
    """
    env = scenario.env
    if cycles is None:
        cycles = env.total_cycles
    if cycles > env.total_cycles:
        raise SamError(
            f"{cycles} cycles requested, scenario '{scenario.name}'"
            f" only has {env.total_cycles}"
        )
    policy = PolicyBase.create(spec.kind, scenario, spec.params)
    n = scenario.pool.n_tenants
    prefixes = analysis.TENANT_PREFIXES if verbosity == "full" else ("pages", "ops")
    columns = analysis.CYCLE_COLUMNS + analysis.tenant_columns(n, prefixes)
    writer = TraceWriter(
        run_meta(scenario, spec, policy, seed, cycles, verbosity), columns, fobj
    )
    log.info("running %s on %s, seed %d", spec.label, scenario.name, seed)

    plan = policy.initial_plan()
    for cycle in range(cycles):
        # sense
        observations = simenv.step(env, plan, cycle)
        violations = validate_plan(plan, policy.pool)
        if violations and policy.enforces_bounds:
            raise SamError(
                f"{spec.label} put an infeasible plan in force at cycle {cycle}: "
                + ", ".join(str(v) for v in violations)
            )
        # decide
        start = time.perf_counter()
        new_plan, info = policy.decide(observations, plan, cycle)
        duration = time.perf_counter() - start if timing else 0.0

        row = [
            cycle,
            simenv.effective_throughput(observations),
            simenv.mean_latency(observations, env),
            duration,
            int(info.global_scan),
            info.active_size,
            info.touched,
            info.heap_ops,
            math.nan if info.alpha is None else info.alpha,
            len(violations),
        ]
        row.extend(plan.pages)
        row.extend(obs.ops for obs in observations)
        if verbosity == "full":
            row.extend(obs.hit_rate for obs in observations)
            row.extend(obs.true_hit_rate for obs in observations)
        writer.append(row)
        # act
        plan = new_plan
    return writer.trace()


def run_scenario(scenario, kind, params=None, seed=0, cycles=None, timing=False):
    """run a policy kind on a scenario, in memory, with seed applied"""
    spec = PolicySpec(kind, kind, dict(params or {}))
    return run_single(scenario.with_seed(seed), spec, seed, cycles, timing)


def trace_path(out_dir, spec, seed):
    return out_dir / f"{spec.label}-seed{seed}.csv"


def _run_job(config, spec, seed, out_dir):
    scenario = config.build_scenario(seed)
    path = trace_path(out_dir, spec, seed)
    with open(path, "w", encoding="utf-8", newline="") as fobj:
        trace = run_single(
            scenario,
            spec,
            seed,
            config.cycles,
            config.timing,
            config.verbosity,
            fobj,
        )
    return path, analysis.summarize(trace)


@dataclasses.dataclass
class ExperimentResult:
    out_dir: pathlib.Path
    traces: list
    summary_path: pathlib.Path
    summaries: list


def run_experiment(config, out_dir=None, jobs=None):
    """run every (policy, seed) pair, writing one trace each plus a summary"""
    out_dir = config.resolve_out_dir(out_dir) / config.name
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = jobs or config.jobs
    pairs = [(spec, seed) for spec in config.policies for seed in config.seeds]

    if jobs > 1 and len(pairs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(_run_job, config, spec, seed, out_dir)
                for spec, seed in pairs
            ]
            results = [future.result() for future in futures]
    else:
        results = [_run_job(config, spec, seed, out_dir) for spec, seed in pairs]

    summary_path = out_dir / "summary.toml"
    summaries = [summary for _, summary in results]
    with open(summary_path, "w", encoding="utf-8") as fobj:
        analysis.write_summary(summaries, fobj)
    return ExperimentResult(
        out_dir, [path for path, _ in results], summary_path, summaries
    )
