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
"""simulated multi-tenant environment

Ground-truth hit-rate curves, scripted workloads and observation noise.
step() is the Sense half of the Sense-Decide-Act loop: hand it the plan in
force and a cycle number and it reports what every tenant observed.

The environment is immutable after construction and step() is a pure
function of (env, plan, cycle), so it can be called from anywhere.
"""

import dataclasses
import inspect
import math
from collections.abc import Mapping, Sequence
from enum import Enum

import numpy as np

from .domain import PoolConfig, TenantObservation
from .exceptions import EndOfRunError, SamError, SamSyntaxError


class CurveKind(Enum):
    """shapes of ground-truth hit-rate curves"""

    def __str__(self):
        return self.value

    EXP_SATURATING = "exp_saturating"
    LOGISTIC_S_SHAPE = "logistic_s_shape"
    POLLUTER_FLAT = "polluter_flat"
    QUIESCENT = "quiescent"


@dataclasses.dataclass(frozen=True)
class HitRateCurve:
    """a hit rate as a function of the pages a tenant holds

    exp_saturating is concave, logistic_s_shape is convex below its
    midpoint, polluter_flat ignores pages entirely and quiescent is
    always zero.
    """

    kind: CurveKind
    h_max: float = 1.0
    scale: float = 100.0
    midpoint: float = 0.0
    floor: float = 0.0

    def __post_init__(self):
        if not isinstance(self.kind, CurveKind):
            try:
                object.__setattr__(self, "kind", CurveKind(self.kind))
            except ValueError as exc:
                raise SamError(f"{self.kind}: unknown curve kind") from exc
        if not 0.0 <= self.h_max <= 1.0:
            raise SamError("h_max must be between 0 and 1")
        if self.scale <= 0:
            raise SamError("scale must be greater than 0")
        if self.midpoint < 0:
            raise SamError("midpoint must not be negative")
        if not 0.0 <= self.floor <= 1.0:
            raise SamError("floor must be between 0 and 1")

    def evaluate(self, pages):
        """hit rate at pages, which may be a scalar or a numpy array"""
        x = np.asarray(pages, dtype=float)
        if self.kind is CurveKind.EXP_SATURATING:
            hr = self.h_max * -np.expm1(-x / self.scale)
        elif self.kind is CurveKind.LOGISTIC_S_SHAPE:
            hr = self.h_max / (1.0 + np.exp(-(x - self.midpoint) / self.scale))
        elif self.kind is CurveKind.POLLUTER_FLAT:
            hr = np.full_like(x, self.floor)
        else:
            hr = np.zeros_like(x)
        return np.clip(hr, 0.0, 1.0)

    def slope(self, pages):
        """analytic derivative of the hit rate with respect to pages"""
        x = np.asarray(pages, dtype=float)
        if self.kind is CurveKind.EXP_SATURATING:
            return self.h_max / self.scale * np.exp(-x / self.scale)
        if self.kind is CurveKind.LOGISTIC_S_SHAPE:
            z = np.exp(-(x - self.midpoint) / self.scale)
            return self.h_max / self.scale * z / (1.0 + z) ** 2
        return np.zeros_like(x)

    @property
    def lipschitz(self) -> float:
        """the largest slope anywhere on the curve"""
        if self.kind is CurveKind.EXP_SATURATING:
            return self.h_max / self.scale
        if self.kind is CurveKind.LOGISTIC_S_SHAPE:
            return self.h_max / (4.0 * self.scale)
        return 0.0


def true_hit_rate(curve, pages):
    """ground-truth hit rate of curve at an integer page count"""
    if pages < 0:
        raise SamError("pages must not be negative")
    return float(curve.evaluate(pages))


@dataclasses.dataclass(frozen=True)
class Burst:
    """square wave on top of the phase multiplier, for intermittent load"""

    on: int = 20
    off: int = 20
    amplitude: float = 10.0
    start: int = 0

    def factor(self, cycle) -> float:
        if cycle < self.start:
            return 1.0
        if (cycle - self.start) % (self.on + self.off) < self.on:
            return self.amplitude
        return 1.0

    def active(self, cycle) -> bool:
        return self.factor(cycle) != 1.0


@dataclasses.dataclass(frozen=True)
class Phase:
    duration: int
    multipliers: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "multipliers", tuple(self.multipliers))
        if self.duration < 1:
            raise SamError("phase duration must be at least 1 cycle")
        if any(m < 0 for m in self.multipliers):
            raise SamError("phase multipliers must not be negative")


@dataclasses.dataclass(frozen=True)
class WorkloadSchedule:
    """ordered phases of per-tenant ops multipliers over base_ops"""

    phases: tuple[Phase, ...]
    base_ops: tuple[float, ...]
    bursts: tuple[Burst | None, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "phases", tuple(self.phases))
        object.__setattr__(self, "base_ops", tuple(self.base_ops))
        if not self.bursts:
            object.__setattr__(self, "bursts", (None,) * len(self.base_ops))
        object.__setattr__(self, "bursts", tuple(self.bursts))
        if not self.phases:
            raise SamError("a workload needs at least one phase")
        for phase in self.phases:
            if len(phase.multipliers) != len(self.base_ops):
                raise SamError("every phase needs one multiplier per tenant")
        if len(self.bursts) != len(self.base_ops):
            raise SamError("bursts must have one entry per tenant")
        if any(ops < 0 for ops in self.base_ops):
            raise SamError("base_ops must not be negative")

    @property
    def total_cycles(self) -> int:
        return sum(phase.duration for phase in self.phases)

    @property
    def boundaries(self) -> tuple[int, ...]:
        """first cycle of every phase"""
        starts = [0]
        for phase in self.phases[:-1]:
            starts.append(starts[-1] + phase.duration)
        return tuple(starts)

    def phase_at(self, cycle) -> int:
        """index of the phase that cycle falls in"""
        if not 0 <= cycle < self.total_cycles:
            raise EndOfRunError(f"cycle {cycle} is outside the schedule")
        end = 0
        for index, phase in enumerate(self.phases):
            end += phase.duration
            if cycle < end:
                return index
        raise EndOfRunError(f"cycle {cycle} is outside the schedule")  # pragma: nocover

    def phase_range(self, index) -> range:
        start = self.boundaries[index]
        return range(start, start + self.phases[index].duration)

    def mean_ops(self, cycle):
        """noise free ops of every tenant at cycle"""
        phase = self.phases[self.phase_at(cycle)]
        ops = np.asarray(self.base_ops, dtype=float) * np.asarray(phase.multipliers)
        for tenant, burst in enumerate(self.bursts):
            if burst is not None:
                ops[tenant] *= burst.factor(cycle)
        return ops


@dataclasses.dataclass(frozen=True)
class NoiseModel:
    """multiplicative gaussian noise on observed hit rates and ops"""

    hr_sigma: float = 0.02
    ops_sigma: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if self.hr_sigma < 0 or self.ops_sigma < 0:
            raise SamError("noise sigmas must not be negative")
        if self.seed < 0:
            raise SamError("seed must not be negative")

    @property
    def silent(self) -> bool:
        return self.hr_sigma == 0 and self.ops_sigma == 0

    def draws(self, cycle, n_tenants):
        """(hr, ops) standard normal draws for one cycle

        the stream depends only on (seed, cycle), so any cycle can be
        replayed without replaying the ones before it
        """
        if self.silent:
            zeros = np.zeros(n_tenants)
            return zeros, zeros
        rng = np.random.default_rng([self.seed, cycle])
        draws = rng.standard_normal((2, n_tenants))
        return draws[0], draws[1]


@dataclasses.dataclass(frozen=True)
class EnvironmentModel:
    """curves, workload, noise and latency constants of a simulated system"""

    curves: tuple[HitRateCurve, ...]
    schedule: WorkloadSchedule
    noise: NoiseModel = NoiseModel()
    hit_latency: float = 0.1
    miss_latency: float = 50.0

    def __post_init__(self):
        object.__setattr__(self, "curves", tuple(self.curves))
        if len(self.curves) != len(self.schedule.base_ops):
            raise SamError("the schedule needs base_ops for every curve")
        if self.miss_latency < self.hit_latency:
            raise SamError("miss_latency must be at least hit_latency")

    @property
    def n_tenants(self) -> int:
        return len(self.curves)

    @property
    def total_cycles(self) -> int:
        return self.schedule.total_cycles

    def with_noise(self, **changes):
        """a copy of this environment with some noise settings replaced"""
        return dataclasses.replace(
            self, noise=dataclasses.replace(self.noise, **changes)
        )

    def true_rates(self, pages):
        return np.array(
            [curve.evaluate(p) for curve, p in zip(self.curves, pages, strict=True)]
        )

    def observe(self, pages, cycle):
        """(ops, observed hit rate, true hit rate) arrays for one cycle"""
        mean_ops = self.schedule.mean_ops(cycle)
        for tenant, curve in enumerate(self.curves):
            if curve.kind is CurveKind.QUIESCENT:
                mean_ops[tenant] = 0.0
        true = self.true_rates(pages)
        hr_noise, ops_noise = self.noise.draws(cycle, self.n_tenants)
        ops = mean_ops * np.maximum(0.0, 1.0 + self.noise.ops_sigma * ops_noise)
        observed = np.clip(true * (1.0 + self.noise.hr_sigma * hr_noise), 0.0, 1.0)
        return ops, observed, true


def step(env, plan, cycle):
    """run one cycle of the environment under plan

    returns one TenantObservation per tenant. Hits and misses are split from
    the observed ops at the observed hit rate. Raises EndOfRunError when
    cycle is past the end of the schedule.
    """
    if len(plan) != env.n_tenants:
        raise SamError(
            f"plan has {len(plan)} tenants, environment has {env.n_tenants}"
        )
    ops, observed, true = env.observe(plan.pages, cycle)
    observations = []
    for tenant, pages in enumerate(plan):
        tenant_ops = float(ops[tenant])
        hit_rate = float(observed[tenant]) if tenant_ops > 0 else 0.0
        hits = tenant_ops * hit_rate
        observations.append(
            TenantObservation(
                ops=tenant_ops,
                hits=hits,
                misses=tenant_ops - hits,
                hit_rate=hit_rate,
                current_pages=pages,
                true_hit_rate=float(true[tenant]),
            )
        )
    return observations


def effective_throughput(observations):
    """aggregate effective throughput, the per-cycle utility

    uses the ground-truth hit rate of an observation when it has one
    """
    total = 0.0
    for obs in observations:
        rate = obs.true_hit_rate if obs.true_hit_rate is not None else obs.hit_rate
        total += obs.ops * rate
    return total


def mean_latency(observations, env):
    """ops weighted average access latency in ms"""
    total_ops = sum(obs.ops for obs in observations)
    if total_ops <= 0:
        return 0.0
    weighted = 0.0
    for obs in observations:
        rate = obs.true_hit_rate if obs.true_hit_rate is not None else obs.hit_rate
        weighted += obs.ops * (
            rate * env.hit_latency + (1.0 - rate) * env.miss_latency
        )
    return weighted / total_ops


#
# scenarios
#
@dataclasses.dataclass(frozen=True)
class Scenario:
    """an environment plus the pool it runs against

    roles maps names like 'vip' or 'hotspot_to' to tenant ids
    """

    name: str
    env: EnvironmentModel
    pool: PoolConfig
    tenant_names: tuple[str, ...]
    roles: Mapping[str, int] = dataclasses.field(default_factory=dict)
    description: str = ""

    @property
    def boundaries(self):
        return self.env.schedule.boundaries

    def with_seed(self, seed):
        return dataclasses.replace(self, env=self.env.with_noise(seed=seed))


SCENARIOS = {}


def _scenario(name):
    def register(func):
        SCENARIOS[name] = func
        return func

    return register


def make_scenario(name, **overrides):
    """build one of the named scenarios, applying keyword overrides"""
    try:
        builder = SCENARIOS[name]
    except KeyError as exc:
        raise SamError(f"{name}: unknown scenario") from exc
    try:
        inspect.signature(builder).bind(**overrides)
    except TypeError as exc:
        raise SamError(f"scenario '{name}': {exc}") from exc
    return builder(**overrides)


def _pool(total_pages, fixed_frac, priorities, lower_bound, data_size=None):
    return PoolConfig(
        total_pages=total_pages,
        fixed_pages=int(round(total_pages * fixed_frac)),
        base_priority=tuple(priorities),
        lower_bound=tuple(lower_bound),
        data_size=None if data_size is None else tuple(data_size),
    )


def _exp(h_max, scale):
    return HitRateCurve(CurveKind.EXP_SATURATING, h_max=h_max, scale=scale)


@_scenario("hotspot_shift")
def _hotspot_shift(
    n_tenants=6,
    total_pages=1200,
    fixed_frac=0.2,
    phase_cycles=(60, 300, 300),
    multiplier=30.0,
    seed=0,
    hr_sigma=0.01,
    ops_sigma=0.02,
):
    """baseline load, then a 30x hotspot on the high priority tenant, then
    the hotspot moves to the medium priority tenant

    the medium priority tenant has the widest working set. The low priority
    tenants have small ones that their fixed share already covers, so a
    hotspot is worth most of the elastic pool.
    """
    if n_tenants < 3:
        raise SamError("hotspot_shift needs at least 3 tenants")
    names = ["db_high_prio", "db_medium_prio"] + [
        f"db_low_prio_{i}" for i in range(1, n_tenants - 1)
    ]
    base_ops = [12.0, 10.0] + [max(2.0, 8.0 - i) for i in range(n_tenants - 2)]
    curves = [_exp(0.95, 60.0), _exp(0.95, 150.0)] + [
        _exp(max(0.6, 0.9 - 0.02 * i), 4.0) for i in range(n_tenants - 2)
    ]
    priorities = [3.0, 2.0] + [1.0] * (n_tenants - 2)
    ones = [1.0] * n_tenants
    phase2 = list(ones)
    phase2[0] = multiplier
    phase3 = list(ones)
    phase3[1] = multiplier
    schedule = WorkloadSchedule(
        phases=(
            Phase(phase_cycles[0], ones),
            Phase(phase_cycles[1], phase2),
            Phase(phase_cycles[2], phase3),
        ),
        base_ops=base_ops,
    )
    env = EnvironmentModel(
        curves, schedule, NoiseModel(hr_sigma=hr_sigma, ops_sigma=ops_sigma, seed=seed)
    )
    # database sizes in GiB, read by the data size baseline
    sizes = [40.0, 24.0] + [8.0 + 4.0 * (i % 3) for i in range(n_tenants - 2)]
    pool = _pool(total_pages, fixed_frac, priorities, [16] * n_tenants, sizes)
    return Scenario(
        "hotspot_shift",
        env,
        pool,
        tuple(names),
        {"hotspot_from": 0, "hotspot_to": 1},
        "three phase workload with a moving 30x hotspot",
    )


@_scenario("pollution_attack")
def _pollution_attack(
    total_pages=512,
    fixed_frac=0.125,
    cycles=600,
    vip_ops=100.0,
    attacker_ops=30.0,
    burst_on=20,
    burst_off=20,
    burst_amplitude=10.0,
    seed=0,
    hr_sigma=0.02,
    ops_sigma=0.05,
):
    """a high locality VIP tenant sharing a small cache with a scanning
    attacker whose load arrives in intermittent bursts"""
    curves = [
        _exp(0.98, 40.0),
        HitRateCurve(CurveKind.POLLUTER_FLAT, floor=0.05),
    ]
    schedule = WorkloadSchedule(
        phases=(Phase(cycles, (1.0, 1.0)),),
        base_ops=(vip_ops, attacker_ops),
        bursts=(None, Burst(burst_on, burst_off, burst_amplitude)),
    )
    env = EnvironmentModel(
        curves, schedule, NoiseModel(hr_sigma=hr_sigma, ops_sigma=ops_sigma, seed=seed)
    )
    pool = _pool(total_pages, fixed_frac, [1.0, 1.0], [32, 32])
    return Scenario(
        "pollution_attack",
        env,
        pool,
        ("vip", "attacker"),
        {"vip": 0, "attacker": 1},
        "intermittent scan attack against a shared cache",
    )


@_scenario("stationary_concave")
def _stationary_concave(
    n_tenants=10,
    total_pages=1000,
    fixed_frac=0.1,
    cycles=5000,
    seed=0,
    hr_sigma=0.005,
    ops_sigma=0.01,
):
    """concave curves under a workload that never changes"""
    curves = [
        _exp(0.95 - 0.025 * (i % 10), 40.0 + 12.0 * (i % 10)) for i in range(n_tenants)
    ]
    base_ops = [100.0 * 0.82**i for i in range(n_tenants)]
    schedule = WorkloadSchedule(
        phases=(Phase(cycles, [1.0] * n_tenants),), base_ops=base_ops
    )
    env = EnvironmentModel(
        curves, schedule, NoiseModel(hr_sigma=hr_sigma, ops_sigma=ops_sigma, seed=seed)
    )
    pool = _pool(total_pages, fixed_frac, [1.0] * n_tenants, [10] * n_tenants)
    return Scenario(
        "stationary_concave",
        env,
        pool,
        tuple(f"tenant_{i}" for i in range(n_tenants)),
        {},
        "stationary concave workload for regret measurement",
    )


@_scenario("sshape_stress")
def _sshape_stress(
    n_tenants=4,
    total_pages=800,
    fixed_frac=0.1,
    cycles=2000,
    seed=0,
    hr_sigma=0.01,
    ops_sigma=0.02,
):
    """alternating logistic and exponential curves, so the utility is not
    concave below the logistic midpoints"""
    curves = []
    for i in range(n_tenants):
        if i % 2 == 0:
            curves.append(
                HitRateCurve(
                    CurveKind.LOGISTIC_S_SHAPE, h_max=0.9, scale=25.0, midpoint=150.0
                )
            )
        else:
            curves.append(_exp(0.85, 90.0))
    base_ops = [50.0 + 10.0 * (i % 3) for i in range(n_tenants)]
    schedule = WorkloadSchedule(
        phases=(Phase(cycles, [1.0] * n_tenants),), base_ops=base_ops
    )
    env = EnvironmentModel(
        curves, schedule, NoiseModel(hr_sigma=hr_sigma, ops_sigma=ops_sigma, seed=seed)
    )
    pool = _pool(total_pages, fixed_frac, [1.0] * n_tenants, [10] * n_tenants)
    return Scenario(
        "sshape_stress",
        env,
        pool,
        tuple(f"tenant_{i}" for i in range(n_tenants)),
        {},
        "S-shaped curves that break concavity",
    )


@_scenario("scale_K")
def _scale_k(
    k=20,
    pages_per_tenant=50,
    fixed_frac=0.1,
    cycles=600,
    hot_tenants=4,
    seed=0,
    hr_sigma=0.02,
    ops_sigma=0.05,
):
    """many tenants, a handful of them busy, for decision cost runs"""
    if k < 1:
        raise SamError("scale_K needs at least one tenant")
    curves = [_exp(0.9 - 0.01 * (i % 7), 30.0 + 5.0 * (i % 11)) for i in range(k)]
    base_ops = [
        (200.0 / (1 + i)) if i < hot_tenants else 2.0 + (i % 5) for i in range(k)
    ]
    schedule = WorkloadSchedule(phases=(Phase(cycles, [1.0] * k),), base_ops=base_ops)
    env = EnvironmentModel(
        curves, schedule, NoiseModel(hr_sigma=hr_sigma, ops_sigma=ops_sigma, seed=seed)
    )
    pool = _pool(pages_per_tenant * k, fixed_frac, [1.0] * k, [10] * k)
    return Scenario(
        "scale_K",
        env,
        pool,
        tuple(f"tenant_{i}" for i in range(k)),
        {},
        "many tenants with a few hot ones",
    )


@_scenario("archetypes")
def _archetypes(
    total_pages=1000,
    fixed_frac=0.1,
    cycles=800,
    seed=0,
    hr_sigma=0.0,
    ops_sigma=0.0,
):
    """one saturated, one emerging, one polluting and one quiescent tenant"""
    curves = [
        _exp(0.95, 20.0),
        _exp(0.9, 300.0),
        HitRateCurve(CurveKind.POLLUTER_FLAT, floor=0.05),
        HitRateCurve(CurveKind.QUIESCENT),
    ]
    schedule = WorkloadSchedule(
        phases=(Phase(cycles, [1.0] * 4),), base_ops=(100.0, 60.0, 80.0, 20.0)
    )
    env = EnvironmentModel(
        curves, schedule, NoiseModel(hr_sigma=hr_sigma, ops_sigma=ops_sigma, seed=seed)
    )
    pool = _pool(total_pages, fixed_frac, [1.0] * 4, [25] * 4)
    return Scenario(
        "archetypes",
        env,
        pool,
        ("saturated", "emerging", "polluter", "quiescent"),
        {"saturated": 0, "emerging": 1, "polluter": 2, "quiescent": 3},
        "the four behavioural archetypes side by side",
    )


def _require(tree, key, where):
    try:
        return tree[key]
    except (KeyError, TypeError) as exc:
        raise SamSyntaxError(f"{where}: missing required key '{key}'") from exc


def scenario_from_definition(tree, name="custom"):
    """build a Scenario from a key/value tree, usually a [scenario] table

    see the README for the schema
    """
    pool_def = _require(tree, "pool", "scenario")
    tenants = _require(tree, "tenants", "scenario")
    phases = _require(tree, "phases", "scenario")
    if not isinstance(tenants, Sequence) or not tenants:
        raise SamSyntaxError("scenario.tenants must be a non-empty array of tables")
    if not isinstance(phases, Sequence) or not phases:
        raise SamSyntaxError("scenario.phases must be a non-empty array of tables")

    curves = []
    base_ops = []
    priorities = []
    bounds = []
    sizes = []
    bursts = []
    names = []
    for index, tenant in enumerate(tenants):
        where = f"scenario.tenants[{index}]"
        kind = _require(tenant, "curve", where)
        try:
            curves.append(
                HitRateCurve(
                    kind,
                    h_max=float(tenant.get("h_max", 1.0)),
                    scale=float(tenant.get("scale", 100.0)),
                    midpoint=float(tenant.get("midpoint", 0.0)),
                    floor=float(tenant.get("floor", 0.0)),
                )
            )
        except (SamError, ValueError, TypeError) as exc:
            raise SamSyntaxError(f"{where}: {exc}") from exc
        names.append(str(tenant.get("name", f"tenant_{index}")))
        base_ops.append(float(_require(tenant, "base_ops", where)))
        priorities.append(float(tenant.get("priority", 1.0)))
        bounds.append(int(tenant.get("lower_bound", 0)))
        sizes.append(float(tenant.get("data_size", 0.0)))
        burst = tenant.get("burst")
        bursts.append(
            None
            if burst is None
            else Burst(
                on=int(burst.get("on", 20)),
                off=int(burst.get("off", 20)),
                amplitude=float(burst.get("amplitude", 10.0)),
                start=int(burst.get("start", 0)),
            )
        )

    phase_list = []
    for index, phase in enumerate(phases):
        where = f"scenario.phases[{index}]"
        multipliers = phase.get("multipliers", [1.0] * len(curves))
        phase_list.append(
            Phase(int(_require(phase, "duration", where)), tuple(multipliers))
        )

    noise_def = tree.get("noise", {}) or {}
    try:
        env = EnvironmentModel(
            curves,
            WorkloadSchedule(phase_list, base_ops, bursts),
            NoiseModel(
                hr_sigma=float(noise_def.get("hr_sigma", 0.02)),
                ops_sigma=float(noise_def.get("ops_sigma", 0.05)),
                seed=int(noise_def.get("seed", 0)),
            ),
            hit_latency=float(tree.get("hit_latency", 0.1)),
            miss_latency=float(tree.get("miss_latency", 50.0)),
        )
        pool = PoolConfig(
            total_pages=int(_require(pool_def, "total_pages", "scenario.pool")),
            fixed_pages=int(pool_def.get("fixed_pages", 0)),
            base_priority=priorities,
            lower_bound=bounds,
            data_size=sizes if any(sizes) else None,
        )
    except SamSyntaxError:
        raise
    except SamError as exc:
        raise SamSyntaxError(f"scenario: {exc}") from exc

    roles = {str(key): int(value) for key, value in tree.get("roles", {}).items()}
    return Scenario(name, env, pool, tuple(names), roles, tree.get("description", ""))


def cycles_in_phase(env, index):
    """number of cycles in phase index"""
    return env.schedule.phases[index].duration


def steady_state(cycles: range, fraction=0.5):
    """the trailing fraction of a range of cycles"""
    skip = int(math.floor(len(cycles) * (1.0 - fraction)))
    return cycles[skip:]
