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
"""hindsight-optimal allocation

Profiles every tenant's hit rate over a grid of allocations for one phase
of a scenario, turns the profiles into a multiple-choice knapsack and
solves it exactly with a dynamic program over page chunks.

Nothing in here is available to an online policy.
"""

import dataclasses
import itertools
import logging
import math

import numpy as np
import pandas as pd
import scipy.optimize

from .domain import AllocationPlan, effective_lower_bounds
from .exceptions import InfeasibleConfigurationError, SamError
from .simenv import CurveKind, steady_state

log = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class ProfiledCurve:
    """measured hit rate at each grid allocation, plus the phase mean ops"""

    grid: tuple[int, ...]
    hr_at: tuple[float, ...]
    ops: float

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(int(g) for g in self.grid))
        object.__setattr__(self, "hr_at", tuple(float(h) for h in self.hr_at))
        if len(self.grid) != len(self.hr_at) or not self.grid:
            raise SamError("a profile needs one hit rate per grid point")
        if any(b <= a for a, b in itertools.pairwise(self.grid)):
            raise SamError("profile grid must be strictly ascending")

    def hit_rate(self, pages):
        """linear interpolation between grid points, flat beyond the ends"""
        return float(np.interp(pages, self.grid, self.hr_at))

    def value(self, pages):
        return self.ops * self.hit_rate(pages)


@dataclasses.dataclass(frozen=True)
class MckpInstance:
    """pick exactly one (pages, value) item from every group

    weights are in pages and are multiples of chunk, budget is in pages
    """

    groups: tuple[tuple[tuple[int, float], ...], ...]
    budget: int
    chunk: int = 1

    def __post_init__(self):
        object.__setattr__(
            self,
            "groups",
            tuple(
                tuple(sorted((int(w), float(v)) for w, v in group))
                for group in self.groups
            ),
        )
        if self.chunk < 1:
            raise SamError("chunk must be at least 1")
        if not self.groups or any(not group for group in self.groups):
            raise SamError("every group needs at least one item")
        for group in self.groups:
            for weight, _ in group:
                if weight < 0 or weight % self.chunk:
                    raise SamError(
                        f"item weight {weight} is not a multiple of chunk {self.chunk}"
                    )


def default_chunk(total_pages):
    return max(1, total_pages // 64)


def profile_grid(cfg, chunk):
    """multiples of chunk up to the budget, plus the budget and every bound"""
    points = set(range(0, cfg.total_pages + 1, chunk))
    points.add(cfg.total_pages)
    points.update(int(b) for b in effective_lower_bounds(cfg))
    return tuple(sorted(points))


def _isotonic(values):
    return scipy.optimize.isotonic_regression(values, increasing=True).x


def profile_phase(env, phase, grid, seeds=5, samples=50):
    """measure every tenant's steady-state hit rate at every grid allocation

    a noise free environment is measured once, a noisy one is averaged over
    seeds. Each measurement samples up to samples cycles from the second
    half of the phase. Returns one ProfiledCurve per tenant, made
    non-decreasing by isotonic regression.
    """
    grid = tuple(int(g) for g in grid)
    cycles = steady_state(env.schedule.phase_range(phase))
    if len(cycles) > samples:
        picks = np.linspace(0, len(cycles) - 1, samples).round().astype(int)
        cycles = [cycles[i] for i in sorted(set(picks))]
    runs = [env] if env.noise.silent else [
        env.with_noise(seed=env.noise.seed + offset) for offset in range(seeds)
    ]
    if len(runs) > 1:
        log.debug("averaging profiles over %d seeds", len(runs))

    n = env.n_tenants
    measured = np.zeros((n, len(grid)))
    for column, pages in enumerate(grid):
        allocation = np.full(n, pages)
        total = np.zeros(n)
        for run in runs:
            for cycle in cycles:
                _, observed, _ = run.observe(allocation, cycle)
                total += observed
        measured[:, column] = total / (len(runs) * len(cycles))

    phase_cycles = env.schedule.phase_range(phase)
    mean_ops = np.mean([env.schedule.mean_ops(c) for c in phase_cycles], axis=0)
    profiles = []
    for tenant in range(n):
        ops = mean_ops[tenant]
        if env.curves[tenant].kind is CurveKind.QUIESCENT:
            ops = 0.0
        profiles.append(ProfiledCurve(grid, _isotonic(measured[tenant]), float(ops)))
    return profiles


def write_profiles(profiles, fobj):
    """write profiles as CSV rows of tenant, pages, hit_rate, ops"""
    rows = [
        {"tenant": tenant, "pages": pages, "hit_rate": hr, "ops": profile.ops}
        for tenant, profile in enumerate(profiles)
        for pages, hr in zip(profile.grid, profile.hr_at, strict=True)
    ]
    pd.DataFrame(rows, columns=["tenant", "pages", "hit_rate", "ops"]).to_csv(
        fobj, index=False
    )


def read_profiles(fobj):
    frame = pd.read_csv(fobj)
    missing = {"tenant", "pages", "hit_rate", "ops"} - set(frame.columns)
    if missing:
        raise SamError(f"profile file is missing columns: {', '.join(sorted(missing))}")
    profiles = []
    for _, rows in frame.sort_values(["tenant", "pages"]).groupby("tenant"):
        profiles.append(
            ProfiledCurve(
                tuple(rows["pages"]),
                tuple(rows["hit_rate"]),
                float(rows["ops"].iloc[0]),
            )
        )
    return profiles


def build_instance(profiles, cfg, chunk=None):
    """an MCKP with one group per tenant over chunk multiples above its bound"""
    chunk = chunk or default_chunk(cfg.total_pages)
    if len(profiles) != cfg.n_tenants:
        raise SamError(f"expected {cfg.n_tenants} profiles, got {len(profiles)}")
    bounds = effective_lower_bounds(cfg)
    groups = []
    for profile, bound in zip(profiles, bounds, strict=True):
        first = math.ceil(bound / chunk)
        last = cfg.total_pages // chunk
        if first > last:
            raise InfeasibleConfigurationError(
                f"lower bound {bound} does not fit in {cfg.total_pages} pages"
            )
        groups.append(
            tuple((k * chunk, profile.value(k * chunk)) for k in range(first, last + 1))
        )
    return MckpInstance(tuple(groups), cfg.total_pages, chunk)


def _last_marginal(group, weight):
    """value gained per page by the chosen item over the next lighter one"""
    previous = None
    for item_weight, value in group:
        if item_weight == weight:
            if previous is None:
                return value / weight if weight else 0.0
            return (value - previous[1]) / (weight - previous[0])
        previous = (item_weight, value)
    raise SamError(f"no item of weight {weight}")  # pragma: nocover


def solve_mckp(inst):
    """exact optimum of an MCKP instance by dynamic programming

    the table runs over groups and chunks of budget. Pages the chosen items
    leave unused go to the group whose chosen item had the highest
    marginal value, lower index first. Returns (plan, value).
    """
    capacity = inst.budget // inst.chunk
    minimum = sum(group[0][0] for group in inst.groups) // inst.chunk
    if minimum > capacity:
        raise InfeasibleConfigurationError(
            f"cheapest choice needs {minimum * inst.chunk} pages,"
            f" budget is {inst.budget}"
        )

    # best[b] is the best value with exactly b chunks spent so far
    best = np.full(capacity + 1, -np.inf)
    best[0] = 0.0
    choices = []
    for group in inst.groups:
        nxt = np.full(capacity + 1, -np.inf)
        pick = np.full(capacity + 1, -1, dtype=int)
        for index, (weight, value) in enumerate(group):
            units = weight // inst.chunk
            if units > capacity:
                continue
            candidate = np.full(capacity + 1, -np.inf)
            candidate[units:] = best[: capacity + 1 - units] + value
            better = candidate > nxt
            nxt[better] = candidate[better]
            pick[better] = index
        best = nxt
        choices.append(pick)

    spent = int(np.argmax(best))
    value = float(best[spent])
    chosen = []
    for group, pick in zip(reversed(inst.groups), reversed(choices), strict=True):
        index = int(pick[spent])
        chosen.append(group[index][0])
        spent -= group[index][0] // inst.chunk
    chosen.reverse()

    pages = list(chosen)
    leftover = inst.budget - sum(pages)
    if leftover:
        marginals = [
            _last_marginal(group, weight)
            for group, weight in zip(inst.groups, chosen, strict=True)
        ]
        winner = max(range(len(pages)), key=lambda g: (marginals[g], -g))
        log.debug("oracle gives %d leftover pages to group %d", leftover, winner)
        pages[winner] += leftover
    return AllocationPlan(pages), value


def enumerate_mckp(inst):
    """exhaustive MCKP reference, returns (weights, value)"""
    best_value = -math.inf
    best_choice = None
    for combo in itertools.product(*inst.groups):
        if sum(weight for weight, _ in combo) > inst.budget:
            continue
        value = sum(v for _, v in combo)
        if value > best_value:
            best_value = value
            best_choice = tuple(weight for weight, _ in combo)
    if best_choice is None:
        raise InfeasibleConfigurationError("no choice fits the budget")
    return best_choice, best_value


def phase_utility(env, phase, pages):
    """phase-mean ops times ground-truth hit rate, summed over tenants"""
    cycles = env.schedule.phase_range(phase)
    mean_ops = np.mean([env.schedule.mean_ops(c) for c in cycles], axis=0)
    for tenant, curve in enumerate(env.curves):
        if curve.kind is CurveKind.QUIESCENT:
            mean_ops[tenant] = 0.0
    return float(np.dot(mean_ops, env.true_rates(pages)))


def brute_force_best(env, phase, cfg, max_budget=64, max_tenants=3):
    """best integral plan by trying every one, for tiny instances only"""
    if cfg.total_pages > max_budget or cfg.n_tenants > max_tenants:
        raise SamError(
            f"brute force is limited to {max_tenants} tenants"
            f" and {max_budget} pages"
        )
    bounds = [int(b) for b in effective_lower_bounds(cfg)]
    slack = cfg.total_pages - sum(bounds)
    if slack < 0:
        raise InfeasibleConfigurationError("lower bounds exceed the budget")
    best = None
    for extra in itertools.product(range(slack + 1), repeat=cfg.n_tenants - 1):
        last = slack - sum(extra)
        if last < 0:
            continue
        pages = [b + e for b, e in zip(bounds, (*extra, last), strict=True)]
        value = phase_utility(env, phase, pages)
        if best is None or value > best[1] + 1e-12:
            best = (AllocationPlan(pages), value)
    return best


def phase_oracle(scenario, phase, chunk=None, seeds=5):
    """(plan, value) of the hindsight optimum for one phase of a scenario"""
    cfg = scenario.pool
    chunk = chunk or default_chunk(cfg.total_pages)
    profiles = profile_phase(scenario.env, phase, profile_grid(cfg, chunk), seeds=seeds)
    return solve_mckp(build_instance(profiles, cfg, chunk))


def true_profiles(env, phase, grid):
    """profiles read straight off the ground-truth curves"""
    cycles = env.schedule.phase_range(phase)
    mean_ops = np.mean([env.schedule.mean_ops(c) for c in cycles], axis=0)
    profiles = []
    for tenant, curve in enumerate(env.curves):
        ops = 0.0 if curve.kind is CurveKind.QUIESCENT else float(mean_ops[tenant])
        profiles.append(ProfiledCurve(grid, curve.evaluate(np.asarray(grid)), ops))
    return profiles
