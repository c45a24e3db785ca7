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
"""shared types and budget arithmetic for allocation plans

Everything in here is a pure value type or a pure function, so it can be
used from any number of callers at once.
"""

import dataclasses
import itertools
from collections.abc import Sequence
from enum import Enum

import numpy as np

from .exceptions import InfeasibleConfigurationError, SamError

TenantId = int

# values within this distance below an integer floor to that integer
_FLOOR_EPS = 1e-9


@dataclasses.dataclass(frozen=True)
class PoolConfig:
    """the cache budget and the rules for dividing it between tenants

    total_pages is the whole budget. fixed_pages is reserved and apportioned
    by base_priority, the rest is the elastic pool. lower_bound is the
    minimum total allocation for each tenant, fixed share included.
    data_size is optional and only read by the data size baseline.
    """

    total_pages: int
    fixed_pages: int = 0
    base_priority: tuple[float, ...] = ()
    lower_bound: tuple[int, ...] = ()
    data_size: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "base_priority", tuple(self.base_priority))
        if not self.lower_bound:
            object.__setattr__(self, "lower_bound", (0,) * len(self.base_priority))
        object.__setattr__(
            self, "lower_bound", tuple(int(b) for b in self.lower_bound)
        )
        if self.data_size is not None:
            object.__setattr__(self, "data_size", tuple(self.data_size))

        if self.total_pages < 1:
            raise SamError("total_pages must be at least 1")
        if not 0 <= self.fixed_pages <= self.total_pages:
            raise InfeasibleConfigurationError(
                f"fixed_pages must be between 0 and total_pages ({self.total_pages})"
            )
        if not self.base_priority:
            raise SamError("a pool needs at least one tenant")
        if len(self.lower_bound) != len(self.base_priority):
            raise SamError(
                "base_priority and lower_bound must have one entry per tenant"
            )
        if self.data_size is not None and len(self.data_size) != self.n_tenants:
            raise SamError("data_size must have one entry per tenant")
        if any(w < 0 for w in self.base_priority):
            raise SamError("base_priority values must not be negative")
        if any(b < 0 for b in self.lower_bound):
            raise SamError("lower_bound values must not be negative")

    @classmethod
    def uniform(cls, n_tenants, total_pages, fixed_pages=0, lower_bound=0):
        """a pool where every tenant has the same priority and bound"""
        return cls(
            total_pages=total_pages,
            fixed_pages=fixed_pages,
            base_priority=(1.0,) * n_tenants,
            lower_bound=(lower_bound,) * n_tenants,
        )

    @property
    def n_tenants(self) -> int:
        return len(self.base_priority)

    @property
    def elastic_pages(self) -> int:
        return self.total_pages - self.fixed_pages

    def without_fixed_pool(self):
        """the same pool with everything moved into the elastic pool"""
        return dataclasses.replace(self, fixed_pages=0)


@dataclasses.dataclass(frozen=True)
class AllocationPlan:
    """integer pages for every tenant, fixed share included"""

    pages: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "pages", tuple(int(p) for p in self.pages))

    def __len__(self):
        return len(self.pages)

    def __getitem__(self, tenant):
        return self.pages[tenant]

    def __iter__(self):
        return iter(self.pages)

    @property
    def total(self) -> int:
        return sum(self.pages)

    def as_array(self):
        return np.asarray(self.pages, dtype=float)

    def l1_distance(self, other) -> int:
        return sum(abs(a - b) for a, b in zip(self.pages, other.pages, strict=True))


@dataclasses.dataclass(frozen=True)
class TenantObservation:
    """what one tenant reported for one decision cycle

    true_hit_rate is the noise free rate, which only a simulated environment
    can supply. Policies must not read it.
    """

    ops: float
    hits: float
    misses: float
    hit_rate: float
    current_pages: int
    true_hit_rate: float | None = None

    @classmethod
    def from_counts(cls, ops, hits, misses, current_pages, true_hit_rate=None):
        lookups = hits + misses
        hit_rate = hits / lookups if lookups > 0 else 0.0
        return cls(
            ops=ops,
            hits=hits,
            misses=misses,
            hit_rate=hit_rate,
            current_pages=current_pages,
            true_hit_rate=true_hit_rate,
        )


class ViolationKind(Enum):
    """the constraints validate_plan() checks"""

    def __str__(self):
        return self.value

    COVERAGE = "coverage"
    SUM = "sum"
    LOWER_BOUND = "lower_bound"
    NEGATIVE = "negative"


@dataclasses.dataclass(frozen=True)
class Violation:
    """one broken constraint in a plan

    amount is the number of pages missing: the deficit for SUM (negative
    when the plan overspends), the shortfall below the bound for
    LOWER_BOUND, and the page count for NEGATIVE.
    """

    kind: ViolationKind
    tenant: TenantId | None
    amount: int

    def __str__(self):
        if self.tenant is None:
            return f"{self.kind}: {self.amount}"
        return f"{self.kind}: tenant {self.tenant}: {self.amount}"


def apportion_fixed_pool(cfg):
    """split the fixed pool in proportion to base_priority

    Shares are floored, then the leftover pages go one at a time to tenants
    in descending priority, lower tenant id first on ties.
    """
    n = cfg.n_tenants
    if cfg.fixed_pages == 0:
        return (0,) * n
    weights = np.asarray(cfg.base_priority, dtype=float)
    total_weight = weights.sum()
    if total_weight <= 0:
        raise InfeasibleConfigurationError(
            "base_priority can't be all zero when fixed_pages is greater than zero"
        )
    shares = np.floor(cfg.fixed_pages * weights / total_weight + _FLOOR_EPS)
    shares = shares.astype(int)
    leftover = cfg.fixed_pages - int(shares.sum())
    order = sorted(range(n), key=lambda i: (-weights[i], i))
    for tenant in itertools.islice(itertools.cycle(order), leftover):
        shares[tenant] += 1
    return tuple(int(s) for s in shares)


def effective_lower_bounds(cfg):
    """per tenant max(lower_bound, fixed share) as an integer array"""
    return np.maximum(
        np.asarray(cfg.lower_bound, dtype=int),
        np.asarray(apportion_fixed_pool(cfg), dtype=int),
    )


def largest_remainder(values, total):
    """round reals to integers that add up to total

    Every value is floored, then the missing units are handed out one at a
    time in descending order of fractional part, lower index first on ties.
    """
    vals = np.asarray(values, dtype=float)
    floors = np.floor(vals + _FLOOR_EPS)
    fractions = np.clip(vals - floors, 0.0, None)
    missing = int(round(total - floors.sum()))
    if missing < 0:
        raise SamError(f"values add up to more than {total}")
    order = sorted(range(len(vals)), key=lambda i: (-fractions[i], i))
    for index in itertools.islice(itertools.cycle(order), missing):
        floors[index] += 1
    return tuple(int(x) for x in floors)


def validate_plan(plan, cfg):
    """return a list of every constraint the plan violates, empty if ok"""
    violations = []
    if len(plan) != cfg.n_tenants:
        violations.append(
            Violation(ViolationKind.COVERAGE, None, cfg.n_tenants - len(plan))
        )
        return violations

    deficit = cfg.total_pages - plan.total
    if deficit != 0:
        violations.append(Violation(ViolationKind.SUM, None, deficit))

    bounds = effective_lower_bounds(cfg)
    for tenant, pages in enumerate(plan):
        if pages < 0:
            violations.append(Violation(ViolationKind.NEGATIVE, tenant, pages))
        if pages < bounds[tenant]:
            violations.append(
                Violation(
                    ViolationKind.LOWER_BOUND, tenant, int(bounds[tenant] - pages)
                )
            )
    return violations


def project_to_feasible(raw: Sequence[float], cfg):
    """turn any real allocation into a feasible integer plan

    Values are clamped to the effective lower bounds, the slack above the
    bounds is scaled to exhaust the budget, and the result is rounded with
    largest_remainder(). If nothing sits above the bounds, all the slack
    goes to the tenant with the largest raw value.
    """
    values = np.asarray(raw, dtype=float)
    if values.shape != (cfg.n_tenants,):
        raise SamError(
            f"allocation has {values.size} entries, pool has {cfg.n_tenants} tenants"
        )
    if not np.all(np.isfinite(values)):
        raise SamError("allocation values must be finite")

    bounds = effective_lower_bounds(cfg)
    slack = cfg.total_pages - int(bounds.sum())
    if slack < 0:
        raise InfeasibleConfigurationError(
            f"lower bounds need {int(bounds.sum())} pages,"
            f" but only {cfg.total_pages} are available"
        )

    above = np.maximum(values - bounds, 0.0)
    total_above = above.sum()
    if total_above > 0:
        target = bounds + above * (slack / total_above)
    else:
        target = bounds.astype(float)
        target[int(np.argmax(values))] += slack
    return AllocationPlan(largest_remainder(target, cfg.total_pages))


def allocate_slack(cfg, weights=None):
    """give every tenant its bound plus slack in proportion to weights

    With no weights, or weights that are all zero, the slack is split
    evenly and the remainder goes to lower tenant ids.
    """
    bounds = effective_lower_bounds(cfg)
    slack = cfg.total_pages - int(bounds.sum())
    if slack < 0:
        raise InfeasibleConfigurationError(
            f"lower bounds need {int(bounds.sum())} pages,"
            f" but only {cfg.total_pages} are available"
        )
    if weights is None:
        shares = np.ones(cfg.n_tenants)
    else:
        shares = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        if not np.all(np.isfinite(shares)) or shares.sum() <= 0:
            shares = np.ones(cfg.n_tenants)
    target = bounds + slack * shares / shares.sum()
    return AllocationPlan(largest_remainder(target, cfg.total_pages))


@dataclasses.dataclass(frozen=True)
class DecisionInfo:
    """bookkeeping a policy reports with every decision

    touched is the number of tenants the decision step scored or moved,
    heap_ops counts bounded-heap operations, scores holds the per-tenant
    score where the policy has one (nan for tenants it did not evaluate).
    """

    global_scan: bool = True
    active_size: int = 0
    touched: int = 0
    heap_ops: int = 0
    alpha: float | None = None
    scores: tuple[float, ...] | None = None
