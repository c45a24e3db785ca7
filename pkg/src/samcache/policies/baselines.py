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
"""baseline policies B1 to B14"""

import logging

import numpy as np

from .. import baselines, oracle
from ..domain import DecisionInfo, allocate_slack
from ..exceptions import SamError
from .base import PolicyBase, StaticPolicy

log = logging.getLogger(__name__)


def _all_touched(n):
    return DecisionInfo(global_scan=True, active_size=n, touched=n)


class B1StaticAverage(StaticPolicy):
    """equal split of the elastic pool, never changes"""

    def static_plan(self):
        return baselines.static_average(self.pool)


class B2FixedPriority(StaticPolicy):
    """elastic pool split by base priority, never changes"""

    def static_plan(self):
        return baselines.fixed_priority(self.pool)


class B6DatasizeProp(StaticPolicy):
    """elastic pool split by configured data size, never changes"""

    def static_plan(self):
        return baselines.datasize_proportional(self.pool)


class B4IndividualOpt(PolicyBase):
    """every tenant greedily asks for the pages it needs to reach a target"""

    defaults = {"target": 0.9}

    def decide(self, observations, current, cycle):
        plan = baselines.individual_opt(observations, self.pool, self.params["target"])
        return plan, _all_touched(len(observations))


class B5GlobalLruProxy(PolicyBase):
    """one pooled cache, occupancy in proportion to ops"""

    enforces_bounds = False
    note = "closed-form occupancy proxy of a global LRU, ignores lower bounds"

    def initial_plan(self):
        return baselines.global_lru_occupancy(
            np.ones(self.pool.n_tenants), self.pool.total_pages
        )

    def decide(self, observations, current, cycle):
        plan = baselines.global_lru_occupancy(
            [obs.ops for obs in observations], self.pool.total_pages
        )
        return plan, _all_touched(len(observations))


class B7DynamicNeed(PolicyBase):
    """elastic pool in proportion to fast ops EMA times miss rate"""

    defaults = {"lambda_fast": 0.5}

    def __init__(self, scenario, **params):
        super().__init__(scenario, **params)
        self.ema_ops = None

    def decide(self, observations, current, cycle):
        ops = np.array([obs.ops for obs in observations])
        if self.ema_ops is None:
            self.ema_ops = ops
        else:
            rate = self.params["lambda_fast"]
            self.ema_ops = (1.0 - rate) * self.ema_ops + rate * ops
        hit_rates = [obs.hit_rate for obs in observations]
        plan = baselines.dynamic_need(self.ema_ops, hit_rates, self.pool)
        return plan, _all_touched(len(observations))


class B12SlaDriven(PolicyBase):
    """undamped reaction to hit rate SLA violations"""

    defaults = {"sla_targets": 0.9}
    note = (
        "simplified SLA-driven law: slack in proportion to the shortfall"
        " below target, applied at full magnitude every cycle"
    )

    def __init__(self, scenario, **params):
        super().__init__(scenario, **params)
        targets = self.params["sla_targets"]
        n = scenario.pool.n_tenants
        if isinstance(targets, int | float):
            targets = [float(targets)] * n
        if len(targets) != n:
            raise SamError(f"sla_targets needs {n} entries")
        self.targets = np.asarray(targets, dtype=float)

    def decide(self, observations, current, cycle):
        hit_rates = [obs.hit_rate for obs in observations]
        plan = baselines.sla_driven(hit_rates, self.targets, self.pool)
        return plan, _all_touched(len(observations))


class _ProbingPolicy(PolicyBase, register=False):
    """Base for policies that learn curves from the plans they play

    During warm-up every tenant is probed at three levels of its even share
    until it holds three distinct observations.
    """

    PROBE_LEVELS = (1.0, 0.75, 1.25)

    def __init__(self, scenario, **params):
        super().__init__(scenario, **params)
        n = scenario.pool.n_tenants
        # tenant -> {pages: (count, mean hit rate)}
        self.points = [{} for _ in range(n)]
        self.ema_ops = np.zeros(n)
        self.seen = 0

    def record(self, observations):
        rate = self.params["lambda_ops"]
        ops = np.array([obs.ops for obs in observations])
        self.ema_ops = ops if self.seen == 0 else (1 - rate) * self.ema_ops + rate * ops
        self.seen += 1
        for tenant, obs in enumerate(observations):
            count, mean = self.points[tenant].get(obs.current_pages, (0, 0.0))
            count += 1
            mean += (obs.hit_rate - mean) / count
            self.points[tenant][obs.current_pages] = (count, mean)

    @property
    def explored(self):
        return all(len(points) >= 3 for points in self.points)

    def probe_plan(self, round_index):
        """even share times a probe level, mirrored on odd tenants"""
        level = self.PROBE_LEVELS[round_index % len(self.PROBE_LEVELS)]
        n = self.pool.n_tenants
        factors = [level if t % 2 == 0 else 2.0 - level for t in range(n)]
        return allocate_slack(self.pool, factors)

    def decide(self, observations, current, cycle):
        self.record(observations)
        n = len(observations)
        if not self.explored:
            if self.seen <= self.params["warmup"]:
                return self.probe_plan(self.seen), _all_touched(n)
            log.debug("%s: warm-up ended without enough points", self.policy_name)
            return baselines.static_average(self.pool), _all_touched(n)
        return self.learned_plan(current), _all_touched(n)

    def learned_plan(self, current):
        """the plan from the curves learned so far"""
        raise NotImplementedError  # pragma: nocover


class B11Regression(_ProbingPolicy):
    """fits a saturating curve per tenant and allocates by marginal gain"""

    defaults = {"warmup": 9, "refit_every": 10, "lambda_ops": 0.1}

    def __init__(self, scenario, **params):
        super().__init__(scenario, **params)
        self.last_fit = None
        self.fitted_plan = None

    def _utility(self, tenant):
        points = self.points[tenant]
        pages = sorted(points)
        rates = np.array([points[p][1] for p in pages])
        ops = self.ema_ops[tenant]
        if ops <= 0 or rates.max() <= 1e-9:
            return lambda c: 0.0
        fit = baselines.fit_saturating(pages, rates)
        if fit is None:
            return None
        h_max, scale = fit
        return lambda c: ops * float(baselines.saturating(c, h_max, scale))

    def learned_plan(self, current):
        due = self.last_fit is None or self.seen - self.last_fit >= self.params[
            "refit_every"
        ]
        if not due and self.fitted_plan is not None:
            return self.fitted_plan
        self.last_fit = self.seen
        utilities = [self._utility(t) for t in range(self.pool.n_tenants)]
        if any(u is None for u in utilities):
            return current
        self.fitted_plan = baselines.greedy_marginal(utilities, self.pool)
        return self.fitted_plan


class B13Ucp(_ProbingPolicy):
    """utility-based cache partitioning with lookahead over page chunks"""

    defaults = {"warmup": 9, "chunk": 0, "lambda_ops": 0.1}

    def __init__(self, scenario, **params):
        super().__init__(scenario, **params)
        self.chunk = self.params["chunk"] or oracle.default_chunk(
            scenario.pool.total_pages
        )

    def estimated_hit_rate(self, tenant, pages):
        """interpolated between visited points, linear beyond them"""
        points = self.points[tenant]
        xs = np.array(sorted(points), dtype=float)
        ys = np.maximum.accumulate([points[int(x)][1] for x in xs])
        if pages <= xs[0]:
            return float(ys[0])
        if pages >= xs[-1]:
            slope = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2]) if xs.size > 1 else 0.0
            return float(np.clip(ys[-1] + max(slope, 0.0) * (pages - xs[-1]), 0, 1))
        return float(np.interp(pages, xs, ys))

    def learned_plan(self, current):
        utilities = [
            (lambda c, t=t: self.ema_ops[t] * self.estimated_hit_rate(t, c))
            for t in range(self.pool.n_tenants)
        ]
        return baselines.ucp_lookahead(utilities, self.pool, self.chunk)


class B14HindsightOpt(PolicyBase):
    """plays the per-phase knapsack optimum from offline profiling"""

    defaults = {"chunk": 0, "seeds": 5}
    note = "hindsight reference, not an online policy"

    def __init__(self, scenario, **params):
        super().__init__(scenario, **params)
        chunk = self.params["chunk"] or None
        self.plans = [
            oracle.phase_oracle(scenario, phase, chunk, self.params["seeds"])[0]
            for phase in range(len(scenario.env.schedule.phases))
        ]

    def initial_plan(self):
        return self.plans[0]

    def decide(self, observations, current, cycle):
        schedule = self.scenario.env.schedule
        upcoming = min(cycle + 1, schedule.total_cycles - 1)
        return self.plans[schedule.phase_at(upcoming)], DecisionInfo(global_scan=False)
