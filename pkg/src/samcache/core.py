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
"""online Frank-Wolfe allocation

The heuristic-free controller: a finite-difference gradient estimate from
observed hit rates, a linear minimization oracle over the feasible
polytope, and the classic 2/(t+2) step.
"""

import dataclasses

import numpy as np

from .domain import (
    AllocationPlan,
    effective_lower_bounds,
    project_to_feasible,
)
from .exceptions import InfeasibleConfigurationError, SamError


class GradientEstimator:
    """running mean of observed hit rate per (tenant, page count)

    finite differences read the nearest recorded page counts within
    fd_radius on each side of the current allocation
    """

    def __init__(self, n_tenants, fd_radius=8):
        if fd_radius < 1:
            raise SamError("fd_radius must be at least 1")
        self.fd_radius = fd_radius
        # tenant -> {pages: (count, mean hit rate)}
        self.history = [{} for _ in range(n_tenants)]

    def record(self, tenant, pages, hit_rate):
        count, mean = self.history[tenant].get(pages, (0, 0.0))
        count += 1
        mean += (hit_rate - mean) / count
        self.history[tenant][pages] = (count, mean)

    def mean_at(self, tenant, pages):
        return self.history[tenant][pages][1]

    def neighbour(self, tenant, pages, direction):
        for offset in range(1, self.fd_radius + 1):
            candidate = pages + direction * offset
            if candidate in self.history[tenant]:
                return candidate
        return None

    def slope(self, tenant, pages):
        """estimated d(hit rate)/d(pages) at pages, 0 without history

        two-sided when recorded points exist on both sides, one-sided
        against the current point otherwise
        """
        below = self.neighbour(tenant, pages, -1)
        above = self.neighbour(tenant, pages, +1)
        if below is not None and above is not None:
            return (self.mean_at(tenant, above) - self.mean_at(tenant, below)) / (
                above - below
            )
        if pages not in self.history[tenant]:
            return 0.0
        here = self.mean_at(tenant, pages)
        if above is not None:
            return (self.mean_at(tenant, above) - here) / (above - pages)
        if below is not None:
            return (here - self.mean_at(tenant, below)) / (pages - below)
        return 0.0


@dataclasses.dataclass
class CoreState:
    """the fractional iterate x plus the round counter

    g_bound is the largest gradient norm seen so far, kept for
    diagnostics only
    """

    pool: object
    x: np.ndarray
    estimator: GradientEstimator
    t: int = 0
    g_bound: float = 0.0
    cursor: int = 0

    @classmethod
    def create(cls, pool, fd_radius=8):
        bounds = effective_lower_bounds(pool).astype(float)
        slack = pool.total_pages - bounds.sum()
        if slack < 0:
            raise InfeasibleConfigurationError(
                f"lower bounds need {int(bounds.sum())} pages,"
                f" but only {pool.total_pages} are available"
            )
        x = bounds + slack / pool.n_tenants
        estimator = GradientEstimator(pool.n_tenants, fd_radius)
        return cls(pool=pool, x=x, estimator=estimator)


def stochastic_gradient(state, observations):
    """gradient of the negated utility: -ops * slope of the hit rate

    records the observations in the estimator first
    """
    grad = np.zeros(len(observations))
    for tenant, obs in enumerate(observations):
        state.estimator.record(tenant, obs.current_pages, obs.hit_rate)
    for tenant, obs in enumerate(observations):
        if obs.ops <= 0:
            continue
        grad[tenant] = -obs.ops * state.estimator.slope(tenant, obs.current_pages)
    state.g_bound = max(state.g_bound, float(np.linalg.norm(grad)))
    return grad


def lmo(g, cfg):
    """vertex of the feasible polytope minimizing <g, y>

    every tenant sits at its bound, the whole slack goes to the smallest
    gradient component, lower tenant id on ties
    """
    g = np.asarray(g, dtype=float)
    if g.shape != (cfg.n_tenants,):
        raise SamError(f"gradient has {g.size} entries, pool has {cfg.n_tenants}")
    bounds = effective_lower_bounds(cfg).astype(float)
    slack = cfg.total_pages - bounds.sum()
    if slack < 0:
        raise InfeasibleConfigurationError(
            f"lower bounds need {int(bounds.sum())} pages,"
            f" but only {cfg.total_pages} are available"
        )
    y = bounds.copy()
    # argmin returns the first minimum
    y[int(np.argmin(g))] += slack
    return y


def step_size(t):
    return 2.0 / (t + 2.0)


def ofw_step(state, gradient, cfg=None):
    """one Frank-Wolfe step: move x toward the LMO vertex

    x stays fractional between steps, the returned plan is its rounding
    """
    cfg = cfg or state.pool
    y = lmo(gradient, cfg)
    eta = step_size(state.t)
    state.x = (1.0 - eta) * state.x + eta * y
    state.t += 1
    return project_to_feasible(state.x, cfg)


def _unexplored_side(estimator, tenant, pages, bound):
    """+1 or -1 toward a side with no recorded neighbour, None if both have one"""
    if estimator.neighbour(tenant, pages, +1) is None:
        return 1
    if estimator.neighbour(tenant, pages, -1) is None and pages > bound:
        return -1
    return None


def perturb(state, plan):
    """move one page on the next tenant whose slope is still one-sided

    used when the iterate stalls, so the estimator gets the neighbouring
    points it is missing. Tenants are visited round-robin. Once every
    tenant has recorded points on both sides of its allocation the plan
    comes back unchanged, so exploration dies out as the iterate settles.
    """
    cfg = state.pool
    n = cfg.n_tenants
    if n < 2:
        return plan
    bounds = effective_lower_bounds(cfg)
    pages = list(plan.pages)
    for offset in range(n):
        tenant = (state.cursor + offset) % n
        sign = _unexplored_side(state.estimator, tenant, pages[tenant], bounds[tenant])
        if sign is not None:
            break
    else:
        return plan
    state.cursor = tenant + 1
    if sign > 0:
        donors = [(pages[i] - bounds[i], -i) for i in range(n) if i != tenant]
        room, neg_donor = max(donors)
        if room <= 0:
            return plan
        pages[-neg_donor] -= 1
    else:
        pages[(tenant + 1) % n] += 1
    pages[tenant] += sign
    return AllocationPlan(pages)
