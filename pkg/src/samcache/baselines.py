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
"""allocation laws of the baseline policies

Pure functions of the pool, the latest observations and whatever history
the caller keeps. The policy classes in samcache.policies wrap them with
state.
"""

import heapq
import logging
import warnings

import numpy as np
import scipy.optimize

from .domain import (
    AllocationPlan,
    allocate_slack,
    effective_lower_bounds,
    largest_remainder,
    project_to_feasible,
)
from .exceptions import SamError

log = logging.getLogger(__name__)


def static_average(cfg):
    """bounds plus an even split of the slack"""
    return allocate_slack(cfg)


def fixed_priority(cfg):
    return allocate_slack(cfg, cfg.base_priority)


def datasize_proportional(cfg):
    if cfg.data_size is None:
        raise SamError("the data size baseline needs data_size on every tenant")
    return allocate_slack(cfg, cfg.data_size)


def dynamic_need(ops, hit_rates, cfg):
    """slack in proportion to ops times miss rate"""
    need = np.asarray(ops, dtype=float) * (1.0 - np.clip(hit_rates, 0.0, 1.0))
    return allocate_slack(cfg, need)


def individual_request(pages, hit_rate, ops, bound, target=0.9):
    """pages a tenant asks for on its own to reach target"""
    if ops <= 0:
        return float(bound)
    if hit_rate >= target:
        return float(pages)
    return pages * target / max(hit_rate, 1e-3)


def individual_opt(observations, cfg, target=0.9):
    """every tenant asks for what it wants, requests are scaled to the budget"""
    bounds = effective_lower_bounds(cfg)
    requests = np.array(
        [
            individual_request(obs.current_pages, obs.hit_rate, obs.ops, b, target)
            for obs, b in zip(observations, bounds, strict=True)
        ]
    )
    total = requests.sum()
    if total <= 0:
        return allocate_slack(cfg)
    return project_to_feasible(requests * cfg.total_pages / total, cfg)


def global_lru_occupancy(ops, total_pages):
    """pages each tenant would hold in one pooled LRU cache

    occupancy follows the ops share. No fixed pool and no lower bounds.
    """
    ops = np.clip(np.asarray(ops, dtype=float), 0.0, None)
    if ops.sum() <= 0:
        ops = np.ones(ops.size)
    return AllocationPlan(largest_remainder(total_pages * ops / ops.sum(), total_pages))


def sla_driven(hit_rates, targets, cfg):
    """slack in proportion to how far each tenant is below its target"""
    violation = np.clip(
        np.asarray(targets, dtype=float) - np.asarray(hit_rates, dtype=float), 0.0, None
    )
    return allocate_slack(cfg, violation)


#
# curve fitting
#
def saturating(pages, h_max, scale):
    return h_max * -np.expm1(-np.asarray(pages, dtype=float) / scale)


def fit_saturating(pages, hit_rates):
    """least squares (h_max, scale) of a saturating curve, None if it fails"""
    pages = np.asarray(pages, dtype=float)
    hit_rates = np.asarray(hit_rates, dtype=float)
    if np.unique(pages).size < 3:
        return None
    guess = (max(hit_rates.max(), 1e-3), max(pages.mean(), 1.0))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.optimize.OptimizeWarning)
            params, _ = scipy.optimize.curve_fit(
                saturating,
                pages,
                hit_rates,
                p0=guess,
                bounds=([0.0, 1e-3], [1.0, 1e7]),
                maxfev=2000,
            )
    except (RuntimeError, ValueError) as exc:
        log.warning("saturating curve fit failed: %s", exc)
        return None
    if not np.all(np.isfinite(params)):
        return None
    return float(params[0]), float(params[1])


def greedy_marginal(utilities, cfg, step=1):
    """hand out the slack step pages at a time to the best marginal gain

    utilities is one callable per tenant mapping pages to utility. The
    last partial step goes to whoever is next in line.
    """
    bounds = effective_lower_bounds(cfg)
    pages = [int(b) for b in bounds]
    slack = cfg.total_pages - sum(pages)
    if slack < 0:
        return project_to_feasible(bounds, cfg)

    def gain(tenant):
        now = pages[tenant]
        return utilities[tenant](now + step) - utilities[tenant](now)

    heap = [(-gain(t), t) for t in range(cfg.n_tenants)]
    heapq.heapify(heap)
    while slack > 0:
        _, tenant = heapq.heappop(heap)
        grant = min(step, slack)
        pages[tenant] += grant
        slack -= grant
        heapq.heappush(heap, (-gain(tenant), tenant))
    return AllocationPlan(pages)


def ucp_lookahead(utilities, cfg, chunk=1):
    """utility-based partitioning with lookahead

    each round every tenant reports its best average gain per chunk over
    any number of further chunks, and the winner gets that many chunks.
    Once nobody gains anything, the leftover goes to the tenant that was
    granted the most, lower id first.
    """
    if chunk < 1:
        raise SamError("chunk must be at least 1")
    bounds = effective_lower_bounds(cfg)
    pages = [int(b) for b in bounds]
    slack = cfg.total_pages - sum(pages)
    chunks = max(slack, 0) // chunk
    # table[t][k] is the utility of tenant t holding its bound plus k chunks
    table = [
        np.array([utility(pages[t] + k * chunk) for k in range(chunks + 1)])
        for t, utility in enumerate(utilities)
    ]
    granted = [0] * cfg.n_tenants
    while slack >= chunk:
        best = (0.0, 0, None)
        remaining = slack // chunk
        for tenant, values in enumerate(table):
            have = granted[tenant]
            gains = values[have + 1 : have + remaining + 1] - values[have]
            per_chunk = gains / np.arange(1, gains.size + 1)
            if per_chunk.size == 0:
                continue
            # first count reaching the maximum
            count = int(np.argmax(per_chunk)) + 1
            if per_chunk[count - 1] > best[0] + 1e-12:
                best = (float(per_chunk[count - 1]), count, tenant)
        if best[2] is None:
            break
        _, count, tenant = best
        pages[tenant] += count * chunk
        granted[tenant] += count
        slack -= count * chunk
    if slack > 0:
        winner = max(range(cfg.n_tenants), key=lambda t: (granted[t], -t))
        pages[winner] += slack
    return AllocationPlan(pages)
