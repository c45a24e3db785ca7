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
"""the AURA control policy

Dual-factor scoring (historical efficiency H blended with marginal
potential V by a meta-adaptive alpha), the Adaptive Active Set state
machine with knee point detection, and the momentum allocator with its
significance gate.

run_decision_cycle() is one Sense-Decide-Act decision. It is a single
sequential critical section over a CoordinatorState.
"""

import collections
import dataclasses
import heapq
import logging
import math

import numpy as np

from . import signals
from .domain import (
    AllocationPlan,
    DecisionInfo,
    effective_lower_bounds,
    largest_remainder,
    project_to_feasible,
)
from .exceptions import SamError

log = logging.getLogger(__name__)


@dataclasses.dataclass(frozen=True)
class AuraParams:
    """tunables of the AURA policy

    The disable_* and fast_h flags turn AURA into its ablations.
    min_score is the score below which an active tenant gets no slack
    beyond its bounds. scan_ops_jump forces a global scan when a tenant
    grows its slow ops EMA by that factor since the last scan; only tenants
    outside the active set count unless the AAS is off. swap_margin is how
    far a newcomer must stand apart from the installed set before a
    convergence scan replaces it.
    """

    k_max: int = 8
    window_W: int = 5
    conv_rel_eps: float = 0.01
    equilibrium_eps: float = 0.05
    alpha_min: float = 0.3
    alpha_max: float = 0.9
    alpha_smooth: float = 0.2
    beta_momentum: float = 0.3
    eta0: float = 1.0
    step_decay_tau: float = 50.0
    max_step_frac: float = 0.05
    gate_frac: float = 0.01
    bottom_quota_divisor: int = 4
    inactivity_cap: int = 100
    aas_min_tenants: int = 10
    kappa_eps: float = 1e-6
    min_score: float = 0.05
    scan_ops_jump: float = 2.0
    swap_margin: float = 0.05
    disable_h: bool = False
    disable_v: bool = False
    fast_h: bool = False
    disable_fixed_pool: bool = False
    disable_aas: bool = False
    signal_params: signals.SignalParams = signals.SignalParams()

    def __post_init__(self):
        if not 0.0 <= self.alpha_min <= self.alpha_max <= 1.0:
            raise SamError("alpha_min and alpha_max must satisfy 0 <= min <= max <= 1")
        if not 0.0 < self.beta_momentum <= 1.0:
            raise SamError("beta_momentum must be in (0, 1]")
        if self.k_max < 1 or self.window_W < 1 or self.bottom_quota_divisor < 1:
            raise SamError("k_max, window_W and bottom_quota_divisor must be positive")
        if self.step_decay_tau <= 0 or self.eta0 <= 0:
            raise SamError("eta0 and step_decay_tau must be greater than 0")
        if self.disable_h and self.disable_v:
            raise SamError("disable_h and disable_v can't both be set")
        if self.swap_margin < 0:
            raise SamError("swap_margin can't be negative")


@dataclasses.dataclass
class CoordinatorState:
    """AURA's global state between decision cycles"""

    pool: object
    params: AuraParams
    signal_states: list
    active_set: tuple = ()
    top_candidates: list = dataclasses.field(default_factory=list)
    bottom_candidates: list = dataclasses.field(default_factory=list)
    score_window: collections.deque = None
    inactivity_timer: int = 0
    alpha_prev: float = 0.0
    momentum: np.ndarray = None
    cycle: int = 0
    step_clock: float = 0.0
    top_part: tuple = ()
    scan_backoff: int = 0
    cycles_since_scan: int = 0
    last_aggregate: float | None = None
    ops_at_scan: np.ndarray = None

    @classmethod
    def create(cls, pool, params):
        """a cold coordinator for pool, with nothing observed yet"""
        if params.disable_fixed_pool:
            pool = pool.without_fixed_pool()
        n = pool.n_tenants
        return cls(
            pool=pool,
            params=params,
            signal_states=[signals.TenantSignalState() for _ in range(n)],
            score_window=collections.deque(maxlen=params.window_W),
            alpha_prev=0.5 * (params.alpha_min + params.alpha_max),
            momentum=np.zeros(n),
            scan_backoff=params.window_W,
            ops_at_scan=np.zeros(n),
        )

    @property
    def aas_enabled(self) -> bool:
        return (
            not self.params.disable_aas
            and self.pool.n_tenants >= self.params.aas_min_tenants
        )


#
# scoring
#
def h_factor(states, fast=False):
    """historical efficiency: min-max normalized ops times hit rate"""
    ops = np.array([s.ema_ops_fast if fast else s.ema_ops_slow for s in states])
    low, high = ops.min(), ops.max()
    if high > low:
        norm_ops = (ops - low) / (high - low)
    else:
        norm_ops = (ops > 0).astype(float)
    hr_norm = np.clip([s.ema_hr_slow for s in states], 0.0, 1.0)
    return norm_ops * hr_norm


def v_factor(states, params):
    """marginal potential: saturation discounted gradients, p90 normalized"""
    return signals.p90_normalize([s.v_influence for s in states], params.p90_floor)


def meta_alpha(alpha_prev, v_values, params):
    """smoothed exploitation weight driven by the dispersion of V

    high dispersion means the gradient signal is unreliable, which pushes
    alpha up toward alpha_max
    """
    v = np.asarray(v_values, dtype=float)
    if v.size == 0:
        raise SamError("meta_alpha needs at least one V value")
    kappa = float(v.var() / (v.mean() ** 2 + params.kappa_eps))
    squashed = kappa / (1.0 + kappa)
    target = params.alpha_min + (params.alpha_max - params.alpha_min) * squashed
    alpha = (1.0 - params.alpha_smooth) * alpha_prev + params.alpha_smooth * target
    return min(params.alpha_max, max(params.alpha_min, alpha))


def score(h, v, alpha, params):
    """alpha * H + (1 - alpha) * V, or a single factor for the ablations"""
    h = np.asarray(h, dtype=float)
    v = np.asarray(v, dtype=float)
    if params.disable_h:
        return v.copy()
    if params.disable_v:
        return h.copy()
    return alpha * h + (1.0 - alpha) * v


#
# adaptive active set
#
def two_way_heap_filter(scored, k_max):
    """the k_max highest and k_max lowest scoring tenants

    scored is an iterable of (tenant, score). Returns (top, bottom,
    heap_ops): top sorted by descending score, bottom by ascending score,
    lower tenant id first on ties in both. Two bounded heaps keep the work
    at O(K log k_max).
    """
    top = []
    bottom = []
    heap_ops = 0
    depth = max(1, math.ceil(math.log2(k_max + 1)))
    for tenant, value in scored:
        value = float(value)
        top_item = (value, -tenant)
        bottom_item = (-value, -tenant)
        if len(top) < k_max:
            heapq.heappush(top, top_item)
            heap_ops += depth
        elif top_item > top[0]:
            heapq.heapreplace(top, top_item)
            heap_ops += depth
        else:
            heap_ops += 1
        if len(bottom) < k_max:
            heapq.heappush(bottom, bottom_item)
            heap_ops += depth
        elif bottom_item > bottom[0]:
            heapq.heapreplace(bottom, bottom_item)
            heap_ops += depth
        else:
            heap_ops += 1
    top_sorted = [(-neg_id, value) for value, neg_id in sorted(top, reverse=True)]
    bottom_sorted = [
        (-neg_id, -neg_value) for neg_value, neg_id in sorted(bottom, reverse=True)
    ]
    return top_sorted, bottom_sorted, heap_ops


def find_knee_point(scores):
    """1-based index of the point farthest from the chord of a descending curve"""
    values = np.asarray(scores, dtype=float)
    n = values.size
    if n == 0:
        raise SamError("can't find the knee of an empty list")
    if n <= 2:
        return 1
    x = np.arange(1, n + 1, dtype=float)
    rise = values[-1] - values[0]
    run = float(n - 1)
    chord = rise * x - run * values + n * values[0] - values[-1]
    distance = np.abs(chord) / math.hypot(rise, run)
    best = distance.max()
    if best <= 1e-12:
        return 1
    return int(np.flatnonzero(distance >= best - 1e-12)[0]) + 1


def compose_set(top, bottom, k_demand, params):
    """first k_demand of top plus a quota of bottom, no tenant twice"""
    k_demand = max(1, min(k_demand, len(top)))
    chosen = [tenant for tenant, _ in top[:k_demand]]
    quota = math.ceil(k_demand / params.bottom_quota_divisor)
    for tenant, _ in bottom[:quota]:
        if tenant not in chosen:
            chosen.append(tenant)
    return tuple(chosen)


def is_converged(state, params):
    if state.inactivity_timer > params.inactivity_cap:
        return True
    if len(state.score_window) < params.window_W:
        return False
    return max(abs(delta) for delta in state.score_window) < params.conv_rel_eps


def is_equilibrium(top, bottom, params):
    """True when no meaningful reallocation opportunity exists

    compares the weakest of the top candidates with the strongest of the
    bottom ones. When the lists overlap, which happens with fewer than
    2 * k_max tenants, the whole spread of scores is compared instead.
    """
    if not top or not bottom:
        raise SamError("equilibrium check needs non-empty candidate lists")
    top_ids = {tenant for tenant, _ in top}
    if top_ids.intersection(tenant for tenant, _ in bottom):
        spread = top[0][1] - bottom[0][1]
    else:
        spread = top[-1][1] - bottom[-1][1]
    return spread < params.equilibrium_eps


#
# momentum allocator
#
def step_size(state, params):
    return params.eta0 / (1.0 + state.step_clock / params.step_decay_tau)


def restart_step_decay(state, params, shift=False):
    """wind the step clock back to at most tau after a new active set

    a detected load shift also drops the momentum, the old direction
    belongs to the previous workload
    """
    state.step_clock = min(state.step_clock, params.step_decay_tau)
    if shift:
        state.momentum = np.zeros_like(state.momentum)


def optimize_in_active_set(state, scores, current, params):
    """move the active tenants toward score-proportional elastic shares

    scores maps each active tenant to its score. Tenants outside the
    active set keep their pages. The movement is filtered through
    momentum, a decaying step size and a per-tenant step clamp, and is
    dropped entirely when it is smaller than the significance gate.
    """
    pool = state.pool
    bounds = effective_lower_bounds(pool).astype(float)
    now = current.as_array()
    n = pool.n_tenants

    active = np.zeros(n, dtype=bool)
    members = sorted(scores)
    active[members] = True
    weights = np.array([scores[t] for t in members], dtype=float)
    weights = np.where(weights >= params.min_score, weights, 0.0)

    target = now.copy()
    if weights.sum() > 0:
        held = np.clip(now[members] - bounds[members], 0.0, None).sum()
        target[members] = bounds[members] + held * weights / weights.sum()
    gap = np.where(active, target - now, 0.0)

    beta = params.beta_momentum
    state.momentum = np.where(active, (1.0 - beta) * state.momentum + beta * gap, 0.0)

    max_step = max(1, math.floor(params.max_step_frac * pool.elastic_pages))
    step = np.clip(step_size(state, params) * state.momentum, -max_step, max_step)
    step = np.where(active, np.maximum(step, bounds - now), 0.0)

    # the active tenants trade pages, they never create or destroy them
    gains = step[step > 0].sum()
    losses = -step[step < 0].sum()
    if gains > losses:
        step = np.where(step > 0, step * (losses / gains), step)
    elif losses > gains:
        step = np.where(step < 0, step * (gains / losses), step)

    moves = np.asarray(largest_remainder(step, 0), dtype=float)
    if np.abs(moves).sum() < params.gate_frac * pool.elastic_pages:
        return current
    return project_to_feasible(now + moves, pool)


#
# the decision cycle
#
def _evaluate(state, members, params):
    """(H, V, scores) for an evaluation set, updating alpha_prev"""
    states = [state.signal_states[t] for t in members]
    h = h_factor(states, fast=params.fast_h)
    v = v_factor(states, params.signal_params)
    state.alpha_prev = meta_alpha(state.alpha_prev, v, params)
    return h, v, score(h, v, state.alpha_prev, params)


def ops_jumped(state, params):
    """did a tenant grow its load sharply since the last scan

    with the AAS on only tenants outside the active set are watched, the
    members already trade pages every cycle
    """
    inside = set(state.active_set) if state.aas_enabled else set()
    for tenant, sig in enumerate(state.signal_states):
        if tenant in inside:
            continue
        before = state.ops_at_scan[tenant]
        if sig.ema_ops_slow > 0 and sig.ema_ops_slow > params.scan_ops_jump * before:
            return True
    return False


def _remember_ops(state):
    state.ops_at_scan = np.array([s.ema_ops_slow for s in state.signal_states])


def replaces_active_set(state, chosen, top_part, all_scores, params):
    """does a freshly composed set beat the installed one by a clear margin

    a newcomer in the top part must outscore the weakest installed top
    member by swap_margin. A newcomer taken for the bottom quota must score
    swap_margin below every installed member. Anything closer is noise.
    """
    if not state.active_set:
        return True
    installed = set(state.active_set)
    newcomers = [tenant for tenant in chosen if tenant not in installed]
    top_floor = min(all_scores[t] for t in state.top_part or state.active_set)
    member_floor = min(all_scores[t] for t in state.active_set)
    for tenant in newcomers:
        if tenant in top_part:
            if all_scores[tenant] >= top_floor + params.swap_margin:
                return True
        elif all_scores[tenant] <= member_floor - params.swap_margin:
            return True
    return False


def _global_scan(state, params, shift=False):
    """score everybody and maybe install a new active set

    shift means a load jump forced this scan, the composed set is then
    installed without the swap_margin test. Returns (scores over all
    tenants, heap ops, equilibrium flag).
    """
    everyone = list(range(state.pool.n_tenants))
    _, _, all_scores = _evaluate(state, everyone, params)
    top, bottom, heap_ops = two_way_heap_filter(enumerate(all_scores), params.k_max)
    state.top_candidates = top
    state.bottom_candidates = bottom
    state.cycles_since_scan = 0
    state.inactivity_timer = 0
    state.score_window.clear()
    state.last_aggregate = None
    _remember_ops(state)

    if state.active_set and is_equilibrium(top, bottom, params):
        state.scan_backoff = min(2 * state.scan_backoff, params.inactivity_cap)
        log.debug("cycle %d: scan found equilibrium", state.cycle)
        return all_scores, heap_ops, True

    k_demand = find_knee_point([value for _, value in top])
    top_part = tuple(tenant for tenant, _ in top[:k_demand])
    chosen = tuple(sorted(compose_set(top, bottom, k_demand, params)))
    if chosen != state.active_set and (
        shift or replaces_active_set(state, chosen, top_part, all_scores, params)
    ):
        if state.active_set:
            restart_step_decay(state, params, shift=shift)
        state.active_set = chosen
        state.top_part = top_part
        state.scan_backoff = params.window_W
        log.debug("cycle %d: new active set %s", state.cycle, chosen)
    else:
        state.scan_backoff = min(2 * state.scan_backoff, params.inactivity_cap)
    return all_scores, heap_ops, False


def _hold(state, current, heap_ops, scores):
    """a global scan cycle that leaves the plan alone"""
    state.inactivity_timer += 1
    state.cycles_since_scan += 1
    state.step_clock += 1
    return current, DecisionInfo(
        global_scan=True,
        active_size=len(state.active_set),
        touched=state.pool.n_tenants,
        heap_ops=heap_ops,
        alpha=state.alpha_prev,
        scores=tuple(scores),
    )


def run_decision_cycle(state, observations, current, params=None):
    """one AURA decision: sense, maybe rescan, optimize the active set

    returns (plan, DecisionInfo). The plan is current itself when nothing
    should change.
    """
    params = params or state.params
    n = state.pool.n_tenants
    if len(observations) != n:
        raise SamError(f"expected {n} observations, got {len(observations)}")
    state.cycle += 1

    # sense
    state.signal_states = [
        signals.observe(sig, obs, params.signal_params)
        for sig, obs in zip(state.signal_states, observations, strict=True)
    ]

    # decide
    heap_ops = 0
    scores = np.full(n, np.nan)
    if not state.aas_enabled:
        # everybody is active all the time, a load jump stands in for a
        # newly installed set
        global_scan = True
        if ops_jumped(state, params):
            restart_step_decay(state, params, shift=bool(state.active_set))
            _remember_ops(state)
            log.debug("cycle %d: load shift, step decay restarted", state.cycle)
        state.active_set = tuple(range(n))
        members = list(state.active_set)
        _, _, member_scores = _evaluate(state, members, params)
        scores[members] = member_scores
        top, bottom, heap_ops = two_way_heap_filter(
            enumerate(member_scores), params.k_max
        )
        if is_equilibrium(top, bottom, params):
            return _hold(state, current, heap_ops, scores)
    else:
        shift = bool(state.active_set) and ops_jumped(state, params)
        global_scan = (
            not state.active_set
            or shift
            or (
                state.cycles_since_scan >= state.scan_backoff
                and is_converged(state, params)
            )
        )
        if global_scan:
            all_scores, heap_ops, equilibrium = _global_scan(state, params, shift)
            scores[:] = all_scores
            if equilibrium or not state.active_set:
                return _hold(state, current, heap_ops, scores)
            members = list(state.active_set)
        else:
            members = list(state.active_set)
            _, _, member_scores = _evaluate(state, members, params)
            scores[members] = member_scores

    plan = optimize_in_active_set(
        state, {t: float(scores[t]) for t in members}, current, params
    )

    aggregate = sum(
        state.signal_states[t].ema_ops_slow * state.signal_states[t].ema_hr_slow
        for t in members
    )
    if state.last_aggregate is not None and not global_scan:
        base = max(abs(state.last_aggregate), 1e-12)
        state.score_window.append((aggregate - state.last_aggregate) / base)
    state.last_aggregate = aggregate

    if plan == current:
        state.inactivity_timer += 1
    else:
        state.inactivity_timer = 0
    state.cycles_since_scan += 1
    state.step_clock += 1

    return plan, DecisionInfo(
        global_scan=global_scan,
        active_size=len(members),
        touched=n if global_scan else len(members),
        heap_ops=heap_ops,
        alpha=state.alpha_prev,
        scores=tuple(scores),
    )
