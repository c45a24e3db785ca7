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
"""per-tenant signal processing

Slow and fast EMAs of ops and hit rate, the asymmetric smoothing of the
marginal hit-rate gradient, percentile normalization, and the saturation
confidence that discounts the gradient once extra pages stop helping.

Every function takes a TenantSignalState and returns a new one, so
distinct tenants can be updated independently.
"""

import dataclasses

import numpy as np

from .exceptions import SamError


@dataclasses.dataclass(frozen=True)
class SignalParams:
    lambda_slow: float = 0.1
    lambda_fast: float = 0.5
    v_up_rate: float = 0.4
    v_down_rate: float = 0.1
    p90_floor: float = 1e-6
    sat_delta_hr_eps: float = 0.002
    sat_decay: float = 0.8
    sat_recover: float = 0.1

    def __post_init__(self):
        for name in ("lambda_slow", "lambda_fast", "v_up_rate", "v_down_rate"):
            if not 0.0 < getattr(self, name) <= 1.0:
                raise SamError(f"{name} must be in (0, 1]")
        if self.v_up_rate <= self.v_down_rate:
            raise SamError("v_up_rate must be greater than v_down_rate")
        if self.p90_floor <= 0:
            raise SamError("p90_floor must be greater than 0")
        if not 0.0 < self.sat_decay < 1.0 or not 0.0 < self.sat_recover < 1.0:
            raise SamError("sat_decay and sat_recover must be in (0, 1)")


@dataclasses.dataclass(frozen=True)
class TenantSignalState:
    """smoothed view of one tenant, built up one observation at a time

    last_pages and last_hr hold the previous observation so gradients can
    be computed against it.
    """

    ema_ops_slow: float = 0.0
    ema_ops_fast: float = 0.0
    ema_hr_slow: float = 0.0
    ema_hr_fast: float = 0.0
    v_smoothed: float = 0.0
    last_pages: int = 0
    last_hr: float = 0.0
    saturation_confidence: float = 1.0
    initialized: bool = False

    @property
    def v_influence(self) -> float:
        """the gradient after saturation discounting"""
        return self.v_smoothed * self.saturation_confidence


def _ema(previous, value, rate):
    return (1.0 - rate) * previous + rate * value


def update_emas(state, obs, params):
    """fold an observation into the EMAs

    The first observation initializes every EMA to the raw value, so there
    is no bias toward zero.
    """
    if not state.initialized:
        return dataclasses.replace(
            state,
            ema_ops_slow=obs.ops,
            ema_ops_fast=obs.ops,
            ema_hr_slow=obs.hit_rate,
            ema_hr_fast=obs.hit_rate,
            initialized=True,
        )
    return dataclasses.replace(
        state,
        ema_ops_slow=_ema(state.ema_ops_slow, obs.ops, params.lambda_slow),
        ema_ops_fast=_ema(state.ema_ops_fast, obs.ops, params.lambda_fast),
        ema_hr_slow=_ema(state.ema_hr_slow, obs.hit_rate, params.lambda_slow),
        ema_hr_fast=_ema(state.ema_hr_fast, obs.hit_rate, params.lambda_fast),
    )


def raw_v(state, obs) -> float:
    """hit-rate change per page since the previous observation

    zero when the allocation did not move, or there is no previous
    observation
    """
    if not state.initialized:
        return 0.0
    delta_pages = obs.current_pages - state.last_pages
    if abs(delta_pages) < 1:
        return 0.0
    return (obs.hit_rate - state.last_hr) / delta_pages


def smooth_v(state, v_raw, params):
    """asymmetric EMA: rises quickly, decays slowly"""
    rate = params.v_up_rate if v_raw > state.v_smoothed else params.v_down_rate
    return dataclasses.replace(state, v_smoothed=_ema(state.v_smoothed, v_raw, rate))


def p90_normalize(values, floor):
    """scale values into [0, 1] by the 90th percentile of their positive parts

    negative values map to 0
    """
    if len(values) == 0:
        raise SamError("can't normalize an empty list")
    positive = np.maximum(np.asarray(values, dtype=float), 0.0)
    p90 = float(np.percentile(positive, 90))
    return np.clip(positive / max(p90, floor), 0.0, 1.0)


def update_saturation_confidence(state, obs, params):
    """decay confidence while pages grow and the hit rate stays flat

    any other cycle recovers part of the distance back to 1
    """
    if not state.initialized:
        return state
    grew = obs.current_pages > state.last_pages
    flat = abs(obs.hit_rate - state.last_hr) < params.sat_delta_hr_eps
    confidence = state.saturation_confidence
    if grew and flat:
        confidence *= params.sat_decay
    else:
        confidence += params.sat_recover * (1.0 - confidence)
    return dataclasses.replace(
        state, saturation_confidence=min(1.0, max(0.0, confidence))
    )


def observe(state, obs, params):
    """run the whole pipeline for one observation

    the gradient and saturation steps compare against the previous
    observation, so they run before it is replaced
    """
    v = raw_v(state, obs)
    state = smooth_v(state, v, params)
    state = update_saturation_confidence(state, obs, params)
    state = update_emas(state, obs, params)
    return dataclasses.replace(
        state, last_pages=obs.current_pages, last_hr=obs.hit_rate
    )
