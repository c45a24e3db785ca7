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
# pylint: disable=protected-access, missing-function-docstring, redefined-outer-name
# pylint: disable=missing-module-docstring, unused-variable

import dataclasses

import numpy as np
import pytest

from samcache import SamError, TenantObservation
from samcache.signals import (
    SignalParams,
    TenantSignalState,
    observe,
    p90_normalize,
    raw_v,
    smooth_v,
    update_emas,
    update_saturation_confidence,
)


def _obs(ops=100.0, hit_rate=0.5, pages=10):
    return TenantObservation(
        ops=ops,
        hits=ops * hit_rate,
        misses=ops * (1 - hit_rate),
        hit_rate=hit_rate,
        current_pages=pages,
    )


#
# SignalParams
#
@pytest.mark.parametrize(
    "kwargs",
    [
        {"lambda_slow": 0.0},
        {"lambda_fast": 1.5},
        {"v_up_rate": 0.1, "v_down_rate": 0.2},
        {"p90_floor": 0.0},
        {"sat_decay": 1.0},
        {"sat_recover": 0.0},
    ],
)
def test_params_errors(kwargs):
    with pytest.raises(SamError):
        SignalParams(**kwargs)


#
# update_emas()
#
def test_emas_initialize_to_first_value():
    params = SignalParams()
    state = update_emas(TenantSignalState(), _obs(ops=0.0, hit_rate=0.2), params)
    assert state.initialized
    assert state.ema_ops_slow == 0.0
    assert state.ema_hr_slow == pytest.approx(0.2)
    state = update_emas(state, _obs(ops=10.0), params)
    assert state.ema_ops_slow == pytest.approx(1.0)
    assert state.ema_ops_fast == pytest.approx(5.0)


def test_emas_converge_to_constant_input():
    params = SignalParams()
    state = update_emas(TenantSignalState(), _obs(ops=0.0), params)
    for _ in range(300):
        state = update_emas(state, _obs(ops=42.0), params)
    assert state.ema_ops_slow == pytest.approx(42.0)


def test_emas_rate_one_tracks_input():
    params = SignalParams(lambda_slow=1.0, lambda_fast=1.0, v_up_rate=1.0)
    state = update_emas(TenantSignalState(), _obs(ops=3.0), params)
    state = update_emas(state, _obs(ops=7.0), params)
    assert state.ema_ops_slow == 7.0


def test_emas_stay_between_input_extremes():
    params = SignalParams()
    rng = np.random.default_rng(1)
    state = TenantSignalState()
    values = rng.uniform(5.0, 50.0, 200)
    for value in values:
        state = update_emas(state, _obs(ops=float(value)), params)
        assert values.min() <= state.ema_ops_slow <= values.max()


#
# raw_v()
#
RAW_V = [
    (10, 0.5, 30, 0.6, 0.005),
    (10, 0.5, 20, 0.4, -0.01),
    (10, 0.5, 10, 0.9, 0.0),
    (30, 0.6, 10, 0.5, 0.005),
]


@pytest.mark.parametrize("last_pages, last_hr, pages, hr, expected", RAW_V)
def test_raw_v(last_pages, last_hr, pages, hr, expected):
    state = TenantSignalState(last_pages=last_pages, last_hr=last_hr, initialized=True)
    assert raw_v(state, _obs(hit_rate=hr, pages=pages)) == pytest.approx(expected)


def test_raw_v_first_observation():
    assert raw_v(TenantSignalState(), _obs(pages=50)) == 0.0


#
# smooth_v()
#
def test_smooth_v_fast_up_slow_down():
    params = SignalParams()
    up = smooth_v(TenantSignalState(), 0.01, params)
    assert up.v_smoothed == pytest.approx(0.004)
    down = smooth_v(TenantSignalState(v_smoothed=0.01), 0.0, params)
    assert down.v_smoothed == pytest.approx(0.009)


def test_smooth_v_fixed_point():
    state = TenantSignalState(v_smoothed=0.02)
    assert smooth_v(state, 0.02, SignalParams()).v_smoothed == pytest.approx(0.02)


def test_smooth_v_impulse_leaves_residue():
    params = SignalParams()
    state = smooth_v(TenantSignalState(), 0.01, params)
    state = smooth_v(state, 0.0, params)
    assert state.v_smoothed > 0.0


#
# p90_normalize()
#
def test_p90_normalize_interpolates():
    values = p90_normalize(list(range(1, 11)), 1e-6)
    assert values[-1] == 1.0
    assert values[4] == pytest.approx(5 / 9.1)


def test_p90_normalize_equal_values():
    assert list(p90_normalize([3.0, 3.0, 3.0], 1e-6)) == [1.0, 1.0, 1.0]


def test_p90_normalize_non_positive():
    assert list(p90_normalize([-1.0, 0.0, -5.0], 1e-6)) == [0.0, 0.0, 0.0]


def test_p90_normalize_empty():
    with pytest.raises(SamError):
        p90_normalize([], 1e-6)


#
# update_saturation_confidence()
#
def test_saturation_decays_on_flat_growth():
    params = SignalParams()
    state = TenantSignalState(last_pages=10, last_hr=0.5, initialized=True)
    for pages in (11, 12, 13):
        state = update_saturation_confidence(state, _obs(pages=pages), params)
        state = dataclasses.replace(state, last_pages=pages)
    assert state.saturation_confidence == pytest.approx(0.512)


def test_saturation_recovers():
    params = SignalParams()
    state = TenantSignalState(
        last_pages=10, last_hr=0.5, saturation_confidence=0.5, initialized=True
    )
    state = update_saturation_confidence(state, _obs(hit_rate=0.6, pages=20), params)
    assert state.saturation_confidence == pytest.approx(0.55)


def test_saturation_stays_in_range():
    params = SignalParams()
    rng = np.random.default_rng(5)
    state = TenantSignalState()
    for _ in range(500):
        obs = _obs(
            hit_rate=float(rng.choice([0.5, 0.5005, 0.9])),
            pages=int(rng.integers(0, 100)),
        )
        state = observe(state, obs, params)
        assert 0.0 <= state.saturation_confidence <= 1.0
        assert np.isfinite(state.v_smoothed)


#
# observe()
#
def test_observe_pipeline():
    params = SignalParams()
    state = observe(TenantSignalState(), _obs(hit_rate=0.5, pages=10), params)
    assert state.last_pages == 10
    assert state.v_smoothed == 0.0
    state = observe(state, _obs(hit_rate=0.6, pages=30), params)
    # raw gradient 0.005 per page, smoothed at the up rate
    assert state.v_smoothed == pytest.approx(0.002)
    assert state.last_hr == pytest.approx(0.6)
    assert state.v_influence == pytest.approx(0.002 * state.saturation_confidence)


def test_saturated_tenant_loses_influence():
    params = SignalParams()
    state = observe(TenantSignalState(), _obs(hit_rate=0.95, pages=10), params)
    for pages in range(11, 60):
        state = observe(state, _obs(hit_rate=0.95, pages=pages), params)
    assert state.saturation_confidence < 0.01
    assert abs(state.v_influence) < 1e-6
