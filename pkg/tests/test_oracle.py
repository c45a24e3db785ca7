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

import io

import numpy as np
import pytest

from samcache import InfeasibleConfigurationError, PoolConfig, SamError
from samcache.domain import effective_lower_bounds
from samcache.oracle import (
    MckpInstance,
    ProfiledCurve,
    brute_force_best,
    build_instance,
    default_chunk,
    enumerate_mckp,
    phase_oracle,
    phase_utility,
    profile_grid,
    profile_phase,
    read_profiles,
    solve_mckp,
    true_profiles,
    write_profiles,
)
from samcache.simenv import (
    CurveKind,
    EnvironmentModel,
    HitRateCurve,
    NoiseModel,
    Phase,
    Scenario,
    WorkloadSchedule,
    make_scenario,
)


@pytest.fixture
def brute_scenario():
    """three tenants on 40 pages, one of them S-shaped, no noise"""
    curves = [
        HitRateCurve(CurveKind.EXP_SATURATING, h_max=0.9, scale=8.0),
        HitRateCurve(CurveKind.EXP_SATURATING, h_max=0.7, scale=15.0),
        HitRateCurve(CurveKind.LOGISTIC_S_SHAPE, h_max=0.9, scale=3.0, midpoint=10.0),
    ]
    schedule = WorkloadSchedule(
        phases=(Phase(10, (1.0, 1.0, 1.0)), Phase(10, (0.2, 1.0, 3.0))),
        base_ops=(30.0, 20.0, 25.0),
    )
    env = EnvironmentModel(curves, schedule, NoiseModel(0.0, 0.0))
    pool = PoolConfig(
        total_pages=40, base_priority=(1.0, 1.0, 1.0), lower_bound=(2, 2, 2)
    )
    return Scenario("brute", env, pool, ("a", "b", "c"))


#
# ProfiledCurve and MckpInstance
#
def test_profiled_curve_interpolates():
    profile = ProfiledCurve((0, 10, 20), (0.0, 0.5, 0.6), 10.0)
    assert profile.hit_rate(5) == pytest.approx(0.25)
    assert profile.hit_rate(100) == pytest.approx(0.6)
    assert profile.value(10) == pytest.approx(5.0)


@pytest.mark.parametrize(
    "grid, hr_at",
    [((0, 10), (0.1,)), ((), ()), ((0, 10, 10), (0.1, 0.2, 0.3))],
)
def test_profiled_curve_errors(grid, hr_at):
    with pytest.raises(SamError):
        ProfiledCurve(grid, hr_at, 1.0)


@pytest.mark.parametrize(
    "groups, budget, chunk",
    [
        ((((0, 1.0),),), 10, 0),
        ((), 10, 1),
        ((((0, 1.0),), ()), 10, 1),
        ((((3, 1.0),),), 10, 2),
    ],
)
def test_mckp_instance_errors(groups, budget, chunk):
    with pytest.raises(SamError):
        MckpInstance(groups, budget, chunk)


#
# profiling
#
CHUNKS = [(1200, 18), (512, 8), (40, 1), (1, 1)]


@pytest.mark.parametrize("total, expected", CHUNKS)
def test_default_chunk(total, expected):
    assert default_chunk(total) == expected


def test_profile_grid_includes_bounds():
    cfg = PoolConfig.uniform(2, 95, lower_bound=15)
    grid = profile_grid(cfg, 10)
    assert grid[0] == 0
    assert grid[-1] == 95
    assert 15 in grid
    assert 90 in grid


def test_profile_phase_noise_free(brute_scenario):
    env = brute_scenario.env
    grid = (0, 10, 20, 40)
    profiles = profile_phase(env, 1, grid)
    for tenant, profile in enumerate(profiles):
        assert profile.grid == grid
        assert profile.hr_at == pytest.approx(
            tuple(env.curves[tenant].evaluate(np.asarray(grid)))
        )
    assert [p.ops for p in profiles] == pytest.approx([6.0, 20.0, 75.0])


def test_profile_phase_is_monotone():
    curves = [HitRateCurve(CurveKind.EXP_SATURATING, h_max=0.5, scale=50.0)]
    schedule = WorkloadSchedule(phases=(Phase(200, (1.0,)),), base_ops=(10.0,))
    env = EnvironmentModel(curves, schedule, NoiseModel(hr_sigma=0.3, seed=4))
    profiles = profile_phase(env, 0, tuple(range(0, 101, 5)), seeds=2, samples=10)
    assert all(np.diff(profiles[0].hr_at) >= 0)


def test_quiescent_tenant_has_no_value():
    curves = [HitRateCurve(CurveKind.QUIESCENT)]
    schedule = WorkloadSchedule(phases=(Phase(10, (1.0,)),), base_ops=(10.0,))
    env = EnvironmentModel(curves, schedule, NoiseModel(0.0, 0.0))
    assert profile_phase(env, 0, (0, 10))[0].ops == 0.0
    assert true_profiles(env, 0, (0, 10))[0].ops == 0.0


def test_profiles_survive_csv():
    profiles = [
        ProfiledCurve((0, 10), (0.0, 0.5), 10.0),
        ProfiledCurve((0, 10), (0.1, 0.2), 3.5),
    ]
    buffer = io.StringIO()
    write_profiles(profiles, buffer)
    buffer.seek(0)
    assert read_profiles(buffer) == profiles


def test_read_profiles_missing_columns():
    with pytest.raises(SamError, match="ops"):
        read_profiles(io.StringIO("tenant,pages,hit_rate\n0,0,0.1\n"))


#
# build_instance(), solve_mckp() and enumerate_mckp()
#
def test_build_instance_groups():
    cfg = PoolConfig(total_pages=40, base_priority=(1.0, 1.0), lower_bound=(15, 0))
    profiles = [ProfiledCurve((0, 40), (0.0, 1.0), 1.0)] * 2
    inst = build_instance(profiles, cfg, chunk=10)
    assert [w for w, _ in inst.groups[0]] == [20, 30, 40]
    assert [w for w, _ in inst.groups[1]] == [0, 10, 20, 30, 40]
    assert inst.budget == 40


def test_build_instance_errors():
    cfg = PoolConfig(total_pages=40, base_priority=(1.0,), lower_bound=(50,))
    profile = ProfiledCurve((0, 40), (0.0, 1.0), 1.0)
    with pytest.raises(InfeasibleConfigurationError):
        build_instance([profile], cfg, chunk=10)
    with pytest.raises(SamError):
        build_instance([profile, profile], cfg, chunk=10)


def test_solve_mckp_simple():
    inst = MckpInstance(
        (((0, 0.0), (2, 5.0), (4, 6.0)), ((0, 0.0), (2, 4.0), (4, 10.0))), budget=4
    )
    plan, value = solve_mckp(inst)
    assert plan.pages == (0, 4)
    assert value == pytest.approx(10.0)


def test_solve_mckp_leftover_goes_to_best_marginal():
    inst = MckpInstance((((0, 0.0), (2, 1.0)), ((0, 0.0), (2, 3.0))), budget=5)
    plan, value = solve_mckp(inst)
    assert value == pytest.approx(4.0)
    assert plan.pages == (2, 3)


def test_solve_mckp_infeasible():
    inst = MckpInstance((((4, 1.0),), ((4, 1.0),)), budget=6)
    with pytest.raises(InfeasibleConfigurationError):
        solve_mckp(inst)
    with pytest.raises(InfeasibleConfigurationError):
        enumerate_mckp(inst)


def test_solve_mckp_matches_enumeration():
    rng = np.random.default_rng(7)
    for _ in range(200):
        chunk = int(rng.integers(1, 4))
        groups = []
        for _ in range(int(rng.integers(1, 4))):
            units = sorted(rng.choice(7, size=int(rng.integers(1, 5)), replace=False))
            groups.append(
                tuple((int(u) * chunk, float(rng.uniform(0, 10))) for u in units)
            )
        cheapest = sum(min(w for w, _ in group) for group in groups)
        budget = cheapest + int(rng.integers(0, 12))
        inst = MckpInstance(tuple(groups), budget, chunk)
        plan, value = solve_mckp(inst)
        _, expected = enumerate_mckp(inst)
        assert value == pytest.approx(expected)
        assert plan.total == budget


#
# phase oracles
#
def test_phase_oracle_matches_brute_force(brute_scenario):
    env = brute_scenario.env
    for phase in (0, 1):
        best_plan, best_value = brute_force_best(env, phase, brute_scenario.pool)
        plan, value = phase_oracle(brute_scenario, phase, chunk=1, seeds=1)
        assert value == pytest.approx(best_value)
        assert phase_utility(env, phase, plan.pages) == pytest.approx(best_value)


def test_coarser_chunks_never_win(brute_scenario):
    _, fine = phase_oracle(brute_scenario, 1, chunk=1, seeds=1)
    _, coarse = phase_oracle(brute_scenario, 1, chunk=4, seeds=1)
    assert coarse <= fine + 1e-9


def test_true_profiles_match_curves(brute_scenario):
    env = brute_scenario.env
    profiles = true_profiles(env, 0, (0, 20, 40))
    assert profiles[2].hit_rate(20) == pytest.approx(env.curves[2].evaluate(20))
    assert profiles[0].ops == pytest.approx(30.0)


def test_brute_force_limits(brute_scenario):
    big = PoolConfig.uniform(3, 100)
    with pytest.raises(SamError):
        brute_force_best(brute_scenario.env, 0, big)


def test_moved_hotspot_is_worth_most_of_the_elastic_pool():
    scenario = make_scenario("hotspot_shift")
    cfg = scenario.pool
    chunk = default_chunk(cfg.total_pages)
    profiles = true_profiles(scenario.env, 2, profile_grid(cfg, chunk))
    plan, _ = solve_mckp(build_instance(profiles, cfg, chunk))
    hot = scenario.roles["hotspot_to"]
    bound = int(effective_lower_bounds(cfg)[hot])
    share = (plan[hot] - bound) / cfg.elastic_pages
    assert share > 0.5
