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

import os

import pytest
import rich

from samcache import ExperimentConfig, PoolConfig, Sam, TenantObservation
from samcache.simenv import (
    CurveKind,
    EnvironmentModel,
    HitRateCurve,
    NoiseModel,
    Phase,
    Scenario,
    WorkloadSchedule,
)


@pytest.fixture
def sam_cmdline(mocker, monkeypatch):
    '''a fixture that simulates running sam from the command line

    this fixture returns a function, which allows us to call
    the fixture and pass parameters to it

    def test_run(sam_cmdline, tmp_path):
        experiment = """
        name = "tiny"
        cycles = 10
        [scenario]
        name = "pollution_attack"
        [[policies]]
        kind = "b1"
        """
        exit_code = sam_cmdline(f"run --out {tmp_path}", experiment)
        ...

    The experiment is passed in as a string and patched into 'sam' in place
    of reading the --config file.
    '''
    # scrub environment variables that affect sam's behavior
    clean_env = {
        k: v for k, v in os.environ.items() if not k.startswith(("SAM_", "NO_COLOR"))
    }
    monkeypatch.setattr(os, "environ", clean_env)

    # patch up the console objects so we get ansi output and don't wrap text
    console_patch = mocker.patch("samcache.Sam._create_console")
    console_patch.return_value = rich.console.Console(
        soft_wrap=True,
        markup=False,
        emoji=False,
        highlight=False,
        # force display to true color so we can look for ansi codes in output
        color_system="truecolor",
        # don't let it autodetect the width, we don't want any line wrapping
        width=2048,
    )

    error_console_patch = mocker.patch("samcache.Sam._create_error_console")
    error_console_patch.return_value = rich.console.Console(
        stderr=True,
        soft_wrap=True,
        markup=False,
        emoji=False,
        highlight=False,
        color_system="truecolor",
        width=2048,
    )

    def _executor(cmdline, experiment_toml=None):
        """anything that outputs here doesn't get captured by the
        capsys fixture"""
        if isinstance(cmdline, str):
            argv = cmdline.split(" ")
        elif isinstance(cmdline, list):
            argv = cmdline
        else:
            argv = []

        sam = Sam()
        try:
            (prog, args) = sam.parse_args(argv)
        except SystemExit as exc:
            return exc.code

        if experiment_toml is not None:
            config = ExperimentConfig.loads(experiment_toml)
            experiment_patch = mocker.patch("samcache.Sam.load_experiment_from_args")
            experiment_patch.return_value = config

        # now go run the command
        return sam.dispatch("sam", args)

    return _executor


@pytest.fixture
def observations_of():
    """a function making one TenantObservation per tenant from plain lists"""

    def _make(pages, hit_rates, ops=None):
        if ops is None:
            ops = [100.0] * len(pages)
        return [
            TenantObservation(
                ops=o, hits=o * h, misses=o * (1 - h), hit_rate=h, current_pages=p
            )
            for p, h, o in zip(pages, hit_rates, ops, strict=True)
        ]

    return _make


@pytest.fixture
def tiny_scenario():
    """three tenants on 120 pages, noise free, two phases"""
    curves = [
        HitRateCurve(CurveKind.EXP_SATURATING, h_max=0.9, scale=20.0),
        HitRateCurve(CurveKind.EXP_SATURATING, h_max=0.8, scale=40.0),
        HitRateCurve(CurveKind.POLLUTER_FLAT, floor=0.05),
    ]
    schedule = WorkloadSchedule(
        phases=(Phase(40, (1.0, 1.0, 1.0)), Phase(40, (1.0, 5.0, 1.0))),
        base_ops=(50.0, 20.0, 40.0),
    )
    env = EnvironmentModel(curves, schedule, NoiseModel(0.0, 0.0))
    pool = PoolConfig(
        total_pages=120,
        fixed_pages=12,
        base_priority=(2.0, 1.0, 1.0),
        lower_bound=(10, 10, 10),
    )
    return Scenario("tiny", env, pool, ("a", "b", "scan"), {"vip": 0, "attacker": 2})
