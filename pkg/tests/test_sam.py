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
import rich.console
import tomlkit
from rich_argparse import RichHelpFormatter

from samcache import Sam, SamError, make_scenario
from samcache import __main__ as mainmodule
from samcache.analysis import read_trace, write_trace
from samcache.experiment import run_scenario
from samcache.oracle import read_profiles
from samcache.suites import SuiteReport

EXPERIMENT = """
name = "tiny"
cycles = 30
seeds = [0, 1]
[scenario]
name = "pollution_attack"
[[policies]]
kind = "b1"
[[policies]]
kind = "aura"
"""


def _error_console():
    return rich.console.Console(
        stderr=True,
        soft_wrap=True,
        markup=False,
        emoji=False,
        highlight=False,
        color_system="truecolor",
        width=2048,
    )


@pytest.fixture
def trace_file(tmp_path):
    trace = run_scenario(make_scenario("pollution_attack"), "aura", cycles=40)
    path = tmp_path / "aura-seed0.csv"
    with open(path, "w", encoding="utf-8", newline="") as fobj:
        write_trace(trace, fobj)
    return path


#
# test output color logic
#
def test_output_color_no_color_env(sam_cmdline, mocker):
    RichHelpFormatter.styles["argparse.text"] = "#ff00ff"
    mocker.patch.dict(os.environ, {"NO_COLOR": "doesn't matter"}, clear=True)
    sam_cmdline("--help")
    assert not RichHelpFormatter.styles


def test_output_color_envs_only(sam_cmdline, mocker):
    # NO_COLOR wins over SAM_COLORS
    RichHelpFormatter.styles["argparse.text"] = "#333333"
    envs = {"SAM_COLORS": "usage_text=#f0f0f0", "NO_COLOR": "doesn't matter"}
    mocker.patch.dict(os.environ, envs, clear=True)
    sam_cmdline("--help")
    assert not RichHelpFormatter.styles


def test_output_color_no_color_env_empty(sam_cmdline, mocker, capsys):
    # an empty NO_COLOR is ignored, see no-color.org
    mocker.patch.dict(os.environ, {"NO_COLOR": ""}, clear=True)
    exit_code = sam_cmdline("-d --help")
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_SUCCESS
    assert "ignoring NO_COLOR" in err


def test_output_color_env_color(sam_cmdline, mocker):
    RichHelpFormatter.styles["argparse.text"] = "#333333"
    mocker.patch.dict(os.environ, {"SAM_COLORS": "usage_text=#f0f0f0"}, clear=True)
    sam_cmdline("--help")
    assert RichHelpFormatter.styles["argparse.text"] == "#f0f0f0"


def test_output_color_env_empty(sam_cmdline, mocker):
    RichHelpFormatter.styles["argparse.text"] = "#ff00ff"
    mocker.patch.dict(os.environ, {"SAM_COLORS": ""}, clear=True)
    sam_cmdline("--help")
    assert not RichHelpFormatter.styles


def test_output_color_force(mocker):
    create_console = mocker.patch("samcache.Sam._create_console")
    create_error_console = mocker.patch("samcache.Sam._create_error_console")
    sam = Sam()
    # only count the calls from parse_args
    create_console.reset_mock()
    create_error_console.reset_mock()
    sam.parse_args(["--force-color", "policies"])
    create_console.assert_called_once_with(True)
    create_error_console.assert_called_once_with(True)


BAD_COLORSPECS = [
    ("homer_simpson=red bold on black:fred=white", "skipping invalid element"),
    ("usage_help=red:usage_args red bold on black", "skipping invalid expression"),
]


@pytest.mark.parametrize("colorspec, message", BAD_COLORSPECS)
def test_output_color_env_bad_spec(sam_cmdline, mocker, capsys, colorspec, message):
    mocker.patch.dict(os.environ, {"SAM_COLORS": colorspec})
    exit_code = sam_cmdline("-d policies")
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_SUCCESS
    assert "[debug]" in err
    assert message in err
    assert "aura" in out


#
# test unknown commands, no commands, help, version, and debug
#
@pytest.mark.parametrize("cmdline", ["--help", "-h", "help"])
def test_help(sam_cmdline, capsys, cmdline):
    exit_code = sam_cmdline(cmdline)
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_SUCCESS
    assert not err
    assert "oracle" in out
    assert "analyze" in out
    assert "--force-color" in out


@pytest.mark.parametrize("cmdline", ["--version", "-v"])
def test_version(sam_cmdline, capsys, cmdline):
    exit_code = sam_cmdline(cmdline)
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_SUCCESS
    assert not err
    assert "sam" in out


def test_h_and_v_option(sam_cmdline, capsys):
    exit_code = sam_cmdline("-h -v")
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_USAGE
    assert not out
    # this message comes from argparse
    assert "not allowed with argument" in err


def test_no_command(sam_cmdline, capsys):
    exit_code = sam_cmdline(None)
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_USAGE
    assert not out
    # a usage error, so the usage message is on stderr
    assert "run" in err
    assert "suite" in err
    assert "--force-color" in err


def test_unknown_command(sam_cmdline, capsys):
    exit_code = sam_cmdline("unknowncommand")
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_USAGE
    assert not out
    assert "invalid choice" in err


def test_dispatch_unknown_command(capsys):
    sam = Sam()
    args = sam.argparser().parse_args(["policies"])
    args.command = "fredflintstone"
    exit_code = sam.dispatch("sam", args)
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_USAGE
    assert not out
    assert "unknown command" in err


def test_error_styled_exception(mocker, capsys):
    mocker.patch("samcache.Sam._create_error_console", return_value=_error_console())
    mocker.patch.dict(
        os.environ, {"SAM_COLORS": "error_progname=red:error_text=#00ff00"}, clear=True
    )
    sam = Sam()
    (_, args) = sam.parse_args(["policies"])
    mocker.patch.object(sam, "command_policies", side_effect=SamError("test error"))
    exit_code = sam.dispatch("sam", args)
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_ERROR
    assert not out
    assert "sam: test error" in err
    # styles are applied
    assert "\x1b[" in err


def test_debug_styled_output(mocker, capsys, tmp_path):
    mocker.patch("samcache.Sam._create_error_console", return_value=_error_console())
    mocker.patch.dict(
        os.environ, {"SAM_COLORS": "debug_label=red:debug_text=#00ff00"}, clear=True
    )
    experiment = tmp_path / "tiny.toml"
    experiment.write_text(EXPERIMENT, encoding="utf-8")
    sam = Sam()
    argv = ["-d", "run", "-c", str(experiment), "--out", str(tmp_path), "-s", "1"]
    (_, args) = sam.parse_args(argv)
    exit_code = sam.dispatch("sam", args)
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_SUCCESS
    assert "[debug]" in err
    assert "loading experiment" in err
    assert "\x1b[" in err


#
# Sam.main() and the console script
#
def test_sam_main(mocker):
    cmock = mocker.patch("samcache.Sam.command_policies")
    cmock.return_value = Sam.EXIT_SUCCESS
    assert Sam.main(["policies"]) == Sam.EXIT_SUCCESS


def test_sam_main_unknown_command():
    assert Sam.main(["unknowncommand"]) == Sam.EXIT_USAGE


def test___main__(mocker):
    mocker.patch("samcache.Sam.main", return_value=42)
    mocker.patch.object(mainmodule, "__name__", "__main__")
    with pytest.raises(SystemExit) as excinfo:
        mainmodule.bootstrap()
    assert excinfo.value.code == 42


#
# policies and scenarios
#
POLICIES = [
    "aura",
    "aura_undamped",
    "sam_core",
    "b1_static_average",
    "b7_dynamic_need",
    "b13_ucp",
    "b14_hindsight_opt",
]


def test_policies(sam_cmdline, capsys):
    exit_code = sam_cmdline("policies")
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_SUCCESS
    assert not err
    for policy in POLICIES:
        assert policy in out
    # numbered baselines sort by number
    assert out.index("b2_fixed_priority") < out.index("b10_potential_only")


def test_scenarios(sam_cmdline, capsys):
    exit_code = sam_cmdline("scenarios")
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_SUCCESS
    assert not err
    for scenario in ("hotspot_shift", "pollution_attack", "archetypes"):
        assert scenario in out


#
# run
#
def test_run(sam_cmdline, capsys, tmp_path):
    exit_code = sam_cmdline(f"run --out {tmp_path}", EXPERIMENT)
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_SUCCESS
    assert "4 traces" in out
    assert len(list((tmp_path / "tiny").glob("*.csv"))) == 4
    assert (tmp_path / "tiny" / "summary.toml").exists()


def test_run_one_seed(sam_cmdline, capsys, tmp_path):
    exit_code = sam_cmdline(f"run --seed 5 --out {tmp_path}", EXPERIMENT)
    assert exit_code == Sam.EXIT_SUCCESS
    names = sorted(p.name for p in (tmp_path / "tiny").glob("*.csv"))
    assert names == ["aura-seed5.csv", "b1-seed5.csv"]


def test_run_out_dir_from_environment(sam_cmdline, capsys, mocker, tmp_path):
    mocker.patch.dict(os.environ, {"SAM_OUT_DIR": str(tmp_path)})
    exit_code = sam_cmdline("run", EXPERIMENT)
    assert exit_code == Sam.EXIT_SUCCESS
    assert (tmp_path / "tiny" / "summary.toml").exists()


def test_run_config_from_environment(sam_cmdline, capsys, mocker, tmp_path):
    experiment = tmp_path / "tiny.toml"
    experiment.write_text(EXPERIMENT, encoding="utf-8")
    mocker.patch.dict(os.environ, {"SAM_CONFIG_FILE": str(experiment)})
    exit_code = sam_cmdline(f"run --out {tmp_path}")
    assert exit_code == Sam.EXIT_SUCCESS
    assert (tmp_path / "tiny" / "b1-seed1.csv").exists()


def test_run_no_experiment(sam_cmdline, capsys):
    exit_code = sam_cmdline("run")
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_ERROR
    assert not out
    assert "no experiment file specified" in err


def test_run_missing_file(sam_cmdline, capsys, tmp_path):
    exit_code = sam_cmdline(f"run -c {tmp_path / 'nothere.toml'}")
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_ERROR
    assert "nothere.toml" in err


def test_run_bad_experiment(sam_cmdline, capsys, tmp_path):
    experiment = tmp_path / "bad.toml"
    experiment.write_text("[[policies]]\nkind = 'b99'\n", encoding="utf-8")
    exit_code = sam_cmdline(f"run -c {experiment} --out {tmp_path}")
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_ERROR
    assert "b99" in err


#
# analyze
#
def test_analyze_summary(sam_cmdline, capsys, trace_file):
    exit_code = sam_cmdline(f"analyze -t {trace_file}")
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_SUCCESS
    header, row = out.splitlines()
    assert header.startswith("policy,scenario,seed,cycles")
    assert row.startswith("aura,pollution_attack,0,40")


ANALYSES = [
    ("jitter", "cycle,delta,cumulative", 39),
    ("phases", "phase,start,cycles,mean_utility", 1),
    ("stability -w 5", "phase,sigma_tps", 1),
    ("cost", "mean_duration,p95_duration", 1),
]


@pytest.mark.parametrize("metric, header, rows", ANALYSES)
def test_analyze_metrics(sam_cmdline, capsys, trace_file, metric, header, rows):
    exit_code = sam_cmdline(f"analyze -t {trace_file} -m {metric}")
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_SUCCESS
    lines = out.splitlines()
    assert lines[0].startswith(header)
    assert len(lines) == rows + 1


def test_analyze_window_too_long(sam_cmdline, capsys, trace_file):
    exit_code = sam_cmdline(f"analyze -t {trace_file} -m stability")
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_ERROR
    assert "window" in err


def test_analyze_unknown_metric(sam_cmdline, capsys, trace_file):
    exit_code = sam_cmdline(f"analyze -t {trace_file} -m wobble")
    assert exit_code == Sam.EXIT_USAGE


#
# oracle
#
def test_oracle(sam_cmdline, capsys, tmp_path):
    profiles = tmp_path / "profiles.csv"
    cmdline = (
        f"oracle --scenario pollution_attack --chunk 64 --seeds 1"
        f" --profiles-out {profiles}"
    )
    exit_code = sam_cmdline(cmdline)
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_SUCCESS
    assert "vip" in out
    assert "utility = " in out
    assert "chunk 64 pages" in out
    with open(profiles, encoding="utf-8") as fobj:
        assert len(read_profiles(fobj)) == 2


def test_oracle_bad_phase(sam_cmdline, capsys):
    exit_code = sam_cmdline("oracle --scenario pollution_attack --phase 3")
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_ERROR
    assert "phases 0 to 0" in err


def test_oracle_unknown_scenario(sam_cmdline, capsys):
    exit_code = sam_cmdline("oracle --scenario nowhere")
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_ERROR
    assert "unknown scenario" in err


#
# suite
#
def test_suite(sam_cmdline, capsys, tmp_path):
    exit_code = sam_cmdline(f"suite oracle --quick --out {tmp_path}")
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_SUCCESS
    assert "dp_equals_brute_force" in out
    assert "pass" in out
    report = tomlkit.loads((tmp_path / "suite-oracle.toml").read_text()).unwrap()
    assert report["passed"] is True


def test_suite_failure(sam_cmdline, capsys, mocker, tmp_path):
    report = SuiteReport("regret")
    report.check("slope", 1.2, "<= 0.6", False)
    mocker.patch("samcache.suites.run_suite", return_value=report)
    exit_code = sam_cmdline(f"suite regret --out {tmp_path}")
    out, err = capsys.readouterr()
    assert exit_code == Sam.EXIT_ERROR
    assert "FAIL" in out
    assert (tmp_path / "suite-regret.toml").exists()


def test_suite_unknown(sam_cmdline, capsys):
    assert sam_cmdline("suite wobble") == Sam.EXIT_USAGE
