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
"""the 'sam' command line tool for running cache allocation experiments"""

import argparse
import contextlib
import inspect
import io
import logging
import os
import pathlib

import pandas as pd
import rich.box
import rich.console
import rich.logging
import rich.table
import rich.text
import tomlkit
from benedict import benedict
from rich_argparse import RichHelpFormatter

from . import analysis, oracle, simenv, suites
from .experiment import DEFAULT_OUT_DIR, ExperimentConfig, run_experiment
from .exceptions import SamError, SamSyntaxError
from .policies import PolicyBase
from .utils import version_string


class Sam:
    """run experiments, acceptance suites and analyses of cache allocators"""

    EXIT_SUCCESS = 0
    EXIT_ERROR = 1
    EXIT_USAGE = 2

    # we call these ELEMENTS instead of STYLES to keep them apart from the
    # rich styles they map to
    OUTPUT_ELEMENTS = [
        "usage_args",
        "usage_groups",
        "usage_help",
        "usage_metavar",
        "usage_prog",
        "usage_syntax",
        "usage_text",
        "ui_border",
        "ui_column_header",
        "error_progname",
        "error_text",
        "debug_label",
        "debug_text",
        "check_pass",
        "check_fail",
    ]

    METRICS = ["summary", "jitter", "stability", "cost", "phases"]

    #
    # initialization and properties
    #
    def __init__(self):
        """Construct a new Sam object"""

        self.debug = False

        self.console = self._create_console(False)
        self.error_console = self._create_error_console(False)
        self.output_elements = benedict()

    #
    # methods to process command line arguments and dispatch them
    # to the appropriate methods for execution
    #
    def dispatch(self, prog, args):
        """process and execute all the arguments and options"""

        # now go process everything (order matters)
        try:
            if args.help or args.command == "help":
                self.console.print(self.argparser().format_help())
                exit_code = self.EXIT_SUCCESS
            elif args.version:
                print(f"{prog} {version_string()}")
                exit_code = self.EXIT_SUCCESS
            elif not args.command:
                # this is a usage error, so it goes to stderr
                self.error_console.print(self.argparser().format_help())
                exit_code = self.EXIT_USAGE
            elif args.command == "run":
                exit_code = self.command_run(args)
            elif args.command == "suite":
                exit_code = self.command_suite(args)
            elif args.command == "oracle":
                exit_code = self.command_oracle(args)
            elif args.command == "analyze":
                exit_code = self.command_analyze(args)
            elif args.command == "policies":
                exit_code = self.command_policies(args)
            elif args.command == "scenarios":
                exit_code = self.command_scenarios(args)
            else:
                self.error_msg(prog, f"{args.command}: unknown command")
                exit_code = self.EXIT_USAGE
        except (SamError, SamSyntaxError) as err:
            self.error_msg(prog, str(err))
            exit_code = self.EXIT_ERROR
        except OSError as err:
            self.error_msg(prog, f"{err.filename}: {err.strerror}")
            exit_code = self.EXIT_ERROR

        return exit_code

    #
    # functions for the various commands called by dispatch()
    #
    def command_run(self, args):
        """run every policy and seed of an experiment file

        writes one trace per (policy, seed) and a summary.toml into
        <out>/<name>/
        """
        config = self.load_experiment_from_args(args)
        if args.seed is not None:
            config.seeds = [args.seed]

        result = run_experiment(config, out_dir=args.out, jobs=args.jobs)
        for path in result.traces:
            self.debug_msg(f"wrote trace '{path}'")
        self.console.print(
            f"{len(result.traces)} traces and a summary written to {result.out_dir}"
        )
        return self.EXIT_SUCCESS

    def command_suite(self, args):
        """run an acceptance suite and write suite-<name>.toml"""
        report = suites.run_suite(args.name, quick=args.quick)

        out_dir = self._out_dir(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / f"suite-{args.name}.toml"
        with open(path, "w", encoding="utf-8") as fobj:
            fobj.write(tomlkit.dumps(report.as_document()))
        self.debug_msg(f"wrote report '{path}'")

        table = self._table(["Check", "Measured", "Threshold", "Result"])
        for check in report.checks:
            if check.passed:
                result = rich.text.Text(
                    "pass", style=self.output_elements.get("check_pass")
                )
            else:
                result = rich.text.Text(
                    "FAIL", style=self.output_elements.get("check_fail")
                )
            table.add_row(check.name, str(check.measured), check.threshold, result)
        self.console.print(table)

        if report.passed:
            return self.EXIT_SUCCESS
        return self.EXIT_ERROR

    def command_oracle(self, args):
        """hindsight-optimal plan for one phase of a built-in scenario"""
        scenario = simenv.make_scenario(args.scenario, seed=args.seed)
        phases = len(scenario.env.schedule.phases)
        if not 0 <= args.phase < phases:
            raise SamError(
                f"phase {args.phase}: scenario '{args.scenario}' has phases"
                f" 0 to {phases - 1}"
            )
        cfg = scenario.pool
        chunk = args.chunk or oracle.default_chunk(cfg.total_pages)
        profiles = oracle.profile_phase(
            scenario.env, args.phase, oracle.profile_grid(cfg, chunk), seeds=args.seeds
        )
        if args.profiles_out:
            with open(args.profiles_out, "w", encoding="utf-8", newline="") as fobj:
                oracle.write_profiles(profiles, fobj)
            self.debug_msg(f"wrote profiles to '{args.profiles_out}'")
        plan, value = oracle.solve_mckp(oracle.build_instance(profiles, cfg, chunk))

        table = self._table(["Tenant", "Name", "Pages"])
        for tenant, pages in enumerate(plan):
            table.add_row(str(tenant), scenario.tenant_names[tenant], str(pages))
        self.console.print(table)
        self.console.print(f"utility = {value:.4f}  # chunk {chunk} pages")
        return self.EXIT_SUCCESS

    def command_analyze(self, args):
        """compute a metric from a trace file and print it as CSV"""
        fname = os.path.expanduser(args.trace)
        with open(fname, encoding="utf-8") as fobj:
            self.debug_msg(f"loading trace from '{fname}'")
            trace = analysis.read_trace(fobj)

        if args.metric == "summary":
            rows = [analysis.summarize(trace)]
        elif args.metric == "jitter":
            jitter = analysis.jitter_series(trace)
            rows = [
                {"cycle": cycle + 1, "delta": delta, "cumulative": total}
                for cycle, (delta, total) in enumerate(
                    zip(jitter.deltas, jitter.cumulative, strict=True)
                )
            ]
        elif args.metric == "stability":
            sigmas = analysis.stability_sigma_tps(trace, args.window)
            rows = [
                {"phase": phase, "sigma_tps": sigma}
                for phase, sigma in enumerate(sigmas)
            ]
        elif args.metric == "cost":
            cost = analysis.amortized_cost(trace)
            rows = [
                {
                    key: value
                    for key, value in vars(cost).items()
                    if key != "touched_histogram"
                }
            ]
        else:
            utility = trace.utility
            rows = [
                {
                    "phase": phase,
                    "start": span.start,
                    "cycles": len(span),
                    "mean_utility": float(utility[span.start : span.stop].mean()),
                }
                for phase, span in enumerate(trace.phase_rows())
            ]

        buffer = io.StringIO()
        pd.DataFrame(rows).to_csv(buffer, index=False)
        self.console.print(buffer.getvalue(), end="")
        return self.EXIT_SUCCESS

    def command_policies(self, _):
        """list all available policies and a short description of each"""
        # ignore all other args
        policies = {}
        for name, clss in PolicyBase.classmap.items():
            desc = inspect.getdoc(clss)
            if desc:
                desc = desc.split("\n", maxsplit=1)[0]
            policies[name] = desc

        table = self._table(["Policy", "Description"])
        for policy in sorted(policies, key=_policy_order):
            table.add_row(policy, policies[policy])
        self.console.print(table)

        return self.EXIT_SUCCESS

    def command_scenarios(self, _):
        """list the built-in scenarios"""
        table = self._table(["Scenario", "Description"])
        for name, builder in simenv.SCENARIOS.items():
            desc = inspect.getdoc(builder)
            if desc:
                desc = " ".join(desc.split())
            table.add_row(name, desc)
        self.console.print(table)
        return self.EXIT_SUCCESS

    #
    # supporting methods
    #
    def _table(self, columns):
        border_style = None
        with contextlib.suppress(KeyError):
            border_style = self.output_elements["ui_border"]

        header_style = None
        with contextlib.suppress(KeyError):
            header_style = self.output_elements["ui_column_header"]

        table = rich.table.Table(
            box=rich.box.ROUNDED,
            border_style=border_style,
            header_style=header_style,
        )
        for column in columns:
            table.add_column(column)
        return table

    def _out_dir(self, cli_out):
        """--out, then $SAM_OUT_DIR, then ./results"""
        if cli_out:
            return pathlib.Path(cli_out)
        with contextlib.suppress(KeyError):
            return pathlib.Path(os.environ["SAM_OUT_DIR"])
        return pathlib.Path(DEFAULT_OUT_DIR)

    def _create_console(self, force_color):
        """create a rich console object to be used for output

        we have this as a separate method so that it can be patched
        in our test suite
        """
        # force_terminal can be True, False, or None
        # argparse will always set it to be True or False
        # we need it to be True or None
        if not force_color:
            force_color = None
        return rich.console.Console(
            soft_wrap=True,
            markup=False,
            emoji=False,
            highlight=False,
            force_terminal=force_color,
        )

    def _create_error_console(self, force_color):
        """create a rich console object to be used for std err

        we have this as a separate method so that it can be patched
        in our test suite
        """
        if not force_color:
            force_color = None
        return rich.console.Console(
            stderr=True,
            soft_wrap=True,
            markup=False,
            emoji=False,
            highlight=False,
            force_terminal=force_color,
        )

    def setup_logging(self):
        """send library log records to the error console"""
        handler = rich.logging.RichHandler(
            console=self.error_console,
            show_time=False,
            show_path=self.debug,
            markup=False,
        )
        logging.basicConfig(
            level=logging.DEBUG if self.debug else logging.WARNING,
            format="%(message)s",
            handlers=[handler],
            force=True,
        )

    def error_msg(self, prog, msg):
        """print a styled error message to stderr"""
        text = rich.text.Text()
        text.append(
            f"{prog}: ",
            style=self.output_elements.get("error_progname"),
        )
        text.append(msg, style=self.output_elements.get("error_text"))
        self.error_console.print(text)

    def debug_msg(self, msg):
        """print the message to stderr if debug is enabled"""
        if self.debug:
            text = rich.text.Text()
            text.append(
                "[debug] ",
                style=self.output_elements.get("debug_label"),
            )
            text.append(
                msg,
                style=self.output_elements.get("debug_text"),
            )
            self.error_console.print(text)

    def set_output_elements(self):
        """set the color elements for all our output

        Use the contents of SAM_COLORS env variable

        SAM_COLORS=usage_args=red bold on black:check_fail=white on red:
        """
        self.output_elements = benedict()
        oe = benedict()
        try:
            env_colors = os.environ["SAM_COLORS"]
            oe = self._parse_colorspec(env_colors)
            self.debug_msg("parsed environment variable SAM_COLORS")
        except KeyError:
            env_colors = None

        # https://no-color.org/
        try:
            env_no_color = os.environ["NO_COLOR"]
            if not env_no_color:
                self.debug_msg(
                    "ignoring NO_COLOR environment variable which is set, but empty"
                )
        except KeyError:
            env_no_color = None
            self.debug_msg("NO_COLOR environment variable is not set")

        if env_no_color:
            self.debug_msg(
                "no color output because NO_COLOR environment variable is set"
            )
        elif env_colors:
            self.output_elements = oe
            self.debug_msg("output colors set from SAM_COLORS environment variable")
        elif env_colors == "":
            # None is different than an empty string
            self.debug_msg(
                "no color output because SAM_COLORS environment"
                " variable is an empty string"
            )
        else:
            self.debug_msg(
                "no color output because SAM_COLORS environment variable is not set"
            )

        # transfer the usage elements into RichHelpFormatter
        RichHelpFormatter.styles = {}
        for key, value in self.output_elements.items():
            if key.startswith("usage_"):
                argparse_key = key[len("usage_") :]
                RichHelpFormatter.styles[f"argparse.{argparse_key}"] = value

    def _parse_colorspec(self, colorspec):
        "parse colorspec into a benedict of elements and styles"
        colors = benedict()
        for clause in colorspec.split(":"):
            parts = clause.split("=", 1)
            if len(parts) == 2:
                element, styledef = parts
                if element in self.OUTPUT_ELEMENTS:
                    colors[element] = styledef
                else:
                    self.debug_msg(
                        f"skipping invalid element in SAM_COLORS: '{element}'"
                    )
            else:
                self.debug_msg(f"skipping invalid expression in SAM_COLORS: '{clause}'")
        return colors

    def parse_args(self, argv=None):
        """parse argv and return prog and args

        also parses environment variables and sets:

        self.output_elements
        self.debug
        self.console
        self.error_console
        """
        # set_output_elements() has to run before parse_args() because it
        # changes the color output of argparser, but we want its debug
        # messages too
        if isinstance(argv, list) and (("-d" in argv) or ("--debug" in argv)):
            # this will get set again later too, which is OK
            self.debug = True
        self.set_output_elements()

        argparser = self.argparser()
        args = argparser.parse_args(argv)

        self.debug = args.debug

        if args.force_color:
            self.console = self._create_console(True)
            self.error_console = self._create_error_console(True)
        self.setup_logging()

        return (argparser.prog, args)

    def load_experiment_from_args(self, args):
        """Load an experiment file from the command line args

        Resolution order:
        1. --config, -c from the command line
        2. $SAM_CONFIG_FILE environment variable

        :raises: SamError if neither names a file
        """
        fname = None
        if args.config:
            fname = args.config
        else:
            with contextlib.suppress(KeyError):
                fname = os.environ["SAM_CONFIG_FILE"]
                self.debug_msg(f"found experiment '{fname}' in $SAM_CONFIG_FILE")

        if not fname:
            raise SamError("no experiment file specified")

        with open(os.path.expanduser(fname), "rb") as fobj:
            self.debug_msg(f"loading experiment from '{fname}'")
            return ExperimentConfig.load(fobj, filename=fname)

    #
    # methods for running from the command line and parsing arguments
    #
    @staticmethod
    def main(argv=None):
        """Entry point from the command line

        parse arguments and call dispatch() for processing
        """
        sam = Sam()
        try:
            (prog, args) = sam.parse_args(argv)
        except SystemExit as exc:
            return exc.code

        return sam.dispatch(prog, args)

    def argparser(self):
        """Build the argument parser"""

        RichHelpFormatter.usage_markup = True
        RichHelpFormatter.group_name_formatter = str.lower

        parser = argparse.ArgumentParser(
            prog="sam",
            description="simulate and evaluate multi-tenant cache allocators",
            formatter_class=RichHelpFormatter,
            add_help=False,
            epilog=(
                "type  '[argparse.prog]%(prog)s[/argparse.prog]"
                " [argparse.args]<command>[/argparse.args] -h' for command"
                " specific help"
            ),
        )

        hgroup = parser.add_mutually_exclusive_group()
        help_help = "show this help message and exit"
        hgroup.add_argument(
            "-h",
            "--help",
            action="store_true",
            help=help_help,
        )
        version_help = "show the program version and exit"
        hgroup.add_argument(
            "-v",
            "--version",
            action="store_true",
            help=version_help,
        )

        forcecolor_help = "force color output to files and pipes"
        parser.add_argument(
            "-F", "--force-color", action="store_true", help=forcecolor_help
        )

        # debug
        debug_help = "output debug and status information to stderr"
        parser.add_argument("-d", "--debug", action="store_true", help=debug_help)

        # set up for the sub commands
        subparsers = parser.add_subparsers(
            dest="command",
            title="arguments",
            metavar="<command>",
            required=False,
            help="command to perform, which must be one of the following:",
        )

        self._argparser_run(subparsers)
        self._argparser_suite(subparsers)
        self._argparser_oracle(subparsers)
        self._argparser_analyze(subparsers)
        self._argparser_policies(subparsers)
        self._argparser_scenarios(subparsers)
        self._argparser_help(subparsers)

        return parser

    def _argparser_run(self, subparsers):
        """Add a subparser for the run command"""
        cmd_help = "run the policies and seeds of an experiment file"
        parser = subparsers.add_parser(
            "run",
            description=cmd_help,
            formatter_class=RichHelpFormatter,
            help=cmd_help,
        )
        config_help = "specify a file containing an experiment"
        parser.add_argument("-c", "--config", metavar="<path>", help=config_help)
        seed_help = "run only this seed instead of the seeds in the file"
        parser.add_argument("-s", "--seed", metavar="<n>", type=int, help=seed_help)
        out_help = "directory for traces and summaries, overrides SAM_OUT_DIR"
        parser.add_argument("-o", "--out", metavar="<path>", help=out_help)
        jobs_help = "number of runs to execute in parallel"
        parser.add_argument("-j", "--jobs", metavar="<n>", type=int, help=jobs_help)

    def _argparser_suite(self, subparsers):
        """Add a subparser for the suite command"""
        cmd_help = "run an acceptance suite and report pass or fail"
        parser = subparsers.add_parser(
            "suite",
            description=cmd_help,
            formatter_class=RichHelpFormatter,
            help=cmd_help,
        )
        name_help = f"suite to run, one of: {', '.join(suites.SUITES)}"
        parser.add_argument(
            "name", metavar="<name>", choices=list(suites.SUITES), help=name_help
        )
        quick_help = "shorter runs and fewer instances"
        parser.add_argument("-q", "--quick", action="store_true", help=quick_help)
        out_help = "directory for the report, overrides SAM_OUT_DIR"
        parser.add_argument("-o", "--out", metavar="<path>", help=out_help)

    def _argparser_oracle(self, subparsers):
        """Add a subparser for the oracle command"""
        cmd_help = "compute the hindsight-optimal plan for one phase of a scenario"
        parser = subparsers.add_parser(
            "oracle",
            description=cmd_help,
            formatter_class=RichHelpFormatter,
            help=cmd_help,
        )
        scenario_help = "built-in scenario, see 'sam scenarios'"
        parser.add_argument(
            "--scenario", metavar="<name>", required=True, help=scenario_help
        )
        phase_help = "phase index, counting from 0"
        parser.add_argument(
            "--phase", metavar="<k>", type=int, default=0, help=phase_help
        )
        chunk_help = "allocation granularity in pages, default total_pages/64"
        parser.add_argument("--chunk", metavar="<pages>", type=int, help=chunk_help)
        seed_help = "first noise seed"
        parser.add_argument(
            "--seed", metavar="<n>", type=int, default=0, help=seed_help
        )
        seeds_help = "number of seeds to average profiles over"
        parser.add_argument(
            "--seeds", metavar="<n>", type=int, default=5, help=seeds_help
        )
        profiles_help = "also write the measured profiles to this CSV file"
        parser.add_argument("--profiles-out", metavar="<path>", help=profiles_help)

    def _argparser_analyze(self, subparsers):
        """Add a subparser for the analyze command"""
        cmd_help = "compute a metric from a trace file"
        parser = subparsers.add_parser(
            "analyze",
            description=cmd_help,
            formatter_class=RichHelpFormatter,
            help=cmd_help,
        )
        trace_help = "trace file written by 'sam run'"
        parser.add_argument(
            "-t", "--trace", metavar="<path>", required=True, help=trace_help
        )
        metric_help = f"metric to compute, one of: {', '.join(self.METRICS)}"
        parser.add_argument(
            "-m",
            "--metric",
            metavar="<name>",
            choices=self.METRICS,
            default="summary",
            help=metric_help,
        )
        window_help = "rolling window in cycles for the stability metric"
        parser.add_argument(
            "-w", "--window", metavar="<cycles>", type=int, default=50, help=window_help
        )

    def _argparser_policies(self, subparsers):
        """Add a subparser for the policies command"""
        cmd_help = "list all policies"
        subparsers.add_parser(
            "policies",
            description=cmd_help,
            formatter_class=RichHelpFormatter,
            help=cmd_help,
        )

    def _argparser_scenarios(self, subparsers):
        """Add a subparser for the scenarios command"""
        cmd_help = "list the built-in scenarios"
        subparsers.add_parser(
            "scenarios",
            description=cmd_help,
            formatter_class=RichHelpFormatter,
            help=cmd_help,
        )

    def _argparser_help(self, subparsers):
        """Add a subparser for the help command"""
        cmd_help = "display this usage message"
        subparsers.add_parser(
            "help",
            description=cmd_help,
            formatter_class=RichHelpFormatter,
            help=cmd_help,
        )


def _policy_order(name):
    """numbered baselines in numeric order after the named policies"""
    head = name.split("_", 1)[0]
    if head[:1] == "b" and head[1:].isdigit():
        return (1, int(head[1:]), name)
    return (0, 0, name)
