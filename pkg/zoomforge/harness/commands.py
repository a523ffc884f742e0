import argparse
import math
import typing
from pathlib import Path

import orjson
from rich.table import Table

from zoomforge.bounds import bound_table, capacity_table
from zoomforge.estimators import bode_integral
from zoomforge.shared.commands import Command as BaseCommand
from zoomforge.shared.errors import ConfigurationError, VerdictInconsistency
from zoomforge.shared.models.config import ExperimentConfig, load_experiment
from zoomforge.shared.utils import load_experiment_file
from .analysis import analyze
from .experiment import build_components, run_closed_loop
from .loops import run_bode_loop
from .persistence import RunWriter
from .report import collate, report_text
from .sweep import run_sweep
from .workers import worker_pool


class Command(BaseCommand):
    help_category = "Lab"

    async def blocking(self, func: typing.Callable, *args):
        if (pool := worker_pool()) is not None:
            return await pool.call(func, *args)
        return func(*args)

    def executor(self, config: ExperimentConfig):
        if (pool := worker_pool()) is not None:
            return pool.executor(config.workers)
        return None


class _Experiment(Command):
    """
    Base for commands driven by an experiment file.
    """

    @classmethod
    def add_arguments(cls, parser: argparse.ArgumentParser):
        parser.add_argument("--config", metavar="PATH", help="experiment TOML file")
        parser.add_argument("--out", metavar="DIR", help="output directory (overrides the file)")
        parser.add_argument("--seed", type=int, metavar="N", help="base seed")
        parser.add_argument("--workers", type=int, metavar="N", help="worker processes")
        parser.add_argument("--horizon", type=int, metavar="N", help="steps per replication")
        parser.add_argument("--reps", type=int, metavar="N", help="replications")

    def load_config(self) -> ExperimentConfig:
        if not self.args.config:
            raise ConfigurationError(f"{self.name} needs --config PATH.")
        config = load_experiment(load_experiment_file(self.args.config))
        return config.with_overrides(
            output=self.args.out,
            seed=self.args.seed,
            workers=self.args.workers,
            horizon=self.args.horizon,
            replications=self.args.reps,
        )

    async def run_experiment(self, config: ExperimentConfig) -> dict:
        notes: list[str] = []
        parts = build_components(config)
        writer = RunWriter(config.output)
        trajectories, _ = await self.blocking(run_closed_loop, config, self.executor(config), writer, notes)
        summaries = await self.blocking(analyze, config, parts, trajectories, writer, notes)
        writer.write_manifest(config.config_hash(), config.name, trajectories.seeds, notes)
        for note in notes:
            self.send_line(f"warning: {note}")
        return summaries


class Simulate(_Experiment):
    """
    Run one experiment: simulate, analyse and write the run directory.

    Usage:
        zoomforge simulate --config PATH [--out DIR] [--seed N] [--workers N]
                           [--horizon N] [--reps N]
    """

    name = "simulate"

    async def func(self):
        config = self.load_config()
        summaries = await self.run_experiment(config)
        if (report := summaries.get("bounds")) is not None:
            self.send_rich(bound_table(report, f"Bounds: {config.name}"))
        self.send_line(f"run written to {config.output}")


class Bounds(_Experiment):
    """
    Simulate an experiment and write only its bound report.
    """

    name = "bounds"

    async def func(self):
        config = self.load_config().with_overrides(
            **{"estimators.select": ["bounds"], "persist_trajectories": False}
        )
        summaries = await self.run_experiment(config)
        self.send_rich(bound_table(summaries["bounds"], f"Bounds: {config.name}"))


class Capacity(_Experiment):
    """
    Print the capacity of the experiment's channel.
    """

    name = "capacity"

    async def func(self):
        config = self.load_config()
        parts = build_components(config)
        if parts.channel is None:
            raise self.Error(f"{parts.coder!r} does not use a channel.")
        result = parts.capacity()
        writer = RunWriter(config.output)
        writer.write_json("capacity.json", result)
        writer.write_manifest(config.config_hash(), f"{config.name}:capacity", [], [])
        self.send_rich(capacity_table([(repr(parts.channel), result)]))


class Bode(_Experiment):
    """
    Run the linear loop over an additive Gaussian channel and estimate its
    log-sensitivity integral.
    """

    name = "bode"

    async def func(self):
        config = self.load_config()
        spec = config.bode
        notes: list[str] = []
        records = await self.blocking(run_bode_loop, spec, config.seed)
        result = bode_integral(records.qprime, records.v, segment=spec.segment, notes=notes)
        bound = math.log2(abs(spec.gain_a)) if abs(spec.gain_a) > 1 else 0.0
        writer = RunWriter(config.output)
        writer.write_json(
            "bode.json",
            {"result": result, "gain": records.gain, "controller_gain": records.controller_gain, "lower_bound": bound},
        )
        writer.write_manifest(config.config_hash(), f"{config.name}:bode", [config.seed], notes)
        for note in notes:
            self.send_line(f"warning: {note}")
        self.send_line(f"Bode integral: {result.integral:.6f} bits")
        self.send_line(f"sum log2|lambda|: {bound:.6f}")


class Sweep(_Experiment):
    """
    Run one experiment per value of a parameter and merge the verdicts.

    Axes: levels, rate (channel symbols), epsilon, crossover, gain, or any
    dotted config path such as codec.s.

    Usage:
        zoomforge sweep --config PATH --axis NAME --values V [V ...]
    """

    name = "sweep"

    @classmethod
    def add_arguments(cls, parser):
        super().add_arguments(parser)
        parser.add_argument("--axis", required=True, help="parameter to sweep")
        parser.add_argument("--values", nargs="*", default=[], help="values, parsed as JSON when possible")

    @staticmethod
    def parse_value(text: str):
        try:
            return orjson.loads(text)
        except orjson.JSONDecodeError:
            return text

    async def func(self):
        config = self.load_config()
        values = [self.parse_value(v) for v in self.args.values]
        rows, _ = await self.blocking(run_sweep, config, self.args.axis, values, self.executor(config))
        table = Table(title=f"Sweep over {self.args.axis}")
        for column in ("value", "capacity", "v_hat", "codec_rate", "phr_necessary", "stable"):
            table.add_column(column)
        for row in rows:
            table.add_row(*(str(getattr(row, c)) for c in ("value", "capacity", "v_hat", "codec_rate", "phr_necessary", "stable")))
        self.send_rich(table)


class Report(Command):
    """
    Collate a run directory into a summary and report.json. Exits with 2 when
    a necessary condition is violated while stability diagnostics claim
    stability.

    Usage:
        zoomforge report RUN_DIR
    """

    name = "report"

    @classmethod
    def add_arguments(cls, parser):
        parser.add_argument("run", metavar="RUN_DIR", help="run directory holding manifest.json")

    async def func(self):
        root = Path(self.args.run)
        report = collate(root)
        for line in report_text(report).splitlines():
            self.send_line(line)
        RunWriter(root).write_json("report.json", report.model_dump(mode="python") | {"consistent": report.consistent})
        if not report.consistent:
            raise VerdictInconsistency(
                f"{', '.join(report.violations)} violated while {', '.join(report.stability_claims)}."
            )
