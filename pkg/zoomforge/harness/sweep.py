import typing
from concurrent.futures import Executor
from pathlib import Path

import pydantic
from loguru import logger

from zoomforge.shared.errors import InputError
from zoomforge.shared.models.config import ExperimentConfig
from zoomforge.shared.models.reports import BoundReport
from .analysis import analyze
from .experiment import build_components, run_closed_loop
from .persistence import RunWriter

# sweep axis aliases; anything else is taken as a dotted config path
AXES = {
    "levels": "codec.levels",
    "rate": "channel.symbols",
    "symbols": "channel.symbols",
    "epsilon": "channel.epsilon",
    "crossover": "channel.crossover",
}

# plant gain parameter per catalog model
GAIN_PARAMS = {
    "benchmark": "b",
    "linear": "gains",
    "expanding": "c",
    "modulated": "c",
}


def axis_path(config: ExperimentConfig, axis: str) -> str:
    if axis == "gain":
        if not (param := GAIN_PARAMS.get(config.model.name)):
            raise InputError(f"Model '{config.model.name}' has no gain to sweep.")
        return f"model.params.{param}"
    return AXES.get(axis, axis)


class SweepRow(pydantic.BaseModel):
    value: typing.Any
    output: str
    capacity: typing.Optional[float] = None
    v_hat: typing.Optional[float] = None
    v_hat_stderr: typing.Optional[float] = None
    codec_rate: typing.Optional[float] = None
    rate_condition: typing.Optional[bool] = None
    ams_necessary: typing.Optional[bool] = None
    phr_necessary: typing.Optional[bool] = None
    sufficiency: typing.Optional[bool] = None
    # tail states bounded (see stability.json)
    stable: bool = False
    warnings: int = 0


def _label(value) -> str:
    text = str(value).replace(" ", "")
    return "".join(c if c.isalnum() or c in "-_." else "_" for c in text)


def run_sweep(
    config: ExperimentConfig,
    axis: str,
    values: typing.Sequence,
    executor: Executor | None = None,
) -> tuple[list[SweepRow], list[BoundReport | None]]:
    """
    One full experiment per value of the axis, each in its own subdirectory
    of the config's output, and a merged summary table with the verdicts.
    """
    if not values:
        raise InputError(f"No values given for sweep axis '{axis}'.")
    path = axis_path(config, axis)
    root = Path(config.output)
    rows, reports = [], []

    for value in values:
        sub = config.with_overrides(**{path: value, "output": str(root / f"{_label(axis)}-{_label(value)}")})
        logger.info(f"Sweep {axis} = {value}")
        notes: list[str] = []
        parts = build_components(sub)
        writer = RunWriter(sub.output)
        trajectories, _ = run_closed_loop(sub, executor, writer, notes)
        summaries = analyze(sub, parts, trajectories, writer, notes)
        writer.write_manifest(sub.config_hash(), sub.name, trajectories.seeds, notes)

        report: BoundReport | None = summaries.get("bounds")
        row = SweepRow(
            value=value,
            output=sub.output,
            stable=summaries["stability"].bounded,
            warnings=len(notes),
        )
        if report is not None:
            row.capacity = report.channel_capacity
            row.v_hat = report.v_hat.value
            row.v_hat_stderr = report.v_hat.stderr
            row.codec_rate = report.codec_rate
            row.rate_condition = report.verdicts.rate_condition
            row.ams_necessary = report.verdicts.ams_necessary
            row.phr_necessary = report.verdicts.phr_necessary
            row.sufficiency = report.verdicts.sufficiency
        rows.append(row)
        reports.append(report)

    writer = RunWriter(root)
    header = list(SweepRow.model_fields)
    writer.write_csv("sweep.csv", header, [[getattr(r, h) for h in header] for r in rows])
    writer.write_json("sweep.json", {"axis": axis, "path": path, "rows": rows})
    writer.write_manifest(config.config_hash(), f"{config.name}:sweep:{axis}", config.replication_seeds(), [])
    return rows, reports
