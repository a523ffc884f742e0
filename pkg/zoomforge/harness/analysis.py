import typing

import numpy as np
import pydantic
from loguru import logger

from zoomforge.bounds import assess, bound_table, render_text
from zoomforge.estimators import (
    DriftRow,
    TailRow,
    ams_cesaro_check,
    bounded_box_mass,
    drift_check,
    escape_probability,
    occupation_histogram,
    stopping_records,
    tail_check,
)
from zoomforge.estimators.trajectory import TrajectorySet
from zoomforge.shared.models.config import ExperimentConfig
from zoomforge.shared.utils import LogTime
from .experiment import Components
from .loops import run_entropy_growth, run_transience
from .persistence import RunWriter

# tail states beyond this multiple of Δ_0 count as unbounded
BOUNDED_FACTOR = 1e3


class StabilitySummary(pydantic.BaseModel):
    diverged: int
    tail_p99: typing.Optional[float] = None
    tail_max: typing.Optional[float] = None
    bound: typing.Optional[float] = None
    bounded: bool = False


def stability_summary(trajectories: TrajectorySet, delta0: float | None, burn_in: float = 0.5) -> StabilitySummary:
    """99th percentile and maximum of |x_t|∞ over the tail of every replication."""
    start = int(burn_in * trajectories.horizon)
    norms = np.max(np.abs(trajectories.x[:, start:, :]), axis=-1)
    diverged = int((~np.all(np.isfinite(norms), axis=1)).sum())
    summary = StabilitySummary(diverged=diverged)
    if diverged:
        return summary
    summary.tail_p99 = float(np.quantile(norms, 0.99))
    summary.tail_max = float(norms.max())
    if delta0 is not None:
        summary.bound = BOUNDED_FACTOR * delta0
        summary.bounded = summary.tail_max <= summary.bound
    return summary


def _boxes(config: ExperimentConfig, dimension: int) -> list[tuple[list[float], list[float]]]:
    spec = config.estimators
    if spec.ams_boxes:
        return [(b["lo"], b["hi"]) for b in spec.ams_boxes]
    return [([-r] * dimension, [r] * dimension) for r in spec.ams_radii]


def _params(parts: Components):
    return getattr(parts.coder, "params", None)


def analyze(
    config: ExperimentConfig,
    parts: Components,
    trajectories: TrajectorySet,
    writer: RunWriter,
    notes: list[str],
) -> dict[str, typing.Any]:
    """
    Run every selected estimator on a finished run and write its CSV table
    and JSON summary. Returns the summaries by estimator name.
    """
    spec = config.estimators
    select = set(spec.select)
    params = _params(parts)
    summaries: dict[str, typing.Any] = dict()

    stability = stability_summary(trajectories, params.delta0 if params else None, spec.burn_in)
    writer.write_json("stability.json", stability)
    summaries["stability"] = stability

    if "bounds" in select:
        with LogTime("Bounds"):
            cap = parts.capacity()
            if not cap.converged:
                notes.append(f"Capacity solver stopped with gap {cap.gap:.3g}.")
            stream = parts.model.noise_stream(config.seed).spawn("inner")
            report = assess(parts.model, trajectories, cap.capacity, parts.coder, spec.inner_draws, spec.burn_in, stream)
        writer.write_json("capacity.json", cap)
        writer.write_json("bounds.json", report)
        writer.write_text("bounds.txt", render_text(bound_table(report, f"Bounds: {config.name}")))
        if not report.consistent():
            notes.append("L_inf <= V_hat <= M_sup does not hold within 2 standard errors.")
        summaries["bounds"] = report

    records = None
    if select & {"stopping", "drift", "tail"}:
        records = stopping_records(trajectories)

    if "stopping" in select:
        rows = []
        for i, (record, trajectory) in enumerate(zip(records, trajectories)):
            gaps = record.gaps
            rows.append(
                (i, trajectory.seed, len(record), float(gaps.mean()) if len(gaps) else None,
                 int(gaps.max()) if len(gaps) else None, record.satisfies(trajectory))
            )
        writer.write_csv("stopping.csv", ("replication", "seed", "stopping_times", "mean_gap", "max_gap", "verified"), rows)
        summary = {
            "stopping_times": int(sum(r[2] for r in rows)),
            "verified": all(r[5] for r in rows),
        }
        writer.write_json("stopping.json", summary)
        summaries["stopping"] = summary

    if "drift" in select:
        floor = spec.drift_floor or (params.floor if params else 1.0)
        rows, summary = drift_check(
            records,
            floor,
            spec.drift_bins,
            alpha=params.alpha if params else None,
            zoom_out=params.zoom_out if params else None,
            notes=notes,
        )
        writer.write_rows("drift.csv", rows, header=DriftRow._fields)
        writer.write_json("drift.json", summary)
        summaries["drift"] = summary

    if "tail" in select:
        rows, summary = tail_check(records, spec.tail_bins, spec.tail_kmax, notes)
        writer.write_rows("tail.csv", rows, header=TailRow._fields)
        writer.write_json("tail.json", summary)
        summaries["tail"] = summary

    if "ams" in select:
        rows, summary = ams_cesaro_check(trajectories, _boxes(config, trajectories.dimension), spec.ams_min_n)
        writer.write_rows("ams.csv", rows)
        writer.write_json("ams.json", summary)
        summaries["ams"] = summary

    if "escape" in select:
        rows = escape_probability(trajectories, spec.threshold, spec.escape_times)
        mass = bounded_box_mass(trajectories, spec.mass_radius, spec.escape_times)
        writer.write_rows("escape.csv", rows)
        writer.write_rows("mass.csv", mass)
        summary = {
            "threshold": spec.threshold,
            "final": rows[-1]._asdict() if rows else None,
            "mass_radius": spec.mass_radius,
            "mass_final": mass[-1]._asdict() if mass else None,
        }
        writer.write_json("escape.json", summary)
        summaries["escape"] = summary

    if "histogram" in select:
        hist = occupation_histogram(
            trajectories, spec.histogram_bins, spec.histogram_radius, spec.histogram_quantile, spec.burn_in
        )
        cells = np.argwhere(hist.counts > 0)
        edges = hist.edges()
        header = [f"bin{i}" for i in range(len(edges))] + [f"lo{i}" for i in range(len(edges))] + ["count", "mass"]
        measure = hist.measure()
        rows = [
            list(map(int, c)) + [float(edges[i][k]) for i, k in enumerate(c)] + [int(hist.counts[tuple(c)]), float(measure[tuple(c)])]
            for c in cells
        ]
        writer.write_csv("histogram.csv", header, rows)
        summary = {
            "lo": hist.lo,
            "hi": hist.hi,
            "bins": hist.bins,
            "total": hist.total,
            "out_of_box_mass": hist.out_of_box_mass,
        }
        writer.write_json("histogram.json", summary)
        summaries["histogram"] = summary

    if "entropy" in select:
        fit = run_entropy_growth(config, trajectories, notes=notes)
        writer.write_csv("entropy.csv", ("t", "entropy_bits"), zip(fit.times, fit.entropies))
        summary = {"slope": fit.slope, "stderr": fit.stderr, "intercept": fit.intercept}
        writer.write_json("entropy.json", summary)
        summaries["entropy"] = summary

    if "transience" in select:
        rows, summary = run_transience(config, parts)
        writer.write_rows("transience.csv", rows)
        writer.write_json("transience.json", summary)
        summaries["transience"] = summary

    logger.info(f"Analysis of '{config.name}': {', '.join(sorted(summaries))}.")
    return summaries
