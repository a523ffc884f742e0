import math
import typing
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pydantic
from loguru import logger
from pydantic import Field
from scipy import stats

from zoomforge.shared.errors import InputError
from .trajectory import Trajectory, as_set

MIN_DRIFT_EPOCHS = 100
MIN_TAIL_EPOCHS = 10_000


@dataclass(slots=True)
class StoppingTimeRecord:
    """
    T_0 = 0 < T_1 < ... where T_{z+1} is the first k > T_z with the encoder
    in range, together with Δ at each T_z and the gaps T_{z+1} - T_z.
    """

    times: np.ndarray
    delta: np.ndarray
    gaps: np.ndarray

    def __len__(self):
        return len(self.times)

    def satisfies(self, trajectory: Trajectory) -> bool:
        """Replay the defining property against the trajectory."""
        in_range = ~np.asarray(trajectory.overflow, dtype=bool)
        if len(self.times) == 0 or self.times[0] != 0:
            return False
        for a, b in zip(self.times, self.times[1:]):
            if not in_range[b] or in_range[a + 1 : b].any():
                return False
        return not in_range[self.times[-1] + 1 :].any()


def stopping_times(trajectory: Trajectory) -> StoppingTimeRecord:
    in_range = ~np.asarray(trajectory.overflow, dtype=bool)
    later = np.flatnonzero(in_range[1:]) + 1
    times = np.concatenate([[0], later]).astype(np.int64)
    return StoppingTimeRecord(times, np.asarray(trajectory.delta)[times], np.diff(times))


def stopping_records(trajectories) -> list[StoppingTimeRecord]:
    trajectories = as_set(trajectories)
    trajectories.require("overflow", "delta")
    return [stopping_times(t) for t in trajectories]


def _epochs(records: list[StoppingTimeRecord]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(Δ at T_z, Δ at T_{z+1}, gap) over every complete epoch."""
    if not records:
        raise InputError("No stopping-time records.")
    start = np.concatenate([r.delta[:-1] for r in records])
    end = np.concatenate([r.delta[1:] for r in records])
    gaps = np.concatenate([r.gaps for r in records])
    keep = np.isfinite(start) & np.isfinite(end) & (start > 0)
    return start[keep], end[keep], gaps[keep]


def _group(levels: np.ndarray, bins: int) -> list[tuple[float, float]]:
    """Split the distinct grid levels into at most `bins` contiguous groups."""
    distinct = np.unique(levels)
    if len(distinct) == 0:
        return []
    return [(float(g[0]), float(g[-1])) for g in np.array_split(distinct, min(bins, len(distinct)))]


def _note(notes: list[str] | None, message: str):
    logger.warning(message)
    if notes is not None:
        notes.append(message)


def _t_interval(values: np.ndarray, confidence: float = 0.95) -> tuple[float, float, float, float]:
    """(mean, standard error, CI low, CI high) with a Student t interval."""
    n = len(values)
    mean = float(values.mean())
    if n < 2:
        return mean, math.nan, math.nan, math.nan
    se = float(values.std(ddof=1) / math.sqrt(n))
    half = float(stats.t.ppf(0.5 + confidence / 2, n - 1)) * se
    return mean, se, mean - half, mean + half


class DriftRow(typing.NamedTuple):
    log2_delta_low: float
    log2_delta_high: float
    epochs: int
    mean_drift: float
    stderr: float
    ci_low: float
    ci_high: float


class DriftSummary(pydantic.BaseModel):
    floor: float
    epochs: int
    # b_0 = -E[log2 Δ²_{T_{z+1}} - log2 Δ²_{T_z} | Δ_{T_z} > F]
    b0: Optional[float] = None
    b0_ci_low: Optional[float] = None
    b0_ci_high: Optional[float] = None
    # 2 log2 α + 2 log2(|a| + δ) E[gap - 1], the drift the epoch decomposition predicts
    plugin_drift: Optional[float] = None
    underpowered: bool = False
    all_bins_negative: bool = False


def drift_check(
    records: list[StoppingTimeRecord],
    floor: float,
    bins: int = 8,
    alpha: float | None = None,
    zoom_out: float | None = None,
    notes: list[str] | None = None,
) -> tuple[list[DriftRow], DriftSummary]:
    """
    Conditional mean of log2 Δ²_{T_{z+1}} - log2 Δ²_{T_z} per Δ_{T_z} bin
    above F, with 95% t intervals, and the overall b_0 above F.
    """
    start, end, gaps = _epochs(records)
    above = start > floor
    drift = 2.0 * (np.log2(end[above]) - np.log2(start[above]))
    levels = np.log2(start[above])
    summary = DriftSummary(floor=floor, epochs=int(above.sum()))

    if summary.epochs < MIN_DRIFT_EPOCHS:
        summary.underpowered = True
        _note(notes, f"Drift check is underpowered: {summary.epochs} epochs above F = {floor:g}, want {MIN_DRIFT_EPOCHS}.")
    if summary.epochs == 0:
        return [], summary

    rows = []
    for low, high in _group(levels, bins):
        sel = (levels >= low) & (levels <= high)
        mean, se, ci_low, ci_high = _t_interval(drift[sel])
        rows.append(DriftRow(low, high, int(sel.sum()), mean, se, ci_low, ci_high))

    mean, _, ci_low, ci_high = _t_interval(drift)
    summary.b0 = -mean
    summary.b0_ci_low = None if math.isnan(ci_high) else -ci_high
    summary.b0_ci_high = None if math.isnan(ci_low) else -ci_low
    summary.all_bins_negative = all(r.ci_high < 0 for r in rows)
    if alpha is not None and zoom_out is not None:
        summary.plugin_drift = 2.0 * math.log2(alpha) + 2.0 * math.log2(zoom_out) * float(np.mean(gaps[above] - 1))
    return rows, summary


class TailRow(typing.NamedTuple):
    log2_delta_low: float
    log2_delta_high: float
    k: int
    epochs: int
    tail: float


class TailBin(pydantic.BaseModel):
    log2_delta_low: float
    log2_delta_high: float
    epochs: int
    p_gap_ge_2: float
    # fitted r̂ from log2 P(gap >= k) ~ log2 C - k log2 r̂; None when every gap is 1
    rate: Optional[float] = None
    constant: Optional[float] = None
    decreasing: bool = True


class TailSummary(pydantic.BaseModel):
    epochs: int
    bins: list[TailBin] = Field(default_factory=list)
    # P(gap >= 2) decreases as the Δ bin increases
    monotone_across_bins: bool = True
    underpowered: bool = False


def tail_check(
    records: list[StoppingTimeRecord],
    bins: int = 4,
    kmax: int = 10,
    notes: list[str] | None = None,
) -> tuple[list[TailRow], TailSummary]:
    """
    Empirical P(T_{z+1} - T_z >= k | Δ_{T_z} in bin) for k = 1..kmax, with a
    log-linear decay fit per bin. The fitted constant Ĉ is the smallest one
    for which Ĉ r̂^{-k} dominates the empirical tail at every k.
    """
    start, _, gaps = _epochs(records)
    summary = TailSummary(epochs=len(gaps))
    if summary.epochs < MIN_TAIL_EPOCHS:
        summary.underpowered = True
        _note(notes, f"Tail check is underpowered: {summary.epochs} epochs, want {MIN_TAIL_EPOCHS}.")

    levels = np.log2(start)
    ks = np.arange(1, kmax + 1)
    rows = []
    for low, high in _group(levels, bins):
        sel = (levels >= low) & (levels <= high)
        g = gaps[sel]
        tail = np.array([(g >= k).mean() for k in ks])
        rows.extend(TailRow(low, high, int(k), len(g), float(p)) for k, p in zip(ks, tail))
        item = TailBin(
            log2_delta_low=low,
            log2_delta_high=high,
            epochs=len(g),
            p_gap_ge_2=float(tail[1]) if kmax >= 2 else 0.0,
            decreasing=bool(np.all(np.diff(tail) <= 0)),
        )
        positive = tail > 0
        if positive.sum() >= 2 and tail[positive].min() < 1.0:
            fit = stats.linregress(ks[positive], np.log2(tail[positive]))
            rate = 2.0 ** (-fit.slope)
            item.rate = float(rate)
            item.constant = float(np.max(tail[positive] * rate ** ks[positive]))
        summary.bins.append(item)

    p2 = [b.p_gap_ge_2 for b in summary.bins]
    summary.monotone_across_bins = all(b <= a for a, b in zip(p2, p2[1:]))
    return rows, summary
