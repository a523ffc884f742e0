import typing

import numpy as np
import pydantic
from pydantic import Field

from zoomforge.shared.errors import InputError
from .trajectory import as_set


class OccupationHistogram:
    """
    Counts of samples over an axis-aligned grid on [lo, hi]; samples outside
    the box (or non-finite) go to out_of_box, so counts + out_of_box = total.
    """

    def __init__(self, lo, hi, bins: int = 64):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = np.asarray(hi, dtype=float)
        if self.lo.shape != self.hi.shape or np.any(self.lo >= self.hi):
            raise InputError("Histogram box needs lo < hi on every axis.")
        self.bins = bins
        self.counts = np.zeros((bins,) * len(self.lo), dtype=np.int64)
        self.out_of_box = 0
        self.total = 0

    @classmethod
    def symmetric(cls, radius: float, dimension: int, bins: int = 64) -> "OccupationHistogram":
        return cls([-radius] * dimension, [radius] * dimension, bins)

    def add(self, samples) -> "OccupationHistogram":
        x = np.asarray(samples, dtype=float).reshape(-1, len(self.lo))
        inside = np.all(np.isfinite(x), axis=-1) & np.all((x >= self.lo) & (x <= self.hi), axis=-1)
        counts, _ = np.histogramdd(x[inside], bins=self.bins, range=list(zip(self.lo, self.hi)))
        self.counts += counts.astype(np.int64)
        self.out_of_box += int((~inside).sum())
        self.total += len(x)
        return self

    def measure(self) -> np.ndarray:
        """Empirical mass per bin; together with out_of_box_mass it sums to 1."""
        return self.counts / self.total if self.total else self.counts.astype(float)

    @property
    def out_of_box_mass(self) -> float:
        return self.out_of_box / self.total if self.total else 0.0

    def edges(self) -> list[np.ndarray]:
        return [np.linspace(a, b, self.bins + 1) for a, b in zip(self.lo, self.hi)]


def occupation_histogram(trajectories, bins: int = 64, radius: float | None = None,
                         quantile: float = 0.999, burn_in: float = 0.5) -> OccupationHistogram:
    """
    Histogram of the tail states of every replication. Without a radius the
    box is [-r, r]^N with r the given quantile of |x|∞ over those states.
    """
    trajectories = as_set(trajectories)
    start = int(burn_in * trajectories.horizon)
    x = trajectories.x[:, start:, :].reshape(-1, trajectories.dimension)
    if radius is None:
        norms = np.max(np.abs(x), axis=-1)
        norms = norms[np.isfinite(norms)]
        radius = float(np.quantile(norms, quantile)) if len(norms) else 1.0
        radius = radius if radius > 0 else 1.0
    return OccupationHistogram.symmetric(radius, trajectories.dimension, bins).add(x)


class CesaroRow(typing.NamedTuple):
    box: str
    n: int
    cesaro: float
    # |average at 2N - average at N|, empty for the last N
    gap: float | None


class BoxSummary(pydantic.BaseModel):
    box: str
    final_n: int
    final_average: float
    final_gap: typing.Optional[float] = None
    # mass of the box at the last time step
    final_mass: float


class CesaroSummary(pydantic.BaseModel):
    boxes: list[BoxSummary] = Field(default_factory=list)
    max_final_gap: typing.Optional[float] = None


def box_label(lo, hi) -> str:
    return "[" + ", ".join(f"{a:g}:{b:g}" for a, b in zip(lo, hi)) + "]"


def cesaro_grid(horizon: int, min_n: int = 64) -> list[int]:
    """N = T+1, (T+1)/2, (T+1)/4, ... down to min_n, ascending."""
    grid = []
    n = horizon + 1
    while n >= min_n:
        grid.append(n)
        n //= 2
    return sorted(grid) or [horizon + 1]


def ams_cesaro_check(trajectories, boxes: list[tuple[typing.Sequence[float], typing.Sequence[float]]],
                     min_n: int = 64) -> tuple[list[CesaroRow], CesaroSummary]:
    """
    Cesàro averages (1/N) Σ_{k<N} P(x_k ∈ F) for each box F at N on a
    doubling grid, with the gap between consecutive N.
    """
    trajectories = as_set(trajectories)
    if not boxes:
        raise InputError("No event boxes given.")
    grid = cesaro_grid(trajectories.horizon, min_n)
    rows, summary = [], CesaroSummary()
    for lo, hi in boxes:
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        label = box_label(lo, hi)
        inside = np.all((trajectories.x >= lo) & (trajectories.x <= hi), axis=-1)
        freq = inside.mean(axis=0)
        running = np.cumsum(freq)
        averages = [float(running[n - 1] / n) for n in grid]
        gaps = [abs(b - a) for a, b in zip(averages, averages[1:])] + [None]
        rows.extend(CesaroRow(label, n, avg, gap) for n, avg, gap in zip(grid, averages, gaps))
        summary.boxes.append(
            BoxSummary(
                box=label,
                final_n=grid[-1],
                final_average=averages[-1],
                final_gap=gaps[-2] if len(gaps) > 1 else None,
                final_mass=float(freq[-1]),
            )
        )
    finals = [b.final_gap for b in summary.boxes if b.final_gap is not None]
    summary.max_final_gap = max(finals) if finals else None
    return rows, summary
