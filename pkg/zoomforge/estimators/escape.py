import typing

import numpy as np
from scipy import stats

from .thresholds import validate_threshold
from .trajectory import as_set


class FractionRow(typing.NamedTuple):
    t: int
    hits: int
    total: int
    fraction: float
    ci_low: float
    ci_high: float


def wilson(hits: int, total: int, confidence: float = 0.95) -> tuple[float, float]:
    if total == 0:
        return 0.0, 1.0
    ci = stats.binomtest(hits, total).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def default_times(horizon: int, count: int = 16) -> list[int]:
    """Roughly geometric times 1..horizon."""
    return sorted({int(t) for t in np.unique(np.geomspace(1, horizon, count).round())})


def _fractions(inside: np.ndarray, times: list[int], confidence: float) -> list[FractionRow]:
    rows = []
    for t, hit in zip(times, inside):
        hits, total = int(hit.sum()), int(hit.size)
        low, high = wilson(hits, total, confidence)
        rows.append(FractionRow(t, hits, total, hits / total if total else 0.0, low, high))
    return rows


def escape_probability(
    trajectories,
    threshold: str = "T",
    times: list[int] | None = None,
    confidence: float = 0.95,
) -> list[FractionRow]:
    """
    P(|x_T|∞ <= b(T)) per T across replications, with Wilson intervals.
    The threshold must grow subexponentially over the horizon.
    """
    trajectories = as_set(trajectories)
    b = validate_threshold(threshold, trajectories.horizon)
    times = [t for t in (times or default_times(trajectories.horizon)) if 1 <= t <= trajectories.horizon]
    norms = np.max(np.abs(trajectories.x[:, times, :]), axis=-1).T
    radius = b(np.asarray(times, dtype=float))
    return _fractions(norms <= radius[:, None], times, confidence)


def bounded_box_mass(trajectories, radius: float, times: list[int] | None = None, confidence: float = 0.95) -> list[FractionRow]:
    """Mass of the box {|x|∞ <= radius} at the given times."""
    trajectories = as_set(trajectories)
    times = [t for t in (times or default_times(trajectories.horizon)) if 0 <= t <= trajectories.horizon]
    norms = np.max(np.abs(trajectories.x[:, times, :]), axis=-1).T
    return _fractions(norms <= radius, times, confidence)
