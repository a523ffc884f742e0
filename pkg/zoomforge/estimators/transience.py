import typing

import numpy as np
import pydantic
from pydantic import Field

from zoomforge.shared.errors import InputError
from zoomforge.shared.utils import derive_seed
from .escape import wilson


class TransienceRow(typing.NamedTuple):
    x0: float
    replications: int
    returned: int
    escaped: int
    undecided: int
    # P(τ_S <= H), the lower bracket of P(τ_S < ∞)
    fraction: float
    # returned + undecided, the upper bracket
    upper: float
    ci_low: float
    ci_high: float


class TransienceSummary(pydantic.BaseModel):
    radius: float
    escape_radius: float
    horizon: int
    control_bound: typing.Optional[float] = None
    # return fraction strictly decreasing in x0
    decreasing: bool = False
    # every upper bracket below 1
    bounded_away: bool = False
    rows: int = 0
    starts: list[float] = Field(default_factory=list)


def _start(level: float, dimension: int, reps: int) -> np.ndarray:
    return np.full((reps, dimension), float(level))


def transience_scan(
    model,
    coder,
    starts: typing.Sequence[float],
    horizon: int,
    replications: int,
    radius: float,
    escape_radius: float = 1e6,
    seed: int = 0,
    channel=None,
    chunk: int = 256,
    confidence: float = 0.95,
) -> tuple[list[TransienceRow], TransienceSummary]:
    """
    Return fractions to S = {|x|∞ <= radius} from each start level.

    τ_S is the first t > 0 with x_t in S, so starts inside S report their
    first return. A replication escapes once |x|∞ exceeds escape_radius; the
    rest are undecided at the horizon. Every start level reuses the same
    replication seeds.
    """
    from zoomforge.harness.simulate import ClosedLoop, replication_streams

    if not starts:
        raise InputError("No start levels given.")
    if radius <= 0 or escape_radius <= radius:
        raise InputError("Transience scan needs 0 < radius < escape_radius.")

    seeds = [derive_seed(seed, i) for i in range(replications)]
    loop = ClosedLoop(model, coder, channel, divergence_radius=escape_radius, chunk=chunk)

    rows = []
    for level in starts:
        returned = np.zeros(replications, dtype=bool)
        escaped = np.zeros(replications, dtype=bool)

        def on_step(t, x):
            norms = np.max(np.abs(x), axis=-1)
            returned[:] |= ~escaped & (norms <= radius)
            escaped[:] |= ~returned & ~np.isfinite(norms)
            return bool(np.all(returned | escaped))

        streams = [replication_streams(model, s) for s in seeds]
        loop.run(_start(level, model.dimension, replications), streams, horizon, record=False, on_step=on_step)

        hits = int(returned.sum())
        gone = int(escaped.sum())
        open_ = replications - hits - gone
        low, high = wilson(hits, replications, confidence)
        rows.append(
            TransienceRow(
                float(level), replications, hits, gone, open_,
                hits / replications, (hits + open_) / replications, low, high,
            )
        )

    fractions = [r.fraction for r in rows]
    summary = TransienceSummary(
        radius=radius,
        escape_radius=escape_radius,
        horizon=horizon,
        control_bound=getattr(coder, "control_bound", None),
        decreasing=all(b < a for a, b in zip(fractions, fractions[1:])),
        bounded_away=all(r.upper < 1.0 for r in rows),
        rows=len(rows),
        starts=[float(s) for s in starts],
    )
    return rows, summary
