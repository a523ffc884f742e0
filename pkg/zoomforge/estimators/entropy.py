import math
import typing

import numpy as np
from loguru import logger
from scipy import stats
from scipy.special import digamma
from sklearn.neighbors import BallTree, KDTree

from zoomforge.shared.errors import InputError

MIN_SAMPLES = 100


class GrowthFit(typing.NamedTuple):
    slope: float
    stderr: float
    intercept: float
    times: list[int]
    entropies: list[float]


def _tree(points: np.ndarray):
    if points.shape[1] >= 20:
        return BallTree(points, metric="chebyshev")
    return KDTree(points, metric="chebyshev")


def entropy_estimate(samples, k: int = 4, notes: list[str] | None = None) -> float:
    """
    Nearest-neighbour (Kozachenko-Leonenko) differential entropy in bits,
    with max-norm distances:

        h = ψ(n) - ψ(k) + d ln 2 + d mean(ln r_k),  converted to bits.

    Samples whose k-th neighbour sits at distance 0 are dropped from the
    average and reported as degenerate.
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if k < 1:
        raise InputError("Neighbour order k must be at least 1.")
    if len(x) < max(MIN_SAMPLES, k + 1):
        raise InputError(f"Entropy estimation needs at least {MIN_SAMPLES} samples, got {len(x)}.")
    if not np.all(np.isfinite(x)):
        raise InputError("Entropy samples contain non-finite values.")

    n, d = x.shape
    # centre first so a constant shift leaves the distances unchanged
    x = x - x.mean(axis=0)
    distances = _tree(x).query(x, k=k + 1)[0][:, k]
    zero = distances <= 0.0
    if zero.any():
        message = f"{int(zero.sum())} of {n} samples have a zero k-NN distance; duplicates distort the estimate."
        logger.warning(message)
        if notes is not None:
            notes.append(message)
        distances = distances[~zero]
        if len(distances) == 0:
            raise InputError("All samples coincide; differential entropy is -inf.")
    nats = digamma(n) - digamma(k) + d * math.log(2.0) + d * float(np.mean(np.log(distances)))
    return nats / math.log(2.0)


def entropy_growth_rate(snapshots: dict[int, np.ndarray], k: int = 4, notes: list[str] | None = None) -> GrowthFit:
    """
    Least-squares slope of the entropy of x_t, estimated across replications,
    against t. snapshots maps t to an (R, N) array of states.
    """
    if len(snapshots) < 3:
        raise InputError("Entropy growth needs at least 3 snapshot times.")
    times = sorted(snapshots)
    entropies = []
    for t in times:
        x = np.asarray(snapshots[t], dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        finite = np.all(np.isfinite(x), axis=-1)
        if not finite.all():
            message = f"t={t}: {int((~finite).sum())} diverged replications left out of the entropy estimate."
            logger.warning(message)
            if notes is not None:
                notes.append(message)
        entropies.append(entropy_estimate(x[finite], k, notes))
    fit = stats.linregress(times, entropies)
    return GrowthFit(float(fit.slope), float(fit.stderr), float(fit.intercept), list(times), entropies)
