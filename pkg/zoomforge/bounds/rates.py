import math

import numpy as np
from loguru import logger

from zoomforge.dynamics.base import SystemModel
from zoomforge.dynamics.noise import NoiseStream
from zoomforge.estimators.trajectory import as_set
from zoomforge.shared.errors import InputError, NotApplicableError
from zoomforge.shared.models.reports import BoundReport, Estimate, Verdicts

# slack for comparisons between exactly representable bound values
EXACT = 1e-9


def _batch_means(values: np.ndarray, batches: int = 10) -> float:
    """Standard error of a single long average from non-overlapping batch means."""
    usable = (len(values) // batches) * batches
    if usable < batches:
        return math.nan
    means = values[:usable].reshape(batches, -1).mean(axis=1)
    return float(means.std(ddof=1) / math.sqrt(batches))


def jacobian_entropy_rate(
    model: SystemModel,
    trajectories,
    inner_draws: int = 16,
    burn_in: float = 0.5,
    stream: NoiseStream | None = None,
) -> Estimate:
    """
    V_hat: the average of log2 |det J(f)(x_t, w)| over the tail of every
    replication, with w drawn fresh from ν (inner_draws per visited state)
    when the Jacobian depends on the noise. The standard error comes from the
    spread of the per-replication averages, or from batch means for a single
    replication.
    """
    if model.l1 == model.m1:
        # constant Jacobian determinant
        return Estimate(value=model.l1, stderr=0.0, label="exact")
    trajectories = as_set(trajectories)
    start = int(math.floor(burn_in * trajectories.horizon))
    x = trajectories.x[:, start:, :]
    finite = np.all(np.isfinite(x), axis=-1)
    if not finite.any():
        raise InputError("Every tail state has diverged; V_hat is undefined.")
    if not finite.all():
        logger.warning(f"{int((~finite).sum())} diverged states left out of V_hat.")

    if model.jacobian_depends_on_noise:
        stream = stream or model.noise_stream(0)
        total = np.zeros(x.shape[:2])
        for _ in range(inner_draws):
            w = stream.normal(x.shape[0] * x.shape[1]).reshape(x.shape)
            total += np.where(finite, model.log_det_jacobian(np.where(finite[..., None], x, 0.0), None, w), 0.0)
        values = total / inner_draws
    else:
        values = np.where(finite, model.log_det_jacobian(np.where(finite[..., None], x, 0.0)), 0.0)

    counts = finite.sum(axis=1)
    keep = counts > 0
    per_rep = values.sum(axis=1)[keep] / counts[keep]
    value = float(per_rep.mean())
    if len(per_rep) >= 2:
        stderr = float(per_rep.std(ddof=1) / math.sqrt(len(per_rep)))
    else:
        stderr = _batch_means(values[0][finite[0]])
    return Estimate(value=value, stderr=0.0 if math.isnan(stderr) else stderr, label="empirical")


def linear_rate_bound(eigenvalues) -> float:
    """Σ log2 |λ_i| over the eigenvalues with |λ_i| > 1."""
    mags = np.abs(np.asarray(list(eigenvalues), dtype=complex))
    return float(np.sum(np.log2(mags[mags > 1.0])))


def sufficiency_threshold(model: SystemModel) -> float:
    """N log2 |a| + 1 for a plant with a contraction certificate."""
    if (cert := model.certificate) is None:
        raise NotApplicableError(f"{model!r} has no contraction certificate.")
    return model.dimension * math.log2(abs(cert.a)) + 1.0


def log_jacobian_range(model: SystemModel, trajectories=None, stream: NoiseStream | None = None) -> tuple[float, float]:
    """
    (L_inf, M_sup). Declared bounds are used when finite; otherwise the range
    is sampled over the visited states.
    """
    lo, hi = model.l1, model.m1
    if math.isfinite(lo) and math.isfinite(hi):
        return lo, hi
    if trajectories is None:
        return lo, hi
    x = as_set(trajectories).x.reshape(-1, model.dimension)
    x = x[np.all(np.isfinite(x), axis=-1)]
    w = None
    if model.jacobian_depends_on_noise:
        w = (stream or model.noise_stream(0)).normal(len(x))
    values = model.log_det_jacobian(x, None, w)
    if not math.isfinite(lo):
        lo = float(values.min())
    if not math.isfinite(hi):
        hi = float(values.max())
    return lo, hi


def verdicts(
    v_hat: Estimate,
    l_inf: float,
    m_sup: float,
    capacity: float,
    linear_bound: float | None = None,
    sufficiency: float | None = None,
    codec: dict | None = None,
) -> BoundReport:
    """Assemble the BoundReport; every verdict is a comparison of the numbers passed in."""
    codec = codec or {}
    return BoundReport(
        v_hat=v_hat,
        l_inf=l_inf,
        m_sup=m_sup,
        linear_bound=linear_bound,
        sufficiency_threshold=sufficiency,
        channel_capacity=capacity,
        codec_rate=codec.get("codec_rate"),
        zoom_ratio=codec.get("zoom_ratio"),
        verdicts=Verdicts(
            ams_necessary=capacity >= l_inf - EXACT,
            phr_necessary=capacity >= v_hat.value - EXACT,
            sufficiency=None if sufficiency is None else capacity > sufficiency + EXACT,
            rate_condition=codec.get("rate_condition"),
        ),
    )


def assess(model: SystemModel, trajectories, capacity: float, coder=None, inner_draws: int = 16,
           burn_in: float = 0.5, stream: NoiseStream | None = None) -> BoundReport:
    """Every bound for one run, from the model, the trajectories and the channel capacity."""
    v_hat = jacobian_entropy_rate(model, trajectories, inner_draws, burn_in, stream)
    l_inf, m_sup = log_jacobian_range(model, trajectories, stream)
    eig = model.eigenvalues()
    linear = None if eig is None else linear_rate_bound(eig)
    threshold = None if model.certificate is None else sufficiency_threshold(model)
    return verdicts(v_hat, l_inf, m_sup, capacity, linear, threshold, coder.describe() if coder else None)
