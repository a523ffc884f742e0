import math

import numpy as np
import pydantic
from loguru import logger
from scipy import integrate, signal

from zoomforge.shared.errors import InputError


class BodeResult(pydantic.BaseModel):
    # ∫_{-1/2}^{1/2} ½ log2(S_y(f) / S_v(f)) df, in bits
    integral: float
    samples: int
    segment: int
    # z statistic of the first-quarter versus last-quarter mean
    drift_z: float
    stationary: bool


def mean_drift_z(series: np.ndarray) -> float:
    """Two-sample z statistic between the first and last quarter means."""
    n = len(series) // 4
    a, b = series[:n], series[-n:]
    se = math.sqrt(a.var(ddof=1) / n + b.var(ddof=1) / n)
    return abs(float(a.mean() - b.mean())) / se if se > 0 else 0.0


def bode_integral(
    y,
    v,
    segment: int = 4096,
    drift_limit: float = 4.0,
    notes: list[str] | None = None,
) -> BodeResult:
    """
    Log-sensitivity integral of a closed loop observed through an additive
    channel q′ = q + v. S_y and S_v are Welch estimates (Hann taper, 50%
    overlap); the spectra are even, so the integral is taken over [0, 1/2]
    with the trapezoid rule.
    """
    y = np.asarray(y, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if len(y) != len(v):
        raise InputError("Output and channel-noise records have different lengths.")
    if len(y) < 2 * segment:
        raise InputError(f"Need at least {2 * segment} samples for segments of {segment}.")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(v))):
        raise InputError("Bode records contain non-finite values; the loop is not stable.")

    z = max(mean_drift_z(y), mean_drift_z(v))
    stationary = z <= drift_limit
    if not stationary:
        message = f"Bode records look nonstationary (mean drift z = {z:.2f}); remove more burn-in."
        logger.warning(message)
        if notes is not None:
            notes.append(message)

    welch = dict(fs=1.0, window="hann", nperseg=segment, noverlap=segment // 2)
    f, s_y = signal.welch(y, **welch)
    _, s_v = signal.welch(v, **welch)
    keep = (s_y > 0) & (s_v > 0)
    integral = float(integrate.trapezoid(np.log2(s_y[keep] / s_v[keep]), f[keep]))
    return BodeResult(integral=integral, samples=len(y), segment=segment, drift_z=z, stationary=stationary)
