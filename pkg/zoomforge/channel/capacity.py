import math

import numpy as np
from loguru import logger

from zoomforge.shared.errors import InputError
from zoomforge.shared.models.reports import CapacityResult
from .channels import ChannelModel

LN2 = math.log(2.0)


def _divergences(kernel: np.ndarray, output: np.ndarray) -> np.ndarray:
    """D(W(.|x) || output) per input x, in nats, with 0 log 0 = 0."""
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(kernel > 0.0, kernel * np.log(kernel / output[None, :]), 0.0)
    return terms.sum(axis=1)


def mutual_information(channel: ChannelModel, distribution) -> float:
    p = np.asarray(distribution, dtype=float)
    if p.shape != (channel.inputs,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
        raise InputError("Input distribution must be a probability vector over the channel inputs.")
    output = p @ channel.kernel
    return float(p @ _divergences(channel.kernel, output)) / LN2


def capacity(channel: ChannelModel, tolerance: float = 1e-9, max_iterations: int = 10_000) -> CapacityResult:
    """
    Shannon capacity of a memoryless channel by alternating maximisation
    (Blahut-Arimoto). Each iteration brackets the capacity between I(p) and
    max_x D(W(.|x) || pW); it stops when the bracket is within tolerance.
    """
    if tolerance <= 0:
        raise InputError("Capacity tolerance must be positive.")

    kernel = channel.kernel
    p = np.full(channel.inputs, 1.0 / channel.inputs)
    lower_bounds = []
    lower = upper = 0.0
    converged = False
    iteration = 0

    for iteration in range(1, max_iterations + 1):
        d = _divergences(kernel, p @ kernel)
        lower = float(p @ d) / LN2
        upper = float(d.max()) / LN2
        lower_bounds.append(lower)
        if upper - lower <= tolerance:
            converged = True
            break
        p = p * np.exp(d - d.max())
        p /= p.sum()

    gap = upper - lower
    if not converged:
        logger.warning(
            f"Capacity iteration for {channel!r} stopped after {iteration} iterations "
            f"with gap {gap:.3e} > {tolerance:.1e}."
        )

    return CapacityResult(
        capacity=max(lower, 0.0),
        input_distribution=p.tolist(),
        iterations=iteration,
        gap=gap,
        tolerance=tolerance,
        converged=converged,
        lower_bounds=lower_bounds,
    )
