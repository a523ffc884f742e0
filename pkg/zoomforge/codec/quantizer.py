import numpy as np

from zoomforge.shared.errors import ProtocolError


def bin_index(x, levels: int, delta) -> np.ndarray:
    """
    Bin k in 1..K of the mid-rise uniform quantizer, 0 for overflow.

    Bin k is [(k - 1 - K/2) Δ, (k - K/2) Δ), closed on the left; the right
    edge x = KΔ/2 belongs to bin K.
    """
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta, dtype=float)
    half = 0.5 * levels
    with np.errstate(invalid="ignore", over="ignore"):
        in_range = (x >= -half * delta) & (x <= half * delta)
        k = np.floor(x / delta + half) + 1.0
        k = np.where(np.isfinite(k), k, 1.0)
        # x / Δ may round across a bin edge; settle against the edges directly.
        k = np.where(x < (k - 1.0 - half) * delta, k - 1.0, k)
        k = np.where(x >= (k - half) * delta, k + 1.0, k)
    k = np.clip(k, 1, levels).astype(np.int64)
    return np.where(in_range, k, 0)


def reconstruction(k, levels: int, delta) -> np.ndarray:
    """(k - (K + 1)/2) Δ for k >= 1, 0 for the overflow bin."""
    k = np.asarray(k)
    level = (k - 0.5 * (levels + 1)) * np.asarray(delta, dtype=float)
    return np.where(k > 0, level, 0.0)


def uniform_quantize(x, levels: int, delta):
    """
    The K-level uniform quantizer of bin size Δ. Values outside
    [-KΔ/2, KΔ/2] quantize to 0.
    """
    if levels < 2:
        raise ValueError("A uniform quantizer needs at least 2 levels.")
    if np.any(np.asarray(delta) <= 0):
        raise ValueError("Bin size must be positive.")
    out = reconstruction(bin_index(x, levels, delta), levels, delta)
    return float(out) if np.ndim(out) == 0 else out


def normalized(x, levels: int, delta) -> np.ndarray:
    """h = x / (Δ 2^{R'-1}) with 2^{R'} = K; |h| <= 1 means in range."""
    return np.asarray(x, dtype=float) / (np.asarray(delta, dtype=float)[..., None] * 0.5 * levels)


def overflow_symbol(levels: int, dimension: int) -> int:
    return levels**dimension + 1


def cell_symbol(k: np.ndarray, levels: int) -> np.ndarray:
    """Symbol 1 + Σ (k_i - 1) K^i for a cell with coordinates k_i in 1..K."""
    weights = levels ** np.arange(k.shape[-1], dtype=np.int64)
    return 1 + np.sum((k - 1) * weights, axis=-1)


def cell_of_symbol(symbol: np.ndarray, levels: int, dimension: int) -> np.ndarray:
    digits = np.asarray(symbol, dtype=np.int64)[..., None] - 1
    weights = levels ** np.arange(dimension, dtype=np.int64)
    return (digits // weights) % levels + 1


def quantize_vector(x, levels: int, delta):
    """
    Quantize every coordinate with the shared bin size Δ (shape x.shape[:-1]).

    Returns (symbol, x̂). When any coordinate overflows the whole vector
    overflows: the symbol is K^N + 1 and x̂ = 0.
    """
    x = np.asarray(x, dtype=float)
    delta = np.asarray(delta, dtype=float)
    dimension = x.shape[-1]
    k = bin_index(x, levels, delta[..., None])
    overflow = np.any(k == 0, axis=-1)
    symbol = np.where(overflow, overflow_symbol(levels, dimension), cell_symbol(np.maximum(k, 1), levels))
    xhat = np.where(overflow[..., None], 0.0, reconstruction(k, levels, delta[..., None]))
    return symbol, xhat


def decode_symbol(symbol, levels: int, dimension: int, delta):
    """
    Inverse of quantize_vector on the decoder side: (x̂, overflow flags).
    """
    symbol = np.asarray(symbol, dtype=np.int64)
    top = overflow_symbol(levels, dimension)
    if np.any(symbol < 1) or np.any(symbol > top):
        bad = symbol[(symbol < 1) | (symbol > top)].ravel()[0]
        raise ProtocolError(f"Symbol {int(bad)} is outside the codebook 1..{top}.")
    overflow = symbol == top
    k = np.where(overflow[..., None], 0, cell_of_symbol(np.minimum(symbol, top - 1), levels, dimension))
    xhat = reconstruction(k, levels, np.asarray(delta, dtype=float)[..., None])
    return xhat, overflow
