import csv
from pathlib import Path

import numpy as np

import zoomforge
from zoomforge.dynamics.noise import NoiseStream
from zoomforge.shared.errors import ArtifactIOError, ConfigurationError
from zoomforge.shared.utils import ensure_registries

ROW_TOLERANCE = 1e-12


class ChannelModel:
    """
    A memoryless channel on input symbols 1..M and output symbols 1..M'.
    Row q of the kernel is P(q' | q). Symbols are 1-based throughout.
    """

    def __init__(self, kernel, kind: str = "general", erasure_symbol: int | None = None, **params):
        kernel = np.array(kernel, dtype=float, ndmin=2)
        if kernel.ndim != 2 or kernel.size == 0:
            raise ConfigurationError("Channel kernel must be a non-empty matrix.")
        if np.any(kernel < 0.0) or np.any(kernel > 1.0) or np.any(np.isnan(kernel)):
            raise ConfigurationError("Channel kernel entries must lie in [0, 1].")
        sums = kernel.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > ROW_TOLERANCE):
            bad = int(np.argmax(np.abs(sums - 1.0)))
            raise ConfigurationError(f"Channel kernel row {bad + 1} sums to {sums[bad]!r}, not 1.")
        self.kernel = kernel
        self.kind = kind
        self.erasure_symbol = erasure_symbol
        self.params = params
        self.cumulative = np.cumsum(kernel, axis=1)
        self.cumulative[:, -1] = 1.0

    def __repr__(self):
        extra = "".join(f" {k}={v}" for k, v in self.params.items())
        return f"<ChannelModel {self.kind} M={self.inputs} M'={self.outputs}{extra}>"

    @property
    def inputs(self) -> int:
        return self.kernel.shape[0]

    @property
    def outputs(self) -> int:
        return self.kernel.shape[1]

    @classmethod
    def noiseless(cls, symbols: int) -> "ChannelModel":
        return cls(np.eye(symbols), kind="noiseless", symbols=symbols)

    @classmethod
    def erasure(cls, symbols: int, epsilon: float) -> "ChannelModel":
        if not 0.0 <= epsilon <= 1.0:
            raise ConfigurationError("Erasure probability must lie in [0, 1].")
        kernel = np.zeros((symbols, symbols + 1))
        kernel[np.arange(symbols), np.arange(symbols)] = 1.0 - epsilon
        kernel[:, -1] = epsilon
        return cls(kernel, kind="erasure", erasure_symbol=symbols + 1, symbols=symbols, epsilon=epsilon)

    @classmethod
    def bsc(cls, crossover: float) -> "ChannelModel":
        if not 0.0 <= crossover <= 1.0:
            raise ConfigurationError("Crossover probability must lie in [0, 1].")
        p = crossover
        return cls([[1.0 - p, p], [p, 1.0 - p]], kind="bsc", crossover=p)

    @classmethod
    def general(cls, kernel) -> "ChannelModel":
        return cls(kernel, kind="general")

    def is_erasure(self, symbols: np.ndarray) -> np.ndarray:
        if self.erasure_symbol is None:
            return np.zeros(np.shape(symbols), dtype=bool)
        return np.asarray(symbols) == self.erasure_symbol

    def sample(self, q: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
        """
        Draw outputs for inputs q given one uniform per input; the inverse-CDF
        of row q picks the output.
        """
        q = np.asarray(q, dtype=np.int64)
        if np.any(q < 1) or np.any(q > self.inputs):
            raise ConfigurationError(f"Channel input outside the alphabet 1..{self.inputs}.")
        rows = self.cumulative[q - 1]
        u = np.asarray(uniforms, dtype=float)[..., None]
        return np.sum(rows <= u, axis=-1).astype(np.int64) + 1


def transmit(channel: ChannelModel, q, rng: NoiseStream):
    """
    Send one symbol (or an array of symbols) through the channel. One uniform
    is consumed per symbol for every channel kind, so the output is fixed by
    (seed, draw index).
    """
    scalar = np.ndim(q) == 0
    q = np.atleast_1d(np.asarray(q, dtype=np.int64))
    out = channel.sample(q, rng.uniform(q.size).reshape(q.shape))
    return int(out[0]) if scalar else out


def read_kernel_csv(path: str | Path) -> list[list[float]]:
    try:
        with open(path, newline="") as f:
            rows = [[float(v) for v in row] for row in csv.reader(f) if row]
    except OSError as err:
        raise ArtifactIOError(f"Cannot read channel kernel {path}: {err}") from err
    except ValueError as err:
        raise ConfigurationError(f"Channel kernel {path} is not numeric: {err}") from err
    return rows


def build_noiseless(spec, symbols: int) -> ChannelModel:
    return ChannelModel.noiseless(symbols)


def build_erasure(spec, symbols: int) -> ChannelModel:
    return ChannelModel.erasure(symbols, spec.epsilon)


def build_bsc(spec, symbols: int) -> ChannelModel:
    return ChannelModel.bsc(spec.crossover)


def build_general(spec, symbols: int) -> ChannelModel:
    kernel = spec.kernel if spec.kernel is not None else read_kernel_csv(spec.kernel_csv)
    return ChannelModel.general(kernel)


def build_channel(spec, codec_symbols: int) -> ChannelModel:
    """
    Build the configured channel. When the config leaves the alphabet size open
    the channel is sized to the codec's symbol count.
    """
    ensure_registries()
    if not (builder := zoomforge.CHANNEL_KINDS.get(spec.kind)):
        raise ConfigurationError(f"Unknown channel kind '{spec.kind}'.")
    symbols = spec.symbols or codec_symbols
    return builder(spec, symbols)
