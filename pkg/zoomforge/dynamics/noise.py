import zlib

import numpy as np

from zoomforge.shared.errors import ConfigurationError


def noise_factor(dimension: int, std: float | list[float] = 1.0, covariance=None) -> np.ndarray:
    """
    Return L with L L^T = Σ_w. A scalar or list std gives a diagonal Σ_w;
    an explicit covariance is Cholesky-factored.
    """
    if covariance is not None:
        cov = np.asarray(covariance, dtype=float)
        if cov.shape != (dimension, dimension):
            raise ConfigurationError(
                f"Noise covariance has shape {cov.shape}, expected ({dimension}, {dimension})."
            )
        if np.allclose(cov, np.diag(np.diag(cov))) and np.all(np.diag(cov) >= 0):
            return np.diag(np.sqrt(np.diag(cov)))
        try:
            return np.linalg.cholesky(cov)
        except np.linalg.LinAlgError as err:
            raise ConfigurationError("Noise covariance is not positive definite.") from err

    std = np.broadcast_to(np.asarray(std, dtype=float), (dimension,))
    if np.any(std < 0):
        raise ConfigurationError("Noise standard deviations must be non-negative.")
    return np.diag(std)


class NoiseStream:
    """
    A seeded i.i.d. stream of zero-mean Gaussian noise vectors (and of
    uniforms for channel draws). draw_index counts the draws of the stream's
    kind: vectors for normal(), scalars for uniform(). A stream that keeps to
    one kind is pinned by (seed, kind, draw_index); replay() redraws the same
    kind and shape to get back there. Mixing kinds on one stream marks it
    "mixed" and it can no longer be replayed.
    """

    def __init__(self, seed: int, factor: np.ndarray | None = None, dimension: int = 1):
        self.seed = int(seed)
        if factor is None:
            factor = np.eye(dimension)
        self.factor = np.atleast_2d(np.asarray(factor, dtype=float))
        self.dimension = self.factor.shape[0]
        self.draw_index = 0
        self.kind: str | None = None
        self.rng = np.random.Generator(np.random.PCG64(self.seed))

    @property
    def covariance(self) -> np.ndarray:
        return self.factor @ self.factor.T

    def _advance(self, kind: str, count: int):
        if count < 0:
            raise ValueError("count must be non-negative")
        if self.kind is None:
            self.kind = kind
        elif self.kind != kind:
            self.kind = "mixed"
        self.draw_index += count

    def normal(self, count: int) -> np.ndarray:
        self._advance("normal", count)
        z = self.rng.standard_normal((count, self.dimension))
        return z @ self.factor.T

    def uniform(self, count: int) -> np.ndarray:
        self._advance("uniform", count)
        return self.rng.random(count)

    def skip(self, count: int, kind: str = "uniform"):
        """Advance the stream by count draws of kind without keeping them."""
        match kind:
            case "normal":
                self.normal(count)
            case "uniform":
                self.uniform(count)
            case _:
                raise ValueError(f"Cannot skip draws of kind '{kind}'.")

    def spawn(self, tag: str, factor: np.ndarray | None = None) -> "NoiseStream":
        """
        An independent child stream keyed by tag; the same (seed, tag) always
        gives the same child.
        """
        seq = np.random.SeedSequence([self.seed, zlib.crc32(tag.encode("utf-8"))])
        child_seed = int(seq.generate_state(1, dtype=np.uint64)[0])
        return NoiseStream(child_seed, self.factor if factor is None else factor)

    @classmethod
    def replay(
        cls, seed: int, draw_index: int, factor=None, dimension: int = 1, kind: str = "uniform"
    ) -> "NoiseStream":
        stream = cls(seed, factor, dimension)
        stream.skip(draw_index, kind)
        return stream


def sample_noise(stream: NoiseStream, count: int) -> np.ndarray:
    """count noise vectors, shape (count, N)."""
    return stream.normal(count)
