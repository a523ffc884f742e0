import math

import numpy as np

import zoomforge
from zoomforge.shared.errors import ConfigurationError
from zoomforge.shared.utils import ensure_registries
from .base import ContractionCertificate, Form, SystemModel


class LinearModel(SystemModel):
    """
    x+ = A x + u + w. A comes from `matrix` or from diagonal `gains`.
    """

    model_type = "linear"
    form = Form.CONTROL_IN_F
    analytic_jacobian = True

    def __init__(self, dimension: int = 1, gains=None, matrix=None, **kwargs):
        if matrix is not None:
            a = np.asarray(matrix, dtype=float)
        else:
            gains = [2.0] if gains is None else gains
            a = np.diag(np.broadcast_to(np.asarray(gains, dtype=float), (dimension,)))
        if a.shape != (dimension, dimension):
            raise ConfigurationError(f"System matrix has shape {a.shape}, expected ({dimension}, {dimension}).")
        log_det = _log2_abs_det(a)
        super().__init__(dimension=dimension, l1=log_det, m1=log_det, **kwargs)
        self.matrix = a

    def f(self, x, u, w):
        return x @ self.matrix.T + u

    def jacobian(self, x, u=None, w=None):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.matrix, x.shape + (self.dimension,)).copy()

    def log_det_jacobian(self, x, u=None, w=None):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], self.l1)

    def eigenvalues(self):
        return np.linalg.eigvals(self.matrix)

    @property
    def certificate(self):
        a = float(np.max(np.sum(np.abs(self.matrix), axis=1)))
        matrix = self.matrix
        return ContractionCertificate(a, lambda z: -(np.asarray(z, dtype=float) @ matrix.T))


class BenchmarkPlant(SystemModel):
    """
    f(x, u) = b (x + 0.5 sin x) + u, coordinatewise. The slope of
    x + 0.5 sin x lies in [0.5, 1.5], so κ(z) = -b (z + 0.5 sin z) contracts
    with a = 1.5 b.
    """

    model_type = "benchmark"
    form = Form.CONTROL_IN_F
    analytic_jacobian = True

    def __init__(self, dimension: int = 1, b: float = 1.2, **kwargs):
        if b <= 0:
            raise ConfigurationError("Benchmark plant needs b > 0.")
        super().__init__(
            dimension=dimension,
            l1=dimension * math.log2(0.5 * b),
            m1=dimension * math.log2(1.5 * b),
            **kwargs,
        )
        self.b = float(b)

    def shape(self, x):
        return x + 0.5 * np.sin(x)

    def f(self, x, u, w):
        return self.b * self.shape(x) + u

    def jacobian(self, x, u=None, w=None):
        x = np.asarray(x, dtype=float)
        diag = self.b * (1.0 + 0.5 * np.cos(x))
        return diag[..., :, None] * np.eye(self.dimension)

    def log_det_jacobian(self, x, u=None, w=None):
        x = np.asarray(x, dtype=float)
        return np.sum(np.log2(self.b * (1.0 + 0.5 * np.cos(x))), axis=-1)

    @property
    def certificate(self):
        return ContractionCertificate(1.5 * self.b, lambda z: -self.b * self.shape(np.asarray(z, dtype=float)))


class ExpandingScalar(SystemModel):
    """
    x+ = c x + 0.5 sin x + u + w, the expanding scalar plant; slope lies in
    [c - 0.5, c + 0.5], so for c > 1.5 the plant expands everywhere.
    """

    model_type = "expanding"
    form = Form.ADDITIVE_NOISE
    analytic_jacobian = True

    def __init__(self, dimension: int = 1, c: float = 2.0, **kwargs):
        if dimension != 1:
            raise ConfigurationError("The expanding plant is scalar.")
        if c <= 0.5:
            raise ConfigurationError("The expanding plant needs c > 0.5 to stay invertible.")
        super().__init__(dimension=1, l1=math.log2(c - 0.5), m1=math.log2(c + 0.5), **kwargs)
        self.c = float(c)

    def f(self, x, u, w):
        return self.c * x + 0.5 * np.sin(x)

    def jacobian(self, x, u=None, w=None):
        x = np.asarray(x, dtype=float)
        return (self.c + 0.5 * np.cos(x))[..., None]

    def log_det_jacobian(self, x, u=None, w=None):
        x = np.asarray(x, dtype=float)
        return np.log2(self.c + 0.5 * np.cos(x[..., 0]))

    @property
    def certificate(self):
        return ContractionCertificate(self.c + 0.5, lambda z: -self.f(np.asarray(z, dtype=float), None, None))


class ModulatedGain(SystemModel):
    """
    x+ = c 2^(θ tanh w) ⊙ x + u: every coordinate is scaled by a gain the
    noise modulates, so log2 |det J| = N log2 c + θ Σ tanh w_i depends on w
    alone. tanh w is odd and ν is symmetric, hence its ν-average is exactly
    N log2 c. There is no contraction certificate: κ(x̂) cannot cancel an
    unknown gain, so the plant runs with the open-loop coder.
    """

    model_type = "modulated"
    form = Form.ADDITIVE_CONTROL
    analytic_jacobian = True

    def __init__(self, dimension: int = 1, c: float = 2.0, theta: float = 0.5, **kwargs):
        if c <= 0:
            raise ConfigurationError("The modulated plant needs c > 0.")
        if theta < 0:
            raise ConfigurationError("The modulated plant needs theta >= 0.")
        super().__init__(
            dimension=dimension,
            l1=dimension * (math.log2(c) - theta),
            m1=dimension * (math.log2(c) + theta),
            **kwargs,
        )
        self.c = float(c)
        self.theta = float(theta)

    def gain(self, w):
        return self.c * np.exp2(self.theta * np.tanh(w))

    def f(self, x, u, w):
        x = np.asarray(x, dtype=float)
        w = np.zeros_like(x) if w is None else np.asarray(w, dtype=float)
        return self.gain(w) * x

    def jacobian(self, x, u=None, w=None):
        x = np.asarray(x, dtype=float)
        w = np.zeros_like(x) if w is None else np.asarray(w, dtype=float)
        diag = np.broadcast_to(self.gain(w), x.shape)
        return diag[..., :, None] * np.eye(self.dimension)

    def log_det_jacobian(self, x, u=None, w=None):
        x = np.asarray(x, dtype=float)
        w = np.zeros_like(x) if w is None else np.asarray(w, dtype=float)
        logs = math.log2(self.c) + self.theta * np.tanh(w)
        return np.sum(np.broadcast_to(logs, x.shape), axis=-1)


def _log2_abs_det(a: np.ndarray) -> float:
    sign, logabsdet = np.linalg.slogdet(a)
    if sign == 0:
        raise ConfigurationError("System matrix is singular; f must be invertible.")
    return logabsdet / math.log(2.0)


def build_model(spec) -> SystemModel:
    ensure_registries()
    if not (cls := zoomforge.MODEL_CLASSES.get(spec.name)):
        raise ConfigurationError(f"Unknown model '{spec.name}'.")
    try:
        return cls.from_spec(spec)
    except TypeError as err:
        raise ConfigurationError(f"Bad parameters for model '{spec.name}': {err}") from err
