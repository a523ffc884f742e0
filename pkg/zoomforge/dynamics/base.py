import enum
import math
import typing

import numpy as np
from loguru import logger

from zoomforge.shared.errors import ConfigurationError, ModelInvalidError, NotApplicableError
from .noise import NoiseStream, noise_factor

LN2 = math.log(2.0)


class Form(str, enum.Enum):
    """
    Where control and noise enter the plant. Control is always applied
    through the identity: B = I, so u has the dimension of the state.
    """

    # x+ = f(x, w) + u; the Jacobian of f may depend on w.
    ADDITIVE_CONTROL = "additive-control"
    # x+ = f(x) + u + w
    ADDITIVE_NOISE = "additive-noise"
    # x+ = f(x, u) + w
    CONTROL_IN_F = "control-in-f"


class ContractionCertificate(typing.NamedTuple):
    """|f(x, κ(z))|∞ <= |a| |x - z|∞ for all x, z, with κ(0) = 0."""

    a: float
    control: typing.Callable[[np.ndarray], np.ndarray]


class SystemModel:
    """
    A discrete-time plant. Subclasses implement f(x, u, w) in the shape their
    form allows (see Form) and may override jacobian() with an analytic one;
    otherwise central finite differences are used.

    Every method is vectorised over leading axes: x has shape (..., N).
    """

    model_type: str = None
    form: Form = Form.CONTROL_IN_F
    analytic_jacobian: bool = False

    def __init__(
        self,
        dimension: int = 1,
        noise_std: float | list[float] = 1.0,
        noise_covariance=None,
        l1: float = -math.inf,
        m1: float = math.inf,
    ):
        if dimension < 1:
            raise ConfigurationError("Model dimension must be a positive integer.")
        self.dimension = int(dimension)
        self.noise_factor = noise_factor(self.dimension, noise_std, noise_covariance)
        self.l1 = float(l1)
        self.m1 = float(m1)

    @classmethod
    def from_spec(cls, spec) -> "SystemModel":
        return cls(
            dimension=spec.dimension,
            noise_std=spec.noise_std,
            noise_covariance=spec.noise_covariance,
            **spec.params,
        )

    def __repr__(self):
        return f"<{self.__class__.__name__} N={self.dimension} form={self.form.value}>"

    @property
    def jacobian_depends_on_noise(self) -> bool:
        return self.form == Form.ADDITIVE_CONTROL

    @property
    def certificate(self) -> ContractionCertificate | None:
        return None

    def eigenvalues(self) -> np.ndarray | None:
        """Eigenvalues of the system matrix, for linear plants only."""
        return None

    def noise_stream(self, seed: int) -> NoiseStream:
        return NoiseStream(seed, self.noise_factor)

    def f(self, x: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def transition(self, x: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        match self.form:
            case Form.ADDITIVE_CONTROL:
                return self.f(x, u, w) + u
            case Form.ADDITIVE_NOISE:
                return self.f(x, u, w) + u + w
            case Form.CONTROL_IN_F:
                return self.f(x, u, w) + w

    def control(self, xhat: np.ndarray) -> np.ndarray:
        """
        The control realising the contraction: the input for which
        |f(x, input)|∞ <= |a| |x - x̂|∞. Plants without a certificate
        cannot be driven by the zoom codec.
        """
        if (cert := self.certificate) is None:
            raise NotApplicableError(f"{self!r} has no contraction certificate.")
        return cert.control(xhat)

    def jacobian(self, x: np.ndarray, u: np.ndarray | None = None, w: np.ndarray | None = None) -> np.ndarray:
        return finite_difference_jacobian(self, x, u, w)

    def log_det_jacobian(self, x: np.ndarray, u: np.ndarray | None = None, w: np.ndarray | None = None) -> np.ndarray:
        """log2 |det J(f)| at every point; shape x.shape[:-1]."""
        sign, logabsdet = np.linalg.slogdet(self.jacobian(x, u, w))
        if np.any(sign == 0):
            raise ModelInvalidError(
                f"{self!r} has a singular Jacobian at a sampled point; f(., w) must be invertible."
            )
        return logabsdet / LN2


def _zeros_like_state(x: np.ndarray, v: np.ndarray | None) -> np.ndarray:
    return np.zeros_like(x) if v is None else np.asarray(v, dtype=float)


def finite_difference_jacobian(model: SystemModel, x, u=None, w=None) -> np.ndarray:
    """
    Central differences of f with respect to x, step 1e-6 (1 + |x_j|).
    Returns shape (..., N, N) with J[..., i, j] = d f_i / d x_j.
    """
    x = np.asarray(x, dtype=float)
    u = _zeros_like_state(x, u)
    w = _zeros_like_state(x, w)
    n = x.shape[-1]
    jac = np.empty(x.shape + (n,))
    for j in range(n):
        h = 1e-6 * (1.0 + np.abs(x[..., j]))
        e = np.zeros_like(x)
        e[..., j] = h
        diff = model.f(x + e, u, w) - model.f(x - e, u, w)
        jac[..., :, j] = diff / (2.0 * h[..., None])
    return jac


def _check_dimension(model: SystemModel, name: str, v: np.ndarray):
    if v.shape[-1:] != (model.dimension,):
        raise ConfigurationError(
            f"{name} has trailing dimension {v.shape[-1:]}, model expects ({model.dimension},)."
        )


def step(model: SystemModel, x, u, w) -> np.ndarray:
    """One-step successor of x under control u and noise w."""
    x, u, w = (np.asarray(v, dtype=float) for v in (x, u, w))
    for name, v in (("x", x), ("u", u), ("w", w)):
        _check_dimension(model, name, v)
    return model.transition(x, u, w)


def log_jacobian(model: SystemModel, x, w=None, u=None) -> np.ndarray:
    """log2 |det J(f)(x, w)| in bits."""
    x = np.asarray(x, dtype=float)
    _check_dimension(model, "x", x)
    return model.log_det_jacobian(x, u, w)


class ModelCheck(typing.NamedTuple):
    jacobian_error: float
    min_abs_det: float
    bound_violations: int
    contraction_ratio: float | None
    control_at_origin: float | None

    def ok(self, tolerance: float = 1e-5) -> bool:
        if self.jacobian_error > tolerance or self.min_abs_det <= 0 or self.bound_violations:
            return False
        return self.contraction_ratio is None or self.contraction_ratio <= 1.0 + 1e-9


def check_model(
    model: SystemModel,
    stream: NoiseStream,
    samples: int = 100,
    pairs: int = 10_000,
    scale: float = 3.0,
) -> ModelCheck:
    """
    Spot-check a model on random points: finite differences against the
    declared Jacobian, invertibility, the declared log-Jacobian bounds and
    the contraction certificate (ratio reported relative to |a|).
    """
    n = model.dimension
    x = scale * stream.rng.standard_normal((samples, n))
    w = stream.rng.standard_normal((samples, n)) @ model.noise_factor.T
    u = np.zeros_like(x)

    jac = model.jacobian(x, u, w)
    if model.analytic_jacobian:
        fd = finite_difference_jacobian(model, x, u, w)
        err = float(np.max(np.abs(fd - jac)) / max(1.0, float(np.max(np.abs(jac)))))
    else:
        err = 0.0

    dets = np.abs(np.linalg.det(jac))
    min_det = float(dets.min())
    if min_det <= 0.0:
        raise ModelInvalidError(f"{model!r} has a singular Jacobian at a sampled point.")

    logs = np.log2(dets)
    violations = int(np.sum((logs < model.l1 - 1e-9) | (logs > model.m1 + 1e-9)))
    if violations:
        logger.warning(f"{model!r}: {violations} samples outside the declared [L1, M1] bounds.")

    ratio = None
    origin = None
    if (cert := model.certificate) is not None:
        xs = scale * stream.rng.standard_normal((pairs, n))
        zs = scale * stream.rng.standard_normal((pairs, n))
        image = model.f(xs, cert.control(zs), np.zeros_like(xs))
        if model.form != Form.CONTROL_IN_F:
            image = image + cert.control(zs)
        gaps = np.max(np.abs(xs - zs), axis=-1)
        ratio = float(np.max(np.max(np.abs(image), axis=-1) / gaps) / abs(cert.a))
        origin = float(np.max(np.abs(cert.control(np.zeros(n)))))

    return ModelCheck(err, min_det, violations, ratio, origin)
