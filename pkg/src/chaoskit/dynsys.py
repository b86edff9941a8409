"""Vector fields: the three-element memristive circuit and simple test fields.

Every system exposes closed-form expressions for the field, its Jacobian and
the time derivative of the Jacobian along the flow, so that the acceleration
and jerk of a trajectory are available without numerical differentiation:

    v1 = F(s)
    v2 = J v1
    v3 = J v2 + (dJ/dt) v1

States are plain ``numpy`` arrays whose last axis has length 3; all
evaluation functions broadcast over leading axes.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateParameter, InvalidState

__all__ = [
    "Variant",
    "SystemDef",
    "MemristiveSystem",
    "AffineSystem",
    "ScaledSystem",
    "DerivativeBundle",
    "as_state",
    "eval_field",
    "eval_bundle",
    "find_fixed_points",
    "KIND_MEMRISTIVE",
    "KIND_AFFINE",
]

KIND_MEMRISTIVE = 0
KIND_AFFINE = 1


class Variant(enum.Enum):
    PLUS = "plus"    # z' = y(1 - z) - alpha z
    MINUS = "minus"  # z' = -y(1 - z) - alpha z

    @property
    def sign(self) -> float:
        return 1.0 if self is Variant.PLUS else -1.0

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValueError(f"unknown variant {value!r}; expected 'plus' or 'minus'") from None


def as_state(s) -> np.ndarray:
    """Coerce ``s`` to a float array with trailing dimension 3, rejecting non-finite values."""
    arr = np.asarray(s, dtype=float)
    if arr.shape[-1:] != (3,):
        raise InvalidState(f"state must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidState(f"non-finite state {arr!r}")
    return arr


@dataclass(frozen=True)
class DerivativeBundle:
    v1: np.ndarray
    v2: np.ndarray
    v3: np.ndarray
    jac: np.ndarray
    jac_dot: np.ndarray


class SystemDef:
    """Base class for autonomous 3D vector fields with analytic derivatives.

    Subclasses implement :meth:`_field`, :meth:`_jacobian` and
    :meth:`_jacobian_dot`; each receives arrays of shape ``(..., 3)`` and must
    broadcast. :meth:`kernel_spec` gives the compiled integrators a
    ``(kind, params)`` description of the same field.
    """

    #: True when the Jacobian is constant (affine fields).
    constant_jacobian = False

    def field(self, s) -> np.ndarray:
        return self._field(as_state(s))

    def jacobian(self, s) -> np.ndarray:
        return self._jacobian(as_state(s))

    def jacobian_dot(self, s) -> np.ndarray:
        s = as_state(s)
        return self._jacobian_dot(s, self._field(s))

    def bundle(self, s) -> DerivativeBundle:
        s = as_state(s)
        v1 = self._field(s)
        jac = self._jacobian(s)
        jdot = self._jacobian_dot(s, v1)
        v2 = _matvec(jac, v1)
        v3 = _matvec(jac, v2) + _matvec(jdot, v1)
        return DerivativeBundle(v1=v1, v2=v2, v3=v3, jac=jac, jac_dot=jdot)

    def kernel_spec(self) -> tuple[int, np.ndarray]:
        raise NotImplementedError

    def scaled(self, lam: float) -> "ScaledSystem":
        return ScaledSystem(self, lam)

    def describe(self) -> dict:
        return {"system": type(self).__name__}

    # subclass hooks
    def _field(self, s):  # pragma: no cover - abstract
        raise NotImplementedError

    def _jacobian(self, s):  # pragma: no cover - abstract
        raise NotImplementedError

    def _jacobian_dot(self, s, v):  # pragma: no cover - abstract
        raise NotImplementedError


def _matvec(m, v):
    return np.einsum("...ij,...j->...i", m, v)


@dataclass(frozen=True, eq=True)
class MemristiveSystem(SystemDef):
    """The memristive circuit

        x' = y
        y' = -x/3 + y/2 - y z^2/2
        z' = +-y(1 - z) - alpha z

    with the sign of the memristor nonlinearity selected by ``variant``.
    """

    alpha: float
    variant: Variant = Variant.PLUS

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        a = float(self.alpha)
        if not np.isfinite(a):
            raise DegenerateParameter(f"alpha must be finite, got {self.alpha!r}")
        object.__setattr__(self, "alpha", a)

    @property
    def sign(self) -> float:
        return self.variant.sign

    def _field(self, s):
        x, y, z = s[..., 0], s[..., 1], s[..., 2]
        sg = self.sign
        return np.stack(
            [
                y,
                -x / 3.0 + y / 2.0 - y * z * z / 2.0,
                sg * y - self.alpha * z - sg * y * z,
            ],
            axis=-1,
        )

    def _jacobian(self, s):
        y, z = s[..., 1], s[..., 2]
        sg = self.sign
        jac = np.zeros(s.shape[:-1] + (3, 3))
        jac[..., 0, 1] = 1.0
        jac[..., 1, 0] = -1.0 / 3.0
        jac[..., 1, 1] = 0.5 - 0.5 * z * z
        jac[..., 1, 2] = -y * z
        jac[..., 2, 1] = sg * (1.0 - z)
        jac[..., 2, 2] = -self.alpha - sg * y
        return jac

    def _jacobian_dot(self, s, v):
        y, z = s[..., 1], s[..., 2]
        yd, zd = v[..., 1], v[..., 2]
        sg = self.sign
        jd = np.zeros(s.shape[:-1] + (3, 3))
        jd[..., 1, 1] = -z * zd
        jd[..., 1, 2] = -(yd * z + y * zd)
        jd[..., 2, 1] = -sg * zd
        jd[..., 2, 2] = -sg * yd
        return jd

    def kernel_spec(self):
        return KIND_MEMRISTIVE, np.array([1.0, self.alpha, self.sign])

    def describe(self):
        return {"system": "memristive", "alpha": self.alpha, "variant": self.variant.value}


@dataclass(frozen=True, eq=False)
class AffineSystem(SystemDef):
    """``s' = A s + b``; used as an analytic test bed (rotations, helices)."""

    matrix: np.ndarray
    offset: np.ndarray = field(default_factory=lambda: np.zeros(3))

    constant_jacobian = True

    def __post_init__(self):
        a = np.array(self.matrix, dtype=float).reshape(3, 3)
        b = np.array(self.offset, dtype=float).reshape(3)
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "matrix", a)
        object.__setattr__(self, "offset", b)

    @classmethod
    def rotation(cls, omega: float = 1.0, z_rate: float = 0.0) -> "AffineSystem":
        """x' = omega y, y' = -omega x, z' = z_rate * z."""
        return cls([[0.0, omega, 0.0], [-omega, 0.0, 0.0], [0.0, 0.0, z_rate]])

    @classmethod
    def helix(cls, pitch: float) -> "AffineSystem":
        """x' = -y, y' = x, z' = pitch: unit-radius helices through (1, 0, z)."""
        return cls([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]], [0.0, 0.0, pitch])

    def _field(self, s):
        return s @ self.matrix.T + self.offset

    def _jacobian(self, s):
        return np.broadcast_to(self.matrix, s.shape[:-1] + (3, 3)).copy()

    def _jacobian_dot(self, s, v):
        return np.zeros(s.shape[:-1] + (3, 3))

    def kernel_spec(self):
        return KIND_AFFINE, np.concatenate([[1.0], self.matrix.ravel(), self.offset])

    def describe(self):
        return {"system": "affine", "matrix": self.matrix.tolist(), "offset": self.offset.tolist()}


@dataclass(frozen=True, eq=False)
class ScaledSystem(SystemDef):
    """The field of ``base`` multiplied by a constant ``lam`` (a pure time rescaling)."""

    base: SystemDef
    lam: float

    def __post_init__(self):
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def constant_jacobian(self):
        return self.base.constant_jacobian

    def _field(self, s):
        return self.lam * self.base._field(s)

    def _jacobian(self, s):
        return self.lam * self.base._jacobian(s)

    def _jacobian_dot(self, s, v):
        # dJ/dt is linear in the velocity and J itself carries a factor lam.
        return self.lam * self.base._jacobian_dot(s, v)

    def kernel_spec(self):
        kind, params = self.base.kernel_spec()
        params = params.copy()
        params[0] *= self.lam
        return kind, params

    def describe(self):
        return {"system": "scaled", "lam": self.lam, "base": self.base.describe()}


def eval_field(sys: SystemDef, s) -> np.ndarray:
    return sys.field(s)


def eval_bundle(sys: SystemDef, s) -> DerivativeBundle:
    return sys.bundle(s)


def find_fixed_points(sys: MemristiveSystem) -> list[np.ndarray]:
    """Fixed points of the memristive circuit, solved by hand.

    x' = 0 forces y = 0; then y' = -x/3 forces x = 0, and z' = -alpha z forces
    z = 0 unless alpha vanishes, in which case the whole z axis is fixed.
    """
    if not isinstance(sys, MemristiveSystem):
        raise TypeError("analytic fixed points are only available for MemristiveSystem")
    if sys.alpha == 0.0:
        raise DegenerateParameter("alpha = 0: every point of the z axis is a fixed point")
    return [np.zeros(3)]
