"""Trajectory integration, transient handling and event location."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, replace
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import _kernels as K
from .dynsys import SystemDef, as_state
from .errors import (
    Diverged,
    InvalidConfig,
    NoEvent,
    StiffnessFailure,
    TangentialCrossing,
)

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "Segment",
    "integrate",
    "advance",
    "locate_event",
    "raise_for_status",
]


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration settings.

    ``step_size`` is the initial (adaptive) or fixed step and also the output
    sampling interval of :func:`integrate`. ``max_time`` bounds the
    integration that follows the discarded transient.
    """

    step_size: float = 0.01
    adaptive: bool = True
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    transient_time: float = 1000.0
    max_time: float = 1000.0
    divergence_radius: float = 1e3

    def __post_init__(self):
        if not (self.step_size > 0 and math.isfinite(self.step_size)):
            raise InvalidConfig(f"step_size must be positive, got {self.step_size}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InvalidConfig("tolerances must be positive")
        if not self.transient_time >= 0:
            raise InvalidConfig("transient_time must be >= 0")
        if not self.max_time > 0:
            raise InvalidConfig("max_time must be positive")
        if not self.divergence_radius > 10:
            raise InvalidConfig("divergence_radius must exceed the attractor scale (~10)")

    def with_(self, **changes) -> "IntegratorConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)


def raise_for_status(status: int, t: float, what: str = "integration"):
    if status == K.DIVERGED:
        raise Diverged(t)
    if status == K.STEP_UNDERFLOW:
        raise StiffnessFailure(f"{what}: step size underflow at t={t:.6g}")
    if status == K.TANGENTIAL:
        raise TangentialCrossing(f"{what}: non-transversal section crossing at t={t:.6g}")


def advance(sys: SystemDef, s0, duration: float, cfg: IntegratorConfig) -> np.ndarray:
    """Final state after integrating ``duration`` time units (used to drop transients)."""
    s0 = as_state(s0)
    if duration <= 0:
        return s0.copy()
    kind, params = sys.kernel_spec()
    s, status, t, _ = K.run_transient(
        kind, params, s0, float(duration), cfg.step_size, cfg.adaptive,
        cfg.rel_tol, cfg.abs_tol, cfg.divergence_radius,
    )
    raise_for_status(status, t, "transient")
    return s


@dataclass(frozen=True)
class Segment:
    """Cubic Hermite interpolant of the flow between two samples."""

    t0: float
    t1: float
    s0: np.ndarray
    s1: np.ndarray
    f0: np.ndarray
    f1: np.ndarray

    def __call__(self, t: float) -> np.ndarray:
        h = self.t1 - self.t0
        u = (t - self.t0) / h
        h00 = (1 + 2 * u) * (1 - u) ** 2
        h10 = u * (1 - u) ** 2
        h01 = u * u * (3 - 2 * u)
        h11 = u * u * (u - 1)
        return h00 * self.s0 + h10 * h * self.f0 + h01 * self.s1 + h11 * h * self.f1

    def derivative(self, t: float) -> np.ndarray:
        h = self.t1 - self.t0
        u = (t - self.t0) / h
        d00 = 6 * u * u - 6 * u
        d10 = 3 * u * u - 4 * u + 1
        d01 = -6 * u * u + 6 * u
        d11 = 3 * u * u - 2 * u
        return (d00 * self.s0 + d01 * self.s1) / h + d10 * self.f0 + d11 * self.f1


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    sys: SystemDef

    def __len__(self):
        return len(self.times)

    def segment(self, i: int) -> Segment:
        f = self.sys.field(self.states[i : i + 2])
        return Segment(
            float(self.times[i]), float(self.times[i + 1]),
            self.states[i], self.states[i + 1], f[0], f[1],
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y", "z"])
            for t, s in zip(self.times, self.states):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in s])

    @classmethod
    def from_csv(cls, path, sys: SystemDef) -> "Trajectory":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(data[:, 0], data[:, 1:4], sys)


def integrate(sys: SystemDef, s0, cfg: IntegratorConfig | None = None) -> Trajectory:
    """Integrate from ``s0``, drop ``cfg.transient_time`` and sample every ``cfg.step_size``.

    Raises :class:`Diverged` when the state norm exceeds ``cfg.divergence_radius``
    and :class:`StiffnessFailure` on adaptive step underflow.
    """
    cfg = cfg or IntegratorConfig()
    start = advance(sys, s0, cfg.transient_time, cfg)
    n = int(math.floor(cfg.max_time / cfg.step_size + 1e-9)) + 1
    kind, params = sys.kernel_spec()
    states, status, t = K.run_sampled(
        kind, params, start, n, cfg.step_size, cfg.step_size, cfg.adaptive,
        cfg.rel_tol, cfg.abs_tol, cfg.divergence_radius,
    )
    raise_for_status(status, cfg.transient_time + t)
    times = cfg.transient_time + cfg.step_size * np.arange(n)
    return Trajectory(times, states, sys)


def locate_event(
    segment: Segment,
    event_fn: Callable[[np.ndarray], float],
    direction: int = 0,
    tol: float = 1e-10,
) -> tuple[float, np.ndarray]:
    """Refine a sign change of ``event_fn`` inside one interpolated segment.

    ``direction`` < 0 accepts only decreasing crossings, > 0 only increasing
    ones, 0 either. Returns ``(t, state)`` with ``|event_fn(state)| < tol``.
    """
    g0 = float(event_fn(segment.s0))
    g1 = float(event_fn(segment.s1))
    if direction < 0:
        ok = g0 > 0 >= g1
    elif direction > 0:
        ok = g0 < 0 <= g1
    else:
        ok = (g0 > 0 >= g1) or (g0 < 0 <= g1)
    if not ok:
        raise NoEvent(f"no admissible sign change of the event function ({g0:.3g} -> {g1:.3g})")
    if g1 == 0.0:
        t_root = segment.t1
    else:
        t_root = brentq(
            lambda t: float(event_fn(segment(t))),
            segment.t0, segment.t1, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200,
        )
    state = segment(t_root)
    # secant polish: brentq stops on the bracket width, we want the residual
    for _ in range(5):
        g = float(event_fn(state))
        if abs(g) < tol:
            break
        dg = _event_rate(event_fn, segment, t_root)
        if dg == 0:
            break
        t_root -= g / dg
        state = segment(t_root)
    rate = _event_rate(event_fn, segment, t_root)
    if abs(rate) < 1e-8:
        raise TangentialCrossing(f"event rate {rate:.3g} at t={t_root:.6g}")
    return t_root, state


def _event_rate(event_fn, segment: Segment, t: float) -> float:
    s = segment(t)
    v = segment.derivative(t)
    eps = 1e-7 * max(1.0, float(np.linalg.norm(s)))
    return (float(event_fn(s + eps * v)) - float(event_fn(s - eps * v))) / (2 * eps)
