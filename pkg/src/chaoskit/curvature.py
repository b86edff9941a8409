"""Curvature, torsion and the flow curvature manifold.

For a trajectory with velocity v1, acceleration v2 and jerk v3:

    curvature  k1  = |v1 x v2| / |v1|^3
    torsion    k2  = det(v1, v2, v3) / |v1 x v2|^2
    phi            = v1 . (v2 x v3)                 (flow curvature manifold)
    phi_c          = v1 . (J v1 x J v2)             (time-independent part)
    phi_t          = v1 . (v2 x (dJ/dt) v1)         (time-dependent part)

Because v3 = J v2 + (dJ/dt) v1 and v2 = J v1, phi = phi_c + phi_t exactly in
exact arithmetic. The zero set of |v1 x v2| is where velocity and acceleration
are colinear (the one-dimensional invariant set).
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from ._parallel import pmap
from .dynsys import SystemDef, as_state
from .errors import InvalidBox, UndefinedAtEquilibrium, UndefinedTorsion

__all__ = [
    "CurvatureSample",
    "GridField",
    "ManifoldGrid",
    "curvature_k1",
    "torsion_k2",
    "flow_curvature",
    "curvature_sample",
    "along",
    "sample_manifold_grid",
    "load_grid",
    "sign_changes_near",
]

# below these norms curvature and torsion are reported as undefined
VELOCITY_FLOOR = 1e-12
BINORMAL_FLOOR = 1e-12


@dataclass(frozen=True)
class CurvatureSample:
    kappa1: float
    kappa2: float
    phi: float
    phi_c: float
    phi_t: float
    at: np.ndarray


def _pieces(sys: SystemDef, s):
    b = sys.bundle(s)
    cross12 = np.cross(b.v1, b.v2)
    jv1 = np.einsum("...ij,...j->...i", b.jac, b.v1)
    jv2 = np.einsum("...ij,...j->...i", b.jac, b.v2)
    jdv1 = np.einsum("...ij,...j->...i", b.jac_dot, b.v1)
    phi = np.einsum("...i,...i->...", b.v1, np.cross(b.v2, b.v3))
    phi_c = np.einsum("...i,...i->...", b.v1, np.cross(jv1, jv2))
    phi_t = np.einsum("...i,...i->...", b.v1, np.cross(b.v2, jdv1))
    return b, cross12, phi, phi_c, phi_t


def curvature_k1(sys: SystemDef, s) -> float:
    """Frenet curvature of the trajectory through ``s``."""
    b = sys.bundle(as_state(s).reshape(3))
    speed = float(np.linalg.norm(b.v1))
    if speed <= VELOCITY_FLOOR:
        raise UndefinedAtEquilibrium(f"curvature undefined at equilibrium {s!r}")
    return float(np.linalg.norm(np.cross(b.v1, b.v2))) / speed**3


def torsion_k2(sys: SystemDef, s) -> float:
    """Frenet torsion of the trajectory through ``s``."""
    b = sys.bundle(as_state(s).reshape(3))
    c = np.cross(b.v1, b.v2)
    c2 = float(c @ c)
    if np.sqrt(c2) <= BINORMAL_FLOOR:
        raise UndefinedTorsion(f"osculating plane degenerate at {s!r}")
    return float(c @ b.v3) / c2


def flow_curvature(sys: SystemDef, s) -> tuple[float, float, float]:
    """Return ``(phi, phi_c, phi_t)`` at a single state."""
    _, _, phi, phi_c, phi_t = _pieces(sys, as_state(s).reshape(3))
    return float(phi), float(phi_c), float(phi_t)


def curvature_sample(sys: SystemDef, s) -> CurvatureSample:
    s = as_state(s).reshape(3)
    phi, phi_c, phi_t = flow_curvature(sys, s)
    return CurvatureSample(
        kappa1=curvature_k1(sys, s),
        kappa2=torsion_k2(sys, s),
        phi=phi, phi_c=phi_c, phi_t=phi_t, at=s.copy(),
    )


def along(sys: SystemDef, states) -> dict[str, np.ndarray]:
    """Vectorized evaluation over an array of states.

    Curvature and torsion are NaN where they are undefined, so the arrays stay
    aligned with ``states``; the scalar functions raise instead.
    """
    states = as_state(states)
    b, c, phi, phi_c, phi_t = _pieces(sys, states)
    speed = np.linalg.norm(b.v1, axis=-1)
    cn = np.linalg.norm(c, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        k1 = np.where(speed > VELOCITY_FLOOR, cn / speed**3, np.nan)
        k2 = np.where(cn > BINORMAL_FLOOR, np.einsum("...i,...i->...", c, b.v3) / cn**2, np.nan)
    return {"kappa1": k1, "kappa2": k2, "phi": phi, "phi_c": phi_c, "phi_t": phi_t,
            "colinearity": cn}


def sign_changes_near(values, states, center=(0.0, 0.0, 0.0), radius: float = 1.0) -> int:
    """Count sign changes of ``values`` between consecutive samples that both lie
    within ``radius`` of ``center``."""
    v = np.asarray(values, dtype=float)
    inside = np.linalg.norm(np.asarray(states) - np.asarray(center), axis=-1) < radius
    both = inside[1:] & inside[:-1]
    flips = np.signbit(v[1:]) != np.signbit(v[:-1])
    return int(np.count_nonzero(both & flips))


class GridField(enum.Enum):
    PHI = "phi"
    PHI_C = "phic"
    PHI_T = "phit"
    K1 = "k1"  # |v1 x v2|, vanishing on the one-dimensional invariant set

    @classmethod
    def parse(cls, value) -> "GridField":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "")
        try:
            return cls(key)
        except ValueError:
            raise ValueError(f"unknown grid field {value!r}; expected one of "
                             f"{[f.value for f in cls]}") from None


def _check_box(box) -> np.ndarray:
    b = np.asarray(box, dtype=float)
    if b.shape != (3, 2) or not np.all(np.isfinite(b)):
        raise InvalidBox(f"box must be ((xmin, xmax), (ymin, ymax), (zmin, zmax)), got {box!r}")
    if np.any(b[:, 1] <= b[:, 0]):
        raise InvalidBox(f"degenerate box {b.tolist()}")
    return b


@dataclass(frozen=True, eq=False)
class ManifoldGrid:
    """Scalar samples on a regular grid.

    ``values`` has shape ``(nz, ny, nx)`` so that ``values.ravel()`` runs with
    x fastest, then y, then z.
    """

    box: np.ndarray
    resolution: tuple[int, int, int]
    field: GridField
    values: np.ndarray
    system: dict

    @property
    def axes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(np.linspace(lo, hi, n) for (lo, hi), n in zip(self.box, self.resolution))

    def interpolate(self, points) -> np.ndarray:
        """Trilinear interpolation at ``points`` (..., 3)."""
        ax, ay, az = self.axes
        interp = RegularGridInterpolator((az, ay, ax), self.values, method="linear")
        p = np.asarray(points, dtype=float)
        return interp(p[..., ::-1])

    def header(self) -> dict:
        return {
            "box": self.box.tolist(),
            "resolution": list(self.resolution),
            "field": self.field.value,
            "ordering": "x-fastest (index = ix + nx*(iy + ny*iz))",
            "dtype": "float64",
            **self.system,
        }

    def write(self, path, payload: str = "csv") -> tuple[Path, Path]:
        """Write ``<path>.json`` (header) and ``<path>.csv`` or ``<path>.bin`` (payload).

        The CSV payload has columns ``x,y,z,value``; the binary payload is the
        raw little-endian float64 values in x-fastest order.
        """
        path = Path(path)
        stem = path.with_suffix("") if path.suffix in (".json", ".csv", ".bin") else path
        head = self.header()
        if payload == "csv":
            data = stem.with_suffix(".csv")
            ax, ay, az = self.axes
            gz, gy, gx = np.meshgrid(az, ay, ax, indexing="ij")
            table = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel(), self.values.ravel()])
            np.savetxt(data, table, delimiter=",", header="x,y,z,value", comments="", fmt="%.17g")
        elif payload == "bin":
            data = stem.with_suffix(".bin")
            self.values.astype("<f8").ravel().tofile(data)
        else:
            raise ValueError(f"payload must be 'csv' or 'bin', got {payload!r}")
        head["payload"] = data.name
        meta = stem.with_suffix(".json")
        meta.write_text(json.dumps(head, indent=2))
        return meta, data


def load_grid(path) -> ManifoldGrid:
    """Read a grid written by :meth:`ManifoldGrid.write` (pass the .json header)."""
    path = Path(path)
    head = json.loads(path.read_text())
    res = tuple(head["resolution"])
    data = path.parent / head["payload"]
    if data.suffix == ".bin":
        vals = np.fromfile(data, dtype="<f8")
    else:
        vals = np.loadtxt(data, delimiter=",", skiprows=1, ndmin=2)[:, 3]
    known = {"box", "resolution", "field", "ordering", "dtype", "payload"}
    return ManifoldGrid(
        box=np.asarray(head["box"], dtype=float),
        resolution=res,
        field=GridField.parse(head["field"]),
        values=vals.reshape(res[2], res[1], res[0]),
        system={k: v for k, v in head.items() if k not in known},
    )


def sample_manifold_grid(sys: SystemDef, box, resolution, field="phi",
                         threads: int | None = None) -> ManifoldGrid:
    """Sample ``field`` on a regular grid spanning ``box``; z-slabs run in parallel."""
    b = _check_box(box)
    res = (resolution,) * 3 if np.isscalar(resolution) else tuple(resolution)
    res = tuple(int(n) for n in res)
    if len(res) != 3 or min(res) < 2:
        raise InvalidBox(f"resolution must be >= 2 along every axis, got {resolution!r}")
    field = GridField.parse(field)
    ax, ay, az = (np.linspace(lo, hi, n) for (lo, hi), n in zip(b, res))
    gy, gx = np.meshgrid(ay, ax, indexing="ij")

    def slab(z):
        pts = np.stack([gx, gy, np.full_like(gx, z)], axis=-1)
        if field is GridField.K1:
            bd = sys.bundle(pts)
            return np.linalg.norm(np.cross(bd.v1, bd.v2), axis=-1)
        _, _, phi, phi_c, phi_t = _pieces(sys, pts)
        return {GridField.PHI: phi, GridField.PHI_C: phi_c, GridField.PHI_T: phi_t}[field]

    values = np.stack(pmap(slab, az, threads))
    return ManifoldGrid(box=b, resolution=res, field=field, values=values, system=sys.describe())
