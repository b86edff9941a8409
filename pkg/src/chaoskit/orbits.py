"""Symbolic dynamics on the return map and unstable periodic orbit extraction.

Symbols follow the local torsion of the stripe each monotone branch belongs
to: decreasing (orientation reversing) branches carry odd integers, increasing
ones even integers, and consecutive branches along x differ by one. The first
branch therefore gets 0 if it is increasing and 1 if it is decreasing.
"""
from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field
from math import lcm

import numpy as np

from . import _kernels as K
from ._parallel import pmap
from .dynsys import MemristiveSystem, SystemDef
from .errors import AmbiguousSymbol, ConvergenceFailure, UnknownSymbol
from .integrate import IntegratorConfig, Trajectory, raise_for_status
from .section import (
    DEFAULT_SEED,
    EVENT_TOL,
    SECTION_AXIS,
    SECTION_DIRECTION,
    SECTION_VALUE,
    CrossingSeries,
    ReturnMap,
    build_return_map,
    compute_crossings,
)

__all__ = [
    "SymbolPartition",
    "Itinerary",
    "PeriodicOrbit",
    "CompletenessReport",
    "encode",
    "kneading_compare",
    "periodic_words",
    "symbolic_completeness",
    "find_upos",
    "missing_words",
    "REFINE_CONFIG",
]

log = logging.getLogger(__name__)

AMBIGUITY = 1e-6
# integration settings used while refining orbits
REFINE_CONFIG = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14, transient_time=0.0)
REFINE_EVENT_TOL = 1e-13


@dataclass(frozen=True)
class SymbolPartition:
    """Critical points of a return map plus the slope of its first branch."""

    critical_points: tuple[float, ...]
    first_increasing: bool
    ambiguity: float = AMBIGUITY

    @classmethod
    def from_return_map(cls, rm: ReturnMap) -> "SymbolPartition":
        return cls(tuple(rm.critical_points), rm.branches[0].increasing)

    @property
    def offset(self) -> int:
        return 0 if self.first_increasing else 1

    @property
    def alphabet(self) -> tuple[int, ...]:
        return tuple(range(self.offset, self.offset + len(self.critical_points) + 1))

    def symbol(self, x: float) -> int:
        c = np.asarray(self.critical_points)
        if len(c) and np.min(np.abs(c - x)) < self.ambiguity:
            raise AmbiguousSymbol(f"x = {x!r} lies within {self.ambiguity:g} of a critical point")
        return self.offset + int(np.searchsorted(c, x))


def _canonical(symbols: tuple[int, ...]) -> tuple[int, ...]:
    if not symbols:
        return symbols
    return min(symbols[i:] + symbols[:i] for i in range(len(symbols)))


@dataclass(frozen=True)
class Itinerary:
    """A symbol word. Periodic itineraries are kept in their minimal rotation."""

    symbols: tuple[int, ...]
    alphabet: tuple[int, ...]
    periodic: bool = True

    def __post_init__(self):
        syms = tuple(int(s) for s in self.symbols)
        bad = [s for s in syms if s not in self.alphabet]
        if bad:
            raise UnknownSymbol(f"symbols {sorted(set(bad))} not in alphabet {self.alphabet}")
        object.__setattr__(self, "symbols", _canonical(syms) if self.periodic else syms)
        object.__setattr__(self, "alphabet", tuple(int(a) for a in self.alphabet))

    @classmethod
    def parse(cls, word, alphabet, periodic: bool = True) -> "Itinerary":
        if isinstance(word, Itinerary):
            return cls(word.symbols, alphabet, periodic)
        if any(a > 9 for a in alphabet):
            raise ValueError("string itineraries need single-digit symbols")
        try:
            syms = tuple(int(c) for c in str(word).strip())
        except ValueError:
            raise UnknownSymbol(f"cannot read itinerary {word!r}") from None
        return cls(syms, alphabet, periodic)

    def __str__(self):
        return "".join(str(s) for s in self.symbols)

    def __len__(self):
        return len(self.symbols)

    @property
    def parity(self) -> dict[int, int]:
        """1 for odd (orientation reversing) symbols, 0 for even ones."""
        return {a: a % 2 for a in self.alphabet}

    def is_primitive(self) -> bool:
        n = len(self.symbols)
        return all(self.symbols != self.symbols[:d] * (n // d) for d in range(1, n) if n % d == 0)

    def same_orbit(self, other: "Itinerary") -> bool:
        return _canonical(self.symbols) == _canonical(other.symbols)


def encode(source, partition) -> Itinerary:
    """Symbol sequence of the crossings in ``source`` (a CrossingSeries or x-values).

    ``partition`` is a :class:`SymbolPartition` or a :class:`ReturnMap`.
    Raises :class:`AmbiguousSymbol` for crossings on a critical point.
    """
    if isinstance(partition, ReturnMap):
        partition = SymbolPartition.from_return_map(partition)
    x = source.x if isinstance(source, CrossingSeries) else np.atleast_1d(np.asarray(source, float))
    return Itinerary(tuple(partition.symbol(float(v)) for v in x), partition.alphabet,
                     periodic=False)


def kneading_compare(a, b, depth: int) -> int:
    """Compare two infinite periodic words (sequences of ints) in kneading order.

    Order follows x along the section: symbols compare by value and the order
    of everything that follows is reversed after each odd symbol. Returns -1,
    0 or 1; 0 means equal over ``depth`` symbols.
    """
    flip = 1
    for k in range(depth):
        x, y = a[k % len(a)], b[k % len(b)]
        if x != y:
            return flip * (1 if x > y else -1)
        if x % 2:
            flip = -flip
    return 0


def periodic_words(alphabet, max_len: int):
    """Primitive periodic words up to ``max_len`` in minimal rotation, shortest first."""
    for n in range(1, max_len + 1):
        for w in itertools.product(alphabet, repeat=n):
            it = Itinerary(w, alphabet)
            if it.symbols == tuple(w) and it.is_primitive():
                yield it


@dataclass(frozen=True)
class CompletenessReport:
    alphabet: tuple[int, ...]
    max_len: int
    admissible: dict  # word -> bool
    bounds: dict      # symbol -> (lower itinerary, upper itinerary) of the branch image
    bisector_gaps: dict
    touches_bisector: bool

    @property
    def complete(self) -> bool:
        return all(self.admissible.values())

    @property
    def pruned(self) -> list[str]:
        return [w for w, ok in self.admissible.items() if not ok]

    @property
    def realized(self) -> list[str]:
        return [w for w, ok in self.admissible.items() if ok]

    def to_dict(self) -> dict:
        return {
            "alphabet": list(self.alphabet),
            "max_len": self.max_len,
            "complete": self.complete,
            "realized": self.realized,
            "pruned": self.pruned,
            "bisector_gaps": self.bisector_gaps,
            "touches_bisector": self.touches_bisector,
        }


def _forward_itinerary(rm: ReturnMap, part: SymbolPartition, x0: float, depth: int):
    """Symbols of the images of the crossing nearest to ``x0`` (data driven)."""
    x = np.concatenate([rm.x_n, rm.x_next[-1:]])
    cand = np.argsort(np.abs(rm.x_n - x0))
    for i in cand[:50]:
        if i + depth < len(x):
            out = []
            for v in x[i + 1 : i + 1 + depth]:
                c = np.asarray(part.critical_points)
                out.append(part.offset + int(np.searchsorted(c, v)))
            return tuple(out)
    raise ValueError("return map too short for the requested depth")


def symbolic_completeness(rm: ReturnMap, max_len: int, touch_tol: float = 0.01) -> CompletenessReport:
    """Admissibility of every primitive periodic word up to ``max_len``.

    A word is admissible when, for each rotation starting with symbol s, the
    remaining sequence lies (in kneading order) between the itineraries of the
    images of the two ends of branch s. Those itineraries are read off the
    crossing data: the orbit of the crossing nearest to each branch end. The
    geometric criterion records whether an outer increasing branch end reaches
    the diagonal within ``touch_tol`` of the x range.
    """
    if rm.n_branches < 2:
        raise ValueError("symbolic analysis needs at least two branches")
    part = SymbolPartition.from_return_map(rm)
    depth = max_len
    lo, hi = rm.x_range
    ends = [lo, *rm.critical_points, hi]
    bounds = {}
    for k, s in enumerate(part.alphabet):
        a = _forward_itinerary(rm, part, ends[k], depth)
        b = _forward_itinerary(rm, part, ends[k + 1], depth)
        if kneading_compare(a, b, depth) > 0:
            a, b = b, a
        bounds[s] = (a, b)
    admissible = {}
    for it in periodic_words(part.alphabet, max_len):
        w = it.symbols
        ok = True
        for r in range(len(w)):
            s = w[r]
            tail = w[r + 1:] + w[:r + 1]
            lower, upper = bounds[s]
            if kneading_compare(tail, lower, depth) < 0 or kneading_compare(tail, upper, depth) > 0:
                ok = False
                break
        admissible[str(it)] = ok
    gaps = rm.bisector_gaps()
    width = hi - lo
    touches = ((rm.branches[0].increasing and abs(gaps["left"]) < touch_tol * width)
               or (rm.branches[-1].increasing and abs(gaps["right"]) < touch_tol * width))
    return CompletenessReport(part.alphabet, max_len, admissible,
                              {s: ("".join(map(str, a)), "".join(map(str, b)))
                               for s, (a, b) in bounds.items()},
                              gaps, bool(touches))


# -- periodic orbits -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PeriodicOrbit:
    """A refined periodic orbit with ``period`` section crossings."""

    system: SystemDef
    section_points: np.ndarray  # (period, 3)
    period_time: float
    itinerary: Itinerary
    residual: float
    residual_history: tuple = field(default=())

    @property
    def period(self) -> int:
        return len(self.section_points)

    @property
    def name(self) -> str:
        return str(self.itinerary)

    def dense(self, samples: int = 4000, cfg: IntegratorConfig = REFINE_CONFIG) -> Trajectory:
        """Closed trajectory with ``samples`` steps over one period (samples + 1 points)."""
        kind, params = self.system.kernel_spec()
        dt = self.period_time / samples
        states, status, t = K.run_sampled(kind, params, self.section_points[0].copy(), samples + 1,
                                          dt, min(dt, cfg.step_size), cfg.adaptive, cfg.rel_tol,
                                          cfg.abs_tol, cfg.divergence_radius)
        raise_for_status(status, t, "orbit sampling")
        return Trajectory(dt * np.arange(samples + 1), states, self.system)

    def closure_error(self, cfg: IntegratorConfig = REFINE_CONFIG) -> float:
        """|s(T) - s(0)| after integrating one full period from the first section point."""
        kind, params = self.system.kernel_spec()
        s, status, t, _ = K.run_transient(kind, params, self.section_points[0].copy(),
                                          self.period_time, min(0.01, cfg.step_size), cfg.adaptive,
                                          cfg.rel_tol, cfg.abs_tol, cfg.divergence_radius)
        raise_for_status(status, t)
        return float(np.linalg.norm(s - self.section_points[0]))

    def to_dict(self) -> dict:
        return {
            **self.system.describe(),
            "period": self.period,
            "itinerary": self.name,
            "period_time": self.period_time,
            "section_points": self.section_points.tolist(),
            "closure_residual": self.residual,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def _return(kind, params, xz, n, cfg=REFINE_CONFIG):
    """n-th return of the section point (x, 0, z): (x, z), time and all crossing states."""
    s0 = np.array([xz[0], 0.0, xz[1]])
    times, states, count, status, t_end, _, _ = K.run_crossings(
        kind, params, s0, n, 200.0 * n, cfg.step_size, cfg.adaptive, cfg.rel_tol, cfg.abs_tol,
        cfg.divergence_radius, SECTION_AXIS, SECTION_VALUE, SECTION_DIRECTION, REFINE_EVENT_TOL, True,
    )
    if status != K.OK:
        raise ConvergenceFailure(f"return map evaluation failed (status {status}) at {xz}")
    return states[n - 1, [0, 2]], times[n - 1], states


def _newton(kind, params, u0, p, max_iter=50, tol=1e-11, fd_step=1e-7):
    """Newton iteration on G(u) = P^p(u) - u over section coordinates (x, z)."""
    u = np.asarray(u0, dtype=float)
    g, _, _ = _return(kind, params, u, p)
    r = g - u
    hist = [float(np.linalg.norm(r))]
    for _ in range(max_iter):
        if hist[-1] < tol:
            break
        jac = np.empty((2, 2))
        for k in range(2):
            du = np.zeros(2)
            du[k] = fd_step
            jac[:, k] = (_return(kind, params, u + du, p)[0] - _return(kind, params, u - du, p)[0]) / (2 * fd_step)
        step = np.linalg.solve(jac - np.eye(2), -r)
        lam = 1.0
        for _ in range(6):  # backtrack when the residual grows
            v = u + lam * step
            try:
                gv, _, _ = _return(kind, params, v, p)
            except ConvergenceFailure:
                lam *= 0.5
                continue
            rv = gv - v
            if np.linalg.norm(rv) < hist[-1] or lam < 0.05:
                break
            lam *= 0.5
        else:
            raise ConvergenceFailure("line search failed")
        u, r = v, rv
        hist.append(float(np.linalg.norm(r)))
    if hist[-1] >= 1e-8:
        raise ConvergenceFailure(f"residual {hist[-1]:.3g} after {max_iter} iterations")
    return u, hist


def _refine(sys, part, u0, p):
    kind, params = sys.kernel_spec()
    try:
        u, hist = _newton(kind, params, u0, p)
    except (ConvergenceFailure, np.linalg.LinAlgError) as exc:
        log.info("dropped period-%d candidate at %s: %s", p, np.round(u0, 6), exc)
        return None
    if hist[-1] >= hist[0] and hist[0] > 1e-11:
        log.info("dropped period-%d candidate at %s: residual did not decrease", p, np.round(u0, 6))
        return None
    _, period_time, states = _return(kind, params, u, p)
    pts = np.vstack([[u[0], 0.0, u[1]], states[: p - 1]])
    if p > 1 and np.min(np.linalg.norm(pts[1:, [0, 2]] - u, axis=1)) < 1e-6:
        return None  # a lower-period orbit traversed several times
    try:
        word = Itinerary(tuple(part.symbol(v) for v in pts[:, 0]), part.alphabet)
    except AmbiguousSymbol as exc:
        log.info("dropped period-%d orbit: %s", p, exc)
        return None
    return PeriodicOrbit(sys, pts, float(period_time), word, hist[-1], tuple(hist))


def _map_fixed_point_seeds(cs: CrossingSeries):
    """Rough period-1 seeds that close returns can miss near a saddle-node:
    sign changes of x_{n+1} - x_n along x, plus the two outermost crossings
    (a fixed point created at a branch end sits just outside the cloud)."""
    x, z = cs.x[:-1], cs.z[:-1]
    d = cs.x[1:] - x
    o = np.argsort(x)
    flips = np.nonzero(np.diff(np.sign(d[o])))[0]
    picks = [*flips, 0, len(o) - 1]
    return [np.array([x[o[i]], z[o[i]]]) for i in picks]


def find_upos(sys: MemristiveSystem, max_period: int, *, n_crossings: int = 10000,
              eps: float = 1e-2, max_candidates: int = 150, partition: SymbolPartition | None = None,
              seed=DEFAULT_SEED, threads: int | None = None) -> list[PeriodicOrbit]:
    """Extract unstable periodic orbits with up to ``max_period`` crossings.

    Close returns |(x, z)_{n+p} - (x, z)_n| < ``eps`` in a long crossing
    series are refined by Newton iteration on the p-th return map, with a
    central-difference Jacobian in section coordinates. Candidates that do not
    converge in 50 iterations are dropped (logged at INFO). Orbits are
    deduplicated by itinerary and section-point distance (1e-4) and returned
    sorted by (period, itinerary).
    """
    cs = compute_crossings(sys, n_crossings, s0=seed)
    if partition is None:
        partition = SymbolPartition.from_return_map(build_return_map(cs))
    X = np.column_stack([cs.x, cs.z])
    jobs = []
    for p in range(1, max_period + 1):
        idx = np.nonzero(np.linalg.norm(X[p:] - X[:-p], axis=1) < eps)[0]
        picked = []
        for i in idx:
            if all(np.linalg.norm(X[i] - X[j]) > 1e-3 for j in picked):
                picked.append(i)
            if len(picked) >= max_candidates:
                break
        jobs += [(X[i].copy(), p) for i in picked]
        if p == 1:
            jobs += [(u, 1) for u in _map_fixed_point_seeds(cs)]
    refined = pmap(lambda job: _refine(sys, partition, job[0], job[1]), jobs, threads)

    orbits: list[PeriodicOrbit] = []
    for orb in refined:
        if orb is None:
            continue
        dup = False
        for o in orbits:
            if o.itinerary == orb.itinerary:
                dist = np.linalg.norm(o.section_points[:, None, :] - orb.section_points[None], axis=2)
                if dist.min() < 1e-4:
                    dup = True
                    break
        if not dup:
            orbits.append(orb)
    orbits.sort(key=lambda o: (o.period, o.name, float(o.section_points[:, 0].min())))
    return orbits


def missing_words(orbits, report: CompletenessReport, max_period: int) -> list[str]:
    """Admissible words up to ``max_period`` with no extracted orbit (logged as MissingOrbit)."""
    found = {o.name for o in orbits}
    missing = [w for w in report.realized if len(w) <= max_period and w not in found]
    for w in missing:
        log.warning("MissingOrbit: admissible word %s has no extracted orbit", w)
    return missing


def orbit_pairs(orbits):
    """All unordered pairs of distinct orbits."""
    return list(itertools.combinations(orbits, 2))


def common_depth(a: Itinerary, b: Itinerary) -> int:
    return 2 * lcm(len(a), len(b)) + 2
