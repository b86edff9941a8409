"""Poincare section y = 0 (with dy/dt < 0), first-return maps, bifurcation
diagrams and bistability scans.

On the section dy/dt = -x/3 (because y = 0), so the downward crossings are
exactly the crossings with x > 0, and x at a crossing is a local maximum of
x(t).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels as K
from ._parallel import pmap
from .dynsys import MemristiveSystem, SystemDef, Variant, as_state
from .errors import (
    ChaosKitError,
    InsufficientCrossings,
    InvalidConfig,
    NoEvent,
    SparseMap,
)
from .integrate import IntegratorConfig, Trajectory, advance, locate_event, raise_for_status

__all__ = [
    "CrossingSeries",
    "Branch",
    "ReturnMap",
    "BifurcationDiagram",
    "AttractorClass",
    "BistabilityReport",
    "compute_crossings",
    "build_return_map",
    "bifurcation_sweep",
    "bistability_scan",
    "detect_period",
    "classify_sequence",
    "converging_period",
    "count_bands",
    "branch_end_gaps",
    "DEFAULT_SEED",
]

SECTION_AXIS = 1        # y
SECTION_VALUE = 0.0
SECTION_DIRECTION = -1  # dy/dt < 0
EVENT_TOL = 1e-12
DEFAULT_SEED = (0.1, 0.0, 0.0)
# generous time allowance per requested crossing when no budget is given;
# one revolution takes about 10 to 25 time units over the studied range
TIME_PER_CROSSING = 100.0


@dataclass(frozen=True, eq=False)
class CrossingSeries:
    """Refined section crossings in time order."""

    times: np.ndarray
    states: np.ndarray
    system: SystemDef
    cfg: IntegratorConfig

    def __len__(self):
        return len(self.times)

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def z(self) -> np.ndarray:
        return self.states[:, 2]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "y", "z"])
            for t, s in zip(self.times, self.states):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in s])


def crossing_budget(count: int) -> float:
    return TIME_PER_CROSSING * count + 1000.0


def compute_crossings(source, count: int, *, s0=None, cfg: IntegratorConfig | None = None) -> CrossingSeries:
    """Collect ``count`` downward crossings of y = 0.

    ``source`` is either a :class:`Trajectory` (crossings are located on its
    samples by interpolation) or a :class:`SystemDef`, in which case the flow
    is integrated from ``s0`` after discarding ``cfg.transient_time`` and the
    crossings must occur within ``cfg.max_time``. Without ``cfg`` the budget
    is ``100 * count + 1000`` time units.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if isinstance(source, Trajectory):
        return _crossings_from_trajectory(source, count, cfg or IntegratorConfig())
    sys = source
    if s0 is None:
        raise ValueError("s0 is required when integrating from a system")
    if cfg is None:
        cfg = IntegratorConfig(max_time=crossing_budget(count))
    try:
        start = advance(sys, s0, cfg.transient_time, cfg)
    except ChaosKitError as exc:
        raise InsufficientCrossings(0, count, f"transient failed: {exc}") from exc
    kind, params = sys.kernel_spec()
    times, states, n, status, t_end, _, _ = K.run_crossings(
        kind, params, start, count, cfg.max_time, cfg.step_size, cfg.adaptive,
        cfg.rel_tol, cfg.abs_tol, cfg.divergence_radius,
        SECTION_AXIS, SECTION_VALUE, SECTION_DIRECTION, EVENT_TOL, True,
    )
    if status == K.TIME_EXHAUSTED:
        raise InsufficientCrossings(n, count, f"time budget {cfg.max_time:g} exhausted")
    if status != K.OK:
        try:
            raise_for_status(status, cfg.transient_time + t_end, "crossings")
        except ChaosKitError as exc:
            raise InsufficientCrossings(n, count, str(exc)) from exc
    return CrossingSeries(cfg.transient_time + times, states, sys, cfg)


def _crossings_from_trajectory(traj: Trajectory, count: int, cfg) -> CrossingSeries:
    y = traj.states[:, SECTION_AXIS]
    hits = np.nonzero((y[:-1] > 0) & (y[1:] <= 0))[0]
    times, states = [], []
    for i in hits:
        if len(times) == count:
            break
        try:
            t, s = locate_event(traj.segment(int(i)), lambda v: v[SECTION_AXIS], direction=-1,
                                tol=1e-10)
        except NoEvent:
            continue
        times.append(t)
        states.append(s)
    if len(times) < count:
        raise InsufficientCrossings(len(times), count, "trajectory too short")
    return CrossingSeries(np.array(times), np.array(states), traj.sys, cfg)


# -- return map ---------------------------------------------------------------

@dataclass(frozen=True)
class Branch:
    index: int
    lower: float
    upper: float
    slope: int  # +1 increasing, -1 decreasing
    count: int

    @property
    def increasing(self) -> bool:
        return self.slope > 0


@dataclass(frozen=True, eq=False)
class ReturnMap:
    """Pairs (x_n, x_{n+1}) in time order, partitioned into monotone branches."""

    x_n: np.ndarray
    x_next: np.ndarray
    critical_points: tuple[float, ...]
    branches: tuple[Branch, ...]
    system: dict = field(default_factory=dict)

    @property
    def n_branches(self) -> int:
        return len(self.branches)

    @property
    def x_range(self) -> tuple[float, float]:
        return float(self.x_n.min()), float(self.x_n.max())

    def branch_of(self, x) -> np.ndarray:
        return np.searchsorted(np.asarray(self.critical_points), x)

    @property
    def branch_id(self) -> np.ndarray:
        return self.branch_of(self.x_n)

    def populations(self) -> np.ndarray:
        return np.bincount(self.branch_id, minlength=self.n_branches)

    def spread(self, window: int = 9) -> float:
        """Largest deviation of x_{n+1} from a running median along each branch,
        relative to the x range. Small values mean the map is a function."""
        lo, hi = self.x_range
        worst = 0.0
        bid = self.branch_id
        for b in range(self.n_branches):
            m = bid == b
            if m.sum() < window:
                continue
            y = self.x_next[m][np.argsort(self.x_n[m])]
            pad = window // 2
            med = np.median(np.lib.stride_tricks.sliding_window_view(y, window), axis=1)
            worst = max(worst, float(np.max(np.abs(y[pad:-pad] - med))))
        return worst / (hi - lo)

    def bisector_gaps(self, k: int = 3) -> dict:
        """Distance of the outer branch ends from the diagonal x_{n+1} = x_n.

        Positive values mean the branch end stays inside (f(x) > x on the left
        end, f(x) < x on the right end); touching the diagonal gives about 0.
        """
        o = np.argsort(self.x_n)
        left, right = o[:k], o[-k:]
        return {
            "left": float(np.mean(self.x_next[left] - self.x_n[left])),
            "right": float(np.mean(self.x_n[right] - self.x_next[right])),
        }

    def summary(self) -> dict:
        return {
            **self.system,
            "n_pairs": int(len(self.x_n)),
            "critical_points": [float(c) for c in self.critical_points],
            "branches": [
                {"index": b.index, "lower": b.lower, "upper": b.upper,
                 "slope": "increasing" if b.increasing else "decreasing", "count": b.count}
                for b in self.branches
            ],
        }

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x_n", "x_next", "branch_id"])
            for a, b, i in zip(self.x_n, self.x_next, self.branch_id):
                w.writerow([repr(float(a)), repr(float(b)), int(i)])


def _moving_slope(cx, cy, window):
    half = window // 2
    out = np.empty(len(cx))
    for i in range(len(cx)):
        a, b = max(0, i - half), min(len(cx), i + half + 1)
        out[i] = np.polyfit(cx[a:b], cy[a:b], 1)[0]
    return out


def _runs(signs):
    """(start, stop, sign) for maximal runs of equal sign."""
    cuts = np.nonzero(np.diff(signs))[0] + 1
    edges = np.concatenate([[0], cuts, [len(signs)]])
    return [(int(a), int(b), int(signs[a])) for a, b in zip(edges[:-1], edges[1:])]


def build_return_map(source, *, min_points: int = 500, window: int = 5, min_population: int = 10,
                     fit_points: int = 7, bins: int | None = None) -> ReturnMap:
    """First-return map with slope-sign branch segmentation.

    ``source`` is a :class:`CrossingSeries` or a 1-D sequence of successive
    section coordinates. Pairs are sorted by x_n and binned; the slope sign
    comes from a ``window``-bin moving least-squares fit to the lower envelope
    (per-bin minimum of x_{n+1}), which follows a single sheet where the map is
    layered. Runs below ``min_population`` pairs or spanning fewer than three
    bins are merged into their neighbours. Each critical point is the vertex
    of a parabola through the ``fit_points`` pairs nearest to the extreme pair
    at the branch junction.
    """
    if isinstance(source, CrossingSeries):
        x = source.x
        meta = source.system.describe()
    else:
        x = np.asarray(source, dtype=float).ravel()
        meta = {}
    if len(x) < min_points + 1:
        raise SparseMap(f"{len(x) - 1} pairs, need at least {min_points}")
    xn, xn1 = x[:-1], x[1:]
    o = np.argsort(xn, kind="stable")
    xs, ys = xn[o], xn1[o]
    if xs[-1] - xs[0] <= 0:
        raise SparseMap("all crossings coincide; no branch can be resolved")

    nb = bins or int(np.clip(len(xs) // 40, 20, 150))
    edges = np.linspace(xs[0], xs[-1], nb + 1)
    idx = np.clip(np.searchsorted(edges, xs, side="right") - 1, 0, nb - 1)
    counts = np.bincount(idx, minlength=nb)
    occupied = np.nonzero(counts)[0]
    if len(occupied) < window:
        raise SparseMap(f"only {len(occupied)} occupied bins")
    starts = np.searchsorted(idx, occupied, side="left")
    stops = np.searchsorted(idx, occupied, side="right")
    cx = np.array([xs[a:b].mean() for a, b in zip(starts, stops)])
    cy = np.array([ys[a:b].min() for a, b in zip(starts, stops)])
    pop = counts[occupied]

    signs = np.sign(_moving_slope(cx, cy, window)).astype(int)
    for i in range(len(signs)):  # flat spots inherit the previous sign
        if signs[i] == 0:
            signs[i] = signs[i - 1] if i else 1
    while True:
        runs = _runs(signs)
        if len(runs) == 1:
            break
        weak = [(int(pop[a:b].sum()), k) for k, (a, b, _) in enumerate(runs)
                if pop[a:b].sum() < min_population or b - a < 3]
        if not weak:
            break
        _, k = min(weak)
        a, b, _ = runs[k]
        if k == 0:
            signs[a:b] = runs[1][2]
        elif k == len(runs) - 1:
            signs[a:b] = runs[k - 1][2]
        else:
            left, right = runs[k - 1], runs[k + 1]
            bigger = left if pop[left[0]:left[1]].sum() >= pop[right[0]:right[1]].sum() else right
            signs[a:b] = bigger[2]
    runs = _runs(signs)

    crit = []
    for (a, b, sg), _ in zip(runs[:-1], runs[1:]):
        lo, hi = cx[max(b - 3, 0)], cx[min(b + 2, len(cx) - 1)]
        m = np.nonzero((xs >= lo) & (xs <= hi))[0]
        j = m[np.argmin(ys[m])] if sg < 0 else m[np.argmax(ys[m])]
        crit.append(_vertex(xs, ys, xs[j], fit_points, valley=sg < 0))
    crit = tuple(sorted(crit))

    bounds = [float(xs[0]), *crit, float(xs[-1])]
    bid = np.searchsorted(np.asarray(crit), xs)
    branches = tuple(
        Branch(k, bounds[k], bounds[k + 1], runs[k][2], int(np.count_nonzero(bid == k)))
        for k in range(len(runs))
    )
    return ReturnMap(xn.copy(), xn1.copy(), crit, branches, meta)


def _vertex(xs, ys, x0, k, valley):
    near = np.argsort(np.abs(xs - x0), kind="stable")[:k]
    px, py = xs[near], ys[near]
    if np.ptp(px) > 0:
        a, b, _ = np.polyfit(px, py, 2)
        if (a > 0) == valley and a != 0:
            v = -b / (2 * a)
            span = np.ptp(px)
            if px.min() - span <= v <= px.max() + span:
                return float(v)
    return float(x0)


def branch_end_gaps(alphas, *, variant=Variant.PLUS, n_crossings: int = 3000, side: str = "right",
                    cfg: IntegratorConfig | None = None, threads: int | None = None) -> np.ndarray:
    """Gap between the outer end of a branch and the diagonal for each alpha.

    Tracks the approach of an increasing branch to the bisecting line before
    a collision: the gap shrinks towards zero as alpha nears the crisis.
    """
    def one(a):
        sys = MemristiveSystem(float(a), variant)
        rm = build_return_map(compute_crossings(sys, n_crossings, s0=DEFAULT_SEED, cfg=cfg))
        return rm.bisector_gaps()[side]

    return np.array(pmap(one, alphas, threads))


# -- periodicity ---------------------------------------------------------------

def detect_period(x, z=None, tol: float = 1e-6, max_period: int = 32) -> int:
    """Smallest p <= max_period with the sequence p-periodic within ``tol``; 0 if none."""
    x = np.asarray(x, dtype=float)
    cols = [x] if z is None else [x, np.asarray(z, dtype=float)]
    for p in range(1, min(max_period, len(x) // 2) + 1):
        if all(np.max(np.abs(c[p:] - c[:-p])) < tol for c in cols):
            return p
    return 0


def converging_period(x, max_period: int = 32, ratio: float = 0.1) -> int:
    """Smallest p whose return differences |x[n+p] - x[n]| shrink by ``ratio``
    from the first to the last quarter of the sequence (a transient still
    settling onto a cycle); 0 if none does."""
    x = np.asarray(x, dtype=float)
    for p in range(1, min(max_period, len(x) // 8) + 1):
        d = np.abs(x[p:] - x[:-p])
        q = len(d) // 4
        if d[-q:].max() < ratio * d[:q].max():
            return p
    return 0


def classify_sequence(x, z=None, tol: float = 1e-6, loose_tol: float = 1e-3,
                      max_period: int = 32) -> tuple[str, int]:
    """Label a post-transient crossing sequence.

    Returns ``("periodic", p)`` when p-periodic within ``tol``; ``("unresolved", p)``
    when periodic only within ``loose_tol`` or visibly converging onto a
    p-cycle; otherwise ``("chaotic", bands)``.
    """
    p = detect_period(x, z, tol, max_period)
    if p:
        return "periodic", p
    p = detect_period(x, z, loose_tol, max_period) or converging_period(x, max_period)
    if p:
        return "unresolved", p
    return "chaotic", count_bands(x, max_period)


def count_bands(x, max_bands: int = 32, min_gap: float = 1e-9) -> int:
    """Number of disjoint intervals visited cyclically by the sequence.

    The sequence is split by index modulo k; k bands are present when the
    hulls of the k subsequences are pairwise disjoint. Starting from the
    smallest such k, k is doubled while the split stays disjoint. Returns 1
    for single-band chaos.
    """
    x = np.asarray(x, dtype=float)

    def disjoint(k):
        if len(x) < 2 * k:
            return False
        hulls = sorted((x[r::k].min(), x[r::k].max()) for r in range(k))
        return all(hulls[i + 1][0] - hulls[i][1] > min_gap for i in range(k - 1))

    for k in range(2, max_bands + 1):
        if disjoint(k):
            while 2 * k <= max_bands and disjoint(2 * k):
                k *= 2
            return k
    return 1


# -- bifurcation diagram ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BifurcationDiagram:
    """Section x-values per alpha with periodicity and band flags.

    ``status[i]`` is one of periodic, unresolved, chaotic, diverged or
    no-crossings. ``periods[i]`` holds the period of periodic points and the
    apparent period of unresolved ones (a cycle not yet settled to the
    tolerance); ``bands[i]`` the number of bands of chaotic points.
    """

    alphas: np.ndarray
    crossings: list
    periods: np.ndarray
    bands: np.ndarray
    status: list
    continuation: bool
    variant: Variant = Variant.PLUS
    notes: list = field(default_factory=list)

    @property
    def extent(self) -> np.ndarray:
        return np.array([np.ptp(c) if len(c) else np.nan for c in self.crossings])

    def family(self) -> np.ndarray:
        """Period (or apparent period) for periodic and unresolved points, band
        count for chaotic ones, 0 otherwise."""
        return np.where(self.periods > 0, self.periods, self.bands)

    def crisis_flags(self, threshold: float = 0.5) -> list[float]:
        """Alphas where the x-extent of a chaotic attractor jumps by more than
        ``threshold`` (relative) from the previous grid point.

        Both neighbours must be chaotic: periodic orbits have (near) zero extent,
        which would turn every period doubling into a spurious jump.
        """
        ext = self.extent
        out = []
        for i in range(1, len(self.alphas)):
            if self.status[i] != "chaotic" or self.status[i - 1] != "chaotic":
                continue
            a, b = ext[i - 1], ext[i]
            if max(a, b) > (1 + threshold) * min(a, b):
                out.append(float(self.alphas[i]))
        return out

    def relative_jumps(self) -> np.ndarray:
        ext = self.extent
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.abs(np.diff(ext)) / np.minimum(ext[1:], ext[:-1])
        return np.concatenate([[np.nan], r])

    def windows(self, base: int) -> list[tuple[float, float]]:
        """Maximal alpha runs whose period or band count is ``base * 2**k``.

        Banded chaos inside a window (after its own doubling cascade) stays
        part of the window.
        """
        fam = self.family()
        ok = np.array([f > 0 and f % base == 0 and _is_pow2(f // base) for f in fam])
        out = []
        i = 0
        while i < len(ok):
            if ok[i]:
                j = i
                while j + 1 < len(ok) and ok[j + 1]:
                    j += 1
                out.append((float(self.alphas[i]), float(self.alphas[j])))
                i = j + 1
            else:
                i += 1
        return out

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["alpha", "x"])
            for a, xs in zip(self.alphas, self.crossings):
                for v in xs:
                    w.writerow([repr(float(a)), repr(float(v))])

    def flags(self) -> dict:
        return {
            "variant": self.variant.value,
            "continuation": self.continuation,
            "crisis_alphas": self.crisis_flags(),
            "points": [
                {"alpha": float(a), "status": s, "period": int(p), "bands": int(b),
                 "extent": None if not np.isfinite(e) else float(e)}
                for a, s, p, b, e in zip(self.alphas, self.status, self.periods, self.bands,
                                          self.extent)
            ],
            "windows": {str(b): self.windows(b) for b in (3, 4, 5)},
            "notes": list(self.notes),
        }

    def write_flags(self, path) -> None:
        Path(path).write_text(json.dumps(self.flags(), indent=2))


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def bifurcation_sweep(alpha_range, resolution: int, cfg: IntegratorConfig | None = None, *,
                      variant=Variant.PLUS, n_crossings: int = 256, seed=DEFAULT_SEED,
                      continuation: bool = True, chunk: int = 25, period_tol: float = 1e-6,
                      max_period: int = 32, threads: int | None = None) -> BifurcationDiagram:
    """Sweep alpha over ``alpha_range`` with ``resolution`` grid points.

    The grid is cut into fixed chunks of ``chunk`` values. Inside a chunk the
    final state at one alpha seeds the next (continuation); every chunk starts
    from ``seed``. Chunks run in parallel, so the output does not depend on the
    thread count. With ``continuation=False`` every alpha starts from ``seed``.
    Each alpha discards ``cfg.transient_time`` and records ``n_crossings``.
    """
    lo, hi = (float(v) for v in alpha_range)
    if not (0 < lo <= hi <= 1.5):
        raise InvalidConfig(f"alpha range must lie in (0, 1.5], got {alpha_range!r}")
    if resolution < 1:
        raise InvalidConfig("resolution must be >= 1")
    cfg = cfg or IntegratorConfig()
    variant = Variant.parse(variant)
    alphas = np.linspace(lo, hi, resolution) if resolution > 1 else np.array([lo])
    seed = as_state(seed).reshape(3)
    budget = crossing_budget(n_crossings)
    blocks = [alphas[i:i + chunk] for i in range(0, len(alphas), chunk)]

    def run_block(block):
        out = []
        s = seed.copy()
        for a in block:
            kind, params = MemristiveSystem(float(a), variant).kernel_spec()
            start = s if continuation else seed
            s1, st, _, _ = K.run_transient(kind, params, start, cfg.transient_time, cfg.step_size,
                                           cfg.adaptive, cfg.rel_tol, cfg.abs_tol,
                                           cfg.divergence_radius)
            if st != K.OK:
                out.append((np.empty(0), np.empty(0), "diverged"))
                s = seed.copy()
                continue
            _, states, n, st, _, final, _ = K.run_crossings(
                kind, params, s1, n_crossings, budget, cfg.step_size, cfg.adaptive,
                cfg.rel_tol, cfg.abs_tol, cfg.divergence_radius,
                SECTION_AXIS, SECTION_VALUE, SECTION_DIRECTION, EVENT_TOL, True,
            )
            if st != K.OK:
                label = "no-crossings" if st == K.TIME_EXHAUSTED else "diverged"
                out.append((states[:n, 0].copy(), states[:n, 2].copy(), label))
                s = seed.copy()
                continue
            out.append((states[:, 0].copy(), states[:, 2].copy(), "ok"))
            s = final.copy()
        return out

    results = [r for block in pmap(run_block, blocks, threads) for r in block]
    crossings, periods, bands, status = [], [], [], []
    for xs, zs, label in results:
        crossings.append(xs)
        if label != "ok":
            periods.append(0)
            bands.append(0)
            status.append(label)
            continue
        label, n = classify_sequence(xs, zs, period_tol, max_period=max_period)
        periods.append(n if label != "chaotic" else 0)
        bands.append(n if label == "chaotic" else 0)
        status.append(label)
    return BifurcationDiagram(alphas, crossings, np.array(periods), np.array(bands), status,
                              continuation, variant)


# -- bistability -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AttractorClass:
    """Asymptotic behaviour of one seed: periodic, chaotic, ambiguous or diverged."""

    kind: str
    period: int = 0
    bands: int = 0
    x_min: float = math.nan
    x_max: float = math.nan
    points: np.ndarray = field(default_factory=lambda: np.empty(0))

    def same_attractor(self, other: "AttractorClass", tol: float = 1e-4) -> bool:
        if self.kind != other.kind or self.kind in ("ambiguous", "diverged"):
            return self.kind == other.kind == "diverged"
        if self.kind == "periodic":
            return (self.period == other.period
                    and np.allclose(np.sort(self.points), np.sort(other.points), atol=tol))
        lo, hi = max(self.x_min, other.x_min), min(self.x_max, other.x_max)
        overlap = max(0.0, hi - lo)
        return overlap > 0.5 * min(self.x_max - self.x_min, other.x_max - other.x_min)

    def describe(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "periodic":
            d["period"] = self.period
            d["points"] = [float(v) for v in np.sort(self.points)]
        elif self.kind == "chaotic":
            d.update(bands=self.bands, x_min=self.x_min, x_max=self.x_max)
        return d


@dataclass(frozen=True, eq=False)
class BistabilityReport:
    alpha: float
    seeds: np.ndarray
    per_seed: list
    labels: list  # class index per seed, -1 for ambiguous or diverged
    classes: list

    @property
    def n_attractors(self) -> int:
        return len(self.classes)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "n_attractors": self.n_attractors,
            "classes": [c.describe() for c in self.classes],
            "seeds": [{"seed": [float(v) for v in s], "class": int(l), **c.describe()}
                      for s, l, c in zip(self.seeds, self.labels, self.per_seed)],
        }


def classify(xs, zs, period_tol=1e-6, max_period=32) -> AttractorClass:
    label, n = classify_sequence(xs, zs, period_tol, max_period=max_period)
    if label == "periodic":
        return AttractorClass("periodic", period=n, x_min=float(xs.min()), x_max=float(xs.max()),
                              points=np.asarray(xs[-n:]).copy())
    if label == "unresolved":
        return AttractorClass("ambiguous")
    return AttractorClass("chaotic", bands=n, x_min=float(xs.min()), x_max=float(xs.max()))


def bistability_scan(alpha: float, seeds, cfg: IntegratorConfig | None = None, *,
                     variant=Variant.PLUS, n_crossings: int = 256,
                     threads: int | None = None) -> BistabilityReport:
    """Integrate from each seed, classify the attractor reached and cluster."""
    seeds = as_state(seeds)
    if seeds.ndim != 2 or len(seeds) < 2:
        raise ValueError("bistability_scan needs at least two seeds")
    cfg = cfg or IntegratorConfig()
    sys = MemristiveSystem(alpha, variant)
    run_cfg = cfg.with_(max_time=crossing_budget(n_crossings))

    def one(seed):
        try:
            cs = compute_crossings(sys, n_crossings, s0=seed, cfg=run_cfg)
        except InsufficientCrossings as exc:
            cause = exc.__cause__
            return AttractorClass("diverged" if cause is not None else "ambiguous")
        return classify(cs.x, cs.z)

    per_seed = pmap(one, seeds, threads)
    classes, labels = [], []
    for c in per_seed:
        if c.kind in ("ambiguous", "diverged"):
            labels.append(-1)
            continue
        for k, ref in enumerate(classes):
            if c.same_attractor(ref):
                labels.append(k)
                break
        else:
            classes.append(c)
            labels.append(len(classes) - 1)
    return BistabilityReport(float(alpha), seeds, per_seed, labels, classes)
