"""Linking numbers of periodic orbits and template (linking matrix) checks.

Counting: both orbits are sampled as closed polylines and projected on a
plane. At each crossing between the two orbits the over-strand is the one with
the larger depth coordinate, and the crossing sign is the sign of
(over tangent) x (under tangent) in the plane, which is the right-hand rule
of the Gauss linking integral. Lk is half the signed sum.

Prediction: standard insertion on a template given by its linking matrix M.
For each pair of strand passages (one from each orbit) in stripes i and j:

* same stripe: the local torsion contributes M_ii crossings;
* different stripes: M_ij crossings, plus a correction at the branch line.
  The stripes leave the splitting line in x order and an odd M_ij swaps
  them. They must reach the branch line in the order of their images
  (kneading order of the following symbols). When the two orders differ the
  strands cross once more on insertion, adding +1.

Lk is half the total.
"""
from __future__ import annotations

import csv
import itertools
import json
from dataclasses import dataclass, field
from math import lcm

import numpy as np
from numba import njit

from ._parallel import pmap
from .errors import Mismatch, NonGenericProjection, UnknownSymbol
from .orbits import Itinerary, PeriodicOrbit

__all__ = [
    "Template",
    "CrossingRecord",
    "LinkCount",
    "PairResult",
    "ValidationReport",
    "funnel_template",
    "template_for",
    "count_linking",
    "link_polylines",
    "predict_linking",
    "validate_template",
    "funnel_check",
    "SIGN_CONVENTION",
]

# Overall orientation factor applied to every crossing sign. With the
# right-hand rule above, Lk((2),(21)) = -2 near alpha = 0.98 and the counted
# values agree with the Gauss linking integral, so the factor is +1.
SIGN_CONVENTION = 1
COLLINEAR_GUARD = 1e-12
SAMPLES_PER_CROSSING = 2000

# right-handed frames (u, v, depth) for the named projection planes
PLANES = {
    "xy": np.eye(3),
    "xz": np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]]),
    "yz": np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]),
}


# -- templates -------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Template:
    """Linking matrix over an ordered alphabet (symbols ordered along x).

    ``matrix[i][j]`` refers to ``alphabet[i]`` and ``alphabet[j]``. Diagonal
    entries count local half-twists; their parity must match the symbol's
    parity (odd symbols are orientation reversing). ``global_torsion``
    records a global twist already absorbed into the standard form.
    """

    alphabet: tuple[int, ...]
    matrix: np.ndarray
    global_torsion: int = 0
    name: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=int)
        alpha = tuple(int(a) for a in self.alphabet)
        if m.shape != (len(alpha), len(alpha)):
            raise ValueError(f"matrix shape {m.shape} does not match alphabet {alpha}")
        if not np.array_equal(m, m.T):
            raise ValueError("linking matrix must be symmetric")
        for a, d in zip(alpha, np.diag(m)):
            if abs(d) % 2 != a % 2:
                raise ValueError(f"torsion {d} of stripe {a} has the wrong parity")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "alphabet", alpha)

    def index(self, symbol: int) -> int:
        try:
            return self.alphabet.index(int(symbol))
        except ValueError:
            raise UnknownSymbol(f"symbol {symbol} not in template alphabet {self.alphabet}") from None

    def entry(self, a: int, b: int) -> int:
        return int(self.matrix[self.index(a), self.index(b)])

    def restrict(self, symbols, name: str = "") -> "Template":
        idx = [self.index(s) for s in symbols]
        return Template(tuple(symbols), self.matrix[np.ix_(idx, idx)], self.global_torsion, name)

    def with_full_twists(self, k: int) -> "Template":
        """Add ``k`` global full twists (2k half-twists on every entry)."""
        return Template(self.alphabet, self.matrix + 2 * k, self.global_torsion + 2 * k, self.name)

    def to_dict(self) -> dict:
        return {"name": self.name, "alphabet": list(self.alphabet),
                "matrix": self.matrix.tolist(), "global_torsion": self.global_torsion}


def funnel_template(n_stripes: int) -> Template:
    """Linking matrix of an n-stripe funnel: M_ii = -i and M_ij = -(min(i, j) + 1).

    The two-stripe matrices found near alpha = 0.25507 (stripes 0, 1) and
    alpha = 0.98 (stripes 1, 2) are sub-blocks of it.
    """
    i = np.arange(n_stripes)
    m = -(np.minimum.outer(i, i) + 1)
    m[i, i] = -i
    return Template(tuple(range(n_stripes)), m, 0, f"funnel-{n_stripes}")


def template_for(alphabet) -> Template:
    """Funnel sub-template over ``alphabet``; stripes {1, 2} carry the absorbed
    global negative half-twist of the inverted horseshoe."""
    alphabet = tuple(int(a) for a in alphabet)
    full = funnel_template(max(alphabet) + 1)
    t = full.restrict(alphabet, name="stripes-" + "".join(map(str, alphabet)))
    if alphabet == (1, 2):
        t = Template(t.alphabet, t.matrix, -1, "inverted-horseshoe")
    return t


# -- prediction -----------------------------------------------------------------

def _as_word(w, tmpl: Template) -> tuple[int, ...]:
    if isinstance(w, Itinerary):
        syms = w.symbols
    elif isinstance(w, PeriodicOrbit):
        syms = w.itinerary.symbols
    elif isinstance(w, str):
        syms = tuple(int(c) for c in w.strip())
    else:
        syms = tuple(int(s) for s in w)
    for s in syms:
        tmpl.index(s)  # raises UnknownSymbol
    if not syms:
        raise ValueError("empty itinerary")
    return syms


def _kneading_cmp(a, b, depth, tmpl: Template) -> int:
    flip = 1
    for k in range(depth):
        x, y = a[k % len(a)], b[k % len(b)]
        if x != y:
            return flip * (1 if tmpl.index(x) > tmpl.index(y) else -1)
        if tmpl.entry(x, x) % 2:
            flip = -flip
    return 0


def predict_linking(tmpl: Template, a, b) -> int:
    """Linking number of the orbits with itineraries ``a`` and ``b`` on ``tmpl``.

    Raises :class:`UnknownSymbol` for symbols outside the alphabet and
    ``ValueError`` when both itineraries describe the same orbit.
    """
    wa, wb = _as_word(a, tmpl), _as_word(b, tmpl)
    if len(wa) == len(wb) and any(wa[i:] + wa[:i] == wb for i in range(len(wa))):
        raise ValueError("linking number needs two distinct orbits")
    depth = 2 * lcm(len(wa), len(wb)) + 2
    total = 0
    for i, si in enumerate(wa):
        for j, sj in enumerate(wb):
            m = tmpl.entry(si, sj)
            total += m
            if si == sj:
                continue
            before = tmpl.index(si) < tmpl.index(sj)
            if m % 2:
                before = not before
            fa = wa[i + 1:] + wa[:i + 1]
            fb = wb[j + 1:] + wb[:j + 1]
            after = _kneading_cmp(fa, fb, depth, tmpl) < 0
            if before != after:
                total += 1
    if total % 2:
        raise ValueError(f"odd crossing total {total}; template and words are inconsistent")
    return total // 2


# -- counting ------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _crossings(A, B, guard):
    """Proper crossings between the projected closed polylines A and B.

    A, B: (n + 1, 3) arrays in (u, v, depth) with the last point equal to the
    first. Returns (i, j, s, t, sign, n_degenerate); sign uses the
    right-hand rule with the over-strand first.
    """
    na, nb = A.shape[0] - 1, B.shape[0] - 1
    cap = 64
    oi = np.empty(cap, np.int64)
    oj = np.empty(cap, np.int64)
    os_ = np.empty(cap)
    ot = np.empty(cap)
    osg = np.empty(cap, np.int64)
    k = 0
    degenerate = 0
    # bounding boxes of B segments
    bminu = np.minimum(B[:-1, 0], B[1:, 0])
    bmaxu = np.maximum(B[:-1, 0], B[1:, 0])
    bminv = np.minimum(B[:-1, 1], B[1:, 1])
    bmaxv = np.maximum(B[:-1, 1], B[1:, 1])
    for i in range(na):
        a0u, a0v, a1u, a1v = A[i, 0], A[i, 1], A[i + 1, 0], A[i + 1, 1]
        aminu, amaxu = min(a0u, a1u), max(a0u, a1u)
        aminv, amaxv = min(a0v, a1v), max(a0v, a1v)
        du, dv = a1u - a0u, a1v - a0v
        for j in range(nb):
            if bmaxu[j] < aminu or bminu[j] > amaxu or bmaxv[j] < aminv or bminv[j] > amaxv:
                continue
            b0u, b0v, b1u, b1v = B[j, 0], B[j, 1], B[j + 1, 0], B[j + 1, 1]
            eu, ev = b1u - b0u, b1v - b0v
            o1 = du * (b0v - a0v) - dv * (b0u - a0u)
            o2 = du * (b1v - a0v) - dv * (b1u - a0u)
            o3 = eu * (a0v - b0v) - ev * (a0u - b0u)
            o4 = eu * (a1v - b0v) - ev * (a1u - b0u)
            if (abs(o1) < guard or abs(o2) < guard) and o3 * o4 <= 0.0:
                degenerate += 1
                continue
            if (abs(o3) < guard or abs(o4) < guard) and o1 * o2 <= 0.0:
                degenerate += 1
                continue
            if o1 * o2 >= 0.0 or o3 * o4 >= 0.0:
                continue
            s = o3 / (o3 - o4)
            t = o1 / (o1 - o2)
            wa = A[i, 2] + s * (A[i + 1, 2] - A[i, 2])
            wb = B[j, 2] + t * (B[j + 1, 2] - B[j, 2])
            if abs(wa - wb) < guard:
                degenerate += 1
                continue
            c = du * ev - dv * eu  # tangent A x tangent B
            sg = 1 if c > 0 else -1
            if wb > wa:
                sg = -sg
            if k == cap:
                cap *= 2
                oi = np.concatenate((oi, np.empty(cap - k, np.int64)))
                oj = np.concatenate((oj, np.empty(cap - k, np.int64)))
                os_ = np.concatenate((os_, np.empty(cap - k)))
                ot = np.concatenate((ot, np.empty(cap - k)))
                osg = np.concatenate((osg, np.empty(cap - k, np.int64)))
            oi[k], oj[k], os_[k], ot[k], osg[k] = i, j, s, t, sg
            k += 1
    return oi[:k], oj[:k], os_[:k], ot[:k], osg[:k], degenerate


@dataclass(frozen=True)
class CrossingRecord:
    position: tuple[float, float]
    sign: int
    over: tuple[str, int]
    under: tuple[str, int]


@dataclass(frozen=True)
class LinkCount:
    lk: int
    records: tuple[CrossingRecord, ...]
    projection: str
    frame: np.ndarray = field(repr=False, default=None)

    @property
    def n_crossings(self) -> int:
        return len(self.records)

    @property
    def n_negative(self) -> int:
        return sum(1 for r in self.records if r.sign < 0)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["u", "v", "sign", "over_orbit", "over_segment", "under_orbit", "under_segment"])
            for r in self.records:
                w.writerow([repr(r.position[0]), repr(r.position[1]), r.sign, *r.over, *r.under])


def _rotation(axis, angle):
    axis = np.asarray(axis, float) / np.linalg.norm(axis)
    k = np.array([[0, -axis[2], axis[1]], [axis[2], 0, -axis[0]], [-axis[1], axis[0], 0]])
    return np.eye(3) + np.sin(angle) * k + (1 - np.cos(angle)) * k @ k


def _frame(projection):
    if isinstance(projection, str):
        try:
            return PLANES[projection.lower()], projection.lower()
        except KeyError:
            raise ValueError(f"unknown projection {projection!r}; use one of {sorted(PLANES)}") from None
    r = np.asarray(projection, dtype=float)
    if r.shape != (3, 3) or not np.allclose(r @ r.T, np.eye(3), atol=1e-9) or np.linalg.det(r) < 0:
        raise ValueError("projection must be a name or a proper rotation matrix")
    return r, "custom"


def _polyline(orbit: PeriodicOrbit, samples: int) -> np.ndarray:
    pts = orbit.dense(samples).states.copy()
    pts[-1] = pts[0]
    return pts


def _samples(orbit: PeriodicOrbit, samples_per_crossing: int) -> int:
    return samples_per_crossing * orbit.period


_PERTURB_AXES = [(1.0, 0.3, 0.2), (0.2, 1.0, 0.5), (0.4, 0.1, 1.0), (1.0, -0.7, 0.3), (-0.3, 0.6, 1.0)]


def link_polylines(a, b, projection="xy", *, names=("a", "b"), max_attempts: int = 6) -> LinkCount:
    """Linking number of two closed polylines (n, 3) by signed projected crossings.

    The curves are closed by joining the last point to the first. When a
    near-degenerate crossing is met or the signed sum is odd the frame is
    rotated by 1e-3 rad about a varying axis and the count is repeated;
    :class:`NonGenericProjection` is raised after ``max_attempts``.
    """
    frame, pname = _frame(projection)
    polys = []
    for p in (a, b):
        p = np.asarray(p, dtype=float)
        if p.ndim != 2 or p.shape[1] != 3 or len(p) < 3:
            raise ValueError("polylines must be (n >= 3, 3) arrays")
        polys.append(p if np.array_equal(p[0], p[-1]) else np.vstack([p, p[:1]]))
    for attempt in range(max_attempts):
        r = frame if attempt == 0 else _rotation(_PERTURB_AXES[(attempt - 1) % len(_PERTURB_AXES)],
                                                 1e-3 * attempt) @ frame
        pa, pb = polys[0] @ r.T, polys[1] @ r.T
        oi, oj, s, t, sg, degenerate = _crossings(pa, pb, COLLINEAR_GUARD)
        total = int(sg.sum()) * SIGN_CONVENTION
        if degenerate == 0 and total % 2 == 0:
            break
    else:
        raise NonGenericProjection(f"no generic projection found for {names[0]} / {names[1]}")
    records = []
    for i, j, si, ti, g in zip(oi, oj, s, t, sg):
        pos = pa[i, :2] + si * (pa[i + 1, :2] - pa[i, :2])
        wa = pa[i, 2] + si * (pa[i + 1, 2] - pa[i, 2])
        wb = pb[j, 2] + ti * (pb[j + 1, 2] - pb[j, 2])
        sa, sb = (names[0], int(i)), (names[1], int(j))
        over, under = (sa, sb) if wa > wb else (sb, sa)
        records.append(CrossingRecord((float(pos[0]), float(pos[1])), int(g) * SIGN_CONVENTION, over, under))
    return LinkCount(total // 2, tuple(records), pname, r)


def count_linking(a: PeriodicOrbit, b: PeriodicOrbit, projection="xy", *,
                  samples_per_crossing: int = SAMPLES_PER_CROSSING, max_attempts: int = 6,
                  _cache: dict | None = None) -> LinkCount:
    """Signed-crossing linking number of two periodic orbits in a plane projection.

    Each orbit is sampled with ``samples_per_crossing`` points per section
    crossing and handed to :func:`link_polylines`.
    """
    if a.system.describe() != b.system.describe():
        raise Mismatch(f"orbits come from different systems: {a.system.describe()} vs {b.system.describe()}")
    cache = {} if _cache is None else _cache
    polys = []
    for o in (a, b):
        key = id(o)
        if key not in cache:
            cache[key] = _polyline(o, _samples(o, samples_per_crossing))
        polys.append(cache[key])
    return link_polylines(polys[0], polys[1], projection, names=(a.name, b.name),
                          max_attempts=max_attempts)


# -- validation --------------------------------------------------------------------

@dataclass(frozen=True)
class PairResult:
    a: str
    b: str
    counted: int
    predicted: int
    n_crossings: int
    n_negative: int
    off_diagonal: tuple = ()

    @property
    def agree(self) -> bool:
        return self.counted == self.predicted

    def to_dict(self) -> dict:
        return {"a": self.a, "b": self.b, "counted": self.counted, "predicted": self.predicted,
                "agree": self.agree, "crossings": self.n_crossings, "negative": self.n_negative,
                "off_diagonal_entries": [list(e) for e in self.off_diagonal]}


@dataclass(frozen=True)
class ValidationReport:
    template: Template
    pairs: tuple[PairResult, ...]
    system: dict
    relabel: dict = field(default_factory=dict)
    stripe_orbits: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(p.agree for p in self.pairs)

    @property
    def disagreements(self) -> list[PairResult]:
        return [p for p in self.pairs if not p.agree]

    def suspect_entries(self) -> list[tuple[int, int]]:
        """Off-diagonal entries used by every disagreeing pair (empty if none)."""
        bad = self.disagreements
        if not bad:
            return []
        common = set(bad[0].off_diagonal)
        for p in bad[1:]:
            common &= set(p.off_diagonal)
        return sorted(common)

    def to_dict(self) -> dict:
        return {
            **self.system,
            "template": self.template.to_dict(),
            "relabel": {str(k): v for k, v in self.relabel.items()},
            "passed": self.passed,
            "suspect_entries": [list(e) for e in self.suspect_entries()],
            "stripe_orbits": {str(k): v for k, v in self.stripe_orbits.items()},
            "pairs": [p.to_dict() for p in self.pairs],
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)


def _relabel_map(orbits, tmpl: Template) -> dict:
    """Map orbit symbols onto template symbols by their order along x."""
    src = orbits[0].itinerary.alphabet
    if len(src) != len(tmpl.alphabet):
        raise Mismatch(f"orbit alphabet {src} and template alphabet {tmpl.alphabet} differ in size")
    return {s: t for s, t in zip(src, tmpl.alphabet) if s != t}


def validate_template(tmpl: Template, orbits, projection="xy", *, threads: int | None = None,
                      samples_per_crossing: int = SAMPLES_PER_CROSSING) -> ValidationReport:
    """Compare predicted and counted linking numbers for every orbit pair.

    Orbit symbols are matched to template symbols by their order along x, so a
    template from another parameter value can be applied as a control.
    """
    orbits = list(orbits)
    if len(orbits) < 3:
        raise ValueError("template validation needs at least three orbits")
    systems = {json.dumps(o.system.describe(), sort_keys=True) for o in orbits}
    if len(systems) > 1:
        raise Mismatch("orbits come from different systems")
    relabel = _relabel_map(orbits, tmpl)
    words = [tuple(relabel.get(s, s) for s in o.itinerary.symbols) for o in orbits]
    cache: dict = {}
    for o in orbits:  # sample each orbit once, outside the pool
        cache[id(o)] = _polyline(o, _samples(o, samples_per_crossing))
    pairs = list(itertools.combinations(range(len(orbits)), 2))

    def one(ij):
        i, j = ij
        lc = count_linking(orbits[i], orbits[j], projection,
                           samples_per_crossing=samples_per_crossing, _cache=cache)
        pred = predict_linking(tmpl, words[i], words[j])
        used = sorted({tuple(sorted((s, t))) for s in words[i] for t in words[j] if s != t})
        return PairResult(orbits[i].name, orbits[j].name, lc.lk, pred, lc.n_crossings,
                          lc.n_negative, tuple(used))

    results = tuple(pmap(one, pairs, threads))
    stripes = {s: sum(1 for w in words if s in w) for s in tmpl.alphabet}
    return ValidationReport(tmpl, results, orbits[0].system.describe(), relabel, stripes)


def funnel_check(orbits, *, projection="xy", threads: int | None = None) -> ValidationReport:
    """Validate the four-stripe funnel matrix against counted linking numbers.

    Stripes without orbits (the nearly removed stripe 0) are reported with a
    zero count in ``stripe_orbits`` rather than treated as an error.
    """
    return validate_template(funnel_template(4), orbits, projection, threads=threads)
