import json

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from chaoskit.errors import Mismatch, NonGenericProjection, UnknownSymbol
from chaoskit.linkage import (
    Template,
    count_linking,
    funnel_template,
    link_polylines,
    predict_linking,
    template_for,
    validate_template,
)


def gauss_linking(a, b):
    """Discretized Gauss double integral over two closed polylines."""
    da = np.roll(a, -1, 0) - a
    db = np.roll(b, -1, 0) - b
    ma, mb = a + da / 2, b + db / 2
    r = ma[:, None, :] - mb[None, :, :]
    c = np.cross(da[:, None, :], db[None, :, :])
    return float((np.einsum("ijk,ijk->ij", r, c) / np.linalg.norm(r, axis=2) ** 3).sum() / (4 * np.pi))


def torus_link(p, q, n=800, R=2.0, r=0.7):
    """Two parallel (p, q) torus curves; for p = 1 their linking number is q."""
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    out = []
    for phase in (0.0, np.pi):
        u, v = p * t, q * t + phase
        out.append(np.column_stack([(R + r * np.cos(v)) * np.cos(u),
                                    (R + r * np.cos(v)) * np.sin(u), r * np.sin(v)]))
    return out


def hopf(n=400):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    return (np.column_stack([np.cos(t), np.sin(t), 0 * t]),
            np.column_stack([1 + np.cos(t), 0 * t, np.sin(t)]))


@pytest.mark.parametrize("projection", ["xy", "xz", "yz"])
def test_hopf_link_matches_gauss_integral(projection):
    a, b = hopf()
    assert round(gauss_linking(a, b)) == -1
    lc = link_polylines(a, b, projection)
    assert lc.lk == -1
    if projection != "yz":  # in yz the first circle is seen edge-on
        assert lc.n_crossings == 2
    assert link_polylines(a, b[::-1], projection).lk == 1
    assert link_polylines(b, a, projection).lk == -1


@pytest.mark.parametrize("q", [1, 2, 3, -2])
def test_torus_links(q):
    a, b = torus_link(1, q)
    g = gauss_linking(a, b)
    assert abs(g - round(g)) < 0.02
    assert link_polylines(a, b).lk == round(g)
    assert abs(round(g)) == abs(q)


def random_loop(rng, centre, modes=3, n=300):
    t = np.linspace(0, 2 * np.pi, n, endpoint=False)
    pts = np.tile(np.asarray(centre, float), (n, 1))
    for k in range(1, modes + 1):
        amp = rng.normal(size=(2, 3)) / k
        pts += np.outer(np.cos(k * t), amp[0]) + np.outer(np.sin(k * t), amp[1])
    return pts


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_random_loops_agree_with_gauss_integral(seed):
    rng = np.random.default_rng(seed)
    a = random_loop(rng, (0, 0, 0))
    b = random_loop(rng, rng.normal(size=3) * 0.5)
    d = np.linalg.norm(a[:, None, :] - b[None, :, :], axis=2).min()
    assume(d > 0.05)  # the discretized integral needs well separated curves
    g = gauss_linking(a, b)
    assume(abs(g - round(g)) < 0.05)
    for proj in ("xy", "xz", "yz"):
        assert link_polylines(a, b, proj).lk == round(g)


def test_degenerate_projection_raises_without_retries():
    x = np.linspace(0, 1, 10)
    a = np.column_stack([x, 0 * x, 0 * x])
    a = np.vstack([a, [[0.5, 1.0, 0.0]]])
    b = np.column_stack([x, 0 * x, 0 * x + 1.0])
    b = np.vstack([b, [[0.5, -1.0, 1.0]]])
    with pytest.raises(NonGenericProjection):
        link_polylines(a, b, max_attempts=1)
    assert link_polylines(a, b).lk in (-1, 0, 1)


def test_custom_projection_matrix():
    a, b = hopf()
    c, s = np.cos(0.3), np.sin(0.3)
    rot = np.array([[1, 0, 0], [0, c, -s], [0, s, c]])
    assert link_polylines(a, b, rot).lk == -1
    with pytest.raises(ValueError):
        link_polylines(a, b, np.diag([1.0, 1.0, -1.0]))
    with pytest.raises(ValueError):
        link_polylines(a, b, "xw")


# -- templates --------------------------------------------------------------------

def test_template_invariants():
    with pytest.raises(ValueError):
        Template((1, 2), [[-1, -2], [-1, -2]])  # not symmetric
    with pytest.raises(ValueError):
        Template((1, 2), [[-2, -2], [-2, -2]])  # stripe 1 needs odd torsion
    t = Template((0, 1), [[0, -1], [-1, -1]])
    assert t.entry(1, 0) == -1
    with pytest.raises(UnknownSymbol):
        t.entry(2, 0)


def test_funnel_sub_blocks():
    f = funnel_template(4)
    assert f.matrix.tolist() == [[0, -1, -1, -1], [-1, -1, -2, -2], [-1, -2, -2, -3], [-1, -2, -3, -3]]
    assert template_for((1, 2)).matrix.tolist() == [[-1, -2], [-2, -2]]
    assert template_for((1, 2)).global_torsion == -1
    assert template_for((0, 1)).matrix.tolist() == [[0, -1], [-1, -1]]
    assert template_for((0, 1, 2)).matrix.tolist() == [[0, -1, -1], [-1, -1, -2], [-1, -2, -2]]
    t2 = template_for((0, 1)).with_full_twists(1)
    assert t2.matrix.tolist() == [[2, 1], [1, 1]] and t2.global_torsion == 2


# linking numbers counted on the extracted orbits (frozen)
COUNTED_098 = {
    ("1", "12"): -1, ("1", "112"): -2, ("1", "122"): -2, ("1", "1112"): -2, ("1", "1122"): -3,
    ("1", "1222"): -3, ("12", "112"): -4, ("12", "122"): -4, ("12", "1112"): -5,
    ("12", "1122"): -6, ("12", "1222"): -6, ("112", "122"): -6, ("112", "1112"): -8,
    ("112", "1122"): -9, ("112", "1222"): -9, ("122", "1112"): -8, ("122", "1122"): -9,
    ("122", "1222"): -9, ("1112", "1122"): -12, ("1112", "1222"): -12, ("1122", "1222"): -12,
}
COUNTED_025507 = {("1", "01"): -1, ("1", "011"): -1, ("1", "0111"): -2, ("01", "011"): -2,
                  ("01", "0111"): -3, ("011", "0111"): -4}


@pytest.mark.parametrize("pair,lk", COUNTED_098.items())
def test_predictions_inverted_horseshoe(pair, lk):
    assert predict_linking(template_for((1, 2)), *pair) == lk


@pytest.mark.parametrize("pair,lk", COUNTED_025507.items())
def test_predictions_two_stripe_funnel(pair, lk):
    assert predict_linking(template_for((0, 1)), *pair) == lk


def test_prediction_errors():
    t = template_for((1, 2))
    with pytest.raises(UnknownSymbol):
        predict_linking(t, "1", "13")
    with pytest.raises(ValueError):
        predict_linking(t, "12", "21")


words = st.lists(st.integers(1, 2), min_size=1, max_size=5).map(tuple)


@settings(max_examples=80, deadline=None)
@given(words, words)
def test_prediction_symmetric_and_shifted_by_full_twists(a, b):
    t = template_for((1, 2))
    ca = min(a[i:] + a[:i] for i in range(len(a)))
    cb = min(b[i:] + b[:i] for i in range(len(b)))
    assume(ca != cb)
    assume(all(ca != ca[:d] * (len(ca) // d) for d in range(1, len(ca)) if len(ca) % d == 0))
    assume(all(cb != cb[:d] * (len(cb) // d) for d in range(1, len(cb)) if len(cb) % d == 0))
    lk = predict_linking(t, a, b)
    assert lk == predict_linking(t, b, a)
    assert lk == predict_linking(t, a[1:] + a[:1], b)
    assert predict_linking(t.with_full_twists(1), a, b) == lk + len(a) * len(b)


# -- orbits ---------------------------------------------------------------------------

def test_counted_orbit_links_are_projection_independent(orbits_098):
    a, b = orbits_098[0], orbits_098[2]
    counts = {p: count_linking(a, b, p).lk for p in ("xy", "xz", "yz")}
    assert set(counts.values()) == {-2}


def test_counted_orbit_link_matches_gauss_integral(orbits_098):
    a, b = orbits_098[0], orbits_098[1]
    pa = a.dense(4000).states[:-1]
    pb = b.dense(8000).states[:-1]
    assert gauss_linking(pa, pb) == pytest.approx(count_linking(a, b).lk, abs=0.02)


def test_orbits_from_different_systems_mismatch(orbits_098, orbits_0985):
    with pytest.raises(Mismatch):
        count_linking(orbits_098[0], orbits_0985[0])


def test_validation_report(orbits_0985, tmp_path):
    rep = validate_template(template_for((1, 2)), orbits_0985, threads=2)
    assert rep.passed and not rep.suspect_entries()
    rep.to_json(tmp_path / "v.json")
    d = json.loads((tmp_path / "v.json").read_text())
    pair = next(p for p in d["pairs"] if {p["a"], p["b"]} == {"2", "12"})
    assert pair["counted"] == pair["predicted"] == -2
    assert pair["crossings"] == 4 and pair["negative"] == 4


def test_wrong_template_is_rejected(orbits_098):
    # the two-stripe funnel of the low-alpha attractor does not fit here
    rep = validate_template(template_for((0, 1)), orbits_098)
    assert not rep.passed
    assert rep.relabel == {1: 0, 2: 1}
    assert rep.suspect_entries() == [(0, 1)]
    with pytest.raises(Mismatch):
        validate_template(funnel_template(3), orbits_098)
    with pytest.raises(ValueError):
        validate_template(template_for((1, 2)), orbits_098[:2])
