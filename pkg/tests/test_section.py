import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaoskit.dynsys import MemristiveSystem, Variant
from chaoskit.errors import InsufficientCrossings, InvalidConfig, SparseMap
from chaoskit.integrate import IntegratorConfig
from chaoskit.section import (
    AttractorClass,
    BifurcationDiagram,
    bifurcation_sweep,
    bistability_scan,
    build_return_map,
    classify,
    classify_sequence,
    compute_crossings,
    count_bands,
    detect_period,
)


def logistic(n, r=3.9999, x0=0.3141):
    x = np.empty(n)
    x[0] = x0
    for i in range(1, n):
        x[i] = r * x[i - 1] * (1 - x[i - 1])
    return x


def test_logistic_return_map_has_one_critical_point():
    rm = build_return_map(logistic(4000))
    assert rm.n_branches == 2
    assert [b.slope for b in rm.branches] == [1, -1]
    assert rm.critical_points[0] == pytest.approx(0.5, abs=5e-3)
    assert rm.populations().sum() == 3999
    assert rm.spread() < 1e-6


def test_tent_like_cubic_map_has_three_branches():
    # bimodal cubic with full range on [-1, 1]: critical points at +-1/2
    x = np.empty(6000)
    x[0] = 0.123
    for i in range(1, len(x)):
        x[i] = 4 * x[i - 1] ** 3 - 3 * x[i - 1]
        x[i] = np.clip(x[i] * 0.99999, -1, 1)
    rm = build_return_map(x)
    assert rm.n_branches == 3
    assert [b.slope for b in rm.branches] == [1, -1, 1]
    assert np.allclose(rm.critical_points, [-0.5, 0.5], atol=0.01)


def test_sparse_map_raises():
    with pytest.raises(SparseMap):
        build_return_map(logistic(100))
    with pytest.raises(SparseMap):
        build_return_map(np.ones(1000))


def test_return_map_at_098():
    cs = compute_crossings(MemristiveSystem(0.98), 3000, s0=(0.1, 0, 0))
    rm = build_return_map(cs)
    assert rm.n_branches == 2
    assert [b.slope for b in rm.branches] == [-1, 1]
    assert np.all(cs.x > 0)  # downward crossings of y = 0 have x > 0
    assert rm.spread() < 1e-3
    assert rm.summary()["alpha"] == 0.98


def test_return_map_csv(tmp_path):
    rm = build_return_map(logistic(1000))
    rm.to_csv(tmp_path / "rm.csv")
    rows = (tmp_path / "rm.csv").read_text().splitlines()
    assert rows[0] == "x_n,x_next,branch_id" and len(rows) == 1000


def test_insufficient_crossings():
    cfg = IntegratorConfig(transient_time=0.0, max_time=30.0)
    with pytest.raises(InsufficientCrossings) as err:
        compute_crossings(MemristiveSystem(0.98), 100, s0=(0.1, 0, 0), cfg=cfg)
    assert err.value.found < 100


@pytest.mark.parametrize("p", [1, 2, 3, 5, 8])
def test_detect_period_of_cycles(p):
    base = np.random.default_rng(p).uniform(0, 1, p)
    x = np.tile(base, 200 // p + 1)[:200]
    assert detect_period(x) == p
    assert classify_sequence(x) == ("periodic", p)


def test_detect_period_rejects_chaos():
    assert detect_period(logistic(500)) == 0
    assert classify_sequence(logistic(500))[0] == "chaotic"


def test_converging_cycle_is_unresolved():
    n = np.arange(400)
    x = np.where(n % 2, 1.0, 2.0) + 0.05 * 0.98**n * (-1) ** n
    label, p = classify_sequence(x)
    assert (label, p) == ("unresolved", 2)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 3), st.integers(0, 10**6))
def test_count_bands_of_cyclic_intervals(k, seed):
    bands = 2**k
    rng = np.random.default_rng(seed)
    centres = rng.permutation(bands) * 1.0
    x = centres[np.arange(512) % bands] + rng.uniform(0, 0.5, 512)
    assert count_bands(x) == bands


def test_single_band():
    assert count_bands(logistic(600)) == 1


def _diagram(status, extents):
    alphas = np.linspace(0.2, 0.3, len(status))
    cross = [np.array([0.0, e]) for e in extents]
    periods = np.array([2 if s == "periodic" else 0 for s in status])
    bands = np.array([1 if s == "chaotic" else 0 for s in status])
    return BifurcationDiagram(alphas, cross, periods, bands, list(status), True, Variant.PLUS)


def test_crisis_flags_need_chaotic_neighbours():
    d = _diagram(["chaotic", "chaotic", "chaotic", "periodic", "chaotic"], [1.0, 1.1, 2.0, 0.1, 1.0])
    assert d.crisis_flags() == [pytest.approx(d.alphas[2])]
    assert d.relative_jumps()[2] == pytest.approx(0.9 / 1.1)


def test_windows_follow_doubling_families():
    status = ["chaotic"] * 2 + ["periodic"] * 3 + ["chaotic"]
    d = _diagram(status, [1, 1, 0, 0, 0, 1])
    periods = np.array([0, 0, 3, 6, 12, 0])
    d = BifurcationDiagram(d.alphas, d.crossings, periods, d.bands, status, True)
    assert d.windows(3) == [(d.alphas[2], d.alphas[4])]
    assert d.windows(5) == []


def test_sweep_is_thread_independent_and_deterministic(tmp_path):
    cfg = IntegratorConfig(transient_time=200.0)
    kw = dict(n_crossings=64, chunk=4)
    a = bifurcation_sweep((0.6, 0.7), 10, cfg, threads=1, **kw)
    b = bifurcation_sweep((0.6, 0.7), 10, cfg, threads=3, **kw)
    a.to_csv(tmp_path / "a.csv")
    b.to_csv(tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert a.status == b.status
    flags = a.flags()
    assert len(flags["points"]) == 10 and flags["continuation"] is True


def test_sweep_single_point_and_validation():
    cfg = IntegratorConfig(transient_time=5000.0)
    d = bifurcation_sweep((0.65, 0.65), 1, cfg, n_crossings=64)
    assert len(d.alphas) == 1 and d.status[0] == "periodic" and d.periods[0] == 3
    # inside the same window the cycle has doubled
    d = bifurcation_sweep((0.69, 0.69), 1, cfg, n_crossings=64)
    assert d.periods[0] == 6 and d.windows(3) == [(0.69, 0.69)]
    with pytest.raises(InvalidConfig):
        bifurcation_sweep((0.0, 1.0), 10)
    with pytest.raises(InvalidConfig):
        bifurcation_sweep((0.1, 2.0), 10)
    with pytest.raises(InvalidConfig):
        bifurcation_sweep((0.1, 1.0), 0)


def test_classify_and_same_attractor():
    p = classify(np.tile([1.0, 2.0], 50), None)
    q = classify(np.tile([2.0, 1.0], 50), None)
    assert p.kind == "periodic" and p.period == 2 and p.same_attractor(q)
    c = classify(logistic(300), None)
    assert c.kind == "chaotic" and not c.same_attractor(p)
    assert AttractorClass("diverged").same_attractor(AttractorClass("diverged"))


def test_bistability_scan_reports_seeds():
    seeds = [[0.1, 0, 0], [0.2, 0.1, 0.0]]
    rep = bistability_scan(0.65, seeds, IntegratorConfig(transient_time=5000.0), n_crossings=64,
                           threads=2)
    assert rep.n_attractors == 1
    d = rep.to_dict()
    assert len(d["seeds"]) == 2 and d["classes"][0]["kind"] == "periodic"
    assert d["classes"][0]["period"] == 3
    with pytest.raises(ValueError):
        bistability_scan(0.69, [[0.1, 0, 0]])
