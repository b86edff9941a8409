import numpy as np
import pytest

from chaoskit.dynsys import AffineSystem, MemristiveSystem
from chaoskit.errors import Diverged, InvalidConfig, NoEvent
from chaoskit.integrate import IntegratorConfig, Segment, Trajectory, advance, integrate, locate_event
from chaoskit.section import compute_crossings


def test_rotation_matches_closed_form():
    sys = AffineSystem.rotation(1.3)
    cfg = IntegratorConfig(transient_time=0.0, max_time=20.0, step_size=0.05)
    tr = integrate(sys, [0.0, 1.0, 0.5], cfg)
    t = tr.times
    exact = np.column_stack([np.sin(1.3 * t), np.cos(1.3 * t), np.full_like(t, 0.5)])
    assert np.abs(tr.states - exact).max() < 1e-8


def test_fixed_step_mode_is_fourth_order_accurate():
    sys = AffineSystem.rotation(1.0)
    errs = []
    for h in (0.02, 0.01):
        cfg = IntegratorConfig(transient_time=0.0, max_time=2.0, step_size=h, adaptive=False)
        s = integrate(sys, [0.0, 1.0, 0.0], cfg).states[-1]
        errs.append(np.linalg.norm(s - [np.sin(2.0), np.cos(2.0), 0.0]))
    assert errs[1] < errs[0] / 12


def test_exponential_growth_diverges():
    sys = AffineSystem.rotation(1.0, z_rate=1.0)
    cfg = IntegratorConfig(transient_time=0.0, max_time=50.0)
    with pytest.raises(Diverged) as err:
        integrate(sys, [0.0, 0.0, 1.0], cfg)
    # |z| = e^t passes 1000 at t = ln(1000)
    assert err.value.t == pytest.approx(np.log(1000.0), abs=0.05)


def test_section_crossing_times_of_rotation():
    # x = sin(w t), y = cos(w t): downward crossings of y = 0 at w t = pi/2 + 2 pi k
    w = 0.7
    cs = compute_crossings(AffineSystem.rotation(w), 4, s0=[0.0, 1.0, 0.0],
                           cfg=IntegratorConfig(transient_time=0.0, max_time=100.0))
    expected = (np.pi / 2 + 2 * np.pi * np.arange(4)) / w
    assert np.allclose(cs.times, expected, atol=1e-9)
    assert np.allclose(cs.x, 1.0, atol=1e-9)
    assert np.all(np.abs(cs.states[:, 1]) < 1e-12)


def test_crossings_from_sampled_trajectory_agree_with_kernel():
    sys = MemristiveSystem(0.98)
    cfg = IntegratorConfig(transient_time=200.0, max_time=300.0, step_size=0.01)
    tr = integrate(sys, [0.1, 0, 0], cfg)
    a = compute_crossings(tr, 5)
    b = compute_crossings(sys, 5, s0=[0.1, 0, 0], cfg=cfg)
    assert np.allclose(a.times, b.times, atol=1e-6)
    assert np.allclose(a.x, b.x, atol=1e-6)


def test_locate_event_on_segment():
    sys = AffineSystem.rotation(1.0)
    tr = integrate(sys, [0.0, 1.0, 0.0], IntegratorConfig(transient_time=0.0, max_time=3.0,
                                                          step_size=0.1))
    i = int(np.nonzero((tr.states[:-1, 1] > 0) & (tr.states[1:, 1] <= 0))[0][0])
    t, s = locate_event(tr.segment(i), lambda v: v[1], direction=-1)
    assert t == pytest.approx(np.pi / 2, abs=1e-6)
    with pytest.raises(NoEvent):
        locate_event(tr.segment(i), lambda v: v[1], direction=1)


def test_segment_interpolates_endpoints():
    seg = Segment(0.0, 1.0, np.zeros(3), np.ones(3), np.ones(3), np.ones(3))
    assert np.allclose(seg(0.0), 0) and np.allclose(seg(1.0), 1) and np.allclose(seg(0.5), 0.5)
    assert np.allclose(seg.derivative(0.3), 1)


def test_advance_zero_duration_is_identity():
    s = advance(MemristiveSystem(0.5), [0.2, 0.1, 0.0], 0.0, IntegratorConfig())
    assert np.allclose(s, [0.2, 0.1, 0.0])


def test_config_validation():
    with pytest.raises(InvalidConfig):
        IntegratorConfig(step_size=0)
    with pytest.raises(InvalidConfig):
        IntegratorConfig(rel_tol=-1)
    with pytest.raises(InvalidConfig):
        IntegratorConfig(divergence_radius=5)
    assert IntegratorConfig().with_(rel_tol=1e-6).rel_tol == 1e-6


def test_csv_roundtrip(tmp_path):
    sys = MemristiveSystem(0.98)
    tr = integrate(sys, [0.1, 0, 0], IntegratorConfig(transient_time=10.0, max_time=1.0))
    p = tmp_path / "t.csv"
    tr.to_csv(p)
    assert p.read_text().splitlines()[0] == "t,x,y,z"
    back = Trajectory.from_csv(p, sys)
    assert np.array_equal(back.states, tr.states) and np.array_equal(back.times, tr.times)


def test_integration_is_deterministic():
    cfg = IntegratorConfig(transient_time=50.0, max_time=50.0)
    a = integrate(MemristiveSystem(0.98), [0.1, 0, 0], cfg).states
    b = integrate(MemristiveSystem(0.98), [0.1, 0, 0], cfg).states
    assert np.array_equal(a, b)
