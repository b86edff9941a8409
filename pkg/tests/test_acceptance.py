"""Acceptance criteria 1-8. Each test prints one PASS/FAIL line, also collected
into the terminal summary. Failing criteria are reported as they are; the
analysis behind each known failure is kept in the decisions ledger."""
import time

import numpy as np
import pytest

from chaoskit.curvature import _pieces, along, sign_changes_near
from chaoskit.dynsys import AffineSystem, MemristiveSystem, ScaledSystem
from chaoskit.integrate import IntegratorConfig, integrate
from chaoskit.linkage import count_linking, template_for, validate_template
from chaoskit.orbits import find_upos
from chaoskit.section import bifurcation_sweep, bistability_scan, build_return_map, compute_crossings
from conftest import ACCEPTANCE


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return ok


def by_name(orbits, name):
    return next((o for o in orbits if o.name == name), None)


def test_criterion_1_return_map_critical_point():
    t0 = time.perf_counter()
    rm = build_return_map(compute_crossings(MemristiveSystem(0.98), 5000, s0=(0.1, 0, 0)))
    dt = time.perf_counter() - t0
    crit = rm.critical_points
    ok = rm.n_branches == 2 and abs(crit[0] - 2.305) <= 0.05 and dt < 30
    assert report(1, ok, f"{rm.n_branches} branches, critical point {crit[0]:.4f} "
                         f"(target 2.305 +- 0.05), {dt:.1f} s")


def test_criterion_2_counted_linking_numbers():
    t0 = time.perf_counter()
    parts, ok = [], True

    orbits = find_upos(MemristiveSystem(0.98), 2)
    two, twelve = by_name(orbits, "2"), by_name(orbits, "12")
    if two is None or twelve is None:
        ok = False
        parts.append("alpha=0.98: orbit (2) not found (extracted: "
                     + ",".join(o.name for o in orbits) + ")")
    else:
        lc = count_linking(two, twelve)
        good = lc.lk == -2 and lc.n_crossings == 4 and lc.n_negative == 4
        ok &= good
        parts.append(f"alpha=0.98: Lk((2),(21))={lc.lk} via {lc.n_negative}/{lc.n_crossings} "
                     "negative crossings")

    orbits = find_upos(MemristiveSystem(0.25507), 2)
    one, zero_one = by_name(orbits, "1"), by_name(orbits, "01")
    if one is None or zero_one is None:
        ok = False
        parts.append("alpha=0.25507: orbits (1),(10) not found")
    else:
        lc = count_linking(one, zero_one)
        good = lc.lk == -1 and lc.n_crossings == 2 and lc.n_negative == 2
        ok &= good
        parts.append(f"alpha=0.25507: Lk((1),(10))={lc.lk} via {lc.n_negative}/{lc.n_crossings} "
                     "negative crossings")
    dt = time.perf_counter() - t0
    ok &= dt < 120
    assert report(2, ok, "; ".join(parts) + f"; {dt:.1f} s")


def test_criterion_3_template_agreement(orbits_098, orbits_025507):
    parts, ok = [], True
    for alpha, orbits, alphabet in ((0.98, orbits_098, (1, 2)), (0.25507, orbits_025507, (0, 1))):
        tmpl = template_for(alphabet)
        rep = validate_template(tmpl, orbits)
        agree = sum(p.agree for p in rep.pairs)
        ok &= rep.passed and max(o.period for o in orbits) == 4
        detail = f"alpha={alpha}: {agree}/{len(rep.pairs)} pairs agree with {tmpl.matrix.tolist()}"
        if not rep.passed:
            detail += f", suspect entries {rep.suspect_entries()}"
        parts.append(detail)
    assert report(3, ok, "; ".join(parts))


@pytest.fixture(scope="module")
def sweep():
    t0 = time.perf_counter()
    d = bifurcation_sweep((0.1, 1.4), 1300)
    return d, time.perf_counter() - t0


def test_criterion_4_bifurcation_landmarks(sweep):
    d, dt = sweep
    step = d.alphas[1] - d.alphas[0]
    flags = d.crisis_flags()
    near = [a for a in flags if abs(a - 0.25507) <= step]
    jumps = d.relative_jumps()
    win = np.abs(d.alphas - 0.25507) <= 3 * step
    biggest = np.nanmax(jumps[win]) if np.any(np.isfinite(jumps[win])) else float("nan")
    crisis_ok = bool(near)

    w3 = d.windows(3)

    def containing(a):
        return [w for w in w3 if w[0] - step <= a <= w[1] + step]

    w069, w085 = containing(0.69), containing(0.85)
    top_ok = d.status[-1] == "periodic" and d.periods[-1] == 1
    ok = crisis_ok and bool(w069) and bool(w085) and top_ok and dt < 1800
    detail = (
        f"(a) crisis flags near 0.25507: {near or 'none'} (largest relative extent jump "
        f"within 3 steps {biggest:.1%}, threshold 50%); "
        f"(b) period-3 window at 0.69: {w069 or 'none'}, at 0.85: {w085 or 'none'}; "
        f"(c) top of range {d.status[-1]} period {d.periods[-1]}; {len(d.alphas)} points, {dt:.1f} s"
    )
    assert report(4, ok, detail)


def test_criterion_5_bistability():
    seeds = np.random.default_rng(0).uniform(-3, 3, (20, 3))
    rep = bistability_scan(1.1, seeds)
    kinds = sorted(c.kind if c.kind != "periodic" else f"period-{c.period}" for c in rep.classes)
    counts = [rep.labels.count(k) for k in range(rep.n_attractors)]
    ok = rep.n_attractors == 2 and kinds == ["chaotic", "period-1"] and min(counts) >= 1
    assert report(5, ok, f"{rep.n_attractors} attractor classes {kinds}, seeds per class {counts}, "
                         f"unclassified {rep.labels.count(-1)}")


def test_criterion_6_branch_counts():
    parts, ok = [], True
    for alpha, want in ((0.25515, 3), (0.533, 4)):
        rm = build_return_map(compute_crossings(MemristiveSystem(alpha), 5000, s0=(0.1, 0, 0)))
        pops = rm.populations()
        ok &= rm.n_branches == want
        parts.append(f"alpha={alpha}: {rm.n_branches} branches (want {want}), populations "
                     f"{pops.tolist()}")
        if alpha == 0.533 and rm.n_branches == 4:
            frac = pops[0] / pops.sum()
            sparse = frac < 0.1 and pops[0] == pops.min()
            ok &= sparse
            parts.append(f"stripe 0 holds {frac:.1%} of the pairs")
    assert report(6, ok, "; ".join(parts))


def _flow_jerk(sys, s, h=1e-3, sub=20):
    """Second time derivative of the field along the flow by a five-point stencil."""
    def rk4(x, dt):
        k1 = sys.field(x)
        k2 = sys.field(x + dt / 2 * k1)
        k3 = sys.field(x + dt / 2 * k2)
        k4 = sys.field(x + dt * k3)
        return x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    f = {}
    for k in (-2, -1, 0, 1, 2):
        x = s.copy()
        for _ in range(abs(k) * sub):
            x = rk4(x, k * h / (abs(k) * sub))
        f[k] = sys.field(x)
    return (-f[2] + 16 * f[1] - 30 * f[0] + 16 * f[-1] - f[-2]) / (12 * h * h)


def test_criterion_7_derivative_and_decomposition_properties():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    states = rng.uniform(-3, 3, (10_000, 3))
    sys = MemristiveSystem(0.98)
    b, _, phi, phi_c, phi_t = _pieces(sys, states)

    scale = np.maximum(1.0, np.maximum(np.abs(phi), np.abs(phi_c) + np.abs(phi_t)))
    decomp = float(np.max(np.abs(phi - (phi_c + phi_t)) / scale))

    jerk = _flow_jerk(sys, states)
    jerr = float(np.max(np.abs(jerk - b.v3).max(axis=1) / (1 + np.abs(b.v3).max(axis=1))))

    base = along(sys, states)
    inv = 0.0
    for lam in (0.5, 2.0, 10.0):
        sc = along(ScaledSystem(sys, lam), states)
        for key in ("kappa1", "kappa2"):
            m = np.isfinite(base[key])
            inv = max(inv, float(np.max(np.abs(sc[key][m] - base[key][m])
                                        / np.maximum(1e-300, np.abs(base[key][m])))))

    affine = AffineSystem(rng.normal(size=(3, 3)), rng.normal(size=3))
    zero_t = float(np.max(np.abs(_pieces(affine, states)[4])))
    dt = time.perf_counter() - t0

    ok = decomp <= 1e-9 and jerr <= 1e-5 and inv <= 1e-9 and zero_t == 0.0 and dt < 10
    assert report(7, ok, f"10^4 states: phi split {decomp:.1e} (<=1e-9), jerk vs finite "
                         f"differences {jerr:.1e} (<=1e-5), curvature/torsion scaling {inv:.1e}, "
                         f"max |phi_t| constant Jacobian {zero_t:g}; {dt:.1f} s")


def test_criterion_8_phi_t_sign_changes_near_fixed_point():
    sys = MemristiveSystem(0.533)
    tr = integrate(sys, (0.1, 0, 0), IntegratorConfig(max_time=3000.0))
    y = tr.states[:, 1]
    revolutions = int(np.count_nonzero((y[:-1] > 0) & (y[1:] <= 0)))
    changes = sign_changes_near(along(sys, tr.states)["phi_t"], tr.states, radius=1.0)
    rate = 100.0 * changes / max(revolutions, 1)
    ok = revolutions >= 100 and rate >= 1.0
    assert report(8, ok, f"{changes} sign changes of phi_t inside |s|<1 over {revolutions} "
                         f"revolutions ({rate:.0f} per 100, need >= 1)")


def test_supplementary_period_two_link_just_above_saddle_node(orbits_0985):
    """(2) exists from alpha ~ 0.9828; there the counted value of criterion 2 is checked."""
    two, twelve = by_name(orbits_0985, "2"), by_name(orbits_0985, "12")
    lc = count_linking(two, twelve)
    line = (f"supplementary: alpha=0.985 Lk((2),(21))={lc.lk} via {lc.n_negative}/"
            f"{lc.n_crossings} negative crossings")
    ACCEPTANCE.append(line)
    print(line)
    assert lc.lk == -2 and lc.n_crossings == 4 and lc.n_negative == 4
