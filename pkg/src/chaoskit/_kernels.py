"""Compiled Dormand-Prince 5(4) kernels with dense output and plane events.

Fields are identified by an integer ``kind`` plus a parameter vector whose
first entry is a global time scale (see ``SystemDef.kernel_spec``).
All kernels release the GIL so sweeps can run on a thread pool.
"""
import numpy as np
from numba import njit

# status codes returned by the drivers
OK = 0
DIVERGED = 1
STEP_UNDERFLOW = 2
TIME_EXHAUSTED = 3
TANGENTIAL = 4

# Dormand-Prince coefficients
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0,
)
A71, A73, A74, A75, A76 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0,
)
D1 = -12715105075.0 / 11282082432.0
D3 = 87487479700.0 / 32700410799.0
D4 = -10690763975.0 / 1880347072.0
D5 = 701980252875.0 / 199316789632.0
D6 = -1453857185.0 / 822651844.0
D7 = 69997945.0 / 29380423.0


@njit(cache=True, nogil=True)
def rhs(kind, p, s, out):
    lam = p[0]
    if kind == 0:
        x, y, z = s[0], s[1], s[2]
        a, sg = p[1], p[2]
        out[0] = lam * y
        out[1] = lam * (-x / 3.0 + 0.5 * y - 0.5 * y * z * z)
        out[2] = lam * (sg * y - a * z - sg * y * z)
    else:
        for i in range(3):
            acc = p[10 + i]
            for j in range(3):
                acc += p[1 + 3 * i + j] * s[j]
            out[i] = lam * acc


@njit(cache=True, nogil=True)
def _step(kind, p, s, k1, h, ks, tmp, snew):
    """One DP5 stage sweep. ks[0] must hold k1 on entry; fills ks[1..6] and snew."""
    for i in range(3):
        tmp[i] = s[i] + h * A21 * k1[i]
    rhs(kind, p, tmp, ks[1])
    for i in range(3):
        tmp[i] = s[i] + h * (A31 * k1[i] + A32 * ks[1, i])
    rhs(kind, p, tmp, ks[2])
    for i in range(3):
        tmp[i] = s[i] + h * (A41 * k1[i] + A42 * ks[1, i] + A43 * ks[2, i])
    rhs(kind, p, tmp, ks[3])
    for i in range(3):
        tmp[i] = s[i] + h * (A51 * k1[i] + A52 * ks[1, i] + A53 * ks[2, i] + A54 * ks[3, i])
    rhs(kind, p, tmp, ks[4])
    for i in range(3):
        tmp[i] = s[i] + h * (
            A61 * k1[i] + A62 * ks[1, i] + A63 * ks[2, i] + A64 * ks[3, i] + A65 * ks[4, i]
        )
    rhs(kind, p, tmp, ks[5])
    for i in range(3):
        snew[i] = s[i] + h * (
            A71 * k1[i] + A73 * ks[2, i] + A74 * ks[3, i] + A75 * ks[4, i] + A76 * ks[5, i]
        )
    rhs(kind, p, snew, ks[6])


@njit(cache=True, nogil=True)
def _error_norm(s, snew, k1, ks, h, rtol, atol):
    acc = 0.0
    for i in range(3):
        e = h * (E1 * k1[i] + E3 * ks[2, i] + E4 * ks[3, i] + E5 * ks[4, i] + E6 * ks[5, i] + E7 * ks[6, i])
        sc = atol + rtol * max(abs(s[i]), abs(snew[i]))
        acc += (e / sc) ** 2
    return np.sqrt(acc / 3.0)


@njit(cache=True, nogil=True)
def _dense_coeffs(s, snew, k1, ks, h, rc):
    for i in range(3):
        ydiff = snew[i] - s[i]
        bspl = h * k1[i] - ydiff
        rc[0, i] = s[i]
        rc[1, i] = ydiff
        rc[2, i] = bspl
        rc[3, i] = ydiff - h * ks[6, i] - bspl
        rc[4, i] = h * (D1 * k1[i] + D3 * ks[2, i] + D4 * ks[3, i] + D5 * ks[4, i] + D6 * ks[5, i] + D7 * ks[6, i])


@njit(cache=True, nogil=True)
def _dense_eval(rc, theta, out):
    th1 = 1.0 - theta
    for i in range(3):
        out[i] = rc[0, i] + theta * (rc[1, i] + th1 * (rc[2, i] + theta * (rc[3, i] + th1 * rc[4, i])))


@njit(cache=True, nogil=True)
def _norm(s):
    return np.sqrt(s[0] * s[0] + s[1] * s[1] + s[2] * s[2])


@njit(cache=True, nogil=True)
def _advance(kind, p, t, s, k1, h, adaptive, rtol, atol, ks, tmp, snew):
    """Take one accepted step from (t, s). Returns (h_used, h_next, ok)."""
    while True:
        ks[0, :] = k1
        _step(kind, p, s, k1, h, ks, tmp, snew)
        if not adaptive:
            return h, h, True
        err = _error_norm(s, snew, k1, ks, h, rtol, atol)
        if err <= 1.0:
            fac = 10.0 if err == 0.0 else min(10.0, max(0.2, 0.9 * err ** -0.2))
            return h, h * fac, True
        h = h * max(0.2, 0.9 * err ** -0.2)
        if abs(h) < 1e-12 * max(1.0, abs(t)):
            return h, h, False


@njit(cache=True, nogil=True)
def run_transient(kind, p, s0, duration, h0, adaptive, rtol, atol, divr):
    """Integrate for ``duration``; returns (state, status, t_fail, h_next)."""
    s = s0.copy()
    k1 = np.empty(3)
    ks = np.empty((7, 3))
    tmp = np.empty(3)
    snew = np.empty(3)
    rhs(kind, p, s, k1)
    t = 0.0
    h = h0
    while t < duration:
        h_try = min(h, duration - t)
        last = h_try < h
        h_used, h_next, ok = _advance(kind, p, t, s, k1, h_try, adaptive, rtol, atol, ks, tmp, snew)
        if not ok:
            return s, STEP_UNDERFLOW, t, h
        t = duration if (last and h_used == h_try) else t + h_used
        s[:] = snew
        k1[:] = ks[6]
        if _norm(s) > divr:
            return s, DIVERGED, t, h
        if not (last and h_used == h_try):
            h = h_next
    return s, OK, t, h


@njit(cache=True, nogil=True)
def run_sampled(kind, p, s0, n_samples, dt, h0, adaptive, rtol, atol, divr):
    """Sample the solution from s0 at times k*dt, k = 0..n_samples-1, via dense output."""
    out = np.empty((n_samples, 3))
    out[0, :] = s0
    s = s0.copy()
    k1 = np.empty(3)
    ks = np.empty((7, 3))
    tmp = np.empty(3)
    snew = np.empty(3)
    rc = np.empty((5, 3))
    rhs(kind, p, s, k1)
    t = 0.0
    h = h0
    nxt = 1
    t_end = (n_samples - 1) * dt
    while nxt < n_samples:
        h_used, h_next, ok = _advance(kind, p, t, s, k1, h, adaptive, rtol, atol, ks, tmp, snew)
        if not ok:
            return out[:nxt], STEP_UNDERFLOW, t
        t_new = t + h_used
        _dense_coeffs(s, snew, k1, ks, h_used, rc)
        while nxt < n_samples and nxt * dt <= t_new:
            _dense_eval(rc, (nxt * dt - t) / h_used, out[nxt])
            nxt += 1
        if _norm(snew) > divr:
            return out[:nxt], DIVERGED, t_new
        t = t_new
        s[:] = snew
        k1[:] = ks[6]
        h = h_next
        if not adaptive and t > t_end + h:
            break
    return out, OK, t


@njit(cache=True, nogil=True)
def _locate(rc, axis, value, h, g0, g1, tol, tmp):
    """Root of the interpolated coordinate on [0, 1] by Illinois regula falsi."""
    a, b = 0.0, 1.0
    ga, gb = g0, g1
    side = 0
    th = 0.0
    g = 0.0
    for _ in range(200):
        th = (a * gb - b * ga) / (gb - ga)
        if not (a < th < b):
            th = 0.5 * (a + b)
        _dense_eval(rc, th, tmp)
        g = tmp[axis] - value
        if abs(g) < tol or (b - a) * abs(h) < 1e-15:
            break
        if (g > 0.0) == (ga > 0.0):
            a, ga = th, g
            if side == -1:
                gb *= 0.5
            side = -1
        else:
            b, gb = th, g
            if side == 1:
                ga *= 0.5
            side = 1
    return th, g


@njit(cache=True, nogil=True)
def run_crossings(kind, p, s0, n_cross, t_max, h0, adaptive, rtol, atol, divr,
                  axis, value, direction, tol, skip_first):
    """Collect ``n_cross`` crossings of the plane s[axis] = value.

    direction < 0 keeps downward crossings, > 0 upward, 0 both. Returns
    (times, states, count, status, t_end, final_state, h_next); states are
    refined on the dense interpolant to |s[axis] - value| < tol.
    When ``skip_first`` is set, a crossing at t = 0 is never reported.
    """
    times = np.empty(n_cross)
    states = np.empty((n_cross, 3))
    s = s0.copy()
    k1 = np.empty(3)
    ks = np.empty((7, 3))
    tmp = np.empty(3)
    snew = np.empty(3)
    rc = np.empty((5, 3))
    fv = np.empty(3)
    rhs(kind, p, s, k1)
    t = 0.0
    h = h0
    count = 0
    while count < n_cross:
        if t >= t_max:
            return times, states, count, TIME_EXHAUSTED, t, s, h
        h_used, h_next, ok = _advance(kind, p, t, s, k1, h, adaptive, rtol, atol, ks, tmp, snew)
        if not ok:
            return times, states, count, STEP_UNDERFLOW, t, s, h
        g0 = s[axis] - value
        g1 = snew[axis] - value
        hit = False
        if direction < 0:
            hit = g0 > 0.0 and g1 <= 0.0
        elif direction > 0:
            hit = g0 < 0.0 and g1 >= 0.0
        else:
            hit = (g0 > 0.0 and g1 <= 0.0) or (g0 < 0.0 and g1 >= 0.0)
        if skip_first and t == 0.0 and g0 == 0.0:
            hit = False
        if hit:
            _dense_coeffs(s, snew, k1, ks, h_used, rc)
            th, g = _locate(rc, axis, value, h_used, g0, g1, tol, tmp)
            rhs(kind, p, tmp, fv)
            if abs(fv[axis]) < 1e-8:
                states[count, :] = tmp
                times[count] = t + th * h_used
                return times, states, count, TANGENTIAL, t, s, h
            states[count, :] = tmp
            times[count] = t + th * h_used
            count += 1
        t = t + h_used
        s[:] = snew
        k1[:] = ks[6]
        if _norm(s) > divr:
            return times, states, count, DIVERGED, t, s, h
        h = h_next
    return times, states, count, OK, t, s, h
