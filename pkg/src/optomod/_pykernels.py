"""Pure-Python fallback for the compiled integrators in ``_kernels.pyx``.

Same algorithm, same parameter layout, same return values; only slower.
"""
import math

import numpy as np

UT_I = np.array([0, 0, 0, 0, 1, 1, 1, 2, 2, 3])
UT_J = np.array([0, 1, 2, 3, 1, 2, 3, 2, 3, 3])

A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)


def mean_rhs(t, y, p):
    q, pm, ar, ai = y[0], y[1], y[2], y[3]
    det = p[3] - p[4] * q
    return np.array([
        p[0] * pm,
        -p[0] * (1.0 + p[6] * math.cos(p[7] * t)) * q - p[1] * pm + p[4] * (ar * ar + ai * ai),
        -p[2] * ar + det * ai + p[5] * (1.0 + p[8] * math.cos(p[9] * t + p[10])),
        -p[2] * ai - det * ar,
    ])


def _drift(t, m, p):
    r = p[13] * p[4]
    det = p[3] - p[4] * m[0]
    return np.array([
        [0.0, p[0], 0.0, 0.0],
        [-p[0] * (1.0 + p[6] * math.cos(p[7] * t)), -p[1], r * m[2], r * m[3]],
        [-r * m[3], 0.0, -p[2], det],
        [r * m[2], 0.0, -det, -p[2]],
    ])


def cov_rhs(t, mean, c, p):
    C = np.empty((4, 4))
    C[UT_I, UT_J] = c
    C[UT_J, UT_I] = c
    M = _drift(t, mean, p) @ C
    dc = M[UT_I, UT_J] + M[UT_J, UT_I]
    dc[4] += p[11]
    dc[7] += p[12]
    dc[9] += p[12]
    return dc


def _spline_eval(t, coef, tau):
    n = coef.shape[1]
    hs = tau / n
    ph = math.fmod(t, tau)
    if ph < 0:
        ph += tau
    i = min(max(int(math.floor(ph / hs)), 0), n - 1)
    dx = ph - i * hs
    c = coef[:, i, :]
    return ((c[0] * dx + c[1]) * dx + c[2]) * dx + c[3]


def _dopri(f, y0, t0, t1, nout, rtol, atol, h0, guard, max_steps):
    y = np.array(y0, dtype=float)
    atol = np.asarray(atol, dtype=float)
    n = y.size
    out = np.empty((nout, n))
    t = t0
    h = h0
    dt_out = (t1 - t0) / nout
    iout = 0
    t_target = t0 + dt_out
    nsteps = 0
    attempts = 0
    k1 = f(t, y)
    while iout < nout:
        last = False
        hstep = h
        if t + hstep >= t_target - 1e-12 * abs(t_target):
            hstep = t_target - t
            last = True
        if hstep <= 1e-15 * (abs(t) + 1e-300):
            return out, h, nsteps, 2
        attempts += 1
        if attempts > max_steps:
            return out, h, nsteps, 3
        k2 = f(t + hstep / 5.0, y + hstep * A21 * k1)
        k3 = f(t + 0.3 * hstep, y + hstep * (A31 * k1 + A32 * k2))
        k4 = f(t + 0.8 * hstep, y + hstep * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = f(t + hstep * 8.0 / 9.0, y + hstep * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = f(t + hstep, y + hstep * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        ynew = y + hstep * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        k7 = f(t + hstep, ynew)
        sc = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
        e = hstep * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7) / sc
        err = math.sqrt(float(np.dot(e, e)) / n)
        if not math.isfinite(err):
            err = 1e10
        if err <= 1.0:
            t = t_target if last else t + hstep
            y = ynew
            k1 = k7
            if not np.all(np.abs(y) < guard):
                return out, h, nsteps, 1
            nsteps += 1
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            if not last or fac < 1.0 or hstep * fac > h:
                h = hstep * fac
            if last:
                out[iout] = y
                iout += 1
                t_target = t0 + (iout + 1) * dt_out
        else:
            h = hstep * max(0.2, 0.9 * err ** -0.2)
    return out, h, nsteps, 0


def mean_segment(y0, t0, t1, nout, p, rtol, atol, h0, guard=1e15, max_steps=10_000_000):
    p = np.asarray(p, dtype=float)
    return _dopri(lambda t, y: mean_rhs(t, y, p), y0, t0, t1, nout, rtol, atol, h0, guard,
                  max_steps)


def cov_segment(c0, t0, t1, nout, p, coef, tau, rtol, atol, h0, guard=1e15, max_steps=10_000_000):
    p = np.asarray(p, dtype=float)
    coef = np.asarray(coef, dtype=float)
    return _dopri(lambda t, c: cov_rhs(t, _spline_eval(t, coef, tau), c, p),
                  c0, t0, t1, nout, rtol, atol, h0, guard, max_steps)


def joint_segment(y0, t0, t1, nout, p, rtol, atol, h0, guard=1e15, max_steps=10_000_000):
    p = np.asarray(p, dtype=float)

    def f(t, y):
        return np.concatenate([mean_rhs(t, y[:4], p), cov_rhs(t, y[:4], y[4:], p)])

    return _dopri(f, y0, t0, t1, nout, rtol, atol, h0, guard, max_steps)
