# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Dormand-Prince 5(4) integrators for the mean-value and covariance ODEs.

Layout of the parameter vector ``p`` (shared with the pure-Python fallback):

    0 omega_m, 1 gamma_m, 2 kappa, 3 detuning, 4 g0, 5 drive,
    6 epsilon, 7 omega1, 8 eta, 9 omega2, 10 phi,
    11 momentum noise (gamma_m * coth), 12 cavity noise (kappa), 13 coupling scale

Mean state: (Q, P, Re A, Im A). Covariance state: the 10 upper-triangle
entries of C in row-major order.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, fabs, sqrt, fmod, pow, floor, isfinite

cnp.import_array()

cdef enum:
    NPAR = 14
    MAXDIM = 14

cdef struct Ctx:
    double p[NPAR]
    double* coef        # spline coefficients, shape (4, n, 4) C-contiguous
    int ncoef
    double tau
    double hs

ctypedef void (*rhs_t)(double t, const double* y, double* dy, Ctx* ctx) noexcept nogil

cdef int UT_I[10]
cdef int UT_J[10]
UT_I[:] = [0, 0, 0, 0, 1, 1, 1, 2, 2, 3]
UT_J[:] = [0, 1, 2, 3, 1, 2, 3, 2, 3, 3]


cdef inline void mean_rhs_c(double t, const double* y, double* dy, Ctx* ctx) noexcept nogil:
    cdef double* p = ctx.p
    cdef double q = y[0], pm = y[1], ar = y[2], ai = y[3]
    cdef double det = p[3] - p[4] * q
    dy[0] = p[0] * pm
    dy[1] = -p[0] * (1.0 + p[6] * cos(p[7] * t)) * q - p[1] * pm + p[4] * (ar * ar + ai * ai)
    dy[2] = -p[2] * ar + det * ai + p[5] * (1.0 + p[8] * cos(p[9] * t + p[10]))
    dy[3] = -p[2] * ai - det * ar


cdef inline void cov_core(double t, const double* m, const double* c, double* dc, Ctx* ctx) noexcept nogil:
    cdef double* p = ctx.p
    cdef double S[4][4]
    cdef double C[4][4]
    cdef double M[4][4]
    cdef int i, j, k
    cdef double r = p[13] * p[4]
    cdef double det = p[3] - p[4] * m[0]
    S[0][0] = 0.0; S[0][1] = p[0]; S[0][2] = 0.0; S[0][3] = 0.0
    S[1][0] = -p[0] * (1.0 + p[6] * cos(p[7] * t)); S[1][1] = -p[1]
    S[1][2] = r * m[2]; S[1][3] = r * m[3]
    S[2][0] = -r * m[3]; S[2][1] = 0.0; S[2][2] = -p[2]; S[2][3] = det
    S[3][0] = r * m[2]; S[3][1] = 0.0; S[3][2] = -det; S[3][3] = -p[2]
    for k in range(10):
        C[UT_I[k]][UT_J[k]] = c[k]
        C[UT_J[k]][UT_I[k]] = c[k]
    for i in range(4):
        for j in range(4):
            M[i][j] = S[i][0] * C[0][j] + S[i][1] * C[1][j] + S[i][2] * C[2][j] + S[i][3] * C[3][j]
    for k in range(10):
        i = UT_I[k]; j = UT_J[k]
        dc[k] = M[i][j] + M[j][i]
    dc[4] += p[11]
    dc[7] += p[12]
    dc[9] += p[12]


cdef inline void spline_eval(double t, Ctx* ctx, double* m) noexcept nogil:
    cdef double ph = fmod(t, ctx.tau)
    if ph < 0:
        ph += ctx.tau
    cdef int n = ctx.ncoef
    cdef int i = <int>floor(ph / ctx.hs)
    if i >= n:
        i = n - 1
    if i < 0:
        i = 0
    cdef double dx = ph - i * ctx.hs
    cdef int comp
    cdef double* c = ctx.coef
    cdef int stride = n * 4
    for comp in range(4):
        m[comp] = ((c[i * 4 + comp] * dx + c[stride + i * 4 + comp]) * dx
                   + c[2 * stride + i * 4 + comp]) * dx + c[3 * stride + i * 4 + comp]


cdef void cov_spline_rhs(double t, const double* y, double* dy, Ctx* ctx) noexcept nogil:
    cdef double m[4]
    spline_eval(t, ctx, m)
    cov_core(t, m, y, dy, ctx)


cdef void joint_rhs(double t, const double* y, double* dy, Ctx* ctx) noexcept nogil:
    mean_rhs_c(t, y, dy, ctx)
    cov_core(t, y, y + 4, dy + 4, ctx)


cdef void mean_rhs_ptr(double t, const double* y, double* dy, Ctx* ctx) noexcept nogil:
    mean_rhs_c(t, y, dy, ctx)


# Dormand-Prince 5(4) tableau
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0
cdef double A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0
cdef double A42 = -56.0 / 15.0
cdef double A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0
cdef double A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0
cdef double A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0
cdef double A62 = -355.0 / 33.0
cdef double A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0
cdef double A65 = -5103.0 / 18656.0
cdef double B1 = 35.0 / 384.0
cdef double B3 = 500.0 / 1113.0
cdef double B4 = 125.0 / 192.0
cdef double B5 = -2187.0 / 6784.0
cdef double B6 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0
cdef double E3 = -71.0 / 16695.0
cdef double E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0
cdef double E6 = 22.0 / 525.0
cdef double E7 = -1.0 / 40.0


cdef int dopri_segment(rhs_t f, Ctx* ctx, int n, double* y, double t0, double t1,
                       int nout, double* out, double rtol, const double* atol,
                       double* h_io, long* nsteps_io, double guard,
                       long max_steps) noexcept nogil:
    """Integrate from t0 to t1, writing the state at nout equally spaced times.

    Returns 0 on success, 1 when the overflow guard is exceeded, 2 on step
    size underflow, 3 when more than max_steps steps (accepted or not) are needed.
    """
    cdef double k1[MAXDIM]
    cdef double k2[MAXDIM]
    cdef double k3[MAXDIM]
    cdef double k4[MAXDIM]
    cdef double k5[MAXDIM]
    cdef double k6[MAXDIM]
    cdef double k7[MAXDIM]
    cdef double ytmp[MAXDIM]
    cdef double ynew[MAXDIM]
    cdef double t = t0
    cdef double h = h_io[0]
    cdef double dt_out = (t1 - t0) / nout
    cdef int iout = 0
    cdef double t_target = t0 + dt_out
    cdef double hstep, err, sc, e, fac, a, b
    cdef int i
    cdef bint last
    cdef long attempts = 0
    f(t, y, k1, ctx)
    while iout < nout:
        last = False
        hstep = h
        if t + hstep >= t_target - 1e-12 * fabs(t_target):
            hstep = t_target - t
            last = True
        if hstep <= 1e-15 * (fabs(t) + 1e-300):
            return 2
        attempts += 1
        if attempts > max_steps:
            h_io[0] = h
            return 3
        for i in range(n):
            ytmp[i] = y[i] + hstep * A21 * k1[i]
        f(t + hstep / 5.0, ytmp, k2, ctx)
        for i in range(n):
            ytmp[i] = y[i] + hstep * (A31 * k1[i] + A32 * k2[i])
        f(t + 0.3 * hstep, ytmp, k3, ctx)
        for i in range(n):
            ytmp[i] = y[i] + hstep * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
        f(t + 0.8 * hstep, ytmp, k4, ctx)
        for i in range(n):
            ytmp[i] = y[i] + hstep * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        f(t + hstep * 8.0 / 9.0, ytmp, k5, ctx)
        for i in range(n):
            ytmp[i] = y[i] + hstep * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i]
                                      + A64 * k4[i] + A65 * k5[i])
        f(t + hstep, ytmp, k6, ctx)
        for i in range(n):
            ynew[i] = y[i] + hstep * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i]
                                      + B5 * k5[i] + B6 * k6[i])
        f(t + hstep, ynew, k7, ctx)
        err = 0.0
        for i in range(n):
            a = fabs(y[i])
            b = fabs(ynew[i])
            sc = atol[i] + rtol * (a if a > b else b)
            e = hstep * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i]
                         + E6 * k6[i] + E7 * k7[i]) / sc
            err += e * e
        err = sqrt(err / n)
        if not isfinite(err):
            err = 1e10
        if err <= 1.0:
            t = t_target if last else t + hstep
            for i in range(n):
                y[i] = ynew[i]
                k1[i] = k7[i]
                if not (fabs(y[i]) < guard):
                    return 1
            nsteps_io[0] += 1
            if err == 0.0:
                fac = 5.0
            else:
                fac = 0.9 * pow(err, -0.2)
                if fac > 5.0:
                    fac = 5.0
                if fac < 0.2:
                    fac = 0.2
            if not last or fac < 1.0 or hstep * fac > h:
                h = hstep * fac
            if last:
                for i in range(n):
                    out[iout * n + i] = y[i]
                iout += 1
                t_target = t0 + (iout + 1) * dt_out
        else:
            fac = 0.9 * pow(err, -0.2)
            if fac < 0.2:
                fac = 0.2
            h = hstep * fac
    h_io[0] = h
    return 0


cdef void fill_ctx(Ctx* ctx, double[::1] p):
    cdef int i
    for i in range(NPAR):
        ctx.p[i] = p[i]
    ctx.coef = NULL
    ctx.ncoef = 0
    ctx.tau = 1.0
    ctx.hs = 1.0


def _run(int kind, y0, double t0, double t1, int nout, p, double rtol, atol,
         double h0, double guard, long max_steps, coef=None, double tau=0.0):
    cdef Ctx ctx
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    fill_ctx(&ctx, pv)
    cdef double[::1] y = np.array(y0, dtype=np.float64)
    cdef double[::1] at = np.ascontiguousarray(atol, dtype=np.float64)
    cdef int n = y.shape[0]
    out_arr = np.empty((nout, n), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double[:, :, ::1] cf
    cdef rhs_t f
    if kind == 0:
        f = mean_rhs_ptr
    elif kind == 1:
        cf = np.ascontiguousarray(coef, dtype=np.float64)
        ctx.coef = &cf[0, 0, 0]
        ctx.ncoef = cf.shape[1]
        ctx.tau = tau
        ctx.hs = tau / cf.shape[1]
        f = cov_spline_rhs
    else:
        f = joint_rhs
    cdef double h = h0
    cdef long nsteps = 0
    cdef int status
    with nogil:
        status = dopri_segment(f, &ctx, n, &y[0], t0, t1, nout, &out[0, 0], rtol,
                               &at[0], &h, &nsteps, guard, max_steps)
    return out_arr, h, nsteps, status


def mean_segment(y0, double t0, double t1, int nout, p, double rtol, atol,
                 double h0, double guard=1e15, long max_steps=10_000_000):
    """Integrate the mean-value equations; see module docstring for ``p``."""
    return _run(0, y0, t0, t1, nout, p, rtol, atol, h0, guard, max_steps)


def cov_segment(c0, double t0, double t1, int nout, p, coef, double tau, double rtol,
                atol, double h0, double guard=1e15, long max_steps=10_000_000):
    """Integrate the covariance equation with the mean orbit given as a periodic spline."""
    return _run(1, c0, t0, t1, nout, p, rtol, atol, h0, guard, max_steps, coef, tau)


def joint_segment(y0, double t0, double t1, int nout, p, double rtol, atol,
                  double h0, double guard=1e15, long max_steps=10_000_000):
    """Integrate mean values and covariance together (14 components)."""
    return _run(2, y0, t0, t1, nout, p, rtol, atol, h0, guard, max_steps)


def mean_rhs(double t, y, p):
    cdef Ctx ctx
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    fill_ctx(&ctx, pv)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    out = np.empty(4)
    cdef double[::1] o = out
    mean_rhs_c(t, &yv[0], &o[0], &ctx)
    return out


def cov_rhs(double t, mean, c, p):
    cdef Ctx ctx
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    fill_ctx(&ctx, pv)
    cdef double[::1] mv = np.ascontiguousarray(mean, dtype=np.float64)
    cdef double[::1] cv = np.ascontiguousarray(c, dtype=np.float64)
    out = np.empty(10)
    cdef double[::1] o = out
    cov_core(t, &mv[0], &cv[0], &o[0], &ctx)
    return out
