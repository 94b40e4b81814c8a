"""Order-by-order harmonic balance for the modulated system and the single
parametric oscillator that motivates it.

Every quantity at order j is a truncated Fourier series in the modulation
frequency, stored as cosine and sine coefficient arrays of shape
``(K + 1, ...)`` (index 0 holds the constant, the sine entry is unused).
Order j is homogeneous of degree j in (epsilon, eta) and contains harmonics
up to j.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .classical import COMPONENTS, COUPLING_SCALE, fixed_point_unmodulated
from .covariance import UT_I, UT_J, drift_at, lyapunov_steady, noise_matrix, pack, unpack
from .errors import InvalidParameterError, SingularityError, ThresholdError
from .params import DerivedParams, ModulationSpec, SystemParams
from .series import HarmonicSeries

MAX_ORDER = 6
COND_WARN = 1e10


# ------------------------------------------------------------ trig algebra

def _zeros(k, shape=()):
    return np.zeros((k + 1,) + tuple(shape)), np.zeros((k + 1,) + tuple(shape))


def trig_product(a, b, k_max, mul=np.multiply):
    """Product of two cos/sin series, truncated at harmonic ``k_max``.

    ``mul`` combines coefficients (elementwise by default, ``np.matmul`` for
    matrix-valued series).
    """
    ac, as_ = a
    bc, bs = b
    shape = np.shape(mul(ac[0], bc[0]))
    oc, os_ = _zeros(k_max, shape)
    for m in range(ac.shape[0]):
        for n in range(bc.shape[0]):
            cc = mul(ac[m], bc[n])
            ss = mul(as_[m], bs[n])
            cs = mul(ac[m], bs[n])
            sc = mul(as_[m], bc[n])
            hi, lo = m + n, abs(m - n)
            sgn = 1.0 if m >= n else -1.0
            if hi <= k_max:
                oc[hi] += 0.5 * (cc - ss)
                os_[hi] += 0.5 * (cs + sc)
            if lo <= k_max:
                oc[lo] += 0.5 * (cc + ss)
                # sin((m - n) t) terms; at m == n they vanish
                os_[lo] += 0.5 * sgn * (sc - cs)
    os_[0] = 0.0
    return oc, os_


def _cos_wave(k_max, amp=1.0, phase=0.0):
    """amp * cos(t + phase) as a series."""
    c, s = _zeros(k_max)
    if k_max >= 1:
        c[1] = amp * math.cos(phase)
        s[1] = -amp * math.sin(phase)
    return c, s


def _scalar_times(series, v):
    """Multiply a scalar series by a fixed vector/matrix coefficient."""
    c, s = series
    return np.multiply.outer(c, v), np.multiply.outer(s, v)


def solve_harmonics(op, forcing, omega, what):
    """Solve d/dt x = op x + forcing harmonic by harmonic.

    Constant part: op x0 = -f0. Harmonic k: [[op, -k w], [k w, op]] [a; b] = -[fa; fb].
    """
    fc, fs = forcing
    k_max = fc.shape[0] - 1
    n = op.shape[0]
    xc, xs = np.zeros_like(fc), np.zeros_like(fs)
    eye = np.eye(n)
    for k in range(k_max + 1):
        if k == 0:
            m, rhs = op, -fc[0]
        else:
            m = np.block([[op, -k * omega * eye], [k * omega * eye, op]])
            rhs = -np.concatenate([fc[k], fs[k]])
        if not np.any(rhs):
            continue
        cond = np.linalg.cond(m)
        if not np.isfinite(cond) or cond > 1e15:
            raise SingularityError(f"{what}: singular system at harmonic {k} (cond {cond:.3g})")
        if cond > COND_WARN:
            warnings.warn(f"{what}: ill-conditioned system at harmonic {k} (cond {cond:.3g}); "
                          "close to an instability", RuntimeWarning, stacklevel=3)
        sol = np.linalg.solve(m, rhs)
        if k == 0:
            xc[0] = sol
        else:
            xc[k], xs[k] = sol[:n], sol[n:]
    return xc, xs


# ------------------------------------------------------------ classical orders

@dataclass(frozen=True)
class ClassicalOrders:
    """Per-order cos/sin coefficients of (Q, P, ReA, ImA); arrays (orders, K+1, 4)."""

    omega: float
    cos: np.ndarray
    sin: np.ndarray

    @property
    def max_order(self) -> int:
        return self.cos.shape[0] - 1

    def term(self, component: str, order: int) -> HarmonicSeries:
        i = COMPONENTS.index(component)
        return HarmonicSeries(self.omega, self.cos[order, 0, i], self.cos[order, 1:, i],
                              self.sin[order, 1:, i], order)

    def series(self, component: str, max_order: int | None = None) -> HarmonicSeries:
        top = self.max_order if max_order is None else max_order
        i = COMPONENTS.index(component)
        c = self.cos[:top + 1, :, i].sum(axis=0)
        s = self.sin[:top + 1, :, i].sum(axis=0)
        return HarmonicSeries(self.omega, c[0], c[1:], s[1:], top)


def _check_order(max_order):
    if not 0 <= max_order <= MAX_ORDER:
        raise InvalidParameterError(f"max_order must lie in [0, {MAX_ORDER}]")


def _mean_jacobian(x0, dp, sys):
    q, _, ar, ai = x0
    g = dp.g0
    return np.array([
        [0.0, sys.omega_m, 0.0, 0.0],
        [-sys.omega_m, -sys.gamma_m, 2.0 * g * ar, 2.0 * g * ai],
        [-g * ai, 0.0, -sys.kappa, sys.detuning - g * q],
        [g * ar, 0.0, -(sys.detuning - g * q), -sys.kappa],
    ])


def _modulation_omega(mod):
    om = mod.omega
    if om <= 0:
        return 1.0
    return om


def classical_orders(dp: DerivedParams, sys: SystemParams, mod: ModulationSpec,
                     max_order: int = 2) -> ClassicalOrders:
    _check_order(max_order)
    K = max_order
    om = _modulation_omega(mod)
    x0 = fixed_point_unmodulated(dp, sys).as_array()
    jac = _mean_jacobian(x0, dp, sys)
    g = dp.g0
    xc = np.zeros((K + 1, K + 1, 4))
    xs = np.zeros((K + 1, K + 1, 4))
    xc[0, 0] = x0
    cosw = _cos_wave(K)
    for j in range(1, K + 1):
        fc, fs = _zeros(K, (4,))
        prev = (xc[j - 1, :, 0], xs[j - 1, :, 0])
        pc, ps = trig_product(cosw, prev, K)
        fc[:, 1] -= sys.omega_m * mod.epsilon * pc
        fs[:, 1] -= sys.omega_m * mod.epsilon * ps
        if j == 1 and mod.eta:
            dc, ds = _cos_wave(K, dp.drive * mod.eta, mod.phi)
            fc[:, 2] += dc
            fs[:, 2] += ds
        for a in range(1, j):
            b = j - a
            xa = (xc[a], xs[a])
            xb = (xc[b], xs[b])
            comp = lambda s, i: (s[0][:, i], s[1][:, i])  # noqa: E731
            rr = trig_product(comp(xa, 2), comp(xb, 2), K)
            ii = trig_product(comp(xa, 3), comp(xb, 3), K)
            iq = trig_product(comp(xa, 3), comp(xb, 0), K)
            rq = trig_product(comp(xa, 2), comp(xb, 0), K)
            fc[:, 1] += g * (rr[0] + ii[0])
            fs[:, 1] += g * (rr[1] + ii[1])
            fc[:, 2] -= g * iq[0]
            fs[:, 2] -= g * iq[1]
            fc[:, 3] += g * rq[0]
            fs[:, 3] += g * rq[1]
        xc[j], xs[j] = solve_harmonics(jac, (fc, fs), om, f"classical order {j}")
    return ClassicalOrders(om, xc, xs)


# ------------------------------------------------------------ covariance orders

def lyapunov_operator(s0: np.ndarray) -> np.ndarray:
    """Matrix of C -> S0 C + C S0^T on the 10 upper-triangle entries."""
    op = np.empty((10, 10))
    for col in range(10):
        e = np.zeros(10)
        e[col] = 1.0
        c = unpack(e)
        m = s0 @ c
        op[:, col] = pack(m + m.T)
    return op


@dataclass(frozen=True)
class CovarianceOrders:
    """Per-order cos/sin coefficients of C; arrays (orders, K+1, 4, 4)."""

    omega: float
    cos: np.ndarray
    sin: np.ndarray

    @property
    def max_order(self) -> int:
        return self.cos.shape[0] - 1

    def _sum(self, max_order):
        top = self.max_order if max_order is None else max_order
        return self.cos[:top + 1].sum(axis=0), self.sin[:top + 1].sum(axis=0), top

    def entry(self, i: int, j: int, max_order: int | None = None) -> HarmonicSeries:
        """Series of C_ij (1-based indices)."""
        c, s, top = self._sum(max_order)
        return HarmonicSeries(self.omega, c[0, i - 1, j - 1], c[1:, i - 1, j - 1],
                              s[1:, i - 1, j - 1], top)

    def entry_term(self, i: int, j: int, order: int) -> HarmonicSeries:
        return HarmonicSeries(self.omega, self.cos[order, 0, i - 1, j - 1],
                              self.cos[order, 1:, i - 1, j - 1],
                              self.sin[order, 1:, i - 1, j - 1], order)

    def phonons(self, max_order: int | None = None) -> HarmonicSeries:
        s11 = self.entry(1, 1, max_order)
        s22 = self.entry(2, 2, max_order)
        tot = (s11 + s22).scaled(0.5)
        return HarmonicSeries(tot.omega, tot.a0 - 0.5, tot.cos, tot.sin, tot.order)

    def phonons_term(self, order: int) -> HarmonicSeries:
        tot = (self.entry_term(1, 1, order) + self.entry_term(2, 2, order)).scaled(0.5)
        a0 = tot.a0 - 0.5 if order == 0 else tot.a0
        return HarmonicSeries(tot.omega, a0, tot.cos, tot.sin, order)

    def matrices(self, t, max_order: int | None = None) -> np.ndarray:
        """Evaluate C(t) from the accumulated series, shape (len(t), 4, 4)."""
        c, s, _ = self._sum(max_order)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.broadcast_to(c[0], t.shape + (4, 4)).copy()
        for k in range(1, c.shape[0]):
            arg = k * self.omega * t
            out += np.cos(arg)[:, None, None] * c[k] + np.sin(arg)[:, None, None] * s[k]
        return out


def _drift_order(xj, dp, r, K):
    """Part of the drift linear in the order-j mean values.

    The explicit -omega_M epsilon cos(Omega t) term of order 1 is added by the caller.
    """
    xc, xs = xj
    g = dp.g0
    sc, ss = np.zeros((K + 1, 4, 4)), np.zeros((K + 1, 4, 4))
    for out, x in ((sc, xc), (ss, xs)):
        out[:, 1, 2] = r * g * x[:, 2]
        out[:, 1, 3] = r * g * x[:, 3]
        out[:, 2, 0] = -r * g * x[:, 3]
        out[:, 3, 0] = r * g * x[:, 2]
        out[:, 2, 3] = -g * x[:, 0]
        out[:, 3, 2] = g * x[:, 0]
    return sc, ss


def covariance_orders(dp: DerivedParams, sys: SystemParams, mod: ModulationSpec,
                      classical: ClassicalOrders | None = None, max_order: int = 2, *,
                      coupling: str = "quadrature") -> CovarianceOrders:
    _check_order(max_order)
    if classical is None or classical.max_order < max_order:
        classical = classical_orders(dp, sys, mod, max_order)
    K = max_order
    om = classical.omega
    r = COUPLING_SCALE[coupling]
    fp = fixed_point_unmodulated(dp, sys)
    s0 = drift_at(0.0, fp, dp, sys, ModulationSpec(), coupling)
    drifts = [None]
    for j in range(1, K + 1):
        xj = (classical.cos[j, :K + 1], classical.sin[j, :K + 1])
        sc, ss = _drift_order(xj, dp, r, K)
        if j == 1:
            sc[1, 1, 0] = -sys.omega_m * mod.epsilon
        drifts.append((sc, ss))
    cc = np.zeros((K + 1, K + 1, 4, 4))
    cs = np.zeros((K + 1, K + 1, 4, 4))
    cc[0, 0] = lyapunov_steady(s0, noise_matrix(dp, sys))
    op = lyapunov_operator(s0)
    for j in range(1, K + 1):
        fc, fs = np.zeros((K + 1, 4, 4)), np.zeros((K + 1, 4, 4))
        for a in range(1, j + 1):
            pc, ps = trig_product(drifts[a], (cc[j - a], cs[j - a]), K, np.matmul)
            fc += pc + np.swapaxes(pc, -1, -2)
            fs += ps + np.swapaxes(ps, -1, -2)
        vc, vs = solve_harmonics(op, (pack(fc), pack(fs)), om, f"covariance order {j}")
        cc[j], cs[j] = unpack(vc), unpack(vs)
    return CovarianceOrders(om, cc, cs)


# ------------------------------------------------------------ phase dependence

@dataclass(frozen=True)
class PhaseFit:
    """``mean + amplitude * cos(phi + phase)`` fitted to samples over phi."""

    mean: float
    amplitude: float
    phase: float
    residual: float

    @property
    def cos_coef(self) -> float:
        return self.amplitude * math.cos(self.phase)

    @property
    def sin_coef(self) -> float:
        return -self.amplitude * math.sin(self.phase)


def phase_decomposition(phis, values) -> PhaseFit:
    """Least-squares fit of values(phi) to A + B cos(phi + phi0)."""
    phis = np.asarray(phis, dtype=float)
    values = np.asarray(values, dtype=float)
    if phis.size < 3 or phis.shape != values.shape:
        raise InvalidParameterError("phase_decomposition needs at least 3 (phi, value) samples")
    design = np.column_stack([np.ones_like(phis), np.cos(phis), np.sin(phis)])
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    a, c, s = coef
    amp = math.hypot(c, s)
    phase = math.atan2(-s, c) if amp > 0 else 0.0
    res = float(np.sqrt(np.mean((design @ coef - values) ** 2)))
    return PhaseFit(float(a), amp, phase, res)


def constant_part_vs_phase(dp, sys, epsilon, eta, omega, phis, quantity, max_order=2):
    """Time-averaged part of ``quantity(classical, covariance)`` for each phi."""
    out = []
    for phi in phis:
        mod = ModulationSpec.double(epsilon, eta, omega, phi)
        cl = classical_orders(dp, sys, mod, max_order)
        cv = covariance_orders(dp, sys, mod, cl, max_order)
        out.append(quantity(cl, cv))
    return np.array(out)


# ------------------------------------------------------------ toy oscillator

@dataclass(frozen=True)
class ToyOscillator:
    """x'' = -omega0^2 [1 + alpha cos(nu t)] x - gamma x' + force."""

    omega0: float
    gamma: float
    alpha: float
    nu: float
    force: float

    def __post_init__(self):
        if not (self.omega0 > 0 and self.gamma > 0):
            raise InvalidParameterError("omega0 and gamma must be positive")
        if self.alpha < 0:
            raise InvalidParameterError("alpha must be >= 0")
        if self.nu < 0:
            raise InvalidParameterError("nu must be >= 0")

    @property
    def threshold(self) -> float:
        return 2.0 * self.gamma / self.omega0


def toy_response(osc: ToyOscillator) -> float:
    w2 = osc.omega0 ** 2
    return 1.0 / math.sqrt((w2 - osc.nu ** 2) ** 2 + (osc.gamma * osc.nu) ** 2)


def toy_first_order_orbit(osc: ToyOscillator) -> HarmonicSeries:
    """F/omega0^2 plus the order-alpha response to the effective drive -alpha F cos(nu t)."""
    if osc.alpha >= osc.threshold:
        raise ThresholdError(
            f"alpha = {osc.alpha:g} is not below the threshold 2 gamma/omega0 = {osc.threshold:g}")
    a0 = osc.force / osc.omega0 ** 2
    nu = osc.nu if osc.nu > 0 else 1.0
    z = -osc.alpha * osc.force / complex(osc.omega0 ** 2 - osc.nu ** 2, osc.gamma * osc.nu)
    if osc.nu == 0:
        return HarmonicSeries(nu, a0 + z.real, [0.0], [0.0], 1)
    return HarmonicSeries(nu, a0, [z.real], [-z.imag], 1)


def toy_simulate(osc: ToyOscillator, periods: float, n_out: int = 200, x0=0.0, v0=0.0):
    """Direct integration of the toy equation; returns (t, x) over the last period."""
    w2 = osc.omega0 ** 2

    def rhs(t, y):
        return [y[1], -w2 * (1.0 + osc.alpha * math.cos(osc.nu * t)) * y[0]
                - osc.gamma * y[1] + osc.force]

    tau = 2.0 * math.pi / osc.nu
    t_end = periods * tau
    t_eval = t_end - tau + tau * np.arange(n_out) / n_out
    sol = solve_ivp(rhs, (0.0, t_end), [x0, v0], method="DOP853", t_eval=t_eval,
                    rtol=1e-10, atol=1e-12)
    return sol.t, sol.y[0]


def toy_floquet_multiplier(osc: ToyOscillator) -> float:
    """Largest |Floquet multiplier| of the homogeneous toy equation (> 1 means growth)."""
    w2 = osc.omega0 ** 2

    def rhs(t, y):
        x, v, x2, v2 = y
        k = -w2 * (1.0 + osc.alpha * math.cos(osc.nu * t))
        return [v, k * x - osc.gamma * v, v2, k * x2 - osc.gamma * v2]

    tau = 2.0 * math.pi / osc.nu
    sol = solve_ivp(rhs, (0.0, tau), [1.0, 0.0, 0.0, 1.0], method="DOP853",
                    rtol=1e-12, atol=1e-14)
    m = sol.y[:, -1].reshape(2, 2).T
    return float(np.max(np.abs(np.linalg.eigvals(m))))


def toy_threshold(omega0: float, gamma: float, nu: float | None = None,
                  alpha_max: float = 2.0, tol: float = 1e-6) -> float:
    """Smallest alpha at which the modulated oscillator becomes unstable (bisection)."""
    nu = 2.0 * omega0 if nu is None else nu

    def grows(alpha):
        return toy_floquet_multiplier(ToyOscillator(omega0, gamma, alpha, nu, 0.0)) > 1.0

    lo, hi = 0.0, alpha_max
    if not grows(hi):
        raise ThresholdError(f"no instability below alpha = {alpha_max}")
    while hi - lo > tol * max(hi, 1e-12):
        mid = 0.5 * (lo + hi)
        if grows(mid):
            hi = mid
        else:
            lo = mid
    return hi


# ------------------------------------------------------------ tables and export

def _fmt(v, nd=2):
    return f"{v:.{nd}f}"


def _pair(c, s, nd):
    sign = "-" if s < 0 else "+"
    return f"{_fmt(c, nd)} cos({{w}}) {sign} {_fmt(abs(s), nd)} sin({{w}})"


def single_mod_table(dp, sys, omega: float | None = None, max_order: int = 2,
                     probe: float = 0.5) -> dict:
    """epsilon-graded coefficients of Q, n_phon and C11 for the single modulation.

    The order-j term is proportional to epsilon^j, so evaluating at
    ``epsilon = probe`` and dividing by probe^j gives the coefficient exactly.
    """
    omega = 2.0 * sys.omega_m if omega is None else omega
    mod = ModulationSpec.single(probe, omega)
    cl = classical_orders(dp, sys, mod, max_order)
    cv = covariance_orders(dp, sys, mod, cl, max_order)
    out = {}
    for name, term in (("Q", lambda j: cl.term("q", j)),
                       ("n_phon", cv.phonons_term),
                       ("C11", lambda j: cv.entry_term(1, 1, j))):
        out[name] = [term(j).scaled(probe ** -j) for j in range(max_order + 1)]
    return out


def two_mod_table(dp, sys, epsilon=0.3, eta=0.9, omega: float | None = None,
                  max_order: int = 2) -> dict:
    """phi dependence (const + cos phi + sin phi) of the time-averaged Q, 2 n_phon, C11."""
    omega = 2.0 * sys.omega_m if omega is None else omega
    phis = np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False)
    quantities = {
        "Q": lambda cl, cv: cl.series("q").a0,
        "2n_phon": lambda cl, cv: 2.0 * cv.phonons().a0,
        "C11": lambda cl, cv: cv.entry(1, 1).a0,
    }
    out = {}
    for name, fn in quantities.items():
        vals = constant_part_vs_phase(dp, sys, epsilon, eta, omega, phis, fn, max_order)
        out[name] = phase_decomposition(phis, vals)
    return out


def coefficient_table(dp, sys, max_order: int = 2) -> str:
    """Text rendering of the epsilon-graded and phi-graded coefficient tables."""
    lines = ["single modulation, Omega = 2 omega_M (coefficients of epsilon^j):"]
    tab = single_mod_table(dp, sys, max_order=max_order)
    for name, terms in tab.items():
        nd = 2 if name == "Q" else 3
        lines.append(f"  {name}(t):")
        for j, t in enumerate(terms):
            parts = [f"const {_fmt(t.a0, nd)}"]
            for k, a, b in t.harmonics:
                if a or b:
                    w = "Omega t" if k == 1 else f"{k} Omega t"
                    parts.append(_pair(a, b, nd).format(w=w))
            lines.append(f"    eps^{j}: " + ", ".join(parts))
    lines.append("two modulations, epsilon = 0.3, eta = 0.9, Omega = 2 omega_M "
                 "(time-averaged part vs phi):")
    for name, fit in two_mod_table(dp, sys, max_order=max_order).items():
        nd = 2 if name == "Q" else 3
        lines.append(f"  {name}: {_fmt(fit.mean, nd)} {'+' if fit.cos_coef >= 0 else '-'} "
                     f"{_fmt(abs(fit.cos_coef), nd)} cos(phi) "
                     f"{'+' if fit.sin_coef >= 0 else '-'} {_fmt(abs(fit.sin_coef), nd)} sin(phi)")
    return "\n".join(lines)


def series_json(series: dict[str, HarmonicSeries]) -> dict:
    return {name: s.to_dict() for name, s in series.items()}
