"""Drift and noise matrices, the periodic covariance orbit and stability checks.

Ordering is (q, p, X, Y); the vacuum variance is 1/2 throughout.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_continuous_lyapunov

from . import kernels
from .classical import (OVERFLOW_GUARD, MeanState, PeriodicOrbit, find_periodic_orbit,
                        fixed_point_unmodulated, orbit_period, param_vector, settle_periodic,
                        step_budget)
from .errors import InvalidParameterError, NumericalFailureError
from .params import RUN_DEFAULTS, DerivedParams, ModulationSpec, SystemParams

UT_I = np.array([0, 0, 0, 0, 1, 1, 1, 2, 2, 3])
UT_J = np.array([0, 1, 2, 3, 1, 2, 3, 2, 3, 3])
ENTRY_NAMES = tuple(f"C{i + 1}{j + 1}" for i, j in zip(UT_I, UT_J))

SYMPLECTIC_FORM = np.array([[0.0, 1.0, 0.0, 0.0],
                            [-1.0, 0.0, 0.0, 0.0],
                            [0.0, 0.0, 0.0, 1.0],
                            [0.0, 0.0, -1.0, 0.0]])

RH_EPS = 1e-12


def pack(c: np.ndarray) -> np.ndarray:
    """Upper triangle of (..., 4, 4) matrices, row-major, as (..., 10)."""
    return np.asarray(c)[..., UT_I, UT_J]


def unpack(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = np.empty(v.shape[:-1] + (4, 4))
    out[..., UT_I, UT_J] = v
    out[..., UT_J, UT_I] = v
    return out


def drift_at(t: float, mean: MeanState, dp: DerivedParams, sys: SystemParams,
             mod: ModulationSpec, coupling: str = "quadrature") -> np.ndarray:
    p = param_vector(dp, sys, mod, coupling)
    r = p[13] * dp.g0
    det = sys.detuning - dp.g0 * mean.q
    s = np.array([
        [0.0, sys.omega_m, 0.0, 0.0],
        [-sys.omega_m * (1.0 + mod.epsilon * math.cos(mod.omega1 * t)), -sys.gamma_m,
         r * mean.a_re, r * mean.a_im],
        [-r * mean.a_im, 0.0, -sys.kappa, det],
        [r * mean.a_re, 0.0, -det, -sys.kappa],
    ])
    assert s[0, 0] == 0.0 and s[0, 2] == 0.0 and s[0, 3] == 0.0
    assert s[2, 2] == s[3, 3] == -sys.kappa
    return s


def noise_matrix(dp: DerivedParams, sys: SystemParams) -> np.ndarray:
    return np.diag([0.0, sys.gamma_m * dp.coth_factor, sys.kappa, sys.kappa])


def lyapunov_steady(s: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Solve S C + C S^T + N = 0."""
    c = solve_continuous_lyapunov(s, -n)
    return 0.5 * (c + c.T)


def symplectic_eigenvalues(c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(nu_minus, nu_plus) of (..., 4, 4) covariance matrices, vacuum = 1/2.

    Computed as the spectrum of the Hermitian matrix i C^1/2 Sigma C^1/2,
    which stays accurate when the two eigenvalues coincide (pure states),
    unlike the closed form through the invariants.
    """
    c = np.asarray(c, dtype=float)
    w, v = np.linalg.eigh(0.5 * (c + np.swapaxes(c, -1, -2)))
    root = (v * np.sqrt(np.maximum(w, 0.0))[..., None, :]) @ np.swapaxes(v, -1, -2)
    m = root @ SYMPLECTIC_FORM @ root
    ev = np.linalg.eigvalsh(1j * m)
    return ev[..., 2], ev[..., 3]


def is_physical(c: np.ndarray, tol: float = 1e-9) -> bool:
    nm, _ = symplectic_eigenvalues(c)
    return bool(np.all(nm >= 0.5 - tol))


@dataclass(frozen=True)
class CovOrbit:
    period: float
    times: np.ndarray
    matrices: np.ndarray
    settle_time: float
    closure_gap: float = 0.0

    @property
    def n_samples(self) -> int:
        return self.matrices.shape[0]

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.period

    def entry(self, i: int, j: int) -> np.ndarray:
        """Samples of C_ij with 1-based indices."""
        return self.matrices[:, i - 1, j - 1]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# period={self.period!r}\n# settle_time={self.settle_time!r}\n")
            w = csv.writer(fh)
            w.writerow(["t", *ENTRY_NAMES])
            for t, v in zip(self.times, pack(self.matrices)):
                w.writerow([repr(float(t))] + [repr(float(x)) for x in v])


def orbit_spline(orbit: PeriodicOrbit) -> np.ndarray:
    """Periodic cubic-spline coefficients of the mean orbit, shape (4, N, 4)."""
    t = np.append(orbit.times, orbit.period)
    y = np.vstack([orbit.states, orbit.states[:1]])
    sp = CubicSpline(t, y, bc_type="periodic", axis=0)
    return np.ascontiguousarray(sp.c)


def _cov_atol(c0: np.ndarray, rtol: float) -> np.ndarray:
    return np.full(10, rtol * max(1.0, float(np.max(np.abs(c0)))))


def evolve_covariance(c0: np.ndarray, orbit: PeriodicOrbit, dp: DerivedParams,
                      sys: SystemParams, mod: ModulationSpec, t_span: tuple[float, float],
                      n_out: int = 100, *, coupling: str = "quadrature",
                      rtol: float = RUN_DEFAULTS["rtol"]) -> tuple[np.ndarray, np.ndarray]:
    """Integrate dC/dt = S C + C S^T + N along ``orbit`` (interpolated periodically).

    Returns ``(times, matrices)`` at ``n_out`` equally spaced times after ``t_span[0]``.
    """
    t0, t1 = map(float, t_span)
    if not t1 > t0:
        raise InvalidParameterError("t_span must be increasing")
    c0 = np.asarray(c0, dtype=float)
    p = param_vector(dp, sys, mod, coupling)
    coef = orbit_spline(orbit)
    out, _, _, status = kernels.cov_segment(pack(c0), t0, t1, n_out, p, coef, orbit.period,
                                            rtol, _cov_atol(c0, rtol), (t1 - t0) / 100.0,
                                            OVERFLOW_GUARD)
    if status != 0:
        raise NumericalFailureError("covariance integration failed (overflow or step underflow)")
    mats = unpack(out)
    nm, _ = symplectic_eigenvalues(mats)
    if np.any(nm < 0.5 - 1e-6):
        raise NumericalFailureError(
            f"covariance lost physicality (symplectic eigenvalue {nm.min():.6g} < 1/2); "
            "tighten rtol")
    times = t0 + (t1 - t0) * np.arange(1, n_out + 1) / n_out
    return times, mats


def unmodulated_covariance(dp: DerivedParams, sys: SystemParams,
                           coupling: str = "quadrature") -> np.ndarray:
    fp = fixed_point_unmodulated(dp, sys)
    s = drift_at(0.0, fp, dp, sys, ModulationSpec(), coupling)
    return lyapunov_steady(s, noise_matrix(dp, sys))


def steady_periodic_covariance(dp: DerivedParams, sys: SystemParams, mod: ModulationSpec,
                               n_samples: int = 512, *, orbit: PeriodicOrbit | None = None,
                               coupling: str = "quadrature", interpolation: str = "spline",
                               rtol: float = RUN_DEFAULTS["rtol"],
                               settle_tol: float = RUN_DEFAULTS["settle_tol"],
                               min_periods: int = RUN_DEFAULTS["min_settle_periods"],
                               max_periods: int = RUN_DEFAULTS["max_settle_periods"],
                               c0: np.ndarray | None = None) -> CovOrbit:
    """Asymptotic periodic covariance, started from the unmodulated Lyapunov solution."""
    if c0 is None:
        c0 = unmodulated_covariance(dp, sys, coupling)
    period = orbit_period(sys, mod)
    times = np.arange(n_samples) * (period / n_samples)
    if not mod.active:
        return CovOrbit(period, times, np.tile(c0, (n_samples, 1, 1)), 0.0, 0.0)
    opts = dict(tol=settle_tol, min_periods=min_periods, max_periods=max_periods)
    if orbit is None:
        orbit = find_periodic_orbit(dp, sys, mod, n_samples, rtol=rtol, settle_tol=settle_tol,
                                    min_periods=min_periods, max_periods=max_periods)
    p = param_vector(dp, sys, mod, coupling)
    catol = _cov_atol(c0, rtol)
    if interpolation == "spline":
        coef = orbit_spline(orbit)

        def segment(y, t0, t1, nout, h):
            return kernels.cov_segment(y, t0, t1, nout, p, coef, orbit.period, rtol, catol, h,
                                       OVERFLOW_GUARD, step_budget(nout))

        out, settle, gap = settle_periodic(segment, pack(c0), period, n_samples,
                                           what="covariance", **opts)
    elif interpolation == "lockstep":
        fp = orbit.states[0]
        qs = max(abs(fp[0]), 1.0)
        as_ = max(math.hypot(fp[2], fp[3]), 1.0)
        atol = np.concatenate([rtol * np.array([qs, qs, as_, as_]), catol])

        def segment(y, t0, t1, nout, h):
            return kernels.joint_segment(y, t0, t1, nout, p, rtol, atol, h, OVERFLOW_GUARD,
                                         step_budget(nout))

        out, settle, gap = settle_periodic(segment, np.concatenate([orbit.states[0], pack(c0)]),
                                           period, n_samples, what="covariance", **opts)
        out = out[:, 4:]
    else:
        raise InvalidParameterError(f"unknown interpolation {interpolation!r}")
    return CovOrbit(period, times, unpack(out), settle, gap)


# ------------------------------------------------------------ Routh-Hurwitz

def char_poly(s: np.ndarray) -> np.ndarray:
    """Coefficients (a1..a4) of det(lambda I - S) = lambda^4 + a1 lambda^3 + ... + a4.

    Faddeev-LeVerrier recursion, vectorized over leading axes.
    """
    s = np.asarray(s, dtype=float)
    eye = np.broadcast_to(np.eye(4), s.shape)
    m = np.zeros_like(s)
    coeffs = []
    c = 1.0
    for k in range(1, 5):
        m = s @ m + np.asarray(c)[..., None, None] * eye if k > 1 else eye.copy()
        am = s @ m
        c = -np.trace(am, axis1=-2, axis2=-1) / k
        coeffs.append(c)
    return np.stack(coeffs, axis=-1)


def routh_column(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First Routh column (1 omitted) for monic quartics; zero pivots replaced by 1e-12.

    Returns ``(column, marginal)`` with ``column[..., :] = (a1, b1, c1, a4)``.
    """
    a = np.asarray(a, dtype=float)
    a1, a2, a3, a4 = (a[..., i] for i in range(4))
    marginal = np.zeros(a1.shape, dtype=bool)
    z = a1 == 0.0
    marginal |= z
    a1 = np.where(z, RH_EPS, a1)
    b1 = (a1 * a2 - a3) / a1
    z = b1 == 0.0
    marginal |= z
    b1 = np.where(z, RH_EPS, b1)
    c1 = (b1 * a3 - a1 * a4) / b1
    marginal |= c1 == 0.0
    return np.stack([a1, b1, c1, a4], axis=-1), marginal


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    worst_margin: float
    worst_phase: float
    marginal: bool
    margins: np.ndarray

    def to_dict(self) -> dict:
        return {"stable": self.stable, "worst_margin": self.worst_margin,
                "worst_phase": self.worst_phase, "marginal": self.marginal}


def routh_hurwitz(s: np.ndarray, scale: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Margins (min of the Routh column of S/scale) and marginal flags."""
    col, marginal = routh_column(char_poly(np.asarray(s) / scale))
    return col.min(axis=-1), marginal


def routh_hurwitz_stable(dp: DerivedParams, sys: SystemParams, mod: ModulationSpec,
                         orbit: PeriodicOrbit, coupling: str = "quadrature") -> StabilityReport:
    """Frozen-time Routh-Hurwitz test of S(t) at every orbit phase."""
    mats = np.stack([drift_at(t, MeanState.from_array(y), dp, sys, mod, coupling)
                     for t, y in zip(orbit.times, orbit.states)])
    margins, marginal = routh_hurwitz(mats, sys.omega_m)
    k = int(np.argmin(margins))
    return StabilityReport(bool(np.all(margins > 0)),
                           float(margins[k]), float(orbit.times[k]), bool(np.any(marginal)),
                           margins)
