"""Classical mean values: the unmodulated fixed point and the asymptotic
periodic orbit of the modulated system."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import FixedPointError, InstabilityError, InvalidParameterError, NonConvergenceError
from .params import RUN_DEFAULTS, DerivedParams, ModulationSpec, SystemParams
from .series import HarmonicSeries, project

OVERFLOW_GUARD = 1e15
# Step budget per integrated period. Beyond threshold the growing amplitude
# makes the equations stiff long before the overflow guard is reached.
STEPS_PER_PERIOD = 20000
COMPONENTS = ("q", "p", "a_re", "a_im")

COUPLING_SCALE = {"quadrature": math.sqrt(2.0), "printed": 1.0}


@dataclass(frozen=True)
class MeanState:
    q: float
    p: float
    a_re: float
    a_im: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in self.as_array()):
            raise InvalidParameterError("mean state components must be finite")

    @property
    def amplitude(self) -> complex:
        return complex(self.a_re, self.a_im)

    @property
    def photons(self) -> float:
        return self.a_re ** 2 + self.a_im ** 2

    def as_array(self) -> np.ndarray:
        return np.array([self.q, self.p, self.a_re, self.a_im], dtype=float)

    @classmethod
    def from_array(cls, y) -> "MeanState":
        return cls(*(float(v) for v in y))


def param_vector(dp: DerivedParams, sys: SystemParams, mod: ModulationSpec,
                 coupling: str = "quadrature") -> np.ndarray:
    """Pack everything the integration kernels need into their flat layout."""
    try:
        r = COUPLING_SCALE[coupling]
    except KeyError:
        raise InvalidParameterError(f"unknown drift coupling {coupling!r}") from None
    return np.array([
        sys.omega_m, sys.gamma_m, sys.kappa, sys.detuning, dp.g0, dp.drive,
        mod.epsilon, mod.omega1, mod.eta, mod.omega2, mod.phi,
        sys.gamma_m * dp.coth_factor, sys.kappa, r,
    ])


def mean_rhs(t: float, s: MeanState, dp: DerivedParams, sys: SystemParams,
             mod: ModulationSpec) -> MeanState:
    d = kernels.mean_rhs(float(t), s.as_array(), param_vector(dp, sys, mod))
    return MeanState.from_array(d)


def _stationarity_residual(y, dp, sys) -> float:
    q, p, ar, ai = y
    det = sys.detuning - dp.g0 * q
    terms = [
        (sys.omega_m * p, abs(sys.omega_m * p)),
        (-sys.omega_m * q - sys.gamma_m * p + dp.g0 * (ar * ar + ai * ai),
         abs(sys.omega_m * q) + abs(dp.g0 * (ar * ar + ai * ai))),
        (-sys.kappa * ar + det * ai + dp.drive, abs(sys.kappa * ar) + abs(det * ai) + dp.drive),
        (-sys.kappa * ai - det * ar, abs(sys.kappa * ai) + abs(det * ar)),
    ]
    return max(abs(v) / s if s > 0 else abs(v) for v, s in terms)


def fixed_point_unmodulated(dp: DerivedParams, sys: SystemParams, *, homotopy_steps: int = 10,
                            max_newton: int = 100) -> MeanState:
    """Stationary mean values without modulation.

    The cubic for Q is followed from the cold cavity (G0 = 0) in
    ``homotopy_steps`` increments of G0, so the branch connected to the
    decoupled solution is returned even when several roots exist.
    """
    wm, kap, d0, e = sys.omega_m, sys.kappa, sys.detuning, dp.drive
    q = 0.0
    res = float("nan")
    for step in range(1, homotopy_steps + 1):
        g = dp.g0 * step / homotopy_steps
        for _ in range(max_newton):
            det = d0 - g * q
            den = kap * kap + det * det
            f = q - g * e * e / (wm * den)
            df = 1.0 - g * e * e * 2.0 * det * g / (wm * den * den)
            if df == 0.0:
                raise FixedPointError("zero derivative in fixed-point Newton iteration", abs(f))
            dq = f / df
            q -= dq
            res = abs(dq) / max(abs(q), 1.0)
            if res < 1e-15:
                break
        else:
            if res > 1e-10:
                raise FixedPointError(f"Newton iteration did not converge at G0 step {step}", res)
    a = e / complex(kap, d0 - dp.g0 * q)
    y = np.array([q, 0.0, a.real, a.imag])
    res = _stationarity_residual(y, dp, sys)
    if not res < 1e-10:
        raise FixedPointError("fixed point residual above 1e-10", res)
    return MeanState.from_array(y)


@dataclass(frozen=True)
class PeriodicOrbit:
    period: float
    times: np.ndarray
    states: np.ndarray
    settle_time: float
    closure_gap: float = 0.0

    @property
    def n_samples(self) -> int:
        return self.states.shape[0]

    @property
    def omega(self) -> float:
        return 2.0 * math.pi / self.period

    @property
    def samples(self) -> list[tuple[float, MeanState]]:
        return [(float(t), MeanState.from_array(y)) for t, y in zip(self.times, self.states)]

    def component(self, name: str) -> np.ndarray:
        return self.states[:, COMPONENTS.index(name)]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(f"# period={self.period!r}\n# settle_time={self.settle_time!r}\n")
            w = csv.writer(fh)
            w.writerow(["t", "Q", "P", "ReA", "ImA"])
            for t, y in zip(self.times, self.states):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in y])


def orbit_period(sys: SystemParams, mod: ModulationSpec) -> float:
    """Modulation period, or the mechanical period when nothing is modulated."""
    return mod.period if mod.omega > 0 else 2.0 * math.pi / sys.omega_m


def step_budget(nout: int) -> int:
    return STEPS_PER_PERIOD + 4 * nout


def settle_periodic(segment, y0, period: float, n_samples: int, *, tol: float,
                    min_periods: int, max_periods: int, what: str):
    """Integrate period by period until stroboscopic closure, then sample one period.

    ``segment(y, t0, t1, nout, h)`` wraps a kernel call. Returns
    ``(samples, settle_time, gap)``; ``samples[j]`` is the state at phase
    ``j * period / n_samples``.
    """
    y = np.array(y0, dtype=float)
    h = period / 50.0
    closed = 0
    gap = float("inf")
    n = 0
    while True:
        t0 = n * period
        out, h, _, status = segment(y, t0, t0 + period, 1, h)
        if status == 1:
            raise InstabilityError(f"{what} diverged past {OVERFLOW_GUARD:g}", "divergence", t0)
        if status == 3:
            raise InstabilityError(f"{what} needs more than {STEPS_PER_PERIOD} steps per period "
                                   "(runaway growth)", "divergence", t0)
        if status != 0 or not np.all(np.isfinite(out)):
            raise InstabilityError(f"{what} integration failed (step size underflow)",
                                   "step-underflow", t0)
        ynew = out[-1]
        gap = float(np.max(np.abs(ynew - y) / (1.0 + np.abs(ynew))))
        y = ynew
        n += 1
        closed = closed + 1 if gap < tol else 0
        if closed >= 3 and n >= min_periods:
            break
        if n >= max_periods:
            raise NonConvergenceError(f"{what} not periodic after {n} periods", gap)
    t0 = n * period
    out, h, _, status = segment(y, t0, t0 + period, n_samples, h)
    if status != 0:
        raise InstabilityError(f"{what} diverged while sampling", "divergence", t0)
    samples = np.roll(out, 1, axis=0)
    samples[0] = y
    return samples, t0, gap


def find_periodic_orbit(dp: DerivedParams, sys: SystemParams, mod: ModulationSpec,
                        n_samples: int = 512, *, rtol: float = RUN_DEFAULTS["rtol"],
                        settle_tol: float = RUN_DEFAULTS["settle_tol"],
                        min_periods: int = RUN_DEFAULTS["min_settle_periods"],
                        max_periods: int = RUN_DEFAULTS["max_settle_periods"],
                        start: MeanState | None = None) -> PeriodicOrbit:
    if n_samples < 2:
        raise InvalidParameterError("n_samples must be >= 2")
    period = orbit_period(sys, mod)
    times = np.arange(n_samples) * (period / n_samples)
    fp = fixed_point_unmodulated(dp, sys)
    if not mod.active:
        states = np.tile(fp.as_array(), (n_samples, 1))
        return PeriodicOrbit(period, times, states, 0.0, 0.0)
    y0 = fp.as_array() if start is None else start.as_array()
    qs = max(abs(fp.q), 1.0)
    as_ = max(abs(fp.amplitude), 1.0)
    atol = rtol * np.array([qs, qs, as_, as_])
    p = param_vector(dp, sys, mod)

    def segment(y, t0, t1, nout, h):
        return kernels.mean_segment(y, t0, t1, nout, p, rtol, atol, h, OVERFLOW_GUARD,
                                    step_budget(nout))

    states, settle, gap = settle_periodic(segment, y0, period, n_samples, tol=settle_tol,
                                          min_periods=min_periods, max_periods=max_periods,
                                          what="classical orbit")
    return PeriodicOrbit(period, times, states, settle, gap)


def harmonic_projection(orbit: PeriodicOrbit, max_harmonic: int) -> dict[str, HarmonicSeries]:
    """Discrete Fourier coefficients of each mean-value component."""
    return {name: project(orbit.states[:, i], max_harmonic, orbit.omega)
            for i, name in enumerate(COMPONENTS)}
