"""Time the compiled and pure-Python integration kernels on the same work.

    python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel integrates one modulation period at the reference parameters
(epsilon = 0.2, Omega = 2 omega_M) and the outputs are compared.
"""
import argparse
import timeit

import numpy as np

from optomod import _pykernels
from optomod.classical import find_periodic_orbit, fixed_point_unmodulated, param_vector
from optomod.covariance import orbit_spline, pack, unmodulated_covariance
from optomod.params import ModulationSpec, derive, reference_system

try:
    from optomod import _kernels
except ImportError:
    _kernels = None


def workloads():
    sys = reference_system()
    dp = derive(sys)
    mod = ModulationSpec.single(0.2, 2 * sys.omega_m)
    p = param_vector(dp, sys, mod)
    y0 = fixed_point_unmodulated(dp, sys).as_array()
    atol = 1e-9 * np.abs(y0).max() * np.ones(4)
    orbit = find_periodic_orbit(dp, sys, mod, 128)
    coef = orbit_spline(orbit)
    c0 = pack(unmodulated_covariance(dp, sys))
    return {
        "mean_segment": lambda be: be.mean_segment(y0, 0.0, mod.period, 32, p, 1e-9, atol,
                                                   mod.period / 100),
        "cov_segment": lambda be: be.cov_segment(c0, 0.0, mod.period, 32, p, coef, orbit.period,
                                                 1e-9, np.full(10, 1e-9), mod.period / 100),
        "joint_segment": lambda be: be.joint_segment(
            np.concatenate([y0, c0]), 0.0, mod.period, 32, p, 1e-9,
            np.concatenate([atol, np.full(10, 1e-9)]), mod.period / 100),
    }


def best_of(fn, repeat):
    timer = timeit.Timer(fn)
    n, _ = timer.autorange()
    return min(timer.repeat(repeat, n)) / n


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the Python kernels are timed")
    print(f"{'kernel':<15}{'python [ms]':>14}{'compiled [ms]':>16}{'speed-up':>10}{'max rel diff':>15}")
    for name, work in workloads().items():
        tp = best_of(lambda: work(_pykernels), args.repeat)
        if _kernels is None:
            print(f"{name:<15}{1e3 * tp:>14.3f}")
            continue
        tc = best_of(lambda: work(_kernels), args.repeat)
        a, b = work(_pykernels)[0], work(_kernels)[0]
        diff = float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))
        print(f"{name:<15}{1e3 * tp:>14.3f}{1e3 * tc:>16.3f}{tp / tc:>10.0f}x{diff:>15.1e}")


if __name__ == "__main__":
    main()
