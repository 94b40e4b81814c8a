import os
import subprocess
import sys

import numpy as np
import pytest

from optomod import kernels
from optomod.classical import fixed_point_unmodulated, param_vector
from optomod.covariance import orbit_spline, pack, unmodulated_covariance
from optomod.classical import find_periodic_orbit
from optomod.params import ModulationSpec

needs_compiled = pytest.mark.skipif(kernels.compiled_backend is None,
                                    reason="compiled extension not built")


@pytest.fixture(scope="module")
def setup(system, derived):
    mod = ModulationSpec.single(0.2, 2 * system.omega_m)
    p = param_vector(derived, system, mod)
    fp = fixed_point_unmodulated(derived, system)
    return mod, p, fp


@needs_compiled
def test_rhs_agree(setup):
    _, p, fp = setup
    y = fp.as_array() * 1.1
    for t in (0.0, 1.3e-7):
        np.testing.assert_allclose(kernels.compiled_backend.mean_rhs(t, y, p),
                                   kernels.python_backend.mean_rhs(t, y, p), rtol=1e-13)


@needs_compiled
def test_mean_segment_agree(setup, system):
    mod, p, fp = setup
    y0 = fp.as_array()
    atol = 1e-9 * np.abs(y0).max() * np.ones(4)
    args = (y0, 0.0, mod.period, 16, p, 1e-9, atol, mod.period / 100)
    a = kernels.compiled_backend.mean_segment(*args)
    b = kernels.python_backend.mean_segment(*args)
    assert a[3] == b[3] == 0
    assert a[2] == b[2]
    np.testing.assert_allclose(a[0], b[0], rtol=1e-12)


@needs_compiled
def test_cov_segment_agree(setup, system, derived):
    mod, p, _ = setup
    orbit = find_periodic_orbit(derived, system, mod, 64)
    coef = orbit_spline(orbit)
    c0 = pack(unmodulated_covariance(derived, system))
    args = (c0, 0.0, mod.period, 8, p, coef, orbit.period, 1e-9, np.full(10, 1e-9), 1e-9)
    a = kernels.compiled_backend.cov_segment(*args)
    b = kernels.python_backend.cov_segment(*args)
    assert a[3] == b[3] == 0
    np.testing.assert_allclose(a[0], b[0], rtol=1e-11, atol=1e-14)


def test_overflow_and_budget_status(setup):
    mod, p, fp = setup
    y0 = fp.as_array()
    atol = np.full(4, 1e-3)
    for be in filter(None, (kernels.compiled_backend, kernels.python_backend)):
        *_, status = be.mean_segment(y0, 0.0, mod.period, 4, p, 1e-9, atol, 1e-9, 1.0)
        assert status == 1
        *_, status = be.mean_segment(y0, 0.0, mod.period, 4, p, 1e-9, atol, 1e-9, 1e15, 5)
        assert status == 3


@pytest.mark.parametrize("value,expected", [("1", "python"), ("", None), ("0", None)])
def test_env_selects_backend(value, expected):
    env = dict(os.environ, OPTOMOD_PURE_PYTHON=value)
    out = subprocess.run([sys.executable, "-c", "import optomod.kernels as k; print(k.BACKEND_NAME)"],
                         env=env, capture_output=True, text=True, check=True).stdout.strip()
    if expected is None:
        expected = "compiled" if kernels.compiled_backend is not None else "python"
    assert out == expected
