import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from optomod.errors import InvalidParameterError
from optomod.series import HarmonicSeries, project

OMEGA = 2.0 * math.pi * 3.0


def grid(n, omega=OMEGA):
    return np.arange(n) * (2 * math.pi / omega) / n


def test_constant():
    s = project(np.full(16, 4.5), 3, OMEGA)
    assert s.a0 == pytest.approx(4.5)
    assert np.allclose(s.cos, 0) and np.allclose(s.sin, 0)


def test_projection_identity():
    t = grid(32)
    v = 3 + 2 * np.cos(OMEGA * t) - 0.5 * np.sin(2 * OMEGA * t)
    s = project(v, 3, OMEGA)
    assert s.a0 == pytest.approx(3, abs=1e-13)
    assert s.coefficient(1) == pytest.approx((2, 0), abs=1e-13)
    assert s.coefficient(2) == pytest.approx((0, -0.5), abs=1e-13)
    assert s.amplitude(3) == pytest.approx(0, abs=1e-13)


def test_too_few_samples():
    with pytest.raises(InvalidParameterError):
        project(np.zeros(5), 2, OMEGA)


coef = st.floats(-100, 100, allow_nan=False)


@settings(max_examples=50)
@given(coef, st.lists(st.tuples(coef, coef), min_size=1, max_size=4))
def test_roundtrip_evaluation(a0, pairs):
    c, s = zip(*pairs)
    ser = HarmonicSeries(OMEGA, a0, c, s)
    back = project(ser(grid(4 * len(pairs) + 4)), len(pairs), OMEGA)
    assert back.a0 == pytest.approx(a0, abs=1e-9)
    assert np.allclose(back.cos, c, atol=1e-9)
    assert np.allclose(back.sin, s, atol=1e-9)


def test_add_scale_and_json():
    a = HarmonicSeries(OMEGA, 1.0, [1.0], [2.0], order=1)
    b = HarmonicSeries(OMEGA, 0.5, [0.0, 3.0], [0.0, 0.0], order=2)
    c = a + b.scaled(2.0)
    assert c.a0 == 2.0 and c.coefficient(2) == (6.0, 0.0) and c.order == 2
    d = HarmonicSeries.from_dict(c.to_dict())
    assert d.a0 == c.a0 and np.array_equal(d.cos, c.cos) and np.array_equal(d.sin, c.sin)
    assert HarmonicSeries.from_dict(json.loads(c.to_json())).coefficient(1) == (1.0, 2.0)
    with pytest.raises(InvalidParameterError):
        a + HarmonicSeries(2 * OMEGA, 0.0)


def test_from_dict_rejects_duplicates():
    with pytest.raises(InvalidParameterError):
        HarmonicSeries.from_dict({"omega": 1.0, "a0": 0.0, "harmonics": [[1, 0, 0], [1, 1, 1]]})


def test_immutable():
    s = HarmonicSeries(OMEGA, 0.0, [1.0], [0.0])
    with pytest.raises(ValueError):
        s.cos[0] = 2.0
