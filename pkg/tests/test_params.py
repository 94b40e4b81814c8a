import json
import math

import pytest
from hypothesis import given, strategies as st

from optomod.constants import format_constants
from optomod.errors import ConfigError, InvalidParameterError
from optomod.params import (RUN_DEFAULTS, ModulationSpec, derive, load_config, reference_system,
                            parse_config, thermal_factors)

# Frozen values from an independent hand evaluation of the defining formulas.
OMEGA_C = 1.77035e15
G0 = 23.7
DRIVE = 3.79e11
N_TH = 2.08e3


def test_derived_reference_values(derived):
    assert derived.omega_c == pytest.approx(OMEGA_C, rel=1e-4)
    assert derived.g0 == pytest.approx(G0, rel=2e-3)
    assert derived.drive == pytest.approx(DRIVE, rel=2e-3)
    assert derived.n_thermal == pytest.approx(N_TH, rel=2e-3)


def test_coth_matches_thermal_occupation(derived):
    assert derived.coth_factor == pytest.approx(2 * derived.n_thermal + 1, rel=1e-12)


def test_zero_temperature():
    assert thermal_factors(1e6, 0.0) == (0.0, 1.0)


def test_low_q_warns():
    with pytest.warns(RuntimeWarning, match="quality factor"):
        derive(reference_system(gamma_m=reference_system().omega_m / 50))


@pytest.mark.parametrize("field", ["mass", "kappa", "laser_power", "cavity_length"])
def test_rejects_nonpositive(field):
    with pytest.raises(InvalidParameterError):
        reference_system(**{field: 0.0})


def test_rejects_negative_temperature():
    with pytest.raises(InvalidParameterError):
        reference_system(temperature=-1.0)


def test_modulation_validation():
    with pytest.raises(InvalidParameterError):
        ModulationSpec(epsilon=1.0, omega1=1.0)
    with pytest.raises(InvalidParameterError):
        ModulationSpec(epsilon=0.1)
    with pytest.raises(InvalidParameterError):
        ModulationSpec(epsilon=0.1, omega1=1.0, eta=0.2, omega2=2.0)
    assert not ModulationSpec().active


@given(st.floats(-50, 50, allow_nan=False))
def test_phase_wrapped(phi):
    m = ModulationSpec.double(0.1, 0.2, 1.0, phi)
    assert 0.0 <= m.phi < 2 * math.pi
    assert math.cos(m.phi) == pytest.approx(math.cos(phi), abs=1e-9)


def test_period():
    m = ModulationSpec.single(0.1, 4.0 * math.pi)
    assert m.period == pytest.approx(0.5)


def test_parse_units():
    cfg = parse_config({"system": {"omega_m_hz": 2e6},
                        "modulation": {"epsilon": 0.1, "omega1_over_omega_m": 2.0,
                                       "phi_over_pi": 0.5}})
    assert cfg.system.omega_m == pytest.approx(2 * math.pi * 2e6)
    assert cfg.system.detuning == cfg.system.omega_m
    assert cfg.modulation.omega1 == pytest.approx(2 * cfg.system.omega_m)
    assert cfg.modulation.omega2 == cfg.modulation.omega1
    assert cfg.modulation.phi == pytest.approx(math.pi / 2)


@pytest.mark.parametrize("data", [
    {"nope": 1},
    {"system": {"mass_g": 1.0}},
    {"system": {"kappa_hz": 1.0, "kappa_rad_s": 2.0}},
    {"system": {"mass": "heavy"}},
    {"run": {"speed": 3}},
    {"run": {"drift_coupling": "other"}},
    {"run": {"n_samples": 4}},
    {"modulation": {"epsilon": 1.5, "omega1_over_omega_m": 2}},
])
def test_parse_rejects(data):
    with pytest.raises(ConfigError):
        parse_config(data)


def test_load_config(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"run": {"n_samples": 64}}))
    cfg = load_config(path)
    assert cfg.run["n_samples"] == 64
    assert set(cfg.run) == set(RUN_DEFAULTS)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    path.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(path)


def test_constants_listing():
    text = format_constants()
    assert "hbar = 1.054571817e-34" in text
    assert "c = 299792458.0" in text


def test_kappa_note_only_for_reference_value():
    assert parse_config({}).unit_notes
    assert parse_config({"system": {"kappa_hz": 2e5}}).unit_notes == ()
