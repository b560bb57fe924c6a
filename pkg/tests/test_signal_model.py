import math

import numpy as np
import pytest

from stbeam.errors import ConfigValidationError
from stbeam.field_engine import SPEED_OF_LIGHT
from stbeam.signal_model import (
    ArrayConfig,
    CWEnvelope,
    ElementExcitation,
    GaussianEnvelope,
    PeriodicSwitchEnvelope,
    RectEnvelope,
    envelope_value,
    half_wavelength,
    make_array,
    make_linear_fda,
    make_steered_phased_array,
    validate,
)


class TestEnvelopeValue:
    def test_cw_is_one_everywhere(self):
        assert envelope_value(CWEnvelope(), -1.0) == 1.0
        assert envelope_value(CWEnvelope(), 1e3) == 1.0

    def test_gaussian_peak(self):
        assert envelope_value(GaussianEnvelope(fdhm=16.7e-6, center=0.0), 0.0) == 1.0

    def test_gaussian_half_maximum_at_half_fdhm(self):
        env = GaussianEnvelope(fdhm=16.7e-6, center=0.0)
        assert envelope_value(env, 8.35e-6) == pytest.approx(0.5, rel=1e-12)
        assert envelope_value(env, -8.35e-6) == pytest.approx(0.5, rel=1e-12)

    def test_rect_is_half_open(self):
        env = RectEnvelope(duration=1e-6, start=0.0)
        assert envelope_value(env, 0.0) == 1.0
        assert envelope_value(env, 0.5e-6) == 1.0
        assert envelope_value(env, 1e-6) == 0.0
        assert envelope_value(env, -1e-9) == 0.0

    def test_switch_off_after_duty(self):
        env = PeriodicSwitchEnvelope(period=1e-3, duty=0.25, offset=0.0)
        assert envelope_value(env, 0.3e-3) == 0.0
        assert envelope_value(env, 0.1e-3) == 1.0
        assert envelope_value(env, 1.1e-3) == 1.0

    def test_switch_full_duty_always_on(self):
        env = PeriodicSwitchEnvelope(period=1e-3, duty=1.0)
        assert np.all(envelope_value(env, np.linspace(-5e-3, 5e-3, 101)) == 1.0)

    def test_vectorized_keeps_shape(self):
        t = np.linspace(-2e-5, 2e-5, 12).reshape(3, 4)
        out = envelope_value(GaussianEnvelope(fdhm=1e-5), t)
        assert out.shape == (3, 4)
        assert np.all((out >= 0) & (out <= 1))

    @pytest.mark.parametrize(
        "env",
        [
            GaussianEnvelope(fdhm=0.0),
            RectEnvelope(duration=-1e-6),
            PeriodicSwitchEnvelope(period=0.0, duty=0.5),
            PeriodicSwitchEnvelope(period=1e-3, duty=0.0),
            PeriodicSwitchEnvelope(period=1e-3, duty=1.5),
        ],
    )
    def test_invalid_spec_raises(self, env):
        with pytest.raises(ConfigValidationError):
            envelope_value(env, 0.0)


class TestMakeLinearFda:
    def test_nineteen_element_offsets(self):
        config = make_linear_fda(19, 0.015, 1e10, 1e4, CWEnvelope())
        assert config.n_elements == 19
        assert list(config.freq_offsets) == [n * 1e4 for n in range(19)]
        assert config.freq_offsets[-1] == 180e3
        assert all(e.amplitude == 1.0 and e.phase == 0.0 for e in config.elements)

    def test_single_element(self):
        config = make_linear_fda(1, 0.015, 1e10, 1e4)
        assert config.n_elements == 1
        assert config.elements[0].freq_offset == 0.0

    def test_zero_offset_is_phased_array(self):
        fda = make_linear_fda(3, 0.01, 1e9, 0.0, CWEnvelope())
        phased = make_steered_phased_array(3, 0.01, 1e9, 0.0, CWEnvelope())
        assert not fda.has_offsets
        assert fda == phased

    def test_shared_envelope(self):
        env = GaussianEnvelope(fdhm=1e-6)
        config = make_linear_fda(4, 0.015, 1e10, 1e4, env)
        assert all(e.envelope == env for e in config.elements)

    def test_zero_elements_rejected(self):
        with pytest.raises(ConfigValidationError, match="n_elements"):
            make_linear_fda(0, 0.015, 1e10, 1e4)


class TestMakeSteeredPhasedArray:
    def test_broadside_has_zero_phases(self):
        config = make_steered_phased_array(
            19, half_wavelength(1e10), 1e10, 0.0, GaussianEnvelope(fdhm=16.7e-6)
        )
        assert all(e.phase == 0.0 for e in config.elements)
        assert not config.has_offsets

    def test_steering_phase(self):
        config = make_steered_phased_array(5, half_wavelength(1e10), 1e10, math.pi / 6, CWEnvelope())
        assert config.elements[1].phase == pytest.approx(-math.pi / 2, rel=1e-12)
        assert config.elements[4].phase == pytest.approx(-2 * math.pi, rel=1e-12)

    def test_endfire_rejected(self):
        with pytest.raises(ConfigValidationError, match="steer_angle"):
            make_steered_phased_array(5, 0.015, 1e10, math.pi / 2)


class TestValidate:
    def _config(self, **overrides) -> ArrayConfig:
        data = dict(
            n_elements=19,
            spacing=0.015,
            carrier=1e10,
            elements=tuple(ElementExcitation() for _ in range(19)),
        )
        data.update(overrides)
        return ArrayConfig(**data)

    def test_valid_config(self):
        assert validate(self._config()) == []

    def test_zero_spacing(self):
        problems = validate(self._config(spacing=0.0))
        assert [str(p) for p in problems] == ["spacing: spacing must be > 0"]

    def test_length_mismatch(self):
        problems = validate(self._config(elements=tuple(ElementExcitation() for _ in range(18))))
        assert len(problems) == 1
        assert problems[0].path == "elements"
        assert "length mismatch" in problems[0].message

    def test_collects_every_violation(self):
        elements = (ElementExcitation(amplitude=-1.0), ElementExcitation(freq_offset=2e10))
        problems = validate(self._config(n_elements=2, carrier=1e10, spacing=-1.0, elements=elements))
        paths = {p.path for p in problems}
        assert paths == {"spacing", "elements[0].amplitude", "elements[1].freq_offset"}

    def test_envelope_violation_has_element_path(self):
        elements = (ElementExcitation(envelope=RectEnvelope(duration=0.0)),)
        problems = validate(self._config(n_elements=1, elements=elements))
        assert problems[0].path == "elements[0].envelope.duration"

    def test_make_array_raises_with_violations(self):
        with pytest.raises(ConfigValidationError) as exc:
            make_array(0.015, -1.0, [ElementExcitation()])
        assert [v.path for v in exc.value.violations] == ["carrier"]


class TestArrayConfig:
    def test_with_envelope_replaces_all(self):
        config = make_linear_fda(3, 0.015, 1e10, 1e4)
        switched = config.with_envelope(PeriodicSwitchEnvelope(period=1e-5, duty=0.1))
        assert all(isinstance(e.envelope, PeriodicSwitchEnvelope) for e in switched.elements)
        assert list(switched.freq_offsets) == list(config.freq_offsets)

    def test_positions_and_aperture(self):
        config = make_linear_fda(19, 0.015, 1e10, 1e4)
        assert config.positions[9] == pytest.approx(0.135)
        assert config.aperture == pytest.approx(0.27)
        assert config.total_amplitude == 19.0

    def test_half_wavelength(self):
        assert half_wavelength(1e10) == pytest.approx(SPEED_OF_LIGHT / 2e10)

    def test_frozen(self):
        config = make_linear_fda(2, 0.015, 1e10, 1e4)
        with pytest.raises(Exception):
            config.spacing = 1.0
