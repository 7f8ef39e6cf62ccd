"""
Unit tests for the deterministic epidemic baseline and presets.
"""
import math

import pytest

from apps.containment.epidemic import epidemic_curve, hours_to_fraction, logistic
from apps.containment.exceptions import ConfigInvalid
from apps.containment.presets import PRESETS, get_preset
from apps.containment.rates import RationalCaseStudy

pytestmark = pytest.mark.simulators

CODERED = dict(n=2**32, k_vuln=350000, scan_rate_per_hour=10188.0, i0=1)


class TestEpidemicCurve:
    """Test the RK4 integration against the logistic closed form"""

    def test_agrees_with_logistic(self):
        # Arrange
        frame = epidemic_curve(1000, 100, 5.0, 1, 20.0, step_hours=0.5)

        # Assert
        relative = ((frame['infected'] - frame['logistic']).abs() / frame['logistic']).max()
        assert relative < 1e-6
        assert list(frame.columns) == ['hour', 'infected', 'logistic']
        assert frame['hour'].iloc[0] == 0.0
        assert frame['hour'].iloc[-1] == pytest.approx(20.0)
        assert len(frame) == 41

    def test_horizon_off_grid(self):
        """A horizon between rows adds a final row at the horizon"""
        frame = epidemic_curve(1000, 100, 5.0, 1, 1.25, step_hours=0.5)
        assert list(frame['hour']) == pytest.approx([0.0, 0.5, 1.0, 1.25])

    def test_codered_saturates_within_30_hours(self):
        frame = epidemic_curve(**CODERED, hours=30.0, step_hours=1.0)

        assert frame['infected'].iloc[-1] >= 0.99 * 350000
        assert frame['infected'].is_monotonic_increasing

    def test_no_scanning_stays_flat(self):
        frame = epidemic_curve(1000, 100, 0.0, 3, 2.0)
        assert (frame['infected'] == 3.0).all()

    @pytest.mark.parametrize('overrides', [
        {'n': 0},
        {'hours': 0.0},
        {'scan_rate_per_hour': -1.0},
        {'i0': 0},
        {'i0': 101},
        {'step_hours': 0.0},
    ])
    def test_invalid_inputs(self, overrides):
        values = dict(n=1000, k_vuln=100, scan_rate_per_hour=5.0, i0=1, hours=2.0)
        values.update(overrides)
        with pytest.raises(ConfigInvalid):
            epidemic_curve(**values)


class TestLogistic:
    """Test the closed form helpers"""

    def test_starts_at_i0(self):
        assert float(logistic(1000, 100, 5.0, 4, 0.0)) == pytest.approx(4.0)

    def test_codered_beta_k(self):
        """beta K = 10188 * 350000 / 2^32, about 0.8302 per hour"""
        beta_k = CODERED['scan_rate_per_hour'] * CODERED['k_vuln'] / CODERED['n']
        assert beta_k == pytest.approx(0.8302, abs=1e-4)

    def test_hours_to_99_percent(self):
        hours = hours_to_fraction(fraction=0.99, **CODERED)
        assert hours == pytest.approx(20.9, abs=0.05)

    def test_hours_to_fraction_matches_curve(self):
        hours = hours_to_fraction(1000, 100, 5.0, 1, 0.5)
        assert float(logistic(1000, 100, 5.0, 1, hours)) == pytest.approx(50.0)

    def test_hours_edge_cases(self):
        assert hours_to_fraction(1000, 100, 0.0, 1, 0.5) == math.inf
        assert hours_to_fraction(1000, 100, 5.0, 80, 0.5) == 0.0

    @pytest.mark.parametrize('fraction', [0.0, 1.0])
    def test_invalid_fraction(self, fraction):
        with pytest.raises(ConfigInvalid):
            hours_to_fraction(1000, 100, 5.0, 1, fraction)


class TestPresets:
    """Test named scenario presets"""

    def test_codered(self):
        preset = get_preset('codered1v2')

        assert preset.n == 2**32
        assert preset.k_vuln == 350000
        assert isinstance(preset.rate, RationalCaseStudy)
        assert preset.to_dict()['scan_rate_per_hour'] == 10188.0

    def test_malware_config_overrides(self):
        config = PRESETS['codered1v2'].malware_config(k_target=1000, max_hours=1.0)

        assert config.k_target == 1000
        assert config.max_hours == 1.0
        assert config.scan_rate_per_hour == 10188.0
        assert config.n == 2**32

    def test_params_and_mtd_config(self):
        preset = get_preset('codered1v2')

        assert preset.params(h=0.1).h == 0.1
        assert preset.mtd_config(k_target=10).gamma == preset.gamma

    def test_unknown(self):
        with pytest.raises(ConfigInvalid):
            get_preset('slammer')
