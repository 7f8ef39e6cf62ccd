"""
Integration tests reproducing the worm case study and the containment claims.
"""
import numpy as np
import pytest

from apps.containment.chain import GameParams
from apps.containment.dp import wbar_curve
from apps.containment.rates import DirectAlpha, PowerLaw, RationalCaseStudy
from apps.containment.solver import extrapolate_k_realtime, k_c, k_curve

pytestmark = pytest.mark.integration

# fractional k(t) for t = 8..14 at target 1e-38
EXPECTED_K = {8: 25.61, 9: 29.62, 10: 34.26, 11: 39.29, 12: 44.42, 13: 49.44, 14: 54.22}


@pytest.fixture(scope='module')
def case_study_curve():
    params = GameParams(p=8.15e-5, h=0.0, gamma=0.05)
    return k_curve(sorted(EXPECTED_K), params, RationalCaseStudy(scale=1000.0), target=1e-38)


class TestCaseStudyCurve:
    """Test the k(t) curve of the CodeRed case study"""

    @pytest.mark.parametrize('t', sorted(EXPECTED_K))
    def test_k_of_t(self, case_study_curve, t):
        point = next(point for point in case_study_curve if point.t == t)
        assert point.k_frac == pytest.approx(EXPECTED_K[t], rel=0.03)

    def test_curve_increases(self, case_study_curve):
        values = [point.k_frac for point in case_study_curve]
        assert values == sorted(values)

    def test_increments_shrink_past_knee(self, case_study_curve):
        """k(t+1) - k(t) decreases for t >= 11"""
        late = np.array([point.k_frac for point in case_study_curve if point.t >= 11])

        increments = np.diff(late)

        assert len(increments) == 3
        assert np.all(np.diff(increments) <= 0.05)

    def test_month_window(self, case_study_curve):
        """One month of scanning at 10188 probes per node per hour"""
        assert extrapolate_k_realtime(case_study_curve) == pytest.approx(130.0, abs=10.0)


class TestContainment:
    """Test the containment parameter for direct alpha rates"""

    @pytest.mark.parametrize('a', [0.9, 1.0])
    def test_kc_is_small(self, a):
        result = k_c(10000, GameParams(p=1.0, h=0.0, gamma=0.5), DirectAlpha(a=a))
        assert result.k <= 20

    def test_log_wbar_falls_with_k(self):
        """w-bar decays in k at a fixed budget"""
        curve = wbar_curve(50, 1024, GameParams(p=1.0, h=0.0, gamma=0.5), PowerLaw())

        values = np.array([w for _, w in curve])[9:]

        assert np.all(np.diff(values) <= 0.0)
        assert values[-1] < values[0]
        positive = values > 0.0
        slope = np.polyfit(np.arange(10, 51)[positive], np.log(values[positive]), 1)[0]
        assert slope < 0.0
