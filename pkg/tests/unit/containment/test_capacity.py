"""
Unit tests for capacity regions.
"""
import math

import pytest

from apps.containment.capacity import (
    CapacityRegion, PiecewiseRegion, compose, cost_of_budget, delayed_z, k_of,
    region_delayed, region_from_dict, region_from_json, region_powerlaw, region_to_json,
    s_of, tbud_from_realtime,
)
from apps.containment.chain import GameParams
from apps.containment.exceptions import ConfigInvalid, InfeasibleRegion, InvalidRegime, InvalidZ

pytestmark = pytest.mark.capacity

Q = 1.0 / math.log(4.0)


@pytest.fixture
def powerlaw_region():
    """gamma = p = d = 0.5"""
    return region_powerlaw(0.5, 0.5, 0.5)


class TestPowerlawRegion:
    """Test the power-law capacity region"""

    def test_components(self, powerlaw_region):
        """q = 1/ln 4 gives delta=(0, 0.5), mu=(ln2, 1.5), xi=(-1, -0.9427)"""
        assert powerlaw_region.delta == pytest.approx((0.0, 0.5))
        assert powerlaw_region.mu == pytest.approx((math.log(2.0), 1.5))
        assert powerlaw_region.xi == pytest.approx((-1.0, -0.9427), abs=1e-4)

    def test_derived_variant(self):
        """The derived constant is -q(1/(1-gamma) + ln(1/(1-gamma)))"""
        region = region_powerlaw(0.5, 0.5, 0.5, variant='derived')

        assert region.xi[1] == pytest.approx(-Q * (2.0 + math.log(2.0)))
        assert region.xi[1] < region_powerlaw(0.5, 0.5, 0.5).xi[1]

    @pytest.mark.parametrize('gamma,p,d', [(0.0, 0.5, 0.5), (1.0, 0.5, 0.5), (0.1, 1.0, 1.0)])
    def test_invalid_regime(self, gamma, p, d):
        with pytest.raises(InvalidRegime):
            region_powerlaw(gamma, p, d)

    def test_unknown_variant(self):
        with pytest.raises(ConfigInvalid):
            region_powerlaw(0.5, 0.5, 0.5, variant='other')


class TestSAndK:
    """Test s(k, t) and k(s, t)"""

    def test_s_of(self, powerlaw_region):
        """The second component binds: s = (k + xi2 - t mu2) / delta2"""
        expected = (10.0 + powerlaw_region.xi[1] - 2 * 1.5) / 0.5

        assert s_of(powerlaw_region, 10, 2) == pytest.approx(expected)
        assert powerlaw_region.contains(expected, 10, 2)

    def test_k_of_inverts_s_of(self, powerlaw_region):
        s = s_of(powerlaw_region, 10, 2)
        assert k_of(powerlaw_region, s, 2) == pytest.approx(10.0)

    def test_infeasible(self, powerlaw_region):
        """t mu1 > k + xi1 violates the delta = 0 component"""
        with pytest.raises(InfeasibleRegion):
            s_of(powerlaw_region, 1, 10)

    def test_negative_delta_is_lower_bound(self):
        region = CapacityRegion(delta=(1.0, -1.0), mu=(0.0, 0.0), xi=(0.0, 0.0))

        assert s_of(region, 2, 0) == pytest.approx(2.0)
        with pytest.raises(InfeasibleRegion):
            s_of(CapacityRegion(delta=(1.0, -1.0), mu=(0.0, 0.0), xi=(0.0, -5.0)), 2, 0)

    def test_unbounded_s(self):
        region = CapacityRegion(delta=(0.0,), mu=(0.0,), xi=(0.0,))
        assert s_of(region, 1, 1) == math.inf

    def test_negative_s_clamped(self, powerlaw_region):
        """A maximum below zero reports s = 0"""
        assert s_of(powerlaw_region, 2, 1) == 0.0

    def test_mismatched_lengths(self):
        with pytest.raises(ConfigInvalid):
            CapacityRegion(delta=(0.0, 1.0), mu=(0.0,), xi=(0.0,))


class TestDelayedRegion:
    """Test the two-regime delayed region"""

    def test_z(self):
        params = GameParams(p=0.2, h=0.1, gamma=0.3)
        assert delayed_z(params) == pytest.approx(1.0 / math.log(0.51 / 0.14))

    def test_z_without_escape(self):
        assert delayed_z(GameParams(p=0.0, h=0.5, gamma=0.3)) == 0.0

    def test_invalid_z(self):
        """gamma = 0, h = 0 makes the log argument exactly 1"""
        with pytest.raises(InvalidZ):
            delayed_z(GameParams(p=0.5, h=0.0, gamma=0.0))

    def test_regimes(self, powerlaw_region):
        params = GameParams(p=0.2, h=0.1, gamma=0.3)
        z = delayed_z(params)
        ln2 = math.log(2.0)

        region = region_delayed(powerlaw_region, 5, params)

        assert isinstance(region, PiecewiseRegion)
        assert region.threshold == pytest.approx(1.0 / (z * ln2) - math.log(10.0) / ln2)
        assert region.high.delta == pytest.approx(tuple(d + 5 * ln2 * z for d in powerlaw_region.delta))
        assert region.low.xi == pytest.approx(
            tuple(x - d - 6.0 for x, d in zip(powerlaw_region.xi, powerlaw_region.delta)))
        assert region.region_for(region.threshold + 1) is region.high
        assert region.region_for(region.threshold - 1) is region.low

    def test_variants_differ_in_high_shift(self, powerlaw_region):
        params = GameParams(p=0.2, h=0.1, gamma=0.3)
        z = delayed_z(params)

        stated = region_delayed(powerlaw_region, 5, params)
        derived = region_delayed(powerlaw_region, 5, params, variant='derived')

        gap = stated.high.xi[0] - derived.high.xi[0]
        assert gap == pytest.approx(2.0 * 5 * math.log(10.0) * z)
        assert stated.low == derived.low

    def test_invalid_lstar(self, powerlaw_region):
        with pytest.raises(InvalidRegime):
            region_delayed(powerlaw_region, 0, GameParams(p=0.2, gamma=0.3))


class TestComposition:
    """Test simultaneous games and budget conversions"""

    def test_prob_bound(self, powerlaw_region):
        """a = 4, s = 3: 1 - (1 - 2^-3/4)^4"""
        _, prob = compose([powerlaw_region] * 4, 3.0, 1.0)
        assert prob == pytest.approx(0.11926, abs=1e-5)

    def test_k_total_uses_shifted_s(self, powerlaw_region):
        k_total, _ = compose([powerlaw_region] * 4, 3.0, 1.0)
        assert k_total == pytest.approx(4 * k_of(powerlaw_region, 3.0 + math.log(4.0), 1.0))

    def test_single_game(self, powerlaw_region):
        k_total, prob = compose([powerlaw_region], 3.0, 1.0)
        assert k_total == pytest.approx(k_of(powerlaw_region, 3.0, 1.0))
        assert prob == pytest.approx(2.0 ** -3)

    def test_empty(self):
        with pytest.raises(ConfigInvalid):
            compose([], 1.0, 1.0)

    def test_tbud_from_realtime(self):
        assert tbud_from_realtime(3600, 10, 1) == 36000
        assert tbud_from_realtime(1, 1, 3) == 1

    def test_cost_of_budget(self):
        assert cost_of_budget(1000, 0.05) == pytest.approx(50.0)

    def test_realtime_needs_positive_inputs(self):
        with pytest.raises(ConfigInvalid):
            tbud_from_realtime(0, 10, 1)


class TestRegionJson:
    """Test region serialization"""

    def test_json_round_trip(self, powerlaw_region):
        params = GameParams(p=0.2, h=0.1, gamma=0.3)
        piecewise = region_delayed(powerlaw_region, 5, params)

        assert region_from_json(region_to_json(powerlaw_region)) == powerlaw_region
        assert region_from_json(region_to_json(piecewise)) == piecewise

    def test_malformed(self):
        with pytest.raises(ConfigInvalid):
            region_from_dict({'delta': [1.0]})
        with pytest.raises(ConfigInvalid):
            region_from_json('{not json')
