"""
Unit tests for the w-bar dynamic program.
"""
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from apps.containment.chain import GameParams
from apps.containment.dp import wbar, wbar_curve, wbar_table
from apps.containment.exceptions import InvalidSize
from apps.containment.oracle import no_selfloop_enumeration
from apps.containment.rates import DirectAlpha, Stagnating
from tests.strategies import f_rates, game_params

pytestmark = pytest.mark.dp


class TestWbar:
    """Test w-bar(k, tbud)"""

    def test_single_step_certain_progress(self, half_params):
        """alpha(0) = 1 makes the first move progress for sure"""
        assert wbar(1, 10, half_params, DirectAlpha(a=1.0)) == pytest.approx(1.0)

    def test_hand_computed_value(self, half_params):
        """k=2, tbud=2 with alpha = (1, 0.5): 0.5 + 0.5 * 0.5"""
        assert wbar(2, 2, half_params, DirectAlpha(a=1.0)) == pytest.approx(0.75)

    def test_geometric_decay_at_one_level(self, half_params):
        """With alpha = 1 and one level, reaching k needs k - 1 horizontal moves"""
        curve = wbar_curve(6, 1, half_params, Stagnating(tau=1.0))

        assert [w for _, w in curve] == pytest.approx([0.5 ** (k - 1) for k in range(1, 7)])

    @pytest.mark.parametrize('k,tbud', [(0, 5), (2, 0), (1.5, 4)])
    def test_invalid_sizes(self, half_params, k, tbud):
        with pytest.raises(InvalidSize):
            wbar(k, tbud, half_params, DirectAlpha(a=1.0))

    def test_curve_matches_single_evaluations(self, mixed_params, powerlaw_rate):
        """One DP pass gives w-bar for every k up to k_max"""
        curve = wbar_curve(5, 40, mixed_params, powerlaw_rate)

        for k, value in curve:
            assert value == pytest.approx(wbar(k, 40, mixed_params, powerlaw_rate), abs=1e-15)

    def test_dense_table_agrees(self, mixed_params, powerlaw_rate):
        """The rolled DP and the dense table agree"""
        grid = wbar_table(6, 30, mixed_params, powerlaw_rate)

        assert grid.pr.shape == (6, 30)
        assert grid.wbar == pytest.approx(wbar(6, 30, mixed_params, powerlaw_rate), abs=1e-13)
        assert np.all(grid.column_mass() >= 0.0)

    def test_enumeration_agrees(self, small_rates):
        """Walking every reduced-chain path gives the same w-bar"""
        params = GameParams(p=0.8, h=0.1, gamma=0.4)
        for rate in small_rates:
            for k in (1, 2, 3):
                for tbud in (1, 3, 6):
                    exact = no_selfloop_enumeration(k, tbud, params, rate)
                    assert wbar(k, tbud, params, rate) == pytest.approx(exact, abs=1e-12)


class TestWbarMonotonicity:
    """Test the shape of w-bar"""

    @given(params=game_params(), rate=f_rates(), tbud=st.integers(min_value=1, max_value=60))
    def test_nonincreasing_in_k(self, params, rate, tbud):
        values = [w for _, w in wbar_curve(8, tbud, params, rate)]
        assert all(a >= b - 1e-15 for a, b in zip(values, values[1:]))

    @given(params=game_params(), rate=f_rates(), k=st.integers(min_value=1, max_value=6))
    def test_nondecreasing_in_tbud(self, params, rate, k):
        values = [wbar(k, tbud, params, rate) for tbud in range(1, 12)]
        assert all(a <= b + 1e-15 for a, b in zip(values, values[1:]))

    def test_probability_range(self, half_params):
        values = [w for _, w in wbar_curve(20, 500, half_params, DirectAlpha(a=0.9))]
        assert all(0.0 <= w <= 1.0 for w in values)
