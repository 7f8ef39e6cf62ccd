"""Hypothesis strategies shared by the property tests"""
from hypothesis import strategies as st

from apps.containment.chain import GameParams
from apps.containment.rates import PowerLaw, RationalCaseStudy, Stagnating


@st.composite
def game_params(draw, min_gamma=0.05, max_gamma=0.95):
    """Valid GameParams with gamma bounded away from 0 and 1"""
    p = draw(st.floats(min_value=0.05, max_value=1.0))
    h = draw(st.floats(min_value=0.0, max_value=1.0 - p))
    gamma = draw(st.floats(min_value=min_gamma, max_value=max_gamma))
    return GameParams(p=p, h=h, gamma=gamma)


@st.composite
def f_rates(draw):
    """f-based learning rates"""
    choice = draw(st.integers(min_value=0, max_value=2))
    if choice == 0:
        return Stagnating(tau=draw(st.floats(min_value=0.05, max_value=1.0)))
    if choice == 1:
        return PowerLaw(d=draw(st.floats(min_value=0.1, max_value=4.0)), a=2.0, offset=2.0)
    return RationalCaseStudy(scale=draw(st.floats(min_value=0.5, max_value=50.0)))
