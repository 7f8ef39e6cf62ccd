"""
Pytest configuration and shared fixtures for the containment engine tests
"""
import pytest
from hypothesis import settings as hypothesis_settings

from apps.containment.chain import GameParams
from apps.containment.models import ExperimentRun
from apps.containment.rates import Delayed, PowerLaw, RationalCaseStudy, Stagnating

hypothesis_settings.register_profile('containment', max_examples=40, deadline=None)
hypothesis_settings.load_profile('containment')


@pytest.fixture
def half_params():
    """p = 1, h = 0, gamma = 0.5"""
    return GameParams(p=1.0, h=0.0, gamma=0.5)


@pytest.fixture
def mixed_params():
    """A setting where every transition has positive probability"""
    return GameParams(p=0.6, h=0.2, gamma=0.3)


@pytest.fixture
def case_study_params():
    """Worm case-study parameters for the k(t) table"""
    return GameParams(p=8.15e-5, h=0.0, gamma=0.05)


@pytest.fixture
def powerlaw_rate():
    """f(l) = 1 - 1/(l+2)^2"""
    return PowerLaw(d=1.0, a=2.0, offset=2.0)


@pytest.fixture
def small_rates():
    """One rate of each f-based form, sized for the exact oracles"""
    return [
        Stagnating(tau=0.4),
        PowerLaw(d=1.0, a=2.0, offset=2.0),
        RationalCaseStudy(scale=3.0),
        Delayed(lstar=2, inner=PowerLaw(d=1.0, a=2.0, offset=2.0)),
    ]


@pytest.fixture
def create_run(db):
    """Factory fixture to create ExperimentRun records"""
    def make_run(kind='wbar', **kwargs):
        return ExperimentRun.objects.create(
            kind=kind,
            label=kwargs.get('label', ''),
            parameters=kwargs.get('parameters', {'k': 3, 'tbud': 10}),
        )
    return make_run

