"""
Unit tests for config serializers and payloads.
"""
import pytest

from apps.containment.capacity import PiecewiseRegion, region_delayed, region_powerlaw
from apps.containment.chain import GameParams
from apps.containment.exceptions import ConfigInvalid
from apps.containment.rates import Delayed, PowerLaw, RationalCaseStudy, Stagnating
from apps.containment.serializers import (
    CONFIG_SERIALIZERS, ChainConfigSerializer, ExperimentRunSerializer, GameParamsSerializer,
    MalwareConfigSerializer, MTDConfigSerializer, RegionSerializer, RunConfigSerializer,
    config_to_payload, validated,
)
from apps.containment.simulators import ChainConfig, MalwareConfig, MTDConfig

pytestmark = pytest.mark.simulators


class TestGameParamsSerializer:
    """Test GameParamsSerializer"""

    def test_defaults(self):
        assert validated(GameParamsSerializer, {}) == GameParams()

    def test_valid(self):
        params = validated(GameParamsSerializer, {'p': 0.6, 'h': 0.2, 'gamma': 0.3})
        assert params == GameParams(p=0.6, h=0.2, gamma=0.3)

    def test_p_plus_h_above_one(self):
        with pytest.raises(ConfigInvalid) as excinfo:
            validated(GameParamsSerializer, {'p': 0.8, 'h': 0.5})

        assert excinfo.value.code == 'config-invalid'

    def test_out_of_range(self):
        with pytest.raises(ConfigInvalid) as excinfo:
            validated(GameParamsSerializer, {'gamma': 1.5})

        assert 'gamma' in excinfo.value.context['errors']


class TestConfigPayloads:
    """Test that config payloads rebuild the same config"""

    def test_chain(self):
        config = ChainConfig(k=3, tbud=12, params=GameParams(p=0.6, h=0.2, gamma=0.3),
                             rate=Delayed(lstar=2, inner=PowerLaw()))

        rebuilt = validated(ChainConfigSerializer, config_to_payload(config))

        assert rebuilt == config

    def test_malware(self):
        config = MalwareConfig(n=5000, k_vuln=300, h_count=50, k_target=40, gamma=0.05,
                               rate=RationalCaseStudy(scale=10000.0), scan_rate_per_hour=100.0,
                               max_hours=2.0)

        rebuilt = validated(MalwareConfigSerializer, config_to_payload(config))

        assert rebuilt == config

    def test_mtd(self):
        config = MTDConfig(n=1000, k_vuln=200, h_count=100, k_target=27, gamma=0.3, lstar=5)

        rebuilt = validated(MTDConfigSerializer, config_to_payload(config))

        assert rebuilt == config
        assert rebuilt.h == pytest.approx(0.1)

    def test_registry(self):
        assert set(CONFIG_SERIALIZERS) == {'malware', 'mtd', 'chain'}


class TestConfigValidation:
    """Test rejection of invalid configs"""

    def test_chain_params_default(self):
        config = validated(ChainConfigSerializer, {'k': 2, 'tbud': 5, 'rate': 'stagnating:tau=0.5'})

        assert config.params == GameParams()
        assert config.rate == Stagnating(tau=0.5)

    def test_bad_rate_spec(self):
        with pytest.raises(ConfigInvalid) as excinfo:
            validated(ChainConfigSerializer, {'k': 2, 'tbud': 5, 'rate': 'zigzag:x=1'})

        assert 'rate' in excinfo.value.context['errors']

    def test_malware_default_rate(self):
        config = validated(MalwareConfigSerializer, {'n': 100, 'k_vuln': 10})
        assert config.rate == RationalCaseStudy(scale=10000.0)

    @pytest.mark.parametrize('data', [
        {'n': 10, 'k_vuln': 8, 'h_count': 5},
        {'n': 10, 'k_vuln': 5, 'k_target': 6},
        {'n': 10, 'k_vuln': 5, 'dropout_theta': 0.0},
        {'n': 10, 'k_vuln': 5, 'strategy': 'sequential'},
    ])
    def test_invalid_malware(self, data):
        with pytest.raises(ConfigInvalid):
            validated(MalwareConfigSerializer, data)

    def test_domain_error_propagates(self):
        """Cross-field checks of the config class still raise ConfigInvalid"""
        with pytest.raises(ConfigInvalid):
            validated(MalwareConfigSerializer, {'n': 100, 'k_vuln': 10, 'max_hours': 2.0})


class TestRegionSerializer:
    """Test RegionSerializer"""

    def test_flat(self):
        region = region_powerlaw(0.5, 0.5, 0.5)
        assert validated(RegionSerializer, region.to_dict()) == region

    def test_piecewise(self):
        params = GameParams(p=0.2, h=0.1, gamma=0.3)
        region = region_delayed(region_powerlaw(0.5, 0.5, 0.5), 5, params)

        rebuilt = validated(RegionSerializer, region.to_dict())

        assert isinstance(rebuilt, PiecewiseRegion)
        assert rebuilt == region

    def test_length_mismatch(self):
        with pytest.raises(ConfigInvalid):
            validated(RegionSerializer, {'delta': [0.0, 1.0], 'mu': [1.0], 'xi': [0.0]})

    def test_incomplete(self):
        with pytest.raises(ConfigInvalid):
            validated(RegionSerializer, {'delta': [0.0]})


class TestRunConfigSerializer:
    """Test RunConfigSerializer"""

    def test_valid(self):
        data = {'params': 'p=0.5,gamma=0.3', 'seed': 7, 'format': 'json', 'variant': 'derived'}
        assert validated(RunConfigSerializer, data) == data

    @pytest.mark.parametrize('data', [
        {'format': 'xml'},
        {'variant': 'other'},
        {'seed': -1},
        {'preset': 'slammer'},
    ])
    def test_invalid(self, data):
        with pytest.raises(ConfigInvalid):
            validated(RunConfigSerializer, data)


@pytest.mark.django_db
class TestExperimentRunSerializer:
    """Test ExperimentRunSerializer"""

    def test_fields(self, create_run):
        run = create_run(kind='kc')

        data = ExperimentRunSerializer(run).data

        assert data['kind'] == 'kc'
        assert data['kind_display'] == 'Containment parameter'
        assert data['status_display'] == 'Queued'
        assert data['parameters'] == {'k': 3, 'tbud': 10}
