import dataclasses

from rest_framework import serializers

from .capacity import region_from_dict
from .chain import GameParams
from .exceptions import ConfigInvalid, ContainmentError
from .models import ExperimentRun
from .presets import PRESETS
from .rates import parse_rate, rate_to_spec
from .simulators import STRATEGIES, ChainConfig, MalwareConfig, MTDConfig


def validated(serializer_class, data):
    """
    Run a serializer over plain data and return the built object.

    ValidationErrors become ConfigInvalid with the field messages; domain
    errors raised while building the object propagate unchanged.
    """
    serializer = serializer_class(data=data)
    if not serializer.is_valid():
        raise ConfigInvalid(f"invalid configuration: {dict(serializer.errors)}", errors=serializer.errors)
    return serializer.save()


def config_to_payload(config):
    """Plain-JSON form of a simulator config, readable by the matching serializer."""
    data = {f.name: getattr(config, f.name) for f in dataclasses.fields(config)}
    if 'rate' in data:
        data['rate'] = rate_to_spec(data['rate'])
    if 'params' in data:
        data['params'] = data['params'].to_dict()
    return data


class RateField(serializers.CharField):
    """Learning rate in the text grammar, e.g. 'powerlaw:d=1,a=2'"""

    def to_internal_value(self, data):
        text = super().to_internal_value(data)
        try:
            return parse_rate(text)
        except ContainmentError as exc:
            raise serializers.ValidationError(str(exc))


class GameParamsSerializer(serializers.Serializer):
    """Serializer for GameParams"""

    p = serializers.FloatField(min_value=0.0, max_value=1.0, default=1.0)
    h = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.0)
    gamma = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.5)

    def validate(self, attrs):
        if attrs['p'] + attrs['h'] > 1.0 + 1e-12:
            raise serializers.ValidationError("p + h cannot exceed 1.")
        return attrs

    def create(self, validated_data):
        return GameParams(**validated_data)


class _PopulationSerializer(serializers.Serializer):
    n = serializers.IntegerField(min_value=1)
    k_vuln = serializers.IntegerField(min_value=0)
    h_count = serializers.IntegerField(min_value=0, default=0)
    k_target = serializers.IntegerField(min_value=1, default=1)
    strategy = serializers.ChoiceField(choices=STRATEGIES, default='uniform-random')
    gamma = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.0)
    max_steps = serializers.IntegerField(min_value=1, required=False)

    def validate(self, attrs):
        if attrs['k_vuln'] + attrs['h_count'] > attrs['n']:
            raise serializers.ValidationError("k_vuln + h_count cannot exceed n.")
        if attrs['k_target'] > attrs['k_vuln']:
            raise serializers.ValidationError("k_target cannot exceed k_vuln.")
        return attrs


class MalwareConfigSerializer(_PopulationSerializer):
    """Serializer for MalwareConfig"""

    rate = RateField(required=False)
    dropout_theta = serializers.FloatField(min_value=0.0, max_value=1.0, default=0.01)
    initial_infected = serializers.IntegerField(min_value=1, default=1)
    scan_rate_per_hour = serializers.FloatField(min_value=0.0, required=False, allow_null=True)
    max_hours = serializers.FloatField(min_value=0.0, required=False, allow_null=True)
    level_trace_stride = serializers.IntegerField(min_value=1, default=1)

    def validate_dropout_theta(self, value):
        if value == 0.0:
            raise serializers.ValidationError("dropout_theta must be positive.")
        return value

    def create(self, validated_data):
        return MalwareConfig(**validated_data)


class MTDConfigSerializer(_PopulationSerializer):
    """Serializer for MTDConfig"""

    h = serializers.FloatField(min_value=0.0, max_value=1.0, required=False, allow_null=True)
    lstar = serializers.IntegerField(min_value=1, default=1)

    def create(self, validated_data):
        return MTDConfig(**validated_data)


class ChainConfigSerializer(serializers.Serializer):
    """Serializer for ChainConfig"""

    k = serializers.IntegerField(min_value=1)
    tbud = serializers.IntegerField(min_value=0)
    params = GameParamsSerializer(default=dict)
    rate = RateField()

    def create(self, validated_data):
        params = GameParams(**validated_data.pop('params'))
        return ChainConfig(params=params, **validated_data)


class RegionSerializer(serializers.Serializer):
    """Capacity region in its JSON form; `threshold`, `high` and `low` make it piecewise"""

    delta = serializers.ListField(child=serializers.FloatField(), required=False, min_length=1)
    mu = serializers.ListField(child=serializers.FloatField(), required=False, min_length=1)
    xi = serializers.ListField(child=serializers.FloatField(), required=False, min_length=1)
    threshold = serializers.FloatField(required=False)
    high = serializers.DictField(required=False)
    low = serializers.DictField(required=False)

    def validate(self, attrs):
        flat = all(key in attrs for key in ('delta', 'mu', 'xi'))
        piecewise = all(key in attrs for key in ('threshold', 'high', 'low'))
        if not flat and not piecewise:
            raise serializers.ValidationError("A region needs delta/mu/xi or threshold/high/low.")
        if flat and not len(attrs['delta']) == len(attrs['mu']) == len(attrs['xi']):
            raise serializers.ValidationError("delta, mu and xi must have the same length.")
        return attrs

    def create(self, validated_data):
        return region_from_dict(validated_data)


class RunConfigSerializer(serializers.Serializer):
    """
    JSON run configuration mirroring the global command flags. Values given
    on the command line win over the file.
    """

    params = serializers.CharField(required=False)
    rate = serializers.CharField(required=False)
    preset = serializers.ChoiceField(choices=sorted(PRESETS), required=False)
    seed = serializers.IntegerField(min_value=0, required=False)
    format = serializers.ChoiceField(choices=['csv', 'json'], required=False)
    out = serializers.CharField(required=False)
    variant = serializers.ChoiceField(choices=['stated', 'derived'], required=False)
    record = serializers.BooleanField(required=False)

    def create(self, validated_data):
        return dict(validated_data)


class ExperimentRunSerializer(serializers.ModelSerializer):
    """Serializer for ExperimentRun model"""

    kind_display = serializers.CharField(source='get_kind_display', read_only=True)
    status_display = serializers.CharField(source='get_status_display', read_only=True)

    class Meta:
        model = ExperimentRun
        fields = [
            'id', 'kind', 'kind_display', 'status', 'status_display', 'progress',
            'parameters', 'result', 'celery_task_id', 'error_message',
            'processing_time_seconds', 'created_at', 'started_at', 'completed_at'
        ]
        read_only_fields = fields


CONFIG_SERIALIZERS = {
    'malware': MalwareConfigSerializer,
    'mtd': MTDConfigSerializer,
    'chain': ChainConfigSerializer,
}
