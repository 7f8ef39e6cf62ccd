"""
Named scenario presets.

codered1v2 is the CodeRed v2 outbreak: 2^32 addresses, 350,000 vulnerable
hosts, 10,188 probes per infected host per hour.
"""
from dataclasses import dataclass, field
from typing import Optional

from .chain import GameParams
from .exceptions import ConfigInvalid
from .rates import LearningRate, RationalCaseStudy
from .simulators import MalwareConfig, MTDConfig


@dataclass(frozen=True)
class Preset:
    name: str
    n: int
    k_vuln: int
    scan_rate_per_hour: float
    p: float
    gamma: float
    rate: LearningRate
    h: float = 0.0
    dropout_theta: float = 0.01
    max_hours: Optional[float] = None
    initial_infected: int = 1
    level_trace_stride: int = 1
    description: str = field(default='', compare=False)

    def params(self, **overrides):
        values = {'p': self.p, 'h': self.h, 'gamma': self.gamma}
        values.update(overrides)
        return GameParams(**values)

    def malware_config(self, **overrides):
        values = {
            'n': self.n,
            'k_vuln': self.k_vuln,
            'k_target': self.k_vuln,
            'gamma': self.gamma,
            'rate': self.rate,
            'dropout_theta': self.dropout_theta,
            'max_steps': 10**10,
            'initial_infected': self.initial_infected,
            'scan_rate_per_hour': self.scan_rate_per_hour,
            'max_hours': self.max_hours,
            'level_trace_stride': self.level_trace_stride,
        }
        values.update(overrides)
        return MalwareConfig(**values)

    def mtd_config(self, **overrides):
        values = {
            'n': self.n,
            'k_vuln': self.k_vuln,
            'k_target': self.k_vuln,
            'gamma': self.gamma,
            'h': self.h,
        }
        values.update(overrides)
        return MTDConfig(**values)

    def to_dict(self):
        return {
            'name': self.name,
            'n': self.n,
            'k_vuln': self.k_vuln,
            'scan_rate_per_hour': self.scan_rate_per_hour,
            'p': self.p,
            'h': self.h,
            'gamma': self.gamma,
            'dropout_theta': self.dropout_theta,
            'max_hours': self.max_hours,
        }


PRESETS = {
    'codered1v2': Preset(
        name='codered1v2',
        n=2**32,
        k_vuln=350000,
        scan_rate_per_hour=10188.0,
        p=8.15e-5,
        gamma=0.01,
        rate=RationalCaseStudy(scale=10000.0),
        dropout_theta=0.01,
        max_hours=30.0,
        level_trace_stride=1000,
        description='CodeRed v2 random-scanning worm, July 2001',
    ),
}


def get_preset(name):
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigInvalid(f"unknown preset '{name}', choose from {sorted(PRESETS)}") from None
