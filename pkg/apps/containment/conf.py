"""
Access to the CONTAINMENT settings dict with built-in fallbacks.

The math modules import without a configured Django project (e.g. inside
worker processes or plain scripts), so every lookup falls back to DEFAULTS.
"""
import os

DEFAULTS = {
    'MC_THREADS': os.cpu_count() or 1,
    'MC_BACKEND': 'local',
    'MC_CHUNK_SIZE': 256,
    'RNG_ALGORITHM': 'PCG64',
    'KC_CEILING_FACTOR': 10,
    'ORACLE_GUARD': 10**8,
    'ENUMERATION_MAX_K': 4,
    'ENUMERATION_MAX_TBUD': 10,
    'SIM_MAX_STEPS': 10**7,
    'SIMPSON_RTOL': 1e-8,
}


def get_setting(name):
    """
    Look up a containment setting.

    Args:
        name: Key of the CONTAINMENT settings dict

    Returns:
        The configured value, or the built-in default when Django settings
        are not configured or the key is absent.
    """
    try:
        from django.conf import settings
        if settings.configured:
            return getattr(settings, 'CONTAINMENT', {}).get(name, DEFAULTS[name])
    except ImportError:
        pass
    return DEFAULTS[name]
