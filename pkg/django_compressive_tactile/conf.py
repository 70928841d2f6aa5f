"""
Configuration settings for django_compressive_tactile.

Settings are read from Django's settings.py with the DJANGO_COMPRESSIVE_TACTILE_
prefix. When Django settings have not been configured (plain library use),
every getter returns its default.
"""
from __future__ import annotations

import os

import psutil
from django.conf import settings

PREFIX = "DJANGO_COMPRESSIVE_TACTILE_"

THREADS_ENV_VAR = "TACTILE_THREADS"

DEFAULT_NEIGHBOR_ORDER = ("E", "S", "W", "N", "SE", "SW", "NW", "NE")


def _setting(name: str, default):
    if not settings.configured:
        return default
    return getattr(settings, PREFIX + name, default)


def get_sample_rate_hz() -> float:
    """
    Returns the ADC sample rate that drives the measurement clock.

    Configure in settings.py:
        DJANGO_COMPRESSIVE_TACTILE_SAMPLE_RATE_HZ = 55936

    Default: 55936 samples per second (one pixel read per sample).
    """
    return float(_setting("SAMPLE_RATE_HZ", 55936.0))


def get_full_scale() -> float:
    """
    Returns the full-scale pressure value in ADC counts.

    Default: 4095.0 (12-bit converter)
    """
    return float(_setting("FULL_SCALE", 4095.0))


def get_ns_threshold() -> float:
    """
    Returns the default neighbor-search threshold for binary sampling.

    Configure in settings.py:
        DJANGO_COMPRESSIVE_TACTILE_NS_THRESHOLD_FRACTION = 0.05

    The threshold is the fraction multiplied by ``get_full_scale()``.
    """
    return float(_setting("NS_THRESHOLD_FRACTION", 0.05)) * get_full_scale()


def get_active_threshold() -> float:
    """
    Returns the pressure above which a pixel counts as active during patch extraction.

    Default: 2% of full scale
    """
    return float(_setting("ACTIVE_THRESHOLD_FRACTION", 0.02)) * get_full_scale()


def get_contact_threshold() -> float:
    """
    Returns the pressure above which a measurement counts as contact.

    Default: 2% of full scale
    """
    return float(_setting("CONTACT_THRESHOLD_FRACTION", 0.02)) * get_full_scale()


def get_coherence_max() -> float:
    """
    Returns the default mu_max used when pruning coherent training patches.

    Default: 0.99
    """
    return float(_setting("COHERENCE_MAX", 0.99))


def get_support_threshold_fraction() -> float:
    """
    Returns the fraction of the frame maximum used to binarize support.

    Default: 0.10
    """
    return float(_setting("SUPPORT_THRESHOLD_FRACTION", 0.10))


def get_src_frames_per_class() -> int:
    """
    Returns the number of key frames stored per class in an SRC library.

    Default: 5
    """
    return int(_setting("SRC_FRAMES_PER_CLASS", 5))


def get_neighbor_order() -> tuple[str, ...]:
    """
    Returns the compass order in which binary sampling visits the neighbors of a hot pixel.

    Configure in settings.py:
        DJANGO_COMPRESSIVE_TACTILE_NEIGHBOR_ORDER = ("N", "E", "S", "W", "NE", "SE", "SW", "NW")

    Default: ("E", "S", "W", "N", "SE", "SW", "NW", "NE")
    """
    return tuple(_setting("NEIGHBOR_ORDER", DEFAULT_NEIGHBOR_ORDER))


def get_thread_count() -> int:
    """
    Returns the number of worker threads used for patch-parallel work.

    Resolution order: DJANGO_COMPRESSIVE_TACTILE_THREADS, then the
    TACTILE_THREADS environment variable, then 1. The value "auto" resolves to
    the number of physical cores reported by psutil.
    """
    value = _setting("THREADS", None)
    if value is None:
        value = os.environ.get(THREADS_ENV_VAR, "1")
    if str(value).strip().lower() == "auto":
        return psutil.cpu_count(logical=False) or 1
    try:
        threads = int(value)
    except (TypeError, ValueError):
        return 1
    return max(1, threads)
