"""
Benchmark campaigns.

A campaign sweeps the measurement level M over a set of sampling schemes on
synthetic scenes and writes one CSV per study:

    fps_vs_m.csv
        m, frame_time_us, fps
    support_accuracy_vs_m.csv
        scheme, m, method, frames, support_accuracy, support_iou
    classification_accuracy_vs_m.csv
        scheme, m, trials, accuracy
    contact_frames_vs_m.csv
        scheme, m, phases, expected_frames, mean_detected_frames, force_smoothness
    rapid_accuracy_vs_window.csv
        scheme, m, window_ms, trials, accuracy, mean_frames_in_window

Every value comes from seeded generators, so a rerun with the same campaign
writes byte-identical files. A campaign without M values writes header-only
files.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from django_compressive_tactile.analytics import (
    detected_frame_count,
    force_smoothness,
    support_accuracy,
    support_iou,
)
from django_compressive_tactile.classification import (
    SrcLibrary,
    build_src_library,
    rapid_classify,
    src_classify,
)
from django_compressive_tactile.config import RunConfig
from django_compressive_tactile.core import Dictionary, Scheme
from django_compressive_tactile.exceptions import ConfigError
from django_compressive_tactile.reconstruction import (
    ReconstructionParams,
    interpolate_baseline,
    reconstruct_frame,
)
from django_compressive_tactile.sampling import (
    MeasurementClock,
    SamplingConfig,
    frame_rate,
    sample_frame,
    sample_stream,
)
from django_compressive_tactile.simulator import (
    MotionKind,
    MotionProfile,
    Phantom,
    ShapeKind,
    expected_contact_frames,
    render_phantom,
    scene_source,
    standard_phantoms,
)

logger = logging.getLogger(__name__)

FPS_FIELDS = ["m", "frame_time_us", "fps"]
SUPPORT_FIELDS = ["scheme", "m", "method", "frames", "support_accuracy", "support_iou"]
CLASSIFICATION_FIELDS = ["scheme", "m", "trials", "accuracy"]
CONTACT_FIELDS = ["scheme", "m", "phases", "expected_frames", "mean_detected_frames", "force_smoothness"]
RAPID_FIELDS = ["scheme", "m", "window_ms", "trials", "accuracy", "mean_frames_in_window"]

HOLD_US = 10_000_000
LIBRARY_OFFSETS = (-1.0, 0.0, 1.0)

# Generator streams, one per study
SUPPORT_STREAM = 1
CLASSIFICATION_STREAM = 2
CONTACT_STREAM = 3
RAPID_STREAM = 4


@dataclass(frozen=True)
class Campaign:
    """
    Parameters of one benchmark sweep.

    Attributes:
        m_values: Measurement levels to sweep.
        schemes: Sampling schemes to sweep.
        rows: Sensor rows.
        cols: Sensor columns.
        seed: Root seed of every generator in the campaign.
        support_frames: Random phantom frames reconstructed per (scheme, M).
        trials_per_class: Jittered SRC trials per class and (scheme, M).
        phases: Contact phase offsets per (scheme, M) for the bounce study.
        contact_us: Bounce contact duration.
        windows_ms: Rapid-classification windows.
        rapid_trials_per_class: Rapid trials per class, window and (scheme, M).
        peak_pressure: Phantom peak pressure.
        sample_rate_hz: ADC rate; ``None`` uses the configured default.
        threads: Worker threads for reconstruction.
    """

    m_values: tuple[int, ...] = (32, 64, 128, 256, 512, 1024)
    schemes: tuple[Scheme, ...] = (Scheme.UNIFORM, Scheme.RANDOM, Scheme.BINARY)
    rows: int = 32
    cols: int = 32
    seed: int = 0
    support_frames: int = 20
    trials_per_class: int = 10
    phases: int = 50
    contact_us: int = 8700
    windows_ms: tuple[float, ...] = (5.0, 10.0, 20.0, 40.0)
    rapid_trials_per_class: int = 2
    peak_pressure: float = 2000.0
    sample_rate_hz: float | None = None
    threads: int | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "m_values", tuple(int(m) for m in self.m_values))
        object.__setattr__(self, "schemes", tuple(Scheme.parse(s) for s in self.schemes))
        object.__setattr__(self, "windows_ms", tuple(float(w) for w in self.windows_ms))
        if self.rows < 1 or self.cols < 1:
            raise ConfigError("Campaign dimensions must be at least 1x1.")
        if any(m < 1 or m > self.rows * self.cols for m in self.m_values):
            raise ConfigError(f"Every M must lie in [1, {self.rows * self.cols}].")
        if any(w <= 0 for w in self.windows_ms):
            raise ConfigError("Rapid windows must be positive.")
        for name in ("support_frames", "trials_per_class", "phases", "rapid_trials_per_class"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative.")
        if self.contact_us <= 0:
            raise ConfigError("contact_us must be positive.")

    @classmethod
    def from_config(cls, config: RunConfig, section: str = "campaign") -> "Campaign":
        defaults = cls()
        return cls(
            m_values=tuple(config.get_list(section, "m_values", list(defaults.m_values), int)),
            schemes=tuple(config.get_list(section, "schemes", list(defaults.schemes))),
            rows=config.get_int(section, "rows", defaults.rows),
            cols=config.get_int(section, "cols", defaults.cols),
            seed=config.get_int(section, "seed", defaults.seed),
            support_frames=config.get_int(section, "support_frames", defaults.support_frames),
            trials_per_class=config.get_int(section, "trials_per_class", defaults.trials_per_class),
            phases=config.get_int(section, "phases", defaults.phases),
            contact_us=config.get_int(section, "contact_us", defaults.contact_us),
            windows_ms=tuple(config.get_list(section, "windows_ms", list(defaults.windows_ms), float)),
            rapid_trials_per_class=config.get_int(
                section, "rapid_trials_per_class", defaults.rapid_trials_per_class
            ),
            peak_pressure=config.get_float(section, "peak_pressure", defaults.peak_pressure),
            sample_rate_hz=config.get_float(section, "sample_rate_hz", None),
            threads=config.get_int(section, "threads", None),
        )

    def sampling(self, scheme: Scheme, m: int) -> SamplingConfig:
        return SamplingConfig(scheme, m, seed=self.seed, sample_rate_hz=self.sample_rate_hz)

    def levels(self) -> Iterable[tuple[Scheme, int]]:
        for scheme in self.schemes:
            for m in self.m_values:
                yield scheme, m

    def generator(self, stream: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=[self.seed, stream]))


def write_csv(path: str | Path, fields: Sequence[str], rows: Iterable[Sequence]) -> Path:
    """Write a CSV with ``fields`` as header; floats are written at full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
    return path


def _cell(value):
    if isinstance(value, Scheme):
        return value.name.lower()
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return int(value)
    return value


def _held(phantom: Phantom, rows: int, cols: int, t0_us: int = 0, ramp_us: int = 0):
    motion = MotionProfile(MotionKind.STATIC_INDENT, HOLD_US, t0_us=t0_us, ramp_us=ramp_us)
    return scene_source(phantom, motion, rows, cols)


def _jittered(phantom: Phantom, rng: np.random.Generator, spread: float) -> Phantom:
    d_row, d_col = rng.uniform(-spread, spread, size=2)
    return phantom.moved((phantom.center[0] + d_row, phantom.center[1] + d_col))


def fps_rows(campaign: Campaign) -> list[list]:
    rows = []
    for m in campaign.m_values:
        clock = MeasurementClock(0, campaign.sample_rate_hz)
        rows.append([m, clock.frame_duration_us(m), frame_rate(m, campaign.sample_rate_hz)])
    return rows


def support_rows(
    campaign: Campaign,
    dictionary: Dictionary,
    params: ReconstructionParams | None = None,
) -> list[list]:
    """Mean support accuracy and IoU of dictionary and interpolation reconstructions."""
    rng = campaign.generator(SUPPORT_STREAM)
    shapes = list(standard_phantoms(campaign.rows, campaign.cols, campaign.peak_pressure).values())
    phantoms = [
        _jittered(shapes[int(rng.integers(len(shapes)))], rng, min(campaign.rows, campaign.cols) / 8)
        for _ in range(campaign.support_frames)
    ]
    truths = [render_phantom(p, campaign.rows, campaign.cols) for p in phantoms]
    sources = [_held(p, campaign.rows, campaign.cols) for p in phantoms]
    rows = []
    for scheme, m in campaign.levels():
        cfg = campaign.sampling(scheme, m)
        scores = {"dictionary": [], "interpolation": []}
        for index, (source, truth) in enumerate(zip(sources, truths)):
            meas = sample_frame(source, cfg, MeasurementClock(0, cfg.sample_rate_hz), index)
            recon = {
                "dictionary": reconstruct_frame(meas, dictionary, params, campaign.threads),
                "interpolation": interpolate_baseline(meas),
            }
            for method, frame in recon.items():
                scores[method].append((support_accuracy(frame, truth), support_iou(frame, truth)))
        for method, values in scores.items():
            values = np.array(values).reshape(-1, 2)
            mean = values.mean(axis=0) if len(values) else (math.nan, math.nan)
            rows.append([scheme, m, method, len(values), float(mean[0]), float(mean[1])])
        logger.info("Support study done for %s at M=%d", scheme.label, m)
    return rows


def jitter_library(campaign: Campaign) -> SrcLibrary:
    """Library of the standard phantoms, one entry per integer offset in a 3x3 neighborhood."""
    phantoms = standard_phantoms(campaign.rows, campaign.cols, campaign.peak_pressure)
    streams = {}
    for label, phantom in phantoms.items():
        streams[label] = [
            render_phantom(
                phantom.moved((phantom.center[0] + d_row, phantom.center[1] + d_col)),
                campaign.rows,
                campaign.cols,
            )
            for d_row in LIBRARY_OFFSETS
            for d_col in LIBRARY_OFFSETS
        ]
    return build_src_library(streams, frames_per_class=len(LIBRARY_OFFSETS) ** 2)


def classification_rows(campaign: Campaign, library: SrcLibrary | None = None) -> list[list]:
    """SRC accuracy on sub-pixel jittered phantoms."""
    library = library or jitter_library(campaign)
    phantoms = standard_phantoms(campaign.rows, campaign.cols, campaign.peak_pressure)
    rng = campaign.generator(CLASSIFICATION_STREAM)
    trials = [
        (label, _held(_jittered(phantom, rng, 1.0), campaign.rows, campaign.cols))
        for label, phantom in phantoms.items()
        for _ in range(campaign.trials_per_class)
    ]
    rows = []
    for scheme, m in campaign.levels():
        cfg = campaign.sampling(scheme, m)
        correct = 0
        for index, (label, source) in enumerate(trials):
            meas = sample_frame(source, cfg, MeasurementClock(0, cfg.sample_rate_hz), index)
            correct += src_classify(meas, library).label == label
        accuracy = correct / len(trials) if trials else math.nan
        rows.append([scheme, m, len(trials), float(accuracy)])
    return rows


def contact_rows(campaign: Campaign) -> list[list]:
    """Frames that see a bounce, and force smoothness over it, averaged over random phases."""
    side = min(campaign.rows, campaign.cols)
    phantom = Phantom(
        ShapeKind.DISK,
        ((campaign.rows - 1) / 2, (campaign.cols - 1) / 2),
        max(1.0, side / 5),
        campaign.peak_pressure,
        edge_softness=1.0,
    )
    rng = campaign.generator(CONTACT_STREAM)
    offsets = rng.random(campaign.phases)
    rows = []
    for scheme, m in campaign.levels():
        cfg = campaign.sampling(scheme, m)
        clock = MeasurementClock(0, cfg.sample_rate_hz)
        frame_us = clock.frame_duration_us(m)
        detected, smoothness = [], []
        for offset in offsets:
            t0 = int(offset * frame_us)
            motion = MotionProfile(MotionKind.BOUNCE, campaign.contact_us, t0_us=t0)
            source = scene_source(phantom, motion, campaign.rows, campaign.cols)
            sets = list(sample_stream(source, cfg))
            detected.append(detected_frame_count(sets))
            if len(sets) > 1:
                smoothness.append(force_smoothness(sets))
        rows.append(
            [
                scheme,
                m,
                campaign.phases,
                expected_contact_frames(campaign.contact_us, m, clock.sample_rate_hz),
                float(np.mean(detected)) if detected else math.nan,
                float(np.mean(smoothness)) if smoothness else math.nan,
            ]
        )
    return rows


def rapid_rows(campaign: Campaign, library: SrcLibrary | None = None) -> list[list]:
    """Rapid-classification accuracy for every window after first contact."""
    library = library or jitter_library(campaign)
    phantoms = standard_phantoms(campaign.rows, campaign.cols, campaign.peak_pressure)
    rng = campaign.generator(RAPID_STREAM)
    trials = []
    for label, phantom in phantoms.items():
        for _ in range(campaign.rapid_trials_per_class):
            t0 = int(rng.integers(0, 5000))
            trials.append((label, _held(_jittered(phantom, rng, 1.0), campaign.rows, campaign.cols, t0, 2000)))
    rows = []
    for scheme, m in campaign.levels():
        cfg = campaign.sampling(scheme, m)
        for window_ms in campaign.windows_ms:
            correct, in_window = 0, []
            for label, source in trials:
                result = rapid_classify(source, library, cfg, window_ms)
                correct += result.label == label
                in_window.append(result.frames_in_window)
            accuracy = correct / len(trials) if trials else math.nan
            mean_frames = float(np.mean(in_window)) if in_window else math.nan
            rows.append([scheme, m, window_ms, len(trials), float(accuracy), mean_frames])
    return rows


def run_campaign(
    campaign: Campaign,
    dictionary: Dictionary,
    output_dir: str | Path,
    params: ReconstructionParams | None = None,
    progress: Callable[[str], None] | None = None,
) -> dict[str, Path]:
    """
    Run every study of ``campaign`` and write its CSVs into ``output_dir``.

    Returns:
        Mapping of study name to the CSV written.
    """
    output_dir = Path(output_dir)
    library = jitter_library(campaign) if campaign.m_values and campaign.schemes else None
    studies = [
        ("fps_vs_m", FPS_FIELDS, lambda: fps_rows(campaign)),
        ("support_accuracy_vs_m", SUPPORT_FIELDS, lambda: support_rows(campaign, dictionary, params)),
        ("classification_accuracy_vs_m", CLASSIFICATION_FIELDS, lambda: classification_rows(campaign, library)),
        ("contact_frames_vs_m", CONTACT_FIELDS, lambda: contact_rows(campaign)),
        ("rapid_accuracy_vs_window", RAPID_FIELDS, lambda: rapid_rows(campaign, library)),
    ]
    written = {}
    for name, fields, compute in studies:
        rows = compute() if campaign.m_values and campaign.schemes else []
        written[name] = write_csv(output_dir / f"{name}.csv", fields, rows)
        if progress:
            progress(f"Wrote {written[name]} ({len(rows)} rows)")
    return written
