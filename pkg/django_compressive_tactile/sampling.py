"""
Subsampling plans and their execution under the measurement clock.

Every pixel read advances a ``MeasurementClock`` by one ADC period, so an
adaptive sampler experiences a moving scene mid-frame the way the physical
readout does. Four schemes are available:

- Uniform: a rotating stride lattice; consecutive frames cycle through all
  phase offsets.
- Random: M distinct pixels from a counter-based generator keyed by
  (seed, frame_index).
- Binary: recursive spatial bisection of the array with neighbor expansion
  around every reading above ``ns_thr``.
- FullRaster: every pixel in row-major order.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Iterator, Sequence

import numpy as np

from django_compressive_tactile import conf, signals
from django_compressive_tactile.core import (
    FrameSource,
    Measurement,
    MeasurementSet,
    PixelIndex,
    Scheme,
    TactileFrame,
    replay_source,
)
from django_compressive_tactile.exceptions import ConfigError, DimensionMismatchError

logger = logging.getLogger(__name__)

MICROSECONDS = 1_000_000

NEIGHBOR_OFFSETS = {
    "E": (0, 1),
    "S": (1, 0),
    "W": (0, -1),
    "N": (-1, 0),
    "SE": (1, 1),
    "SW": (1, -1),
    "NW": (-1, -1),
    "NE": (-1, 1),
}

_UINT64_MASK = (1 << 64) - 1


def frame_rate(m: int, sample_rate_hz: float | None = None) -> float:
    """
    Frames per second achieved with ``m`` reads per frame.

    Example:
        >>> frame_rate(55, 55936)
        1017.0181818181818
    """
    sample_rate_hz = conf.get_sample_rate_hz() if sample_rate_hz is None else sample_rate_hz
    if m < 1:
        raise ConfigError("M must be at least 1.")
    if not sample_rate_hz > 0:
        raise ConfigError("The sample rate must be positive.")
    return sample_rate_hz / m


class MeasurementClock:
    """
    Timestamps single-pixel reads.

    The k-th read since ``start_us`` happens at
    ``start_us + floor(k * 1e6 / sample_rate_hz)``. Offsets are computed from
    the read count rather than accumulated, so rounding never drifts.
    """

    def __init__(self, start_us: int = 0, sample_rate_hz: float | None = None):
        self.sample_rate_hz = (
            conf.get_sample_rate_hz() if sample_rate_hz is None else float(sample_rate_hz)
        )
        if not self.sample_rate_hz > 0:
            raise ConfigError("The sample rate must be positive.")
        self.start_us = int(start_us)
        self.reads = 0

    def offset_us(self, reads: int) -> int:
        return math.floor(reads * MICROSECONDS / self.sample_rate_hz)

    def now(self) -> int:
        """Time of the next read."""
        return self.start_us + self.offset_us(self.reads)

    def tick(self) -> int:
        """Returns the time of the next read and advances by one period."""
        t_us = self.now()
        self.reads += 1
        return t_us

    def restart(self, start_us: int) -> None:
        self.start_us = int(start_us)
        self.reads = 0

    def frame_duration_us(self, m: int) -> int:
        return self.offset_us(m)

    def __repr__(self):
        return f"MeasurementClock(start_us={self.start_us}, reads={self.reads})"


@dataclass(frozen=True)
class SamplingConfig:
    """
    Parameters of one sampler.

    Attributes:
        scheme: Subsampling scheme.
        m: Measurements per frame.
        ns_thr: Neighbor-search threshold (Binary only). Defaults to
            ``conf.get_ns_threshold()``; ``math.inf`` disables neighbor search.
        seed: 64-bit generator seed (Random only).
        uniform_phase: Frame-counter offset added before choosing the lattice phase
            (Uniform only).
        neighbor_order: Compass order used by neighbor search.
        sample_rate_hz: ADC rate driving the clock.
    """

    scheme: Scheme
    m: int
    ns_thr: float = None
    seed: int = 0
    uniform_phase: int = 0
    neighbor_order: tuple[str, ...] = None
    sample_rate_hz: float = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        except ValueError as e:
            raise ConfigError(str(e))
        if self.ns_thr is None:
            object.__setattr__(self, "ns_thr", conf.get_ns_threshold())
        if self.neighbor_order is None:
            object.__setattr__(self, "neighbor_order", conf.get_neighbor_order())
        if self.sample_rate_hz is None:
            object.__setattr__(self, "sample_rate_hz", conf.get_sample_rate_hz())
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "ns_thr", float(self.ns_thr))
        object.__setattr__(self, "seed", int(self.seed) & _UINT64_MASK)
        object.__setattr__(self, "neighbor_order", tuple(self.neighbor_order))
        if self.m < 1:
            raise ConfigError("M must be at least 1.")
        if math.isnan(self.ns_thr) or self.ns_thr < 0:
            raise ConfigError("ns_thr must be non-negative.")
        if not self.sample_rate_hz > 0:
            raise ConfigError("The sample rate must be positive.")
        unknown = [name for name in self.neighbor_order if name not in NEIGHBOR_OFFSETS]
        if unknown or len(set(self.neighbor_order)) != len(self.neighbor_order):
            raise ConfigError(
                f"Neighbor order must list distinct compass directions, got {self.neighbor_order}."
            )

    def validate(self, rows: int, cols: int) -> None:
        """
        Raises:
            ConfigError: If M exceeds the pixel count.
            DimensionMismatchError: If Binary sampling is asked of a non-square grid.
        """
        if self.m > rows * cols:
            raise ConfigError(f"M={self.m} exceeds the {rows}x{cols} array.")
        if self.scheme == Scheme.BINARY and rows != cols:
            raise DimensionMismatchError("Binary sampling requires a square array.")

    def with_m(self, m: int) -> "SamplingConfig":
        return replace(self, m=m)


# =============================================================================
# Plans
# =============================================================================


def _check_plan_size(rows: int, cols: int, m: int) -> None:
    if rows < 1 or cols < 1:
        raise DimensionMismatchError("Sensor dimensions must be at least 1x1.")
    if m < 0 or m > rows * cols:
        raise ConfigError(f"M={m} exceeds the {rows}x{cols} array.")


def build_binary_order(rows: int, cols: int) -> list[PixelIndex]:
    """
    Visit order of the binary scheme: a permutation of all pixels.

    Starts at the center pixel and repeatedly splits every current center
    with a step of ``distance`` pixels, alternating vertical (column offsets)
    and horizontal (row offsets) divisions. The distance is halved (rounding
    up) before every vertical division. Candidates outside the array are
    dropped; candidates already emitted are not re-emitted but still act as
    centers for the next division.

    Raises:
        DimensionMismatchError: If the grid is not square or empty.
    """
    if rows != cols:
        raise DimensionMismatchError("The binary order is defined for square arrays only.")
    if rows < 1:
        raise DimensionMismatchError("Sensor dimensions must be at least 1x1.")
    n = rows
    half = -(-n // 2)
    center = PixelIndex(half - 1, half - 1)
    order = [center]
    emitted = {center}
    centers = [center]
    distance = half
    horizontal = False
    max_steps = 4 * n + 16
    steps = 0
    while len(order) < n * n and steps < max_steps:
        if horizontal:
            offsets = ((-distance, 0), (distance, 0))
        else:
            distance = -(-distance // 2)
            offsets = ((0, -distance), (0, distance))
        next_centers = []
        seen = set()
        for row, col in centers:
            for d_row, d_col in offsets:
                candidate = PixelIndex(row + d_row, col + d_col)
                if not (0 <= candidate.row < n and 0 <= candidate.col < n):
                    continue
                if candidate not in seen:
                    seen.add(candidate)
                    next_centers.append(candidate)
                if candidate not in emitted:
                    emitted.add(candidate)
                    order.append(candidate)
        centers = next_centers
        horizontal = not horizontal
        steps += 1
    if len(order) < n * n:
        logger.warning("Binary division left %d pixels; appending row-major", n * n - len(order))
        for row in range(n):
            for col in range(n):
                pixel = PixelIndex(row, col)
                if pixel not in emitted:
                    order.append(pixel)
    return order


def uniform_plan(rows: int, cols: int, m: int, frame_index: int) -> list[PixelIndex]:
    """
    Rotating-lattice plan for one frame.

    The lattice stride is ``s = ceil(sqrt(rows * cols / m))``. The stride-s
    lattices for the ``s*s`` phase offsets ``(k // s, k % s)`` are concatenated
    (each row-major) into one cyclic sequence covering every pixel once;
    frame ``f`` takes the ``m`` entries starting at ``(f * m) mod N``. When the
    lattice fits exactly, frame 0 is the plain stride lattice and consecutive
    frames walk through the phases.

    Raises:
        ConfigError: If ``m`` exceeds rows*cols.
    """
    _check_plan_size(rows, cols, m)
    if m == 0:
        return []
    size = rows * cols
    stride = math.ceil(math.sqrt(size / m))
    sequence = []
    for phase in range(stride * stride):
        row_offset, col_offset = divmod(phase, stride)
        for row in range(row_offset, rows, stride):
            for col in range(col_offset, cols, stride):
                sequence.append(PixelIndex(row, col))
    start = (frame_index * m) % size
    return [sequence[(start + i) % size] for i in range(m)]


def _frame_generator(seed: int, frame_index: int) -> np.random.Generator:
    key = ((int(seed) & _UINT64_MASK) << 64) | (int(frame_index) & _UINT64_MASK)
    return np.random.Generator(np.random.Philox(key=key))


def random_plan(rows: int, cols: int, m: int, seed: int, frame_index: int) -> list[PixelIndex]:
    """
    ``m`` distinct pixels drawn without replacement.

    The draw uses a Philox counter-based generator keyed by ``(seed, frame_index)``,
    so any frame can be regenerated without replaying the ones before it.
    """
    _check_plan_size(rows, cols, m)
    rng = _frame_generator(seed, frame_index)
    flat = rng.choice(rows * cols, size=m, replace=False)
    return [PixelIndex(*divmod(int(index), cols)) for index in flat]


def full_raster_plan(rows: int, cols: int) -> list[PixelIndex]:
    _check_plan_size(rows, cols, 0)
    return [PixelIndex(row, col) for row in range(rows) for col in range(cols)]


# =============================================================================
# Execution
# =============================================================================


def execute_plan(
    source: FrameSource,
    plan: Sequence[PixelIndex],
    clock: MeasurementClock,
    scheme: Scheme = Scheme.FULL_RASTER,
    frame_index: int = 0,
    seed: int = 0,
) -> MeasurementSet:
    """
    Read every pixel of ``plan`` in order, one clock period per read.

    Raises:
        ValueError: If the plan repeats a pixel.
        DimensionMismatchError: If a plan pixel lies outside the source.
    """
    plan = [PixelIndex(int(p[0]), int(p[1])) for p in plan]
    if len(set(plan)) != len(plan):
        raise ValueError("A sampling plan must not repeat a pixel.")
    for pixel in plan:
        if not (0 <= pixel.row < source.rows and 0 <= pixel.col < source.cols):
            raise DimensionMismatchError(f"Plan pixel {tuple(pixel)} lies outside the source.")
    measurements = []
    for pixel in plan:
        t_us = clock.tick()
        measurements.append(Measurement(pixel, source.read(pixel, t_us), t_us))
    return MeasurementSet(source.rows, source.cols, scheme, frame_index, seed, tuple(measurements))


def _neighbors(pixel: PixelIndex, rows: int, cols: int, order: Sequence[str]) -> list[PixelIndex]:
    result = []
    for name in order:
        d_row, d_col = NEIGHBOR_OFFSETS[name]
        row, col = pixel.row + d_row, pixel.col + d_col
        if 0 <= row < rows and 0 <= col < cols:
            result.append(PixelIndex(row, col))
    return result


def binary_sample(
    source: FrameSource,
    cfg: SamplingConfig,
    clock: MeasurementClock,
    frame_index: int = 0,
    order: Sequence[PixelIndex] | None = None,
) -> MeasurementSet:
    """
    Adaptive binary sampling of one frame.

    Walks the binary order, skipping pixels already read in this frame. A
    reading above ``cfg.ns_thr`` starts a depth-first neighbor search: each
    unread neighbor (in ``cfg.neighbor_order``) is read at once and, if it too
    exceeds the threshold, searched before the remaining neighbors. Stops
    after ``cfg.m`` reads.

    Args:
        source: Pressure field to read.
        cfg: Sampler parameters; ``cfg.scheme`` must be Binary.
        clock: Clock positioned at the frame start.
        frame_index: Stored in the returned set.
        order: Precomputed ``build_binary_order`` result, reused across frames.
    """
    if cfg.scheme != Scheme.BINARY:
        raise ConfigError(f"binary_sample called with scheme {cfg.scheme.label}.")
    rows, cols = source.rows, source.cols
    cfg.validate(rows, cols)
    if order is None:
        order = build_binary_order(rows, cols)
    measured = np.zeros((rows, cols), dtype=bool)
    measurements: list[Measurement] = []

    def read(pixel: PixelIndex) -> float:
        t_us = clock.tick()
        value = source.read(pixel, t_us)
        measured[pixel.row, pixel.col] = True
        measurements.append(Measurement(pixel, value, t_us))
        return value

    for pixel in order:
        if len(measurements) >= cfg.m:
            break
        if measured[pixel.row, pixel.col]:
            continue
        if read(pixel) <= cfg.ns_thr:
            continue
        # iterative depth-first search
        stack = [iter(_neighbors(pixel, rows, cols, cfg.neighbor_order))]
        while stack and len(measurements) < cfg.m:
            neighbor = next(stack[-1], None)
            if neighbor is None:
                stack.pop()
                continue
            if measured[neighbor.row, neighbor.col]:
                continue
            if read(neighbor) > cfg.ns_thr:
                stack.append(iter(_neighbors(neighbor, rows, cols, cfg.neighbor_order)))

    truncated = len(measurements) < cfg.m
    if truncated:
        logger.warning("Binary order exhausted after %d of %d reads", len(measurements), cfg.m)
    return MeasurementSet(
        rows, cols, Scheme.BINARY, frame_index, 0, tuple(measurements), truncated=truncated
    )


def plan_for(cfg: SamplingConfig, rows: int, cols: int, frame_index: int) -> list[PixelIndex]:
    """Fixed plan of a non-adaptive scheme."""
    if cfg.scheme == Scheme.UNIFORM:
        return uniform_plan(rows, cols, cfg.m, frame_index + cfg.uniform_phase)
    if cfg.scheme == Scheme.RANDOM:
        return random_plan(rows, cols, cfg.m, cfg.seed, frame_index)
    if cfg.scheme == Scheme.FULL_RASTER:
        return full_raster_plan(rows, cols)
    raise ConfigError(f"Scheme {cfg.scheme.label} has no fixed plan.")


def sample_frame(
    source: FrameSource,
    cfg: SamplingConfig,
    clock: MeasurementClock,
    frame_index: int = 0,
    binary_order: Sequence[PixelIndex] | None = None,
) -> MeasurementSet:
    """
    Acquire one frame with the configured scheme.

    FullRaster reads every pixel whatever ``cfg.m`` says.

    Signals Fired:
        - frame_sampled: After the set is complete.
    """
    rows, cols = source.rows, source.cols
    cfg.validate(rows, cols)
    if cfg.scheme == Scheme.BINARY:
        result = binary_sample(source, cfg, clock, frame_index, binary_order)
    else:
        seed = cfg.seed if cfg.scheme == Scheme.RANDOM else 0
        result = execute_plan(
            source, plan_for(cfg, rows, cols, frame_index), clock, cfg.scheme, frame_index, seed
        )
    signals.frame_sampled.send(sender=MeasurementSet, measurement_set=result)
    return result


def sample_stream(
    source: FrameSource,
    cfg: SamplingConfig,
    start_us: int = 0,
    max_frames: int | None = None,
) -> Iterator[MeasurementSet]:
    """
    Continuous acquisition: frames back to back from ``start_us``.

    Each frame starts where the previous one ended. Frames are produced while
    their start time is before ``source.duration_us``; at least one frame is
    always produced.
    """
    cfg.validate(source.rows, source.cols)
    clock = MeasurementClock(start_us, cfg.sample_rate_hz)
    order = build_binary_order(source.rows, source.cols) if cfg.scheme == Scheme.BINARY else None
    frame_index = 0
    while max_frames is None or frame_index < max_frames:
        if frame_index > 0 and clock.start_us >= source.duration_us:
            break
        yield sample_frame(source, cfg, clock, frame_index, order)
        clock.restart(clock.now())
        frame_index += 1


def sample_recorded(frames: Sequence[TactileFrame], cfg: SamplingConfig) -> list[MeasurementSet]:
    """
    Subsample a recorded stream, one measurement set per recorded frame.

    Each set reads its own frame only, with the clock started at the frame's
    timestamp. A recorded frame is a single snapshot, so reads that run past
    the next timestamp still see the frame being sampled.

    Raises:
        DimensionMismatchError: If the frames do not share rows/cols.
    """
    if not frames:
        return []
    shape = frames[0].values.shape
    if any(frame.values.shape != shape for frame in frames):
        raise DimensionMismatchError("All recorded frames must share rows/cols.")
    rows, cols = shape
    cfg.validate(rows, cols)
    clock = MeasurementClock(0, cfg.sample_rate_hz)
    order = build_binary_order(rows, cols) if cfg.scheme == Scheme.BINARY else None
    sets = []
    for frame_index, frame in enumerate(frames):
        clock.restart(frame.timestamp_us)
        source = replay_source([TactileFrame(frame.values, 0)])
        sets.append(sample_frame(source, cfg, clock, frame_index, order))
    return sets
