"""
Domain types shared by every module.

This module defines the dense tactile frame, the subsampled measurement set,
the patch dictionary, the compact sparse code and the pixel-query
abstraction (``FrameSource``) that samplers read from. All types are
immutable after construction and safe to share across threads.

Pixel indices are 0-based throughout; ``row`` grows downward and ``col``
grows to the right.
"""
from __future__ import annotations

import abc
import bisect
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from django.db.models import IntegerChoices

from django_compressive_tactile.exceptions import (
    ConfigError,
    DimensionMismatchError,
    InsufficientDataError,
    NumericError,
)

UNIT_NORM_TOLERANCE = 1e-6


class Scheme(IntegerChoices):
    """Subsampling scheme; the integer value is the on-disk enum."""

    UNIFORM = 0, "Uniform"
    RANDOM = 1, "Random"
    BINARY = 2, "Binary"
    FULL_RASTER = 3, "FullRaster"

    @classmethod
    def parse(cls, name: str | int | "Scheme") -> "Scheme":
        """
        Resolve a scheme from its value, name or label (case-insensitive).

        Accepts "uniform", "random", "binary", "full_raster", "fullraster" and "raster".
        """
        if isinstance(name, cls):
            return name
        if isinstance(name, (int, np.integer)):
            try:
                return cls(int(name))
            except ValueError as e:
                raise ConfigError(f"Unknown sampling scheme {name}.") from e
        key = str(name).strip().lower().replace("-", "_")
        if key in ("raster", "fullraster"):
            key = "full_raster"
        for member in cls:
            if member.name.lower() == key:
                return member
        raise ConfigError(f"Unknown sampling scheme '{name}'.")


class Hold(IntegerChoices):
    ZERO_ORDER = 0, "ZeroOrder"


class PixelIndex(NamedTuple):
    row: int
    col: int


class Measurement(NamedTuple):
    pixel: PixelIndex
    value: float
    t_us: int


@dataclass(frozen=True, eq=False)
class TactileFrame:
    """
    A dense pressure grid with its acquisition timestamp.

    Attributes:
        values: 2-D array (rows x cols), row-major, non-negative pressures.
        timestamp_us: Microseconds since stream start.
    """

    values: np.ndarray
    timestamp_us: int = 0

    def __post_init__(self):
        values = _frozen_grid(self.values)
        if np.any(values < 0):
            raise ValueError("Tactile frame values must be non-negative.")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "timestamp_us", _timestamp(self.timestamp_us))

    @classmethod
    def estimate(cls, values, timestamp_us: int = 0) -> "TactileFrame":
        """
        Build a frame from an estimate that may hold negative values.

        Used for unclamped reconstructions; every other invariant is still checked.
        """
        frame = object.__new__(cls)
        object.__setattr__(frame, "values", _frozen_grid(values))
        object.__setattr__(frame, "timestamp_us", _timestamp(timestamp_us))
        return frame

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def total_force(self) -> float:
        return float(self.values.sum())

    def value_at(self, pixel: PixelIndex) -> float:
        return float(self.values[pixel[0], pixel[1]])

    def __eq__(self, other):
        if not isinstance(other, TactileFrame):
            return NotImplemented
        return self.timestamp_us == other.timestamp_us and np.array_equal(
            self.values, other.values
        )

    __hash__ = None


def _frozen_grid(values) -> np.ndarray:
    grid = np.array(values, dtype=np.float64)
    if grid.ndim != 2 or grid.shape[0] < 1 or grid.shape[1] < 1:
        raise DimensionMismatchError(
            f"A tactile frame needs a non-empty 2-D grid, got shape {grid.shape}."
        )
    if not np.all(np.isfinite(grid)):
        raise NumericError("Tactile frame values must be finite.")
    grid.setflags(write=False)
    return grid


def _timestamp(value) -> int:
    value = int(value)
    if value < 0:
        raise ValueError("Timestamps must be non-negative.")
    return value


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """
    The ordered pixel readings of one subsampled frame (y, with the one-hot rows of phi implicit).

    Attributes:
        rows: Sensor rows.
        cols: Sensor columns.
        scheme: Scheme that produced the set.
        frame_index: Frame counter within the stream.
        seed: Generator seed (Random only, 0 otherwise).
        measurements: Readings in acquisition order.
        truncated: True when the scheme ran out of pixels before reaching M.
    """

    rows: int
    cols: int
    scheme: Scheme
    frame_index: int
    seed: int
    measurements: tuple[Measurement, ...]
    truncated: bool = False

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise DimensionMismatchError("Sensor dimensions must be at least 1x1.")
        measurements = tuple(
            Measurement(PixelIndex(int(m[0][0]), int(m[0][1])), float(m[1]), int(m[2]))
            for m in self.measurements
        )
        if len(measurements) > self.rows * self.cols:
            raise DimensionMismatchError("A measurement set cannot exceed rows*cols readings.")
        seen = set()
        last_t = None
        for m in measurements:
            row, col = m.pixel
            if not (0 <= row < self.rows and 0 <= col < self.cols):
                raise DimensionMismatchError(f"Pixel {tuple(m.pixel)} lies outside the sensor.")
            if m.pixel in seen:
                raise ValueError(f"Pixel {tuple(m.pixel)} measured twice in one frame.")
            if last_t is not None and m.t_us < last_t:
                raise ValueError("Measurement times must be non-decreasing.")
            seen.add(m.pixel)
            last_t = m.t_us
        object.__setattr__(self, "measurements", measurements)
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))

    def __len__(self) -> int:
        return len(self.measurements)

    def __iter__(self) -> Iterator[Measurement]:
        return iter(self.measurements)

    @property
    def m(self) -> int:
        return len(self.measurements)

    @property
    def pixels(self) -> list[PixelIndex]:
        return [m.pixel for m in self.measurements]

    @cached_property
    def row_indices(self) -> np.ndarray:
        return _frozen(np.array([m.pixel.row for m in self.measurements], dtype=np.intp))

    @cached_property
    def col_indices(self) -> np.ndarray:
        return _frozen(np.array([m.pixel.col for m in self.measurements], dtype=np.intp))

    @cached_property
    def flat_indices(self) -> np.ndarray:
        return _frozen(self.row_indices * self.cols + self.col_indices)

    @cached_property
    def values(self) -> np.ndarray:
        return _frozen(np.array([m.value for m in self.measurements], dtype=np.float64))

    @cached_property
    def times(self) -> np.ndarray:
        return _frozen(np.array([m.t_us for m in self.measurements], dtype=np.int64))

    @property
    def start_us(self) -> int:
        if not self.measurements:
            raise InsufficientDataError("Empty measurement set has no start time.")
        return self.measurements[0].t_us

    @property
    def total_force(self) -> float:
        return float(self.values.sum())

    def to_frame(self, fill: float = 0.0) -> TactileFrame:
        """Scatter the readings into a dense frame, unmeasured pixels set to ``fill``."""
        grid = np.full((self.rows, self.cols), fill, dtype=np.float64)
        grid[self.row_indices, self.col_indices] = self.values
        return TactileFrame(grid, self.start_us if self.measurements else 0)

    def __eq__(self, other):
        if not isinstance(other, MeasurementSet):
            return NotImplemented
        return (
            (self.rows, self.cols, self.scheme, self.frame_index, self.seed, self.truncated)
            == (other.rows, other.cols, other.scheme, other.frame_index, other.seed, other.truncated)
            and self.measurements == other.measurements
        )

    __hash__ = None


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Dictionary:
    """
    K unit-norm patch atoms (psi), stored column-wise.

    Attributes:
        patch_rows: Patch height.
        patch_cols: Patch width.
        atoms: Array of shape (patch_rows * patch_cols, K); each column is a
            row-major flattened patch of unit Euclidean norm.
    """

    patch_rows: int
    patch_cols: int
    atoms: np.ndarray

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=np.float64)
        if atoms.ndim != 2 or atoms.shape[1] < 1:
            raise DimensionMismatchError("A dictionary needs at least one atom.")
        if self.patch_rows < 1 or self.patch_cols < 1:
            raise DimensionMismatchError("Patch dimensions must be positive.")
        if atoms.shape[0] != self.patch_rows * self.patch_cols:
            raise DimensionMismatchError(
                f"Atoms have length {atoms.shape[0]}, expected "
                f"{self.patch_rows * self.patch_cols} for "
                f"{self.patch_rows}x{self.patch_cols} patches."
            )
        if not np.all(np.isfinite(atoms)):
            raise NumericError("Dictionary atoms must be finite.")
        norms = np.linalg.norm(atoms, axis=0)
        if np.any(np.abs(norms - 1.0) > UNIT_NORM_TOLERANCE):
            raise ValueError("Every dictionary atom must have unit norm.")
        atoms.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)

    @property
    def atom_count(self) -> int:
        return self.atoms.shape[1]

    @property
    def patch_size(self) -> int:
        return self.atoms.shape[0]

    def atom(self, k: int) -> np.ndarray:
        """Returns atom ``k`` reshaped to (patch_rows, patch_cols)."""
        return self.atoms[:, k].reshape(self.patch_rows, self.patch_cols)

    def __eq__(self, other):
        if not isinstance(other, Dictionary):
            return NotImplemented
        return (self.patch_rows, self.patch_cols) == (
            other.patch_rows,
            other.patch_cols,
        ) and np.array_equal(self.atoms, other.atoms)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class SparseCode:
    """
    A sparse vector stored as two short arrays: atom indices and their coefficients.

    Attributes:
        indices: Atom indices in selection order, unique and below ``ambient_dim``.
        coefficients: Coefficient of each selected atom.
        ambient_dim: Length K of the dense vector.
    """

    indices: np.ndarray
    coefficients: np.ndarray
    ambient_dim: int

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.intp).ravel().copy()
        coefficients = np.asarray(self.coefficients, dtype=np.float64).ravel().copy()
        if indices.shape != coefficients.shape:
            raise DimensionMismatchError("Sparse code index and coefficient arrays differ in length.")
        if self.ambient_dim < 1:
            raise DimensionMismatchError("Sparse code ambient dimension must be at least 1.")
        if indices.size:
            if indices.min() < 0 or indices.max() >= self.ambient_dim:
                raise IndexError(
                    f"Sparse code index out of range for ambient dimension {self.ambient_dim}."
                )
            if np.unique(indices).size != indices.size:
                raise ValueError("Sparse code atom indices must be unique.")
        indices.setflags(write=False)
        coefficients.setflags(write=False)
        object.__setattr__(self, "indices", indices)
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def from_entries(cls, entries: Sequence[tuple[int, float]], ambient_dim: int) -> "SparseCode":
        return cls(
            np.array([e[0] for e in entries], dtype=np.intp),
            np.array([e[1] for e in entries], dtype=np.float64),
            ambient_dim,
        )

    @property
    def entries(self) -> tuple[tuple[int, float], ...]:
        return tuple(
            (int(i), float(c)) for i, c in zip(self.indices, self.coefficients)
        )

    def __len__(self) -> int:
        return int(self.indices.size)

    def __eq__(self, other):
        if not isinstance(other, SparseCode):
            return NotImplemented
        return (
            self.ambient_dim == other.ambient_dim
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.coefficients, other.coefficients)
        )

    __hash__ = None


class FrameSource(abc.ABC):
    """
    A time-varying pressure field that is queried one pixel at a time.

    Implementations must be deterministic: identical ``(pixel, t_us)`` always
    yields the identical value, and concurrent reads must be safe.
    """

    @property
    @abc.abstractmethod
    def rows(self) -> int:
        ...

    @property
    @abc.abstractmethod
    def cols(self) -> int:
        ...

    @property
    @abc.abstractmethod
    def duration_us(self) -> int:
        ...

    @abc.abstractmethod
    def read(self, pixel: PixelIndex, t_us: int) -> float:
        """Returns the pressure at ``pixel`` at time ``t_us``."""

    def frame_at(self, t_us: int) -> TactileFrame:
        """Returns a full snapshot of the field at ``t_us`` (every pixel read at the same instant)."""
        grid = np.empty((self.rows, self.cols), dtype=np.float64)
        for row in range(self.rows):
            for col in range(self.cols):
                grid[row, col] = self.read(PixelIndex(row, col), t_us)
        return TactileFrame(grid, t_us)


class ReplaySource(FrameSource):
    """
    Replays a recorded frame stream with zero-order hold.

    A read returns the pixel value of the last frame whose timestamp is at or
    before ``t_us``; reads before the first timestamp see the first frame and
    reads past the end see the last frame.
    """

    def __init__(self, frames: Sequence[TactileFrame], hold: Hold = Hold.ZERO_ORDER):
        if not frames:
            raise InsufficientDataError("A replay source needs at least one frame.")
        self.hold = Hold(hold)
        self._frames = tuple(frames)
        shape = self._frames[0].values.shape
        for frame in self._frames:
            if frame.values.shape != shape:
                raise DimensionMismatchError("All replayed frames must share rows/cols.")
        self._timestamps = [frame.timestamp_us for frame in self._frames]
        for earlier, later in zip(self._timestamps, self._timestamps[1:]):
            if later <= earlier:
                raise ValueError("Replay timestamps must be strictly increasing.")

    @property
    def rows(self) -> int:
        return self._frames[0].rows

    @property
    def cols(self) -> int:
        return self._frames[0].cols

    @property
    def duration_us(self) -> int:
        return self._timestamps[-1]

    @property
    def frames(self) -> tuple[TactileFrame, ...]:
        return self._frames

    def held_frame(self, t_us: int) -> TactileFrame:
        """Returns the frame in effect at ``t_us``."""
        position = bisect.bisect_right(self._timestamps, t_us) - 1
        return self._frames[max(position, 0)]

    def read(self, pixel: PixelIndex, t_us: int) -> float:
        return float(self.held_frame(t_us).values[pixel[0], pixel[1]])

    def frame_at(self, t_us: int) -> TactileFrame:
        return TactileFrame(self.held_frame(t_us).values, t_us)


def replay_source(frames: Sequence[TactileFrame], hold: Hold = Hold.ZERO_ORDER) -> ReplaySource:
    """
    Build a FrameSource that replays ``frames`` with the given hold rule.

    Raises:
        InsufficientDataError: If ``frames`` is empty.
        ValueError: If timestamps are not strictly increasing.
    """
    return ReplaySource(frames, hold)
