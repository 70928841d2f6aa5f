"""
Deterministic synthetic tactile scenes.

A ``Phantom`` is an analytic pressure shape; a ``MotionProfile`` says how its
amplitude and position evolve over a contact window. ``scene_source`` turns
the pair into a ``FrameSource`` whose reads are pure functions of
``(pixel, t_us)``, so samplers see intra-frame motion under the measurement
clock.

Screen convention: rows grow downward, columns to the right; angles are
measured counter-clockwise from the +col axis, so a heading of ``theta``
moves by ``(-sin(theta), cos(theta))`` in (row, col).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from django.db.models import IntegerChoices
from scipy import ndimage

from django_compressive_tactile.core import FrameSource, PixelIndex, TactileFrame
from django_compressive_tactile.exceptions import ConfigError

MICROSECONDS_PER_MS = 1000.0


class ShapeKind(IntegerChoices):
    DISK = 0, "disk"
    SQUARE = 1, "square"
    CROSS = 2, "cross"
    LINE = 3, "line"
    RING = 4, "ring"
    TWO_DISKS = 5, "two_disks"
    THREE_LINES = 6, "three_lines"
    TRIANGLE = 7, "triangle"
    THREE_RINGS = 8, "three_rings"
    CUSTOM = 9, "custom"

    @classmethod
    def parse(cls, name) -> "ShapeKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_").replace(" ", "_")
        aliases = {"x": "cross", "circle": "disk", "2_disks": "two_disks", "mask": "custom"}
        key = aliases.get(key, key)
        for member in cls:
            if member.label == key:
                return member
        raise ConfigError(f"Unknown phantom shape '{name}'.")


class MotionKind(IntegerChoices):
    STATIC_INDENT = 0, "static_indent"
    BOUNCE = 1, "bounce"
    RICOCHET = 2, "ricochet"

    @classmethod
    def parse(cls, name) -> "MotionKind":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        if key in ("static", "indent"):
            key = "static_indent"
        for member in cls:
            if member.label == key:
                return member
        raise ConfigError(f"Unknown motion kind '{name}'.")


@dataclass(frozen=True, eq=False)
class Phantom:
    """
    An analytic pressure shape.

    Attributes:
        shape: Shape kind.
        center: Sub-pixel (row, col) position of the shape center.
        scale: Size in pixels (radius, side or half-length depending on shape).
            Shapes with ``scale < 0.5`` collapse to the single pixel nearest
            the center.
        peak_pressure: Pressure inside the shape.
        edge_softness: Width in pixels of the linear falloff outside the shape.
        angle_deg: Orientation, counter-clockwise from the +col axis.
        thickness: Stroke width of line-like shapes; defaults to ``max(1, scale / 4)``.
        mask: Boolean grid for ``ShapeKind.CUSTOM``; each cell spans ``scale`` pixels.
    """

    shape: ShapeKind
    center: tuple[float, float]
    scale: float
    peak_pressure: float = 1000.0
    edge_softness: float = 0.0
    angle_deg: float = 0.0
    thickness: float | None = None
    mask: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "shape", ShapeKind.parse(self.shape))
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        if self.scale < 0:
            raise ConfigError("Phantom scale must be non-negative.")
        if self.peak_pressure < 0 or self.edge_softness < 0:
            raise ConfigError("Phantom pressures and softness must be non-negative.")
        if self.thickness is None:
            object.__setattr__(self, "thickness", max(1.0, self.scale / 4))
        elif self.thickness <= 0:
            raise ConfigError("Phantom thickness must be positive.")
        if self.shape == ShapeKind.CUSTOM:
            if self.mask is None:
                raise ConfigError("A custom phantom needs a mask.")
            mask = np.array(self.mask, dtype=bool)
            if mask.ndim != 2 or not mask.any():
                raise ConfigError("A custom mask must be a 2-D grid with at least one cell set.")
            mask.setflags(write=False)
            object.__setattr__(self, "mask", mask)

    def moved(self, center: tuple[float, float]) -> "Phantom":
        return Phantom(
            self.shape,
            center,
            self.scale,
            self.peak_pressure,
            self.edge_softness,
            self.angle_deg,
            self.thickness,
            self.mask,
        )

    @cached_property
    def _mask_distance(self) -> tuple[np.ndarray, int]:
        pad = int(math.ceil(self.edge_softness / max(self.scale, 1e-9))) + 1
        padded = np.pad(self.mask, pad)
        return ndimage.distance_transform_edt(~padded), pad

    def distance(self, rows, cols) -> np.ndarray:
        """Distance in pixels from each (row, col) point to the shape; 0 inside."""
        rows = np.asarray(rows, dtype=np.float64)
        cols = np.asarray(cols, dtype=np.float64)
        d_row = rows - self.center[0]
        d_col = cols - self.center[1]
        theta = math.radians(self.angle_deg)
        along = d_col * math.cos(theta) - d_row * math.sin(theta)
        across = d_col * math.sin(theta) + d_row * math.cos(theta)
        s, t = self.scale, self.thickness / 2
        kind = self.shape
        if kind == ShapeKind.DISK:
            return np.maximum(np.hypot(along, across) - s, 0.0)
        if kind == ShapeKind.SQUARE:
            return np.hypot(np.maximum(np.abs(along) - s / 2, 0), np.maximum(np.abs(across) - s / 2, 0))
        if kind == ShapeKind.LINE:
            return _capsule(along, across, s, t)
        if kind == ShapeKind.CROSS:
            c = math.sqrt(0.5)
            first = _capsule(c * (along + across), c * (across - along), s, t)
            second = _capsule(c * (along - across), c * (along + across), s, t)
            return np.minimum(first, second)
        if kind == ShapeKind.RING:
            return np.maximum(np.abs(np.hypot(along, across) - s) - t, 0.0)
        if kind == ShapeKind.TWO_DISKS:
            radius = s / 2
            return np.minimum(
                np.maximum(np.hypot(along - s, across) - radius, 0.0),
                np.maximum(np.hypot(along + s, across) - radius, 0.0),
            )
        if kind == ShapeKind.THREE_LINES:
            return np.minimum.reduce(
                [_capsule(along, across - offset, s, t) for offset in (-s / 2, 0.0, s / 2)]
            )
        if kind == ShapeKind.TRIANGLE:
            return _triangle(along, across, s)
        if kind == ShapeKind.THREE_RINGS:
            radius = s / 3
            rings = []
            for vertex in range(3):
                phi = math.pi / 2 + vertex * 2 * math.pi / 3
                a0, b0 = 2 * radius * math.cos(phi), -2 * radius * math.sin(phi)
                rings.append(
                    np.maximum(np.abs(np.hypot(along - a0, across - b0) - radius) - t, 0.0)
                )
            return np.minimum.reduce(rings)
        distances, pad = self._mask_distance
        height, width = self.mask.shape
        cell = max(s, 1e-9)
        shape = np.shape(along)
        i = np.floor(np.ravel(across) / cell + height / 2).astype(np.intp) + pad
        j = np.floor(np.ravel(along) / cell + width / 2).astype(np.intp) + pad
        inside = (i >= 0) & (i < distances.shape[0]) & (j >= 0) & (j < distances.shape[1])
        result = np.full(i.shape, np.inf)
        result[inside] = distances[i[inside], j[inside]] * cell
        return result.reshape(shape)

    def pressure(self, rows, cols) -> np.ndarray:
        """Pressure of the phantom at the given pixel centers."""
        rows = np.asarray(rows, dtype=np.float64)
        cols = np.asarray(cols, dtype=np.float64)
        if self.scale < 0.5:
            hit = (rows == math.floor(self.center[0] + 0.5)) & (cols == math.floor(self.center[1] + 0.5))
            return np.where(hit, self.peak_pressure, 0.0)
        d = self.distance(rows, cols)
        if self.edge_softness > 0:
            falloff = np.clip(1.0 - d / self.edge_softness, 0.0, 1.0)
        else:
            falloff = (d <= 0).astype(np.float64)
        return np.where(d <= 0, self.peak_pressure, self.peak_pressure * falloff)


def _capsule(along, across, half_length, half_width):
    return np.maximum(
        np.hypot(np.maximum(np.abs(along) - half_length, 0.0), across) - half_width, 0.0
    )


def _triangle(along, across, circumradius):
    # equilateral, apex toward the heading; along/across are local coordinates
    vertices = [
        (circumradius * math.cos(k * 2 * math.pi / 3), circumradius * math.sin(k * 2 * math.pi / 3))
        for k in range(3)
    ]
    inside = np.ones(np.broadcast(along, across).shape, dtype=bool)
    nearest = np.full(inside.shape, np.inf)
    for k in range(3):
        (a0, b0), (a1, b1) = vertices[k], vertices[(k + 1) % 3]
        edge_a, edge_b = a1 - a0, b1 - b0
        rel_a, rel_b = along - a0, across - b0
        inside &= edge_a * rel_b - edge_b * rel_a >= 0
        t = np.clip((rel_a * edge_a + rel_b * edge_b) / (edge_a**2 + edge_b**2), 0.0, 1.0)
        nearest = np.minimum(nearest, np.hypot(rel_a - t * edge_a, rel_b - t * edge_b))
    return np.where(inside, 0.0, nearest)


def render_phantom(phantom: Phantom, rows: int, cols: int, timestamp_us: int = 0) -> TactileFrame:
    """Evaluate ``phantom`` at every pixel center of a rows x cols array."""
    grid_rows, grid_cols = np.mgrid[0:rows, 0:cols]
    return TactileFrame(phantom.pressure(grid_rows, grid_cols), timestamp_us)


@dataclass(frozen=True)
class MotionProfile:
    """
    Time course of a contact.

    Attributes:
        kind: StaticIndent, Bounce or Ricochet.
        contact_us: Contact duration; amplitude is 0 outside ``[t0_us, t0_us + contact_us)``.
        t0_us: Contact start.
        ramp_us: StaticIndent rise and fall time around the plateau.
        angle_deg: Ricochet heading.
        speed_px_per_ms: Ricochet speed.
    """

    kind: MotionKind
    contact_us: int
    t0_us: int = 0
    ramp_us: int = 0
    angle_deg: float = 0.0
    speed_px_per_ms: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", MotionKind.parse(self.kind))
        if self.contact_us <= 0:
            raise ConfigError("contact_us must be positive.")
        if self.t0_us < 0 or self.ramp_us < 0 or self.speed_px_per_ms < 0:
            raise ConfigError("Motion times and speed must be non-negative.")
        if 2 * self.ramp_us > self.contact_us:
            raise ConfigError("The indentation ramps do not fit in the contact window.")

    def amplitude(self, t_us: int) -> float:
        """Fraction of the phantom's peak pressure present at ``t_us``."""
        elapsed = t_us - self.t0_us
        if elapsed < 0 or elapsed >= self.contact_us:
            return 0.0
        if self.kind == MotionKind.BOUNCE:
            return 0.5 * (1.0 - math.cos(2.0 * math.pi * elapsed / self.contact_us))
        if self.kind == MotionKind.STATIC_INDENT and self.ramp_us > 0:
            return min(1.0, elapsed / self.ramp_us, (self.contact_us - elapsed) / self.ramp_us)
        return 1.0

    def displacement(self, t_us: int) -> tuple[float, float]:
        """(row, col) offset of the phantom center at ``t_us``."""
        if self.kind != MotionKind.RICOCHET:
            return 0.0, 0.0
        elapsed = min(max(t_us - self.t0_us, 0), self.contact_us)
        travel = self.speed_px_per_ms * elapsed / MICROSECONDS_PER_MS
        theta = math.radians(self.angle_deg)
        return -math.sin(theta) * travel, math.cos(theta) * travel


def _noise(seed: int, row: int, col: int, t_us: int) -> float:
    bit_generator = np.random.Philox(key=seed, counter=[row, col, t_us, 0])
    return float(bit_generator.random_raw()) / 2.0**64


class SceneSource(FrameSource):
    """
    A phantom under a motion profile, read one pixel at a time.

    Static and bouncing scenes render the phantom once and scale it by the
    amplitude curve; ricochets re-evaluate the shape at the moved center.
    Optional noise adds a deterministic uniform draw in ``[0, noise)`` keyed
    by ``(seed, pixel, t_us)``.
    """

    def __init__(
        self,
        phantom: Phantom,
        motion: MotionProfile,
        rows: int,
        cols: int,
        duration_us: int | None = None,
        noise: float = 0.0,
        seed: int = 0,
    ):
        if rows < 1 or cols < 1:
            raise ConfigError("Scene dimensions must be at least 1x1.")
        if noise < 0:
            raise ConfigError("Noise amplitude must be non-negative.")
        self.phantom = phantom
        self.motion = motion
        self._rows = rows
        self._cols = cols
        self._duration_us = (
            motion.t0_us + motion.contact_us if duration_us is None else int(duration_us)
        )
        self.noise = float(noise)
        self.seed = int(seed) & ((1 << 64) - 1)
        self._static = None
        if motion.kind != MotionKind.RICOCHET:
            self._static = render_phantom(phantom, rows, cols).values

    @property
    def rows(self) -> int:
        return self._rows

    @property
    def cols(self) -> int:
        return self._cols

    @property
    def duration_us(self) -> int:
        return self._duration_us

    def _phantom_at(self, t_us: int) -> Phantom:
        d_row, d_col = self.motion.displacement(t_us)
        center = self.phantom.center
        return self.phantom.moved((center[0] + d_row, center[1] + d_col))

    def read(self, pixel: PixelIndex, t_us: int) -> float:
        row, col = int(pixel[0]), int(pixel[1])
        amplitude = self.motion.amplitude(t_us)
        value = 0.0
        if amplitude > 0:
            if self._static is not None:
                value = amplitude * float(self._static[row, col])
            else:
                value = amplitude * float(self._phantom_at(t_us).pressure(row, col))
        if self.noise:
            value += self.noise * _noise(self.seed, row, col, t_us)
        return value

    def frame_at(self, t_us: int) -> TactileFrame:
        amplitude = self.motion.amplitude(t_us)
        if amplitude == 0:
            grid = np.zeros((self.rows, self.cols))
        elif self._static is not None:
            grid = amplitude * self._static
        else:
            grid = amplitude * render_phantom(self._phantom_at(t_us), self.rows, self.cols).values
        if self.noise:
            grid = grid + self.noise * np.array(
                [
                    [_noise(self.seed, r, c, t_us) for c in range(self.cols)]
                    for r in range(self.rows)
                ]
            )
        return TactileFrame(grid, t_us)


def scene_source(
    phantom: Phantom,
    motion: MotionProfile,
    rows: int,
    cols: int,
    duration_us: int | None = None,
    noise: float = 0.0,
    seed: int = 0,
) -> SceneSource:
    """Build the FrameSource of ``phantom`` moving per ``motion``."""
    return SceneSource(phantom, motion, rows, cols, duration_us, noise, seed)


def render_frames(source: FrameSource, interval_us: int, start_us: int = 0) -> list[TactileFrame]:
    """Full snapshots every ``interval_us`` from ``start_us`` through ``source.duration_us``."""
    if interval_us <= 0:
        raise ConfigError("The frame interval must be positive.")
    return [
        source.frame_at(t_us)
        for t_us in range(int(start_us), max(source.duration_us, int(start_us)) + 1, int(interval_us))
    ]


def expected_contact_frames(contact_us: float, m: int, sample_rate_hz: float) -> float:
    """
    Expected number of frames overlapping a contact window.

    Example:
        >>> round(expected_contact_frames(8700, 42, 55936), 2)
        11.59
    """
    if contact_us <= 0 or m <= 0 or sample_rate_hz <= 0:
        raise ConfigError("Contact time, M and sample rate must be positive.")
    return contact_us / (m / sample_rate_hz * 1e6)


STANDARD_SCALES = {
    "disk": (ShapeKind.DISK, 0.2, 0.0),
    "square": (ShapeKind.SQUARE, 0.35, 0.0),
    "cross": (ShapeKind.CROSS, 0.25, 0.0),
    "line": (ShapeKind.LINE, 0.3, 0.0),
    "diagonal_line": (ShapeKind.LINE, 0.3, 45.0),
    "ring": (ShapeKind.RING, 0.25, 0.0),
    "two_disks": (ShapeKind.TWO_DISKS, 0.2, 0.0),
    "three_lines": (ShapeKind.THREE_LINES, 0.25, 0.0),
    "triangle": (ShapeKind.TRIANGLE, 0.3, 0.0),
    "three_rings": (ShapeKind.THREE_RINGS, 0.35, 0.0),
}


def standard_phantoms(
    rows: int,
    cols: int,
    peak_pressure: float = 1000.0,
    edge_softness: float = 1.0,
    center: tuple[float, float] | None = None,
) -> dict[str, Phantom]:
    """
    The ten-object phantom set used for classification benchmarks.

    Sizes scale with the smaller array side; every phantom is centered on the
    array unless ``center`` is given.
    """
    side = min(rows, cols)
    if center is None:
        center = ((rows - 1) / 2, (cols - 1) / 2)
    return {
        label: Phantom(kind, center, fraction * side, peak_pressure, edge_softness, angle)
        for label, (kind, fraction, angle) in STANDARD_SCALES.items()
    }
