"""
Quantitative metrics over frames and measurement sets.

Frames and MeasurementSets both expose ``total_force``, so the force-based
metrics accept either.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import ndimage

from django_compressive_tactile import conf
from django_compressive_tactile.core import MeasurementSet, PixelIndex, TactileFrame
from django_compressive_tactile.exceptions import (
    DimensionMismatchError,
    InsufficientDataError,
    ZeroForceError,
)

FOUR_CONNECTED = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class CopSample:
    """Center of pressure of one frame; only defined for a positive total force."""

    t_us: int
    row: float
    col: float
    total_force: float

    def __post_init__(self):
        if not self.total_force > 0:
            raise ZeroForceError("A center of pressure needs a positive total force.")


def _check_same_shape(first: TactileFrame, second: TactileFrame) -> None:
    if first.values.shape != second.values.shape:
        raise DimensionMismatchError(
            f"Frames of {first.rows}x{first.cols} and {second.rows}x{second.cols} differ in size."
        )


def _support_masks(recon: TactileFrame, truth: TactileFrame, thr: float | None):
    _check_same_shape(recon, truth)
    if thr is None:
        peak = max(float(recon.values.max()), float(truth.values.max()))
        thr = conf.get_support_threshold_fraction() * peak
    return recon.values > thr, truth.values > thr


def support_accuracy(recon: TactileFrame, truth: TactileFrame, thr: float | None = None) -> float:
    """
    Pixel-wise agreement of the binarized frames: ``(TP + TN) / N``.

    Args:
        recon: Reconstructed frame.
        truth: Ground-truth frame.
        thr: A pixel is in the support when its value exceeds ``thr``. Defaults
            to the support fraction (10%) of the larger of the two frame maxima.
    """
    recon_mask, truth_mask = _support_masks(recon, truth, thr)
    return float(np.count_nonzero(recon_mask == truth_mask)) / recon_mask.size


def support_iou(recon: TactileFrame, truth: TactileFrame, thr: float | None = None) -> float:
    """Intersection over union of the binarized supports; 1.0 when both are empty."""
    recon_mask, truth_mask = _support_masks(recon, truth, thr)
    union = np.count_nonzero(recon_mask | truth_mask)
    if union == 0:
        return 1.0
    return float(np.count_nonzero(recon_mask & truth_mask)) / union


def center_of_pressure(frame: TactileFrame) -> CopSample:
    """
    Force-weighted mean pixel coordinate.

    Raises:
        ZeroForceError: If the frame carries no force.
    """
    total = frame.total_force
    if not total > 0:
        raise ZeroForceError(f"Frame at {frame.timestamp_us} us has no force.")
    rows, cols = np.indices(frame.values.shape)
    return CopSample(
        frame.timestamp_us,
        float((rows * frame.values).sum() / total),
        float((cols * frame.values).sum() / total),
        total,
    )


def cop_from_measurements(meas: MeasurementSet) -> CopSample:
    """Center of pressure of the measured pixels only, timestamped at the first read."""
    total = meas.total_force
    if not total > 0:
        raise ZeroForceError(f"Measurement set {meas.frame_index} has no force.")
    return CopSample(
        meas.start_us,
        float(meas.row_indices @ meas.values / total),
        float(meas.col_indices @ meas.values / total),
        total,
    )


def ricochet_angle(cops: Sequence[CopSample]) -> float:
    """
    Heading of the total COP displacement, in degrees within (-180, 180].

    Uses the first and last samples; angles are counter-clockwise from the
    +col axis with rows growing downward.

    Raises:
        InsufficientDataError: With fewer than two samples or no displacement.

    Example:
        >>> ricochet_angle([CopSample(0, 5, 5, 1), CopSample(1, 4, 6, 1)])
        45.0
    """
    if len(cops) < 2:
        raise InsufficientDataError("A ricochet angle needs at least two COP samples.")
    d_row = cops[-1].row - cops[0].row
    d_col = cops[-1].col - cops[0].col
    if d_row == 0 and d_col == 0:
        raise InsufficientDataError("The center of pressure did not move.")
    angle = math.degrees(math.atan2(-d_row, d_col))
    return 180.0 if angle <= -180.0 else angle


def ricochet_from_sets(sets: Iterable[MeasurementSet]) -> float:
    """Ricochet angle from the COPs of every set that carries force."""
    cops = [cop_from_measurements(meas) for meas in sets if meas.total_force > 0]
    return ricochet_angle(cops)


def contact_frame_count(frames: Iterable[TactileFrame], thr: float | None = None) -> int:
    """Number of frames with at least one value above ``thr`` (default: contact threshold)."""
    thr = conf.get_contact_threshold() if thr is None else thr
    return sum(1 for frame in frames if frame.values.max() > thr)


def detected_frame_count(sets: Iterable[MeasurementSet], thr: float | None = None) -> int:
    """Number of measurement sets with at least one reading above ``thr``."""
    thr = conf.get_contact_threshold() if thr is None else thr
    return sum(1 for meas in sets if meas.m and meas.values.max() > thr)


def force_smoothness(frames: Sequence) -> float:
    """
    Mean absolute change of total force between consecutive frames.

    Smaller values mean smoother force tracking.

    Raises:
        InsufficientDataError: With fewer than two frames.
    """
    totals = np.array([frame.total_force for frame in frames])
    if totals.size < 2:
        raise InsufficientDataError("Force smoothness needs at least two frames.")
    return float(np.mean(np.abs(np.diff(totals))))


def outline(frame: TactileFrame, thr: float | None = None) -> set[PixelIndex]:
    """
    Boundary pixels of the active region.

    A pixel is on the outline when it exceeds ``thr`` and has a 4-neighbor at
    or below ``thr``, or lies on the sensor border. ``thr`` defaults to the
    support fraction of the frame maximum.
    """
    if thr is None:
        thr = conf.get_support_threshold_fraction() * float(frame.values.max())
    active = frame.values > thr
    interior = ndimage.binary_erosion(active, structure=FOUR_CONNECTED, border_value=0)
    return {PixelIndex(int(r), int(c)) for r, c in np.argwhere(active & ~interior)}
