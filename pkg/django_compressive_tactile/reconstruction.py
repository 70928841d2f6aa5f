"""
Full-frame reconstruction from subsampled measurements.

``reconstruct_frame`` splits the array into overlapping patches, recovers a
sparse code per patch from the pixels measured inside it, and averages the
patch estimates where they overlap. ``interpolate_baseline`` is the
piecewise-linear scattered-data baseline it is compared against.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.interpolate import LinearNDInterpolator, NearestNDInterpolator
from scipy.spatial import Delaunay, QhullError

from django_compressive_tactile import signals
from django_compressive_tactile.core import Dictionary, MeasurementSet, PixelIndex, TactileFrame
from django_compressive_tactile.exceptions import (
    ConfigError,
    DimensionMismatchError,
    InsufficientDataError,
)
from django_compressive_tactile.recovery import RESIDUAL_RTOL, omp_arrays
from django_compressive_tactile.worker import ordered_map

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReconstructionParams:
    """
    Patchwise reconstruction settings.

    Attributes:
        patch_rows: Patch height; must match the dictionary.
        patch_cols: Patch width; must match the dictionary.
        overlap: Pixels shared by neighboring patches.
        sparsity_fraction: Per-patch sparsity as a fraction of the patch's
            measurement count.
        min_patch_measurements: Patches with fewer measured pixels contribute zeros.
        nonneg_clamp: Clamp negative estimates to zero.
        residual_rtol: OMP stops once the patch residual is below this
            fraction of the patch measurement norm.
    """

    patch_rows: int = 8
    patch_cols: int = 8
    overlap: int = 4
    sparsity_fraction: float = 0.25
    min_patch_measurements: int = 1
    nonneg_clamp: bool = True
    residual_rtol: float = RESIDUAL_RTOL

    def __post_init__(self):
        if self.patch_rows < 1 or self.patch_cols < 1:
            raise ConfigError("Patch dimensions must be positive.")
        if not 0 < self.overlap < min(self.patch_rows, self.patch_cols):
            raise ConfigError(
                f"Overlap {self.overlap} must lie strictly between 0 and the patch side."
            )
        if not 0 < self.sparsity_fraction <= 1:
            raise ConfigError("sparsity_fraction must lie in (0, 1].")
        if self.min_patch_measurements < 0:
            raise ConfigError("min_patch_measurements must be non-negative.")
        if self.residual_rtol < 0:
            raise ConfigError("residual_rtol must be non-negative.")

    def patch_sparsity(self, measured: int, atom_count: int) -> int:
        """Sparsity used for a patch holding ``measured`` readings."""
        sparsity = max(1, math.ceil(self.sparsity_fraction * measured))
        return min(sparsity, measured, atom_count)


def _axis_origins(length: int, patch: int, stride: int) -> list[int]:
    origins = list(range(0, length - patch + 1, stride))
    if origins[-1] + patch < length:
        origins.append(length - patch)
    return origins


def patch_grid(rows: int, cols: int, params: ReconstructionParams) -> list[PixelIndex]:
    """
    Patch origins in row-major order.

    Origins advance by ``patch side - overlap`` along each axis; a final
    origin is clamped to ``length - patch side`` so the last patch abuts the
    border and every pixel is covered.

    Raises:
        DimensionMismatchError: If the patch is larger than the array.
    """
    if params.patch_rows > rows or params.patch_cols > cols:
        raise DimensionMismatchError(
            f"A {params.patch_rows}x{params.patch_cols} patch does not fit in {rows}x{cols}."
        )
    row_origins = _axis_origins(rows, params.patch_rows, params.patch_rows - params.overlap)
    col_origins = _axis_origins(cols, params.patch_cols, params.patch_cols - params.overlap)
    return [PixelIndex(r, c) for r in row_origins for c in col_origins]


def _finish(grid: np.ndarray, timestamp_us: int, clamp: bool, method: str) -> TactileFrame:
    if clamp:
        frame = TactileFrame(np.maximum(grid, 0.0), timestamp_us)
    else:
        frame = TactileFrame.estimate(grid, timestamp_us)
    signals.frame_reconstructed.send(sender=TactileFrame, frame=frame, method=method)
    return frame


def reconstruct_frame(
    meas: MeasurementSet,
    dictionary: Dictionary,
    params: ReconstructionParams | None = None,
    threads: int | None = None,
) -> TactileFrame:
    """
    Reconstruct a full frame with the patch dictionary.

    For every patch with at least ``params.min_patch_measurements`` readings,
    the dictionary rows at the measured in-patch offsets form the operator,
    OMP recovers a code of sparsity ``max(1, ceil(fraction * m_p))`` and the
    full atoms give the patch estimate. Patches below the minimum contribute
    zeros. Each pixel is the mean of the estimates covering it.

    Args:
        meas: The measurements of one frame.
        dictionary: Patch dictionary matching ``params``' patch size.
        params: Reconstruction settings; defaults to ``ReconstructionParams()``.
        threads: Worker threads for the patch solves.

    Returns:
        The reconstructed frame, timestamped with the first measurement.

    Raises:
        DimensionMismatchError: If the dictionary patch size differs from ``params``.
        InsufficientDataError: If ``meas`` is empty.

    Signals Fired:
        - frame_reconstructed: With ``method="dictionary"``.
    """
    params = params or ReconstructionParams()
    if (dictionary.patch_rows, dictionary.patch_cols) != (params.patch_rows, params.patch_cols):
        raise DimensionMismatchError(
            f"Dictionary patches are {dictionary.patch_rows}x{dictionary.patch_cols}, "
            f"reconstruction expects {params.patch_rows}x{params.patch_cols}."
        )
    if meas.m == 0:
        raise InsufficientDataError("Cannot reconstruct from an empty measurement set.")
    rows, cols = meas.rows, meas.cols
    origins = patch_grid(rows, cols, params)
    measured = np.zeros((rows, cols), dtype=bool)
    measured[meas.row_indices, meas.col_indices] = True
    readings = np.zeros((rows, cols))
    readings[meas.row_indices, meas.col_indices] = meas.values
    atoms = dictionary.atoms
    pr, pc = params.patch_rows, params.patch_cols

    def solve(origin: PixelIndex) -> np.ndarray | None:
        window = (slice(origin.row, origin.row + pr), slice(origin.col, origin.col + pc))
        offsets = np.flatnonzero(measured[window])
        if offsets.size == 0 or offsets.size < params.min_patch_measurements:
            return None
        y = readings[window].ravel()[offsets]
        restricted = atoms[offsets]
        sparsity = params.patch_sparsity(offsets.size, dictionary.atom_count)
        indices, coefficients, _ = omp_arrays(
            restricted,
            np.linalg.norm(restricted, axis=0),
            y,
            sparsity,
            params.residual_rtol * float(np.linalg.norm(y)),
        )
        if indices.size == 0:
            return None
        return (atoms[:, indices] @ coefficients).reshape(pr, pc)

    estimates = ordered_map(solve, origins, threads)
    total = np.zeros((rows, cols))
    counts = np.zeros((rows, cols))
    for origin, estimate in zip(origins, estimates):
        window = (slice(origin.row, origin.row + pr), slice(origin.col, origin.col + pc))
        if estimate is not None:
            total[window] += estimate
        counts[window] += 1
    return _finish(total / counts, meas.start_us, params.nonneg_clamp, "dictionary")


def reconstruct_stream(
    sets: Iterable[MeasurementSet],
    dictionary: Dictionary,
    params: ReconstructionParams | None = None,
    threads: int | None = None,
) -> list[TactileFrame]:
    """Reconstruct every set in order."""
    return [reconstruct_frame(meas, dictionary, params, threads) for meas in sets]


def _plane_extrapolate(
    tri: Delaunay, values: np.ndarray, targets: np.ndarray
) -> np.ndarray:
    """Evaluate, at each target, the plane of the triangle owning the nearest hull edge."""
    points = tri.points
    edges = tri.convex_hull
    owners = []
    for a, b in edges:
        owning = np.flatnonzero(
            np.any(tri.simplices == a, axis=1) & np.any(tri.simplices == b, axis=1)
        )
        owners.append(int(owning[0]))
    start = points[edges[:, 0]]
    direction = points[edges[:, 1]] - start
    length2 = np.einsum("ij,ij->i", direction, direction)
    result = np.empty(len(targets))
    for i, target in enumerate(targets):
        t = np.clip(np.einsum("ij,ij->i", target - start, direction) / length2, 0.0, 1.0)
        nearest = start + t[:, None] * direction
        edge = int(np.argmin(np.einsum("ij,ij->i", target - nearest, target - nearest)))
        simplex = owners[edge]
        transform = tri.transform[simplex]
        partial = transform[:2] @ (target - transform[2])
        barycentric = np.append(partial, 1.0 - partial.sum())
        result[i] = barycentric @ values[tri.simplices[simplex]]
    return result


def interpolate_baseline(
    meas: MeasurementSet,
    rows: int | None = None,
    cols: int | None = None,
    nonneg_clamp: bool = True,
) -> TactileFrame:
    """
    Piecewise-linear interpolation of the measured pixels.

    Inside the convex hull of the measured pixels the frame is linear over a
    Delaunay triangulation; outside it, each pixel takes the plane of the
    triangle owning the nearest hull edge. With fewer than three points, or
    collinear points, every pixel takes the nearest measured value.

    Raises:
        InsufficientDataError: If ``meas`` is empty.
        DimensionMismatchError: If ``rows``/``cols`` disagree with ``meas``.

    Signals Fired:
        - frame_reconstructed: With ``method="interpolation"``.
    """
    rows = meas.rows if rows is None else rows
    cols = meas.cols if cols is None else cols
    if (rows, cols) != (meas.rows, meas.cols):
        raise DimensionMismatchError(
            f"Measurements of a {meas.rows}x{meas.cols} array interpolated to {rows}x{cols}."
        )
    if meas.m == 0:
        raise InsufficientDataError("Cannot interpolate an empty measurement set.")
    points = np.column_stack([meas.row_indices, meas.col_indices]).astype(np.float64)
    values = meas.values
    grid_rows, grid_cols = np.mgrid[0:rows, 0:cols]
    targets = np.column_stack([grid_rows.ravel(), grid_cols.ravel()]).astype(np.float64)

    tri = None
    if len(points) >= 3 and np.linalg.matrix_rank(points - points.mean(axis=0)) == 2:
        try:
            tri = Delaunay(points)
        except QhullError:
            logger.debug("Degenerate triangulation; using nearest fill")
    if tri is None:
        estimate = NearestNDInterpolator(points, values)(targets)
    else:
        estimate = LinearNDInterpolator(tri, values)(targets)
        outside = np.isnan(estimate)
        if np.any(outside):
            estimate[outside] = _plane_extrapolate(tri, values, targets[outside])
    return _finish(estimate.reshape(rows, cols), meas.start_us, nonneg_clamp, "interpolation")
