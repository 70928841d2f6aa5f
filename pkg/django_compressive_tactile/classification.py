"""
Sparse-representation classification (SRC).

Key high-pressure frames of every class are stored, unit-normalized, as the
columns of a library matrix. A measurement set is sparse-coded against the
library rows at the measured pixels; the class whose entries alone leave the
smallest residual wins.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from django_compressive_tactile import conf, signals
from django_compressive_tactile.core import FrameSource, MeasurementSet, SparseCode, TactileFrame
from django_compressive_tactile.exceptions import (
    ConfigError,
    DimensionMismatchError,
    InsufficientDataError,
    NoContactError,
)
from django_compressive_tactile.recovery import LinearOperator, omp
from django_compressive_tactile.sampling import MeasurementClock, SamplingConfig, sample_stream

logger = logging.getLogger(__name__)

NO_CONTACT_LABEL = "no-contact"
UNIT_NORM_TOLERANCE = 1e-6


@dataclass(frozen=True, eq=False)
class SrcLibrary:
    """
    Labeled, unit-norm exemplar frames.

    Attributes:
        rows: Sensor rows.
        cols: Sensor columns.
        class_labels: Label of each class, in class-index order.
        entry_classes: Class index of each exemplar.
        exemplars: Array of shape (rows * cols, entry_count); one flattened
            unit-norm frame per column.
    """

    rows: int
    cols: int
    class_labels: tuple[str, ...]
    entry_classes: tuple[int, ...]
    exemplars: np.ndarray

    def __post_init__(self):
        exemplars = np.array(self.exemplars, dtype=np.float64)
        entry_classes = tuple(int(c) for c in self.entry_classes)
        labels = tuple(str(label) for label in self.class_labels)
        if exemplars.ndim != 2 or exemplars.shape[0] != self.rows * self.cols:
            raise DimensionMismatchError(
                f"Exemplars of shape {exemplars.shape} for a {self.rows}x{self.cols} library."
            )
        if exemplars.shape[1] != len(entry_classes):
            raise DimensionMismatchError("Every exemplar needs exactly one class index.")
        if not labels:
            raise InsufficientDataError("A library needs at least one class.")
        if len(set(labels)) != len(labels):
            raise ConfigError("Class labels must be unique.")
        counts = np.bincount(entry_classes, minlength=len(labels)) if entry_classes else np.zeros(len(labels))
        if len(counts) > len(labels) or np.any(counts[: len(labels)] == 0):
            raise InsufficientDataError("Every declared class needs at least one exemplar.")
        if np.any(np.abs(np.linalg.norm(exemplars, axis=0) - 1.0) > UNIT_NORM_TOLERANCE):
            raise ConfigError("Library exemplars must have unit norm.")
        exemplars.setflags(write=False)
        object.__setattr__(self, "exemplars", exemplars)
        object.__setattr__(self, "entry_classes", entry_classes)
        object.__setattr__(self, "class_labels", labels)

    @property
    def entry_count(self) -> int:
        return self.exemplars.shape[1]

    @property
    def class_count(self) -> int:
        return len(self.class_labels)

    def class_index(self, label: str) -> int:
        return self.class_labels.index(label)

    def exemplar(self, entry: int) -> np.ndarray:
        return self.exemplars[:, entry].reshape(self.rows, self.cols)


@dataclass(frozen=True)
class SrcResult:
    """
    Outcome of one SRC classification.

    Attributes:
        label: Winning class label, or ``NO_CONTACT_LABEL``.
        class_index: Index of the winning class (lowest index on ties).
        residuals: Residual norm per class.
        no_contact: True when the measurements are too weak to classify.
        code: Sparse code over the library entries.
    """

    label: str
    class_index: int
    residuals: tuple[float, ...]
    no_contact: bool
    code: SparseCode


@dataclass(frozen=True)
class RapidResult:
    """
    Outcome of rapid classification after first contact.

    Attributes:
        label: Predicted label.
        result: The SrcResult of the classified frame.
        contact_us: Time of the first reading above the contact threshold.
        frame_index: Index of the classified frame in the stream.
        frames_in_window: Frames acquired entirely inside the window.
    """

    label: str
    result: SrcResult
    contact_us: int
    frame_index: int
    frames_in_window: int


def build_src_library(
    labeled_streams: Mapping[str, Sequence[TactileFrame]] | Iterable[tuple[str, Sequence[TactileFrame]]],
    frames_per_class: int | None = None,
    pressure_quantile: float = 0.0,
) -> SrcLibrary:
    """
    Select the key frames of every class.

    Per class, frames with a total force at or above the ``pressure_quantile``
    of that class's totals (and above zero) are eligible; the
    ``frames_per_class`` with the highest totals are kept, highest first.

    Raises:
        InsufficientDataError: If a class has too few eligible frames, or no
            class is given.
        DimensionMismatchError: If frames differ in size.
    """
    frames_per_class = conf.get_src_frames_per_class() if frames_per_class is None else frames_per_class
    if frames_per_class < 1:
        raise ConfigError("frames_per_class must be at least 1.")
    if not 0 <= pressure_quantile < 1:
        raise ConfigError("pressure_quantile must lie in [0, 1).")
    items = labeled_streams.items() if isinstance(labeled_streams, Mapping) else labeled_streams
    labels: list[str] = []
    entry_classes: list[int] = []
    columns: list[np.ndarray] = []
    shape = None
    for label, frames in items:
        frames = list(frames)
        for frame in frames:
            if shape is None:
                shape = frame.values.shape
            elif frame.values.shape != shape:
                raise DimensionMismatchError("Library frames must share rows/cols.")
        totals = np.array([frame.total_force for frame in frames])
        cutoff = np.quantile(totals, pressure_quantile) if totals.size else 0.0
        eligible = [i for i in range(len(frames)) if totals[i] >= cutoff and totals[i] > 0]
        if len(eligible) < frames_per_class:
            raise InsufficientDataError(
                f"Class '{label}' has {len(eligible)} eligible frames, {frames_per_class} needed."
            )
        eligible.sort(key=lambda i: -totals[i])
        class_index = len(labels)
        labels.append(str(label))
        for i in eligible[:frames_per_class]:
            vector = frames[i].values.ravel()
            columns.append(vector / np.linalg.norm(vector))
            entry_classes.append(class_index)
    if not labels:
        raise InsufficientDataError("A library needs at least one class.")
    return SrcLibrary(shape[0], shape[1], tuple(labels), tuple(entry_classes), np.column_stack(columns))


def default_src_sparsity(m: int) -> int:
    return max(1, math.ceil(0.25 * m))


def src_classify(
    meas: MeasurementSet,
    lib: SrcLibrary,
    sparsity: int | None = None,
    contact_thr: float | None = None,
) -> SrcResult:
    """
    Classify one measurement set.

    The library rows at the measured pixels form the operator; OMP codes the
    readings and each class's residual uses only that class's part of the
    code. Residuals scale with the readings, so the label is invariant to a
    positive rescaling of them.

    Args:
        meas: Readings to classify.
        lib: Exemplar library of the same size.
        sparsity: OMP sparsity; defaults to ``max(1, ceil(0.25 * M))``, clipped
            to ``min(M, entries)``.
        contact_thr: When ``||y|| <= contact_thr * sqrt(M)`` the result carries
            ``NO_CONTACT_LABEL``. Defaults to ``conf.get_contact_threshold()``.

    Raises:
        DimensionMismatchError: If sizes differ.
        InsufficientDataError: If ``meas`` is empty.

    Signals Fired:
        - frame_classified: With the result.
    """
    if (meas.rows, meas.cols) != (lib.rows, lib.cols):
        raise DimensionMismatchError(
            f"Measurements of a {meas.rows}x{meas.cols} array against a "
            f"{lib.rows}x{lib.cols} library."
        )
    if meas.m == 0:
        raise InsufficientDataError("Cannot classify an empty measurement set.")
    contact_thr = conf.get_contact_threshold() if contact_thr is None else contact_thr
    y = meas.values
    operator = LinearOperator(lib.exemplars[meas.flat_indices])
    sparsity = default_src_sparsity(meas.m) if sparsity is None else int(sparsity)
    sparsity = max(1, min(sparsity, operator.rows, operator.cols))
    code = omp(operator, y, sparsity)

    entry_classes = np.asarray(lib.entry_classes)
    selected_classes = entry_classes[code.indices]
    residuals = []
    for class_index in range(lib.class_count):
        mine = selected_classes == class_index
        approx = operator.matrix[:, code.indices[mine]] @ code.coefficients[mine]
        residuals.append(float(np.linalg.norm(y - approx)))
    winner = int(np.argmin(residuals))
    no_contact = float(np.linalg.norm(y)) <= contact_thr * math.sqrt(meas.m)
    if no_contact:
        logger.warning("Frame %d is below the contact threshold", meas.frame_index)
    result = SrcResult(
        label=NO_CONTACT_LABEL if no_contact else lib.class_labels[winner],
        class_index=winner,
        residuals=tuple(residuals),
        no_contact=no_contact,
        code=code,
    )
    signals.frame_classified.send(sender=SrcLibrary, result=result)
    return result


def rapid_classify(
    source: FrameSource,
    lib: SrcLibrary,
    cfg: SamplingConfig,
    window_ms: float,
    contact_thr: float | None = None,
    sparsity: int | None = None,
) -> RapidResult:
    """
    Classify as soon as a fixed time after first contact has passed.

    Frames are sampled back to back from t = 0. First contact is the first
    reading above ``contact_thr``. The frame classified is the last one whose
    acquisition ends no later than ``window_ms`` after first contact; when
    even the contact frame ends later, the contact frame is used.

    Raises:
        ConfigError: If ``window_ms`` is not positive.
        NoContactError: If the stream ends without contact.
    """
    if not window_ms > 0:
        raise ConfigError("window_ms must be positive.")
    contact_thr = conf.get_contact_threshold() if contact_thr is None else contact_thr
    clock = MeasurementClock(0, cfg.sample_rate_hz)

    contact_us = None
    deadline = None
    chosen = None
    contact_frame = None
    frames_in_window = 0
    for meas in sample_stream(source, cfg):
        end_us = meas.start_us + clock.offset_us(meas.m)
        if contact_us is None:
            above = np.flatnonzero(meas.values > contact_thr)
            if above.size == 0:
                continue
            contact_us = int(meas.times[above[0]])
            deadline = contact_us + window_ms * 1000.0
            contact_frame = meas
        if end_us > deadline:
            break
        chosen = meas
        if meas.start_us >= contact_us:
            frames_in_window += 1
    if contact_us is None:
        raise NoContactError(f"No reading above {contact_thr} within {source.duration_us} us.")
    if chosen is None:
        chosen = contact_frame
    result = src_classify(chosen, lib, sparsity, contact_thr)
    return RapidResult(result.label, result, contact_us, chosen.frame_index, frames_in_window)
