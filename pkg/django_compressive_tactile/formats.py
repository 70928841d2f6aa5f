"""
Bit-exact binary file formats.

All formats are little-endian and carry a four-byte magic plus a u16 version:

- ``.tfr`` frame streams (magic "TFRM")
- ``.tdl`` patch dictionaries (magic "TDIC")
- ``.tms`` measurement streams (magic "TMSR", one header per MeasurementSet)
- ``.tsrc`` SRC libraries (magic "TSRC")
"""
from __future__ import annotations

import logging
import struct
from typing import BinaryIO, Iterable, Sequence

import numpy as np
from django.db.models import IntegerChoices

from django_compressive_tactile.core import (
    Dictionary,
    Measurement,
    MeasurementSet,
    PixelIndex,
    Scheme,
    TactileFrame,
)
from django_compressive_tactile.exceptions import ConfigError, DimensionMismatchError, FormatError

logger = logging.getLogger(__name__)

VERSION = 1

FRAME_MAGIC = b"TFRM"
DICTIONARY_MAGIC = b"TDIC"
MEASUREMENT_MAGIC = b"TMSR"
LIBRARY_MAGIC = b"TSRC"

_FRAME_HEADER = struct.Struct("<4sHHHIB")
_DICTIONARY_HEADER = struct.Struct("<4sHHHI")
_MEASUREMENT_HEADER = struct.Struct("<4sHHHBIQI")
_LIBRARY_HEADER = struct.Struct("<4sHHHII")

MEASUREMENT_RECORD = np.dtype(
    [("row", "<u2"), ("col", "<u2"), ("value", "<f4"), ("t_us", "<u8")]
)

UINT16_MAX = 65535


class FrameDtype(IntegerChoices):
    UINT16 = 0, "uint16"
    FLOAT32 = 1, "float32"

    @property
    def numpy_dtype(self) -> np.dtype:
        return np.dtype("<u2") if self == FrameDtype.UINT16 else np.dtype("<f4")

    @classmethod
    def parse(cls, name) -> "FrameDtype":
        key = str(name).strip().lower()
        for member in cls:
            if member.label == key:
                return member
        raise ConfigError(f"Unknown frame dtype '{name}'; use uint16 or float32.")


def _read_exact(stream: BinaryIO, size: int, what: str) -> bytes:
    data = stream.read(size)
    if len(data) != size:
        raise FormatError(f"Truncated payload while reading {what}.")
    return data


def _check_magic(magic: bytes, expected: bytes, version: int) -> None:
    if magic != expected:
        raise FormatError(f"Bad magic {magic!r}, expected {expected!r}.")
    if version != VERSION:
        raise FormatError(f"Unsupported version {version}.")


def infer_frame_dtype(frames: Sequence[TactileFrame]) -> FrameDtype:
    """Returns UINT16 when every value is an integer ADC count, FLOAT32 otherwise."""
    for frame in frames:
        values = frame.values
        if values.max(initial=0) > UINT16_MAX or not np.all(values == np.round(values)):
            return FrameDtype.FLOAT32
    return FrameDtype.UINT16


# =============================================================================
# Frame streams (.tfr)
# =============================================================================


def write_frame_stream(
    path, frames: Sequence[TactileFrame], dtype: FrameDtype | None = None
) -> None:
    """
    Write ``frames`` to a .tfr file.

    Args:
        path: Destination path.
        frames: Frames sharing rows/cols.
        dtype: Value encoding; inferred with ``infer_frame_dtype`` when None.

    Raises:
        DimensionMismatchError: If the frames disagree on rows/cols.
        OSError: On I/O failure.
    """
    frames = list(frames)
    rows, cols = (frames[0].rows, frames[0].cols) if frames else (0, 0)
    for frame in frames:
        if (frame.rows, frame.cols) != (rows, cols):
            raise DimensionMismatchError(
                f"Frame of {frame.rows}x{frame.cols} in a {rows}x{cols} stream."
            )
    dtype = FrameDtype(dtype) if dtype is not None else infer_frame_dtype(frames)
    np_dtype = dtype.numpy_dtype
    lossy = 0
    with open(path, "wb") as stream:
        stream.write(_FRAME_HEADER.pack(FRAME_MAGIC, VERSION, rows, cols, len(frames), int(dtype)))
        for frame in frames:
            if dtype == FrameDtype.UINT16:
                encoded = np.clip(np.rint(frame.values), 0, UINT16_MAX).astype(np_dtype)
            else:
                encoded = frame.values.astype(np_dtype)
            if not np.array_equal(encoded, frame.values):
                lossy += 1
            stream.write(struct.pack("<Q", frame.timestamp_us))
            stream.write(encoded.tobytes(order="C"))
    if lossy:
        logger.warning(
            "%d of %d frames were rounded to %s in %s", lossy, len(frames), dtype.label, path
        )


def read_frame_stream(path) -> list[TactileFrame]:
    """
    Read every frame of a .tfr file in file order.

    Raises:
        FormatError: On bad magic, unsupported version/dtype or truncated payload.
    """
    with open(path, "rb") as stream:
        header = _read_exact(stream, _FRAME_HEADER.size, "frame header")
        magic, version, rows, cols, count, dtype_code = _FRAME_HEADER.unpack(header)
        _check_magic(magic, FRAME_MAGIC, version)
        try:
            dtype = FrameDtype(dtype_code)
        except ValueError:
            raise FormatError(f"Unsupported frame dtype {dtype_code}.")
        np_dtype = dtype.numpy_dtype
        payload = rows * cols * np_dtype.itemsize
        frames = []
        for index in range(count):
            (timestamp,) = struct.unpack("<Q", _read_exact(stream, 8, f"frame {index}"))
            values = np.frombuffer(_read_exact(stream, payload, f"frame {index}"), dtype=np_dtype)
            frames.append(TactileFrame(values.reshape(rows, cols).astype(np.float64), timestamp))
        return frames


# =============================================================================
# Dictionaries (.tdl)
# =============================================================================


def write_dictionary(path, dictionary: Dictionary) -> None:
    """Write ``dictionary`` as 32-bit float atoms, one atom after the other."""
    with open(path, "wb") as stream:
        stream.write(
            _DICTIONARY_HEADER.pack(
                DICTIONARY_MAGIC,
                VERSION,
                dictionary.patch_rows,
                dictionary.patch_cols,
                dictionary.atom_count,
            )
        )
        # atoms are stored consecutively: transpose to (K, d) before flattening
        stream.write(np.ascontiguousarray(dictionary.atoms.T).astype("<f4").tobytes())


def read_dictionary(path) -> Dictionary:
    """
    Read a .tdl dictionary.

    Raises:
        FormatError: On bad magic, unsupported version or truncated payload.
    """
    with open(path, "rb") as stream:
        header = _read_exact(stream, _DICTIONARY_HEADER.size, "dictionary header")
        magic, version, patch_rows, patch_cols, count = _DICTIONARY_HEADER.unpack(header)
        _check_magic(magic, DICTIONARY_MAGIC, version)
        size = patch_rows * patch_cols
        raw = _read_exact(stream, size * count * 4, "dictionary atoms")
    atoms = np.frombuffer(raw, dtype="<f4").reshape(count, size).T.astype(np.float64)
    return Dictionary(patch_rows, patch_cols, atoms)


# =============================================================================
# Measurement streams (.tms)
# =============================================================================


def _write_measurement_set(stream: BinaryIO, measurement_set: MeasurementSet) -> None:
    stream.write(
        _MEASUREMENT_HEADER.pack(
            MEASUREMENT_MAGIC,
            VERSION,
            measurement_set.rows,
            measurement_set.cols,
            int(measurement_set.scheme),
            measurement_set.frame_index,
            measurement_set.seed,
            measurement_set.m,
        )
    )
    records = np.zeros(measurement_set.m, dtype=MEASUREMENT_RECORD)
    records["row"] = measurement_set.row_indices
    records["col"] = measurement_set.col_indices
    records["value"] = measurement_set.values
    records["t_us"] = measurement_set.times
    stream.write(records.tobytes())


def write_measurement_stream(path, measurement_sets: Iterable[MeasurementSet]) -> int:
    """
    Write MeasurementSets back to back into a .tms file.

    Returns:
        Number of sets written.
    """
    written = 0
    with open(path, "wb") as stream:
        for measurement_set in measurement_sets:
            _write_measurement_set(stream, measurement_set)
            written += 1
    return written


def read_measurement_stream(path) -> list[MeasurementSet]:
    """
    Read every MeasurementSet of a .tms file; an empty file is an empty stream.

    Raises:
        FormatError: On bad magic, unsupported version/scheme or truncated records.
    """
    sets = []
    with open(path, "rb") as stream:
        while True:
            header = stream.read(_MEASUREMENT_HEADER.size)
            if not header:
                break
            if len(header) != _MEASUREMENT_HEADER.size:
                raise FormatError("Truncated payload while reading measurement header.")
            magic, version, rows, cols, scheme, frame_index, seed, count = (
                _MEASUREMENT_HEADER.unpack(header)
            )
            _check_magic(magic, MEASUREMENT_MAGIC, version)
            try:
                scheme = Scheme(scheme)
            except ValueError:
                raise FormatError(f"Unsupported scheme code {scheme}.")
            raw = _read_exact(stream, count * MEASUREMENT_RECORD.itemsize, "measurement records")
            records = np.frombuffer(raw, dtype=MEASUREMENT_RECORD)
            measurements = tuple(
                Measurement(PixelIndex(int(r["row"]), int(r["col"])), float(r["value"]), int(r["t_us"]))
                for r in records
            )
            sets.append(MeasurementSet(rows, cols, scheme, frame_index, seed, measurements))
    return sets


# =============================================================================
# SRC libraries (.tsrc)
# =============================================================================


def write_src_library(path, library) -> None:
    """Write an SrcLibrary: header, class-label table, entry class indices, exemplars."""
    with open(path, "wb") as stream:
        stream.write(
            _LIBRARY_HEADER.pack(
                LIBRARY_MAGIC,
                VERSION,
                library.rows,
                library.cols,
                library.entry_count,
                library.class_count,
            )
        )
        for label in library.class_labels:
            encoded = label.encode("utf-8")
            stream.write(struct.pack("<H", len(encoded)))
            stream.write(encoded)
        stream.write(np.asarray(library.entry_classes, dtype="<u4").tobytes())
        stream.write(np.ascontiguousarray(library.exemplars.T).astype("<f4").tobytes())


def read_src_library(path):
    """
    Read a .tsrc SRC library.

    Raises:
        FormatError: On bad magic, unsupported version or truncated payload.
    """
    from django_compressive_tactile.classification import SrcLibrary

    with open(path, "rb") as stream:
        header = _read_exact(stream, _LIBRARY_HEADER.size, "library header")
        magic, version, rows, cols, entries, classes = _LIBRARY_HEADER.unpack(header)
        _check_magic(magic, LIBRARY_MAGIC, version)
        labels = []
        for _ in range(classes):
            (length,) = struct.unpack("<H", _read_exact(stream, 2, "class label"))
            labels.append(_read_exact(stream, length, "class label").decode("utf-8"))
        entry_classes = np.frombuffer(_read_exact(stream, entries * 4, "entry table"), dtype="<u4")
        raw = _read_exact(stream, entries * rows * cols * 4, "exemplars")
    exemplars = np.frombuffer(raw, dtype="<f4").reshape(entries, rows * cols).T.astype(np.float64)
    return SrcLibrary(
        rows=rows,
        cols=cols,
        class_labels=tuple(labels),
        entry_classes=tuple(int(c) for c in entry_classes),
        exemplars=exemplars,
    )
