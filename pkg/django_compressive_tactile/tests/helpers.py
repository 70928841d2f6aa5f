import os
import unittest

import numpy as np

from django_compressive_tactile.core import FrameSource, PixelIndex, TactileFrame, replay_source

timing_test = unittest.skipUnless(
    os.environ.get("TACTILE_TIMING_TESTS") == "1", "set TACTILE_TIMING_TESTS=1 to run timing tests"
)


def static_source(values):
    """A source that always returns ``values``."""
    return replay_source([TactileFrame(np.asarray(values, dtype=np.float64), 0)])


class StepSource(FrameSource):
    """Every pixel reads ``before`` until ``step_us`` and ``after`` from then on."""

    def __init__(self, rows, cols, before, after, step_us):
        self._rows, self._cols = rows, cols
        self.before, self.after, self.step_us = before, after, step_us

    @property
    def rows(self):
        return self._rows

    @property
    def cols(self):
        return self._cols

    @property
    def duration_us(self):
        return self.step_us * 2

    def read(self, pixel: PixelIndex, t_us: int) -> float:
        return self.after if t_us >= self.step_us else self.before


def blob_frame(rows, cols, centers, radius=1, value=1000.0):
    """Square blobs of ``value`` around each center."""
    grid = np.zeros((rows, cols))
    for row, col in centers:
        grid[max(row - radius, 0): row + radius + 1, max(col - radius, 0): col + radius + 1] = value
    return grid
