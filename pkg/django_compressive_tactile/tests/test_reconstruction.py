import statistics
import time

import numpy as np
from django.test import SimpleTestCase

from django_compressive_tactile import signals
from django_compressive_tactile.analytics import support_accuracy
from django_compressive_tactile.core import (
    Dictionary,
    MeasurementSet,
    PixelIndex,
    Scheme,
    TactileFrame,
)
from django_compressive_tactile.dictionary import PatchSet, ksvd_train, overcomplete_dct
from django_compressive_tactile.exceptions import (
    ConfigError,
    DimensionMismatchError,
    InsufficientDataError,
)
from django_compressive_tactile.reconstruction import (
    ReconstructionParams,
    interpolate_baseline,
    patch_grid,
    reconstruct_frame,
    reconstruct_stream,
)
from django_compressive_tactile.sampling import (
    MeasurementClock,
    SamplingConfig,
    random_plan,
    sample_frame,
)
from django_compressive_tactile.tests.helpers import static_source, timing_test

RATE = 55936.0
EXACT = ReconstructionParams(sparsity_fraction=1.0, residual_rtol=0.0)


def measure(grid, scheme, m, seed=0):
    cfg = SamplingConfig(scheme, m, seed=seed, sample_rate_hz=RATE)
    return sample_frame(static_source(grid), cfg, MeasurementClock(0, RATE))


def plane_set(rows, cols, value, pixels):
    readings = [(p, value(p.row, p.col), i) for i, p in enumerate(pixels)]
    return MeasurementSet(rows, cols, Scheme.RANDOM, 0, 0, readings)


class ReconstructionParamsTest(SimpleTestCase):
    def test_defaults(self):
        params = ReconstructionParams()
        self.assertEqual((params.patch_rows, params.patch_cols, params.overlap), (8, 8, 4))
        self.assertEqual(params.sparsity_fraction, 0.25)

    def test_patch_sparsity(self):
        params = ReconstructionParams()
        self.assertEqual(params.patch_sparsity(13, 100), 4)
        self.assertEqual(params.patch_sparsity(1, 100), 1)
        self.assertEqual(params.patch_sparsity(20, 2), 2)

    def test_invalid(self):
        with self.assertRaises(ConfigError):
            ReconstructionParams(overlap=0)
        with self.assertRaises(ConfigError):
            ReconstructionParams(overlap=8)
        with self.assertRaises(ConfigError):
            ReconstructionParams(sparsity_fraction=0.0)


class PatchGridTest(SimpleTestCase):
    def test_regular_grid(self):
        origins = patch_grid(32, 32, ReconstructionParams())
        self.assertEqual(len(origins), 49)
        self.assertEqual({o.row for o in origins}, set(range(0, 25, 4)))

    def test_last_origin_is_clamped(self):
        origins = patch_grid(9, 9, ReconstructionParams())
        self.assertEqual(origins, [(0, 0), (0, 1), (1, 0), (1, 1)])

    def test_patch_larger_than_array(self):
        with self.assertRaises(DimensionMismatchError):
            patch_grid(4, 16, ReconstructionParams())


class ReconstructFrameTest(SimpleTestCase):
    def setUp(self):
        self.grid = np.random.default_rng(11).uniform(0.0, 1.0, size=(16, 16))
        self.basis = overcomplete_dct(8, 8, 64)

    def test_complete_sampling_is_exact(self):
        meas = measure(self.grid * 100.0, Scheme.FULL_RASTER, 256)
        frame = reconstruct_frame(meas, self.basis, EXACT)
        rms = np.sqrt(np.mean((frame.values - self.grid * 100.0) ** 2))
        self.assertLess(rms, 1e-6)

    def test_measured_pixels_are_reproduced(self):
        meas = measure(self.grid, Scheme.RANDOM, 100, seed=4)
        frame = reconstruct_frame(meas, self.basis, EXACT)
        np.testing.assert_allclose(
            frame.values[meas.row_indices, meas.col_indices], meas.values, atol=1e-6
        )

    def test_zero_measurements_give_zero_frame(self):
        meas = measure(np.zeros((16, 16)), Scheme.RANDOM, 40)
        frame = reconstruct_frame(meas, self.basis)
        self.assertEqual(frame.total_force, 0.0)

    def test_sparse_patches_contribute_zeros(self):
        meas = measure(self.grid, Scheme.RANDOM, 40)
        params = ReconstructionParams(min_patch_measurements=65)
        self.assertEqual(reconstruct_frame(meas, self.basis, params).total_force, 0.0)

    def test_timestamp_is_first_read(self):
        cfg = SamplingConfig(Scheme.RANDOM, 30, sample_rate_hz=RATE)
        meas = sample_frame(static_source(self.grid), cfg, MeasurementClock(5000, RATE))
        self.assertEqual(reconstruct_frame(meas, self.basis).timestamp_us, 5000)

    def test_threads_do_not_change_the_result(self):
        meas = measure(self.grid, Scheme.RANDOM, 80, seed=2)
        single = reconstruct_frame(meas, overcomplete_dct(8, 8, 256), threads=1)
        pooled = reconstruct_frame(meas, overcomplete_dct(8, 8, 256), threads=4)
        np.testing.assert_array_equal(single.values, pooled.values)

    def test_dictionary_patch_size_must_match(self):
        meas = measure(self.grid, Scheme.RANDOM, 20)
        with self.assertRaises(DimensionMismatchError):
            reconstruct_frame(meas, Dictionary(4, 4, np.eye(16)))

    def test_empty_set(self):
        with self.assertRaises(InsufficientDataError):
            reconstruct_frame(MeasurementSet(16, 16, Scheme.RANDOM, 0, 0, ()), self.basis)

    def test_frame_reconstructed_signal(self):
        methods = []

        def handler(sender, frame, method, **kwargs):
            methods.append(method)

        signals.frame_reconstructed.connect(handler)
        try:
            meas = measure(self.grid, Scheme.RANDOM, 20)
            reconstruct_stream([meas, meas], self.basis)
            interpolate_baseline(meas)
        finally:
            signals.frame_reconstructed.disconnect(handler)
        self.assertEqual(methods, ["dictionary", "dictionary", "interpolation"])

    @timing_test
    def test_throughput(self):
        rng = np.random.default_rng(0)
        atoms = rng.standard_normal((64, 50))
        dictionary = Dictionary(8, 8, atoms / np.linalg.norm(atoms, axis=0))
        meas = measure(rng.uniform(0, 1000, size=(32, 32)), Scheme.RANDOM, 50)
        durations = []
        for _ in range(50):
            started = time.perf_counter()
            reconstruct_frame(meas, dictionary, threads=1)
            durations.append(time.perf_counter() - started)
        self.assertLess(statistics.median(durations), 1.4e-3)


class InterpolateBaselineTest(SimpleTestCase):
    def plane(self, row, col):
        return 2.0 * row + 3.0 * col + 5.0

    def test_plane_is_reproduced_everywhere(self):
        pixels = random_plan(8, 8, 20, 1, 0)
        frame = interpolate_baseline(plane_set(8, 8, self.plane, pixels))
        rows, cols = np.indices((8, 8))
        np.testing.assert_allclose(frame.values, self.plane(rows, cols), atol=1e-6)

    def test_negative_estimates_are_clamped(self):
        pixels = [PixelIndex(0, 0), PixelIndex(0, 7), PixelIndex(7, 0), PixelIndex(7, 7)]

        def slope(row, col):
            return 10.0 - 2.0 * col

        meas = plane_set(8, 8, slope, pixels)
        clamped = interpolate_baseline(meas)
        raw = interpolate_baseline(meas, nonneg_clamp=False)
        self.assertAlmostEqual(raw.values[3, 7], -4.0)
        self.assertEqual(clamped.values[3, 7], 0.0)
        self.assertAlmostEqual(clamped.values[3, 2], 6.0)

    def test_collinear_points_use_nearest_value(self):
        pixels = [PixelIndex(0, 0), PixelIndex(0, 3)]
        meas = plane_set(2, 4, lambda row, col: 1.0 if col == 0 else 5.0, pixels)
        frame = interpolate_baseline(meas)
        np.testing.assert_array_equal(frame.values, [[1, 1, 5, 5], [1, 1, 5, 5]])

    def test_single_point(self):
        meas = plane_set(3, 3, lambda row, col: 7.0, [PixelIndex(1, 1)])
        np.testing.assert_array_equal(interpolate_baseline(meas).values, np.full((3, 3), 7.0))

    def test_size_must_match(self):
        meas = plane_set(3, 3, lambda row, col: 7.0, [PixelIndex(1, 1)])
        with self.assertRaises(DimensionMismatchError):
            interpolate_baseline(meas, 4, 4)

    def test_empty_set(self):
        with self.assertRaises(InsufficientDataError):
            interpolate_baseline(MeasurementSet(3, 3, Scheme.RANDOM, 0, 0, ()))


def disk_mask(rows, cols, center_row, center_col, radius=2.0):
    row, col = np.ogrid[0:rows, 0:cols]
    return (row - center_row) ** 2 + (col - center_col) ** 2 <= radius**2


def learned_disk_dictionary(side=8, radius=2):
    """K-SVD over every distinct crop of a disk seen through a ``side`` window."""
    crops = {}
    for row in range(-radius, side + radius):
        for col in range(-radius, side + radius):
            mask = disk_mask(side, side, row, col, radius)
            if mask.any():
                crops.setdefault(mask.tobytes(), mask.ravel().astype(float))
    scale = np.random.default_rng(2).uniform(200.0, 1000.0, size=(len(crops), 1))
    patches = PatchSet(side, side, np.array(list(crops.values())) * scale)
    return ksvd_train(patches, len(crops), 1, iterations=2, seed=0)


def disk_frames(count, seed=11):
    """32x32 frames of 1-4 disks on a 12-pixel lattice, so an 8x8 patch sees at most one disk."""
    rng = np.random.default_rng(seed)
    centers = [(row, col) for row in (4, 16, 28) for col in (4, 16, 28)]
    frames = []
    for _ in range(count):
        grid = np.zeros((32, 32))
        for i in rng.choice(len(centers), size=rng.integers(1, 5), replace=False):
            grid[disk_mask(32, 32, *centers[i])] = rng.uniform(600.0, 1000.0)
        frames.append(grid)
    return frames


class DictionaryVersusInterpolationTest(SimpleTestCase):
    def test_learned_dictionary_codes_every_patch(self):
        dictionary = learned_disk_dictionary()
        grid = disk_frames(1)[0]
        meas = measure(grid, Scheme.FULL_RASTER, 1024)
        frame = reconstruct_frame(meas, dictionary)
        np.testing.assert_allclose(frame.values, grid, atol=1e-6)

    def test_dictionary_support_at_least_matches_interpolation(self):
        dictionary = learned_disk_dictionary()
        frames = disk_frames(200)
        for m in (64, 128, 256):
            with self.subTest(m=m):
                learned, interpolated = [], []
                for grid in frames:
                    truth = TactileFrame(grid)
                    meas = measure(grid, Scheme.BINARY, m)
                    learned.append(support_accuracy(reconstruct_frame(meas, dictionary), truth))
                    interpolated.append(support_accuracy(interpolate_baseline(meas), truth))
                self.assertGreaterEqual(np.mean(learned), np.mean(interpolated))
