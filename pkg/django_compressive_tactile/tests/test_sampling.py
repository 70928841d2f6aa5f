import math
from dataclasses import replace

import numpy as np
from django.test import SimpleTestCase, override_settings
from scipy import ndimage

from django_compressive_tactile import signals
from django_compressive_tactile.core import MeasurementSet, PixelIndex, Scheme, TactileFrame
from django_compressive_tactile.exceptions import ConfigError, DimensionMismatchError
from django_compressive_tactile.sampling import (
    MeasurementClock,
    SamplingConfig,
    binary_sample,
    build_binary_order,
    execute_plan,
    frame_rate,
    random_plan,
    sample_recorded,
    sample_frame,
    sample_stream,
    uniform_plan,
)
from django_compressive_tactile.tests.helpers import StepSource, blob_frame, static_source

RATE = 55936.0


class FrameRateTest(SimpleTestCase):
    def test_reference_rates(self):
        self.assertAlmostEqual(frame_rate(55, RATE), 1017.02, places=2)
        self.assertAlmostEqual(frame_rate(56, RATE), 998.86, places=2)
        self.assertAlmostEqual(frame_rate(88, RATE), 635.6, places=1)
        self.assertAlmostEqual(frame_rate(1024, RATE), 54.62, delta=0.01)

    def test_m_must_be_positive(self):
        with self.assertRaises(ConfigError):
            frame_rate(0, RATE)

    @override_settings(DJANGO_COMPRESSIVE_TACTILE_SAMPLE_RATE_HZ=1000)
    def test_rate_from_settings(self):
        self.assertEqual(frame_rate(10), 100.0)


class MeasurementClockTest(SimpleTestCase):
    def test_offsets_are_floored(self):
        clock = MeasurementClock(0, RATE)
        self.assertEqual(clock.offset_us(1), 17)
        self.assertEqual(clock.offset_us(55), 983)

    def test_tick_advances_one_period(self):
        clock = MeasurementClock(100, RATE)
        self.assertEqual([clock.tick() for _ in range(3)], [100, 117, 135])
        self.assertEqual(clock.now(), 153)
        clock.restart(0)
        self.assertEqual(clock.now(), 0)

    def test_rate_must_be_positive(self):
        with self.assertRaises(ConfigError):
            MeasurementClock(0, 0)


class SamplingConfigTest(SimpleTestCase):
    def test_defaults_come_from_settings(self):
        cfg = SamplingConfig("binary", 10)
        self.assertEqual(cfg.scheme, Scheme.BINARY)
        self.assertAlmostEqual(cfg.ns_thr, 0.05 * 4095.0)
        self.assertEqual(cfg.neighbor_order, ("E", "S", "W", "N", "SE", "SW", "NW", "NE"))

    def test_invalid_values(self):
        with self.assertRaises(ConfigError):
            SamplingConfig(Scheme.RANDOM, 0)
        with self.assertRaises(ConfigError):
            SamplingConfig(Scheme.BINARY, 4, ns_thr=-1.0)
        with self.assertRaises(ConfigError):
            SamplingConfig(Scheme.BINARY, 4, neighbor_order=("E", "E"))
        with self.assertRaises(ConfigError):
            SamplingConfig("zigzag", 4)

    def test_validate_against_grid(self):
        with self.assertRaises(ConfigError):
            SamplingConfig(Scheme.RANDOM, 17).validate(4, 4)
        with self.assertRaises(DimensionMismatchError):
            SamplingConfig(Scheme.BINARY, 4).validate(4, 5)


class BinaryOrderTest(SimpleTestCase):
    def test_four_by_four_prefix(self):
        order = build_binary_order(4, 4)
        self.assertEqual(
            order[:7],
            [(1, 1), (1, 0), (1, 2), (0, 0), (2, 0), (0, 2), (2, 2)],
        )

    def test_order_is_a_permutation(self):
        for n in (1, 2, 4, 8, 15, 16, 32):
            with self.subTest(n=n):
                order = build_binary_order(n, n)
                self.assertEqual(len(order), n * n)
                self.assertEqual(
                    set(order), {PixelIndex(r, c) for r in range(n) for c in range(n)}
                )

    def test_non_square_rejected(self):
        with self.assertRaises(DimensionMismatchError):
            build_binary_order(4, 8)


class UniformPlanTest(SimpleTestCase):
    def test_first_frame_is_the_stride_lattice(self):
        self.assertEqual(uniform_plan(4, 4, 4, 0), [(0, 0), (0, 2), (2, 0), (2, 2)])
        self.assertEqual(uniform_plan(4, 4, 4, 1), [(0, 1), (0, 3), (2, 1), (2, 3)])

    def test_frames_cover_every_pixel(self):
        for rows, cols, m in ((4, 4, 4), (32, 32, 64), (32, 32, 256), (5, 7, 6)):
            with self.subTest(rows=rows, cols=cols, m=m):
                covered = set()
                for frame in range(math.ceil(rows * cols / m)):
                    plan = uniform_plan(rows, cols, m, frame)
                    self.assertEqual(len(plan), m)
                    self.assertEqual(len(set(plan)), m)
                    covered.update(plan)
                self.assertEqual(len(covered), rows * cols)

    def test_m_above_pixel_count(self):
        with self.assertRaises(ConfigError):
            uniform_plan(2, 2, 5, 0)


class RandomPlanTest(SimpleTestCase):
    def test_reproducible_per_seed_and_frame(self):
        self.assertEqual(random_plan(32, 32, 64, 7, 3), random_plan(32, 32, 64, 7, 3))
        self.assertNotEqual(random_plan(32, 32, 64, 7, 3), random_plan(32, 32, 64, 7, 4))
        self.assertNotEqual(random_plan(32, 32, 64, 7, 3), random_plan(32, 32, 64, 8, 3))

    def test_pixels_are_distinct_and_in_range(self):
        plan = random_plan(8, 5, 40, 1, 0)
        self.assertEqual(len(set(plan)), 40)
        self.assertTrue(all(0 <= p.row < 8 and 0 <= p.col < 5 for p in plan))


class ExecutePlanTest(SimpleTestCase):
    def test_reads_see_a_changing_scene(self):
        source = StepSource(2, 2, before=0.0, after=5.0, step_us=30)
        clock = MeasurementClock(0, RATE)
        meas = execute_plan(source, [(0, 0), (0, 1), (1, 0), (1, 1)], clock)
        self.assertEqual(list(meas.times), [0, 17, 35, 53])
        self.assertEqual(list(meas.values), [0.0, 0.0, 5.0, 5.0])

    def test_repeated_pixel_rejected(self):
        with self.assertRaises(ValueError):
            execute_plan(static_source(np.zeros((2, 2))), [(0, 0), (0, 0)], MeasurementClock(0, RATE))

    def test_pixel_outside_source(self):
        with self.assertRaises(DimensionMismatchError):
            execute_plan(static_source(np.zeros((2, 2))), [(2, 0)], MeasurementClock(0, RATE))


class BinarySampleTest(SimpleTestCase):
    def sample(self, grid, m, ns_thr=10.0):
        cfg = SamplingConfig(Scheme.BINARY, m, ns_thr=ns_thr, sample_rate_hz=RATE)
        return binary_sample(static_source(grid), cfg, MeasurementClock(0, RATE))

    def test_cold_frame_follows_the_order(self):
        meas = self.sample(np.zeros((4, 4)), 7)
        self.assertEqual(meas.pixels, build_binary_order(4, 4)[:7])
        self.assertFalse(meas.truncated)

    def test_hot_pixel_reads_its_neighbors(self):
        grid = np.zeros((4, 4))
        grid[1, 1] = 1000.0
        meas = self.sample(grid, 5)
        self.assertEqual(meas.pixels, [(1, 1), (1, 2), (2, 1), (1, 0), (0, 1)])

    def test_search_is_depth_first(self):
        grid = np.zeros((4, 4))
        grid[1, 1] = grid[1, 2] = 1000.0
        meas = self.sample(grid, 4)
        self.assertEqual(meas.pixels, [(1, 1), (1, 2), (1, 3), (2, 2)])

    def test_infinite_threshold_disables_search(self):
        grid = np.full((4, 4), 1000.0)
        meas = self.sample(grid, 7, ns_thr=math.inf)
        self.assertEqual(meas.pixels, build_binary_order(4, 4)[:7])

    def test_blob_is_fully_read(self):
        grid = blob_frame(16, 16, [(4, 11)], radius=1)
        meas = self.sample(grid, 60)
        read = set(meas.pixels)
        for row in range(3, 6):
            for col in range(10, 13):
                self.assertIn((row, col), read)

    def test_wrong_scheme(self):
        cfg = SamplingConfig(Scheme.RANDOM, 4, sample_rate_hz=RATE)
        with self.assertRaises(ConfigError):
            binary_sample(static_source(np.zeros((4, 4))), cfg, MeasurementClock(0, RATE))


class BinaryRandomScenesTest(SimpleTestCase):
    """Structural checks of binary sampling over many random static scenes."""

    SCENES = 10_000
    SIDES = (4, 8, 9)

    def test_random_scenes(self):
        rng = np.random.default_rng(2024)
        orders = {side: build_binary_order(side, side) for side in self.SIDES}
        structure = np.ones((3, 3), dtype=bool)
        for scene in range(self.SCENES):
            side = int(rng.choice(self.SIDES))
            size = side * side
            grid = np.where(rng.random((side, side)) < rng.uniform(0.0, 0.3), 1000.0, 0.0)
            source = static_source(grid)
            cfg = SamplingConfig(Scheme.BINARY, size, ns_thr=10.0, sample_rate_hz=RATE)
            full = binary_sample(source, cfg, MeasurementClock(0, RATE), order=orders[side])
            m = int(rng.integers(1, size + 1))
            meas = binary_sample(
                source, cfg.with_m(m), MeasurementClock(0, RATE), order=orders[side]
            )
            msg = f"scene {scene}"
            self.assertEqual(len(meas.pixels), m, msg)
            self.assertEqual(len(set(meas.pixels)), m, msg)
            self.assertEqual(meas.pixels, full.pixels[:m], msg)
            if scene % 10 == 0:
                blind = binary_sample(
                    source,
                    replace(cfg, m=m, ns_thr=math.inf),
                    MeasurementClock(0, RATE),
                    order=orders[side],
                )
                self.assertEqual(blind.pixels, orders[side][:m], msg)

            position = {pixel: index for index, pixel in enumerate(full.pixels)}
            read = set(meas.pixels)
            labels, count = ndimage.label(grid > 10.0, structure=structure)
            for component in range(1, count + 1):
                mask = labels == component
                region = ndimage.binary_dilation(mask, structure=structure)
                hot = [PixelIndex(int(r), int(c)) for r, c in zip(*np.nonzero(mask))]
                first = min(position[pixel] for pixel in hot)
                # the search reads the component and its cold ring in one run
                cells = zip(*np.nonzero(region))
                last = max(position[PixelIndex(int(r), int(c))] for r, c in cells)
                self.assertLess(last, first + int(region.sum()), msg)
                if first + int(region.sum()) <= m:
                    self.assertTrue(read.issuperset(hot), msg)


class SampleFrameTest(SimpleTestCase):
    def test_full_raster_reads_everything(self):
        grid = np.arange(6, dtype=float).reshape(2, 3)
        cfg = SamplingConfig(Scheme.FULL_RASTER, 1, sample_rate_hz=RATE)
        meas = sample_frame(static_source(grid), cfg, MeasurementClock(0, RATE))
        self.assertEqual(meas.m, 6)
        np.testing.assert_array_equal(meas.to_frame().values, grid)

    def test_random_set_records_seed(self):
        cfg = SamplingConfig(Scheme.RANDOM, 5, seed=42, sample_rate_hz=RATE)
        meas = sample_frame(static_source(np.zeros((4, 4))), cfg, MeasurementClock(0, RATE), 2)
        self.assertEqual((meas.seed, meas.frame_index, meas.m), (42, 2, 5))

    def test_frame_sampled_signal(self):
        received = []

        def handler(sender, measurement_set, **kwargs):
            received.append(measurement_set)

        signals.frame_sampled.connect(handler)
        try:
            cfg = SamplingConfig(Scheme.UNIFORM, 4, sample_rate_hz=RATE)
            meas = sample_frame(static_source(np.zeros((4, 4))), cfg, MeasurementClock(0, RATE))
        finally:
            signals.frame_sampled.disconnect(handler)
        self.assertEqual(len(received), 1)
        self.assertIs(received[0], meas)
        self.assertIsInstance(received[0], MeasurementSet)


class SampleStreamTest(SimpleTestCase):
    def test_frames_run_back_to_back(self):
        source = StepSource(2, 2, before=0.0, after=1.0, step_us=500)
        cfg = SamplingConfig(Scheme.FULL_RASTER, 4, sample_rate_hz=RATE)
        sets = list(sample_stream(source, cfg))
        self.assertEqual(len(sets), 15)
        self.assertEqual([s.start_us for s in sets[:3]], [0, 71, 142])
        self.assertEqual([s.frame_index for s in sets], list(range(15)))
        self.assertLess(sets[-1].start_us, source.duration_us)

    def test_static_source_gives_one_frame(self):
        cfg = SamplingConfig(Scheme.UNIFORM, 4, sample_rate_hz=RATE)
        self.assertEqual(len(list(sample_stream(static_source(np.zeros((4, 4))), cfg))), 1)

    def test_max_frames(self):
        source = StepSource(2, 2, before=0.0, after=1.0, step_us=500)
        cfg = SamplingConfig(Scheme.RANDOM, 2, sample_rate_hz=RATE)
        self.assertEqual(len(list(sample_stream(source, cfg, max_frames=3))), 3)

    def test_uniform_phase_rotates_across_the_stream(self):
        source = StepSource(4, 4, before=0.0, after=1.0, step_us=10_000)
        cfg = SamplingConfig(Scheme.UNIFORM, 4, sample_rate_hz=RATE)
        sets = list(sample_stream(source, cfg, max_frames=4))
        covered = set()
        for meas in sets:
            covered.update(meas.pixels)
        self.assertEqual(len(covered), 16)


class SampleRecordedTest(SimpleTestCase):
    def test_full_raster_reproduces_every_frame(self):
        rng = np.random.default_rng(3)
        frames = [TactileFrame(rng.uniform(0, 100, (8, 8)), t) for t in (0, 500, 1000, 1500)]
        cfg = SamplingConfig(Scheme.FULL_RASTER, 64, sample_rate_hz=RATE)
        sets = sample_recorded(frames, cfg)
        self.assertEqual([s.start_us for s in sets], [0, 500, 1000, 1500])
        self.assertEqual([s.frame_index for s in sets], [0, 1, 2, 3])
        for meas, frame in zip(sets, frames):
            np.testing.assert_array_equal(meas.to_frame().values, frame.values)

    def test_binary_reads_only_its_own_frame(self):
        hit = TactileFrame(blob_frame(6, 6, [(2, 2)]), 0)
        empty = TactileFrame(np.zeros((6, 6)), 100)
        cfg = SamplingConfig(Scheme.BINARY, 36, ns_thr=10.0, sample_rate_hz=RATE)
        first, second = sample_recorded([hit, empty], cfg)
        self.assertGreater(first.total_force, 0)
        self.assertEqual(second.total_force, 0)

    def test_empty_and_mismatched_streams(self):
        cfg = SamplingConfig(Scheme.RANDOM, 4, sample_rate_hz=RATE)
        self.assertEqual(sample_recorded([], cfg), [])
        with self.assertRaises(DimensionMismatchError):
            sample_recorded([TactileFrame(np.zeros((2, 2)), 0), TactileFrame(np.zeros((3, 2)), 5)], cfg)
