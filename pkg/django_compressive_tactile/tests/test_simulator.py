import numpy as np
from django.test import SimpleTestCase

from django_compressive_tactile.analytics import center_of_pressure
from django_compressive_tactile.core import PixelIndex
from django_compressive_tactile.exceptions import ConfigError
from django_compressive_tactile.simulator import (
    MotionKind,
    MotionProfile,
    Phantom,
    ShapeKind,
    expected_contact_frames,
    render_frames,
    render_phantom,
    scene_source,
    standard_phantoms,
)


class PhantomTest(SimpleTestCase):
    def test_disk_area(self):
        frame = render_phantom(Phantom(ShapeKind.DISK, (16, 16), 3), 32, 32)
        self.assertEqual(np.count_nonzero(frame.values), 29)
        self.assertEqual(frame.values.max(), 1000.0)

    def test_square_area(self):
        frame = render_phantom(Phantom("square", (15.5, 15.5), 4), 32, 32)
        active = np.argwhere(frame.values > 0)
        self.assertEqual(len(active), 16)
        self.assertEqual(active.min(axis=0).tolist(), [14, 14])
        self.assertEqual(active.max(axis=0).tolist(), [17, 17])

    def test_tiny_scale_is_a_single_pixel(self):
        frame = render_phantom(Phantom(ShapeKind.RING, (2.4, 3.6), 0.2), 6, 6)
        self.assertEqual(np.argwhere(frame.values > 0).tolist(), [[2, 4]])

    def test_edge_softness_widens_the_footprint(self):
        hard = render_phantom(Phantom(ShapeKind.DISK, (8, 8), 3), 17, 17)
        soft = render_phantom(Phantom(ShapeKind.DISK, (8, 8), 3, edge_softness=2.0), 17, 17)
        self.assertGreater(np.count_nonzero(soft.values), np.count_nonzero(hard.values))
        np.testing.assert_array_equal(soft.values[hard.values > 0], 1000.0)

    def test_line_follows_its_angle(self):
        horizontal = render_phantom(Phantom(ShapeKind.LINE, (5, 5), 3, thickness=1), 11, 11)
        vertical = render_phantom(Phantom(ShapeKind.LINE, (5, 5), 3, angle_deg=90, thickness=1), 11, 11)
        self.assertEqual(np.argwhere(horizontal.values > 0)[:, 0].tolist(), [5] * 7)
        np.testing.assert_array_equal(vertical.values, horizontal.values.T)

    def test_custom_mask(self):
        frame = render_phantom(Phantom(ShapeKind.CUSTOM, (5, 5), 2, mask=[[True]]), 10, 10)
        self.assertEqual(np.argwhere(frame.values > 0).tolist(), [[4, 4], [4, 5], [5, 4], [5, 5]])

    def test_invalid_phantoms(self):
        with self.assertRaises(ConfigError):
            Phantom(ShapeKind.DISK, (0, 0), -1)
        with self.assertRaises(ConfigError):
            Phantom(ShapeKind.CUSTOM, (0, 0), 1)
        with self.assertRaises(ConfigError):
            Phantom("hexagon", (0, 0), 1)

    def test_shape_aliases(self):
        self.assertEqual(ShapeKind.parse("X"), ShapeKind.CROSS)
        self.assertEqual(ShapeKind.parse("two-disks"), ShapeKind.TWO_DISKS)
        self.assertEqual(MotionKind.parse("static"), MotionKind.STATIC_INDENT)

    def test_standard_set(self):
        phantoms = standard_phantoms(32, 32)
        self.assertEqual(len(phantoms), 10)
        for label, phantom in phantoms.items():
            self.assertEqual(phantom.center, (15.5, 15.5), label)
            self.assertGreater(render_phantom(phantom, 32, 32).total_force, 0.0, label)


class MotionProfileTest(SimpleTestCase):
    def test_amplitude_is_zero_outside_the_window(self):
        for kind in MotionKind:
            motion = MotionProfile(kind, 1000, t0_us=100)
            self.assertEqual(motion.amplitude(99), 0.0)
            self.assertEqual(motion.amplitude(1100), 0.0)

    def test_static_indent_ramps(self):
        motion = MotionProfile(MotionKind.STATIC_INDENT, 1000, ramp_us=200)
        self.assertEqual(motion.amplitude(100), 0.5)
        self.assertEqual(motion.amplitude(500), 1.0)
        self.assertEqual(motion.amplitude(900), 0.5)

    def test_bounce_peaks_mid_contact(self):
        motion = MotionProfile(MotionKind.BOUNCE, 8700)
        self.assertEqual(motion.amplitude(0), 0.0)
        self.assertAlmostEqual(motion.amplitude(4350), 1.0)
        self.assertAlmostEqual(motion.amplitude(2175), 0.5)

    def test_ricochet_displacement(self):
        motion = MotionProfile(MotionKind.RICOCHET, 1000, angle_deg=90, speed_px_per_ms=2.0)
        d_row, d_col = motion.displacement(500)
        self.assertAlmostEqual(d_row, -1.0)
        self.assertAlmostEqual(d_col, 0.0)
        self.assertAlmostEqual(motion.displacement(5000)[0], -2.0)
        self.assertEqual(MotionProfile(MotionKind.BOUNCE, 1000).displacement(500), (0.0, 0.0))

    def test_invalid_profiles(self):
        with self.assertRaises(ConfigError):
            MotionProfile(MotionKind.BOUNCE, 0)
        with self.assertRaises(ConfigError):
            MotionProfile(MotionKind.STATIC_INDENT, 100, ramp_us=60)

    def test_expected_contact_frames(self):
        self.assertAlmostEqual(expected_contact_frames(8700, 42, 55936), 11.59, places=2)
        with self.assertRaises(ConfigError):
            expected_contact_frames(8700, 0, 55936)


class SceneSourceTest(SimpleTestCase):
    def setUp(self):
        self.phantom = Phantom(ShapeKind.DISK, (4, 4), 2, edge_softness=1.0)

    def test_reads_match_snapshots(self):
        source = scene_source(self.phantom, MotionProfile(MotionKind.BOUNCE, 2000), 9, 9)
        frame = source.frame_at(700)
        for row, col in [(4, 4), (4, 6), (0, 0), (2, 3)]:
            self.assertEqual(source.read(PixelIndex(row, col), 700), frame.values[row, col])
        self.assertEqual(source.duration_us, 2000)

    def test_ricochet_moves_the_center(self):
        motion = MotionProfile(MotionKind.RICOCHET, 2000, angle_deg=0, speed_px_per_ms=2.0)
        source = scene_source(self.phantom, motion, 9, 12)
        start = center_of_pressure(source.frame_at(0))
        end = center_of_pressure(source.frame_at(1999))
        self.assertAlmostEqual(start.col, 4.0)
        self.assertAlmostEqual(end.col, 8.0, delta=0.2)
        self.assertAlmostEqual(end.row, 4.0)
        self.assertAlmostEqual(
            source.read(PixelIndex(4, 7), 1500), source.frame_at(1500).values[4, 7]
        )

    def test_noise_is_deterministic(self):
        motion = MotionProfile(MotionKind.STATIC_INDENT, 1000)
        first = scene_source(self.phantom, motion, 9, 9, noise=5.0, seed=3)
        second = scene_source(self.phantom, motion, 9, 9, noise=5.0, seed=3)
        other = scene_source(self.phantom, motion, 9, 9, noise=5.0, seed=4)
        pixel = PixelIndex(0, 0)
        self.assertEqual(first.read(pixel, 10), second.read(pixel, 10))
        self.assertNotEqual(first.read(pixel, 10), other.read(pixel, 10))
        values = [first.read(pixel, t) for t in range(0, 2000, 100)]
        self.assertTrue(all(0.0 <= value < 5.0 for value in values))
        self.assertGreater(len(set(values)), 1)

    def test_render_frames(self):
        source = scene_source(self.phantom, MotionProfile(MotionKind.BOUNCE, 1000), 9, 9)
        frames = render_frames(source, 250)
        self.assertEqual([frame.timestamp_us for frame in frames], [0, 250, 500, 750, 1000])
        self.assertEqual(frames[0].total_force, 0.0)
        self.assertEqual(frames[-1].total_force, 0.0)
        with self.assertRaises(ConfigError):
            render_frames(source, 0)
