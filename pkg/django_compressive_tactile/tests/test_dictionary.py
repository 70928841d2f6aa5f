import numpy as np
from django.test import SimpleTestCase

from django_compressive_tactile import signals
from django_compressive_tactile.core import TactileFrame
from django_compressive_tactile.dictionary import (
    PatchSet,
    coding_error,
    coherence,
    extract_patches,
    ksvd_train,
    overcomplete_dct,
    overcomplete_haar,
    prune_coherent,
)
from django_compressive_tactile.exceptions import (
    ConfigError,
    DimensionMismatchError,
    InsufficientDataError,
)


def block_frame():
    grid = np.zeros((8, 8))
    grid[2:6, 2:6] = 1000.0
    return TactileFrame(grid, 0)


def generated_patches(seed=0, count=200):
    """Patches that are scaled copies of five orthonormal 3x3 atoms."""
    rng = np.random.default_rng(seed)
    basis, _ = np.linalg.qr(rng.standard_normal((9, 5)))
    labels = rng.integers(0, 5, size=count)
    scale = rng.choice([-1.0, 1.0], size=count) * rng.uniform(1.0, 2.0, size=count)
    return basis, PatchSet(3, 3, (basis[:, labels] * scale).T)


class ExtractPatchesTest(SimpleTestCase):
    def test_accepts_only_active_patches(self):
        patches = extract_patches([block_frame()], 2, 2, 5, min_active=3, active_thr=10.0)
        self.assertEqual(len(patches), 5)
        self.assertFalse(patches.exhausted)
        self.assertTrue(np.all(patches.patches == 1000.0))
        for frame_id, origin in patches.provenance:
            self.assertEqual(frame_id, 0)
            self.assertTrue(2 <= origin.row <= 4 and 2 <= origin.col <= 4)

    def test_exhaustion_is_flagged(self):
        frames = [block_frame(), TactileFrame(np.zeros((8, 8)), 1)]
        patches = extract_patches(frames, 2, 2, 20, min_active=3, active_thr=10.0)
        self.assertEqual(len(patches), 9)
        self.assertTrue(patches.exhausted)
        self.assertEqual({frame_id for frame_id, _ in patches.provenance}, {0})

    def test_seeded_order_is_reproducible(self):
        first = extract_patches([block_frame()], 2, 2, 4, min_active=0, active_thr=10.0, seed=9)
        second = extract_patches([block_frame()], 2, 2, 4, min_active=0, active_thr=10.0, seed=9)
        self.assertEqual(first.provenance, second.provenance)

    def test_invalid_requests(self):
        with self.assertRaises(DimensionMismatchError):
            extract_patches([block_frame()], 9, 2, 1)
        with self.assertRaises(ConfigError):
            extract_patches([block_frame()], 2, 2, 0)


class CoherenceTest(SimpleTestCase):
    def test_coherence(self):
        self.assertAlmostEqual(coherence([[1, 0], [1, 1]]), 0.7071, places=4)
        self.assertAlmostEqual(coherence(np.eye(3)), 0.0)

    def test_needs_two_vectors(self):
        with self.assertRaises(InsufficientDataError):
            coherence([[1.0, 0.0]])

    def test_unit_bound_removes_only_duplicates(self):
        patches = PatchSet(
            2,
            2,
            [
                [1.0, 0.0, 0.0, 0.0],
                [2.0, 0.0, 0.0, 0.0],
                [1.0, 1.0, 0.0, 0.0],
                [0.0, 0.0, 0.0, 0.0],
                [0.0, 0.0, 1.0, 0.0],
            ],
        )
        kept = prune_coherent(patches, 1.0)
        np.testing.assert_array_equal(
            kept.patches, [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]]
        )

    def test_tighter_bound_drops_correlated_patches(self):
        patches = PatchSet(2, 2, [[1.0, 0.0, 0.0, 0.0], [1.0, 1.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]])
        kept = prune_coherent(patches, 0.5)
        self.assertEqual(len(kept), 2)
        self.assertLessEqual(coherence(kept.patches), 0.5)

    def test_bound_range(self):
        with self.assertRaises(ConfigError):
            prune_coherent(PatchSet(1, 1, [[1.0]]), 0.0)


class KsvdTest(SimpleTestCase):
    def test_recovers_generating_atoms(self):
        basis, patches = generated_patches()
        dictionary = ksvd_train(patches, 5, 1, iterations=10, seed=1)
        correlation = np.abs(basis.T @ dictionary.atoms)
        self.assertTrue(np.all(correlation.max(axis=1) > 0.99))
        self.assertLess(coding_error(dictionary, patches, 1), 1e-6)

    def test_recovers_generating_atoms_for_every_seed(self):
        for patch_seed in range(10):
            basis, patches = generated_patches(seed=patch_seed)
            for seed in range(3):
                with self.subTest(patch_seed=patch_seed, seed=seed):
                    dictionary = ksvd_train(patches, 5, 1, iterations=10, seed=seed)
                    correlation = np.abs(basis.T @ dictionary.atoms)
                    self.assertTrue(np.all(correlation.max(axis=1) > 0.99))
                    self.assertLess(coding_error(dictionary, patches, 1), 1e-6)

    def test_initial_atoms_are_distinct(self):
        basis, patches = generated_patches(seed=6, count=50)
        atoms = ksvd_train(patches, 7, 1, iterations=0, seed=3).atoms
        gram = np.abs(atoms.T @ atoms) - np.eye(7)
        self.assertLess(gram.max(), 1.0 - 1e-6)
        self.assertTrue(np.all(np.abs(basis.T @ atoms).max(axis=1) > 0.99))

    def test_spare_atoms_do_not_duplicate(self):
        _, patches = generated_patches(seed=8, count=80)
        dictionary = ksvd_train(patches, 8, 1, iterations=5, seed=0)
        gram = np.abs(dictionary.atoms.T @ dictionary.atoms) - np.eye(8)
        self.assertLess(gram.max(), 1.0 - 1e-6)
        self.assertLess(coding_error(dictionary, patches, 1), 1e-6)

    def test_training_iteration_signal(self):
        _, patches = generated_patches(seed=4)
        log = []

        def handler(sender, iteration, mean_residual, atoms_replaced, **kwargs):
            log.append((iteration, mean_residual, atoms_replaced))

        signals.training_iteration.connect(handler)
        try:
            ksvd_train(patches, 5, 1, iterations=4, seed=0)
        finally:
            signals.training_iteration.disconnect(handler)
        self.assertEqual([entry[0] for entry in log], [0, 1, 2, 3])
        residuals = [entry[1] for entry in log]
        for earlier, later in zip(residuals, residuals[1:]):
            self.assertLessEqual(later, earlier + 1e-9)

    def test_deterministic_for_a_seed(self):
        _, patches = generated_patches(seed=2, count=60)
        first = ksvd_train(patches, 6, 2, iterations=3, seed=5, threads=1)
        second = ksvd_train(patches, 6, 2, iterations=3, seed=5, threads=2)
        np.testing.assert_allclose(first.atoms, second.atoms, atol=1e-12)

    def test_invalid_arguments(self):
        with self.assertRaises(InsufficientDataError):
            ksvd_train(PatchSet(2, 2, np.empty((0, 4))), 4, 1)
        _, patches = generated_patches(count=10)
        with self.assertRaises(ConfigError):
            ksvd_train(patches, 5, 10)
        with self.assertRaises(ConfigError):
            ksvd_train(patches, 0, 1)


class AnalyticDictionaryTest(SimpleTestCase):
    def test_overcomplete_dct_shape(self):
        dictionary = overcomplete_dct(8, 8, 100)
        self.assertEqual(dictionary.atoms.shape, (64, 100))
        np.testing.assert_allclose(np.linalg.norm(dictionary.atoms, axis=0), 1.0, atol=1e-12)

    def test_complete_dct_is_orthonormal(self):
        atoms = overcomplete_dct(8, 8, 64).atoms
        np.testing.assert_allclose(atoms.T @ atoms, np.eye(64), atol=1e-10)

    def test_dct_atom_count_checks(self):
        with self.assertRaises(ConfigError):
            overcomplete_dct(8, 8, 99)
        with self.assertRaises(ConfigError):
            overcomplete_dct(8, 8, 49)

    def test_haar_basis(self):
        atoms = overcomplete_haar(8, 8, shift_step=8).atoms
        self.assertEqual(atoms.shape, (64, 64))
        np.testing.assert_allclose(atoms.T @ atoms, np.eye(64), atol=1e-10)

    def test_haar_smaller_shift_is_overcomplete(self):
        dictionary = overcomplete_haar(8, 8, shift_step=4)
        self.assertGreater(dictionary.atom_count, 64)

    def test_haar_needs_power_of_two_square(self):
        with self.assertRaises(ConfigError):
            overcomplete_haar(6, 6, 2)
        with self.assertRaises(ConfigError):
            overcomplete_haar(8, 4, 2)
