"""
Patch dictionaries: K-SVD training and analytic baselines.

Training takes random patches from recorded frames, drops near-duplicates by
coherence, then alternates OMP sparse coding with per-atom rank-1 SVD
updates. ``overcomplete_dct`` and ``overcomplete_haar`` build the analytic
dictionaries used as baselines.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from django_compressive_tactile import conf, signals
from django_compressive_tactile.core import Dictionary, PixelIndex, TactileFrame
from django_compressive_tactile.exceptions import (
    ConfigError,
    DimensionMismatchError,
    InsufficientDataError,
    NumericError,
)
from django_compressive_tactile.recovery import LinearOperator, omp_batch

logger = logging.getLogger(__name__)

DUPLICATE_TOLERANCE = 1e-9
COHERENCE_BLOCK = 1024
ATOM_DUPLICATE_CORRELATION = 1.0 - 1e-6
DEAD_ATOM_ENERGY = 1e-12


@dataclass(frozen=True, eq=False)
class PatchSet:
    """
    Training patches with their provenance.

    Attributes:
        patch_rows: Patch height.
        patch_cols: Patch width.
        patches: Array of shape (n, patch_rows * patch_cols); one row-major
            flattened patch per row.
        provenance: ``(frame_id, origin)`` for every patch.
        exhausted: True when extraction ran out of candidates before the
            requested count.
    """

    patch_rows: int
    patch_cols: int
    patches: np.ndarray
    provenance: tuple[tuple[int, PixelIndex], ...] = ()
    exhausted: bool = False

    def __post_init__(self):
        patches = np.array(self.patches, dtype=np.float64).reshape(
            -1, self.patch_rows * self.patch_cols
        )
        if not np.all(np.isfinite(patches)):
            raise NumericError("Patch values must be finite.")
        provenance = tuple(self.provenance)
        if provenance and len(provenance) != patches.shape[0]:
            raise DimensionMismatchError("Provenance must list one entry per patch.")
        patches.setflags(write=False)
        object.__setattr__(self, "patches", patches)
        object.__setattr__(self, "provenance", provenance)

    def __len__(self) -> int:
        return self.patches.shape[0]

    @property
    def patch_size(self) -> int:
        return self.patch_rows * self.patch_cols

    @property
    def matrix(self) -> np.ndarray:
        """Patches as columns, shape (patch_size, n)."""
        return self.patches.T

    def subset(self, keep: Sequence[int]) -> "PatchSet":
        keep = list(keep)
        provenance = tuple(self.provenance[i] for i in keep) if self.provenance else ()
        return PatchSet(
            self.patch_rows, self.patch_cols, self.patches[keep], provenance, self.exhausted
        )


def extract_patches(
    frames: Sequence[TactileFrame],
    patch_rows: int,
    patch_cols: int,
    count: int,
    min_active: int = 15,
    active_thr: float | None = None,
    seed: int = 0,
) -> PatchSet:
    """
    Randomly positioned training patches.

    Candidates are every patch origin of every frame whose maximum exceeds
    ``active_thr``, visited in a seeded random order. A candidate is accepted
    when more than ``min_active`` of its pixels exceed ``active_thr``.

    Args:
        frames: Training frames, all the same size.
        patch_rows: Patch height.
        patch_cols: Patch width.
        count: Number of patches wanted.
        min_active: Accept only patches with more active pixels than this.
        active_thr: Activity threshold; defaults to ``conf.get_active_threshold()``.
        seed: Seed of the candidate order.

    Returns:
        A PatchSet of ``count`` patches, or fewer with ``exhausted`` set.

    Raises:
        DimensionMismatchError: If the patch does not fit in the frames.
        ConfigError: If ``count`` is below 1.
    """
    if count < 1:
        raise ConfigError("At least one patch must be requested.")
    active_thr = conf.get_active_threshold() if active_thr is None else float(active_thr)
    frames = list(frames)
    if frames:
        rows, cols = frames[0].rows, frames[0].cols
        if any((f.rows, f.cols) != (rows, cols) for f in frames):
            raise DimensionMismatchError("Training frames must share rows/cols.")
        if patch_rows > rows or patch_cols > cols or patch_rows < 1 or patch_cols < 1:
            raise DimensionMismatchError(
                f"A {patch_rows}x{patch_cols} patch does not fit in {rows}x{cols} frames."
            )
    eligible = [i for i, f in enumerate(frames) if f.values.max() > active_thr]
    accepted: list[np.ndarray] = []
    provenance: list[tuple[int, PixelIndex]] = []
    if eligible:
        origin_rows = rows - patch_rows + 1
        origin_cols = cols - patch_cols + 1
        per_frame = origin_rows * origin_cols
        rng = np.random.Generator(np.random.Philox(key=int(seed) & ((1 << 64) - 1)))
        for candidate in rng.permutation(len(eligible) * per_frame):
            frame_slot, origin = divmod(int(candidate), per_frame)
            row, col = divmod(origin, origin_cols)
            frame_id = eligible[frame_slot]
            patch = frames[frame_id].values[row : row + patch_rows, col : col + patch_cols]
            if np.count_nonzero(patch > active_thr) > min_active:
                accepted.append(patch.ravel())
                provenance.append((frame_id, PixelIndex(row, col)))
                if len(accepted) == count:
                    break
    exhausted = len(accepted) < count
    if exhausted:
        logger.warning("Patch extraction exhausted: %d of %d patches accepted", len(accepted), count)
    patches = np.array(accepted) if accepted else np.empty((0, patch_rows * patch_cols))
    return PatchSet(patch_rows, patch_cols, patches, tuple(provenance), exhausted)


def _unit_rows(vectors) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=np.float64)
    if vectors.ndim == 1:
        vectors = vectors.reshape(1, -1)
    norms = np.linalg.norm(vectors, axis=1)
    if np.any(norms == 0):
        raise NumericError("Cannot normalize a zero vector.")
    return vectors / norms[:, None]


def coherence(vectors) -> float:
    """
    Largest absolute inner product between distinct normalized vectors.

    Args:
        vectors: Array-like of shape (n, d), one vector per row, ``n >= 2``.

    Raises:
        InsufficientDataError: If fewer than two vectors are given.
        NumericError: If a vector is zero.

    Example:
        >>> round(coherence([[1, 0], [1, 1]]), 4)
        0.7071
    """
    unit = _unit_rows(vectors)
    n = unit.shape[0]
    if n < 2:
        raise InsufficientDataError("Coherence needs at least two vectors.")
    best = 0.0
    for start in range(0, n, COHERENCE_BLOCK):
        block = unit[start : start + COHERENCE_BLOCK]
        gram = np.abs(block @ unit.T)
        gram[np.arange(block.shape[0]), np.arange(start, start + block.shape[0])] = 0.0
        best = max(best, float(gram.max()))
    return min(best, 1.0)


def prune_coherent(patches: PatchSet, mu_max: float | None = None) -> PatchSet:
    """
    Greedy, order-preserving coherence filter.

    A patch is kept when its normalized inner product with every patch kept
    before it is at most ``mu_max``. Inner products within 1e-9 of one count
    as duplicates, so ``mu_max = 1`` removes exact duplicates only. All-zero
    patches are dropped.
    """
    mu_max = conf.get_coherence_max() if mu_max is None else float(mu_max)
    if not 0 < mu_max <= 1:
        raise ConfigError("mu_max must lie in (0, 1].")
    n = len(patches)
    kept_unit = np.empty((n, patches.patch_size))
    keep: list[int] = []
    for i, patch in enumerate(patches.patches):
        norm = np.linalg.norm(patch)
        if norm == 0:
            continue
        unit = patch / norm
        if keep:
            largest = float(np.abs(kept_unit[: len(keep)] @ unit).max())
            if largest > mu_max or largest >= 1.0 - DUPLICATE_TOLERANCE:
                continue
        kept_unit[len(keep)] = unit
        keep.append(i)
    logger.info("Coherence pruning kept %d of %d patches (mu_max=%s)", len(keep), n, mu_max)
    return patches.subset(keep)


# =============================================================================
# K-SVD
# =============================================================================


def _codes_to_arrays(codes, sparsity: int) -> tuple[np.ndarray, np.ndarray]:
    n = len(codes)
    index = np.full((n, sparsity), -1, dtype=np.intp)
    coef = np.zeros((n, sparsity))
    for j, code in enumerate(codes):
        index[j, : len(code)] = code.indices
        coef[j, : len(code)] = code.coefficients
    return index, coef


def _reconstruct(atoms: np.ndarray, index: np.ndarray, coef: np.ndarray) -> np.ndarray:
    approx = np.zeros((atoms.shape[0], index.shape[0]))
    for slot in range(index.shape[1]):
        used = index[:, slot] >= 0
        approx[:, used] += atoms[:, index[used, slot]] * coef[used, slot]
    return approx


def _initial_atoms(data: np.ndarray, atom_count: int, rng: np.random.Generator) -> np.ndarray:
    d, n = data.shape
    norms = np.linalg.norm(data, axis=0)
    candidates = rng.permutation(np.flatnonzero(norms > 0))
    atoms = np.empty((d, atom_count))
    chosen = 0
    for j in candidates:
        if chosen == atom_count:
            break
        atom = data[:, j] / norms[j]
        if chosen and np.max(np.abs(atoms[:, :chosen].T @ atom)) > ATOM_DUPLICATE_CORRELATION:
            continue
        atoms[:, chosen] = atom
        chosen += 1
    if chosen < atom_count:
        noise = rng.standard_normal((d, atom_count - chosen))
        atoms[:, chosen:] = noise / np.linalg.norm(noise, axis=0)
    return atoms


def _twin(atoms: np.ndarray, k: int) -> int | None:
    """Index of an earlier atom that ``atoms[:, k]`` nearly duplicates."""
    if k == 0:
        return None
    correlation = np.abs(atoms[:, :k].T @ atoms[:, k])
    j = int(np.argmax(correlation))
    return j if correlation[j] > ATOM_DUPLICATE_CORRELATION else None


def _fold_into_twin(atoms, index, coef, users, slots, k: int, twin: int) -> None:
    projection = float(atoms[:, twin] @ atoms[:, k])
    for user, slot in zip(users, slots):
        weight = coef[user, slot] * projection
        existing = np.flatnonzero(index[user] == twin)
        if existing.size:
            coef[user, existing[0]] += weight
            index[user, slot] = -1
            coef[user, slot] = 0.0
        else:
            index[user, slot] = twin
            coef[user, slot] = weight


def coding_error(dictionary: Dictionary, patches: PatchSet, sparsity: int) -> float:
    """Mean squared patch residual when every patch is coded with ``sparsity`` atoms."""
    data = patches.matrix
    codes = omp_batch(LinearOperator(dictionary.atoms), data, sparsity)
    index, coef = _codes_to_arrays(codes, sparsity)
    residual = data - _reconstruct(dictionary.atoms, index, coef)
    return float(np.mean(np.sum(residual**2, axis=0)))


def ksvd_train(
    patches: PatchSet,
    atom_count: int,
    sparsity: int,
    iterations: int = 10,
    seed: int = 0,
    threads: int | None = None,
) -> Dictionary:
    """
    Learn a dictionary with K-SVD.

    Each iteration codes every patch with OMP, keeping a patch's previous
    code instead when that one still fits better, then updates the atoms one
    by one: an atom and its coefficients become the leading singular pair of
    the residual of the patches that use it. Initial atoms are distinct
    patches, sign-duplicates excluded. An atom is re-seeded from the
    worst-represented patch residual when no patch uses it, when its
    coefficients carry no energy, or when it nearly duplicates an earlier
    atom; a duplicate first hands its coefficients to that earlier atom.
    Apart from that hand-over the mean squared residual after coding is
    non-increasing.

    Args:
        patches: Training patches.
        atom_count: Dictionary size K.
        sparsity: Atoms per patch during coding.
        iterations: Number of code/update rounds.
        seed: Seed of the initial atom selection.
        threads: Worker threads for the coding stage.

    Returns:
        A Dictionary of ``atom_count`` unit-norm atoms.

    Raises:
        InsufficientDataError: If ``patches`` is empty.
        ConfigError: If ``atom_count < 1`` or ``sparsity`` exceeds the patch
            size or the atom count.

    Signals Fired:
        - training_iteration: After every iteration.
    """
    if len(patches) == 0:
        raise InsufficientDataError("K-SVD needs at least one training patch.")
    if atom_count < 1:
        raise ConfigError("The dictionary needs at least one atom.")
    if not 1 <= sparsity <= min(patches.patch_size, atom_count):
        raise ConfigError(
            f"Sparsity {sparsity} outside [1, {min(patches.patch_size, atom_count)}]."
        )
    if iterations < 0:
        raise ConfigError("Iterations must be non-negative.")

    data = patches.matrix
    rng = np.random.Generator(np.random.Philox(key=int(seed) & ((1 << 64) - 1)))
    atoms = _initial_atoms(data, atom_count, rng)
    total_energy = float(np.sum(data**2))
    index = coef = None
    residual = None

    for iteration in range(iterations):
        codes = omp_batch(LinearOperator(atoms), data, sparsity, threads=threads)
        new_index, new_coef = _codes_to_arrays(codes, sparsity)
        new_residual = data - _reconstruct(atoms, new_index, new_coef)
        if index is None:
            index, coef, residual = new_index, new_coef, new_residual
        else:
            better = np.sum(new_residual**2, axis=0) < np.sum(residual**2, axis=0)
            index[better] = new_index[better]
            coef[better] = new_coef[better]
            residual[:, better] = new_residual[:, better]
        mean_residual = float(np.mean(np.sum(residual**2, axis=0)))

        dead_energy = DEAD_ATOM_ENERGY * total_energy
        replaced = []
        for k in range(atom_count):
            users, slots = np.nonzero(index == k)
            if users.size:
                twin = _twin(atoms, k)
                if twin is not None:
                    _fold_into_twin(atoms, index, coef, users, slots, k, twin)
                    degenerate = True
                else:
                    degenerate = np.sum(coef[users, slots] ** 2) <= dead_energy
                    if degenerate:
                        index[users, slots] = -1
                        coef[users, slots] = 0.0
                if degenerate:
                    residual[:, users] = data[:, users] - _reconstruct(
                        atoms, index[users], coef[users]
                    )
                    users = users[:0]
            if users.size == 0:
                errors = np.sum(residual**2, axis=0)
                for direction in replaced:
                    errors -= (direction @ residual) ** 2
                worst = int(np.argmax(errors))
                worst_norm = float(np.linalg.norm(residual[:, worst]))
                if errors[worst] <= 0 or worst_norm == 0:
                    continue
                atoms[:, k] = residual[:, worst] / worst_norm
                replaced.append(atoms[:, k].copy())
                continue
            old_atom = atoms[:, k].copy()
            error = residual[:, users] + np.outer(old_atom, coef[users, slots])
            u, s, vt = np.linalg.svd(error, full_matrices=False)
            if s[0] == 0:
                continue
            atom = u[:, 0]
            weights = s[0] * vt[0]
            if atom @ old_atom < 0:
                atom, weights = -atom, -weights
            atoms[:, k] = atom
            coef[users, slots] = weights
            residual[:, users] = error - np.outer(atom, weights)

        logger.debug(
            "K-SVD iteration %d: mean residual %.6g, %d atoms replaced",
            iteration,
            mean_residual,
            len(replaced),
        )
        signals.training_iteration.send(
            sender=Dictionary,
            iteration=iteration,
            mean_residual=mean_residual,
            atoms_replaced=len(replaced),
        )

    atoms /= np.linalg.norm(atoms, axis=0)
    return Dictionary(patches.patch_rows, patches.patch_cols, atoms)


# =============================================================================
# Analytic dictionaries
# =============================================================================


def _dct_axis(length: int, k: int) -> np.ndarray:
    i = np.arange(length)[:, None] + 0.5
    j = np.arange(k)[None, :]
    basis = np.cos(np.pi * i * j / k)
    basis[:, 1:] -= basis[:, 1:].mean(axis=0)
    return basis / np.linalg.norm(basis, axis=0)


def overcomplete_dct(patch_rows: int, patch_cols: int, atom_count: int) -> Dictionary:
    """
    Separable overcomplete DCT dictionary.

    ``atom_count`` must be ``k * k`` with ``k`` at least the larger patch
    side. Each axis uses ``k`` cosines ``cos(pi * (i + 1/2) * j / k)``, mean
    removed for ``j >= 1`` and normalized; atom ``a * k + b`` is the outer
    product of row cosine ``a`` and column cosine ``b``. With ``k`` equal to
    the patch side this is the orthonormal 2-D DCT-II basis.

    Raises:
        ConfigError: If ``atom_count`` is not a perfect square or ``k`` is
            smaller than a patch side.
    """
    k = math.isqrt(atom_count) if atom_count > 0 else 0
    if k * k != atom_count or k < 1:
        raise ConfigError(f"Atom count {atom_count} is not a perfect square.")
    if k < max(patch_rows, patch_cols):
        raise ConfigError(f"k={k} is smaller than the {patch_rows}x{patch_cols} patch.")
    atoms = np.kron(_dct_axis(patch_rows, k), _dct_axis(patch_cols, k))
    return Dictionary(patch_rows, patch_cols, atoms)


def _haar_block(kind: str, size: int) -> np.ndarray:
    half = size // 2
    block = np.full((size, size), 1.0 / size)
    if kind == "LH":
        block[half:, :] *= -1
    elif kind == "HL":
        block[:, half:] *= -1
    elif kind == "HH":
        block[half:, :] *= -1
        block[:, half:] *= -1
    return block


def overcomplete_haar(
    patch_rows: int, patch_cols: int, shift_step: int, max_level: int | None = None
) -> Dictionary:
    """
    Translated 2-D Haar dictionary.

    Level ``l`` wavelets (LH, HL and HH) have support ``2**l``; the scaling
    atoms live at ``max_level``. Atoms at level ``l`` are cyclically
    translated on a lattice of step ``max(1, 2**l * shift_step // side)``, so
    ``shift_step = side`` gives the orthonormal Haar basis and smaller steps
    give overcomplete dictionaries. Sign-duplicates are removed. Scaling atoms
    come first, then wavelets from coarse to fine.

    Raises:
        ConfigError: If the patch is not square with a power-of-two side, or
            ``shift_step``/``max_level`` are out of range.
    """
    if patch_rows != patch_cols or patch_rows < 1 or patch_rows & (patch_rows - 1):
        raise ConfigError("Haar dictionaries need square patches with a power-of-two side.")
    side = patch_rows
    top = side.bit_length() - 1
    max_level = top if max_level is None else int(max_level)
    if not 0 <= max_level <= top:
        raise ConfigError(f"max_level must lie in [0, {top}].")
    if shift_step < 1:
        raise ConfigError("shift_step must be at least 1.")

    atoms: list[np.ndarray] = []
    seen: set[bytes] = set()

    def add(block: np.ndarray, level: int) -> None:
        step = max(1, (2**level * shift_step) // side)
        base = np.zeros((side, side))
        base[: block.shape[0], : block.shape[1]] = block
        for row in range(0, side, step):
            for col in range(0, side, step):
                atom = np.roll(base, (row, col), axis=(0, 1)).ravel()
                pivot = atom[np.flatnonzero(np.abs(atom) > 1e-12)[0]]
                key = (np.round(atom * np.sign(pivot), 12) + 0.0).tobytes()
                if key not in seen:
                    seen.add(key)
                    atoms.append(atom)

    add(_haar_block("LL", 2**max_level), max_level)
    for level in range(max_level, 0, -1):
        for kind in ("LH", "HL", "HH"):
            add(_haar_block(kind, 2**level), level)
    return Dictionary(side, side, np.column_stack(atoms))
