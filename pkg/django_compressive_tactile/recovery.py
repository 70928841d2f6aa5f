"""
Sparse recovery by orthogonal matching pursuit.

``omp`` solves ``y ~ A @ x`` for a sparse ``x``: it greedily selects the
column most correlated with the residual and re-fits the selected support
by least squares through an incrementally updated QR factorization
(modified Gram-Schmidt, reorthogonalized once). Codes are returned in the
compact two-array ``SparseCode`` form.
"""
from __future__ import annotations

import logging
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular

from django_compressive_tactile.core import SparseCode
from django_compressive_tactile.exceptions import (
    ConfigError,
    DimensionMismatchError,
    NumericError,
)
from django_compressive_tactile.worker import ordered_map

logger = logging.getLogger(__name__)

RESIDUAL_RTOL = 1e-6
CONDITION_LIMIT = 1e-12


class LinearOperator:
    """
    A dense M x K sensing operator with cached column norms.

    For subsampled reconstruction this is the dictionary restricted to the
    measured pixel rows.
    """

    def __init__(self, matrix):
        matrix = np.array(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
            raise DimensionMismatchError(
                f"An operator needs at least one row and one column, got shape {matrix.shape}."
            )
        if not np.all(np.isfinite(matrix)):
            raise NumericError("Operator entries must be finite.")
        matrix.setflags(write=False)
        self.matrix = matrix
        self.norms = np.linalg.norm(matrix, axis=0)
        self.norms.setflags(write=False)

    @property
    def rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def cols(self) -> int:
        return self.matrix.shape[1]

    def column(self, k: int) -> np.ndarray:
        return self.matrix[:, k]

    def restrict(self, row_indices) -> "LinearOperator":
        """Operator made of the given rows only."""
        return LinearOperator(self.matrix[np.asarray(row_indices, dtype=np.intp)])

    def apply(self, code: SparseCode) -> np.ndarray:
        """Returns ``A @ x`` for a sparse ``x``."""
        if code.ambient_dim != self.cols:
            raise DimensionMismatchError(
                f"Code of dimension {code.ambient_dim} applied to a {self.cols}-column operator."
            )
        return self.matrix[:, code.indices] @ code.coefficients

    def __repr__(self):
        return f"LinearOperator({self.rows}x{self.cols})"


def omp_arrays(
    matrix: np.ndarray,
    norms: np.ndarray,
    y: np.ndarray,
    sparsity: int,
    residual_tol: float,
) -> tuple[np.ndarray, np.ndarray, float]:
    """
    Unchecked OMP on raw arrays, for callers that validate their own inputs.

    Returns:
        ``(indices, coefficients, residual_norm)`` in selection order.
    """
    m = matrix.shape[0]
    residual = y.copy()
    residual_norm = float(np.linalg.norm(residual))
    selected: list[int] = []
    if residual_norm <= residual_tol:
        return np.empty(0, dtype=np.intp), np.empty(0), residual_norm

    available = norms > 0
    safe_norms = np.where(available, norms, 1.0)
    q = np.empty((m, sparsity))
    r = np.zeros((sparsity, sparsity))
    qty = np.zeros(sparsity)

    for step in range(sparsity):
        correlation = np.abs(matrix.T @ residual) / safe_norms
        correlation[~available] = -1.0
        k = int(np.argmax(correlation))
        if correlation[k] <= 0.0:
            break
        v = matrix[:, k].copy()
        basis = q[:, :step]
        for _ in range(2):
            projection = basis.T @ v
            v -= basis @ projection
            r[:step, step] += projection
        v_norm = float(np.linalg.norm(v))
        if v_norm <= CONDITION_LIMIT * norms[k]:
            logger.debug("Column %d is numerically dependent on the support; stopping", k)
            break
        q[:, step] = v / v_norm
        r[step, step] = v_norm
        qty[step] = q[:, step] @ y
        selected.append(k)
        available[k] = False
        residual = y - q[:, : step + 1] @ qty[: step + 1]
        residual_norm = float(np.linalg.norm(residual))
        if residual_norm <= residual_tol:
            break

    n = len(selected)
    if n == 0:
        return np.empty(0, dtype=np.intp), np.empty(0), residual_norm
    coefficients = solve_triangular(r[:n, :n], qty[:n], lower=False)
    return np.array(selected, dtype=np.intp), coefficients, residual_norm


def _check_signal(operator: LinearOperator, y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != operator.rows:
        raise DimensionMismatchError(
            f"Signal of length {y.shape[0]} for an operator with {operator.rows} rows."
        )
    if not np.all(np.isfinite(y)):
        raise NumericError("Signal entries must be finite.")
    return y


def _check_sparsity(operator: LinearOperator, sparsity: int) -> int:
    sparsity = int(sparsity)
    if not 1 <= sparsity <= min(operator.rows, operator.cols):
        raise ConfigError(
            f"Sparsity {sparsity} outside [1, {min(operator.rows, operator.cols)}]."
        )
    return sparsity


def omp(
    operator: LinearOperator,
    y,
    sparsity: int,
    residual_tol: float | None = None,
) -> SparseCode:
    """
    Orthogonal matching pursuit.

    Columns are compared by ``|a_k . r| / ||a_k||``; equal scores go to the
    lowest column index and zero columns are never chosen. Coefficients are
    reported in the scale of the original (unnormalized) columns.

    Args:
        operator: The M x K operator ``A``.
        y: Measurements, length M.
        sparsity: Maximum number of atoms S, ``1 <= S <= min(M, K)``.
        residual_tol: Stop once ``||y - A x|| <= residual_tol``. Defaults to
            ``1e-6 * ||y||``.

    Returns:
        The code with entries in selection order. Fewer than S entries are
        returned when the tolerance is met early or the next column is
        numerically dependent on the selected support.

    Raises:
        DimensionMismatchError: If ``len(y) != M``.
        NumericError: If ``y`` holds NaN or infinity.
        ConfigError: If ``sparsity`` is out of range or ``residual_tol`` is negative.

    Example:
        >>> omp(LinearOperator(np.eye(4)), [0, 0, 1, 0], 1).entries
        ((2, 1.0),)
    """
    y = _check_signal(operator, y)
    sparsity = _check_sparsity(operator, sparsity)
    if residual_tol is None:
        residual_tol = RESIDUAL_RTOL * float(np.linalg.norm(y))
    if residual_tol < 0:
        raise ConfigError("residual_tol must be non-negative.")
    indices, coefficients, _ = omp_arrays(
        operator.matrix, operator.norms, y, sparsity, residual_tol
    )
    return SparseCode(indices, coefficients, operator.cols)


def omp_batch(
    operator: LinearOperator,
    signals,
    sparsity: int,
    residual_rtol: float = RESIDUAL_RTOL,
    threads: int | None = None,
) -> list[SparseCode]:
    """
    Code every column of ``signals`` (M x n) against one operator.

    Each column uses ``residual_tol = residual_rtol * ||y||``. Results are in
    column order whatever the thread count.
    """
    signals = np.asarray(signals, dtype=np.float64)
    if signals.ndim != 2 or signals.shape[0] != operator.rows:
        raise DimensionMismatchError(
            f"Signals of shape {signals.shape} for an operator with {operator.rows} rows."
        )
    if not np.all(np.isfinite(signals)):
        raise NumericError("Signal entries must be finite.")
    sparsity = _check_sparsity(operator, sparsity)

    def code(column: int) -> SparseCode:
        y = np.ascontiguousarray(signals[:, column])
        tol = residual_rtol * float(np.linalg.norm(y))
        indices, coefficients, _ = omp_arrays(
            operator.matrix, operator.norms, y, sparsity, tol
        )
        return SparseCode(indices, coefficients, operator.cols)

    return ordered_map(code, range(signals.shape[1]), threads)


def sparse_to_dense(code: SparseCode) -> np.ndarray:
    """
    Expand a compact code to a length-K vector.

    Example:
        >>> sparse_to_dense(SparseCode.from_entries([(0, 2.5)], 3))
        array([2.5, 0. , 0. ])
    """
    dense = np.zeros(code.ambient_dim)
    dense[code.indices] = code.coefficients
    return dense


def dense_to_sparse(vector: Sequence[float], tol: float = 0.0) -> SparseCode:
    """Compact form of ``vector`` keeping entries with ``|value| > tol``, in index order."""
    vector = np.asarray(vector, dtype=np.float64).ravel()
    if vector.size < 1:
        raise DimensionMismatchError("Cannot compact an empty vector.")
    indices = np.flatnonzero(np.abs(vector) > tol)
    return SparseCode(indices, vector[indices], vector.size)
