"""Row-subset selection by maximum submatrix volume.

Three routes are provided:

* ``fast_maxvol`` -- sequential greedy selection with R pivoting steps.
  Step j eliminates the previously chosen pivot row from the remaining
  columns (Schur-complement update on a working copy) and picks the row
  with the largest residual magnitude in column j.  Cost O(K R^2).
* ``conventional_maxvol`` -- classic swap iteration: grow |det| by swapping
  in any row of the interpolation matrix B = V (V[p])^{-1} whose entry
  exceeds a threshold, until B is dominant.
* ``brute_force_maxvol`` -- exhaustive oracle for tests.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor

from .errors import SingularStart, TooLarge
from .features import FeatureMatrix
from .linalg import RANK_CUTOFF, as_matrix


@dataclass(frozen=True)
class SelectionResult:
    """Ordered selected row indices plus pivot magnitudes and volume."""

    indices: tuple[int, ...]
    pivot_magnitudes: tuple[float, ...]
    log_abs_det: float
    truncated: bool = False
    elementary_op_count: int = 0
    swap_count: int = 0
    max_sweeps_reached: bool = False

    @property
    def rank(self) -> int:
        return len(self.indices)


def _feature_values(V) -> np.ndarray:
    if isinstance(V, FeatureMatrix):
        return V.values
    return as_matrix(V, "V")


def fast_maxvol(V, R: int) -> SelectionResult:
    """Greedy volume-maximizing row selection in R sequential steps.

    p_1 maximizes |V[:, 0]|; afterwards the pivot row is eliminated from
    the remaining columns so that step j's column holds the residual, and
    p_j maximizes its absolute value.  Ties go to the lowest row index.
    Selection stops early (truncated=True) when the best residual pivot is
    below RANK_CUTOFF relative to max|V|.

    The pivot sequence of Gaussian elimination with partial pivoting is
    exactly this selection (LAPACK's argmax also takes the first maximum),
    so the heavy lifting is one ``getrf`` call; |U[j, j]| are the residual
    pivot magnitudes.
    """
    Vm = _feature_values(V)
    K, cols = Vm.shape
    if not 1 <= R <= cols:
        raise ValueError(f"R={R} out of range for {K}x{cols} feature matrix")
    if K < R:
        raise ValueError(f"need at least R={R} rows, got {K}")

    scale = float(np.abs(Vm).max())
    if scale == 0.0:
        return SelectionResult((), (), -math.inf, truncated=True)
    with warnings.catch_warnings():
        # Exactly-singular input is legal here; it surfaces as truncation.
        warnings.simplefilter("ignore")
        lu, piv = lu_factor(Vm[:, :R], check_finite=False)

    perm = list(range(K))
    indices: list[int] = []
    pivots: list[float] = []
    truncated = False
    for j in range(R):
        p = int(piv[j])
        perm[j], perm[p] = perm[p], perm[j]
        mag = abs(float(lu[j, j]))
        if not mag >= RANK_CUTOFF * scale:  # also catches nan past a zero pivot
            truncated = True
            break
        indices.append(perm[j])
        pivots.append(mag)

    steps = len(indices)
    # Cost model for the elimination: one mul+add per touched entry plus
    # the factor division, per step.  Depends only on (K, R), never on the
    # dataset size the batch came from.
    ops = sum(2 * K * (R - j - 1) + (R - j - 1) for j in range(steps))
    log_det = float(np.sum(np.log(pivots))) if pivots else -math.inf
    return SelectionResult(
        indices=tuple(indices),
        pivot_magnitudes=tuple(pivots),
        log_abs_det=log_det,
        truncated=truncated,
        elementary_op_count=ops,
    )


def conventional_maxvol(V, R: int, swap_tol: float = 1.05, max_sweeps: int = 100) -> SelectionResult:
    """Swap-based MaxVol: iterate until the interpolation matrix is dominant.

    Starts from the fast greedy indices, then while any |B[i, j]| exceeds
    ``swap_tol`` (with B = V[:, :R] (V[p, :R])^{-1}) replaces p_j by i.
    Each swap multiplies |det| by |B[i, j]| > 1, so the volume is
    monotonically increasing.  Requires swap_tol >= 1.
    """
    if swap_tol < 1.0:
        raise ValueError("swap_tol must be >= 1")
    Vm = _feature_values(V)
    K = Vm.shape[0]
    start = fast_maxvol(Vm, R)
    if start.truncated or start.rank < R:
        raise SingularStart("feature matrix is numerically rank deficient")
    p = np.array(start.indices, dtype=int)
    A = Vm[:, :R]

    swaps = 0
    max_sweeps_reached = True
    for _ in range(max_sweeps):
        sub = A[p, :]
        sign, logdet = np.linalg.slogdet(sub)
        if sign == 0:
            raise SingularStart("pivot submatrix became singular")
        B = np.linalg.solve(sub.T, A.T).T  # B = A (A[p])^{-1}
        i, j = np.unravel_index(int(np.argmax(np.abs(B))), B.shape)
        if abs(B[i, j]) <= swap_tol:
            max_sweeps_reached = False
            break
        p[j] = i
        swaps += 1

    sub = A[p, :]
    sign, logdet = np.linalg.slogdet(sub)
    # Per-step pivot magnitudes are a fast-maxvol notion; report the
    # per-index geometric-mean contribution instead.
    piv = math.exp(logdet / R)
    return SelectionResult(
        indices=tuple(int(x) for x in p),
        pivot_magnitudes=tuple(piv for _ in range(R)),
        log_abs_det=float(logdet),
        elementary_op_count=start.elementary_op_count,
        swap_count=swaps,
        max_sweeps_reached=max_sweeps_reached,
    )


def brute_force_maxvol(V, R: int, guard: int = 10**6) -> SelectionResult:
    """Exhaustive |det| maximization over all R-subsets (test oracle).

    Ties resolve to the lexicographically smallest index set.  Raises
    TooLarge when C(K, R) exceeds ``guard``.
    """
    Vm = _feature_values(V)
    K = Vm.shape[0]
    if not 1 <= R <= Vm.shape[1]:
        raise ValueError(f"R={R} out of range")
    if math.comb(K, R) > guard:
        raise TooLarge(f"C({K},{R}) exceeds enumeration guard {guard}")
    A = Vm[:, :R]
    best = None
    best_det = -1.0
    for subset in itertools.combinations(range(K), R):
        d = abs(float(np.linalg.det(A[list(subset), :])))
        if d > best_det:  # strict: first (lex smallest) subset wins ties
            best_det = d
            best = subset
    log_det = math.log(best_det) if best_det > 0 else -math.inf
    return SelectionResult(
        indices=tuple(best),
        pivot_magnitudes=(),
        log_abs_det=log_det,
    )
