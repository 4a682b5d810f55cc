"""Dense linear-algebra kernels: thin SVD, orthonormalization, projections.

Everything here is deterministic and pure.  The SVD uses one-sided Jacobi
rotations so results are reproducible across platforms to tolerance level
without depending on a particular LAPACK build.

Matrices are plain float64 numpy arrays, row-major, rows = samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ZeroSubspace

# Relative cutoff below which a pivot / column / singular value is treated
# as numerically zero.  Used uniformly across the package.
RANK_CUTOFF = 1e-12

# Convergence threshold for the Jacobi sweeps: total off-diagonal Gram mass
# relative to ||A||_F^2.
_JACOBI_TOL = 1e-12
_JACOBI_MAX_SWEEPS = 60


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and convert input to a finite 2-D float64 array."""
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def as_vector(v, name: str = "vector") -> np.ndarray:
    m = np.asarray(v, dtype=np.float64)
    if m.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


@dataclass(frozen=True)
class ThinSvd:
    """Top-r singular triplets: A ~= U @ diag(s) @ Vt."""

    U: np.ndarray
    singular_values: np.ndarray
    Vt: np.ndarray

    @property
    def rank(self) -> int:
        return len(self.singular_values)


def _fix_signs(U: np.ndarray, Vt: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Sign convention: largest-magnitude entry of each left singular vector
    # is positive; ties resolved by the earliest index (argmax picks it).
    U = U.copy()
    Vt = Vt.copy()
    for j in range(U.shape[1]):
        i = int(np.argmax(np.abs(U[:, j])))
        if U[i, j] < 0:
            U[:, j] = -U[:, j]
            Vt[j, :] = -Vt[j, :]
    return U, Vt


def thin_svd(A, r: int) -> ThinSvd:
    """Top-r thin SVD by one-sided Jacobi on the columns of A.

    Requires 1 <= r <= min(rows, cols).  Singular values are returned in
    non-increasing order; each left singular vector has its
    largest-magnitude entry positive.
    """
    A = as_matrix(A, "A")
    K, M = A.shape
    if not 1 <= r <= min(K, M):
        raise ValueError(f"r={r} out of range for {K}x{M} matrix")

    # Work on B = A; rotate column pairs until mutually orthogonal.  V
    # accumulates the rotations, so B = A V and the columns of B are
    # (unnormalized) left singular vectors.
    B = A.copy()
    V = np.eye(M)
    fro2 = float(np.sum(A * A))
    if fro2 == 0.0:
        # All-zero matrix: singular values 0, canonical axes.
        U = np.eye(K)[:, :r]
        return ThinSvd(U, np.zeros(r), np.eye(M)[:r, :])

    for _ in range(_JACOBI_MAX_SWEEPS):
        off = 0.0
        rotated = False
        for p in range(M - 1):
            for q in range(p + 1, M):
                bp = B[:, p]
                bq = B[:, q]
                app = float(bp @ bp)
                aqq = float(bq @ bq)
                apq = float(bp @ bq)
                off += apq * apq
                # Relative criterion: skip pairs already orthogonal to
                # machine precision (also covers zero columns).
                if apq * apq <= 1e-28 * app * aqq:
                    continue
                rotated = True
                # Jacobi rotation zeroing the (p,q) Gram entry: t = tan(theta)
                # is the small-magnitude root of t^2 - 2 tau t - 1 = 0.
                tau = (aqq - app) / (2.0 * apq)
                t = -np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = c * t
                B[:, [p, q]] = B[:, [p, q]] @ np.array([[c, -s], [s, c]])
                V[:, [p, q]] = V[:, [p, q]] @ np.array([[c, -s], [s, c]])
        if not rotated or off < (_JACOBI_TOL * fro2) ** 2:
            break

    sigma = np.sqrt(np.sum(B * B, axis=0))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    B = B[:, order]
    V = V[:, order]

    U = np.zeros((K, r))
    smax = sigma[0]
    for j in range(r):
        if sigma[j] > RANK_CUTOFF * smax and sigma[j] > 0:
            U[:, j] = B[:, j] / sigma[j]
        else:
            # Numerically zero direction: pick any unit vector orthogonal
            # to the previous columns so U stays orthonormal.
            U[:, j] = _fill_orthonormal(U[:, :j], K)
    U, Vt = _fix_signs(U, V.T[:r, :])
    return ThinSvd(U, sigma[:r].copy(), Vt)


def _fill_orthonormal(Q: np.ndarray, n: int) -> np.ndarray:
    # Deterministic completion: orthogonalize canonical basis vectors
    # against Q and take the first with a non-negligible residual.
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        if Q.shape[1]:
            e = e - Q @ (Q.T @ e)
        nrm = np.linalg.norm(e)
        if nrm > 1e-8:
            return e / nrm
    raise ZeroSubspace("cannot extend orthonormal set")


def orthonormal_basis(G) -> np.ndarray:
    """Orthonormal basis of col(G) by modified Gram-Schmidt.

    Columns whose residual norm falls below RANK_CUTOFF times the largest
    original column norm are dropped; the returned width is the numerical
    rank.  Raises ZeroSubspace when G is numerically zero.
    """
    G = as_matrix(G, "G")
    if G.shape[1] < 1:
        raise ValueError("G must have at least one column")
    col_norms = np.linalg.norm(G, axis=0)
    scale = float(col_norms.max())
    if scale <= 0.0:
        raise ZeroSubspace("all columns of G are zero")
    cols = []
    for j in range(G.shape[1]):
        v = G[:, j].copy()
        # Two MGS passes for numerical orthogonality.
        for _ in range(2):
            for q in cols:
                v -= q * (q @ v)
        nrm = np.linalg.norm(v)
        if nrm > RANK_CUTOFF * scale:
            cols.append(v / nrm)
    if not cols:
        raise ZeroSubspace("G is numerically zero")
    return np.column_stack(cols)


def project_onto_span(g, Q) -> np.ndarray:
    """Return Q Q^T g for an orthonormal Q."""
    g = as_vector(g, "g")
    Q = as_matrix(Q, "Q")
    if g.shape[0] != Q.shape[0]:
        raise ValueError(f"dimension mismatch: g has {g.shape[0]}, Q has {Q.shape[0]} rows")
    return Q @ (Q.T @ g)


def subspace_similarity(V1, V2) -> float:
    """Sum of squared cosines of the principal angles between col spans.

    Equals ||Q1^T Q2||_F^2 for orthonormal bases Q1, Q2; lies in
    [0, min(rank(V1), rank(V2))].
    """
    Q1 = orthonormal_basis(V1)
    Q2 = orthonormal_basis(V2)
    if Q1.shape[0] != Q2.shape[0]:
        raise ValueError("V1 and V2 must have the same row count")
    C = Q1.T @ Q2
    return float(np.sum(C * C))
