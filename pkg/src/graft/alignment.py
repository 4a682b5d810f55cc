"""Gradient alignment machinery: projection error, angular error, and
dynamic subset-size (rank) selection.

The central quantity is the squared norm of the component of the batch
mean gradient orthogonal to the span of the selected samples' gradients.
Keeping it below a threshold guarantees the projected update direction
retains most of the gradient energy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ZeroGradient, ZeroSubspace
from .features import FeatureMatrix
from .linalg import as_matrix, as_vector, orthonormal_basis, project_onto_span
from .maxvol import SelectionResult, fast_maxvol


@dataclass(frozen=True)
class GradientBundle:
    """Per-sample gradients as columns (d x K) plus their mean."""

    per_sample: np.ndarray
    mean: np.ndarray

    @classmethod
    def from_columns(cls, G) -> "GradientBundle":
        G = as_matrix(G, "G")
        return cls(per_sample=G, mean=G.mean(axis=1))

    @property
    def batch_size(self) -> int:
        return self.per_sample.shape[1]

    def columns(self, indices) -> np.ndarray:
        return self.per_sample[:, list(indices)]

    def subset_mean(self, indices) -> np.ndarray:
        return self.columns(indices).mean(axis=1)


@dataclass(frozen=True)
class RankCandidate:
    rank: int
    error: float
    selection: SelectionResult


@dataclass(frozen=True)
class RankDecision:
    """Outcome of the per-batch rank search."""

    candidates: tuple[RankCandidate, ...]
    chosen_rank: int
    satisfied: bool
    epsilon: float
    diagnostics: tuple[str, ...] = field(default=())

    @property
    def chosen(self) -> RankCandidate:
        for c in self.candidates:
            if c.rank == self.chosen_rank:
                return c
        raise ValueError("chosen rank missing from candidates")


def projection_error(g_bar, G_R, normalized: bool = True) -> float:
    """Squared residual of g_bar against span(G_R).

    With ``normalized`` the value is divided by ||g_bar||^2 and lies in
    [0, 1].  A zero g_bar returns 0 by convention (nothing to approximate).
    """
    g_bar = as_vector(g_bar, "g_bar")
    nrm2 = float(g_bar @ g_bar)
    if nrm2 == 0.0:
        return 0.0
    Q = orthonormal_basis(G_R)
    resid = g_bar - project_onto_span(g_bar, Q)
    err = float(resid @ resid)
    return err / nrm2 if normalized else err


def angular_error(g_bar, G_R) -> float:
    """Angle (radians, in [0, pi/2]) between g_bar and span(G_R)."""
    g_bar = as_vector(g_bar, "g_bar")
    nrm = float(np.linalg.norm(g_bar))
    if nrm == 0.0:
        raise ZeroGradient("g_bar is zero")
    Q = orthonormal_basis(G_R)
    coeff = Q.T @ (g_bar / nrm)
    s2 = 1.0 - float(coeff @ coeff)
    return float(np.arcsin(np.clip(np.sqrt(max(s2, 0.0)), 0.0, 1.0)))


def cosine_alignment(a, b) -> float:
    a = as_vector(a, "a")
    b = as_vector(b, "b")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroGradient("cosine of a zero vector is undefined")
    return float(np.clip((a @ b) / (na * nb), -1.0, 1.0))


def select_rank(
    V: FeatureMatrix | np.ndarray,
    gradients: GradientBundle,
    rank_set,
    epsilon: float,
    normalized: bool = True,
) -> RankDecision:
    """Search candidate subset sizes for the smallest projection error.

    For each R in ``rank_set`` (ascending) the fast greedy sampler picks R
    rows, and the error of the batch mean gradient against the span of
    those samples' gradients is evaluated.  The chosen rank minimizes the
    error among candidates meeting ``epsilon`` (ties -> smaller R); when
    none qualifies the largest candidate is kept with satisfied=False.
    """
    rank_set = list(rank_set)
    if not rank_set:
        raise ValueError("rank_set must be nonempty")
    if sorted(rank_set) != rank_set:
        raise ValueError("rank_set must be ascending")

    candidates: list[RankCandidate] = []
    diagnostics: list[str] = []
    for R in rank_set:
        try:
            sel = fast_maxvol(V, R)
            if sel.rank == 0:
                diagnostics.append(f"R={R}: selection came back empty")
                continue
            G_R = gradients.columns(sel.indices)
            err = projection_error(gradients.mean, G_R, normalized=normalized)
        except (ZeroSubspace, ValueError) as exc:
            diagnostics.append(f"R={R}: {exc}")
            continue
        candidates.append(RankCandidate(rank=R, error=err, selection=sel))

    if not candidates:
        raise ZeroSubspace("no usable rank candidate: " + "; ".join(diagnostics))

    feasible = [c for c in candidates if c.error <= epsilon]
    if feasible:
        best = min(feasible, key=lambda c: (c.error, c.rank))
        return RankDecision(
            candidates=tuple(candidates),
            chosen_rank=best.rank,
            satisfied=True,
            epsilon=epsilon,
            diagnostics=tuple(diagnostics),
        )
    largest = candidates[-1]
    return RankDecision(
        candidates=tuple(candidates),
        chosen_rank=largest.rank,
        satisfied=False,
        epsilon=epsilon,
        diagnostics=tuple(diagnostics),
    )


def gradient_approx_bound(A, grad_fn, R: int, lipschitz: float) -> tuple[float, float]:
    """Check the mean-gradient approximation bound for MaxVol row subsets.

    Selects R rows of the top-R left-singular-vector matrix of A, then
    returns (lhs, rhs) with

        lhs = || mean_i grad(A[i]) - mean_{j in S} grad(A[j]) ||_2
        rhs = (K / R) * lipschitz * sigma_{R+1}(A)

    ``grad_fn`` maps one sample row to its gradient vector and must be
    ``lipschitz``-Lipschitz on the sample domain.  When R equals the
    smaller matrix dimension, sigma_{R+1} is taken as 0.
    """
    from .linalg import thin_svd

    A = as_matrix(A, "A")
    K, M = A.shape
    r_full = min(K, M)
    if R < r_full:
        svd = thin_svd(A, R + 1)
        sigma_next = float(svd.singular_values[R])
    else:
        svd = thin_svd(A, r_full)
        sigma_next = 0.0
    U_R = svd.U[:, :R]
    sel = fast_maxvol(U_R, R)

    grads = np.column_stack([grad_fn(A[i]) for i in range(K)])
    g_bar = grads.mean(axis=1)
    g_sub = grads[:, list(sel.indices)].mean(axis=1)
    lhs = float(np.linalg.norm(g_bar - g_sub))
    rhs = (K / R) * lipschitz * sigma_next
    return lhs, rhs
