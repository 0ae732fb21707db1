"""Masked Cholesky kernel for bound-pinned quadratic subproblems.

The dual active-set iteration repeatedly solves linear systems in a
"masked" copy of the dual quadratic term G: every working-set row and
column is replaced by the corresponding identity row, which pins those
coordinates to zero without shrinking the matrix or reindexing anything.
This module owns that masked matrix, the Cholesky factorization of
(masked G + eps*I), and the rank-1 update/downdate pair that tracks
single-index working-set changes in O(n^2) instead of refactorizing.

Masking preserves positive definiteness: reordering so the masked block
comes first gives blockdiag(I, G_ff) with G_ff a principal submatrix of
G, so every pivot stays positive.  The eps shift is applied after
masking, hence masked diagonal entries store 1 + eps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

# Downdated pivots at or below _PIVOT_FLOOR * (1 + eps*n) abort the
# incremental path; the caller refactorizes from scratch.
_PIVOT_FLOOR = 1e-12


class CholeskyDowndateError(RuntimeError):
    """A rank-1 downdate produced a non-positive (or tiny) pivot.

    The factor is left in an undefined state; rebuild it with factorize().
    """


class WorkingSet:
    """Ordered set of masked dual indices.

    Indices are 0-based positions into the stacked dual vector
    (equalities first, inequalities after) and must lie in the
    inequality block [m_eq, m_eq + m_in).  Instances are immutable;
    add/remove return new sets.  Iteration order is ascending, and that
    order is what lambda_from_direction reports multipliers in.
    """

    __slots__ = ("m_eq", "m_in", "_member")

    def __init__(self, m_eq, m_in, indices=()):
        if m_eq < 0 or m_in < 0:
            raise ValueError("m_eq and m_in must be nonnegative")
        self.m_eq = int(m_eq)
        self.m_in = int(m_in)
        self._member = np.zeros(self.m_eq + self.m_in, dtype=bool)
        for i in indices:
            i = int(i)
            if not self.m_eq <= i < self.m_eq + self.m_in:
                raise ValueError(
                    f"index {i} outside the inequality block "
                    f"[{self.m_eq}, {self.m_eq + self.m_in})")
            if self._member[i]:
                raise ValueError(f"duplicate working-set index {i}")
            self._member[i] = True

    @property
    def m(self):
        """Dimension of the dual vector the set indexes into."""
        return self.m_eq + self.m_in

    @property
    def indices(self):
        """Masked indices in ascending order."""
        return np.flatnonzero(self._member)

    @property
    def member(self):
        """Boolean membership array of length m (copy)."""
        return self._member.copy()

    def __contains__(self, i):
        i = int(i)
        return 0 <= i < self.m and bool(self._member[i])

    def __len__(self):
        return int(self._member.sum())

    def __iter__(self):
        return iter(self.indices.tolist())

    def __repr__(self):
        return (f"WorkingSet(m_eq={self.m_eq}, m_in={self.m_in}, "
                f"indices={self.indices.tolist()})")

    def __eq__(self, other):
        if not isinstance(other, WorkingSet):
            return NotImplemented
        return (self.m_eq == other.m_eq and self.m_in == other.m_in
                and np.array_equal(self._member, other._member))

    def as_tuple(self):
        return tuple(self.indices.tolist())

    def __hash__(self):
        return hash((self.m_eq, self.m_in, self.as_tuple()))

    def add(self, i):
        if i in self:
            raise ValueError(f"index {i} already in the working set")
        return WorkingSet(self.m_eq, self.m_in, self.indices.tolist() + [int(i)])

    def remove(self, i):
        if i not in self:
            raise ValueError(f"index {i} not in the working set")
        keep = [j for j in self.indices.tolist() if j != int(i)]
        return WorkingSet(self.m_eq, self.m_in, keep)


def _check_matrix(G, W):
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {G.shape}")
    if G.shape[0] != W.m:
        raise ValueError(
            f"matrix of order {G.shape[0]} does not match working set "
            f"dimension {W.m}")
    return G


def build_masked(G, W):
    """Masked copy of G: unit diagonal at working-set indices, zeros on
    their rows/columns, everything else untouched."""
    G = _check_matrix(G, W)
    out = G.copy()
    idx = W.indices
    out[idx, :] = 0.0
    out[:, idx] = 0.0
    out[idx, idx] = 1.0
    return out


def mask_vector(c, W):
    """Copy of c with working-set entries zeroed."""
    c = np.asarray(c, dtype=float)
    if c.shape != (W.m,):
        raise ValueError(f"expected a vector of length {W.m}, got {c.shape}")
    out = c.copy()
    out[W.indices] = 0.0
    return out


def matvec_masked(G, W, x):
    """Product masked(G) @ x without materializing the masked matrix."""
    x = np.asarray(x, dtype=float)
    idx = W.indices
    xf = x.copy()
    xf[idx] = 0.0
    y = G @ xf
    y[idx] = x[idx]
    return y


@dataclass
class MaskedFactor:
    """Lower-triangular Cholesky factor of (masked(base) + epsilon*I).

    `base` is the unmasked symmetric matrix and is never modified; the
    mask and the factor move together through add_index/remove_index.
    Single-writer semantics: updates mutate `factor` in place.
    """

    base: np.ndarray
    mask: WorkingSet
    epsilon: float
    factor: np.ndarray

    @property
    def n(self):
        return self.base.shape[0]

    def matrix(self):
        """Reconstruct masked(base) + epsilon*I (diagnostics/tests)."""
        M = build_masked(self.base, self.mask)
        M[np.diag_indices_from(M)] += self.epsilon
        return M

    def copy(self):
        return MaskedFactor(self.base, self.mask, self.epsilon,
                            self.factor.copy())


def factorize(G, W, epsilon):
    """Factor masked(G) + epsilon*I from scratch.

    Parameters
    ----------
    G : (m, m) array, symmetric positive semidefinite.
    W : WorkingSet
    epsilon : float, > 0.  Regularization added after masking, so masked
        diagonal entries hold 1 + epsilon.

    Returns
    -------
    MaskedFactor
    """
    G = _check_matrix(G, W)
    if not np.isfinite(G).all():
        raise ValueError("matrix entries must be finite")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    scale = np.max(np.abs(G)) if G.size else 0.0
    if not np.allclose(G, G.T, rtol=0.0, atol=1e-8 * (1.0 + scale)):
        raise ValueError("matrix must be symmetric")
    M = build_masked(G, W)
    M[np.diag_indices_from(M)] += epsilon
    L = np.linalg.cholesky(M) if M.size else M
    return MaskedFactor(base=G, mask=W, epsilon=float(epsilon), factor=L)


def _rank1_update(L, v):
    # L <- chol(L L^T + v v^T) in place; v is consumed.
    n = L.shape[0]
    for k in range(n):
        lkk = L[k, k]
        vk = v[k]
        r = np.hypot(lkk, vk)
        c = r / lkk
        s = vk / lkk
        L[k, k] = r
        if k + 1 < n:
            col = L[k + 1:, k]
            col += s * v[k + 1:]
            col /= c
            v[k + 1:] = c * v[k + 1:] - s * col


def _rank1_downdate(L, v, pivot_floor):
    # L <- chol(L L^T - v v^T) in place; v is consumed.  Raises when a
    # pivot falls to or below pivot_floor.
    n = L.shape[0]
    floor2 = pivot_floor * pivot_floor
    for k in range(n):
        lkk = L[k, k]
        vk = v[k]
        r2 = (lkk - vk) * (lkk + vk)
        if not r2 > floor2:
            raise CholeskyDowndateError(
                f"downdate pivot {r2:.3e} at position {k} fell below "
                f"{floor2:.3e}; refactorize")
        r = np.sqrt(r2)
        c = r / lkk
        s = vk / lkk
        L[k, k] = r
        if k + 1 < n:
            col = L[k + 1:, k]
            col -= s * v[k + 1:]
            col /= c
            v[k + 1:] = c * v[k + 1:] - s * col


def add_index(f, i):
    """Grow the mask by index i, updating the factor in place.

    Row/column i of the masked matrix become the unit vector (diagonal
    1 + eps).  Blocks above/left of i are untouched; the trailing block
    absorbs the removed column piece through a rank-1 update.  O(n^2).
    Returns f (mutated).
    """
    if i in f.mask:
        raise ValueError(f"index {i} already masked")
    new_mask = f.mask.add(i)  # validates the inequality range
    L = f.factor
    w = L[i + 1:, i].copy()
    L[i, :i] = 0.0
    L[i, i] = np.sqrt(1.0 + f.epsilon)
    L[i + 1:, i] = 0.0
    _rank1_update(L[i + 1:, i + 1:], w)
    f.mask = new_mask
    return f


def remove_index(f, i):
    """Shrink the mask by index i, updating the factor in place.

    Row i of the factor is recomputed from the unmasked base column
    (entries at still-masked indices stay zero), then the trailing block
    sheds the new column piece through a rank-1 downdate.  O(n^2).
    Returns f (mutated).

    Raises CholeskyDowndateError when a pivot collapses; the factor is
    then invalid and must be rebuilt with factorize().
    """
    if i not in f.mask:
        raise ValueError(f"index {i} not masked")
    new_mask = f.mask.remove(i)
    L = f.factor
    pivot_floor = _PIVOT_FLOOR * (1.0 + f.epsilon * f.n)

    col = f.base[:, i].astype(float).copy()
    col[new_mask.indices] = 0.0  # other masked rows keep zero coupling
    diag = f.base[i, i] + f.epsilon

    if i > 0:
        l21 = solve_triangular(L[:i, :i], col[:i], lower=True,
                               check_finite=False)
    else:
        l21 = np.zeros(0)
    piv2 = diag - l21 @ l21
    if not piv2 > pivot_floor * pivot_floor:
        raise CholeskyDowndateError(
            f"diagonal pivot {piv2:.3e} at index {i} is not positive; "
            "refactorize")
    ell = np.sqrt(piv2)
    l32 = (col[i + 1:] - L[i + 1:, :i] @ l21) / ell

    L[i, :i] = l21
    L[i, i] = ell
    L[i + 1:, i] = l32
    _rank1_downdate(L[i + 1:, i + 1:], l32.copy(), pivot_floor)
    f.mask = new_mask
    return f


def solve_with_factor(f, rhs):
    """Solve (masked(base) + eps*I) x = rhs with the retained factor."""
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (f.n,):
        raise ValueError(f"rhs must have shape ({f.n},), got {rhs.shape}")
    if f.n == 0:
        return rhs.copy()
    return cho_solve((f.factor, True), rhs, check_finite=False)


def lambda_from_direction(G, p, c, W):
    """Working-set multipliers of the pinned subproblem.

    Entry j is (-G p - c) evaluated at the j-th working-set index, in
    ascending index order.  With p = 0 this reduces to -c on the set.
    """
    G = _check_matrix(G, W)
    p = np.asarray(p, dtype=float)
    c = np.asarray(c, dtype=float)
    if p.shape != (W.m,) or c.shape != (W.m,):
        raise ValueError("p and c must match the working-set dimension")
    return -(G @ p + c)[W.indices]
