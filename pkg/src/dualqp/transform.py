"""Primal problem container and the primal <-> dual transformations.

The primal problem is

    min 0.5 x' P x + q' x   s.t.  A x = b,  C x <= d,

with P symmetric positive definite.  Eliminating x through the
stationarity condition gives the lower (dual) problem handled by
active_set: G is the Gram matrix of the stacked constraint rows under
the P inner product and h collects the constraint offsets.  P is
factored once and the triangular factor is retained for every
subsequent solve; no inverse is ever formed.  Projection problems
(P = I) can skip the factorization entirely via the identity_p flag.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .active_set import DualQP


class InvalidProblemError(ValueError):
    """The problem data violate a structural requirement (e.g. P not
    positive definite)."""


def _as_2d(name, M, ncols=None):
    if M is None:
        M = np.zeros((0, ncols)) if ncols is not None else np.zeros((0, 0))
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array, got ndim={M.ndim}")
    return M


@dataclass
class PrimalQP:
    """Dense strictly convex QP data.

    A/b and C/d may be None or empty (zero-row) blocks.  With
    identity_p=True, P may be omitted (None) and is treated as the
    identity; if P is given anyway it must actually be the identity.
    """

    P: np.ndarray | None
    q: np.ndarray
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    C: np.ndarray | None = None
    d: np.ndarray | None = None
    identity_p: bool = False

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float)
        if self.q.ndim != 1:
            raise ValueError("q must be a vector")
        n = self.q.shape[0]
        if self.P is None:
            if not self.identity_p:
                raise ValueError("P may only be omitted with identity_p=True")
        else:
            self.P = np.asarray(self.P, dtype=float)
            if self.P.shape != (n, n):
                raise ValueError(
                    f"P must have shape ({n}, {n}), got {self.P.shape}")
            scale = 1.0 + np.max(np.abs(self.P)) if self.P.size else 1.0
            if not np.allclose(self.P, self.P.T, rtol=0.0,
                               atol=1e-12 * scale):
                raise ValueError("P must be symmetric")
            if self.identity_p and not np.array_equal(self.P, np.eye(n)):
                raise ValueError("identity_p=True but P is not the identity")
        self.A = _as_2d("A", self.A, n)
        self.C = _as_2d("C", self.C, n)
        if self.A.shape[1] != n or self.C.shape[1] != n:
            raise ValueError("A and C must have n columns")
        self.b = (np.zeros(0) if self.b is None
                  else np.asarray(self.b, dtype=float))
        self.d = (np.zeros(0) if self.d is None
                  else np.asarray(self.d, dtype=float))
        if self.b.shape != (self.A.shape[0],):
            raise ValueError(
                f"b must have length {self.A.shape[0]}, got {self.b.shape}")
        if self.d.shape != (self.C.shape[0],):
            raise ValueError(
                f"d must have length {self.C.shape[0]}, got {self.d.shape}")
        for name in ("P", "q", "A", "b", "C", "d"):
            v = getattr(self, name)
            if v is not None and not np.isfinite(v).all():
                raise ValueError(f"{name} contains non-finite entries")

    @property
    def n(self):
        return self.q.shape[0]

    @property
    def m_eq(self):
        return self.A.shape[0]

    @property
    def m_in(self):
        return self.C.shape[0]

    def stacked(self):
        """[A; C] as one (m_eq + m_in, n) block."""
        return np.vstack([self.A, self.C])

    def objective(self, x):
        x = np.asarray(x, dtype=float)
        if self.identity_p:
            return 0.5 * x @ x + self.q @ x
        return 0.5 * x @ (self.P @ x) + self.q @ x


class PFactor:
    """Retained Cholesky factor of P (or the identity shortcut)."""

    def __init__(self, chol=None, identity=False):
        self._chol = chol
        self.identity = bool(identity)

    def solve(self, rhs):
        """P^{-1} rhs through triangular solves."""
        rhs = np.asarray(rhs, dtype=float)
        if self.identity:
            return rhs.copy()
        return cho_solve(self._chol, rhs, check_finite=False)


@dataclass
class PrimalSolution:
    x: np.ndarray
    mu_eq: np.ndarray
    mu_in: np.ndarray
    eq_violation: float
    ineq_violation: float
    stationarity_residual: float
    complementarity_residual: float


def build_dual(primal):
    """Assemble the dual QP and the retained factor of P.

    Returns (DualQP, PFactor).  G is symmetrized after assembly; its
    pre-symmetrization asymmetry is at rounding level.  Raises
    InvalidProblemError when Cholesky of P breaks down (P not PD).
    """
    M = primal.stacked()
    offsets = np.concatenate([primal.b, primal.d])
    if primal.identity_p:
        pf = PFactor(identity=True)
        Y = M.T
        p_inv_q = primal.q
    else:
        try:
            chol = cho_factor(primal.P, lower=True, check_finite=False)
        except np.linalg.LinAlgError as err:
            raise InvalidProblemError(f"P is not positive definite: {err}")
        pf = PFactor(chol=chol)
        Y = cho_solve(chol, M.T, check_finite=False) if M.size else M.T
        p_inv_q = cho_solve(chol, primal.q, check_finite=False)
    G = M @ Y
    G = 0.5 * (G + G.T)
    h = M @ p_inv_q + offsets
    dual = DualQP(G=G, h=h, m_eq=primal.m_eq, m_in=primal.m_in)
    return dual, pf


def recover_primal(primal, pf, mu):
    """Recover the primal point x = -P^{-1} (q + A' mu_eq + C' mu_in).

    mu stacks the equality multipliers first; its inequality part is
    expected to be nonnegative (as produced by solve_dual).  Residuals
    of the recovered point are reported alongside it.
    """
    mu = np.asarray(mu, dtype=float)
    m = primal.m_eq + primal.m_in
    if mu.shape != (m,):
        raise ValueError(f"mu must have length {m}, got {mu.shape}")
    M = primal.stacked()
    grad = primal.q + (M.T @ mu if M.size else 0.0)
    x = -pf.solve(grad)
    mu_eq = mu[:primal.m_eq]
    mu_in = mu[primal.m_eq:]
    if primal.m_eq:
        eq_violation = float(np.max(np.abs(primal.A @ x - primal.b)))
    else:
        eq_violation = 0.0
    if primal.m_in:
        slack = primal.C @ x - primal.d
        ineq_violation = float(max(0.0, np.max(slack)))
        complementarity = float(np.max(np.abs(mu_in * slack)))
    else:
        ineq_violation = 0.0
        complementarity = 0.0
    px = x if primal.identity_p else primal.P @ x
    stationarity = float(np.max(np.abs(px + grad)))
    return PrimalSolution(x=x, mu_eq=mu_eq, mu_in=mu_in,
                          eq_violation=eq_violation,
                          ineq_violation=ineq_violation,
                          stationarity_residual=stationarity,
                          complementarity_residual=complementarity)
