"""Proximal-point iterative refinement on the shifted masked system.

The pinned subproblem reduces to the linear system  masked(G) x = -c_bar
with masked(G) only positive semidefinite in general.  Given the factor
of (masked(G) + eps*I), the iteration

    x_{k+1} = x_k + (masked(G) + eps*I)^{-1} (-c_bar - masked(G) x_k)

is the proximal-point method with step 1/eps.  Two regimes:

* consistent system: x_k converges to a solution and the steps vanish;
* inconsistent system (RHS has a component in the null space): the
  steps converge to the null-space component of the RHS scaled by
  1/eps, i.e. a direction of zero curvature along which the subproblem
  objective decreases without bound.

Classification reads the iterate statistics.  A small residual with a
collapsing step means a solution; settled second differences with a
step that stays large relative to ||x_k|| mean a descent direction.
The returned direction is normalized, sign-checked against c_bar (the
slope must be negative; the sign of the raw limit is not trusted), and
by default polished by one null-space contraction pass.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .kernel import matvec_masked, solve_with_factor

# Runtime guarantee on returned descent directions.
_CURVATURE_TOL = 1e-6


class RefinementError(RuntimeError):
    """Refinement failed to classify within the iteration budget.

    `diagnostics` carries the last iterate statistics, including the
    iterate itself under "iterate" (callers may salvage it: it is a
    strict descent direction for the subproblem whenever c_bar is
    nonzero, even though it certifies neither regime).
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class OutcomeKind(Enum):
    SOLUTION = "solution"
    DESCENT_DIRECTION = "descent_direction"


@dataclass
class RefineConfig:
    epsilon: float = 1e-7       # shift; factors must be built with this
    max_iters: int = 20
    res_tol: float = 1e-11      # on ||masked(G) x + c_bar|| / (1 + ||c_bar||)
    stagnation_tol: float = 1e-3  # step ratio separating the two regimes
    dd_tol: float = 1e-7        # on ||second difference|| / ||x||
    null_tol: float = 1e-8      # project_null stop: ||masked(G) x|| <= tol*||x0||
    polish: bool = True         # contract the extracted direction once

    def validate(self):
        if not 0 < self.epsilon:
            raise ValueError("epsilon must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        for name in ("res_tol", "stagnation_tol", "dd_tol", "null_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class RefineOutcome:
    kind: OutcomeKind
    p: np.ndarray
    iters: int
    final_residual: float

    @property
    def is_solution(self):
        return self.kind is OutcomeKind.SOLUTION


def _check_masked_rhs(f, c_bar):
    c_bar = np.asarray(c_bar, dtype=float)
    if c_bar.shape != (f.n,):
        raise ValueError(f"c_bar must have shape ({f.n},), got {c_bar.shape}")
    idx = f.mask.indices
    if idx.size and np.any(c_bar[idx] != 0.0):
        raise ValueError("c_bar must be masked (zero on the working set)")
    return c_bar


def refine_solve(f, c_bar, cfg=None, trace=None):
    """Solve or refute masked(G) x = -c_bar through the shifted factor.

    Parameters
    ----------
    f : MaskedFactor of (masked(G) + eps*I).
    c_bar : masked right-hand side (zero on the working set).
    cfg : RefineConfig.  The shift is always read off the factor; the
        config's epsilon only seeds fresh factorizations upstream.
    trace : optional list; iterates are appended (diagnostics).

    Returns
    -------
    RefineOutcome with kind SOLUTION (p solves the system, masked
    coordinates exactly zero) or DESCENT_DIRECTION (normalized p with
    masked(G) p ~ 0 and c_bar @ p < 0).

    Raises
    ------
    RefinementError if neither test fires within max_iters, or a
    descent direction fails its runtime checks.
    """
    cfg = cfg or RefineConfig()
    cfg.validate()
    c_bar = _check_masked_rhs(f, c_bar)
    G, W = f.base, f.mask

    c_norm = np.linalg.norm(c_bar)
    x = np.zeros(f.n)
    r = -c_bar
    prev_step = None
    stats = {}
    for k in range(1, cfg.max_iters + 1):
        step = solve_with_factor(f, r)
        x = x + step
        if trace is not None:
            trace.append(x.copy())
        r = -c_bar - matvec_masked(G, W, x)
        res = np.linalg.norm(r)
        x_norm = np.linalg.norm(x)
        step_norm = np.linalg.norm(step)
        ratio = step_norm / x_norm if x_norm > 0 else 0.0
        stats = {"iters": k, "residual": res, "x_norm": x_norm,
                 "step_norm": step_norm, "step_ratio": ratio}

        if res <= cfg.res_tol * (1.0 + c_norm) and ratio <= cfg.stagnation_tol:
            return RefineOutcome(OutcomeKind.SOLUTION, x, k, res)

        if prev_step is not None and x_norm > 0:
            dd = np.linalg.norm(step - prev_step)
            if dd <= cfg.dd_tol * x_norm:
                if ratio > cfg.stagnation_tol:
                    p = _extract_direction(f, c_bar, step, cfg, stats)
                    return RefineOutcome(OutcomeKind.DESCENT_DIRECTION, p,
                                         k, res)
                # Steps have stopped moving and are tiny relative to x:
                # converged to the attainable accuracy for this system.
                return RefineOutcome(OutcomeKind.SOLUTION, x, k, res)
        prev_step = step

    raise RefinementError(
        "no convergence within max_iters",
        diagnostics={**stats, "iterate": x})


def _extract_direction(f, c_bar, step, cfg, stats):
    # Normalize, orient downhill, optionally strip the range-space tail.
    p = step / np.linalg.norm(step)
    if c_bar @ p > 0:
        p = -p
    if cfg.polish:
        try:
            q, _ = _null_contract(f, p, cfg)
            q_norm = np.linalg.norm(q)
            if q_norm > 0:
                p = q / q_norm
                if c_bar @ p > 0:
                    p = -p
        except RefinementError:
            pass  # keep the unpolished step; the checks below decide

    curvature = np.linalg.norm(matvec_masked(f.base, f.mask, p))
    slope = c_bar @ p
    if curvature > _CURVATURE_TOL * np.linalg.norm(p) or not slope < 0:
        raise RefinementError(
            "extracted direction failed verification",
            diagnostics={**stats, "curvature": curvature, "slope": slope,
                         "iterate": step})
    return p


def _null_contract(f, seed, cfg):
    # x <- eps * (masked(G) + eps*I)^{-1} x kills range-space components
    # geometrically and leaves null components untouched.
    x = np.asarray(seed, dtype=float).copy()
    ref = np.linalg.norm(x)
    if ref == 0.0:
        return x, 0
    for k in range(cfg.max_iters + 1):
        if np.linalg.norm(matvec_masked(f.base, f.mask, x)) <= cfg.null_tol * ref:
            return x, k
        x = f.epsilon * solve_with_factor(f, x)
    raise RefinementError(
        "null-space contraction did not converge",
        diagnostics={"seed_norm": ref})


def project_null(f, c_bar, cfg=None):
    """Approximate projection of -c_bar onto the null space of masked(G).

    Iterates the contraction from x0 = -c_bar until
    ||masked(G) x|| <= null_tol * ||x0||.  For nonsingular masked(G) the
    result is (numerically) zero; for masked(G) = 0 it is -c_bar itself.
    """
    cfg = cfg or RefineConfig()
    cfg.validate()
    c_bar = _check_masked_rhs(f, c_bar)
    x, _ = _null_contract(f, -c_bar, cfg)
    return x


def contraction_rate(lam_min_nonzero, epsilon):
    """Per-iteration contraction factor eps / (lam + eps) of the
    range-space error, for the smallest nonzero eigenvalue lam."""
    if not lam_min_nonzero > 0:
        raise ValueError("lam_min_nonzero must be positive")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return epsilon / (lam_min_nonzero + epsilon)
