"""Dual active-set loop.

Minimizes 0.5 mu' G mu + h' mu subject to nonnegativity of the
inequality block of mu, starting from the feasible point mu = 0.  Each
iteration pins the working set to zero, asks the refinement module for
a direction, and either steps (with a ratio test against the bounds),
grows the working set at a blocking bound, or, at a subspace minimizer,
inspects the bound multipliers to drop an index or declare optimality.

Unbounded descent (a zero-curvature direction with no blocking bound)
means the original inequality-constrained problem is infeasible; that
surfaces as UnboundedDualError, and only after the curvature along the
direction is confirmed to be zero at machine level.

The proximal shift used by the refinement module doubles as a spectral
cutoff: eigenvalues far below it act as zeros, far above it as regular
curvature, and eigenvalues near it are ambiguous.  When a subproblem
lands in that band (refinement cannot classify, or a "flat" direction
turns out to carry curvature), the loop refactorizes with a sharper
shift and retries, down to a configured floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .kernel import (CholeskyDowndateError, MaskedFactor, WorkingSet,
                     add_index, factorize, lambda_from_direction,
                     mask_vector, remove_index)
from .refine import (OutcomeKind, RefineConfig, RefineOutcome,
                     RefinementError, refine_solve)


class UnboundedDualError(RuntimeError):
    """The dual objective decreases without bound; the primal problem
    admits no feasible point."""


class SolveStatus(Enum):
    OPTIMAL = "optimal"
    ITERATION_LIMIT = "iteration_limit"
    NUMERICAL_FAILURE = "numerical_failure"


@dataclass
class DualQP:
    """Lower QP data: quadratic term G, linear term h, and the split of
    the variable vector into m_eq free coordinates followed by m_in
    bound (>= 0) coordinates."""

    G: np.ndarray
    h: np.ndarray
    m_eq: int
    m_in: int

    def __post_init__(self):
        self.G = np.asarray(self.G, dtype=float)
        self.h = np.asarray(self.h, dtype=float)
        m = self.m_eq + self.m_in
        if self.m_eq < 0 or self.m_in < 0:
            raise ValueError("m_eq and m_in must be nonnegative")
        if self.G.shape != (m, m):
            raise ValueError(f"G must have shape ({m}, {m}), got {self.G.shape}")
        if self.h.shape != (m,):
            raise ValueError(f"h must have shape ({m},), got {self.h.shape}")
        if not (np.isfinite(self.G).all() and np.isfinite(self.h).all()):
            raise ValueError("G and h must be finite")
        scale = np.max(np.abs(self.G)) if self.G.size else 0.0
        if not np.allclose(self.G, self.G.T, rtol=0.0,
                           atol=1e-12 * (1.0 + scale)):
            raise ValueError("G must be symmetric")

    @property
    def m(self):
        return self.m_eq + self.m_in

    @property
    def inequality_indices(self):
        return np.arange(self.m_eq, self.m)

    def objective(self, mu):
        mu = np.asarray(mu, dtype=float)
        return 0.5 * mu @ (self.G @ mu) + self.h @ mu


@dataclass
class SolverConfig:
    refine: RefineConfig = field(default_factory=RefineConfig)
    lambda_tol: float = 1e-8          # bound-multiplier slack, scaled by 1+||h||
    stationarity_tol: float = 1e-8    # subspace-minimizer test, same scaling
    zero_step_tol: float = 1e-12      # treat a returned step this small as zero
    shift_shrink: float = 1e-2        # shift reduction per escalation
    shift_floor: float = 1e-12        # smallest shift worth factorizing with
    flat_tol: float = 1e-12           # certified-flat curvature, times 1+max|G|
    max_outer_iters: int | None = None  # default 10 * (m_eq + m_in)
    smartstart: bool = True
    debug: bool = False               # consistency spot checks every 50 iters
    collect_trace: bool = False       # record the objective per iteration


@dataclass
class IterateState:
    """One snapshot of the outer loop (exposed for composition/tests)."""
    mu: np.ndarray
    W: WorkingSet
    factor: MaskedFactor
    k: int


@dataclass
class SolveReport:
    mu_star: np.ndarray
    status: SolveStatus
    objective: float
    outer_iters: int
    refine_calls: int
    refine_iters_min: int
    refine_iters_max: int
    refine_iters_mean: float
    descent_count: int
    shift_retries: int               # escalations to a sharper shift
    final_shift: float               # shift in effect at termination
    stationarity_residual: float     # ||(G mu + h)_free||_inf / (1 + ||h||_inf)
    min_working_multiplier: float    # min (G mu + h) over the working set
    complementarity_residual: float
    kkt_residual: float
    message: str = ""
    objective_trace: list | None = None


def smartstart(qp):
    """Initial working set {i in the inequality block : h_i >= 0}.

    The gradient of the dual objective at mu = 0 is h.  Where h_i >= 0
    the objective grows along the coordinate, so the bound is likely
    active at the optimum and gets pinned; where h_i < 0 the first
    unconstrained step pushes into the interior, so the coordinate
    stays free.  On problems where few bounds end up inactive this
    leaves a small first subproblem and the loop mostly drops pins."""
    idx = [int(i) for i in qp.inequality_indices if qp.h[i] >= 0.0]
    return WorkingSet(qp.m_eq, qp.m_in, idx)


def step_length(mu, p, inequality_indices, W, bounded):
    """Largest feasible step along p from mu, and the blocking index.

    Only free inequality coordinates with (p)_i < 0 limit the step.
    When `bounded`, the step is capped at 1 (the subspace minimizer);
    blocking is None when the cap binds first.  Ties pick the smallest
    index.  When not bounded and nothing blocks, the dual is unbounded.
    """
    mu = np.asarray(mu, dtype=float)
    p = np.asarray(p, dtype=float)
    member = W.member
    cand = [i for i in np.asarray(inequality_indices, dtype=int)
            if not member[i] and p[i] < 0.0]
    if not cand:
        if bounded:
            return 1.0, None
        raise UnboundedDualError(
            "unbounded descent direction with no blocking bound: "
            "the primal problem is infeasible")
    ratios = np.array([-mu[i] / p[i] for i in cand])
    j = int(np.argmin(ratios))  # first minimum = smallest index
    alpha = float(ratios[j])
    if bounded and alpha > 1.0:
        return 1.0, None
    return alpha, int(cand[j])


def subproblem_direction(state, qp, cfg=None):
    """Refinement outcome for the subproblem pinned at state.W."""
    c = qp.G @ state.mu + qp.h
    c_bar = mask_vector(c, state.W)
    return refine_solve(state.factor, c_bar, cfg or RefineConfig())


def _sharper(qp, W, f, cfg):
    return factorize(qp.G, W, max(f.epsilon * cfg.shift_shrink,
                                  cfg.shift_floor))


def _salvage(err, c_bar):
    """Turn a failed classification into an uncertified descent direction.

    The final refinement iterate descends the subproblem objective by
    construction, so when classification is out of reach (spectrum
    crowding the shift from both sides) the iterate still drives the
    outer loop: it selects a blocking bound, or gets cut at its exact
    line minimizer.  Re-raises the original error when the iterate is
    missing or fails the slope check.
    """
    x = err.diagnostics.get("iterate")
    if x is None:
        raise err
    x = np.asarray(x, dtype=float)
    nrm = np.linalg.norm(x)
    if not nrm > 0.0:
        raise err
    p = x / nrm
    if not float(c_bar @ p) < 0.0:
        raise err
    iters = int(err.diagnostics.get("iters", 0)) or 1
    res = float(err.diagnostics.get("residual", math.nan))
    return RefineOutcome(OutcomeKind.DESCENT_DIRECTION, p, iters, res)


def _directed_step(qp, W, f, c_bar, mu, cfg, g_scale):
    """Classify the pinned subproblem and settle the step along the result.

    Returns (outcome, alpha, blocking, f, retries).  The factor comes
    back because recovery may replace it: when refinement cannot
    classify at the current shift the subproblem is retried with a
    sharper one, and once the floor is reached the last iterate is
    salvaged as an uncertified descent direction.  Every descent step
    is capped at its exact line minimizer -slope/curvature, so real
    curvature along a nominally flat direction cannot break the
    monotone decrease of the objective.  Near-zero solutions get a
    throwaway (alpha, blocking); the caller tests them for the
    multiplier branch before stepping.

    Raises RefinementError when even salvage fails, and
    UnboundedDualError only for a classified direction whose curvature
    is zero at machine level while no bound blocks it.
    """
    ineq = qp.inequality_indices
    retries = 0
    salvaged = False
    while True:
        try:
            outcome = refine_solve(f, c_bar, cfg.refine)
        except RefinementError as err:
            if f.epsilon > cfg.shift_floor:
                f = _sharper(qp, W, f, cfg)
                retries += 1
                continue
            outcome = _salvage(err, c_bar)
            salvaged = True
        break

    if outcome.is_solution:
        alpha, blocking = step_length(mu, outcome.p, ineq, W, bounded=True)
        return outcome, alpha, blocking, f, retries

    p = outcome.p
    curv = float(p @ (qp.G @ p))
    flat = curv <= cfg.flat_tol * g_scale * float(p @ p)
    alpha_min = math.inf if flat else -float(c_bar @ p) / curv
    try:
        alpha, blocking = step_length(mu, p, ineq, W, bounded=False)
    except UnboundedDualError:
        if flat and not salvaged:
            raise  # certified: the dual objective is a descending ray
        if math.isinf(alpha_min):
            raise RefinementError(
                "flat uncertified direction with no blocking bound",
                diagnostics={"salvaged": salvaged, "curvature": curv})
        return outcome, alpha_min, None, f, retries
    if alpha_min < alpha:
        return outcome, alpha_min, None, f, retries
    return outcome, alpha, blocking, f, retries


def _inf_norm(v):
    return float(np.max(np.abs(v))) if v.size else 0.0


def _kkt_summary(qp, mu, W):
    g = qp.G @ mu + qp.h
    h_scale = 1.0 + _inf_norm(qp.h)
    free = np.setdiff1d(np.arange(qp.m), W.indices, assume_unique=True)
    stat = _inf_norm(g[free]) / h_scale
    wk = W.indices
    min_mult = float(np.min(g[wk])) if wk.size else math.inf
    ineq = qp.inequality_indices
    if ineq.size:
        comp = _inf_norm(mu[ineq] * g[ineq])
        comp /= h_scale * (1.0 + _inf_norm(mu[ineq]))
    else:
        comp = 0.0
    kkt = max(stat, comp, max(0.0, -min_mult) / h_scale if wk.size else 0.0)
    return stat, min_mult, comp, kkt


def _debug_check(qp, mu, W, f):
    rebuilt = factorize(qp.G, W, f.epsilon)
    scale = 1.0 + np.linalg.norm(qp.G)
    drift = np.linalg.norm(f.factor @ f.factor.T
                           - rebuilt.factor @ rebuilt.factor.T)
    if drift > 1e-9 * scale:
        raise RuntimeError(f"incremental factor drifted: {drift:.3e}")
    ineq = qp.inequality_indices
    if ineq.size and np.min(mu[ineq]) < 0.0:
        raise RuntimeError("dual feasibility violated")
    if np.any(mu[W.indices] != 0.0):
        raise RuntimeError("working-set coordinates are not exactly zero")


def solve_dual(qp, W0=None, cfg=None):
    """Run the dual active-set method from mu = 0.

    Parameters
    ----------
    qp : DualQP
    W0 : optional WorkingSet of bounds to pin initially (any subset of
        the inequality block is valid at mu = 0).  Defaults to
        smartstart(qp) when cfg.smartstart, else the empty set.
    cfg : SolverConfig

    Returns
    -------
    SolveReport.  status OPTIMAL carries the certified multipliers;
    ITERATION_LIMIT and NUMERICAL_FAILURE report the best iterate with
    a diagnostic message.

    Raises
    ------
    UnboundedDualError when a zero-curvature descent direction meets no
    blocking bound (primal infeasible).
    """
    cfg = cfg or SolverConfig()
    cfg.refine.validate()
    if W0 is None:
        W = smartstart(qp) if cfg.smartstart else WorkingSet(qp.m_eq, qp.m_in)
    else:
        if (W0.m_eq, W0.m_in) != (qp.m_eq, qp.m_in):
            raise ValueError("W0 dimensions do not match the dual problem")
        W = W0
    m = qp.m
    eps = cfg.refine.epsilon
    max_outer = cfg.max_outer_iters or max(10 * m, 1)
    h_scale = 1.0 + _inf_norm(qp.h)
    ineq = qp.inequality_indices

    mu = np.zeros(m)
    f = factorize(qp.G, W, eps)
    g_scale = 1.0 + (float(np.max(np.abs(qp.G))) if qp.G.size else 0.0)
    refine_iters = []
    descent_count = 0
    shift_retries = 0
    trace = [] if cfg.collect_trace else None
    visited = {}
    status = SolveStatus.ITERATION_LIMIT
    message = "outer iteration cap reached"
    k = 0

    for k in range(1, max_outer + 1):
        g = qp.G @ mu
        c = g + qp.h
        obj = 0.5 * (mu @ g) + qp.h @ mu
        if trace is not None:
            trace.append(obj)

        key = W.as_tuple()
        seen = visited.setdefault(key, set())
        if obj in seen:
            message = (f"cycle detected: working set {key} revisited at "
                       f"objective {obj!r}")
            break
        seen.add(obj)

        c_bar = mask_vector(c, W)
        outcome = None
        p_zero = None
        if _inf_norm(c_bar) <= cfg.stationarity_tol * h_scale:
            p_zero = np.zeros(m)  # already at this subspace's minimizer
        else:
            try:
                outcome, alpha, blocking, f, retries = _directed_step(
                    qp, W, f, c_bar, mu, cfg, g_scale)
            except RefinementError as err:
                status = SolveStatus.NUMERICAL_FAILURE
                message = f"refinement failed at iteration {k}: {err}"
                break
            shift_retries += retries
            refine_iters.append(outcome.iters)
            if (outcome.is_solution
                    and _inf_norm(outcome.p)
                    <= cfg.zero_step_tol * (1.0 + _inf_norm(mu))):
                p_zero = outcome.p

        if p_zero is not None:
            lam = lambda_from_direction(qp.G, p_zero, c, W)
            sigma = -lam  # bound multipliers: gradient on the working set
            if sigma.size == 0 or np.min(sigma) >= -cfg.lambda_tol * h_scale:
                status = SolveStatus.OPTIMAL
                message = ""
                break
            j = int(W.indices[int(np.argmin(sigma))])
            W = W.remove(j)
            try:
                f = remove_index(f, j)
            except CholeskyDowndateError:
                f = factorize(qp.G, W, f.epsilon)
            continue

        if not outcome.is_solution:
            descent_count += 1
        mu = mu + alpha * outcome.p
        if ineq.size:
            np.maximum(mu[qp.m_eq:], 0.0, out=mu[qp.m_eq:])
        if blocking is not None:
            mu[blocking] = 0.0
            W = W.add(blocking)
            f = add_index(f, blocking)
        if cfg.debug and k % 50 == 0:
            _debug_check(qp, mu, W, f)
    else:
        k = max_outer

    stat, min_mult, comp, kkt = _kkt_summary(qp, mu, W)
    n_ref = len(refine_iters)
    return SolveReport(
        mu_star=mu,
        status=status,
        objective=float(qp.objective(mu)),
        outer_iters=k,
        refine_calls=n_ref,
        refine_iters_min=min(refine_iters) if n_ref else 0,
        refine_iters_max=max(refine_iters) if n_ref else 0,
        refine_iters_mean=float(np.mean(refine_iters)) if n_ref else 0.0,
        descent_count=descent_count,
        shift_retries=shift_retries,
        final_shift=f.epsilon,
        stationarity_residual=stat,
        min_working_multiplier=min_mult,
        complementarity_residual=comp,
        kkt_residual=kkt,
        message=message,
        objective_trace=trace,
    )
