import numpy as np
import pytest
from numpy.testing import assert_allclose

from dualqp import (OutcomeKind, RefineConfig, RefinementError, WorkingSet,
                    contraction_rate, factorize, project_null, refine_solve)


def diag_factor(diag, masked=(), epsilon=1e-7):
    G = np.diag(np.asarray(diag, dtype=float))
    W = WorkingSet(0, len(diag), masked)
    return G, factorize(G, W, epsilon)


class TestSolutionOutcomes:

    def test_well_conditioned_system(self):
        G, f = diag_factor([1.0, 2.0, 4.0])
        c = np.array([-1.0, 2.0, -8.0])
        out = refine_solve(f, c)
        assert out.kind is OutcomeKind.SOLUTION
        assert out.is_solution
        assert_allclose(G @ out.p, -c, rtol=0, atol=1e-9)
        assert 1 <= out.iters <= 20
        assert out.final_residual <= 1e-11 * (1 + np.linalg.norm(c))

    def test_dense_random_system(self):
        rng = np.random.default_rng(7)
        for trial in range(10):
            n = int(rng.integers(2, 20))
            M = rng.standard_normal((n, n))
            G = M @ M.T + 0.1 * np.eye(n)
            W = WorkingSet(0, n)
            f = factorize(G, W, 1e-7)
            c = rng.standard_normal(n)
            out = refine_solve(f, c)
            assert out.kind is OutcomeKind.SOLUTION
            assert_allclose(G @ out.p, -c, rtol=0, atol=1e-7)

    def test_masked_coordinates_stay_pinned(self):
        G, f = diag_factor([1.0, 3.0, 2.0], masked=[1])
        c = np.array([-1.0, 0.0, -4.0])
        out = refine_solve(f, c)
        assert out.kind is OutcomeKind.SOLUTION
        assert out.p[1] == 0.0
        assert_allclose(out.p[[0, 2]], [1.0, 2.0], rtol=0, atol=1e-9)

    def test_singular_consistent_rhs(self):
        # zero eigenvalue but the rhs has no component on the null space
        G, f = diag_factor([1.0, 0.0])
        c = np.array([-1.0, 0.0])
        out = refine_solve(f, c)
        assert out.kind is OutcomeKind.SOLUTION
        assert out.final_residual <= 1e-10 * (1 + np.linalg.norm(c))


class TestDescentOutcomes:

    def test_singular_inconsistent_rhs(self):
        G, f = diag_factor([1.0, 0.0])
        c = np.array([-1.0, -1.0])
        out = refine_solve(f, c)
        assert out.kind is OutcomeKind.DESCENT_DIRECTION
        assert not out.is_solution
        p = out.p
        assert float(c @ p) < 0.0
        assert np.linalg.norm(G @ p) <= 1e-6 * np.linalg.norm(p)

    def test_direction_matches_null_space(self):
        # null space is span(v); the extracted direction lands on it
        rng = np.random.default_rng(8)
        Q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
        lam = np.array([2.0, 1.0, 0.5, 0.1, 0.0])
        G = (Q * lam) @ Q.T
        G = 0.5 * (G + G.T)
        v = Q[:, 4]
        c = -(G @ rng.standard_normal(5)) - 0.3 * v
        f = factorize(G, WorkingSet(0, 5), 1e-7)
        out = refine_solve(f, c)
        assert out.kind is OutcomeKind.DESCENT_DIRECTION
        p = out.p / np.linalg.norm(out.p)
        assert abs(abs(p @ v) - 1.0) <= 1e-6
        assert float(c @ p) < 0.0


class TestFailurePath:

    def test_budget_exhaustion_raises_with_iterate(self):
        # eigenvalue near the shift: contraction is too slow to classify
        G, f = diag_factor([5e-7, 1.0])
        c = np.array([-1.0, -1.0])
        with pytest.raises(RefinementError) as info:
            refine_solve(f, c, RefineConfig(max_iters=3))
        diag = info.value.diagnostics
        assert "iterate" in diag and "iters" in diag and "residual" in diag
        x = np.asarray(diag["iterate"])
        # the stranded iterate still slopes downhill, so it is salvageable
        assert float(c @ x) < 0.0

    def test_eigenvalue_at_shift_raises(self):
        G, f = diag_factor([1e-7, 1.0])
        c = np.array([-1.0, -1.0])
        with pytest.raises(RefinementError):
            refine_solve(f, c)


class TestConfig:

    def test_validate_rejects_bad_values(self):
        with pytest.raises(ValueError):
            RefineConfig(epsilon=0.0).validate()
        with pytest.raises(ValueError):
            RefineConfig(max_iters=0).validate()
        with pytest.raises(ValueError):
            RefineConfig(res_tol=-1.0).validate()
        RefineConfig().validate()

    def test_shift_comes_from_the_factor(self):
        # a sharper factor is fine under the default config: escalation
        # retries rebuild factors without touching cfg.epsilon
        G, f = diag_factor([1.0, 0.5], epsilon=1e-9)
        out = refine_solve(f, np.array([-1.0, -1.0]), RefineConfig())
        assert out.kind is OutcomeKind.SOLUTION


def test_contraction_rate():
    assert contraction_rate(1.0, 1e-7) == pytest.approx(1e-7 / (1 + 1e-7))
    # faster for eigenvalues far above the shift
    assert contraction_rate(1e-3, 1e-7) < contraction_rate(1e-5, 1e-7)
    with pytest.raises(ValueError):
        contraction_rate(0.0, 1e-7)


def test_project_null():
    G, f = diag_factor([0.0, 1.0])
    z = project_null(f, np.array([-1.0, 0.5]))
    assert np.linalg.norm(z) == pytest.approx(1.0, abs=1e-9)
    assert np.linalg.norm(G @ z) <= 1e-8
