import numpy as np
import pytest
from numpy.testing import assert_allclose

from dualqp import (InfeasibleProblemError, PrimalQP, enumerate_solve,
                    random_qp)


class TestEnumerateSolve:

    def test_projection_example(self):
        p = PrimalQP(P=None, q=np.array([-2.0, 0.0]), identity_p=True,
                     C=np.array([[1.0, 0.0]]), d=np.array([1.0]))
        res = enumerate_solve(p)
        assert_allclose(res.x, [1.0, 0.0], rtol=0, atol=1e-12)
        assert res.active == (0,)
        assert res.objective == pytest.approx(-1.5)
        assert res.certified

    def test_unconstrained(self):
        p = PrimalQP(P=np.diag([2.0, 1.0]), q=np.array([-2.0, 3.0]))
        res = enumerate_solve(p)
        assert_allclose(res.x, [1.0, -3.0], rtol=0, atol=1e-12)
        assert res.active == ()

    def test_equality_only_closed_form(self):
        # min 0.5 x'x  s.t.  x1 + x2 = 2  has solution (1, 1)
        p = PrimalQP(P=np.eye(2), q=np.zeros(2),
                     A=np.array([[1.0, 1.0]]), b=np.array([2.0]))
        res = enumerate_solve(p)
        assert_allclose(res.x, [1.0, 1.0], rtol=0, atol=1e-12)

    def test_inactive_constraints_ignored(self):
        p = PrimalQP(P=np.eye(2), q=np.array([-2.0, 0.0]),
                     C=np.array([[1.0, 0.0], [0.0, 1.0]]),
                     d=np.array([5.0, 5.0]))
        res = enumerate_solve(p)
        assert_allclose(res.x, [2.0, 0.0], rtol=0, atol=1e-12)
        assert res.active == ()

    def test_infeasible_raises(self):
        p = PrimalQP(P=np.eye(1), q=np.zeros(1),
                     C=np.array([[1.0], [-1.0]]), d=np.array([-1.0, 0.0]))
        with pytest.raises(InfeasibleProblemError):
            enumerate_solve(p)

    def test_enumeration_bound(self):
        m = 21
        p = PrimalQP(P=np.eye(2), q=np.zeros(2),
                     C=np.ones((m, 2)), d=np.arange(1.0, m + 1.0))
        with pytest.raises(ValueError):
            enumerate_solve(p)

    def test_degenerate_duplicate_rows(self):
        # the duplicated active row leaves the optimum unchanged
        p = PrimalQP(P=np.eye(2), q=np.array([-2.0, 0.0]),
                     C=np.array([[1.0, 0.0], [1.0, 0.0]]),
                     d=np.array([1.0, 1.0]))
        res = enumerate_solve(p)
        assert_allclose(res.x, [1.0, 0.0], rtol=0, atol=1e-10)


class TestRandomQP:

    def test_reproducible(self):
        a = random_qp(42, n=4, m_eq=1, m_in=3)
        b = random_qp(42, n=4, m_eq=1, m_in=3)
        assert np.array_equal(a.P, b.P) and np.array_equal(a.q, b.q)
        assert np.array_equal(a.C, b.C) and np.array_equal(a.d, b.d)

    def test_strictly_convex_and_feasible(self):
        for seed in range(10):
            p = random_qp(seed, n=5, m_eq=2, m_in=4)
            assert np.linalg.eigvalsh(p.P).min() >= 1.0 - 1e-9
            res = enumerate_solve(p)  # must not raise
            assert np.max(p.C @ res.x - p.d) <= 1e-7

    def test_degenerate_rows_are_exact_copies(self):
        p = random_qp(7, n=4, m_eq=0, m_in=6, make_degenerate=True)
        assert np.array_equal(p.C[1], p.C[0])
        assert p.d[1] == p.d[0]
        assert np.array_equal(p.C[4], p.C[3])

    def test_degenerate_needs_two_rows(self):
        with pytest.raises(ValueError):
            random_qp(0, n=3, m_eq=0, m_in=1, make_degenerate=True)
