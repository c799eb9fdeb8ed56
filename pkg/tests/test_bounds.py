import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fitlevel import bounds as B
from fitlevel import kernels as K
from fitlevel import problems as P
from fitlevel import simulator as S
from fitlevel.acceptance import chain_marginals, point_mutation_level_chain
from fitlevel.levels import BoundMatrix, Kind, NotMonotoneError


def small_lower():
    return BoundMatrix.from_rows([[0.5, 0.1], [0.8, 0.3], [1, 0.6]], Kind.LOWER)


class TestMatrixTools:
    def test_build_w_and_alpha(self):
        W, alpha = B.build_w_and_alpha(small_lower())
        assert np.allclose(alpha, [0.5, 0.1])
        assert np.allclose(W, [[0.3, 0.2], [0.2, 0.3]])

    def test_w_rejects_upper(self):
        with pytest.raises(ValueError):
            B.build_w_and_alpha(BoundMatrix.ones(2, Kind.UPPER))

    def test_norm_trivial(self):
        assert B.matrix_norm_inf(np.zeros((3, 3))) == 0.0
        assert B.matrix_norm_inf(np.eye(3), "column") == 1.0
        assert B.matrix_norm_2(np.zeros((3, 3))) == 0.0
        assert B.matrix_norm_2(np.eye(3)) == pytest.approx(1.0, abs=1e-12)

    def test_norm_conventions_differ(self):
        W = np.array([[0.0, 0.9], [0.0, 0.0]])
        W2 = np.array([[0.5, 0.4], [0.0, 0.0]])
        assert B.matrix_norm_inf(W) == B.matrix_norm_inf(W, "column") == 0.9
        assert B.matrix_norm_inf(W2) == 0.9
        assert B.matrix_norm_inf(W2, "column") == 0.5

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 6), st.integers(0, 2**31 - 1))
    def test_norm_2_matches_svd(self, n, seed):
        W = np.random.default_rng(seed).random((n, n))
        assert B.matrix_norm_2(W) == pytest.approx(np.linalg.norm(W, 2), rel=1e-9)

    def test_certificate_order(self):
        assert B.certify_convergence(np.diag([0.5, 0.2]))[0] == "inf-row"
        assert B.certify_convergence(np.array([[0.5, 0.6], [0.0, 0.0]]))[0] == "inf-column"
        assert B.certify_convergence(np.eye(2)) is None

    def test_balas_inf_norm(self):
        for n in (8, 12):
            q = Fraction(1, n + 1)
            for top in ("safe", "pessimistic"):
                W, _ = B.build_w_and_alpha(K.lower_bounds_for_kernel("balas-point", n=n, q=q, top=top))
                assert B.matrix_norm_inf(W) == pytest.approx(1 - 2 * (1 - float(q)) / n)


class TestToeplitz:
    def test_two_by_two(self):
        assert np.allclose(B.toeplitz_tridiagonal_spectrum(2, 0, 1, 1), [1, -1])

    def test_three_by_three(self):
        ev = B.toeplitz_tridiagonal_spectrum(3, 2, 1, 1)
        assert np.allclose(ev, [2 + math.sqrt(2), 2, 2 - math.sqrt(2)])

    @pytest.mark.parametrize("n,d,s,t", [(5, 0.3, 0.2, 0.8), (7, 1.0, 0.5, 0.5), (1, 0.4, 1.0, 2.0)])
    def test_matches_dense(self, n, d, s, t):
        M = d * np.eye(n) + s * np.eye(n, k=-1) + t * np.eye(n, k=1)
        dense = np.sort(np.linalg.eigvals(M).real)[::-1]
        assert np.allclose(B.toeplitz_tridiagonal_spectrum(n, d, s, t), dense)

    def test_rejects_complex(self):
        with pytest.raises(ValueError):
            B.toeplitz_tridiagonal_spectrum(3, 0, 1, -1)
        with pytest.raises(ValueError):
            B.toeplitz_tridiagonal_spectrum(0, 0, 1, 1)


class TestLinearLowerBound:
    def test_t0_is_z0(self):
        z0 = [0.4, 0.2]
        tr = B.lower_bound_linear(small_lower(), z0, 0)
        assert tr.t_max == 0 and np.array_equal(tr.at(0), z0)

    def test_exact_on_point_mutation(self):
        n, q = 3, Fraction(1, 4)
        tr = B.lower_bound_linear(K.point_mutation_gamma(n, q), np.zeros(n), 50)
        T = point_mutation_level_chain(n, q)
        ref = chain_marginals(T, np.eye(n + 1)[0], 50)
        assert np.max(np.abs(tr.values - ref)) < 1e-12
        assert tr.meta["closed_form_gap"] < 1e-12

    def test_rls_limit_is_ones(self):
        A = K.lower_bounds_for_kernel("rls-unimodal", n=5, ell=4)
        tr = B.lower_bound_linear(A, np.zeros(3), 2000)
        assert np.allclose(tr.meta["limit"], 1.0)
        assert np.allclose(tr.at(2000), 1.0, atol=1e-9)

    def test_rejects_non_monotone(self):
        A = BoundMatrix.from_rows([[0.5, 0], [0.4, 0], [1, 1]], Kind.LOWER)
        with pytest.raises(NotMonotoneError):
            B.lower_bound_linear(A, [0, 0], 3)

    def test_rejects_upper(self):
        with pytest.raises(ValueError):
            B.lower_bound_linear(BoundMatrix.ones(2, Kind.UPPER), [0, 0], 3)

    def test_wrong_length(self):
        with pytest.raises(ValueError):
            B.lower_bound_linear(small_lower(), [0, 0, 0], 3)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 5), st.integers(0, 2**31 - 1))
    def test_chain_agrees_with_linear(self, m, seed):
        rng = np.random.default_rng(seed)
        E = np.sort(rng.random((m + 1, m)), axis=0)
        E = -np.sort(-E, axis=1)
        A = BoundMatrix(E, Kind.LOWER)
        p0 = rng.dirichlet(np.ones(m + 1))
        z0 = np.cumsum(p0[::-1])[::-1][1:]
        lin = B.lower_bound_linear(A, z0, 20)
        ch = B.lower_bound_chain(A, p0, 20, all_levels_nonempty=True)
        assert np.max(np.abs(lin.values - ch.values)) < 1e-10

    def test_rows_iteration(self):
        rows = list(B.lower_bound_linear(small_lower(), [0, 0], 1).rows())
        assert rows[0] == (0, 1, 0.0, "lower_linear")
        assert len(rows) == 4


class TestChain:
    def test_sat_chain_powering(self):
        m = 5
        A = K.lower_bounds_for_kernel("sat-walk", m=m)
        p0 = np.eye(m + 1)[0]
        ch = B.lower_bound_chain(A, p0, 40, all_levels_nonempty=True)
        T = B.associated_chain(A).T
        assert np.allclose(ch.values, chain_marginals(T, p0, 40))

    def test_requires_nonempty_levels(self):
        with pytest.raises(ValueError):
            B.lower_bound_chain(small_lower(), [1, 0, 0], 3, all_levels_nonempty=False)

    def test_rejects_bad_p0(self):
        with pytest.raises(ValueError):
            B.lower_bound_chain(small_lower(), [0.5, 0.2, 0.2], 3, all_levels_nonempty=True)

    def test_rows_stochastic(self):
        ch = B.associated_chain(K.point_mutation_gamma(4, 0.3))
        assert np.allclose(ch.T.sum(axis=1), 1.0)
        assert np.all(ch.T >= 0)

    def test_clamps_round_off(self):
        A = BoundMatrix(np.array([[0.5, 0.5 + 1e-16], [1, 0.6], [1, 1]]), Kind.LOWER)
        ch = B.associated_chain(A)
        assert ch.clamped == ((0, 1),)
        assert ch.T[0, 1] == 0.0

    def test_rejects_increasing_row(self):
        A = BoundMatrix(np.array([[0.3, 0.5], [1, 0.6], [1, 1]]), Kind.LOWER)
        with pytest.raises(ValueError, match="row 0"):
            B.associated_chain(A)

    def test_sample_next_frequencies(self):
        ch = B.associated_chain(K.lower_bounds_for_kernel("sat-walk", m=3))
        rng = np.random.default_rng(1)
        nxt = ch.sample_next(np.full(100_000, 1), rng)
        freq = np.bincount(nxt, minlength=4) / nxt.size
        assert np.allclose(freq, ch.T[1], atol=0.01)


class TestUpperBounds:
    def test_jensen_s1_equals_linear(self):
        G = K.point_mutation_gamma(4, 0.25)
        up = B.upper_bound_jensen(G, np.zeros(4), 1, 30)
        lo = B.lower_bound_linear(G, np.zeros(4), 30)
        assert np.allclose(up.values, lo.values)

    def test_ones_matrix(self):
        tr = B.upper_bound_jensen(BoundMatrix.ones(3, Kind.UPPER), np.zeros(3), 2, 5)
        assert np.allclose(tr.values[1:], 1.0)

    def test_jensen_rejects_lower(self):
        with pytest.raises(ValueError):
            B.upper_bound_jensen(small_lower(), [0, 0], 2, 3)

    def test_infinite_s1_equals_jensen(self):
        G = K.point_mutation_gamma(5, Fraction(1, 6))
        a = B.infinite_population_recursion(G, np.zeros(5), 1, 40)
        b = B.upper_bound_jensen(G, np.zeros(5), 1, 40)
        assert np.allclose(a.values, b.values)

    def test_infinite_fixed_point(self):
        G = K.point_mutation_gamma(5, Fraction(1, 6))
        tr = B.infinite_population_recursion(G, np.zeros(5), 3, 3000)
        u = tr.at(3000)
        step = B._jensen_step(G.entries, u, 3)
        assert np.max(np.abs(step - u)) < 1e-12

    def test_infinite_requires_exact(self):
        with pytest.raises(ValueError):
            B.infinite_population_recursion(BoundMatrix.ones(2, Kind.UPPER), [0, 0], 2, 3)

    def test_larger_tournament_is_higher(self):
        G = K.point_mutation_gamma(5, Fraction(1, 6))
        a = B.infinite_population_recursion(G, np.zeros(5), 2, 50).values
        b = B.infinite_population_recursion(G, np.zeros(5), 4, 50).values
        assert np.all(b >= a - 1e-12)


class TestOneCommaLambda:
    def test_lambda1_is_linear(self):
        G = K.point_mutation_gamma(4, Fraction(1, 5))
        a = B.one_comma_lambda_recursion(G, np.zeros(4), 1, 40)
        b = B.lower_bound_linear(G, np.zeros(4), 40)
        assert np.allclose(a.values, b.values)

    def test_larger_lambda_dominates(self):
        G = K.point_mutation_gamma(6, Fraction(1, 7))
        a = B.one_comma_lambda_recursion(G, np.zeros(6), 2, 60).values
        b = B.one_comma_lambda_recursion(G, np.zeros(6), 10, 60).values
        assert np.all(b >= a - 1e-12)

    def test_rejects(self):
        G = K.point_mutation_gamma(3, 0.2)
        with pytest.raises(ValueError):
            B.one_comma_lambda_recursion(G, np.zeros(3), 0, 4)
        with pytest.raises(ValueError):
            B.one_comma_lambda_recursion(BoundMatrix.ones(3, Kind.LOWER), np.zeros(3), 2, 4)

    def test_matches_simulation(self):
        n, lam, q, t = 6, 5, Fraction(1, 7), 30
        G = K.point_mutation_gamma(n, q)
        ref = B.one_comma_lambda_recursion(G, np.zeros(n), lam, t).values
        cfg = S.AlgorithmConfig(
            "one_comma_lambda", P.onemax(n), K.point_mutation(q), lam=lam, t_max=t, seed=7
        )
        stats = S.simulate(cfg, 3000)
        z = S.bonferroni_z(n * t, 0.99)
        for j in range(1, n + 1):
            est = stats.indicator(j)[:, 1:].mean(axis=0)
            r = ref[1:, j - 1]
            se = np.sqrt(r * (1 - r) / stats.runs)
            assert np.all(np.abs(est - r) <= z * se + 1.0 / stats.runs)


class TestUnimodalClosedForm:
    def test_closed_form_below_trajectory(self):
        n, ell = 10, 5
        A = K.lower_bounds_for_kernel("rls-unimodal", n=n, ell=ell)
        tr = B.lower_bound_linear(A, np.zeros(ell - 1), 600)
        for t in range(0, 601, 20):
            assert B.closed_form_lower_bound_unimodal(n, ell, t) <= tr.at(t)[-1] + 1e-12

    @pytest.mark.parametrize("n,ell", [(10, 5), (20, 11), (50, 20)])
    def test_closed_form_is_upper_bound_on_norm(self, n, ell):
        W, _ = B.build_w_and_alpha(K.lower_bounds_for_kernel("rls-unimodal", n=n, ell=ell))
        assert B.matrix_norm_2(W) <= B.rls_unimodal_norm_2(n, ell) + 1e-12

    @pytest.mark.parametrize("n,ell", [(10, 5), (20, 11)])
    def test_closed_form_equals_toeplitz_norm(self, n, ell):
        m = ell - 1
        d = ((n - 1) ** 2 + 1) / n ** 2
        off = (n - 1) / n ** 2
        M = d * np.eye(m) + off * (np.eye(m, k=1) + np.eye(m, k=-1))
        top = B.toeplitz_tridiagonal_spectrum(m, d, off, off)[0]
        assert math.sqrt(top) == pytest.approx(B.rls_unimodal_norm_2(n, ell), abs=1e-12)
        assert B.matrix_norm_2(np.linalg.cholesky(M).T) == pytest.approx(math.sqrt(top), abs=1e-10)

    def test_tail_bounds(self):
        assert B.markov_tail_bound(10, 5, 0) == math.inf
        assert B.markov_tail_bound(10, 5, 400) == pytest.approx(0.1)
        assert B.unimodal_tail_bound(10, 5, 0) == pytest.approx(2.0)
        assert B.unimodal_tail_bound(10, 5, 5000) < B.unimodal_tail_bound(10, 5, 1000)


class TestBalas:
    def test_n4_exact(self):
        assert B.balas_stationary_exact(4) == [Fraction(7, 8), Fraction(3, 8)]
        assert np.allclose(B.balas_stationary_vector(4), [0.875, 0.375])

    def test_n8_values(self):
        v = B.balas_stationary_exact(8)
        assert v[-1] == Fraction(70, 256)
        assert v[0] == Fraction(8 + 28 + 56, 128) + Fraction(70, 256)

    @pytest.mark.parametrize("n", [4, 6, 8, 10, 20])
    def test_stationary_solves_system(self, n):
        M, b = B.balas_linear_system(n)
        v = B.balas_stationary_vector(n)
        assert np.allclose(M @ v, b, atol=1e-12)

    def test_printed_last_row_not_satisfied(self):
        M, b = B.balas_linear_system(8, printed_last_row=True)
        assert np.max(np.abs(M @ B.balas_stationary_vector(8) - b)) > 0.1

    def test_trajectory_uses_dominance(self):
        n = 8
        q = Fraction(1, n + 1)
        pess = K.lower_bounds_for_kernel("balas-point", n=n, q=q, top="pessimistic")
        safe = K.lower_bounds_for_kernel("balas-point", n=n, q=q)
        with pytest.raises(NotMonotoneError):
            B.lower_bound_linear(pess, np.zeros(4), 5)
        tr = B.lower_bound_linear(pess, np.zeros(4), 400, dominating=safe)
        hi = B.lower_bound_linear(safe, np.zeros(4), 400)
        assert np.all(tr.values <= hi.values + 1e-12)
        assert np.allclose(tr.meta["limit"], B.balas_stationary_vector(n))

    def test_dominating_rejections(self):
        n, q = 8, Fraction(1, 9)
        pess = K.lower_bounds_for_kernel("balas-point", n=n, q=q, top="pessimistic")
        with pytest.raises(NotMonotoneError):
            B.lower_bound_linear(pess, np.zeros(4), 3, dominating=pess)
        low = BoundMatrix.zeros(4)
        with pytest.raises(ValueError, match="smaller"):
            B.lower_bound_linear(pess, np.zeros(4), 3, dominating=low)
        with pytest.raises(ValueError):
            B.lower_bound_linear(pess, np.zeros(4), 3, dominating=BoundMatrix.ones(3))
        with pytest.raises(ValueError):
            B.lower_bound_linear(pess, np.zeros(4), 3, dominating=BoundMatrix.ones(4, Kind.UPPER))

    def test_rejects_odd(self):
        with pytest.raises(ValueError):
            B.balas_linear_system(7)
        with pytest.raises(ValueError):
            B.balas_stationary_exact(2)
