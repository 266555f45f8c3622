import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, optimize, special

from mixcop import simulation as sim
from mixcop.coefficients import (closed_form_threshold_pearson, closed_form_threshold_spearman,
                                 compare_matrix, kendall, pearson, spearman)
from mixcop.marginals import MarginalKind
from oracles import kendall_tau_b_bruteforce

small_int_lists = st.lists(st.integers(0, 4), min_size=2, max_size=30)


class TestPearson:
    def test_examples(self):
        x = np.array([1.0, 2.0, 5.0, 3.0])
        assert pearson(x, x) == pytest.approx(1.0)
        assert pearson(x, -x) == pytest.approx(-1.0)
        # hand computation: dx = (-1, 0, 1), dy = (-4/3, -1/3, 5/3)
        ref = 3.0 / math.sqrt(2 * 14 / 3)
        assert pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(ref, abs=1e-15)
        assert pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(0.98198, abs=1e-5)

    def test_undefined(self):
        assert math.isnan(pearson([1, 1, 1], [1, 2, 3]))
        assert math.isnan(pearson([1], [2]))
        assert math.isnan(pearson([1, np.nan, 3], [2, 2, np.nan]))


class TestSpearman:
    def test_examples(self):
        x = np.linspace(-2, 3, 40)
        assert spearman(x, np.exp(x)) == pytest.approx(1.0)
        # ranks (2,1,4,3): 1 - 6*4/(4*15)
        assert spearman([1, 2, 3, 4], [2, 1, 4, 3]) == pytest.approx(0.6, abs=1e-15)
        b1 = [0, 0, 1, 1] * 5
        b2 = [0, 1, 0, 1] * 5
        assert spearman(b1, b2) == pytest.approx(0.0, abs=1e-15)

    def test_mid_ranks(self):
        # ties share the average rank
        x = [1, 2, 2, 3]
        y = [1, 2, 3, 4]
        assert spearman(x, y) == pytest.approx(pearson([1, 2.5, 2.5, 4], y))


class TestKendall:
    def test_examples(self):
        x = [3.0, 1.0, 2.0, 7.0]
        assert kendall(x, x) == pytest.approx(1.0)
        assert kendall([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)
        assert kendall([1, 1, 2, 2], [1, 2, 1, 2]) == 0.0

    @settings(max_examples=200)
    @given(small_int_lists, st.randoms())
    def test_matches_bruteforce(self, x, rnd):
        y = [rnd.randint(0, 3) for _ in x]
        ref = kendall_tau_b_bruteforce(np.array(x), np.array(y))
        got = kendall(x, y)
        if math.isnan(ref):
            assert math.isnan(got)
        else:
            assert got == pytest.approx(ref, abs=1e-12)


@settings(max_examples=100)
@given(st.lists(st.floats(-100, 100), min_size=3, max_size=40, unique=True), st.randoms())
def test_rank_coefficients_transform_invariant(x, rnd):
    x = np.array(x)
    y = np.arange(len(x), dtype=float)
    rnd.shuffle(y)
    g = np.arctan(x) * 3 + x**3
    assert spearman(g, y) == spearman(x, y)
    assert kendall(g, y) == kendall(x, y)


@given(small_int_lists, st.randoms())
def test_all_in_range(x, rnd):
    y = [rnd.randint(0, 5) for _ in x]
    for f in (pearson, spearman, kendall):
        v = f(x, y)
        assert math.isnan(v) or -1.0 <= v <= 1.0


class TestClosedForms:
    def test_pearson_t0(self):
        assert closed_form_threshold_pearson(0.0) == pytest.approx(math.sqrt(2 / math.pi))

    @pytest.mark.parametrize("t", [0.0, 2.0, 4.0, 6.0])
    def test_pearson_matches_quadrature(self, t):
        # Cov(X, 1{X>=t}) = E[X 1{X>=t}] for X ~ N(0, 3)
        sd = math.sqrt(3.0)
        cov, _ = integrate.quad(lambda x: x * math.exp(-x * x / 6) / (sd * math.sqrt(2 * math.pi)),
                                t, np.inf, epsabs=1e-14)
        q = special.ndtr(-t / sd)
        ref = cov / (sd * math.sqrt(q * (1 - q)))
        assert closed_form_threshold_pearson(t) == pytest.approx(ref, rel=1e-9)

    @pytest.mark.parametrize("t", [0.0, 2.0, 4.0, 6.0])
    def test_spearman_matches_quadrature(self, t):
        # Spearman = Pearson(F(X), G(Y)); grade of Y is (1 - p)/2 or 1 - p/2
        sd = math.sqrt(3.0)
        p1 = special.ndtr(-t / sd)
        g0, g1 = (1 - p1) / 2, 1 - p1 / 2
        mean_g = (1 - p1) * g0 + p1 * g1
        var_g = (1 - p1) * g0**2 + p1 * g1**2 - mean_g**2
        # E[U G] with U = F(X) uniform, Y = 1 iff U >= Phi(t / sd)
        c = special.ndtr(t / sd)
        e_ug = g0 * c**2 / 2 + g1 * (1 - c**2) / 2
        ref = (e_ug - 0.5 * mean_g) / (math.sqrt(1 / 12) * math.sqrt(var_g))
        assert closed_form_threshold_spearman(t) == pytest.approx(ref, rel=1e-9)

    def test_pearson_quoted_thresholds(self):
        # root-find t for the quoted 0.62 / 0.27 / 0.06
        roots = [optimize.brentq(lambda t: closed_form_threshold_pearson(t) - v, 0, 9)
                 for v in (0.62, 0.27, 0.06)]
        assert roots == pytest.approx([2.0, 4.0, 6.0], abs=0.02)

    @pytest.mark.parametrize("t", [0.0, 1.0, 2.0, 3.0])
    def test_spearman_is_displayed_polynomial_ratio(self, t):
        q = special.ndtr(t / math.sqrt(3))
        shown = (q**3 - 2 * q**2 + q) / 2 / (math.sqrt(1 / 12) * math.sqrt(-q**4 + 3 * q**3
                                                                          - 3 * q**2 + q))
        assert closed_form_threshold_spearman(t) == pytest.approx(shown, rel=1e-10)

    def test_spearman_t0(self):
        assert closed_form_threshold_spearman(0.0) == pytest.approx(
            (0.125 - 0.5 + 0.5) / 2 / (math.sqrt(1 / 12) * 0.25))

    def test_limits(self):
        assert closed_form_threshold_pearson(30.0) < 1e-30
        assert closed_form_threshold_spearman(20.0) < 1e-12


class TestCompare:
    def test_gaussian_spearman_identity(self):
        sigma = np.array([[1.0, 0.6], [0.6, 1.0]])
        data = sim.sample_dataset(sigma, [sim.MarginalSpec("normal", (0, 1))] * 2, 20_000, seed=1)
        (row,) = compare_matrix(data)
        assert row.type_pair == "CC"
        assert row.spearman == pytest.approx(6 / math.pi * math.asin(row.pearson / 2), abs=0.02)

    def test_binary_range_compression(self):
        sigma = np.array([[1.0, 0.9], [0.9, 1.0]])
        data = sim.sample_dataset(sigma, [sim.MarginalSpec("bernoulli", (0.1,))] * 2, 5000, seed=2)
        (row,) = compare_matrix(data)
        assert row.type_pair == "DD"
        assert abs(row.spearman) < abs(row.copula)

    def test_identical_columns(self, rng):
        x = rng.normal(size=300)
        (row,) = compare_matrix(np.column_stack([x, x]), [("a", "continuous"), ("b", "continuous")])
        assert row.pearson == pytest.approx(1.0)
        assert row.spearman == pytest.approx(1.0)
        assert row.kendall == pytest.approx(1.0)
        assert row.copula >= 0.999

    def test_type_tags_and_failures(self, rng):
        v = np.column_stack([rng.normal(size=30), rng.integers(0, 3, 30), np.zeros(30)])
        rows = compare_matrix(v, [("a", "continuous"), ("b", "discrete"), ("c", "discrete")])
        assert [r.type_pair for r in rows] == ["CD", "CD", "DD"]
        assert math.isnan(rows[1].copula) and math.isnan(rows[1].pearson)
        assert math.isfinite(rows[0].kendall)
