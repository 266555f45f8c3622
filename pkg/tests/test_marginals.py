import numpy as np
import pytest
from hypothesis import given, strategies as st

from mixcop.marginals import (ColumnSchema, MarginalKind, check_schema, fit_empirical, pseudo_u,
                              quantile_bounds)

D = MarginalKind.DISCRETE


def test_fit_counts():
    m = fit_empirical([1, 2, 2, 4], D)
    assert m.support.tolist() == [1, 2, 4]
    assert m.cdf.tolist() == [0.25, 0.75, 1.0]
    assert m.pred.tolist() == [0.0, 0.25, 0.75]


def test_fit_degenerate_column():
    m = fit_empirical([5], D)
    assert m.cdf_at(5) == 1.0
    assert m.pred_at(5) == 0.0


def test_fit_bernoulli():
    m = fit_empirical([0, 0, 0, 1], D)
    assert m.cdf_at(0) == 0.75
    assert m.cdf_at(1) == 1.0
    assert m.pred_at(1) == 0.75


@pytest.mark.parametrize("bad", [[], [1.0, np.nan], [0.0, np.inf]])
def test_fit_errors(bad):
    with pytest.raises(ValueError):
        fit_empirical(bad)


def test_pseudo_u_examples():
    m = fit_empirical([0, 0, 0, 1], D)
    assert pseudo_u(m, 1) == pytest.approx((0.8, 0.6), abs=1e-15)
    hi0, lo0 = pseudo_u(m, 0)
    assert hi0 == pytest.approx(0.6, abs=1e-15) and lo0 == 0.0
    hi, lo = quantile_bounds(m, 0)
    assert lo == -np.inf and np.isfinite(hi)


def test_pseudo_u_unseen_value():
    m = fit_empirical([0, 0, 1], D)
    with pytest.raises(ValueError, match="not observed"):
        pseudo_u(m, 2)


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60))
def test_top_point_below_one(values):
    m = fit_empirical(values)
    hi, _ = pseudo_u(m, m.support[-1])
    assert hi == pytest.approx(m.n / (m.n + 1), rel=1e-15) and hi < 1.0


def test_tie_free_permutation_of_grid(rng):
    x = rng.normal(size=50)
    m = fit_empirical(x)
    hi, _ = pseudo_u(m, x)
    s = 50 / 51
    assert np.allclose(np.sort(hi), s * np.arange(1, 51) / 50, atol=1e-15)


@given(st.lists(st.integers(-5, 5), min_size=2, max_size=60))
def test_monotone_and_predecessor(values):
    m = fit_empirical(values, D)
    hi, lo = pseudo_u(m, m.support)
    assert np.all(np.diff(hi) > 0)
    assert np.all(np.diff(m.cdf) > 0) and m.cdf[-1] == 1.0
    assert lo[0] == 0.0
    assert np.array_equal(lo[1:], hi[:-1])


@given(st.lists(st.integers(0, 9), min_size=1, max_size=40), st.randoms())
def test_refit_permuted_identical(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert fit_empirical(values, D) == fit_empirical(shuffled, D)


def test_schema_unique_names():
    with pytest.raises(ValueError, match="duplicate"):
        check_schema([("a", "continuous"), ("a", "discrete")])
    cols = check_schema([("a", "continuous"), ColumnSchema("b", "DISCRETE")])
    assert [c.kind for c in cols] == [MarginalKind.CONTINUOUS, D]


def test_unknown_kind():
    with pytest.raises(ValueError, match="unknown marginal kind"):
        ColumnSchema("a", "ordinal")
