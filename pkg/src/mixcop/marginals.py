"""Column typing, empirical CDFs and pseudo-observations."""
import enum
from dataclasses import dataclass

import numpy as np
from scipy import special


class MarginalKind(enum.Enum):
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(
                f"unknown marginal kind {value!r}; expected 'continuous' or 'discrete'"
            ) from None


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: MarginalKind

    def __post_init__(self):
        object.__setattr__(self, "kind", MarginalKind.parse(self.kind))


def check_schema(schema):
    """Return ``schema`` as a list of ColumnSchema; names must be unique."""
    cols = [c if isinstance(c, ColumnSchema) else ColumnSchema(*c) for c in schema]
    seen = set()
    for c in cols:
        if c.name in seen:
            raise ValueError(f"duplicate column name {c.name!r} in schema")
        seen.add(c.name)
    return cols


@dataclass(frozen=True, eq=False)
class EmpiricalMarginal:
    """Empirical CDF of one column, stored on its sorted distinct support.

    ``cdf[i]`` is F(support[i]); the predecessor value F(x-) is the CDF at the
    previous support point and 0 at the least one.
    """

    support: np.ndarray
    cdf: np.ndarray
    n: int
    kind: MarginalKind = MarginalKind.CONTINUOUS

    @property
    def scale(self):
        """Rescale factor n/(n+1) keeping every pseudo-observation below 1."""
        return self.n / (self.n + 1.0)

    @property
    def pred(self):
        return np.concatenate([[0.0], self.cdf[:-1]])

    def codes(self, x):
        """Index of each value of ``x`` in the support; raises if unseen."""
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.support, x)
        clipped = np.minimum(idx, self.support.size - 1)
        ok = (idx < self.support.size) & (self.support[clipped] == x)
        if not np.all(ok):
            bad = np.atleast_1d(x)[~np.atleast_1d(ok)][0]
            raise ValueError(f"value {bad!r} was not observed when fitting the marginal")
        return idx

    def cdf_at(self, x):
        return self.cdf[self.codes(x)]

    def pred_at(self, x):
        return self.pred[self.codes(x)]

    def __eq__(self, other):
        if not isinstance(other, EmpiricalMarginal):
            return NotImplemented
        return (
            self.n == other.n
            and self.kind == other.kind
            and np.array_equal(self.support, other.support)
            and np.array_equal(self.cdf, other.cdf)
        )


def fit_empirical(column, kind=MarginalKind.CONTINUOUS):
    """Fit the empirical CDF F(x) = #{i : x_i <= x} / n of a complete column."""
    x = np.asarray(column, dtype=float).ravel()
    if x.size == 0:
        raise ValueError("cannot fit an empirical marginal to an empty column")
    if not np.all(np.isfinite(x)):
        raise ValueError("column contains non-finite values; drop missing entries first")
    support, counts = np.unique(x, return_counts=True)
    cdf = np.cumsum(counts) / x.size
    cdf[-1] = 1.0
    return EmpiricalMarginal(support, cdf, int(x.size), MarginalKind.parse(kind))


def pseudo_u(marginal, x):
    """Rescaled pseudo-observations ``(u_hi, u_lo) = s*F(x), s*F(x-)``.

    ``s = n/(n+1)``. ``u_lo`` is exactly 0 at the least support point.
    Scalars in, floats out; arrays in, arrays out.
    """
    idx = marginal.codes(x)
    s = marginal.scale
    u_hi = s * marginal.cdf[idx]
    u_lo = s * marginal.pred[idx]
    if np.ndim(x) == 0:
        return float(u_hi), float(u_lo)
    return u_hi, u_lo


def quantile_bounds(marginal, x):
    """Normal quantiles of :func:`pseudo_u`; the lower bound may be -inf."""
    u_hi, u_lo = pseudo_u(marginal, np.asarray(x, dtype=float))
    return special.ndtri(u_hi), special.ndtri(u_lo)
