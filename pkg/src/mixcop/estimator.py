"""Semiparametric pairwise maximum-likelihood estimation of the copula
correlation matrix for mixed continuous/discrete data.

Each pair of columns contributes a separate one-dimensional problem: the
composite log-likelihood is a sum over pairs with one parameter each, so the
joint maximizer is the collection of per-pair maximizers.
"""
import enum
import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy import optimize, special

from . import _accel, _jit
from .gauss import RHO_MAX, _bvn_cdf_numpy, check_rho
from .marginals import MarginalKind, check_schema, fit_empirical

LOG_FLOOR = _jit.LOG_FLOOR
GRID_POINTS = 21
XTOL = 1e-7


class PairCase(enum.Enum):
    CC = "CC"
    CD = "CD"
    DD = "DD"


class DegeneratePairError(ValueError):
    """The pair carries no information about its correlation."""


@dataclass(frozen=True, eq=False)
class PairObjective:
    """Transformed observations of one variable pair.

    ``arrays`` holds, by case:

    * CC: ``(z1, z2)``, normal scores of the rescaled pseudo-observations;
    * CD: ``(z, b_hi, b_lo)``, continuous score and the discrete quantile
      interval (``b_lo`` may be -inf);
    * DD: ``(a_hi, a_lo, b_hi, b_lo, counts)`` over distinct observed cells.

    For CD pairs the continuous column is always stored first; ``swapped``
    records that the caller passed it second.
    """

    case: PairCase
    arrays: tuple
    n_eff: int
    swapped: bool = False


class PairEstimate(NamedTuple):
    rho: float
    loglik: float


def _column_scores(x, kind):
    m = fit_empirical(x, kind)
    s = m.scale
    z_hi = special.ndtri(s * m.cdf)
    z_lo = special.ndtri(s * m.pred)
    codes = np.searchsorted(m.support, x)
    return codes, z_hi, z_lo


def pair_objective(x, y, kind_x, kind_y):
    """Build the objective for columns ``x`` and ``y`` (NaN = missing).

    Rows missing in either column are dropped. Raises DegeneratePairError
    when fewer than 3 complete rows remain or a column is constant.
    """
    kind_x = MarginalKind.parse(kind_x)
    kind_y = MarginalKind.parse(kind_y)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("pair columns must be 1-d arrays of equal length")
    keep = ~(np.isnan(x) | np.isnan(y))
    x, y = x[keep], y[keep]
    n = x.size
    if n < 3:
        raise DegeneratePairError(f"only {n} complete rows")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("columns contain infinite values")
    if x.min() == x.max() or y.min() == y.max():
        raise DegeneratePairError("constant column after pairwise-complete filtering")

    swapped = kind_x is MarginalKind.DISCRETE and kind_y is MarginalKind.CONTINUOUS
    if swapped:
        x, y = y, x
        kind_x, kind_y = kind_y, kind_x
    cx, hx, lx = _column_scores(x, kind_x)
    cy, hy, ly = _column_scores(y, kind_y)

    if kind_x is MarginalKind.CONTINUOUS and kind_y is MarginalKind.CONTINUOUS:
        return PairObjective(PairCase.CC, (hx[cx], hy[cy]), n)
    if kind_y is MarginalKind.DISCRETE and kind_x is MarginalKind.CONTINUOUS:
        return PairObjective(PairCase.CD, (hx[cx], hy[cy], ly[cy]), n, swapped)

    ky = hy.size
    cells, counts = np.unique(cx * ky + cy, return_counts=True)
    ix, iy = np.divmod(cells, ky)
    arrays = (hx[ix], lx[ix], hy[iy], ly[iy], counts.astype(float))
    return PairObjective(PairCase.DD, tuple(np.ascontiguousarray(a) for a in arrays), n)


# --- numpy twins of the per-case log-likelihood kernels ---------------------

def _loglik_cc_numpy(z1, z2, r):
    one_m = 1.0 - r * r
    terms = -0.5 * math.log(one_m) - (r * r * (z1 * z1 + z2 * z2) - 2.0 * r * z1 * z2) / (
        2.0 * one_m
    )
    return float(np.maximum(terms, LOG_FLOOR).sum())


def _safe_log(p):
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 1e-300, np.log(np.where(p > 1e-300, p, 1.0)), LOG_FLOOR)


def _loglik_cd_numpy(z, b_hi, b_lo, r):
    s = math.sqrt(1.0 - r * r)
    hi = (b_hi - r * z) / s
    lo = (b_lo - r * z) / s
    p = np.where(lo > 0.0, special.ndtr(-lo) - special.ndtr(-hi),
                 special.ndtr(hi) - special.ndtr(lo))
    return float(_safe_log(p).sum())


def _loglik_dd_numpy(a_hi, a_lo, b_hi, b_lo, counts, r):
    # reflect upper-tail axes, as in _jit.rect_prob
    fa = a_lo > 0.0
    fb = b_lo > 0.0
    a_hi, a_lo = np.where(fa, -a_lo, a_hi), np.where(fa, -a_hi, a_lo)
    b_hi, b_lo = np.where(fb, -b_lo, b_hi), np.where(fb, -b_hi, b_lo)
    rr = np.where(fa != fb, -r, r)
    hh = _bvn_cdf_numpy(a_hi, b_hi, rr)
    ll = _bvn_cdf_numpy(a_lo, b_lo, rr)
    lh = _bvn_cdf_numpy(a_lo, b_hi, rr)
    hl = _bvn_cdf_numpy(a_hi, b_lo, rr)
    p = (hh + ll) - (lh + hl)
    return float((counts * _safe_log(p)).sum())


_KERNELS = {
    "numba": {PairCase.CC: _jit.loglik_cc, PairCase.CD: _jit.loglik_cd,
              PairCase.DD: _jit.loglik_dd},
    "numpy": {PairCase.CC: _loglik_cc_numpy, PairCase.CD: _loglik_cd_numpy,
              PairCase.DD: _loglik_dd_numpy},
}


def pair_loglik(obj, rho):
    """Pairwise log-likelihood of ``obj`` at ``rho``, rho-free factors dropped.

    Per-observation terms are floored at log(1e-300).
    """
    r = check_rho(rho)
    kernel = _KERNELS[_accel.backend()][obj.case]
    return float(kernel(*obj.arrays, r))


def estimate_pair(obj, xtol=XTOL, grid_points=GRID_POINTS):
    """Maximize :func:`pair_loglik` over ``[-RHO_MAX, RHO_MAX]``.

    A uniform grid pre-scan picks the best point; bounded Brent
    (golden-section with parabolic steps) then refines inside the two
    neighbouring grid cells.
    """
    if obj.n_eff < 3:
        raise DegeneratePairError(f"only {obj.n_eff} complete rows")
    kernel = _KERNELS[_accel.backend()][obj.case]
    arrays = obj.arrays

    def f(r):
        return float(kernel(*arrays, r))

    grid = np.linspace(-RHO_MAX, RHO_MAX, grid_points)
    values = np.array([f(r) for r in grid])
    best = int(np.argmax(values))
    lo = grid[max(best - 1, 0)]
    hi = grid[min(best + 1, grid_points - 1)]
    res = optimize.minimize_scalar(
        lambda r: -f(r), bounds=(lo, hi), method="bounded", options={"xatol": xtol}
    )
    rho, ll = float(res.x), -float(res.fun)
    if values[best] > ll:
        rho, ll = float(grid[best]), float(values[best])
    return PairEstimate(rho, ll)


def is_boundary(rho, tol=1e-5):
    return abs(rho) >= RHO_MAX - tol


@dataclass
class PairDiagnostic:
    var1: str
    var2: str
    case: Optional[str]
    n_eff: int
    rho_hat: Optional[float] = None
    loglik: Optional[float] = None
    boundary: bool = False
    failure: Optional[str] = None

    def as_dict(self):
        return asdict(self)


@dataclass(eq=False)
class CorrelationMatrix:
    """Symmetric unit-diagonal matrix of copula correlations.

    Failed pairs are stored as NaN. ``diagnostics`` holds one entry per pair
    when the matrix comes from :func:`estimate_matrix`.
    """

    names: list
    values: np.ndarray
    diagnostics: list = field(default_factory=list)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("correlation matrix must be square")
        if len(self.names) != v.shape[0]:
            raise ValueError("names length does not match matrix dimension")
        self.names = list(self.names)
        self.values = v

    @property
    def dim(self):
        return self.values.shape[0]

    @property
    def n_missing(self):
        return int(np.isnan(self.values[np.triu_indices(self.dim, 1)]).sum())

    @property
    def min_eigenvalue(self):
        if np.isnan(self.values).any():
            return math.nan
        return float(np.linalg.eigvalsh(self.values)[0])

    @property
    def psd(self):
        return bool(self.min_eigenvalue >= -1e-8)

    @property
    def failures(self):
        return [d for d in self.diagnostics if d.failure is not None]


class _Column:
    __slots__ = ("codes", "z_hi", "z_lo", "constant")

    def __init__(self, x, kind):
        self.codes, self.z_hi, self.z_lo = _column_scores(x, kind)
        self.constant = self.z_hi.size == 1


def _objective_from_columns(ci, cj, ki, kj, n):
    # fast path for complete columns: reuse per-column scores
    if n < 3:
        raise DegeneratePairError(f"only {n} complete rows")
    if ci.constant or cj.constant:
        raise DegeneratePairError("constant column after pairwise-complete filtering")
    swapped = ki is MarginalKind.DISCRETE and kj is MarginalKind.CONTINUOUS
    if swapped:
        ci, cj, ki, kj = cj, ci, kj, ki
    if ki is MarginalKind.CONTINUOUS and kj is MarginalKind.CONTINUOUS:
        return PairObjective(PairCase.CC, (ci.z_hi[ci.codes], cj.z_hi[cj.codes]), n)
    if ki is MarginalKind.CONTINUOUS:
        return PairObjective(
            PairCase.CD, (ci.z_hi[ci.codes], cj.z_hi[cj.codes], cj.z_lo[cj.codes]), n, swapped
        )
    kb = cj.z_hi.size
    cells, counts = np.unique(ci.codes * kb + cj.codes, return_counts=True)
    ia, ib = np.divmod(cells, kb)
    arrays = (ci.z_hi[ia], ci.z_lo[ia], cj.z_hi[ib], cj.z_lo[ib], counts.astype(float))
    return PairObjective(PairCase.DD, tuple(np.ascontiguousarray(a) for a in arrays), n)


def estimate_matrix(data, schema=None, xtol=XTOL, threads=1):
    """Estimate the copula correlation matrix of ``data`` pair by pair.

    ``data`` is an ``(n, d)`` array with NaN for missing values, or a
    :class:`~mixcop.data.Dataset` (its own schema is used when ``schema`` is
    omitted). Pairs are independent; the result does not depend on
    ``threads``.
    """
    if schema is None:
        schema = data.schema
    values = np.asarray(getattr(data, "values", data), dtype=float)
    schema = check_schema(schema)
    if values.ndim != 2 or values.shape[1] != len(schema):
        raise ValueError(
            f"data has shape {values.shape} but the schema declares {len(schema)} columns"
        )
    d = values.shape[1]
    if d < 2:
        raise ValueError("need at least two columns")
    kinds = [c.kind for c in schema]
    names = [c.name for c in schema]
    missing = np.isnan(values)
    complete = ~missing.any(axis=0)
    columns = [
        _Column(values[:, j], kinds[j]) if complete[j] and values.shape[0] > 0 else None
        for j in range(d)
    ]

    def one(pair):
        i, j = pair
        diag = PairDiagnostic(names[i], names[j], None, 0)
        try:
            if columns[i] is not None and columns[j] is not None:
                obj = _objective_from_columns(columns[i], columns[j], kinds[i], kinds[j],
                                              values.shape[0])
            else:
                obj = pair_objective(values[:, i], values[:, j], kinds[i], kinds[j])
            diag.case, diag.n_eff = obj.case.value, obj.n_eff
            est = estimate_pair(obj, xtol=xtol)
        except DegeneratePairError as exc:
            diag.n_eff = int((~(missing[:, i] | missing[:, j])).sum())
            diag.failure = str(exc)
            return diag
        diag.rho_hat, diag.loglik = est.rho, est.loglik
        diag.boundary = is_boundary(est.rho)
        return diag

    pairs = list(itertools.combinations(range(d), 2))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            diags = list(pool.map(one, pairs))
    else:
        diags = [one(p) for p in pairs]

    out = np.eye(d)
    for (i, j), diag in zip(pairs, diags):
        v = math.nan if diag.rho_hat is None else diag.rho_hat
        out[i, j] = out[j, i] = v
    return CorrelationMatrix(names, out, diags)
