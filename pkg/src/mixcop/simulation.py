"""Correlation-matrix recipes and sampling from the latent-Gaussian copula model.

Random streams: every public sampler takes ``seed``, which may be an int, a
``numpy.random.SeedSequence`` or a ``Generator``. Ints and seed sequences are
turned into a PCG64 generator; benchmark replications get independent
children of one root ``SeedSequence`` (see :func:`replication_seeds`).
"""
import math
import re
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .data import Dataset
from .gauss import RHO_MAX
from .marginals import ColumnSchema, MarginalKind

DEFAULT_BLOCKS = ((7, 0.8), (10, 0.6), (2, 0.5), (6, 0.7), (5, 0.3))
TAIL_CUTOFF = 1e-12


def as_generator(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def replication_seeds(seed, reps):
    return np.random.SeedSequence(seed).spawn(reps)


# --- marginal families -------------------------------------------------------

_FAMILIES = {
    "normal": (2, MarginalKind.CONTINUOUS),
    "uniform": (0, MarginalKind.CONTINUOUS),
    "poisson": (1, MarginalKind.DISCRETE),
    "negbin": (2, MarginalKind.DISCRETE),
    "bernoulli": (1, MarginalKind.DISCRETE),
}
_ALIASES = {"uniform01": "uniform", "nb": "negbin", "negbinomial": "negbin",
            "gaussian": "normal", "binary": "bernoulli"}


@dataclass(frozen=True)
class MarginalSpec:
    """A parametric marginal used for simulation.

    ``negbin(r, p)`` counts failures before the r-th success with success
    probability ``p`` (so ``negbin(1, 0.5)`` has mean 1).
    """

    family: str
    params: tuple = ()

    def __post_init__(self):
        fam = _ALIASES.get(self.family.lower(), self.family.lower())
        if fam not in _FAMILIES:
            raise ValueError(f"unknown marginal family {self.family!r}")
        object.__setattr__(self, "family", fam)
        params = tuple(float(p) for p in self.params)
        if fam == "normal" and not params:
            params = (0.0, 1.0)
        object.__setattr__(self, "params", params)
        nparams, _ = _FAMILIES[fam]
        if len(params) != nparams:
            raise ValueError(f"{fam} takes {nparams} parameters, got {len(params)}")
        bad = (
            (fam == "normal" and not params[1] > 0)
            or (fam == "poisson" and not params[0] > 0)
            or (fam == "negbin" and not (params[0] >= 1 and params[0] == int(params[0])
                                         and 0 < params[1] < 1))
            or (fam == "bernoulli" and not 0 < params[0] < 1)
        )
        if bad:
            raise ValueError(f"invalid parameters {params} for {fam}")

    @property
    def kind(self):
        return _FAMILIES[self.family][1]

    @property
    def dist(self):
        """Matching frozen scipy distribution."""
        p = self.params
        if self.family == "normal":
            return stats.norm(p[0], p[1])
        if self.family == "uniform":
            return stats.uniform()
        if self.family == "poisson":
            return stats.poisson(p[0])
        if self.family == "negbin":
            return stats.nbinom(p[0], p[1])
        return stats.bernoulli(p[0])

    def support_table(self):
        """Support points and CDF values of a discrete family, truncated
        where the upper tail drops below ``TAIL_CUTOFF``."""
        if self.kind is MarginalKind.CONTINUOUS:
            raise TypeError("continuous families have no support table")
        if self.family == "bernoulli":
            p = self.params[0]
            return np.array([0.0, 1.0]), np.array([1.0 - p, 1.0])
        dist = self.dist
        top = int(dist.isf(TAIL_CUTOFF)) + 1
        pts = np.arange(top + 1, dtype=float)
        cdf = np.cumsum(dist.pmf(pts))
        last = int(np.searchsorted(cdf, 1.0 - TAIL_CUTOFF))
        last = min(last, pts.size - 1)
        return pts[: last + 1], cdf[: last + 1]

    def ppf(self, u):
        """Generalized inverse inf{x : F(x) >= u}."""
        u = np.asarray(u, dtype=float)
        if self.family == "normal":
            return self.params[0] + self.params[1] * special.ndtri(u)
        if self.family == "uniform":
            return u.copy()
        pts, cdf = self.support_table()
        idx = np.searchsorted(cdf, u, side="left")
        return pts[np.minimum(idx, pts.size - 1)]

    def __str__(self):
        if not self.params:
            return self.family
        return f"{self.family}({','.join(f'{p:g}' for p in self.params)})"


_SPEC_RE = re.compile(r"^\s*([A-Za-z0-9_]+)\s*(?:\(([^)]*)\))?\s*(?:\*\s*(\d+))?\s*$")


def parse_margins(text, dim=None):
    """Parse a margins string such as ``"normal(0,1)*10; negbin(1,0.5)*10"``.

    ``"thirds"`` is shorthand for equal thirds of N(0,1), NB(1, 1/2) and
    B(1/2) and needs ``dim``.
    """
    text = text.strip()
    if text.lower() == "thirds":
        if dim is None:
            raise ValueError("'thirds' margins need a dimension")
        return thirds_margins(dim)
    out = []
    for part in re.split(r";", text):
        if not part.strip():
            continue
        m = _SPEC_RE.match(part)
        if not m:
            raise ValueError(f"cannot parse marginal spec {part!r}")
        fam, args, times = m.groups()
        params = tuple(float(a) for a in args.split(",")) if args and args.strip() else ()
        out.extend([MarginalSpec(fam, params)] * int(times or 1))
    if dim is not None and len(out) != dim:
        raise ValueError(f"margins describe {len(out)} columns, expected {dim}")
    return out


def thirds_margins(dim):
    base = [MarginalSpec("normal", (0, 1)), MarginalSpec("negbin", (1, 0.5)),
            MarginalSpec("bernoulli", (0.5,))]
    sizes = [dim // 3 + (1 if k < dim % 3 else 0) for k in range(3)]
    return [spec for spec, size in zip(base, sizes) for _ in range(size)]


# --- correlation matrices ------------------------------------------------------

def gen_sigma_blocks(blocks=DEFAULT_BLOCKS, permute_seed=None):
    """Block-diagonal equicorrelation matrix.

    ``blocks`` is a sequence of ``(size, value)``. With ``permute_seed`` the
    variable order is shuffled by a seeded permutation, which mixes column
    types across blocks when margins are assigned in order.
    """
    sizes = [int(s) for s, _ in blocks]
    dim = sum(sizes)
    sigma = np.zeros((dim, dim))
    start = 0
    for size, value in blocks:
        size = int(size)
        if size < 1:
            raise ValueError("block sizes must be positive")
        lower = -1.0 / (size - 1) if size > 1 else -1.0
        if not lower < value < 1.0:
            raise ValueError(f"block value {value} is not positive definite for size {size}")
        sl = slice(start, start + size)
        sigma[sl, sl] = value
        start += size
    np.fill_diagonal(sigma, 1.0)
    if permute_seed is not None:
        perm = as_generator(permute_seed).permutation(dim)
        sigma = sigma[np.ix_(perm, perm)]
    return sigma


def gen_sigma_sparse(gamma, dim, seed=0):
    """Sparse correlation matrix by the modified-Cholesky recipe.

    Draws dim*(dim-1)/2 Uniform(0.3, 1) coefficients, zeroes a proportion
    ``gamma`` of them at random, fills the strict upper triangle of a
    unit-diagonal matrix U, and standardizes U^T U to unit diagonal.
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    rng = as_generator(seed)
    m = dim * (dim - 1) // 2
    coef = rng.uniform(0.3, 1.0, size=m)
    n_zero = int(round(gamma * m))
    coef[rng.choice(m, size=n_zero, replace=False)] = 0.0
    upper = np.eye(dim)
    upper[np.triu_indices(dim, 1)] = coef
    sigma = upper.T @ upper
    scale = np.sqrt(np.diag(sigma))
    sigma = sigma / np.outer(scale, scale)
    sigma = 0.5 * (sigma + sigma.T)
    np.fill_diagonal(sigma, 1.0)
    return sigma


def achieved_sparsity(sigma):
    """Proportion of exact zeros among the off-diagonal entries."""
    sigma = np.asarray(sigma)
    off = sigma[~np.eye(sigma.shape[0], dtype=bool)]
    return float(np.mean(off == 0.0)) if off.size else 0.0


def _clamped(sigma):
    sigma = np.array(sigma, dtype=float)
    off = ~np.eye(sigma.shape[0], dtype=bool)
    if np.any(np.abs(sigma[off]) > RHO_MAX):
        warnings.warn(f"correlations beyond +/-{RHO_MAX} clamped", stacklevel=3)
        sigma[off] = np.clip(sigma[off], -RHO_MAX, RHO_MAX)
    return sigma


def _transform(latent, margins):
    u = special.ndtr(latent)
    cols = [m.ppf(u[:, j]) for j, m in enumerate(margins)]
    return np.column_stack(cols) if cols else np.empty((latent.shape[0], 0))


def _dataset(values, margins, names=None):
    if names is None:
        names = [f"x{j + 1}" for j in range(len(margins))]
    schema = [ColumnSchema(nm, m.kind) for nm, m in zip(names, margins)]
    return Dataset(names, values, schema)


def sample_latent(sigma, n, seed):
    sigma = _clamped(sigma)
    try:
        chol = np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        raise ValueError("sigma is not positive definite") from None
    rng = as_generator(seed)
    return rng.standard_normal((n, sigma.shape[0])) @ chol.T


def sample_dataset(sigma, margins, n, seed=0, names=None, return_latent=False):
    """Draw ``n`` rows X_j = F_j^{-1}(Phi(Z_j)) with Z ~ N(0, sigma)."""
    sigma = np.asarray(sigma, dtype=float)
    if len(margins) != sigma.shape[0]:
        raise ValueError("margins length does not match sigma dimension")
    latent = sample_latent(sigma, n, seed)
    data = _dataset(_transform(latent, margins), margins, names)
    return (data, latent) if return_latent else data


# --- fixtures ------------------------------------------------------------------

PROP3_CASES = ("ii_plus", "ii_minus", "iii_plus", "iii_minus")


def prop3_violations(case, x1, x2, p1, second=None):
    """Rows of ``(x1, x2)`` breaking the extreme-correlation pattern of ``case``."""
    x1 = np.asarray(x1)
    x2 = np.asarray(x2)
    if case == "iii_plus":
        bad = x1 > x2
    elif case == "iii_minus":
        bad = (x1 + x2) <= 0
    elif case in ("ii_plus", "ii_minus"):
        second = second or MarginalSpec("normal", (0, 1))
        cut = second.dist.ppf(1.0 - p1 if case == "ii_plus" else p1)
        ind = x2 > cut
        bad = (x1 == 1) != ind if case == "ii_plus" else (x1 == 1) == ind
    else:
        raise ValueError(f"unknown fixture case {case!r}")
    return int(np.count_nonzero(bad))


def make_fixture_prop3(case, p1=0.3, p2=0.6, n=10_000, seed=0, second=None):
    """Sample a Bernoulli pair (case iii) or Bernoulli x continuous pair
    (case ii) at copula correlation exactly +1 or -1.

    The latent pair is degenerate (Z2 = +/-Z1), so the observable pattern
    holds in every row; a violation raises ``AssertionError``.
    """
    if case not in PROP3_CASES:
        raise ValueError(f"unknown fixture case {case!r}; expected one of {PROP3_CASES}")
    if not 0.0 < p1 < 1.0:
        raise ValueError("p1 must lie in (0, 1)")
    if case.startswith("iii"):
        # rho = +1 forces X1 <= X2 only when p1 <= p2; rho = -1 forces
        # X1 + X2 > 0 only when p1 + p2 >= 1
        if not 0.0 < p2 < 1.0:
            raise ValueError("p2 must lie in (0, 1)")
        if case == "iii_plus" and p1 > p2:
            raise ValueError("iii_plus needs p1 <= p2")
        if case == "iii_minus" and p1 + p2 < 1.0:
            raise ValueError("iii_minus needs p1 + p2 >= 1")
        margins = [MarginalSpec("bernoulli", (p1,)), MarginalSpec("bernoulli", (p2,))]
    else:
        margins = [MarginalSpec("bernoulli", (p1,)), second or MarginalSpec("normal", (0, 1))]
    sign = 1.0 if case.endswith("plus") else -1.0
    z = as_generator(seed).standard_normal(n)
    latent = np.column_stack([z, sign * z])
    data = _dataset(_transform(latent, margins), margins)
    bad = prop3_violations(case, data.values[:, 0], data.values[:, 1], p1, margins[1])
    if bad:
        raise AssertionError(f"{case}: {bad} rows violate the extreme-correlation pattern")
    return data


def make_fixture_threshold(t, n, seed=0):
    """X1 ~ N(0, 3) (variance 3), X2 = 1{X1 >= t}: copula correlation 1."""
    x1 = math.sqrt(3.0) * as_generator(seed).standard_normal(n)
    x2 = (x1 >= t).astype(float)
    schema = [ColumnSchema("x1", MarginalKind.CONTINUOUS),
              ColumnSchema("x2", MarginalKind.DISCRETE)]
    return Dataset(["x1", "x2"], np.column_stack([x1, x2]), schema)
