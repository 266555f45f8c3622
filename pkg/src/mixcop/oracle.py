"""Brute-force mixed joint density of the copula model for d <= 3.

Slow and simple on purpose: it backs the test suite (normalization, pair
reductions, block factorization, sampler agreement) and the hidden
``oracle`` CLI subcommand.

With continuous coordinates c and discrete coordinates k the density is

    prod_c f_c(x_c) * sum over corners (-1)^{#lower} dC/du_c(F_c(x_c), corner_k)

where each discrete coordinate takes either F_k(x_k) or F_k(x_k-). The
derivative of the copula along the continuous block is the Gaussian copula
density of that block times the conditional normal probability of the
discrete block's quantile orthant.
"""
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .gauss import bvn_cdf
from .marginals import MarginalKind

TRUNCATION_MASS = 1e-10
BOX = 8.0


@dataclass
class SmallModel:
    sigma: np.ndarray
    margins: list

    def __post_init__(self):
        self.sigma = np.asarray(self.sigma, dtype=float)
        d = self.sigma.shape[0]
        if d > 3 or d < 1:
            raise ValueError("the joint-density oracle supports 1 <= d <= 3")
        if len(self.margins) != d:
            raise ValueError("one margin per coordinate is required")
        if not np.allclose(self.sigma, self.sigma.T) or not np.allclose(np.diag(self.sigma), 1):
            raise ValueError("sigma must be a symmetric unit-diagonal matrix")
        if np.linalg.eigvalsh(self.sigma)[0] <= 1e-10:
            raise ValueError("sigma must be positive definite")

    @property
    def d(self):
        return self.sigma.shape[0]

    @property
    def continuous(self):
        return [j for j, m in enumerate(self.margins) if m.kind is MarginalKind.CONTINUOUS]

    @property
    def discrete(self):
        return [j for j, m in enumerate(self.margins) if m.kind is MarginalKind.DISCRETE]

    def support(self, j):
        """Truncated support of discrete margin j (upper tail < 1e-10)."""
        m = self.margins[j]
        if m.family == "bernoulli":
            return np.array([0.0, 1.0])
        top = int(m.dist.isf(TRUNCATION_MASS)) + 1
        return np.arange(top + 1, dtype=float)


def _trivariate_cdf(q, s):
    # P(Z <= q) for standard normal Z with correlation matrix s, by
    # conditioning on the first coordinate and integrating with quad
    if np.any(q == -np.inf):
        return 0.0
    r12, r13, r23 = s[0, 1], s[0, 2], s[1, 2]
    s2 = math.sqrt(1.0 - r12 * r12)
    s3 = math.sqrt(1.0 - r13 * r13)
    rc = (r23 - r12 * r13) / (s2 * s3)

    def g(z):
        return math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi) * bvn_cdf(
            (q[1] - r12 * z) / s2, (q[2] - r13 * z) / s3, rc)

    val, _ = integrate.quad(g, -np.inf, q[0], epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


class _Conditional:
    """Normal law of the discrete-block latents given the continuous scores."""

    def __init__(self, model, zc):
        s = model.sigma
        c, k = model.continuous, model.discrete
        self.k = k
        self._cache = {}
        if c:
            scc = s[np.ix_(c, c)]
            skc = s[np.ix_(k, c)]
            sol = np.linalg.solve(scc, np.asarray(zc))
            self.mean = skc @ sol if k else np.empty(0)
            self.cov = s[np.ix_(k, k)] - skc @ np.linalg.solve(scc, skc.T) if k else None
            # copula density of the continuous block
            inv = np.linalg.inv(scc)
            zc = np.asarray(zc)
            quad = zc @ (inv - np.eye(len(c))) @ zc
            self.cdens = math.exp(-0.5 * quad) / math.sqrt(np.linalg.det(scc))
        else:
            self.mean = np.zeros(len(k))
            self.cov = s[np.ix_(k, k)]
            self.cdens = 1.0

    def orthant(self, q):
        """P(Z_k <= q | Z_c); ``q`` has shape (m, len(k))."""
        m = len(self.k)
        q = np.asarray(q, dtype=float)
        if m == 0:
            return np.ones(q.shape[0])
        sd = np.sqrt(np.diag(self.cov))
        w = (q - self.mean) / sd
        if m == 1:
            return special.ndtr(w[:, 0])
        corr = self.cov / np.outer(sd, sd)
        if m == 2:
            return np.atleast_1d(bvn_cdf(w[:, 0], w[:, 1], corr[0, 1]))
        # inclusion-exclusion corners repeat across neighbouring cells
        out = np.empty(w.shape[0])
        for r, row in enumerate(w):
            key = tuple(row)
            if key not in self._cache:
                self._cache[key] = _trivariate_cdf(row, corr)
            out[r] = self._cache[key]
        return out


def _corner_sum(model, cond, hi, lo):
    """Inclusion-exclusion over the discrete box given quantile bounds."""
    m = hi.shape[-1]
    total = 0.0
    for pattern in itertools.product((0, 1), repeat=m):
        q = np.where(np.array(pattern, dtype=bool), lo, hi)
        sign = -1.0 if sum(pattern) % 2 else 1.0
        total = total + sign * cond.orthant(q)
    return total


def _discrete_bounds(model, xk):
    his, los = [], []
    for j, x in zip(model.discrete, xk):
        dist = model.margins[j].dist
        his.append(special.ndtri(np.clip(dist.cdf(x), 0.0, 1.0)))
        los.append(special.ndtri(np.clip(dist.cdf(np.asarray(x) - 1.0), 0.0, 1.0)))
    return np.stack(his, axis=-1), np.stack(los, axis=-1)


def _latent_score(dist, x):
    # Phi^{-1}(F(x)), taken from the survival function in the upper tail
    u = float(dist.cdf(x))
    return float(special.ndtri(u)) if u <= 0.5 else -float(special.ndtri(dist.sf(x)))


def joint_density(model, x):
    """Mixed density at the point ``x`` (counting measure on discrete
    coordinates, Lebesgue on continuous ones)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.d,):
        raise ValueError(f"point must have {model.d} coordinates")
    c, k = model.continuous, model.discrete
    for j in k:
        if x[j] != round(x[j]) or model.margins[j].dist.pmf(x[j]) == 0.0:
            return 0.0
    dens = 1.0
    zc = []
    for j in c:
        dist = model.margins[j].dist
        dens *= float(dist.pdf(x[j]))
        zc.append(_latent_score(dist, x[j]))
    cond = _Conditional(model, zc)
    if not k:
        return dens * cond.cdens
    hi, lo = _discrete_bounds(model, [np.array([x[j]]) for j in k])
    return float(dens * cond.cdens * _corner_sum(model, cond, hi, lo)[0])


def _discrete_mass(model, zc):
    """Sum of the discrete-block cell masses given continuous scores."""
    cond = _Conditional(model, zc)
    k = model.discrete
    if not k:
        return cond.cdens
    grids = np.meshgrid(*[model.support(j) for j in k], indexing="ij")
    cells = [g.ravel() for g in grids]
    hi, lo = _discrete_bounds(model, cells)
    return cond.cdens * float(np.sum(_corner_sum(model, cond, hi, lo)))


def total_mass(model):
    """Sum/integral of :func:`joint_density` over the whole space.

    Continuous coordinates are integrated over a +/-8 sd box in latent
    scale (x = F^{-1}(Phi(z)), so f(x) dx = phi(z) dz); discrete ones are
    summed over their truncated supports.
    """
    c = model.continuous
    if not c:
        return _discrete_mass(model, [])

    def integrand(*z):
        w = math.prod(math.exp(-0.5 * zi * zi) / math.sqrt(2 * math.pi) for zi in z)
        return w * _discrete_mass(model, list(z))

    val, _ = integrate.nquad(integrand, [(-BOX, BOX)] * len(c),
                             opts={"epsabs": 1e-11, "epsrel": 1e-10, "limit": 200})
    return val


def pair_density(model, i, j, xi, xj):
    """Bivariate marginal density of coordinates (i, j) evaluated through a
    2-d sub-model."""
    sub = SmallModel(model.sigma[np.ix_([i, j], [i, j])], [model.margins[i], model.margins[j]])
    return joint_density(sub, [xi, xj])


def truncation_report(model):
    """Per-coordinate truncation points of the discrete supports."""
    out = []
    for j, m in enumerate(model.margins):
        entry = {"index": j, "margin": str(m), "kind": m.kind.value}
        if m.kind is MarginalKind.DISCRETE:
            pts = model.support(j)
            entry["support_max"] = int(pts[-1])
            entry["tail_mass"] = float(m.dist.sf(pts[-1]))
        out.append(entry)
    return out
