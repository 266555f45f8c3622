"""Classical association coefficients for comparison with the copula estimate,
plus closed forms for the thresholded-Gaussian pair X ~ N(0, 3),
Y = 1{X >= t}, whose copula correlation is exactly 1.
"""
import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special, stats

from .estimator import DegeneratePairError, estimate_pair, pair_objective
from .marginals import check_schema


def _clean(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("inputs must be 1-d arrays of equal length")
    keep = ~(np.isnan(x) | np.isnan(y))
    x, y = x[keep], y[keep]
    if x.size < 2 or x.min() == x.max() or y.min() == y.max():
        return None
    return x, y


def pearson(x, y):
    """Product-moment correlation; NaN for constant or too-short input."""
    xy = _clean(x, y)
    if xy is None:
        return math.nan
    x, y = xy
    dx = x - x.mean()
    dy = y - y.mean()
    r = float(np.dot(dx, dy) / math.sqrt(np.dot(dx, dx) * np.dot(dy, dy)))
    return max(-1.0, min(1.0, r))


def spearman(x, y):
    """Pearson correlation of mid-ranks."""
    xy = _clean(x, y)
    if xy is None:
        return math.nan
    return pearson(stats.rankdata(xy[0]), stats.rankdata(xy[1]))


def kendall(x, y):
    """Kendall's tau-b, (C - D) / sqrt((C + D + Tx)(C + D + Ty))."""
    xy = _clean(x, y)
    if xy is None:
        return math.nan
    return float(stats.kendalltau(xy[0], xy[1], variant="b").statistic)


def _threshold_q(t):
    # q = Phi(t / sqrt 3) and 1 - q, the latter taken from the upper tail
    z = t / math.sqrt(3.0)
    return special.ndtr(z), special.ndtr(-z)


def closed_form_threshold_pearson(t):
    """exp(-t^2/6) / sqrt(2 pi q (1 - q)) with q = Phi(t / sqrt 3)."""
    q, p = _threshold_q(t)
    return math.exp(-t * t / 6.0) / math.sqrt(2.0 * math.pi * q * p)


def closed_form_threshold_spearman(t):
    """[(q^3 - 2q^2 + q) / 2] / [sqrt(1/12) sqrt(-q^4 + 3q^3 - 3q^2 + q)].

    The polynomials are q(1 - q)^2 and q(1 - q)^3, so the ratio equals
    sqrt(3 q (1 - q)); evaluating that form avoids cancellation as q -> 1.
    """
    q, p = _threshold_q(t)
    return math.sqrt(3.0 * q * p)


@dataclass
class CoefficientSet:
    var1: str
    var2: str
    type_pair: str
    pearson: Optional[float] = None
    spearman: Optional[float] = None
    kendall: Optional[float] = None
    copula: Optional[float] = None


def compare_matrix(data, schema=None):
    """All four coefficients for every column pair, pairwise-complete."""
    if schema is None:
        schema = data.schema
    values = np.asarray(getattr(data, "values", data), dtype=float)
    schema = check_schema(schema)
    out = []
    for i, j in itertools.combinations(range(len(schema)), 2):
        x, y = values[:, i], values[:, j]
        ki, kj = schema[i].kind, schema[j].kind
        tag = "".join(sorted(k.value[0].upper() for k in (ki, kj)))
        try:
            copula = estimate_pair(pair_objective(x, y, ki, kj)).rho
        except DegeneratePairError:
            copula = math.nan
        out.append(CoefficientSet(schema[i].name, schema[j].name, tag,
                                  pearson(x, y), spearman(x, y), kendall(x, y), copula))
    return out
