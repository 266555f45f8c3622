"""Univariate and bivariate Gaussian primitives and the bivariate Gaussian copula.

All functions accept scalars or arrays and broadcast. Correlations are
validated with :func:`check_rho` (|rho| < 1) and clamped to
``[-RHO_MAX, RHO_MAX]`` before evaluation.
"""
import math

import numpy as np
from scipy import special

from . import _accel, _jit
from ._jit import GL6_W, GL6_X, GL12_W, GL12_X, GL20_W, GL20_X, RHO_MAX

__all__ = [
    "RHO_MAX",
    "bvn_cdf",
    "check_rho",
    "copula_cdf",
    "copula_density",
    "copula_du",
    "std_normal_cdf",
    "std_normal_pdf",
    "std_normal_quantile",
]


def check_rho(rho):
    """Validate a correlation (scalar or array) and clamp it to the kernel box.

    Raises ``ValueError`` when any value is non-finite or has ``|rho| >= 1``.
    """
    r = np.asarray(rho, dtype=float)
    if not np.all(np.isfinite(r)) or np.any(np.abs(r) >= 1.0):
        raise ValueError(f"correlation must lie in the open interval (-1, 1), got {rho!r}")
    r = np.clip(r, -RHO_MAX, RHO_MAX)
    return float(r) if r.ndim == 0 else r


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def std_normal_pdf(z):
    z = np.asarray(z, dtype=float)
    return _scalar_or_array(np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi))


def std_normal_cdf(z):
    return _scalar_or_array(special.ndtr(np.asarray(z, dtype=float)))


def std_normal_quantile(u):
    """Inverse of :func:`std_normal_cdf` on the open unit interval."""
    u = np.asarray(u, dtype=float)
    if np.any(~(u > 0.0)) or np.any(~(u < 1.0)):
        raise ValueError("std_normal_quantile is defined on (0, 1) only")
    return _scalar_or_array(special.ndtri(u))


def _quantile_closed(u):
    # quantile on [0, 1] with the endpoints mapped to -inf / +inf
    u = np.asarray(u, dtype=float)
    if np.any(~((u >= 0.0) & (u <= 1.0))):
        raise ValueError("probabilities must lie in [0, 1]")
    return special.ndtri(u)


# --- bivariate normal CDF, numpy twin of _jit.bvnu -------------------------

def _gl_full(x, w):
    return np.concatenate([1.0 - x, 1.0 + x]), np.concatenate([w, w])


_GL_TABLES = [_gl_full(GL6_X, GL6_W), _gl_full(GL12_X, GL12_W), _gl_full(GL20_X, GL20_W)]


def _bvnu_moderate(h, k, r, x, w):
    hk = h * k
    hs = 0.5 * (h * h + k * k)
    asr = 0.5 * np.arcsin(r)
    sn = np.sin(asr[:, None] * x)
    vals = np.exp((sn * hk[:, None] - hs[:, None]) / (1.0 - sn * sn)) @ w
    return vals * asr / _jit.TWO_PI + special.ndtr(-h) * special.ndtr(-k)


def _bvnu_strong(h, k, r, x, w):
    neg = r < 0.0
    k = np.where(neg, -k, k)
    hk = h * k
    as_ = 1.0 - r * r
    a = np.sqrt(as_)
    bs = (h - k) ** 2
    asr = -0.5 * (bs / as_ + hk)
    c = (4.0 - hk) / 8.0
    d = (12.0 - hk) / 80.0
    with np.errstate(over="ignore", under="ignore"):
        bvn = np.where(
            asr > -100.0,
            a * np.exp(asr) * (1.0 - c * (bs - as_) * (1.0 - d * bs) / 3.0 + c * d * as_ * as_),
            0.0,
        )
        b = np.sqrt(bs)
        sp = _jit.SQRT_TWO_PI * special.ndtr(-b / a)
        bvn = bvn - np.where(
            hk > -100.0,
            np.exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0),
            0.0,
        )
        a = 0.5 * a
        xs = (a[:, None] * x) ** 2
        asr_q = -0.5 * (bs[:, None] / xs + hk[:, None])
        sp_q = 1.0 + c[:, None] * xs * (1.0 + 5.0 * d[:, None] * xs)
        rs = np.sqrt(1.0 - xs)
        ep = np.exp(-0.5 * hk[:, None] * xs / (1.0 + rs) ** 2) / rs
        terms = np.where(asr_q > -100.0, np.exp(asr_q) * (sp_q - ep), 0.0)
    bvn = (a * (terms @ w) - bvn) / _jit.TWO_PI

    lower = np.where(
        h < 0.0,
        special.ndtr(k) - special.ndtr(h),
        special.ndtr(-h) - special.ndtr(-k),
    )
    return np.where(
        ~neg,
        bvn + special.ndtr(-np.maximum(h, k)),
        np.where(h >= k, -bvn, lower - bvn),
    )


def _bvnu_numpy(dh, dk, r):
    h = np.maximum(dh, dk)
    k = np.minimum(dh, dk)
    out = np.empty(h.shape)

    upper_inf = h == np.inf
    lower_inf = ~upper_inf & (k == -np.inf)
    out[upper_inf] = 0.0
    out[lower_inf] = np.where(h[lower_inf] == -np.inf, 1.0, special.ndtr(-h[lower_inf]))
    rest = ~(upper_inf | lower_inf)

    indep = rest & (r == 0.0)
    out[indep] = special.ndtr(-h[indep]) * special.ndtr(-k[indep])
    rest &= ~indep

    absr = np.abs(r)
    groups = [absr < 0.3, (absr >= 0.3) & (absr < 0.75), absr >= 0.75]
    for (x, w), grp in zip(_GL_TABLES, groups):
        mod = rest & grp & (absr < 0.925)
        if mod.any():
            out[mod] = _bvnu_moderate(h[mod], k[mod], r[mod], x, w)
        strong = rest & grp & (absr >= 0.925)
        if strong.any():
            out[strong] = _bvnu_strong(h[strong], k[strong], r[strong], x, w)
    return np.clip(out, 0.0, 1.0)


def _bvn_cdf_numpy(a, b, r):
    return _bvnu_numpy(-a, -b, r)


def bvn_cdf(a, b, rho):
    """P(Z1 <= a, Z2 <= b) for standard normals with correlation ``rho``.

    ``a`` and ``b`` may be infinite. Accurate to about 1e-15 away from the
    clamp boundary.
    """
    r = check_rho(rho)
    a, b, r = np.broadcast_arrays(
        np.asarray(a, dtype=float), np.asarray(b, dtype=float), np.asarray(r, dtype=float)
    )
    if np.isnan(a).any() or np.isnan(b).any():
        raise ValueError("bvn_cdf arguments must not be NaN")
    shape = a.shape
    # broadcast views are read-only; copy into fresh contiguous buffers
    a, b, r = (np.array(v, dtype=float).ravel() for v in (a, b, r))
    if _accel.backend() == "numba":
        out = _jit.bvn_cdf_array(a, b, r)
    else:
        out = _bvn_cdf_numpy(a, b, r)
    out = out.reshape(shape)
    return _scalar_or_array(out)


# --- bivariate Gaussian copula ---------------------------------------------

def copula_cdf(u, v, rho):
    """C_rho(u, v); the endpoints 0 and 1 are allowed."""
    return bvn_cdf(_quantile_closed(u), _quantile_closed(v), rho)


def copula_du(u, v, rho):
    """Partial derivative dC_rho/du, i.e. P(V <= v | U = u)."""
    r = check_rho(rho)
    zu = std_normal_quantile(u)
    zv = _quantile_closed(v)
    with np.errstate(invalid="ignore"):
        arg = (zv - r * zu) / np.sqrt(1.0 - np.asarray(r) ** 2)
    # v = 1 gives inf - finite = inf; keep that exact
    return _scalar_or_array(special.ndtr(arg))


def copula_density(u, v, rho):
    """Density of the bivariate Gaussian copula on the open unit square."""
    r = check_rho(rho)
    x = std_normal_quantile(u)
    y = std_normal_quantile(v)
    r = np.asarray(r)
    one_m = 1.0 - r * r
    expo = (2.0 * r * x * y - r * r * (x * x + y * y)) / (2.0 * one_m)
    return _scalar_or_array(np.exp(expo) / np.sqrt(one_m))
