"""Numba kernels. Each function here has a numpy twin in ``gauss`` or
``estimator``; the two are tested against each other.

The bivariate normal routine follows Genz's BVNU (Drezner-Wesolowsky with
fixed-order Gauss-Legendre over the correlation angle, and the Taylor
expansion of Drezner for |r| >= 0.925).
"""
import math

import numpy as np

from ._accel import njit

RHO_MAX = 0.9999
LOG_FLOOR = math.log(1e-300)
TWO_PI = 2.0 * math.pi
SQRT_TWO_PI = math.sqrt(TWO_PI)

# Half-sets of Gauss-Legendre nodes on [-1, 1]; mirrored as 1 -/+ x.
GL6_X = np.array([0.9324695142031522, 0.6612093864662647, 0.2386191860831970])
GL6_W = np.array([0.1713244923791705, 0.3607615730481384, 0.4679139345726904])
GL12_X = np.array([
    0.9815606342467191, 0.9041172563704750, 0.7699026741943050,
    0.5873179542866171, 0.3678314989981802, 0.1252334085114692,
])
GL12_W = np.array([
    0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
    0.2031674267230659, 0.2334925365383547, 0.2491470458134029,
])
GL20_X = np.array([
    0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
    0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
    0.5108670019508271, 0.3737060887154196, 0.2277858511416451,
    0.07652652113349733,
])
GL20_W = np.array([
    0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
    0.08327674157670475, 0.1019301198172404, 0.1181945319615184,
    0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
    0.1527533871307259,
])


@njit
def phi(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


@njit
def clamp_rho(r):
    if r > RHO_MAX:
        return RHO_MAX
    if r < -RHO_MAX:
        return -RHO_MAX
    return r


@njit
def _gl_nodes(absr):
    if absr < 0.3:
        return GL6_X, GL6_W
    if absr < 0.75:
        return GL12_X, GL12_W
    return GL20_X, GL20_W


@njit
def bvnu(dh, dk, r):
    """P(X > dh, Y > dk) for a standard bivariate normal with correlation r."""
    # symmetric in (dh, dk); sorting makes it bitwise symmetric too
    h = max(dh, dk)
    k = min(dh, dk)
    if h == math.inf:
        return 0.0
    if k == -math.inf:
        if h == -math.inf:
            return 1.0
        return phi(-h)
    if r == 0.0:
        return phi(-h) * phi(-k)

    hk = h * k
    xh, wh = _gl_nodes(abs(r))
    m = xh.shape[0]
    bvn = 0.0
    if abs(r) < 0.925:
        hs = 0.5 * (h * h + k * k)
        asr = 0.5 * math.asin(r)
        for s in range(2):
            for i in range(m):
                x = 1.0 - xh[i] if s == 0 else 1.0 + xh[i]
                sn = math.sin(asr * x)
                bvn += wh[i] * math.exp((sn * hk - hs) / (1.0 - sn * sn))
        bvn = bvn * asr / TWO_PI + phi(-h) * phi(-k)
    else:
        if r < 0.0:
            k = -k
            hk = -hk
        if abs(r) < 1.0:
            as_ = 1.0 - r * r
            a = math.sqrt(as_)
            bs = (h - k) * (h - k)
            asr = -0.5 * (bs / as_ + hk)
            c = (4.0 - hk) / 8.0
            d = (12.0 - hk) / 80.0
            if asr > -100.0:
                bvn = a * math.exp(asr) * (
                    1.0 - c * (bs - as_) * (1.0 - d * bs) / 3.0 + c * d * as_ * as_
                )
            if hk > -100.0:
                b = math.sqrt(bs)
                sp = SQRT_TWO_PI * phi(-b / a)
                bvn -= math.exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0)
            a *= 0.5
            acc = 0.0
            for s in range(2):
                for i in range(m):
                    x = 1.0 - xh[i] if s == 0 else 1.0 + xh[i]
                    xs = (a * x) * (a * x)
                    asr_i = -0.5 * (bs / xs + hk)
                    if asr_i > -100.0:
                        sp_i = 1.0 + c * xs * (1.0 + 5.0 * d * xs)
                        rs = math.sqrt(1.0 - xs)
                        ep = math.exp(-0.5 * hk * xs / ((1.0 + rs) * (1.0 + rs))) / rs
                        acc += wh[i] * math.exp(asr_i) * (sp_i - ep)
            bvn = (a * acc - bvn) / TWO_PI
        if r > 0.0:
            bvn += phi(-max(h, k))
        elif h >= k:
            bvn = -bvn
        else:
            if h < 0.0:
                lower = phi(k) - phi(h)
            else:
                lower = phi(-h) - phi(-k)
            bvn = lower - bvn
    return min(1.0, max(0.0, bvn))


@njit
def bvn_cdf_scalar(a, b, r):
    return bvnu(-a, -b, clamp_rho(r))


@njit
def bvn_cdf_array(a, b, r):
    out = np.empty(a.shape[0])
    for i in range(a.shape[0]):
        out[i] = bvnu(-a[i], -b[i], clamp_rho(r[i]))
    return out


@njit
def loglik_cc(z1, z2, rho):
    r = clamp_rho(rho)
    r2 = r * r
    one_m = 1.0 - r2
    base = -0.5 * math.log(one_m)
    total = 0.0
    for i in range(z1.shape[0]):
        x = z1[i]
        y = z2[i]
        term = base - (r2 * (x * x + y * y) - 2.0 * r * x * y) / (2.0 * one_m)
        total += max(term, LOG_FLOOR)
    return total


@njit
def _interval_prob(lo, hi):
    # Phi(hi) - Phi(lo), taken on the tail where it loses no precision
    if lo > 0.0:
        p = phi(-lo) - phi(-hi)
    else:
        p = phi(hi) - phi(lo)
    return p


@njit
def loglik_cd(z, b_hi, b_lo, rho):
    r = clamp_rho(rho)
    s = math.sqrt(1.0 - r * r)
    total = 0.0
    for i in range(z.shape[0]):
        rz = r * z[i]
        p = _interval_prob((b_lo[i] - rz) / s, (b_hi[i] - rz) / s)
        total += math.log(p) if p > 1e-300 else LOG_FLOOR
    return total


@njit
def rect_prob(a_hi, a_lo, b_hi, b_lo, r):
    # an axis whose box lies in the upper tail is reflected (Z -> -Z) so
    # the four corner CDFs stay small and the differences do not cancel
    if a_lo > 0.0:
        a_hi, a_lo = -a_lo, -a_hi
        r = -r
    if b_lo > 0.0:
        b_hi, b_lo = -b_lo, -b_hi
        r = -r
    hh = bvnu(-a_hi, -b_hi, r)
    ll = bvnu(-a_lo, -b_lo, r)
    lh = bvnu(-a_lo, -b_hi, r)
    hl = bvnu(-a_hi, -b_lo, r)
    return (hh + ll) - (lh + hl)


@njit
def loglik_dd(a_hi, a_lo, b_hi, b_lo, counts, rho):
    r = clamp_rho(rho)
    total = 0.0
    for i in range(a_hi.shape[0]):
        p = rect_prob(a_hi[i], a_lo[i], b_hi[i], b_lo[i], r)
        total += counts[i] * (math.log(p) if p > 1e-300 else LOG_FLOOR)
    return total
