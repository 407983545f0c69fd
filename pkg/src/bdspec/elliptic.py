"""Jacobi elliptic functions and the special-function kit for the elliptic families.

AGM-based complete integrals and sn/cn/dn (descending Landen ladder, real
arguments), Fourier and Taylor data of dn, the order-4 trigonometric
functions delta_l, the lemniscate constant, and the Laplace transform of dn
over one period.
"""
from __future__ import annotations

import cmath
import functools
import math
from dataclasses import dataclass

from .numerics import Tolerance, integrate

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class EllipticContext:
    """Modulus data: k^2, complementary k'^2, quarter periods K, K', nome q."""

    k2: float
    kprime2: float
    K: float
    Kprime: float
    q: float


def _agm(a: float, b: float) -> float:
    # Quadratic convergence: the gap squares each step, so a few-ulp exit
    # threshold is reached with the last step landing at full precision.
    for _ in range(40):
        if abs(a - b) <= 4e-16 * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def make_context(k2: float) -> EllipticContext:
    """Complete the modulus: K, K' by the arithmetic-geometric mean, q from them."""
    if not 0.0 < k2 < 1.0:
        raise ValueError("k2 must lie strictly inside (0, 1)")
    kp2 = 1.0 - k2
    K = math.pi / (2.0 * _agm(1.0, math.sqrt(kp2)))
    Kp = math.pi / (2.0 * _agm(1.0, math.sqrt(k2)))
    q = math.exp(-math.pi * Kp / K)
    return EllipticContext(k2=k2, kprime2=kp2, K=K, Kprime=Kp, q=q)


def jacobi_scd(ctx: EllipticContext, u: float) -> tuple[float, float, float]:
    """(sn, cn, dn) at real u by the descending Landen transformation.

    The argument is first reduced to [0, K] through the exact quarter-period
    symmetries (where the amplitude ladder's arcsine branch is safe); signs
    are restored afterwards. dn is recovered from 1 - k^2 sn^2, which is
    bounded below by k'^2 without any clamping.
    """
    if u == 0.0:
        return 0.0, 1.0, 1.0
    K = ctx.K
    s_sign = c_sign = 1.0
    w = u
    if w < 0.0:
        w = -w
        s_sign = -s_sign
    w = math.fmod(w, 4.0 * K)
    if w >= 2.0 * K:
        w -= 2.0 * K
        s_sign, c_sign = -s_sign, -c_sign
    if w > K:
        w = 2.0 * K - w
        c_sign = -c_sign

    a = [1.0]
    b = [math.sqrt(ctx.kprime2)]
    c = [math.sqrt(ctx.k2)]
    while abs(c[-1]) > 4e-17 * a[-1] and len(a) < 40:
        an, bn, cn_ = 0.5 * (a[-1] + b[-1]), math.sqrt(a[-1] * b[-1]), 0.5 * (a[-1] - b[-1])
        a.append(an)
        b.append(bn)
        c.append(cn_)
    n = len(a) - 1
    if n == 0:
        sn, cn = math.sin(w), math.cos(w)
    else:
        phi = (2.0**n) * a[n] * w
        for i in range(n, 0, -1):
            s = c[i] / a[i] * math.sin(phi)
            s = min(1.0, max(-1.0, s))
            phi = 0.5 * (phi + math.asin(s))
        sn, cn = math.sin(phi), math.cos(phi)
    dn = math.sqrt(1.0 - ctx.k2 * sn * sn)
    return s_sign * sn, c_sign * cn, dn


def dn_fourier_coeff(ctx: EllipticContext, n: int) -> float:
    """Cosine-series coefficient of dn: pi/(2K) for n=0, (2pi/K) q^n/(1+q^2n) else."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return math.pi / (2.0 * ctx.K)
    return (2.0 * math.pi / ctx.K) * ctx.q**n / (1.0 + ctx.q ** (2 * n))


def dn_taylor_moments(k2: float, nmax: int):
    """Coefficients s_0..s_nmax of dn u = sum (-1)^n s_n u^(2n)/(2n)!.

    Extracted by power-series integration of sn' = cn dn, cn' = -sn dn,
    dn' = -k^2 sn cn from (0, 1, 1). Beyond nmax = 60 the convolution runs
    in mpmath to keep the huge-factorial products representable.
    """
    if not k2 > 0:
        raise ValueError("k2 must be positive")
    if nmax < 0:
        raise ValueError("nmax must be nonnegative")
    if nmax > 60:
        return _dn_taylor_moments_mp(k2, nmax)
    M = 2 * nmax
    s = [0.0] * (M + 1)
    c = [0.0] * (M + 1)
    d = [0.0] * (M + 1)
    c[0] = 1.0
    d[0] = 1.0
    for m in range(M):
        conv_cd = sum(c[i] * d[m - i] for i in range(m + 1))
        conv_sd = sum(s[i] * d[m - i] for i in range(m + 1))
        conv_sc = sum(s[i] * c[m - i] for i in range(m + 1))
        s[m + 1] = conv_cd / (m + 1)
        c[m + 1] = -conv_sd / (m + 1)
        d[m + 1] = -k2 * conv_sc / (m + 1)
    out = []
    for n in range(nmax + 1):
        out.append((-1.0) ** n * d[2 * n] * math.factorial(2 * n))
    return out


def _dn_taylor_moments_mp(k2: float, nmax: int):
    import mpmath as mp

    with mp.workdps(40 + nmax):
        k2m = mp.mpf(k2)
        M = 2 * nmax
        s = [mp.mpf(0)] * (M + 1)
        c = [mp.mpf(0)] * (M + 1)
        d = [mp.mpf(0)] * (M + 1)
        c[0] = mp.mpf(1)
        d[0] = mp.mpf(1)
        for m in range(M):
            conv_cd = mp.fsum(c[i] * d[m - i] for i in range(m + 1))
            conv_sd = mp.fsum(s[i] * d[m - i] for i in range(m + 1))
            conv_sc = mp.fsum(s[i] * c[m - i] for i in range(m + 1))
            s[m + 1] = conv_cd / (m + 1)
            c[m + 1] = -conv_sd / (m + 1)
            d[m + 1] = -k2m * conv_sc / (m + 1)
        return [float((-1) ** n * d[2 * n] * mp.factorial(2 * n)) for n in range(nmax + 1)]


def moment_asymptote(ctx: EllipticContext, n: int) -> float:
    """log of the large-n moment estimate 2 (2n)! / K'^(2n+1)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    return math.log(2.0) + math.lgamma(2 * n + 1) - (2 * n + 1) * math.log(ctx.Kprime)


# Fourth roots of -1, the exponential frequencies of the delta_l family.
_OMEGAS = tuple(cmath.exp(1j * math.pi * (2 * j + 1) / 4) for j in range(4))


def delta4(l: int, x: complex) -> complex:
    """Order-4 trigonometric function delta_l(x) = sum (-1)^n x^(4n+l)/(4n+l)!.

    l in {0, 2} use the cos*cosh / sin*sinh closed forms; l in {1, 3} are
    summed termwise for |x| <= 30 and assembled from the four exponentials
    e^(w x), w^4 = -1, beyond.
    """
    if l not in (0, 1, 2, 3):
        raise ValueError("l must be one of 0, 1, 2, 3")
    z = complex(x)
    a = z / _SQRT2
    if l == 0:
        return cmath.cos(a) * cmath.cosh(a)
    if l == 2:
        return cmath.sin(a) * cmath.sinh(a)
    if abs(z) <= 30.0:
        total = 0.0 + 0.0j
        comp = 0.0 + 0.0j
        term = z**l / math.factorial(l)
        n = 0
        while True:
            t = total + term
            if abs(total) >= abs(term):
                comp += (total - t) + term
            else:
                comp += (term - t) + total
            total = t
            term = -term * z**4 / (
                (4 * n + l + 1) * (4 * n + l + 2) * (4 * n + l + 3) * (4 * n + l + 4)
            )
            n += 1
            if abs(term) <= 1e-20 * (abs(total) + 1.0) or n > 200:
                break
        return total + comp
    acc = 0.0 + 0.0j
    for w in _OMEGAS:
        acc += w ** (-l) * cmath.exp(w * z)
    return 0.25 * acc


@functools.lru_cache(maxsize=1)
def lemniscate_K0() -> float:
    """The lemniscatic quarter period: integral of (1-u^4)^(-1/2) over [0, 1]."""

    def near_one(d: float) -> float:
        # 1 - u^4 = d (2 - d)(1 + (1-d)^2) expressed through the exact distance d.
        u = 1.0 - d
        return 1.0 / math.sqrt(d * (2.0 - d) * (1.0 + u * u))

    val = integrate(
        lambda u: 1.0 / math.sqrt((1.0 - u) * (1.0 + u) * (1.0 + u * u)),
        0.0,
        1.0,
        Tolerance(abs_tol=1e-14, rel_tol=1e-14, max_iter=4000),
        sing_b=-0.5,
        f_dist_b=near_one,
    )
    return float(val.real)


def laplace_dn(ctx: EllipticContext, x: complex) -> complex:
    """Laplace transform of dn over [0, oo) for Re x > 0.

    By 2K-periodicity this is the single-period integral divided by
    (1 - e^(-2xK)).
    """
    x = complex(x)
    if not x.real > 0:
        raise ValueError("laplace_dn requires Re x > 0")
    twoK = 2.0 * ctx.K

    def f(u: float) -> complex:
        return jacobi_scd(ctx, u)[2] * cmath.exp(-x * u)

    num = integrate(f, 0.0, twoK, Tolerance(abs_tol=1e-13, rel_tol=1e-13, max_iter=4000))
    return num / (1.0 - cmath.exp(-x * twoK))
