"""The indeterminate half: determinacy, Nevanlinna matrix, N-extremal measures.

The four Nevanlinna series converge like 1/n for quartic-growth rate
families, so every series here is summed with geometric checkpoints
(averaged over four consecutive partial sums to damp bounded-period
oscillation) and Neville extrapolation in 1/n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .contfrac import DiscreteMeasure, PoleError
from .numerics import ConvergedLimit, ConvergenceError, Tolerance, neville, richardson_sum
from .recurrence import BirthDeathRates, dual_rates

DET_H = "DET_H"
INDET_S_INDET_H = "INDET_S_INDET_H"
DET_S_INDET_H = "DET_S_INDET_H"

_GROWTH_LIMIT = 1e130


@dataclass(frozen=True)
class Determinacy:
    """Classification verdict with the three criterion partial sums."""

    verdict: str
    series_values: tuple[float, float, float]
    tail_estimates: tuple[float, float, float]
    confident: bool
    nmax: int


@dataclass(frozen=True)
class NevanlinnaValue:
    """The entire-function quadruple (A, B, C, D) at a point."""

    A: complex
    B: complex
    C: complex
    D: complex
    x: complex
    terms_used: int
    det_defect: float


def _tail_behavior(logs: np.ndarray, ns: np.ndarray) -> tuple[str, bool, float]:
    """(verdict, conclusive, tail_estimate) for a positive-term series.

    Geometric ratio over the last quarter decides clearly geometric tails;
    otherwise a power-law fit t_n ~ n^-p decides, with p near 1 declared
    inconclusive.
    """
    last = logs[-1]
    if last == -math.inf:
        return "conv", True, 0.0
    if not math.isfinite(last):
        return "div", True, math.inf
    i0 = (3 * len(logs)) // 4
    if i0 >= len(logs) - 1:
        i0 = len(logs) - 2
    dlog = (logs[-1] - logs[i0]) / (ns[-1] - ns[i0])
    rho = math.exp(dlog)
    tn = math.exp(min(last, 700.0))
    if rho <= 0.95:
        return "conv", True, tn * rho / (1.0 - rho)
    if rho >= 1.05:
        return "div", True, math.inf
    imid = len(logs) // 2
    p = -(logs[-1] - logs[imid]) / math.log(ns[-1] / ns[imid])
    if p >= 1.15:
        return "conv", True, tn * ns[-1] / (p - 1.0)
    if p <= 0.85:
        return "div", True, math.inf
    return ("conv" if p > 1.0 else "div"), False, math.inf


def _scaled_value(m: float, s: float) -> float:
    if m == 0.0:
        return 0.0
    ln = math.log(abs(m)) + s
    if ln > 709.0:
        return math.inf if m > 0 else -math.inf
    return math.copysign(math.exp(ln), m)


def classify(rates: BirthDeathRates, nmax: int = 4000) -> Determinacy:
    """Determinacy of the moment problem from the growth of (lambda_n, mu_n).

    Evaluates partial sums of (i) sum pi_n + 1/(mu_n pi_n), (ii)
    sum pi_n (sum_{k<=n} 1/(mu_k pi_k))^2, (iii) sum 1/(mu_n pi_n), with the
    tail behaviour of each estimated from the computed terms. Convergent (i)
    means the Stieltjes problem is indeterminate (hence Hamburger too);
    otherwise convergent (ii) separates the det-S/indet-H boundary case
    from the plainly determinate one.
    """
    if rates.mu0 != 0:
        raise ValueError("classification requires mu_0 = 0")
    if nmax < 100:
        raise ValueError("nmax must be at least 100")
    lam, mu = rates.tabulate(nmax + 1)
    lam_l, mu_l = lam.tolist(), mu.tolist()
    log_t = [np.empty(nmax), np.empty(nmax), np.empty(nmax)]
    sums = [(0.0, 0.0), (0.0, 0.0), (0.0, 0.0)]  # (mantissa, log-scale) pairs
    s3m, s3s = 0.0, 0.0  # running sum_{k<=n} 1/(mu_k pi_k), scaled
    lp = 0.0  # log pi_n
    for k in range(1, nmax + 1):
        lp += math.log(lam_l[k - 1]) - math.log(mu_l[k])
        log_inv = -(math.log(mu_l[k]) + lp)
        log_t1 = np.logaddexp(lp, log_inv)
        s3m, s3s = _scaled_add(s3m, s3s, 1.0, log_inv)
        log_s3 = math.log(s3m) + s3s
        log_t2 = lp + 2.0 * log_s3
        log_t[0][k - 1] = log_t1
        log_t[1][k - 1] = log_t2
        log_t[2][k - 1] = log_inv
        for i, lt in enumerate((log_t1, log_t2, log_inv)):
            m, s = sums[i]
            sums[i] = _scaled_add(m, s, 1.0, lt)
    ns = np.arange(1, nmax + 1, dtype=float)
    behav = [_tail_behavior(log_t[i], ns) for i in range(3)]
    if behav[0][0] == "conv":
        verdict = INDET_S_INDET_H
        confident = behav[0][1]
    elif behav[1][0] == "conv":
        verdict = DET_S_INDET_H
        confident = behav[1][1] and behav[2][0] == "div" and behav[2][1]
    else:
        verdict = DET_H
        confident = behav[0][1] and behav[1][1]
    values = tuple(_scaled_value(m, s) for m, s in sums)
    tails = tuple(b[2] for b in behav)
    return Determinacy(
        verdict=verdict,
        series_values=values,
        tail_estimates=tails,
        confident=confident,
        nmax=nmax,
    )


def _scaled_add(m1: float, s1: float, m2: float, s2: float) -> tuple[float, float]:
    if m1 == 0.0:
        return m2, s2
    if m2 == 0.0:
        return m1, s1
    s = max(s1, s2)
    m = m1 * math.exp(s1 - s) + m2 * math.exp(s2 - s)
    if m != 0.0 and not (1e-120 < abs(m) < 1e120):
        s += math.log(abs(m))
        m = math.copysign(1.0, m)
    return m, s


def _neville_vec(hs: list[float], ys: list[np.ndarray]) -> np.ndarray:
    vals = [np.array(y, dtype=complex) for y in ys]
    for j in range(1, len(vals)):
        for i in range(len(vals) - 1, j - 1, -1):
            vals[i] = vals[i] + (vals[i] - vals[i - 1]) * hs[i] / (hs[i - j] - hs[i])
    return vals[-1]


def _cached_verdict(rates: BirthDeathRates, nmax: int = 2000) -> str:
    key = "determinacy_verdict"
    if key not in rates._cache:
        rates._cache[key] = classify(rates, nmax=nmax).verdict
    return rates._cache[key]


def _require_indet(rates: BirthDeathRates, allow_border: bool = False) -> None:
    verdict = _cached_verdict(rates)
    ok = (INDET_S_INDET_H,) + ((DET_S_INDET_H,) if allow_border else ())
    if verdict not in ok:
        raise ValueError(
            f"operation requires an indeterminate Stieltjes family, got {verdict}"
        )


def _nevanlinna_sums(
    rates: BirthDeathRates,
    xs: np.ndarray,
    tol: Tolerance,
    derivs: bool = False,
    n0: int = 512,
    nmax: int = 16384,
):
    """Extrapolated sums behind the four Nevanlinna series at a batch of points.

    Returns (sums dict, terms_used, achieved delta, converged). The dict maps
    'SA','SB','SC','SD' (plus primed variants when ``derivs``) to arrays over
    the batch;  A = x SA, B = -1 + x SB, C = 1 + x SC, D = x SD, and
    primed sums give derivative assembly d(xS)/dx = S + x S'.
    """
    xs = np.atleast_1d(np.asarray(xs, dtype=complex))
    checkpoints = []
    cp = n0
    while cp <= nmax:
        checkpoints.append(cp)
        cp *= 2
    if not checkpoints:
        checkpoints = [nmax]
    need = checkpoints[-1] + 3
    lam, mu = rates.tabulate(need + 2)
    lam_l, mu_l = lam.tolist(), mu.tolist()

    names = ["SA", "SB", "SC", "SD"] + (["SAp", "SBp", "SCp", "SDp"] if derivs else [])
    sums = {nm: np.zeros_like(xs) for nm in names}
    sums["SD"] += 1.0  # k = 0 term: P_0(0) P_0(x)

    b0 = math.sqrt(lam_l[0] * mu_l[1])
    a0 = lam_l[0] + mu_l[0]
    p_prev = np.ones_like(xs)
    q_prev = np.zeros_like(xs)
    p_cur = (xs - a0) / b0
    q_cur = np.full_like(xs, 1.0 / b0)
    if derivs:
        dp_prev = np.zeros_like(xs)
        dq_prev = np.zeros_like(xs)
        dp_cur = np.full_like(xs, 1.0 / b0)
        dq_cur = np.zeros_like(xs)
    pi_k = 1.0
    ainv = 0.0
    b_prev = b0

    hs: list[float] = []
    snapshots: list[dict] = []
    buffer: list[dict] | None = None
    buffer_cp = 0
    prev_extrap: dict | None = None
    achieved = math.inf
    converged = False
    terms = 1
    ci = 0

    k = 1
    while True:
        pi_k *= lam_l[k - 1] / mu_l[k]
        ainv -= 1.0 / (mu_l[k] * pi_k)
        pk0 = math.sqrt(pi_k) if k % 2 == 0 else -math.sqrt(pi_k)
        qk0 = pk0 * ainv
        sums["SA"] += qk0 * q_cur
        sums["SB"] += qk0 * p_cur
        sums["SC"] += pk0 * q_cur
        sums["SD"] += pk0 * p_cur
        if derivs:
            sums["SAp"] += qk0 * dq_cur
            sums["SBp"] += qk0 * dp_cur
            sums["SCp"] += pk0 * dq_cur
            sums["SDp"] += pk0 * dp_cur
        terms = k + 1

        if ci < len(checkpoints):
            cp = checkpoints[ci]
            if terms == cp:
                buffer = []
                buffer_cp = cp
            if buffer is not None and cp <= terms <= cp + 3:
                buffer.append({nm: sums[nm].copy() for nm in names})
            if buffer is not None and terms == cp + 3:
                avg = {nm: sum(b[nm] for b in buffer) / len(buffer) for nm in names}
                hs.append(1.0 / (buffer_cp + 1.5))
                snapshots.append(avg)
                buffer = None
                ci += 1
                if len(snapshots) >= 3:
                    extrap = {
                        nm: _neville_vec(hs, [s[nm] for s in snapshots])
                        for nm in names
                    }
                    if prev_extrap is not None:
                        achieved = 0.0
                        ok = True
                        for nm in names:
                            d = np.abs(extrap[nm] - prev_extrap[nm])
                            achieved = max(achieved, float(d.max()))
                            lim = np.maximum(
                                tol.abs_tol, tol.rel_tol * np.abs(extrap[nm])
                            )
                            ok = ok and bool(np.all(d <= lim))
                        prev_extrap = extrap
                        if ok:
                            converged = True
                            break
                    else:
                        prev_extrap = extrap

        if ci >= len(checkpoints):
            break

        an = lam_l[k] + mu_l[k]
        bn = math.sqrt(lam_l[k] * mu_l[k + 1])
        p_new = ((xs - an) * p_cur - b_prev * p_prev) / bn
        q_new = ((xs - an) * q_cur - b_prev * q_prev) / bn
        if derivs:
            dp_new = ((xs - an) * dp_cur + p_cur - b_prev * dp_prev) / bn
            dq_new = ((xs - an) * dq_cur + q_cur - b_prev * dq_prev) / bn
            dp_prev, dp_cur = dp_cur, dp_new
            dq_prev, dq_cur = dq_cur, dq_new
        p_prev, p_cur = p_cur, p_new
        q_prev, q_cur = q_cur, q_new
        b_prev = bn
        k += 1
        if k % 512 == 0 and np.max(np.abs(p_cur)) > _GROWTH_LIMIT:
            raise ConvergenceError(
                "Nevanlinna series terms are growing; the moment problem "
                "looks determinate or max_iter is far too small"
            )

    result = prev_extrap if prev_extrap is not None else {
        nm: sums[nm].copy() for nm in names
    }
    return result, terms, achieved, converged


def _assemble(entries: dict, xs: np.ndarray, derivs: bool = False) -> dict:
    out = {
        "A": xs * entries["SA"],
        "B": -1.0 + xs * entries["SB"],
        "C": 1.0 + xs * entries["SC"],
        "D": xs * entries["SD"],
    }
    if derivs:
        out["Ap"] = entries["SA"] + xs * entries["SAp"]
        out["Bp"] = entries["SB"] + xs * entries["SBp"]
        out["Cp"] = entries["SC"] + xs * entries["SCp"]
        out["Dp"] = entries["SD"] + xs * entries["SDp"]
    return out


def nevanlinna_batch(
    rates: BirthDeathRates,
    xs,
    tol: Tolerance | None = None,
    nmax: int = 16384,
) -> list[NevanlinnaValue]:
    """Vectorized :func:`nevanlinna_eval` over a batch of points (one series pass)."""
    _require_indet(rates)
    tol = tol or Tolerance(abs_tol=1e-11, rel_tol=1e-11)
    xs = np.atleast_1d(np.asarray(xs, dtype=complex))
    nonzero = xs != 0
    out: list[NevanlinnaValue | None] = [None] * xs.size
    if np.any(nonzero):
        sub = xs[nonzero]
        entries, terms, achieved, converged = _nevanlinna_sums(
            rates, sub, tol, derivs=False, nmax=nmax
        )
        if not converged:
            raise ConvergenceError(
                f"Nevanlinna series did not stabilize (achieved {achieved:.2e}); "
                "raise nmax or loosen the tolerance"
            )
        vals = _assemble(entries, sub)
        j = 0
        for i in range(xs.size):
            if nonzero[i]:
                A, B, C, D = (vals[nm][j] for nm in ("A", "B", "C", "D"))
                out[i] = NevanlinnaValue(
                    A=complex(A),
                    B=complex(B),
                    C=complex(C),
                    D=complex(D),
                    x=complex(xs[i]),
                    terms_used=terms,
                    det_defect=abs(A * D - B * C - 1.0),
                )
                j += 1
    for i in range(xs.size):
        if out[i] is None:
            out[i] = NevanlinnaValue(
                A=0j, B=-1 + 0j, C=1 + 0j, D=0j, x=0j, terms_used=0, det_defect=0.0
            )
    return out


def nevanlinna_eval(
    rates: BirthDeathRates, x: complex, tol: Tolerance | None = None
) -> NevanlinnaValue:
    """Entire functions (A, B, C, D) at ``x`` by extrapolated series summation.

    Refuses rate families that do not classify as indet S; at x = 0 the exact
    values (0, -1, 1, 0) are returned without summation.
    """
    return nevanlinna_batch(rates, [x], tol=tol)[0]


def alpha_limit(rates: BirthDeathRates, tol: Tolerance | None = None) -> float:
    """The limit alpha < 0 of P_n(0)/Q_n(0), i.e. -1 / sum 1/(mu_k pi_k).

    The positive series is summed with Richardson acceleration; divergence
    (a det-S family) raises.
    """
    _require_indet(rates)
    key = "alpha_limit"
    if key in rates._cache:
        return rates._cache[key]
    tol = tol or Tolerance(abs_tol=1e-12, rel_tol=1e-12, max_iter=300_000)
    state = {"pi": 1.0, "k": 0}
    lam_l: list[float] = []
    mu_l: list[float] = []

    def term(_n: int) -> float:
        state["k"] += 1
        k = state["k"]
        while len(lam_l) <= k:
            lam, mu = rates.tabulate(max(2 * k, 64))
            lam_l[:] = lam.tolist()
            mu_l[:] = mu.tolist()
        state["pi"] *= lam_l[k - 1] / mu_l[k]
        return 1.0 / (mu_l[k] * state["pi"])

    res = richardson_sum(term, tol, n0=256)
    if not res.converged:
        raise ConvergenceError(
            "sum 1/(mu_k pi_k) did not converge; rates look det S"
        )
    total = res.value.real
    if not total > 0:
        raise ConvergenceError("accelerated sum lost positivity; cannot form alpha")
    alpha = -1.0 / total
    rates._cache[key] = alpha
    return alpha


def nextremal_transform(
    nv: NevanlinnaValue,
    param: float,
    convention: str = "lambda",
    alpha: float | None = None,
) -> complex:
    """Moebius transform of the Nevanlinna matrix at a constant parameter.

    ``lambda`` convention: (A lam - C)/(B lam - D), with lam = inf giving A/B.
    ``mu`` convention substitutes lam = mu alpha/(mu - alpha) into that, which
    reduces to (At mu + C)/(Bt mu + D) with the modified first column
    At = A - C/alpha, Bt = B - D/alpha; mu = inf gives At/Bt (the Friedrichs
    point) and mu in [0, inf] sweeps exactly the positively supported family.
    Requires ``alpha``.
    """
    if convention == "lambda":
        if math.isinf(param):
            num, den = nv.A, nv.B
        else:
            num, den = nv.A * param - nv.C, nv.B * param - nv.D
    elif convention == "mu":
        if alpha is None:
            raise ValueError("mu convention requires alpha")
        At = nv.A - nv.C / alpha
        Bt = nv.B - nv.D / alpha
        if math.isinf(param):
            num, den = At, Bt
        else:
            num, den = At * param + nv.C, Bt * param + nv.D
    else:
        raise ValueError("convention must be 'lambda' or 'mu'")
    if den == 0:
        raise PoleError("transform denominator vanished", point=nv.x)
    return num / den


def markov_like_limit(
    rates: BirthDeathRates,
    x: complex,
    mode: str,
    tol: Tolerance | None = None,
) -> ConvergedLimit:
    """Iterated border-measure transforms for indet-S families.

    ``friedrichs`` iterates Q_n/P_n; ``krein`` iterates the zero-related dual
    ratio Fhat_n / (x Ftilde_n). Both converge like 1/n, so checkpointed
    iterates are Neville-extrapolated; diagnostics report the extrapolation
    increment.
    """
    x = complex(x)
    if x.imag == 0:
        raise ValueError("markov_like_limit requires Im x != 0")
    if rates.mu0 != 0:
        raise ValueError("markov_like_limit requires mu_0 = 0")
    if mode not in ("friedrichs", "krein"):
        raise ValueError("mode must be 'friedrichs' or 'krein'")
    _require_indet(rates, allow_border=(mode == "friedrichs"))
    tol = tol or Tolerance(abs_tol=1e-8, rel_tol=1e-8, max_iter=20000)
    N = max(tol.max_iter, 64)
    levels = 5
    cps = sorted({max(8, N // (2**j)) for j in range(levels)})

    if mode == "friedrichs":
        ratios = _pq_ratio_checkpoints(rates, x, cps)
    else:
        ratios = _dual_ratio_checkpoints(rates, x, cps)

    hs = [1.0 / (cp + 1.5) for cp in cps]
    prev = None
    value = ratios[-1]
    inc = math.inf
    for j in range(3, len(cps) + 1):
        value = neville(hs[:j], ratios[:j])
        if prev is not None:
            inc = abs(value - prev)
        prev = value
    converged = inc <= tol.bound(value)
    return ConvergedLimit(value, cps[-1], inc, converged)


def _pq_ratio_checkpoints(rates, x, cps):
    need = cps[-1] + 3
    lam, mu = rates.tabulate(need + 2)
    lam_l, mu_l = lam.tolist(), mu.tolist()
    a0 = lam_l[0] + mu_l[0]
    b0 = math.sqrt(lam_l[0] * mu_l[1])
    p0, p1 = 1.0 + 0.0j, (x - a0) / b0
    q0, q1 = 0.0 + 0.0j, complex(1.0 / b0)
    b_prev = b0
    buf: dict[int, list[complex]] = {cp: [] for cp in cps}
    for n in range(1, need + 1):
        for cp in cps:
            if cp <= n <= cp + 3:
                buf[cp].append(q1 / p1)
        an = lam_l[n] + mu_l[n]
        bn = math.sqrt(lam_l[n] * mu_l[n + 1])
        p0, p1 = p1, ((x - an) * p1 - b_prev * p0) / bn
        q0, q1 = q1, ((x - an) * q1 - b_prev * q0) / bn
        b_prev = bn
        scale = abs(p1) + abs(q1)
        if scale > 1e140 or scale < 1e-140:
            p0, p1, q0, q1 = p0 / scale, p1 / scale, q0 / scale, q1 / scale
    return [sum(buf[cp]) / len(buf[cp]) for cp in cps]


def _dual_ratio_checkpoints(rates, x, cps):
    need = cps[-1] + 3
    tilde = dual_rates(rates)
    hat = dual_rates(rates, zero_related=True)
    lt, mt = tilde.tabulate(need + 2)
    lh, mh = hat.tabulate(need + 2)
    lt_l, mt_l = lt.tolist(), mt.tolist()
    lh_l, mh_l = lh.tolist(), mh.tolist()
    ft0, ft1 = 0.0 + 0.0j, 1.0 + 0.0j
    fh0, fh1 = 0.0 + 0.0j, 1.0 + 0.0j
    st = sh = 0.0  # separate log scales
    buf: dict[int, list[complex]] = {cp: [] for cp in cps}
    for n in range(0, need + 1):
        for cp in cps:
            if cp <= n <= cp + 3:
                buf[cp].append((fh1 / ft1) * math.exp(sh - st) / x)
        f2 = ((lt_l[n] + mt_l[n] - x) * ft1 - (lt_l[n - 1] if n >= 1 else 0.0) * ft0) / mt_l[n + 1]
        ft0, ft1 = ft1, f2
        g2 = ((lh_l[n] + mh_l[n] - x) * fh1 - (lh_l[n - 1] if n >= 1 else 0.0) * fh0) / mh_l[n + 1]
        fh0, fh1 = fh1, g2
        m = abs(ft1)
        if m > 1e140 or (0 < m < 1e-140):
            ft0, ft1, st = ft0 / m, ft1 / m, st + math.log(m)
        m = abs(fh1)
        if m > 1e140 or (0 < m < 1e-140):
            fh0, fh1, sh = fh0 / m, fh1 / m, sh + math.log(m)
    return [sum(buf[cp]) / len(buf[cp]) for cp in cps]


def modified_entries_dual(
    rates: BirthDeathRates, x: complex, tol: Tolerance | None = None
) -> tuple[complex, complex]:
    """(B - D/alpha, A - C/alpha) evaluated through the dual-polynomial series.

    B - D/alpha = -1 + (x/mu~_0) sum Ftilde_n(x) and
    A - C/alpha = (1/mu~_0) sum Fhat_n(x); both series are Richardson
    accelerated. This is the strongest cross-check against the direct
    Nevanlinna summation.
    """
    _require_indet(rates)
    if rates.mu0 != 0:
        raise ValueError("dual-series entries require mu_0 = 0")
    x = complex(x)
    tol = tol or Tolerance(abs_tol=1e-11, rel_tol=1e-11, max_iter=200_000)
    mu_t0 = rates.lam(0)

    s_tilde = _f_series_sum(dual_rates(rates), x, tol)
    s_hat = _f_series_sum(dual_rates(rates, zero_related=True), x, tol)
    b_tilde = -1.0 + (x / mu_t0) * s_tilde
    a_tilde = s_hat / mu_t0
    return b_tilde, a_tilde


def _f_series_sum(rates: BirthDeathRates, x: complex, tol: Tolerance) -> complex:
    lam_l: list[float] = []
    mu_l: list[float] = []
    state = {"f0": 0.0 + 0.0j, "f1": 1.0 + 0.0j, "k": -1}

    def term(_n: int) -> complex:
        k = state["k"]
        if k == -1:
            state["k"] = 0
            return state["f1"]
        while len(lam_l) <= k + 1:
            lam, mu = rates.tabulate(max(2 * (k + 2), 64))
            lam_l[:] = lam.tolist()
            mu_l[:] = mu.tolist()
        f2 = (
            (lam_l[k] + mu_l[k] - x) * state["f1"]
            - (lam_l[k - 1] if k >= 1 else 0.0) * state["f0"]
        ) / mu_l[k + 1]
        state["f0"], state["f1"] = state["f1"], f2
        state["k"] = k + 1
        return f2

    res = richardson_sum(term, tol, n0=256)
    if not res.converged:
        raise ConvergenceError("dual polynomial series did not stabilize")
    return res.value


def _default_grid(rates: BirthDeathRates, window: tuple[float, float]) -> np.ndarray:
    lo, hi = window
    if rates.family == "Quartic" and lo >= 0:
        # Spectral points sit near ((j pi)/Kbar)^4 with Kbar the lemniscatic
        # half period scale, so scan uniformly in s^(1/4) at a fifth of the
        # expected spacing.
        from .elliptic import lemniscate_K0

        step = (math.pi / (math.sqrt(2.0) * lemniscate_K0())) / 5.0
        ylo, yhi = lo**0.25, hi**0.25
        npts = max(8, int(math.ceil((yhi - ylo) / step)) + 1)
        return np.linspace(ylo, yhi, npts) ** 4
    return np.linspace(lo, hi, 513)


def nextremal_measure(
    rates: BirthDeathRates,
    param: float,
    convention: str = "lambda",
    window: tuple[float, float] = (0.0, 100.0),
    grid: int | None = None,
    tol: Tolerance | None = None,
) -> DiscreteMeasure:
    """Window-limited N-extremal measure psi_param.

    Support are the zeros of B lam - D (lambda convention; B for lam = inf;
    the modified combination in the mu convention) inside ``window``, found
    by a scan plus safeguarded Newton refinement on the extrapolated series.
    Masses are 1/(B'(s) D(s) - B(s) D'(s)). The result is flagged
    ``normalized=False``: it is a window of an infinite discrete measure.
    """
    _require_indet(rates)
    tol = tol or Tolerance(abs_tol=1e-11, rel_tol=1e-11)
    lo, hi = window
    if not lo < hi:
        raise ValueError("window must satisfy lo < hi")
    if convention == "lambda":
        cB, cD = (1.0, 0.0) if math.isinf(param) else (param, -1.0)
    elif convention == "mu":
        # zeros of Bt mu + D = mu B + (1 - mu/alpha) D
        alpha = alpha_limit(rates)
        if math.isinf(param):
            cB, cD = 1.0, -1.0 / alpha
        else:
            cB, cD = param, 1.0 - param / alpha
    else:
        raise ValueError("convention must be 'lambda' or 'mu'")

    if grid is None:
        xs = _default_grid(rates, window)
    else:
        if grid < 2:
            raise ValueError("grid must be at least 2")
        xs = np.linspace(lo, hi, grid + 1)

    def g_batch(points: np.ndarray, derivs: bool, nmax: int):
        entries, _, _, _ = _nevanlinna_sums(
            rates, points.astype(complex), tol, derivs=derivs, n0=256, nmax=nmax
        )
        vals = _assemble(entries, points.astype(complex), derivs=derivs)
        g = (cB * vals["B"] + cD * vals["D"]).real
        if derivs:
            dg = (cB * vals["Bp"] + cD * vals["Dp"]).real
            return g, dg, vals
        return g

    scan = g_batch(xs, False, 4096)
    roots: list[float] = []
    brackets: list[tuple[float, float, float]] = []  # (lo, hi, sign at lo)
    for i in range(xs.size - 1):
        if scan[i] == 0.0:
            roots.append(float(xs[i]))
        elif scan[i] * scan[i + 1] < 0:
            brackets.append((float(xs[i]), float(xs[i + 1]), float(scan[i])))
    if scan[-1] == 0.0:
        roots.append(float(xs[-1]))

    if brackets:
        a = np.array([b[0] for b in brackets])
        bb = np.array([b[1] for b in brackets])
        fa = np.array([b[2] for b in brackets])
        # Bisection narrows each bracket far enough that the closing Newton
        # steps (on the extrapolated series, with exact derivatives) are safe.
        for _ in range(14):
            mids = 0.5 * (a + bb)
            g = g_batch(mids, False, 3072)
            left = fa * g > 0
            a = np.where(left, mids, a)
            bb = np.where(left, bb, mids)
            fa = np.where(left, g, fa)
        mids = 0.5 * (a + bb)
        for _ in range(3):
            g, dg, _ = g_batch(mids, True, 16384)
            mids = mids - g / np.where(dg == 0, 1.0, dg)
        roots.extend(float(r) for r in mids)

    roots = sorted(r for r in roots if lo <= r <= hi)
    if not roots:
        raise RuntimeError(
            f"no spectral points found in window {window}; "
            "densify the grid or widen the window"
        )
    pts = np.array(roots)
    g, dg, vals = g_batch(pts, True, 16384)
    denom = (vals["Bp"] * vals["D"] - vals["B"] * vals["Dp"]).real
    masses = 1.0 / denom
    bad = [float(p) for p, m in zip(pts, masses) if not m > 0]
    if bad:
        raise RuntimeError(
            f"root refinement produced nonpositive masses near {bad}; "
            "offending brackets were "
            + ", ".join(f"[{a:.6g},{b:.6g}]" for a, b in brackets)
        )
    return DiscreteMeasure(
        support=pts,
        mass=masses,
        normalized=False,
        meta={
            "kind": "nextremal",
            "param": ("inf" if math.isinf(param) else param),
            "convention": convention,
            "window": [lo, hi],
            "family": rates.family,
        },
    )
