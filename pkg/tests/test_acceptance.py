"""Acceptance gate: every shipped claim at its stated tolerance.

Each criterion prints a single pass/fail line (visible with ``pytest -s``);
a failed assertion raises after printing its FAIL line.
"""
import cmath
import math
import time
from contextlib import contextmanager

import mpmath as mp
import numpy as np
import pytest

import bdspec as bs
from conftest import ALPHA_QUARTIC_REF, K0_REF


@contextmanager
def criterion(num: int, label: str):
    info = {"detail": ""}
    try:
        yield info
    except BaseException:
        print(f"[criterion {num:02d}] FAIL {label}")
        raise
    print(f"[criterion {num:02d}] PASS {label} {info['detail']}".rstrip())


def test_criterion_01_dn_fraction_vs_laplace(dn_half, ctx_half):
    with criterion(1, "S-fraction(depth 400) vs dn Laplace transform") as info:
        worst = 0.0
        slowest = 0.0
        for x in (1.0, 2.0, 1 + 1j):
            t0 = time.monotonic()
            sf = bs.s_fraction(dn_half, 400, x)
            ld = bs.laplace_dn(ctx_half, complex(x))
            dt = time.monotonic() - t0
            worst = max(worst, abs(sf - ld))
            slowest = max(slowest, dt)
            assert abs(sf - ld) <= 1e-8
            assert dt < 1.0
        info["detail"] = f"(max |diff| {worst:.2e}, max {slowest * 1e3:.0f} ms/point)"


def test_criterion_02_moments():
    with criterion(2, "Taylor moments vs printed formulas; measure moments") as info:
        worst_taylor = 0.0
        for k2 in (0.3, 0.5, 0.999):
            s = bs.dn_taylor_moments(k2, 3)
            ref = [1.0, k2, k2 * (4 + k2), k2 * (16 + 44 * k2 + k2 * k2)]
            for a, b in zip(s, ref):
                worst_taylor = max(worst_taylor, abs(a / b - 1.0))
                assert abs(a / b - 1.0) <= 1e-10
            m = bs.dn_spectral_measure(bs.make_context(k2), 90)
            for order in (1, 2, 3):
                mom = bs.measure_moment(m, order)
                assert abs(mom / ref[order] - 1.0) <= 1e-8
        info["detail"] = f"(worst Taylor rel err {worst_taylor:.1e})"


def test_criterion_03_three_way_agreement(dn_half, ctx_half):
    with criterion(3, "s_fraction = laplace_dn = measure transform at 5 points") as info:
        m = bs.dn_spectral_measure(ctx_half, 80)
        worst = 0.0
        for x in (1.0, 2.0, 1 + 1j, 0.5, 2 + 1j):
            x = complex(x)
            a = bs.s_fraction(dn_half, 400, x)
            b = bs.laplace_dn(ctx_half, x)
            c = -x * bs.measure_stieltjes(m, -x * x)
            for u, v in ((a, b), (a, c), (b, c)):
                worst = max(worst, abs(u - v))
                assert abs(u - v) <= 1e-8
        info["detail"] = f"(worst pairwise {worst:.2e})"


def test_criterion_04_markov_convergence(dn_half):
    with criterion(4, "Markov iterates: 10x error drop 50->500, 1e-6 by 2000") as info:
        dps = 220
        vals = bs.markov_iterates(dn_half, 1j, [50, 500], dps=dps)
        with mp.workdps(dps):
            k2 = mp.mpf(1) / 2
            K = mp.ellipk(k2)
            q = mp.exp(-mp.pi * mp.ellipk(1 - k2) / K)
            x = mp.mpc(0, 1)
            oracle = (mp.pi / (2 * K)) / x
            n = 1
            while True:
                psi = (2 * mp.pi / K) * q**n / (1 + q ** (2 * n))
                if psi < mp.mpf(10) ** (-dps - 10):
                    break
                oracle += psi / (x - (n * mp.pi / K) ** 2)
                n += 1
            err50 = abs(vals[0] - oracle)
            err500 = abs(vals[1] - oracle)
            assert err500 < err50 / 10
        # double-precision check at n = 2000 against the same (rounded) oracle
        it2000 = bs.markov_iterates(dn_half, 1j, [2000])[0]
        err2000 = abs(it2000 - complex(oracle))
        assert err2000 <= 1e-6
        info["detail"] = (
            f"(err50 {float(err50):.1e}, err500 {float(err500):.1e}, "
            f"err2000 {err2000:.1e})"
        )


def test_criterion_05_generalized_family(ctx_half):
    with criterion(5, "c>0 family: quadrature ratio vs S-fraction; c->0 limit") as info:
        worst = 0.0
        for c in (0.25, 0.75, 1.5):
            rates = bs.generalized_c_rates(0.5, c)
            for x in (1.0, 1.5):
                val = bs.generalized_ratio(ctx_half, c, x)
                ref = bs.s_fraction(rates, 400, x)
                worst = max(worst, abs(val - ref))
                assert abs(val - ref) <= 1e-7
        small = bs.generalized_ratio(ctx_half, 1e-4, 1.0)
        limit = bs.laplace_dn(ctx_half, 1.0)
        assert abs(small - limit) <= 1e-3
        info["detail"] = f"(worst {worst:.2e}, c->0 gap {abs(small - limit):.2e})"


def test_criterion_06_nevanlinna_determinant(quartic0, rng):
    with criterion(6, "det(Nevanlinna) = 1 to 1e-9 at 20 points, |x| <= 50") as info:
        r = 50.0 * np.sqrt(rng.uniform(0.01, 1.0, size=20))
        th = rng.uniform(0, 2 * np.pi, size=20)
        xs = r * np.exp(1j * th)
        vals = bs.nevanlinna_batch(quartic0, xs)
        worst = max(nv.det_defect for nv in vals)
        assert worst <= 1e-9
        info["detail"] = f"(max defect {worst:.2e})"


def test_criterion_07_dual_propositions(quartic0, rng):
    with criterion(7, "dual-series vs direct Nevanlinna combinations; dp identities") as info:
        alpha = bs.alpha_limit(quartic0)
        worst = 0.0
        xs = rng.normal(scale=4, size=10) + 1j * rng.normal(scale=4, size=10)
        nvs = bs.nevanlinna_batch(quartic0, xs)
        for x, nv in zip(xs, nvs):
            bt, at = bs.modified_entries_dual(quartic0, complex(x))
            ref_b = nv.B - nv.D / alpha
            ref_a = nv.A - nv.C / alpha
            rb = abs(bt - ref_b) / abs(ref_b)
            ra = abs(at - ref_a) / abs(ref_a)
            worst = max(worst, ra, rb)
            assert rb <= 1e-8 and ra <= 1e-8

        # finite identities on the first 20 levels at 5 random points
        tilde = bs.dual_rates(quartic0)
        hat = bs.dual_rates(quartic0, zero_related=True)
        mu_t0 = tilde.mu(0)
        mu1 = quartic0.mu(1)
        tilde_pi = bs.pi_sequence(tilde, 20)
        lam, mu = quartic0.tabulate(21)
        for _ in range(5):
            x = complex(rng.normal(scale=2), rng.normal(scale=2))
            F = bs.eval_f(quartic0, 20, x)
            Ft = bs.eval_f(tilde, 20, x)
            F1 = bs.eval_f(quartic0, 19, x, shift=1)
            Fh = bs.eval_f(hat, 20, x)
            partial = 0.0j
            pi = 1.0
            for k in range(1, 21):
                partial += F.value(k - 1)
                pi *= lam[k - 1] / mu[k]
                rhs = (mu[k] * pi / mu_t0) * Ft.value(k - 1)
                assert abs(partial - rhs) <= 1e-10 * max(1.0, abs(rhs))
            partial = 0.0j
            for k in range(2, 21):
                partial += F1.value(k - 2)
                lhs = -(x / mu1) * partial
                rhs = -1.0 + Fh.value(k - 1) / tilde_pi.value(k - 1)
                assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(rhs))
        info["detail"] = f"(worst combination rel err {worst:.2e})"


def test_criterion_08_markov_like_theorems(quartic0):
    with criterion(8, "border limits vs matrix combinations at x = 10+10i") as info:
        x = 10 + 10j
        alpha = bs.alpha_limit(quartic0)
        nv = bs.nevanlinna_eval(quartic0, x)
        tol = bs.Tolerance(abs_tol=1e-7, rel_tol=1e-7, max_iter=5000)
        fr = bs.markov_like_limit(quartic0, x, "friedrichs", tol)
        kr = bs.markov_like_limit(quartic0, x, "krein", tol)
        assert fr.terms_used <= 5000 and kr.terms_used <= 5000
        ref_fr = (nv.A * alpha - nv.C) / (nv.B * alpha - nv.D)
        ref_kr = nv.C / nv.D
        assert abs(fr.value - ref_fr) <= 1e-6
        assert abs(kr.value - ref_kr) <= 1e-6
        info["detail"] = (
            f"(friedrichs gap {abs(fr.value - ref_fr):.1e}, "
            f"krein gap {abs(kr.value - ref_kr):.1e}, n = {fr.terms_used})"
        )


def test_criterion_09_quartic_spectra(quartic0, qspec):
    with criterion(9, "quartic border spectra: supports and sinh masses") as info:
        alpha = bs.alpha_limit(quartic0)
        K = qspec.qperiod  # sqrt(2) K0: the oracle-forced quarter-period scale
        mfr = bs.nextremal_measure(quartic0, alpha, window=(0.5, 21000))
        mkr = bs.nextremal_measure(quartic0, 0.0, window=(-0.5, 11000))
        sup_fr = [((2 * n + 1) * math.pi / K) ** 4 for n in range(4)]
        sup_kr = [(2 * n * math.pi / K) ** 4 for n in range(4)]
        assert mfr.support.size == 4 and mkr.support.size == 4
        assert np.allclose(mfr.support, sup_fr, rtol=1e-7)
        assert mkr.support[0] == pytest.approx(0.0, abs=1e-10)
        assert np.allclose(mkr.support[1:], sup_kr[1:], rtol=1e-7)

        # masses proportional to the sinh formulas in the K0 convention;
        # one fitted global constant, residuals < 1e-5
        printed_fr = np.array(
            [
                (4 * math.pi / K0_REF**2) * (2 * n + 1) * math.pi / math.sinh((2 * n + 1) * math.pi)
                for n in range(4)
            ]
        )
        printed_kr = np.array(
            [math.pi / K0_REF**2]
            + [
                (4 * math.pi / K0_REF**2) * 2 * n * math.pi / math.sinh(2 * n * math.pi)
                for n in range(1, 4)
            ]
        )
        fits = []
        for meas, printed in ((mfr, printed_fr), (mkr, printed_kr)):
            c_fit = float(np.sum(meas.mass * printed) / np.sum(printed**2))
            resid = np.abs(meas.mass - c_fit * printed) / meas.mass
            assert np.all(resid < 1e-5)
            fits.append(c_fit)
        assert fits[0] == pytest.approx(0.5, abs=1e-6)
        assert fits[1] == pytest.approx(0.5, abs=1e-6)
        info["detail"] = (
            f"(fitted constants {fits[0]:.8f}, {fits[1]:.8f}; "
            "expected 1/2 of the K0-convention values)"
        )


@pytest.mark.xfail(
    strict=True,
    reason=(
        "The K0-convention support formula ((2n+1) pi/K0)^4 with "
        "K0 = 1.3110... disagrees with the series-extracted spectrum by an "
        "exact factor 4 (truncated Jacobi eigenvalues already lie below its "
        "first point); the spectrum matches ((2n+1) pi/(sqrt(2) K0))^4, "
        "consistent with the masses fitting 1/2 of the K0-convention values "
        "in criterion 9."
    ),
)
def test_criterion_09_literal_printed_supports(quartic0):
    alpha = bs.alpha_limit(quartic0)
    mfr = bs.nextremal_measure(quartic0, alpha, window=(0.5, 21000))
    literal = [((2 * n + 1) * math.pi / K0_REF) ** 4 for n in range(4)]
    ratio = literal[0] / mfr.support[0]
    print(f"[criterion 09-literal] K0-convention/true support ratio = {ratio:.12f}")
    assert np.allclose(mfr.support, literal, rtol=1e-7)


def test_criterion_10_property_suites(dn_half, quartic0, ctx_half, qspec, rng):
    with criterion(10, "property suites (Casorati, Gauss, elliptic, delta, mk8)") as info:
        t0 = time.monotonic()
        # Casorati / Wronskian on both families; the determinate family's
        # cross products grow ~2^n, so the strict identity runs through the
        # extended-precision recurrence (double-path scaling is covered in
        # the recurrence suite)
        from bdspec.recurrence import eval_pq_mp

        for rates in (dn_half, quartic0):
            jc = bs.jacobi_from_rates(rates, 51)
            for _ in range(2):
                x = complex(rng.normal(), rng.uniform(0.4, 2.0))
                table = eval_pq_mp(rates, 51, x, dps=40)
                with mp.workdps(40):
                    for k in (5, 17, 50):
                        pk, qk = table[k]
                        pk1, qk1 = table[k + 1]
                        w = jc.b[k] * (pk * qk1 - pk1 * qk)
                        assert abs(complex(w) - 1.0) < 1e-10

        # Gauss exactness
        m12 = bs.gauss_measure(dn_half, 12)
        m17 = bs.gauss_measure(dn_half, 17)
        for order in (0, 3, 9, 15, 23):
            a = bs.measure_moment(m12, order)
            b = bs.measure_moment(m17, order)
            assert abs(a - b) <= 1e-9 * max(1.0, abs(b))

        # Pythagorean elliptic identities
        for k2 in (0.1, 0.5, 0.9):
            ctx = bs.make_context(k2)
            for u in rng.uniform(-2 * ctx.K, 2 * ctx.K, size=40):
                sn, cn, dn = bs.jacobi_scd(ctx, float(u))
                assert abs(sn * sn + cn * cn - 1.0) < 1e-13
                assert abs(dn * dn + k2 * sn * sn - 1.0) < 1e-13

        # delta derivative chain
        h = 1e-5
        for l, (lp, sign) in {0: (3, -1.0), 1: (0, 1.0), 2: (1, 1.0), 3: (2, 1.0)}.items():
            fd = (bs.delta4(l, 1.3 + h) - bs.delta4(l, 1.3 - h)) / (2 * h)
            assert abs(fd - sign * bs.delta4(lp, 1.3)) < 1e-8

        # mk8 proportionality at n <= 30 (rho_n = 1/b_(n-1), the Wronskian
        # of (P, Q) at zero; see the decisions ledger on the printed value)
        x = 0.9 + 1.4j
        P, Q = bs.eval_pq(quartic0, 30, x)
        pis, ainv = bs.pi_alpha(quartic0, 30)
        lam, mu = quartic0.tabulate(30)
        A, B, C, D = 0.0j, -1.0 + 0.0j, 1.0 + 0.0j, 0.0j
        for k in range(30):
            pk0 = (-1.0) ** k * math.sqrt(pis.value(k).real)
            if k >= 1:
                rho = 1.0 / math.sqrt(lam[k - 1] * mu[k])
                pk0m = (-1.0) ** (k - 1) * math.sqrt(pis.value(k - 1).real)
                sq = pk0m * Q.value(k) - pk0 * Q.value(k - 1)
                sp = pk0m * P.value(k) - pk0 * P.value(k - 1)
                assert abs(sq - rho * C) < 1e-10 * max(1.0, abs(sq))
                assert abs(sp - rho * D) < 1e-10 * max(1.0, abs(sp))
            qk0 = pk0 * ainv.value(k).real
            A += x * qk0 * Q.value(k)
            B += x * qk0 * P.value(k)
            C += x * pk0 * Q.value(k)
            D += x * pk0 * P.value(k)
        info["detail"] = f"(property block {time.monotonic() - t0:.1f} s)"
