"""Acceptance criteria 1-9.

Each criterion emits one PASS/FAIL line and then asserts.  Under pytest the
lines are collected in LINES and printed in the terminal summary (see
conftest.py); run directly with `python tests/test_acceptance.py` to print
them as they complete.
"""
import inspect
import math
import sys
import tempfile
import warnings
from pathlib import Path

import mpmath as mp
import numpy as np
import pytest
from scipy import integrate as quad

from relaysec.analysis import (MeanSet, asymptotic_essr, essr_with_outage, expected_q,
                               high_snr_slope)
from relaysec.montecarlo import CHUNK, mc_essr_many, mc_expectation
from relaysec.specfun import (SeriesControl, bessel_k, exp_integral_ei, g_coefficient, k0_series,
                              lah_number, lambda_coeff, lambda_coeff_exact, lower_incomplete_gamma,
                              trig_integrals)
from relaysec.stochastic import (ExpPair, block_exponentials, e_ln_exp, e_ln_exp_plus_c, e_ln_sum,
                                 inv_sum_exp_mean, q_cdf, sum_exp_cdf)
from relaysec.system import Scenario, SystemParams, derive_link_stats
from relaysec.validate import check_outage, run_validate

N_LEMMA = 10_000_000
N_BLOCKS = 1_000_000
DEFAULTS = SystemParams()
LINES = {}


def rho_params(rho_db, **kw):
    p = rho_db + DEFAULTS.n0_dbm - 30.0
    return SystemParams(p_s1_dbw=p, p_s2_dbw=p, **kw)


def emit(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    LINES[n] = line
    if __name__ == "__main__":
        print(line, flush=True)
    return ok, line


# ---------------------------------------------------------------- 1

def _q(f, a, b, **kw):
    # QUADPACK warns when 1e-13 is below its roundoff floor; the value is still used
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", quad.IntegrationWarning)
        return quad.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=400, **kw)[0]


def _rel(a, b):
    return abs(a - b) / abs(b)


def criterion_1():
    worst = {}

    def rec(name, got, ref):
        worst[name] = max(worst.get(name, 0.0), _rel(got, ref))

    for x in -np.logspace(-3, np.log10(50), 25):
        rec("Ei", exp_integral_ei(x), -_q(lambda t: math.exp(-t) / t, -x, math.inf))
    for s in (0.5, 1.0, 2.0, 3.5):
        for x in np.logspace(-3, np.log10(40), 15):
            rec("Upsilon", lower_incomplete_gamma(s, x),
                _q(lambda t: t ** (s - 1) * math.exp(-t), 0, x))
    for x in np.logspace(-3, 2, 25):
        top = math.acosh(max(700.0 / x, 1.0)) + 1.0
        for nu in (0, 1):
            rec(f"K{nu}", bessel_k(nu, x), _q(lambda t: math.exp(-x * math.cosh(t)) * math.cosh(nu * t), 0, top))
    for x in np.logspace(-2, 2, 21):
        si, ci = trig_integrals(x)
        # finite part by Gauss-Kronrod, oscillatory tail by QAWF
        head_s = _q(lambda t: math.sin(t) / t, x, 30.0) if x < 30 else 0.0
        head_c = _q(lambda t: math.cos(t) / t, x, 30.0) if x < 30 else 0.0
        lo = max(x, 30.0)
        tail_s = quad.quad(lambda t: 1 / t, lo, math.inf, weight="sin", wvar=1.0)[0]
        tail_c = quad.quad(lambda t: 1 / t, lo, math.inf, weight="cos", wvar=1.0)[0]
        rec("si", si, -(head_s + tail_s))
        rec("ci", ci, -(head_c + tail_c))
    for n in range(0, 16):
        for i in range(0, n + 1):
            ref = 1 if n == i == 0 else (0 if i == 0 else math.comb(n - 1, i - 1) * math.factorial(n) // math.factorial(i))
            worst["Lah"] = max(worst.get("Lah", 0.0), float(lah_number(n, i) != ref))
    mp.mp.dps = 50
    for nu in (1, 2, 0.3, 1.7):
        for n in range(1, 8):
            for i in range(1, n + 1):
                v = mp.mpf(nu) + (mp.mpf("1e-30") if float(nu).is_integer() else 0)
                ref = ((-1) ** i * mp.sqrt(mp.pi) * mp.gamma(2 * v) * mp.gamma(n - v + mp.mpf(1) / 2)
                       * lah_number(n, i) / (mp.power(2, v - i) * mp.gamma(mp.mpf(1) / 2 - v)
                                             * mp.gamma(n + v + mp.mpf(1) / 2) * mp.factorial(n)))
                rec("Lambda", lambda_coeff(nu, n, i), float(ref))
    for n in range(1, 12):
        rec("g", g_coefficient(n), float(lambda_coeff_exact(2, n, 1) / lambda_coeff_exact(1, n, 1)))
    ctrl = SeriesControl(rel_tol=1e-12, max_terms=40_000)
    for x in (0.1, 0.2, 0.5, 1.0, 2.0, 3.0, 5.0):
        top = math.acosh(max(700.0 / x, 1.0)) + 1.0
        rec("k0_series", k0_series(x, ctrl).value, _q(lambda t: math.exp(-x * math.cosh(t)), 0, top))
    bad = {k: v for k, v in worst.items() if not v < 1e-8}
    detail = "max rel err " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items())
    return emit(1, not bad, detail)


# ---------------------------------------------------------------- 2

def _indicator_mean(seed, k, fn, n=N_LEMMA):
    hits = 0
    for start in range(0, n, 1_000_000):
        e = block_exponentials(seed, 0, start, min(1_000_000, n - start), k)
        hits += int(np.count_nonzero(fn(e)))
    p = hits / n
    return p, math.sqrt(p * (1 - p) / n)


def criterion_2():
    cases = []
    for m in (1.0, 3.0):
        cases.append((f"L1e1 m={m:g}", e_ln_exp(m), mc_expectation("ln_x", (m,), N_LEMMA, seed=21)))
    cases.append(("L1e2 m=2 c=0.5", e_ln_exp_plus_c(2.0, 0.5),
                   mc_expectation("ln_x_plus_c", (2.0,), N_LEMMA, seed=22, c=0.5)))
    p, se = _indicator_mean(23, 2, lambda e: e[0] + 2 * e[1] <= 2.0)
    cases.append(("L2 cdf(2;1,2)", float(sum_exp_cdf(2.0, ExpPair(1.0, 2.0))), (p, se)))
    cases.append(("L3 E1/(X+Y) rates 1,3", inv_sum_exp_mean(1.0, 3.0),
                  mc_expectation("inv_sum", (1.0, 1 / 3), N_LEMMA, seed=24)))
    p, se = _indicator_mean(25, 3, lambda e: 1 / ((e[0] + 2 * e[1]) * e[2] + 1) <= 0.5)
    cases.append(("L4 cdf(0.5;1,2,1)", q_cdf(0.5, 1.0, 2.0, 1.0), (p, se)))
    eq, _ = expected_q(MeanSet(1.0, 1.0, 1.0, 2.0, 1.0))
    cases.append(("L4 E{Q}(1,2,1)", eq, mc_expectation("q_mean", (1.0, 2.0, 1.0), N_LEMMA, seed=26)))
    ok, parts = True, []
    for name, closed, mc in cases:
        mean, se = (mc.mean, mc.stderr) if hasattr(mc, "mean") else mc
        z = abs(closed - mean) / se
        ok &= z <= 3
        parts.append(f"{name} {z:.2f}se")
    e3 = mc_expectation("ln_sum", (1.0, 2.0), N_LEMMA, seed=27)
    oracle, printed = e_ln_sum(1.0, 2.0, "oracle")[0], e_ln_sum(1.0, 2.0, "paper_faithful")[0]
    z_o, z_p = abs(oracle - e3.mean) / e3.stderr, abs(printed - e3.mean) / e3.stderr
    default = inspect.signature(asymptotic_essr).parameters["mode"].default
    ok &= z_o <= 3 and (z_p <= 3 or default == "oracle")
    parts.append(f"L1e3 MC {e3.mean:.6f}: oracle {oracle:.6f} ({z_o:.2f}se), printed {printed:.6f} "
                 f"({z_p:.0f}se, {'agrees' if z_p <= 3 else 'disagrees'}); asymptotic default mode {default}")
    return emit(2, ok, "; ".join(parts))


# ---------------------------------------------------------------- 3

def criterion_3():
    res = check_outage(N_LEMMA, seed=31)
    mc = [r for r in res.rows if r.engine == "monte_carlo"]
    cf = [r for r in res.rows if r.engine == "closed_form"]
    zs = [abs(a.essr - b.essr) / b.stderr for a, b in zip(cf, mc) if b.stderr > 0]
    detail = f"{len(mc)} points (relay/jammer x equal/unequal x theta 0.1,1,5 mW), max {max(zs):.2f}se"
    return emit(3, not res.violations, detail + ("" if not res.violations else f"; {res.violations}"))


# ---------------------------------------------------------------- 4

def criterion_4():
    ok, viol, gaps = True, [], {}
    for alpha in (0.2, 0.4, 0.6):
        for rho_db in (30.0, 40.0, 50.0, 60.0):
            p = rho_params(rho_db, alpha=alpha)
            ls = derive_link_stats(p)
            mc = mc_essr_many(list(Scenario), p, N_BLOCKS, seed=40)
            for sc in Scenario:
                lb = essr_with_outage(sc, ls).value
                if lb > mc[sc].mean + 3 * mc[sc].stderr:
                    viol.append(f"{sc.value}/{rho_db:g}dB/a{alpha}")
                gaps[sc, alpha, rho_db] = (mc[sc].mean - lb, 1 - lb / mc[sc].mean if mc[sc].mean > 0 else 1.0)
    ok &= not viol
    tight = []
    for sc in (Scenario.WOJ, Scenario.FJ):
        for alpha in (0.2, 0.4, 0.6):
            (a30, r30), (a60, r60) = gaps[sc, alpha, 30.0], gaps[sc, alpha, 60.0]
            ok &= r60 < r30
            tight.append(f"{sc.value} a{alpha}: rel {r30:.3f}->{r60:.3f} (abs {a30:.4f}->{a60:.4f})")
    detail = (f"LB<=MC+3se at 36 points{'' if not viol else ' except ' + ','.join(viol)}; "
              f"gap 30->60 dB, relative 1-LB/MC: " + "; ".join(tight))
    return emit(4, ok, detail)


# ---------------------------------------------------------------- 5

ALPHA_TARGETS = {Scenario.WOJ: 0.63, Scenario.FJ: 0.36, Scenario.GNJ: 0.14}


def criterion_5():
    grid = [round(0.02 * k, 2) for k in range(1, 50)]
    curves = {sc: [] for sc in Scenario}
    for a in grid:
        est = mc_essr_many(list(Scenario), SystemParams(alpha=a), N_BLOCKS, seed=50)
        for sc in Scenario:
            curves[sc].append(est[sc].mean)
    ok, parts = True, []
    for sc, target in ALPHA_TARGETS.items():
        arg = grid[int(np.argmax(curves[sc]))]
        hit = abs(arg - target) <= 0.05 + 1e-12
        ok &= hit
        parts.append(f"{sc.value} argmax {arg:.2f} (target {target}, {'ok' if hit else 'off'}; "
                     f"peak {max(curves[sc]):.4f})")
    return emit(5, ok, "; ".join(parts))


# ---------------------------------------------------------------- 6

def criterion_6():
    rhos = np.arange(50.0, 70.0 + 1e-9, 2.5)
    x = rhos / (10 * math.log10(2))
    slopes, parts, ok = {}, [], True
    for sc in (Scenario.WOJ, Scenario.FJ):
        y = [essr_with_outage(sc, derive_link_stats(rho_params(r, theta_dbm=-90.0))).value for r in rhos]
        fit = float(np.polyfit(x, y, 1)[0])
        target = high_snr_slope(sc, derive_link_stats(rho_params(60.0, theta_dbm=-90.0)))
        slopes[sc] = fit
        ok &= abs(fit / target - 1) < 0.10
        parts.append(f"{sc.value} fitted {fit:.4f} vs S_inf {target:.4f}")
    ratio = slopes[Scenario.FJ] / slopes[Scenario.WOJ]
    ok &= abs(ratio / 2 - 1) < 0.10
    return emit(6, ok, "; ".join(parts) + f"; FJ/WoJ ratio {ratio:.3f}")


# ---------------------------------------------------------------- 7

def criterion_7():
    g = {r: mc_essr_many([Scenario.GNJ], rho_params(r), N_BLOCKS, seed=70)[Scenario.GNJ] for r in (60.0, 80.0)}
    diff = g[80.0].mean - g[60.0].mean
    no_outage = derive_link_stats(SystemParams(theta_dbm=-math.inf))
    s = high_snr_slope(Scenario.GNJ, no_outage)
    ok = diff < 0.1 and s == 0.0
    return emit(7, ok, f"GNJ MC 60 dB {g[60.0].mean:.4f}, 80 dB {g[80.0].mean:.4f}, diff {diff:.4f}; "
                       f"slope with P_J=0: {s!r}")


# ---------------------------------------------------------------- 8

def criterion_8():
    e = mc_essr_many(list(Scenario), rho_params(50.0), N_BLOCKS, seed=80)
    f, w, g = e[Scenario.FJ], e[Scenario.WOJ], e[Scenario.GNJ]
    z_fw = (f.mean - w.mean) / math.hypot(f.stderr, w.stderr)
    z_wg = (w.mean - g.mean) / math.hypot(w.stderr, g.stderr)
    ok = z_fw > 3 and z_wg > 3
    return emit(8, ok, f"FJ {f.mean:.4f} > WoJ {w.mean:.4f} ({z_fw:.0f} se) > GNJ {g.mean:.4f} ({z_wg:.1f} se)")


# ---------------------------------------------------------------- 9

def criterion_9():
    with tempfile.TemporaryDirectory() as d:
        _, pa = run_validate(Path(d) / "a")
        _, pb = run_validate(Path(d) / "b")
        same = all(a.read_bytes() == b.read_bytes() for a, b in zip(pa, pb))
        names = [a.name for a in pa]
    n = 3 * CHUNK + 17
    ref = mc_essr_many(list(Scenario), DEFAULTS, n, seed=90, workers=1)
    inv = all(mc_essr_many(list(Scenario), DEFAULTS, n, seed=90, workers=w)[sc] == ref[sc]
              for w in (2, 3) for sc in Scenario)
    return emit(9, same and inv, f"validate artifacts byte-identical: {same} ({', '.join(names)}); "
                                 f"worker count 1/2/3 invariant: {inv}")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.slow
@pytest.mark.parametrize("crit", CRITERIA, ids=[f"criterion_{i}" for i in range(1, 10)])
def test_criterion(crit):
    ok, line = crit()
    assert ok, line


if __name__ == "__main__":
    results = [c()[0] for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
