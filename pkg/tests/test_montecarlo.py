import math

import numpy as np
import pytest

from relaysec.analysis import power_outage_prob
from relaysec.montecarlo import (CHUNK, block_rates, mc_essr, mc_essr_many, mc_expectation,
                                 mc_power_outage, _channel_chunk)
from relaysec.specfun import EULER_GAMMA, lower_incomplete_gamma
from relaysec.system import Scenario, SystemParams, derive_link_stats

P = SystemParams()


def test_golden_fj_50db():
    # frozen from the first verified run: 1e7 blocks, seed 50
    e = mc_essr(Scenario.FJ, P, 10_000_000, seed=50)
    assert e.mean == 2.1876091082298803
    assert e.stderr == pytest.approx(0.00033631325831807665, rel=1e-9)


def test_worker_count_invariance(monkeypatch):
    n = 3 * CHUNK + 123
    ref = mc_essr_many(list(Scenario), P, n, seed=9, workers=1)
    for w in (2, 4):
        got = mc_essr_many(list(Scenario), P, n, seed=9, workers=w)
        assert all(got[s].mean == ref[s].mean and got[s].stderr == ref[s].stderr for s in Scenario)
    monkeypatch.setenv("RELAYSEC_WORKERS", "3")
    got = mc_essr_many(list(Scenario), P, n, seed=9)
    assert all(got[s].mean == ref[s].mean for s in Scenario)


def test_rerun_bit_identical():
    a = mc_essr(Scenario.GNJ, P, 50_000, seed=1)
    b = mc_essr(Scenario.GNJ, P, 50_000, seed=1)
    assert a == b


def test_stderr_scales_as_inverse_sqrt_n():
    se = [mc_essr(Scenario.FJ, P, n, seed=12).stderr for n in (10_000, 100_000, 1_000_000)]
    for a, b in zip(se, se[1:]):
        assert a / b == pytest.approx(math.sqrt(10), rel=0.2)


def test_fj_rate_dominates_gnj_per_block():
    ls = derive_link_stats(P)
    real = _channel_chunk(ls, 4, 0, 100_000)
    for eps in ("exact", "high_snr"):
        r = block_rates([Scenario.FJ, Scenario.GNJ], real, ls, eps)
        assert np.all(r[Scenario.FJ] >= r[Scenario.GNJ])


def test_eps_modes_agree_at_high_snr():
    for rho_db in (40, 60):
        p = rho_db + P.n0_dbm - 30
        params = SystemParams(p_s1_dbw=p, p_s2_dbw=p)
        for sc in Scenario:
            a = mc_essr(sc, params, 200_000, seed=2, eps_mode="exact")
            b = mc_essr(sc, params, 200_000, seed=2, eps_mode="high_snr")
            assert abs(a.mean - b.mean) < 3 * math.hypot(a.stderr, b.stderr)


def test_fj_collapses_to_woj_without_jammer():
    params = SystemParams(theta_dbm=-300.0, d_s1j=1e6, d_s2j=1e6)
    est = mc_essr_many([Scenario.WOJ, Scenario.FJ], params, 100_000, seed=3)
    w, f = est[Scenario.WOJ], est[Scenario.FJ]
    assert abs(w.mean - f.mean) < 3 * math.hypot(w.stderr, f.stderr)


def test_alpha_to_one_gives_zero():
    e = mc_essr(Scenario.FJ, SystemParams(alpha=1 - 1e-9), 10_000, seed=0)
    assert e.mean < 1e-8


def test_operational_composition_recorded_gap():
    # with a 1 mW threshold the two compositions coincide to within noise
    est_p = mc_essr_many(list(Scenario), P, 200_000, seed=8, composition="paper")
    est_o = mc_essr_many(list(Scenario), P, 200_000, seed=8, composition="operational")
    for s in Scenario:
        assert abs(est_p[s].mean - est_o[s].mean) < 3 * est_p[s].stderr
        assert est_o[s].composition == "operational"


def test_operational_composition_exceeds_paper_with_large_threshold():
    # outage removes weak-channel blocks whose rate is small anyway, so the
    # independence assumption behind the paper composition underestimates
    params = SystemParams(theta_dbm=25.0)
    est_p = mc_essr_many(list(Scenario), params, 200_000, seed=8, composition="paper")
    est_o = mc_essr_many(list(Scenario), params, 200_000, seed=8, composition="operational")
    for s in Scenario:
        assert est_o[s].mean - est_p[s].mean > 3 * math.hypot(est_p[s].stderr, est_o[s].stderr)


def test_invalid_arguments():
    with pytest.raises(ValueError):
        mc_essr(Scenario.FJ, P, 9_999)
    with pytest.raises(ValueError):
        mc_essr(Scenario.FJ, P, 10_000, composition="mixed")
    with pytest.raises(ValueError):
        mc_essr(Scenario.FJ, P, 10_000, eps_mode="approx")
    with pytest.raises(ValueError):
        mc_power_outage("relay", P, 100)
    with pytest.raises(ValueError):
        mc_expectation("ln_x", (1.0,), 10_000)
    with pytest.raises(ValueError):
        mc_expectation("ln_y", (1.0,), 100_000)
    with pytest.raises(ValueError):
        mc_expectation("ln_sum", (1.0,), 100_000)


# ---- outage oracle

def test_outage_zero_threshold():
    e = mc_power_outage("relay", SystemParams(theta_dbm=-math.inf), 100_000, seed=1)
    assert e.mean == 0.0 and e.stderr > 0


@pytest.mark.parametrize("node", ["relay", "jammer"])
def test_outage_equal_means_matches_upsilon(node):
    params = SystemParams(theta_dbm=10.0)
    ls = derive_link_stats(params)
    gbar = ls.gbar_1r if node == "relay" else ls.gbar_1j
    e = mc_power_outage(node, params, 1_000_000, seed=2)
    assert abs(e.mean - lower_incomplete_gamma(2, ls.theta / gbar)) < 3 * e.stderr


def test_outage_unequal_means_matches_closed_form():
    params = SystemParams(p_s2_dbw=6.0, theta_dbm=8.0)
    ls = derive_link_stats(params)
    e = mc_power_outage("relay", params, 1_000_000, seed=3)
    assert abs(e.mean - power_outage_prob("relay", ls)) < 3 * e.stderr


# ---- expectation oracle

def test_ln_x_unit_mean():
    e = mc_expectation("ln_x", (1.0,), 1_000_000, seed=1)
    assert abs(e.mean + EULER_GAMMA) < 3 * e.stderr


def test_inv_sum_rates_one_two():
    e = mc_expectation("inv_sum", (1.0, 0.5), 1_000_000, seed=1)
    assert abs(e.mean - 2 * math.log(2)) < 3 * e.stderr


def test_gamma_r_log_matches_relay_term():
    from relaysec.analysis import _e_ln1p_sum
    e = mc_expectation("gamma_r_log", (2.0, 5.0), 1_000_000, seed=6)
    assert abs(e.mean - _e_ln1p_sum(2.0, 5.0)) < 3 * e.stderr
