"""Closed-form results: helper outage, ESSR lower bounds, and high-SNR asymptotics.

Everything is computed in nats; the (1 - alpha)/(2 ln 2) pre-log is applied
once at the end of each rate expression.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import mpmath as mp

from .specfun import (EULER_GAMMA, IntegrationError, SeriesControl, bessel_k,
                      ei_scaled, integrate, lambda_coeff_exact)
from .stochastic import (ExpPair, e_ln_exp, e_ln_sum, near_equal,
                         sum_exp_cdf, symmetric_average)
from .system import LinkStats, Scenario

LN2 = math.log(2.0)
PHI = EULER_GAMMA
MODES = ("oracle", "paper_faithful")
# the ci/si inner sums lose about a digits at argument a; past this, quadrature only
SERIES_MAX_ARG = 200.0


@dataclass(frozen=True)
class MeanSet:
    m_x: float
    m_y: float
    m_z: float
    m_w: float
    m_u: float

    def __post_init__(self):
        for name in ("m_x", "m_y", "m_z", "m_w", "m_u"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


def relay_term_means(ls: LinkStats) -> MeanSet:
    """Means of X, Y (source SNRs at the relay), Z, W (jammer harvest over beta N0) and U."""
    return MeanSet(ls.gbar_1r / ls.n0, ls.gbar_2r / ls.n0,
                   ls.gbar_1j / (ls.beta * ls.n0), ls.gbar_2j / (ls.beta * ls.n0), ls.mu_rj)


def channel_means(ls: LinkStats) -> MeanSet:
    """Plain link means, as used by the high-SNR expansion."""
    return MeanSet(ls.mu_s1r, ls.mu_s2r, ls.mu_s1j, ls.mu_s2j, ls.mu_rj)


@dataclass(frozen=True)
class ClosedFormEssr:
    scenario: Scenario
    value: float
    components: tuple
    outage_weights: tuple
    flags: tuple = ()
    active_values: dict = field(default_factory=dict)

    @property
    def value_bits_per_s_hz(self) -> float:
        return self.value


# ------------------------------------------------------------- outage

def power_outage_prob(node: str, ls: LinkStats) -> float:
    """Probability that the relay's or jammer's received power is below the EH threshold."""
    if node == "relay":
        m1, m2 = ls.gbar_1r, ls.gbar_2r
    elif node == "jammer":
        m1, m2 = ls.gbar_1j, ls.gbar_2j
    else:
        raise ValueError(f"node must be 'relay' or 'jammer', got {node!r}")
    if ls.theta <= 0:
        return 0.0
    return float(sum_exp_cdf(ls.theta, ExpPair(m1, m2)))


# ----------------------------------------------------------- script F

class FValue(NamedTuple):
    value: float
    path: str            # "series" or "quadrature"
    converged: bool      # series reached the tolerance
    n_terms: int
    error_estimate: float


def _lambda_mp(n: int, i: int):
    fr = lambda_coeff_exact(1, n, i)
    return mp.mpf(fr.numerator) / fr.denominator


def _g_minus_two(n: int, variant: str):
    if variant == "corrected":
        fr = Fraction(-18, 4 * n * n - 9) - 2
        return mp.mpf(fr.numerator) / fr.denominator
    return (-mp.mpf(9) / 2 * mp.gamma(n - mp.mpf(3) / 4) * mp.gamma(n + mp.mpf(3) / 2)
            / (mp.gamma(n - mp.mpf(1) / 2) * mp.gamma(n + mp.mpf(5) / 2)) - 2)


def _exp_rational_moments(a, n_max: int, variant: str) -> list:
    """J_i = int_0^inf e^{-a u} u^{i-1}/(1+u^2) du for i = 1..n_max, via the ci/si case form."""
    ci = mp.ci(a)
    si = mp.si(a) - mp.pi / 2
    c, s = mp.cos(a), mp.sin(a)
    even_base = ci * c + si * s
    odd_base = ci * s - si * c
    a2 = -a * a
    out = [None] * (n_max + 1)
    for i in range(1, n_max + 1):
        if i % 2 == 0:
            k = i // 2
            tail = mp.fsum(mp.factorial(2 * k - 2 * j - 1) * a2 ** (j - 1) for j in range(1, k))
            out[i] = (-1) ** k * even_base + tail / a ** (2 * k - 2)
        else:
            k = (i - 1) // 2
            if variant == "corrected":
                tail = mp.fsum(mp.factorial(2 * k - 2 * j) * a2 ** (j - 1) for j in range(1, k + 1))
            else:
                tail = mp.fsum(mp.factorial(2 * k - 2 * j) * a2 ** (2 * j - 1) for j in range(1, k + 1))
            out[i] = (-1) ** k * odd_base + tail / a ** (2 * k - 1)
    return out


def script_f_partial_sums(a: float, n_max: int, variant: str = "corrected") -> list[float]:
    """Partial sums S_1..S_{n_max} of the Lah/ci-si double series for F(a).

    The inner sums cancel by roughly 3^n, so they are carried out with
    mpmath at a working precision that grows with n_max and a.
    """
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    if a > SERIES_MAX_ARG:
        raise ValueError(f"series precision budget exceeded for a = {a} > {SERIES_MAX_ARG}")
    dps = 30 + int(0.55 * n_max) + int(0.9 * a)
    with mp.workdps(dps):
        A = mp.mpf(a)
        J = _exp_rational_moments(A, n_max, variant)
        T = [None] + [A ** (i - 2) * J[i] for i in range(1, n_max + 1)]
        total = mp.mpf(0)
        partial = []
        for n in range(1, n_max + 1):
            inner = mp.fsum(_lambda_mp(n, i) * T[i] for i in range(1, n + 1))
            total += 2 * _g_minus_two(n, variant) * inner
            partial.append(float(total))
    return partial


def _richardson(ns: list[int], values: list[float]) -> float:
    # S(N) = F + sum_{p=2}^{k+1} c_p N^{-p}
    k = len(ns)
    rows = [[1.0] + [float(n) ** -(p + 2) for p in range(k - 1)] for n in ns]
    return float(mp.lu_solve(mp.matrix(rows), mp.matrix(values))[0])


def script_f_series(a: float, n_max: int, variant: str = "corrected") -> tuple[float, float]:
    """Accelerated series value and an error estimate.

    Partial sums approach the limit like N^-2 with an oscillating tail, so the
    sums at N, N/2, N/4, N/8 are extrapolated with N^-2, N^-3, N^-4 terms.
    The estimate is the gap to the same extrapolation one level coarser.
    """
    partial = script_f_partial_sums(a, n_max, variant)
    if n_max < 16:
        last = partial[-1]
        prev = partial[max(0, n_max // 2 - 1)]
        return last, abs(last - prev)
    levels = []
    n = n_max
    while n >= 2 and len(levels) < 5:
        levels.append(n)
        n //= 2
    fine = levels[:4]
    coarse = levels[1:5] if len(levels) == 5 else levels[1:4]
    est = _richardson(fine, [partial[m - 1] for m in fine])
    est_coarse = _richardson(coarse, [partial[m - 1] for m in coarse])
    return est, abs(est - est_coarse)


def script_f_quadrature(a: float, rel_tol: float = 1e-12) -> float:
    """F(a) = int_0^1 K0(a sqrt(1/q - 1))/q dq = 2 int_0^inf t K0(t)/(a^2 + t^2) dt."""
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    a2 = a * a

    def f(t):
        return t * bessel_k(0, t) / (a2 + t * t) if t > 0 else 0.0

    pts = sorted({p for p in (0.1 * a, a, 10.0 * a, 1.0, 10.0, 40.0) if 0 < p < 700})
    return 2.0 * integrate(f, 0.0, 700.0, rel_tol=rel_tol, abs_tol=1e-300, points=pts)


def script_f(a: float, ctrl: SeriesControl = SeriesControl(), variant: str = "corrected") -> FValue:
    """F(a) from the series when it meets ctrl.rel_tol, otherwise from quadrature."""
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    n_max = int(ctrl.max_terms)
    try:
        value, err = script_f_series(a, n_max, variant)
    except (ZeroDivisionError, ValueError, OverflowError):
        value, err = math.nan, math.inf
    if math.isfinite(value) and err <= ctrl.rel_tol * abs(value):
        return FValue(value, "series", True, n_max, err)
    try:
        q = script_f_quadrature(a, rel_tol=max(ctrl.rel_tol, 1e-12))
    except IntegrationError as exc:
        raise IntegrationError(f"F({a}): series did not converge and quadrature failed: {exc}") from exc
    return FValue(q, "quadrature", False, n_max, err)


def expected_q(ms: MeanSet, ctrl: SeriesControl = SeriesControl(),
               variant: str = "corrected") -> tuple[float, tuple]:
    """E{1/((Z+W)U + 1)} = 2/((m_w - m_z) m_u) [F(2/sqrt(m_w m_u)) - F(2/sqrt(m_z m_u))]."""
    flags = []

    def eq(mz, mw, tight=False):
        c = ctrl if not tight else SeriesControl(rel_tol=1e-12, max_terms=ctrl.max_terms)
        f1 = script_f(2.0 / math.sqrt(mw * ms.m_u), c, variant)
        f2 = script_f(2.0 / math.sqrt(mz * ms.m_u), c, variant)
        flags.append(f"F:{f1.path}")
        flags.append(f"F:{f2.path}")
        return 2.0 / ((mw - mz) * ms.m_u) * (f1.value - f2.value)

    if near_equal(ms.m_z, ms.m_w, 1e-4):
        m = 0.5 * (ms.m_z + ms.m_w)
        val = symmetric_average(lambda mw: eq(m, mw, tight=True), m)
        flags.append("degenerate:m_z=m_w")
    else:
        val = eq(ms.m_z, ms.m_w)
    return val, tuple(sorted(set(flags)))


# ------------------------------------------------- active lower bounds

def _log_ratio_over_diff(a: float, b: float) -> float:
    """ln(a/b)/(a - b), i.e. E{1/(X+Y)} for means a, b."""
    def f(bb):
        return math.log1p((a - bb) / bb) / (a - bb)
    if near_equal(a, b):
        m = 0.5 * (a + b)
        return symmetric_average(lambda bb: math.log1p((m - bb) / bb) / (m - bb), m)
    return f(b)


def _e_ln1p_sum(a: float, b: float) -> float:
    """E{ln(1 + X + Y)} for exponential X, Y with means a, b."""
    def h(m):
        return -ei_scaled(-1.0 / m)      # E{ln(1+X)}, mean m

    def f(bb):
        return (a * h(a) - bb * h(bb)) / (a - bb)
    if near_equal(a, b):
        m = 0.5 * (a + b)
        return symmetric_average(lambda bb: (m * h(m) - bb * h(bb)) / (m - bb), m)
    return f(b)


def _softplus(x: float) -> float:
    return math.log1p(math.exp(x)) if x < 30 else x + math.log1p(math.exp(-x))


def essr_lb_active(sc: Scenario, ls: LinkStats, ctrl: SeriesControl = SeriesControl(),
                   f_variant: str = "corrected") -> ClosedFormEssr:
    """Lower bound on the ESSR with every helper active.

    components are (source-2 term, source-1 term, relay term) in nats,
    before the aggregate clip.
    """
    sc = Scenario.parse(sc)
    n0, beta = ls.n0, ls.beta
    mu_rs2, mu_rs1 = ls.mu_s2r, ls.mu_s1r
    flags: list[str] = []
    if sc is Scenario.WOJ:
        t1 = _softplus(-2 * PHI + math.log(ls.gbar_1r * mu_rs2 / (beta * n0)) + ei_scaled(-beta / mu_rs2))
        t2 = _softplus(-2 * PHI + math.log(ls.gbar_2r * mu_rs1 / (beta * n0)) + ei_scaled(-beta / mu_rs1))
        a, b = ls.gbar_1r / n0, ls.gbar_2r / n0
        if near_equal(a, b):
            flags.append("degenerate:gbar_1r=gbar_2r")
        t3 = _e_ln1p_sum(a, b)
    else:
        if near_equal(ls.gbar_1r, ls.gbar_2r):
            flags.append("degenerate:gbar_1r=gbar_2r")
        jam = (ls.gbar_1j + ls.gbar_2j) * _log_ratio_over_diff(ls.gbar_1r, ls.gbar_2r)
        k2_s2 = n0 * (mu_rs2 + beta + ls.mu_rj * jam)
        k2_s1 = n0 * (mu_rs1 + beta + ls.mu_rj * jam)
        if sc is Scenario.GNJ:
            k2_s2 += (ls.gbar_1j + ls.gbar_2j) * mu_rs2 * ls.mu_rj / beta
            k2_s1 += (ls.gbar_1j + ls.gbar_2j) * mu_rs1 * ls.mu_rj / beta
        k1_s2 = math.log(ls.p_s1 * ls.mu_s1r * ls.mu_s2r) - 2 * PHI
        k1_s1 = math.log(ls.p_s2 * ls.mu_s2r * ls.mu_s1r) - 2 * PHI
        t1 = _softplus(k1_s2 - math.log(k2_s2))
        t2 = _softplus(k1_s1 - math.log(k2_s1))
        ms = relay_term_means(ls)
        eq, qflags = expected_q(ms, ctrl, f_variant)
        flags.extend(qflags)
        t3 = math.log1p((ms.m_x + ms.m_y) * eq)
    pre = (1.0 - ls.alpha) / (2.0 * LN2)
    value = pre * max(0.0, t1 + t2 - t3)
    return ClosedFormEssr(sc, value, (t1, t2, t3), (0.0, 0.0), tuple(flags),
                          {sc.value: value})


def essr_with_outage(sc: Scenario, ls: LinkStats, ctrl: SeriesControl = SeriesControl(),
                     f_variant: str = "corrected") -> ClosedFormEssr:
    """Lower bound weighted by the helpers' power-outage probabilities."""
    sc = Scenario.parse(sc)
    p_r = power_outage_prob("relay", ls)
    woj = essr_lb_active(Scenario.WOJ, ls, ctrl, f_variant)
    if sc is Scenario.WOJ:
        value = (1.0 - p_r) * woj.value
        return ClosedFormEssr(sc, value, woj.components, (p_r, None), woj.flags,
                              {"WoJ": woj.value})
    p_j = power_outage_prob("jammer", ls)
    act = essr_lb_active(sc, ls, ctrl, f_variant)
    value = (1.0 - p_r) * (p_j * woj.value + (1.0 - p_j) * act.value)
    return ClosedFormEssr(sc, value, act.components, (p_r, p_j),
                          tuple(sorted(set(woj.flags + act.flags))),
                          {"WoJ": woj.value, sc.value: act.value})


# ---------------------------------------------------------- asymptotics

def _check_mode(mode: str):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")


def _woj_constant(cm: MeanSet, beta: float, xi: float, mode: str) -> tuple[float, bool]:
    e_sum, deg = e_ln_sum(cm.m_x, cm.m_y / xi, mode)
    c = (2 * math.log(cm.m_x * cm.m_y / beta) - 4 * PHI
         + ei_scaled(-beta / cm.m_x) + ei_scaled(-beta / cm.m_y) - e_sum)
    return c, deg


def _relay_log_constant(cm: MeanSet, beta: float, xi: float, mode: str) -> tuple[float, bool]:
    # J3 = E ln(X + Y/xi) - E ln(Z + W/xi) - E ln U + ln beta
    e_xy, d1 = e_ln_sum(cm.m_x, cm.m_y / xi, mode)
    e_zw, d2 = e_ln_sum(cm.m_z, cm.m_w / xi, mode)
    return e_xy - e_zw - e_ln_exp(cm.m_u) + math.log(beta), d1 or d2


def _fj_constant(cm: MeanSet, beta: float, xi: float, mode: str) -> tuple[float, bool]:
    jam = cm.m_u * (xi * cm.m_z + cm.m_w) * _log_ratio_over_diff(xi * cm.m_x, cm.m_y)
    d1 = beta + cm.m_x + jam
    d2 = beta + cm.m_y + jam
    j3, deg = _relay_log_constant(cm, beta, xi, mode)
    c = (2 * math.log(cm.m_x * cm.m_y) + math.log(xi) - 4 * PHI
         - math.log(d1) - math.log(d2) - j3)
    return c, deg or near_equal(xi * cm.m_x, cm.m_y)


def _gnj_active_level(cm: MeanSet, beta: float, xi: float, mode: str) -> tuple[float, bool]:
    """rho-independent value (nats) of the GNJ active asymptote."""
    j3, deg = _relay_log_constant(cm, beta, xi, mode)
    if mode == "paper_faithful":
        return math.log(beta * beta / (cm.m_x * cm.m_y)) - j3, deg
    # exact large-rho limit of the two source terms
    s = xi * cm.m_z + cm.m_w
    lim = math.log(xi * cm.m_x * cm.m_y * beta * beta / (cm.m_u * cm.m_u * s * s)) - 4 * PHI
    return lim - j3, deg


@dataclass(frozen=True)
class AsymptoticProfile:
    """Affine high-SNR asymptote  slope * log2(rho) + intercept, in bits/s/Hz."""

    scenario: Scenario
    slope_bits_per_s_hz: float
    intercept: float
    mode: str
    offset_override: float | None = None

    @property
    def offset_3db_units(self) -> float:
        if self.offset_override is not None:
            return self.offset_override
        if self.slope_bits_per_s_hz == 0:
            return math.inf
        return -self.intercept / self.slope_bits_per_s_hz

    def essr_at(self, rho: float) -> float:
        return self.slope_bits_per_s_hz * math.log2(rho) + self.intercept


def asymptotic_profile(sc: Scenario, ls: LinkStats, mode: str = "oracle") -> AsymptoticProfile:
    sc = Scenario.parse(sc)
    _check_mode(mode)
    cm = channel_means(ls)
    beta, xi = ls.beta, ls.xi
    pre = (1.0 - ls.alpha) / (2.0 * LN2)     # nats -> bits including the pre-log
    p_r = power_outage_prob("relay", ls)
    c_w, _ = _woj_constant(cm, beta, xi, mode)
    # WoJ active: pre (ln rho + c_w) = (1-alpha)/2 log2 rho + pre c_w
    w_slope, w_icpt = (1.0 - ls.alpha) / 2.0, pre * c_w
    if sc is Scenario.WOJ:
        return AsymptoticProfile(sc, (1 - p_r) * w_slope, (1 - p_r) * w_icpt, mode)
    p_j = power_outage_prob("jammer", ls)
    if sc is Scenario.FJ:
        c_f, _ = _fj_constant(cm, beta, xi, mode)
        a_slope, a_icpt = 1.0 - ls.alpha, pre * c_f
        override = None
    else:
        level, _ = _gnj_active_level(cm, beta, xi, mode)
        a_slope, a_icpt = 0.0, pre * level
        # printed conclusion: infinite offset unless the jammer never harvests
        override = math.inf if (mode == "paper_faithful" and p_j < 1.0) else None
    slope = (1 - p_r) * (p_j * w_slope + (1 - p_j) * a_slope)
    icpt = (1 - p_r) * (p_j * w_icpt + (1 - p_j) * a_icpt)
    return AsymptoticProfile(sc, slope, icpt, mode, override)


def asymptotic_essr(sc: Scenario, ls: LinkStats, rho: float | None = None,
                    mode: str = "oracle", clip: bool = False) -> float:
    """High-SNR asymptote of the outage-weighted ESSR at transmit SNR rho.

    rho defaults to the operating point's P_S2/N0.  The value is an
    asymptote, not a rate, and may be negative unless clip is set.
    """
    prof = asymptotic_profile(sc, ls, mode)
    val = prof.essr_at(ls.rho if rho is None else rho)
    return max(0.0, val) if clip else val


def high_snr_slope(sc: Scenario, ls: LinkStats) -> float:
    sc = Scenario.parse(sc)
    p_r = power_outage_prob("relay", ls)
    if sc is Scenario.WOJ:
        return (1.0 - p_r) * (1.0 - ls.alpha) / 2.0
    p_j = power_outage_prob("jammer", ls)
    if sc is Scenario.FJ:
        return (1.0 - p_r) * (1.0 - p_j / 2.0) * (1.0 - ls.alpha)
    return p_j * (1.0 - p_r) * (1.0 - ls.alpha) / 2.0


def high_snr_offset(sc: Scenario, ls: LinkStats, mode: str = "oracle") -> float:
    """Power offset in 3 dB units; +inf when the slope vanishes."""
    return asymptotic_profile(sc, ls, mode).offset_3db_units


def fj_active_offset_printed(ls: LinkStats, mode: str = "paper_faithful") -> float:
    """Offset of the FJ asymptote with the jammer always active, term by term as displayed."""
    cm = channel_means(ls)
    beta, xi = ls.beta, ls.xi
    jam = (xi * cm.m_z + cm.m_w) * cm.m_u * _log_ratio_over_diff(xi * cm.m_x, cm.m_y)
    e_xy, _ = e_ln_sum(cm.m_x, cm.m_y / xi, mode)
    e_zw, _ = e_ln_sum(cm.m_z, cm.m_w / xi, mode)
    return (math.log(beta / (xi * cm.m_x ** 2 * cm.m_y ** 2 * cm.m_u)) + 5 * PHI
            + math.log(beta + cm.m_x + jam) + math.log(beta + cm.m_y + jam)
            + e_xy - e_zw) / (2 * LN2)


def woj_offset_printed(ls: LinkStats, mode: str = "paper_faithful") -> float:
    cm = channel_means(ls)
    beta, xi = ls.beta, ls.xi
    e_xy, _ = e_ln_sum(cm.m_x, cm.m_y / xi, mode)
    return ((4 * PHI - ei_scaled(-beta / cm.m_x) - ei_scaled(-beta / cm.m_y) + e_xy) / LN2
            - 2 * math.log2(cm.m_x * cm.m_y / beta))


__all__ = [
    "ClosedFormEssr", "MeanSet", "FValue", "AsymptoticProfile", "relay_term_means",
    "channel_means", "power_outage_prob", "script_f", "script_f_series",
    "script_f_quadrature", "script_f_partial_sums", "expected_q", "essr_lb_active",
    "essr_with_outage", "asymptotic_profile", "asymptotic_essr", "high_snr_slope",
    "high_snr_offset", "fj_active_offset_printed", "woj_offset_printed"
]
