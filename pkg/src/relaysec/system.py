"""Physical model of the two-way untrusted relay network with an energy-harvesting jammer.

Powers are in watts, channel gains are |h|^2.  Block time is normalised to 1:
it cancels between the harvesting phase and the two transmission phases.
Every SNR function is written with numpy operations, so a realization may
hold scalars or equally shaped arrays.
"""
from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass

import numpy as np


class Scenario(str, enum.Enum):
    WOJ = "WoJ"
    FJ = "FJ"
    GNJ = "GNJ"

    @classmethod
    def parse(cls, name: "str | Scenario") -> "Scenario":
        if isinstance(name, cls):
            return name
        for sc in cls:
            if sc.value.lower() == str(name).lower():
                return sc
        raise ValueError(f"unknown scenario {name!r}; expected one of {[s.value for s in cls]}")

    def __str__(self):
        return self.value


ALPHA_MIN, ALPHA_MAX = 1e-4, 1.0 - 1e-4


def dbw_to_watt(x: float) -> float:
    return 10.0 ** (x / 10.0)


def dbm_to_watt(x: float) -> float:
    return 10.0 ** ((x - 30.0) / 10.0)


def watt_to_dbw(p: float) -> float:
    return 10.0 * math.log10(p)


def watt_to_dbm(p: float) -> float:
    return 10.0 * math.log10(p) + 30.0


@dataclass(frozen=True)
class SystemParams:
    """One operating point.  Defaults are the reference configuration.

    alpha has no reference value; 0.5 is used unless a sweep sets it.
    """

    p_s1_dbw: float = 10.0
    p_s2_dbw: float = 10.0
    eta: float = 0.7
    alpha: float = 0.5
    theta_dbm: float = 0.0
    n0_dbm: float = -10.0
    d_s1r: float = 3.0
    d_s2r: float = 3.0
    d_s1j: float = 3.0
    d_s2j: float = 3.0
    d_rj: float = 3.0
    kappa: float = 2.7
    block_time: float = 1.0

    def __post_init__(self):
        problems = self.violations()
        if problems:
            raise ValueError("invalid SystemParams: " + "; ".join(problems))

    def violations(self) -> list[str]:
        out = []
        if not 0.0 < self.alpha < 1.0:
            out.append(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.eta < 1.0:
            out.append(f"eta must lie in (0, 1), got {self.eta}")
        for name in ("d_s1r", "d_s2r", "d_s1j", "d_s2j", "d_rj"):
            if not getattr(self, name) > 0:
                out.append(f"{name} must be > 0, got {getattr(self, name)}")
        if not self.kappa > 0:
            out.append(f"kappa must be > 0, got {self.kappa}")
        if not self.block_time > 0:
            out.append(f"block_time must be > 0, got {self.block_time}")
        for name in ("p_s1_dbw", "p_s2_dbw", "theta_dbm", "n0_dbm"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and (math.isfinite(v) or (name == "theta_dbm" and v == -math.inf))):
                out.append(f"{name} must be finite, got {v}")
        return out

    def replace(self, **kw) -> "SystemParams":
        return dataclasses.replace(self, **kw)


@dataclass(frozen=True)
class LinkStats:
    """Quantities derived from SystemParams that the formulas consume."""

    mu_s1r: float
    mu_s2r: float
    mu_s1j: float
    mu_s2j: float
    mu_rj: float
    beta: float
    xi: float
    rho: float
    p_s1: float
    p_s2: float
    theta: float
    n0: float
    alpha: float
    eta: float

    # mean received powers of the relay / jammer sums
    @property
    def gbar_1r(self) -> float:
        return self.p_s1 * self.mu_s1r

    @property
    def gbar_2r(self) -> float:
        return self.p_s2 * self.mu_s2r

    @property
    def gbar_1j(self) -> float:
        return self.p_s1 * self.mu_s1j

    @property
    def gbar_2j(self) -> float:
        return self.p_s2 * self.mu_s2j

    def with_alpha(self, alpha: float) -> "LinkStats":
        return dataclasses.replace(self, alpha=alpha, beta=(1 - alpha) / (2 * self.eta * alpha))

    def with_theta(self, theta_watt: float) -> "LinkStats":
        return dataclasses.replace(self, theta=theta_watt)


def derive_link_stats(params: SystemParams) -> LinkStats:
    k = params.kappa
    p_s1 = dbw_to_watt(params.p_s1_dbw)
    p_s2 = dbw_to_watt(params.p_s2_dbw)
    n0 = dbm_to_watt(params.n0_dbm)
    return LinkStats(
        mu_s1r=params.d_s1r ** -k,
        mu_s2r=params.d_s2r ** -k,
        mu_s1j=params.d_s1j ** -k,
        mu_s2j=params.d_s2j ** -k,
        mu_rj=params.d_rj ** -k,
        beta=(1.0 - params.alpha) / (2.0 * params.eta * params.alpha),
        xi=p_s1 / p_s2,
        rho=p_s2 / n0,
        p_s1=p_s1,
        p_s2=p_s2,
        theta=dbm_to_watt(params.theta_dbm),
        n0=n0,
        alpha=params.alpha,
        eta=params.eta,
    )


@dataclass(frozen=True)
class ChannelRealization:
    g_s1r: object
    g_s2r: object
    g_s1j: object
    g_s2j: object
    g_rj: object

    @classmethod
    def from_array(cls, g: np.ndarray) -> "ChannelRealization":
        """Build from a (5, n) array of gains ordered s1r, s2r, s1j, s2j, rj."""
        return cls(*g)


@dataclass(frozen=True)
class SnrTriple:
    gamma_s1: object
    gamma_s2: object
    gamma_r: object


@dataclass(frozen=True)
class HarvestedPowers:
    p_r_recv: object
    p_tr: object
    p_j_recv: object
    p_tj: object


def harvested_powers(real: ChannelRealization, ls: LinkStats) -> HarvestedPowers:
    p_r = ls.p_s1 * np.asarray(real.g_s1r) + ls.p_s2 * np.asarray(real.g_s2r)
    p_j = ls.p_s1 * np.asarray(real.g_s1j) + ls.p_s2 * np.asarray(real.g_s2j)
    return HarvestedPowers(p_r, p_r / ls.beta, p_j, p_j / ls.beta)


def snr_triple(sc: Scenario, real: ChannelRealization, ls: LinkStats,
               high_snr: bool = False) -> SnrTriple:
    """End-to-end SNRs at both sources and the relay's SNR for one scenario.

    The relay-side epsilon term N0^2 beta / P_R is dropped when high_snr is set.
    """
    sc = Scenario.parse(sc)
    g1r = np.asarray(real.g_s1r, dtype=float)
    g2r = np.asarray(real.g_s2r, dtype=float)
    hp = harvested_powers(real, ls)
    n0, beta = ls.n0, ls.beta
    p_r = hp.p_r_recv
    with np.errstate(divide="ignore", invalid="ignore"):
        eps = 0.0 if high_snr else n0 * n0 * beta / p_r
        den2 = n0 * g2r + n0 * beta + eps
        den1 = n0 * g1r + n0 * beta + eps
        if sc is Scenario.WOJ:
            gamma_r = p_r / n0
        else:
            g_rj = np.asarray(real.g_rj, dtype=float)
            gamma_r = p_r / (hp.p_tj * g_rj + n0)
            leak = n0 * hp.p_j_recv * g_rj / p_r
            den2 = den2 + leak
            den1 = den1 + leak
            if sc is Scenario.GNJ:
                den2 = den2 + hp.p_j_recv * g2r * g_rj / beta
                den1 = den1 + hp.p_j_recv * g1r * g_rj / beta
        gamma_s2 = ls.p_s1 * np.asarray(real.g_s1r) * g2r / den2
        gamma_s1 = ls.p_s2 * g2r * g1r / den1
    # P_R = 0 means nothing was received or harvested
    gamma_s2 = np.where(p_r > 0, gamma_s2, 0.0)
    gamma_s1 = np.where(p_r > 0, gamma_s1, 0.0)
    return SnrTriple(_scalar(gamma_s1), _scalar(gamma_s2), _scalar(gamma_r))


def relay_gain(sc: Scenario, real: ChannelRealization, ls: LinkStats):
    """Amplification factor G with G^2 (input power + N0) = P_TR."""
    sc = Scenario.parse(sc)
    hp = harvested_powers(real, ls)
    denom = hp.p_r_recv + ls.n0
    if sc is not Scenario.WOJ:
        denom = denom + hp.p_tj * np.asarray(real.g_rj)
    return _scalar(np.sqrt(hp.p_tr / denom))


def snr_triple_from_gain(sc: Scenario, real: ChannelRealization, ls: LinkStats) -> SnrTriple:
    """Source SNRs straight from the amplified received signal, before simplification.

    The jamming component is removed at the sources for FJ and counted as
    interference for GNJ; the relay SNR is the same as in :func:`snr_triple`.
    """
    sc = Scenario.parse(sc)
    hp = harvested_powers(real, ls)
    g = np.asarray(relay_gain(sc, real, ls), dtype=float)
    g2 = g * g
    g1r = np.asarray(real.g_s1r, dtype=float)
    g2r = np.asarray(real.g_s2r, dtype=float)
    n0 = ls.n0
    jam2 = jam1 = 0.0
    if sc is Scenario.GNJ:
        g_rj = np.asarray(real.g_rj, dtype=float)
        jam2 = g2 * hp.p_tj * g_rj * g2r
        jam1 = g2 * hp.p_tj * g_rj * g1r
    gamma_s2 = ls.p_s1 * g2 * g1r * g2r / (g2 * g2r * n0 + n0 + jam2)
    gamma_s1 = ls.p_s2 * g2 * g2r * g1r / (g2 * g1r * n0 + n0 + jam1)
    gamma_r = snr_triple(sc, real, ls).gamma_r
    return SnrTriple(_scalar(gamma_s1), _scalar(gamma_s2), gamma_r)


def instantaneous_secrecy_sum_rate(snr: SnrTriple, alpha: float):
    """[(1-alpha)/2 log2((1+g_s1)(1+g_s2)/(1+g_r))]^+ in bits/s/Hz."""
    val = (1.0 - alpha) / 2.0 * (np.log1p(snr.gamma_s1) + np.log1p(snr.gamma_s2)
                                 - np.log1p(snr.gamma_r)) / math.log(2.0)
    return _scalar(np.maximum(val, 0.0))


def _scalar(x):
    x = np.asarray(x)
    return float(x) if x.ndim == 0 else x
