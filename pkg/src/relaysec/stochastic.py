"""Random channel gains and the distribution laws built on exponential variables.

Sampling is counter based (Philox).  A stream is keyed by (seed, stream_id);
:func:`block_exponentials` additionally ties every simulated block to its own
counter window, so block ``b`` always sees the same five variates no matter
how the blocks are split across chunks or workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .specfun import (EULER_GAMMA, DomainError, bessel_k, ei_scaled, integrate,
                      lower_incomplete_gamma)

# relative offset used to side-step equal-parameter singularities
EQUAL_STEP = 1e-6

_MASK64 = (1 << 64) - 1
# Philox emits 4 words per counter step; a block owns 2 steps = 8 words
_WORDS_PER_BLOCK = 8


def _philox(seed: int, stream_id: int, counter: int = 0) -> np.random.Philox:
    if not (0 <= seed <= _MASK64 and 0 <= stream_id <= _MASK64):
        raise ValueError("seed and stream_id must be 64-bit unsigned integers")
    key = np.array([seed, stream_id], dtype=np.uint64)
    return np.random.Philox(key=key, counter=counter)


@dataclass
class RngStream:
    """A reproducible random stream. Draws continue where the last one stopped."""

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator | None = field(default=None, init=False, repr=False, compare=False)

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            self._gen = np.random.Generator(_philox(self.seed, self.stream_id))
        return self._gen


@dataclass(frozen=True)
class ExpPair:
    m1: float
    m2: float

    def __post_init__(self):
        if not (self.m1 > 0 and self.m2 > 0):
            raise DomainError(f"exponential means must be positive, got {self.m1}, {self.m2}")


def exp_sample(mean: float, rng: RngStream, size=None):
    """Exponential variate(s) with the given mean."""
    if not mean > 0:
        raise DomainError(f"mean must be positive, got {mean}")
    return mean * rng.generator.standard_exponential(size)


def block_exponentials(seed: int, stream_id: int, start: int, count: int, k: int = 5) -> np.ndarray:
    """Unit-mean exponentials of shape (k, count) for blocks start..start+count-1.

    Block b reads counter words [8b, 8b+8) of the (seed, stream_id) stream,
    so any partition of the block range gives the same variates.
    """
    if not 1 <= k <= _WORDS_PER_BLOCK:
        raise ValueError(f"at most {_WORDS_PER_BLOCK} variates per block")
    bg = _philox(seed, stream_id, counter=2 * start)
    raw = bg.random_raw(_WORDS_PER_BLOCK * count).reshape(count, _WORDS_PER_BLOCK)[:, :k]
    u = (raw >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)
    return -np.log1p(-u).T


# ------------------------------------------------------------ helpers

def near_equal(a: float, b: float, tol: float = EQUAL_STEP) -> bool:
    return abs(a - b) <= tol * max(abs(a), abs(b))


def symmetric_average(fn: Callable[[float], float], m: float) -> float:
    """Mean of fn at m(1 +/- EQUAL_STEP); the first-order error cancels."""
    return 0.5 * (fn(m * (1.0 + EQUAL_STEP)) + fn(m * (1.0 - EQUAL_STEP)))


# ------------------------------------------- sum of two exponentials (S)

def sum_exp_pdf(s, p: ExpPair):
    """Density of S = X + Y with X, Y exponential of means p.m1, p.m2."""
    s = np.asarray(s, dtype=float)
    m1, m2 = p.m1, p.m2
    if m1 == m2:
        out = s / (m1 * m1) * np.exp(-s / m1)
    else:
        # (e^{-s/m1} - e^{-s/m2})/(m1 - m2) without cancellation or overflow
        lo, hi = min(m1, m2), max(m1, m2)
        out = np.exp(-s / hi) * -np.expm1(-s * ((hi - lo) / (lo * hi))) / (hi - lo)
    out = np.where(s > 0, out, 0.0)
    return out[()] if out.ndim == 0 else out


def sum_exp_cdf(s, p: ExpPair):
    """Distribution function of S = X + Y."""
    s = np.asarray(s, dtype=float)
    m1, m2 = p.m1, p.m2
    pos = np.where(s > 0, s, 0.0)
    if m1 == m2:
        out = np.vectorize(lambda v: lower_incomplete_gamma(2.0, v / m1), otypes=[float])(pos)
    else:
        out = -np.expm1(-pos / m1) - m2 * sum_exp_pdf(pos, p)
    out = np.clip(np.where(s > 0, out, 0.0), 0.0, 1.0)
    return out[()] if out.ndim == 0 else out


# ------------------------------------------ reciprocal of the sum (Z)

def _check_rates(lx: float, ly: float):
    if not (lx > 0 and ly > 0):
        raise DomainError(f"rates must be positive, got {lx}, {ly}")


def inv_sum_exp_mean(lambda_x: float, lambda_y: float) -> float:
    """E{1/(X+Y)} for exponential X, Y with the given rates."""
    _check_rates(lambda_x, lambda_y)
    if near_equal(lambda_x, lambda_y):
        m = 0.5 * (lambda_x + lambda_y)
        return symmetric_average(lambda ly: _inv_sum_mean(m, ly), m)
    return _inv_sum_mean(lambda_x, lambda_y)


def _inv_sum_mean(lx: float, ly: float) -> float:
    d = ly - lx
    # ln(ly/lx)/(ly - lx), via log1p to stay accurate for close rates
    return lx * ly * math.log1p(d / lx) / d


def inv_sum_exp_pdf(z, lambda_x: float, lambda_y: float):
    """Density of Z = 1/(X+Y)."""
    _check_rates(lambda_x, lambda_y)
    z = np.asarray(z, dtype=float)
    pair = ExpPair(1.0 / lambda_x, 1.0 / lambda_y)
    with np.errstate(divide="ignore"):
        inv = np.where(z > 0, 1.0 / np.where(z > 0, z, 1.0), 0.0)
    out = np.where(z > 0, sum_exp_pdf(inv, pair) * inv * inv, 0.0)
    return out[()] if out.ndim == 0 else out


def inv_sum_exp_cdf(z, lambda_x: float, lambda_y: float):
    """Distribution function of Z = 1/(X+Y)."""
    _check_rates(lambda_x, lambda_y)
    z = np.asarray(z, dtype=float)
    pair = ExpPair(1.0 / lambda_x, 1.0 / lambda_y)
    inv = np.where(z > 0, 1.0 / np.where(z > 0, z, 1.0), 0.0)
    out = np.where(z > 0, 1.0 - sum_exp_cdf(inv, pair), 0.0)
    return out[()] if out.ndim == 0 else out


# ------------------------------------------------ Q = 1/((Z+W)U + 1)

def _check_means(*ms):
    for m in ms:
        if not m > 0:
            raise DomainError(f"means must be positive, got {ms}")


def _q_tail_term(t: float, m: float, mu: float) -> float:
    # int_0^inf e^{-s/m - t/(mu s)} ds / m = 2 sqrt(t/(m mu)) K1(2 sqrt(t/(m mu)))
    c = 2.0 * math.sqrt(t / (m * mu))
    if c > 1400.0:
        return 0.0
    return c * bessel_k(1, c)


def _q_cdf_unequal(q: float, mz: float, mw: float, mu: float) -> float:
    t = 1.0 / q - 1.0
    if t == 0.0:
        return 1.0
    # P(Q <= q) = P(SU >= t) = E_S[e^{-t/(S mu)}]
    return (mz * _q_tail_term(t, mz, mu) - mw * _q_tail_term(t, mw, mu)) / (mz - mw)


def q_cdf(q: float, mz: float, mw: float, mu: float) -> float:
    """P(Q <= q) for Q = 1/((Z+W)U+1); Z, W, U exponential with means mz, mw, mu.

    The printed K1 form for this law evaluates to 0 at q = 1, i.e. it is the
    complementary probability P(Q > q); this returns one minus that form.
    """
    _check_means(mz, mw, mu)
    if q <= 0:
        return 0.0
    if q >= 1:
        return 1.0
    if near_equal(mz, mw):
        m = 0.5 * (mz + mw)
        val = symmetric_average(lambda mw_: _q_cdf_unequal(q, m, mw_, mu), m)
    else:
        val = _q_cdf_unequal(q, mz, mw, mu)
    return min(1.0, max(0.0, val))


def q_ccdf_printed(q: float, mz: float, mw: float, mu: float) -> float:
    """The K1 display for Q exactly as printed (equals P(Q > q))."""
    _check_means(mz, mw, mu)
    r = (1.0 - q) / q
    az = 2.0 * math.sqrt((1.0 - q) / (mz * mu * q))
    aw = 2.0 * math.sqrt((1.0 - q) / (mw * mu * q))
    tz = 2.0 * mz / (mu * (mw - mz)) * math.sqrt(mu * r / mz) * bessel_k(1, az)
    tw = 2.0 * mw / (mu * (mw - mz)) * math.sqrt(mu * r / mw) * bessel_k(1, aw)
    return 1.0 + tz - tw


def _q_pdf_unequal(q: float, mz: float, mw: float, mu: float) -> float:
    r = math.sqrt(1.0 / q - 1.0)
    kw = bessel_k(0, 2.0 * r / math.sqrt(mw * mu))
    kz = bessel_k(0, 2.0 * r / math.sqrt(mz * mu))
    return 2.0 * (kw - kz) / (q * q * (mw - mz) * mu)


def q_pdf(q: float, mz: float, mw: float, mu: float) -> float:
    """Density of Q on (0, 1); zero elsewhere (infinite at q = 1 is excluded)."""
    _check_means(mz, mw, mu)
    if q <= 0 or q >= 1:
        return 0.0
    if near_equal(mz, mw):
        m = 0.5 * (mz + mw)
        return symmetric_average(lambda mw_: _q_pdf_unequal(q, m, mw_, mu), m)
    return _q_pdf_unequal(q, mz, mw, mu)


# ------------------------------------------------- log expectations

class LogExpectations(NamedTuple):
    e_ln_x: float
    e_ln_x_plus_c: float
    e_ln_x_plus_cy: float
    degenerate: bool
    mode: str


def e_ln_exp(m: float) -> float:
    """E{ln X}, X exponential with mean m."""
    return math.log(m) - EULER_GAMMA


def e_ln_exp_plus_c(m: float, c: float) -> float:
    """E{ln(X + c)}, X exponential with mean m, c > 0."""
    return math.log(c) - ei_scaled(-c / m)


def _e_ln_sum_printed(a: float, b: float) -> float:
    return a * b / (a - b) * ((EULER_GAMMA + math.log(a)) / a - (EULER_GAMMA + math.log(b)) / b)


def _e_ln_sum_quadrature(a: float, b: float) -> float:
    pair = ExpPair(a, b)
    lo, hi = min(a, b), max(a, b)
    return integrate(lambda s: math.log(s) * float(sum_exp_pdf(s, pair)), 0.0, math.inf,
                     rel_tol=1e-11, abs_tol=1e-14, points=[lo, hi, 10.0 * hi, 60.0 * hi])


def e_ln_sum(a: float, b: float, mode: str = "oracle") -> tuple[float, bool]:
    """E{ln(X + Y)} for exponential X, Y with means a, b.

    ``oracle`` integrates ln(s) against the exact density of the sum.
    ``paper_faithful`` evaluates the printed closed form, which does not
    match the oracle (it has the logarithms crossed); kept for reproducing
    the printed asymptotic displays.  Returns (value, degenerate).
    """
    _check_means(a, b)
    degenerate = near_equal(a, b)
    if mode == "oracle":
        return _e_ln_sum_quadrature(a, b), degenerate
    if mode == "paper_faithful":
        if degenerate:
            m = 0.5 * (a + b)
            return symmetric_average(lambda b_: _e_ln_sum_printed(m, b_), m), True
        return _e_ln_sum_printed(a, b), False
    raise ValueError(f"unknown mode {mode!r}")


def lemma1_expectations(mx: float, my: float, c: float, mode: str = "oracle") -> LogExpectations:
    """E{ln X}, E{ln(X + c)}, E{ln(X + cY)} for exponential X, Y of means mx, my."""
    _check_means(mx, my)
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}")
    e3, degenerate = e_ln_sum(mx, c * my, mode)
    return LogExpectations(e_ln_exp(mx), e_ln_exp_plus_c(mx, c), e3, degenerate, mode)
