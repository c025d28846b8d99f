"""Special functions used by the closed-form rate expressions.

Everything here is scalar and pure: exponential integral on the negative
axis, lower incomplete gamma, K0/K1, the sine and cosine integrals, Lah
numbers, the Lah-expansion coefficients of K_nu, and a truncated series
for K0 built from those coefficients.  The only borrowed piece is the
adaptive quadrature in :func:`integrate`, which the test-suite uses as the
reference for all of the above.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Sequence

from scipy import integrate as _quad

EULER_GAMMA = 0.57721566490153286061

_EPS = 1e-16
_FPMIN = 1e-300
_MAXIT = 10_000


class DomainError(ValueError):
    pass


class IntegrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SeriesControl:
    """Truncation policy for the infinite series in this package."""

    rel_tol: float = 1e-10
    max_terms: int = 40

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be > 0, got {self.rel_tol}")
        if int(self.max_terms) != self.max_terms or self.max_terms < 1:
            raise ValueError(f"max_terms must be a positive integer, got {self.max_terms}")


class SeriesResult(NamedTuple):
    value: float
    converged: bool
    n_terms: int


# ---------------------------------------------------------------- Ei / E1

def _e1_scaled(z: float) -> float:
    """exp(z) * E1(z) for z > 0."""
    if z <= 1.0:
        total, term, k = 0.0, 1.0, 0
        while True:
            k += 1
            term *= -z / k
            inc = term / k
            total += inc
            if abs(inc) < _EPS * abs(total) or k > _MAXIT:
                break
        return math.exp(z) * (-EULER_GAMMA - math.log(z) - total)
    # modified Lentz on the E1 continued fraction
    b = z + 1.0
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAXIT):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise IntegrationError(f"E1 continued fraction did not converge at z={z}")


def exp_integral_ei(x: float) -> float:
    """Ei(x) = -int_{-x}^inf e^{-t}/t dt, for x < 0 only."""
    if not x < 0:
        raise DomainError(f"exp_integral_ei needs x < 0, got {x}")
    z = -x
    if z > 745.0:
        return -0.0
    return -_e1_scaled(z) * math.exp(-z)


def ei_scaled(x: float) -> float:
    """exp(-x) * Ei(x) for x < 0, i.e. the e^{c}Ei(-c) combination with c = -x.

    Stays finite where Ei itself underflows.
    """
    if not x < 0:
        raise DomainError(f"ei_scaled needs x < 0, got {x}")
    return -_e1_scaled(-x)


# ------------------------------------------------------ incomplete gamma

def lower_incomplete_gamma(s: float, x: float) -> float:
    """Upsilon(s, x) = int_0^x t^{s-1} e^{-t} dt."""
    if not s > 0:
        raise DomainError(f"lower_incomplete_gamma needs s > 0, got {s}")
    if not x >= 0:
        raise DomainError(f"lower_incomplete_gamma needs x >= 0, got {x}")
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.gamma(s)
    if x < s + 1.0:
        ap, term = s, 1.0 / s
        total = term
        for _ in range(_MAXIT):
            ap += 1.0
            term *= x / ap
            total += term
            if abs(term) < abs(total) * _EPS:
                break
        return total * math.exp(-x + s * math.log(x))
    return math.gamma(s) - _upper_gamma_cf(s, x)


def _upper_gamma_cf(s: float, x: float) -> float:
    b = x + 1.0 - s
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _MAXIT):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + s * math.log(x)) * h


# ------------------------------------------------------------- K0 / K1

def _k01_series(x: float) -> tuple[float, float]:
    y = 0.25 * x * x
    lg = math.log(0.5 * x) + EULER_GAMMA
    # K0: -(ln(x/2)+gamma) I0 + sum H_k y^k/(k!)^2
    # K1: 1/x + I1 ln(x/2) - (x/4) sum (psi(k+1)+psi(k+2)) y^k/(k!(k+1)!)
    i0 = 0.0
    s0 = 0.0
    i1 = 0.0
    s1 = 0.0
    t = 1.0          # y^k/(k!)^2
    h = 0.0          # harmonic number H_k
    k = 0
    while True:
        u = t / (k + 1)  # y^k/(k!(k+1)!)
        i0 += t
        s0 += h * t
        i1 += u
        s1 += (2.0 * h + 1.0 / (k + 1) - 2.0 * EULER_GAMMA) * u
        if t < _EPS * i0 and k > 2:
            break
        k += 1
        h += 1.0 / k
        t *= y / (k * k)
    k0 = -lg * i0 + s0
    k1 = 1.0 / x + 0.5 * x * i1 * math.log(0.5 * x) - 0.25 * x * s1
    return k0, k1


def _k01_steed(x: float) -> tuple[float, float]:
    # Steed's continued fraction for K at nu = 0, with the order-1 companion
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = delh = d
    q1, q2 = 0.0, 1.0
    a1 = 0.25
    q = c = a1
    a = -a1
    s = 1.0 + q * delh
    for i in range(1, _MAXIT):
        a -= 2 * i
        c = -a * c / (i + 1.0)
        qnew = (q1 - b * q2) / a
        q1, q2 = q2, qnew
        q += c * qnew
        b += 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h += delh
        dels = q * delh
        s += dels
        if abs(dels / s) < _EPS:
            break
    else:
        raise IntegrationError(f"K continued fraction did not converge at x={x}")
    h = a1 * h
    k0 = math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) / s
    k1 = k0 * (x + 0.5 - h) / x
    return k0, k1


def bessel_k(nu: int, x: float) -> float:
    """Modified Bessel function of the second kind, orders 0 and 1."""
    if nu not in (0, 1):
        raise DomainError(f"bessel_k supports nu in (0, 1), got {nu}")
    if not x > 0:
        raise DomainError(f"bessel_k needs x > 0, got {x}")
    pair = _k01_series(x) if x <= 2.0 else _k01_steed(x)
    return pair[nu]


# ----------------------------------------------------------- si / ci

def trig_integrals(x: float) -> tuple[float, float]:
    """(si(x), ci(x)) with si = Si - pi/2 and ci = Ci, for x > 0."""
    if not x > 0:
        raise DomainError(f"trig_integrals needs x > 0, got {x}")
    if x > 2.0:
        b = complex(1.0, x)
        c = 1.0 / _FPMIN
        d = h = 1.0 / b
        for i in range(2, _MAXIT):
            a = -float((i - 1) ** 2)
            b += 2.0
            d = 1.0 / (a * d + b)
            c = b + a / c
            delta = c * d
            h *= delta
            if abs(delta.real - 1.0) + abs(delta.imag) < _EPS:
                break
        else:
            raise IntegrationError(f"cisi continued fraction did not converge at x={x}")
        h *= complex(math.cos(x), -math.sin(x))
        return h.imag, -h.real
    # power series, odd terms feed Si and even terms feed Ci
    sums = sumc = 0.0
    fact = 1.0
    sign = 1.0
    for k in range(1, _MAXIT):
        fact *= x / k
        term = fact / k
        if k % 2:
            sums += sign * term
            tot = sums
        else:
            sumc -= sign * term
            sign = -sign
            tot = sumc
        if term < _EPS * max(abs(tot), 1e-300):
            break
    return sums - 0.5 * math.pi, sumc + math.log(x) + EULER_GAMMA


# ------------------------------------------------- Lah numbers and Lambda

_EXACT_LIMIT = 20


def lah_number(n: int, i: int) -> int:
    """Unsigned Lah number L(n, i) = C(n-1, i-1) n!/i!."""
    if n < 0 or i < 0 or i > n:
        raise DomainError(f"lah_number needs 0 <= i <= n, got n={n}, i={i}")
    if n == 0:
        return 1
    if i == 0:
        return 0
    return math.comb(n - 1, i - 1) * math.factorial(n) // math.factorial(i)


def log_lah_number(n: int, i: int) -> float:
    """ln L(n, i) through log-gamma, for orders beyond exact-integer range."""
    if n <= _EXACT_LIMIT:
        value = lah_number(n, i)
        return math.log(value) if value else -math.inf
    if i == 0 or i > n:
        raise DomainError(f"log_lah_number needs 1 <= i <= n, got n={n}, i={i}")
    return (math.lgamma(n) - math.lgamma(i) - math.lgamma(n - i + 1)
            + math.lgamma(n + 1) - math.lgamma(i + 1))


def lambda_coeff_exact(nu: int, n: int, i: int) -> Fraction:
    """Exact rational Lambda(nu, n, i) for nu in {1, 2}."""
    if nu not in (1, 2):
        raise DomainError(f"exact Lambda only for nu in (1, 2), got {nu}")
    if n < 0 or i < 0 or i > n:
        raise DomainError(f"Lambda needs 0 <= i <= n, got n={n}, i={i}")
    base = Fraction(-((-2) ** i) * lah_number(n, i),
                    math.factorial(n) * (4 * n * n - 1))
    if nu == 1:
        return base
    return base * Fraction(-18, 4 * n * n - 9)


def lambda_coeff(nu: float, n: int, i: int) -> float:
    """Coefficient Lambda(nu, n, i) of the Lah expansion of K_nu.

    Integer orders 1 and 2 come from the exact rational form.  Other orders
    use the gamma-function definition directly and are rejected where
    Gamma(1/2 - nu) has a pole (half-integer nu).
    """
    if n < 0 or i < 0 or i > n:
        raise DomainError(f"Lambda needs 0 <= i <= n, got n={n}, i={i}")
    if nu in (1, 2):
        return float(lambda_coeff_exact(int(nu), n, i))
    if not nu > 0:
        raise DomainError(f"Lambda needs nu > 0, got {nu}")
    if (nu - 0.5) == int(nu - 0.5):
        raise DomainError(f"Gamma(1/2 - nu) has a pole at nu={nu}")
    lah = lah_number(n, i)
    if lah == 0:
        return 0.0
    num = ((-1.0) ** i * math.sqrt(math.pi) * math.gamma(2.0 * nu)
           * math.gamma(n - nu + 0.5) * lah)
    den = (2.0 ** (nu - i) * math.gamma(0.5 - nu) * math.gamma(n + nu + 0.5)
           * math.factorial(n))
    return num / den


def g_coefficient(n: int, variant: str = "corrected") -> float:
    """Ratio Lambda(2, n, i) / Lambda(1, n, i), independent of i.

    ``corrected`` is the ratio implied by the gamma-function definition,
    -(9/2) G(n-3/2) G(n+3/2) / (G(n-1/2) G(n+5/2)) = -18/(4n^2 - 9).
    ``paper`` reproduces the printed variant with G(n-3/4) in the numerator;
    it does not reproduce K0 (see tests).
    """
    if variant == "corrected":
        return -18.0 / (4.0 * n * n - 9.0)
    if variant == "paper":
        # all four gamma arguments are positive for n >= 1
        return -4.5 * math.exp(math.lgamma(n - 0.75) + math.lgamma(n + 1.5)
                               - math.lgamma(n - 0.5) - math.lgamma(n + 2.5))
    raise ValueError(f"unknown g variant {variant!r}")


# ------------------------------------------------------- K0 Lah series

def k0_series(x: float, ctrl: SeriesControl = SeriesControl(),
              variant: str = "corrected") -> SeriesResult:
    """K0(x) from the double series e^{-x} sum_n sum_i Lambda(1,n,i)(g(n)-2) x^{i-2}.

    The inner sum over i is a generalized Laguerre polynomial,
    sum_i Lambda(1,n,i) x^i = -L_n^{(-1)}(2x)/(4n^2-1), so each outer block
    costs O(1) via the three-term Laguerre recurrence instead of O(n) terms
    of alternating sign.

    Blocks decay only algebraically and oscillate, so a single small block is
    not evidence of convergence.  The sum is declared converged once every
    partial sum over the last quarter of the evaluated range (at least 16
    blocks) sits within rel_tol of the current one.
    """
    if not x > 0:
        raise DomainError(f"k0_series needs x > 0, got {x}")
    t = 2.0 * x
    lag_prev, lag = 1.0, -t      # L_0^{(-1)}, L_1^{(-1)}
    # n = 0 block: Lambda(1,0,0) = 1
    total = g_coefficient(0, variant) - 2.0
    partial = [total]
    converged = False
    n = 0
    for n in range(1, ctrl.max_terms + 1):
        coef = -(g_coefficient(n, variant) - 2.0) / (4.0 * n * n - 1.0)
        total += coef * lag
        partial.append(total)
        lag_prev, lag = lag, ((2 * n - t) * lag - (n - 1) * lag_prev) / (n + 1)
        if not math.isfinite(total):
            break
        if n >= 16 and (n % 64 == 0 or n == ctrl.max_terms):
            window = max(16, n // 4)
            spread = max(abs(p - total) for p in partial[n - window:n])
            if spread <= ctrl.rel_tol * abs(total):
                converged = True
                break
    scale = math.exp(-x) / (x * x)
    return SeriesResult(total * scale, converged, n)


# ------------------------------------------------------------ quadrature

def integrate(f: Callable[[float], float], a: float, b: float,
              rel_tol: float = 1e-10, abs_tol: float = 0.0,
              points: Sequence[float] | None = None, limit: int = 500) -> float:
    """Adaptive Gauss-Kronrod quadrature of f over [a, b], b may be +inf.

    Raises IntegrationError when the routine reports failure.  ``points``
    splits the interval at known kinks or peaks (finite intervals only).
    """
    if points and math.isinf(b):
        # quad does not accept break points on infinite ranges; split manually
        pts = sorted(p for p in points if a < p)
        edges = [a, *pts, b]
        return math.fsum(integrate(f, lo, hi, rel_tol, abs_tol, None, limit)
                         for lo, hi in zip(edges[:-1], edges[1:]))
    kw = dict(epsabs=abs_tol, epsrel=rel_tol, limit=limit, full_output=1)
    if points:
        kw["points"] = list(points)
    out = _quad.quad(f, a, b, **kw)
    if len(out) > 3:
        raise IntegrationError(f"quadrature on [{a}, {b}] failed: {out[3]}")
    return float(out[0])
