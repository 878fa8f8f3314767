"""(p,q)-calculus primitives: integers, factorials, binomials, powers,
the two (p,q)-exponentials and the (p,q)-derivative.

All functions accept ``fractions.Fraction`` parameters as well as floats;
with rational ``p`` and ``q`` the integer/factorial/binomial routines are
exact, which the test-suite uses as an oracle for the float path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real

import numpy as np

from .errors import DivergenceDetected, TruncationBudgetExceeded, ValidationError

__all__ = [
    "PqPair",
    "Truncation",
    "pq_integer",
    "pq_integers",
    "pq_factorial",
    "pq_binomial",
    "log_pq_factorial",
    "log_pq_factorials",
    "log_pq_binomial",
    "pq_power_plus",
    "pq_power_minus",
    "pq_exp_small",
    "pq_exp_big",
    "log_pq_exp_big",
    "log_pq_exp_big_terms",
    "pq_derivative",
]


@dataclass(frozen=True)
class PqPair:
    """Deformation parameters with ``0 < q <= p <= 1``.

    ``q == p`` is allowed for limit-mode arithmetic (``p = q = 1`` is the
    classical case); Jackson integration requires ``q < p``.
    """

    p: Real = 1.0
    q: Real = 1.0

    def __post_init__(self):
        p, q = self.p, self.q
        if not (0 < q <= p <= 1):
            raise ValidationError(f"need 0 < q <= p <= 1, got p={p!r}, q={q!r}")

    @property
    def strict(self) -> bool:
        return self.q < self.p

    @property
    def classical(self) -> bool:
        return self.p == 1 and self.q == 1

    def require_strict(self, what="this operation"):
        if not self.strict:
            raise ValidationError(f"{what} needs q < p (got p={self.p!r}, q={self.q!r})")

    def as_float(self) -> "PqPair":
        return PqPair(float(self.p), float(self.q))


@dataclass(frozen=True)
class Truncation:
    """Termination policy for infinite sums.

    A sum stops once ``consecutive`` successive terms are below ``abs_tol``
    in magnitude.  ``growth_window`` successive non-contracting increases of
    the term magnitude are reported as divergence.
    """

    abs_tol: float = 1e-14
    consecutive: int = 3
    max_terms: int = 10_000
    growth_window: int = 5

    def __post_init__(self):
        if not self.abs_tol > 0:
            raise ValidationError("abs_tol must be positive")
        if self.consecutive < 1 or self.max_terms < 1 or self.growth_window < 1:
            raise ValidationError("consecutive, max_terms and growth_window must be >= 1")
        if self.max_terms < self.consecutive:
            raise ValidationError("max_terms must be >= consecutive")


DEFAULT_TRUNCATION = Truncation()


def _check_n(n):
    if int(n) != n or n < 0:
        raise ValidationError(f"n must be a non-negative integer, got {n!r}")
    return int(n)


def pq_integer(n: int, pq: PqPair):
    """[n]_{p,q} as the homogeneous sum of p^i q^(n-1-i); exact at p == q."""
    n = _check_n(n)
    p, q = pq.p, pq.q
    return sum((p**i * q ** (n - 1 - i) for i in range(n)), 0 * p)


def pq_integers(nmax: int, pq: PqPair) -> np.ndarray:
    """Float array ``[0], [1], ..., [nmax]`` built by [n] = p[n-1] + q^(n-1)."""
    nmax = _check_n(nmax)
    p, q = float(pq.p), float(pq.q)
    out = np.zeros(nmax + 1)
    qpow = 1.0
    for n in range(1, nmax + 1):
        out[n] = p * out[n - 1] + qpow
        qpow *= q
    return out


def pq_factorial(n: int, pq: PqPair):
    """[n]_{p,q}! with [0]! = 1.  Use :func:`log_pq_factorial` for n > 50."""
    n = _check_n(n)
    return math.prod((pq_integer(i, pq) for i in range(1, n + 1)), start=1 + 0 * pq.p)


def log_pq_factorial(n: int, pq: PqPair) -> float:
    n = _check_n(n)
    return float(np.sum(np.log(pq_integers(n, pq)[1:])))


def log_pq_factorials(nmax: int, pq: PqPair) -> np.ndarray:
    """Array of log [k]! for k = 0..nmax."""
    ints = pq_integers(nmax, pq)
    out = np.zeros(nmax + 1)
    np.cumsum(np.log(ints[1:]), out=out[1:])
    return out


def _check_nk(n, k):
    n = _check_n(n)
    if int(k) != k or not 0 <= k <= n:
        raise ValidationError(f"binomial needs 0 <= k <= n, got n={n}, k={k!r}")
    return n, int(k)


def pq_binomial(n: int, k: int, pq: PqPair):
    n, k = _check_nk(n, k)
    return pq_factorial(n, pq) / (pq_factorial(k, pq) * pq_factorial(n - k, pq))


def log_pq_binomial(n: int, k: int, pq: PqPair) -> float:
    n, k = _check_nk(n, k)
    lf = log_pq_factorials(n, pq)
    return float(lf[n] - lf[k] - lf[n - k])


def pq_power_plus(x, a, n: int, pq: PqPair):
    """(x (+) a)^n = prod_{s<n} (p^s x + q^s a)."""
    n = _check_n(n)
    p, q = pq.p, pq.q
    return math.prod((p**s * x + q**s * a for s in range(n)), start=1 + 0 * p)


def pq_power_minus(x, a, n: int, pq: PqPair):
    """(x (-) a)^n = prod_{s<n} (p^s x - q^s a)."""
    n = _check_n(n)
    p, q = pq.p, pq.q
    return math.prod((p**s * x - q**s * a for s in range(n)), start=1 + 0 * p)


def _exp_series(x, pq, trunc, base, detect_growth):
    # term_{m+1} = term_m * base^m * x / [m+1]
    p, q = float(pq.p), float(pq.q)
    x = float(x)
    if x == 0.0:
        return 1.0
    total = 0.0
    term = 1.0
    small = 0
    growth = 0
    last_ratio = None
    int_m = 0.0  # [m] for the current index m
    base_pow = 1.0  # base^m
    qpow = 1.0  # q^m, drives the [m] recurrence
    for m in range(trunc.max_terms):
        if not math.isfinite(term):
            raise DivergenceDetected(f"(p,q)-exponential term overflowed at index {m} for x={x!r}")
        total += term
        if abs(term) < trunc.abs_tol:
            small += 1
            if small >= trunc.consecutive:
                return total
        else:
            small = 0
        int_m = p * int_m + qpow  # now [m+1]
        qpow *= q
        new = term * base_pow * x / int_m
        base_pow *= base
        if detect_growth and term != 0.0:
            ratio = abs(new / term)
            if ratio > 1.0 and (last_ratio is None or ratio >= last_ratio):
                growth += 1
                if growth >= trunc.growth_window:
                    raise DivergenceDetected(
                        f"(p,q)-exponential terms grew for {growth} successive terms at x={x!r}"
                    )
            else:
                growth = 0
            last_ratio = ratio
        term = new
    if detect_growth:
        raise DivergenceDetected(f"(p,q)-exponential did not meet abs_tol within {trunc.max_terms} terms")
    raise TruncationBudgetExceeded(f"E_pq series did not meet abs_tol within {trunc.max_terms} terms")


def pq_exp_small(x, pq: PqPair, trunc: Truncation = DEFAULT_TRUNCATION) -> float:
    """e_{p,q}(x) = sum p^(m(m-1)/2) x^m / [m]!.

    The series has a finite radius of convergence at p = 1, q < 1; growth of
    the terms is reported as :class:`DivergenceDetected`.
    """
    return _exp_series(x, pq, trunc, float(pq.p), detect_growth=True)


def pq_exp_big(x, pq: PqPair, trunc: Truncation = DEFAULT_TRUNCATION) -> float:
    """E_{p,q}(x) = sum q^(m(m-1)/2) x^m / [m]!, entire for q < 1."""
    return _exp_series(x, pq, trunc, float(pq.q), detect_growth=False)


def log_pq_exp_big(u: float, pq: PqPair, rel_tol: float = 1e-17) -> float:
    """log E_{p,q}(u) for u >= 0, summed in log space (no overflow for large u)."""
    return float(log_pq_exp_big_terms(u, pq, rel_tol)[1][0])


def log_pq_exp_big_terms(u, pq: PqPair, rel_tol: float = 1e-17):
    """Log-terms of E_{p,q}(u) for an array of u >= 0.

    Returns ``(log_terms, log_sum)`` where ``log_terms[k, i]`` is the log of
    q^(k(k-1)/2) u_i^k / [k]! and ``log_sum[i] = log E_{p,q}(u_i)``.  The
    number of rows is fixed by the largest u, so the neglected tail is below
    ``rel_tol`` relative for every column.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if (u < 0).any():
        raise ValidationError("log_pq_exp_big_terms needs u >= 0")
    umax = float(u.max()) if u.size else 0.0
    kmax = _term_count(umax, pq, rel_tol)
    k = np.arange(kmax + 1, dtype=float)[:, None]
    lf = log_pq_factorials(kmax, pq)[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_u = np.log(u)[None, :]
        ku = np.where(k == 0, 0.0, k * log_u)
    lt = 0.5 * k * (k - 1) * math.log(float(pq.q)) + ku - lf
    peak = lt.max(axis=0)
    log_sum = peak + np.log(np.exp(lt - peak).sum(axis=0))
    return lt, log_sum


def _term_count(u, pq, rel_tol):
    if u == 0.0:
        return 0
    p, q = float(pq.p), float(pq.q)
    lq, lu = math.log(q), math.log(u)
    lt = peak = 0.0
    int_m, qpow = 0.0, 1.0
    stop = math.log(rel_tol)
    m = 0
    while True:
        int_m = p * int_m + qpow
        qpow *= q
        step = m * lq + lu - math.log(int_m)
        lt += step
        m += 1
        peak = max(peak, lt)
        if step < 0 and lt - peak < stop:
            return m


def pq_derivative(f, x, pq: PqPair) -> float:
    """(f(px) - f(qx)) / ((p - q) x)."""
    if x == 0:
        raise ValidationError("the (p,q)-derivative is undefined at x = 0")
    pq.require_strict("the (p,q)-derivative")
    p, q = pq.p, pq.q
    return (f(p * x) - f(q * x)) / ((p - q) * x)


def as_fraction_pair(p, q) -> PqPair:
    return PqPair(Fraction(p), Fraction(q))
