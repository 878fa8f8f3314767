"""Jackson-type (p,q)-integration and a classical quadrature oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import PqPair
from .errors import (
    DivergentTail,
    DomainError,
    NodeBudgetExceeded,
    TailNotConverged,
    ValidationError,
)

__all__ = ["QuadConfig", "jackson_finite", "jackson_improper", "classical_improper", "gauss_legendre"]


@dataclass(frozen=True)
class QuadConfig:
    """Node budget and tolerance for Jackson sums; panel count for the classical rule.

    ``node_budget`` caps the number of nodes per direction of a ladder.  A
    ladder stops once three successive terms are small enough that the
    geometric tail behind them is below ``abs_tol``.
    """

    node_budget: int = 5000
    abs_tol: float = 1e-12
    classical_panels: int = 1

    def __post_init__(self):
        if self.node_budget < 1 or self.classical_panels < 1:
            raise ValidationError("node_budget and classical_panels must be >= 1")
        if not self.abs_tol > 0:
            raise ValidationError("abs_tol must be positive")


DEFAULT_QUAD = QuadConfig()

_STOP_RUN = 3


def _evaluate(f, t):
    with np.errstate(all="ignore"):
        y = np.asarray(f(t), dtype=float)
    if y.shape != t.shape:
        y = np.broadcast_to(y, t.shape)
    bad = ~np.isfinite(y)
    if bad.any():
        raise DomainError("integrand is not finite", t=float(t[np.argmax(bad)]))
    return y


def _ladder_sum(f, scale, ratio, weight_factor, cfg, direction):
    """Sum ``weight_factor * t * f(t)`` over ``t = scale * ratio**i``, i = 0, 1, ...

    ``ratio < 1`` walks towards zero, ``ratio > 1`` towards infinity.  Terms
    are generated in doubling blocks; the walk stops when ``_STOP_RUN``
    successive terms are below the tail threshold.
    """
    r = ratio if ratio < 1 else 1.0 / ratio
    threshold = cfg.abs_tol * (1.0 - r)
    total = 0.0
    start = 0
    block = 64
    run = 0
    means = []
    while start < cfg.node_budget:
        size = min(block, cfg.node_budget - start)
        t = scale * ratio ** np.arange(start, start + size, dtype=float)
        terms = weight_factor * t * _evaluate(f, t)
        small = np.abs(terms) < threshold
        # first index at which the run of small terms reaches _STOP_RUN
        for i, s in enumerate(small):
            run = run + 1 if s else 0
            if run >= _STOP_RUN:
                return total + float(terms[: i + 1].sum())
        total += float(terms.sum())
        means.append(float(np.mean(np.abs(terms))))
        start += size
        block *= 2
    if len(means) >= 4 and all(means[-i] > means[-i - 1] for i in range(1, 4)):
        raise DivergentTail(f"Jackson sum grows towards {direction} through three successive doublings")
    raise NodeBudgetExceeded(f"Jackson sum towards {direction} needs more than {cfg.node_budget} nodes")


def jackson_finite(f, a: float, pq: PqPair, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """(p - q) a sum_k q^k / p^(k+1) f(a q^k / p^(k+1)), truncated."""
    pq.require_strict("Jackson integration")
    if not a > 0:
        raise ValidationError("upper limit must be positive")
    p, q = float(pq.p), float(pq.q)
    return _ladder_sum(f, a / p, q / p, p - q, cfg, "zero")


def jackson_improper(f, pq: PqPair, cfg: QuadConfig = DEFAULT_QUAD) -> float:
    """Bilateral Jackson sum (p - q) sum_{j in Z} t_j f(t_j), t_j = q^j / p^(j+1).

    The two directions (nodes towards zero and towards infinity) are
    truncated independently by the same tail rule.
    """
    pq.require_strict("Jackson integration")
    p, q = float(pq.p), float(pq.q)
    down = _ladder_sum(f, 1.0 / p, q / p, p - q, cfg, "zero")
    up = _ladder_sum(f, 1.0 / q, p / q, p - q, cfg, "infinity")
    return down + up


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(order: int):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def _panel_pair(f, a, b):
    """10- and 20-point Gauss-Legendre values on [a, b] from one call of f."""
    x10, w10 = gauss_legendre(10)
    x20, w20 = gauss_legendre(20)
    half = 0.5 * (b - a)
    t = a + half * (np.concatenate([x10, x20]) + 1.0)
    y = _evaluate(f, t)
    return half * float(np.dot(w10, y[:10])), half * float(np.dot(w20, y[10:]))


_ROUNDING = 64 * np.finfo(float).eps


def _adaptive(f, a, b, tol, max_depth=50):
    """Bisection on panels until the 10- and 20-point Gauss rules agree.

    Agreement is to ``tol``, or to rounding level relative to the panel
    value when ``tol`` is below what double precision can resolve.
    """
    total = 0.0
    stack = [(a, b, tol, 0)]
    while stack:
        lo, hi, eps, depth = stack.pop()
        coarse, fine = _panel_pair(f, lo, hi)
        if abs(fine - coarse) <= max(eps, _ROUNDING * abs(fine)) or depth >= max_depth:
            total += fine
        else:
            mid = 0.5 * (lo + hi)
            stack.append((lo, mid, 0.5 * eps, depth + 1))
            stack.append((mid, hi, 0.5 * eps, depth + 1))
    return total


def _split(f, a, b, tol, panels):
    edges = np.linspace(a, b, panels + 1)
    return sum(_adaptive(f, lo, hi, tol / panels) for lo, hi in zip(edges[:-1], edges[1:]))


def classical_improper(f, cfg: QuadConfig = DEFAULT_QUAD, max_doublings: int = 200) -> float:
    """Riemann integral of ``f`` over [0, inf).

    The integrand is first probed on the dyadic points 2^i to find where
    ``t |f(t)|`` peaks; [0, X] up to just past the peak is covered by dyadic
    panels (each split into ``classical_panels`` adaptive panels), then X is
    doubled until the newest panel [X, 2X] contributes less than ``abs_tol``.
    """
    probe_exp = np.arange(-30, 81)
    probe = 2.0 ** probe_exp
    mass = probe * np.abs(_evaluate(f, probe))
    top = int(probe_exp[int(np.argmax(mass))]) + 1
    lowest = -30
    panels = cfg.classical_panels
    tol = cfg.abs_tol / (top - lowest + 1)
    total = _split(f, 0.0, 2.0**lowest, tol, panels)
    for i in range(lowest, top):
        total += _split(f, 2.0**i, 2.0 ** (i + 1), tol, panels)
    x = 2.0**top
    for _ in range(max_doublings):
        piece = _split(f, x, 2.0 * x, cfg.abs_tol, panels)
        total += piece
        x *= 2.0
        if abs(piece) < cfg.abs_tol:
            return total
    raise TailNotConverged(f"tail of the classical integral still above {cfg.abs_tol} at X={x:g}")
