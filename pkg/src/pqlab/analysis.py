"""Moduli of continuity, Steklov means, weighted norms, the Steklov-type
error bound, and the Korovkin / Voronovskaja convergence experiments."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .calculus import PqPair
from .errors import SchemeInvalid, ValidationError
from .integrate import gauss_legendre
from .operators import (
    OperatorConfig,
    as_scalar_fn,
    central_moment2,
    moment_m0,
    moment_m1,
    moment_m2,
    operator_apply_many,
)

__all__ = [
    "Grid",
    "SequenceScheme",
    "ExperimentRow",
    "modulus_omega",
    "modulus_omega2",
    "steklov_mean",
    "error_bound",
    "weighted_norm",
    "korovkin_table",
    "korovkin_tail_excess",
    "voronovskaja_constants",
    "voronovskaja_table",
]


@dataclass(frozen=True)
class Grid:
    x_min: float = 0.0
    x_max: float = 10.0
    points: int = 401

    def __post_init__(self):
        if self.x_min < 0 or not self.x_max > self.x_min or self.points < 2:
            raise ValidationError("grid needs 0 <= x_min < x_max and points >= 2")

    def values(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.points)

    def refined(self) -> "Grid":
        # 2N - 1 points keeps every old node
        return Grid(self.x_min, self.x_max, 2 * self.points - 1)


@dataclass(frozen=True)
class SequenceScheme:
    """p_n = 1 - c_p / n and q_n = 1 - c_q / n, so p_n^n -> e^-c_p, q_n^n -> e^-c_q.

    ``SequenceScheme.classical()`` pins p_n = q_n = 1.
    """

    c_p: float = 0.5
    c_q: float = 1.0
    is_classical: bool = False

    def __post_init__(self):
        if self.is_classical:
            return
        if not (self.c_p > 0 and self.c_q > self.c_p):
            raise ValidationError(f"scheme needs 0 < c_p < c_q, got c_p={self.c_p}, c_q={self.c_q}")

    @classmethod
    def classical(cls) -> "SequenceScheme":
        return cls(0.0, 0.0, is_classical=True)

    def at(self, n: int) -> PqPair:
        if self.is_classical:
            return PqPair(1.0, 1.0)
        p = min(1.0, 1.0 - self.c_p / n)
        q = min(1.0, 1.0 - self.c_q / n)
        if not (0 < q < p <= 1):
            raise SchemeInvalid(f"scheme gives q_n={q} >= p_n={p} or q_n <= 0 at n={n}")
        return PqPair(p, q)

    @property
    def limits(self) -> tuple[float, float]:
        """(a, b) = (lim p_n^n, lim q_n^n)."""
        return math.exp(-self.c_p), math.exp(-self.c_q)


@dataclass
class ExperimentRow:
    n: int
    p_n: float
    q_n: float
    payload: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"n": self.n, "p_n": self.p_n, "q_n": self.q_n, **self.payload}


# -- moduli and Steklov means ----------------------------------------------

_H_SAMPLES = 64
_REL_CHANGE = 0.01
_MAX_REFINE = 6


def _modulus(f, delta, grid, order):
    if not delta > 0:
        raise ValidationError("delta must be positive")
    fn = as_scalar_fn(f)
    samples = _H_SAMPLES
    estimate = None
    for _ in range(_MAX_REFINE):
        x = grid.values()
        h = delta * np.arange(1, samples + 1) / samples
        h = h[order * h <= grid.x_max - grid.x_min]
        if h.size == 0:
            return 0.0
        xs = x[None, :]
        hs = h[:, None]
        inside = xs + order * hs <= grid.x_max + 1e-12 * grid.x_max
        with np.errstate(all="ignore"):
            if order == 1:
                diff = fn(xs + hs) - fn(xs)
            else:
                diff = fn(xs + 2 * hs) - 2 * fn(xs + hs) + fn(xs)
        diff = np.broadcast_to(np.abs(np.asarray(diff, dtype=float)), inside.shape)
        new = float(np.max(np.where(inside, diff, 0.0)))
        if estimate is not None and abs(new - estimate) <= _REL_CHANGE * max(abs(new), 1e-300):
            return max(new, estimate)
        estimate = new if estimate is None else max(new, estimate)
        grid = grid.refined()
        samples *= 2
    return estimate


def modulus_omega(f, delta: float, grid: Grid = Grid()) -> float:
    """sup over 0 < h <= delta and grid points x (x + h inside the grid) of |f(x+h) - f(x)|."""
    return _modulus(f, delta, grid, 1)


def modulus_omega2(f, delta: float, grid: Grid = Grid()) -> float:
    """Second-order modulus, sup |f(x+2h) - 2 f(x+h) + f(x)|."""
    return _modulus(f, delta, grid, 2)


def steklov_mean(f, h: float, x, order: int = 16):
    """f_h(x) = (4/h^2) int_0^{h/2} int_0^{h/2} [2 f(x+u+v) - f(x+2(u+v))] du dv.

    Tensor Gauss-Legendre rule; exact for polynomials of degree < 2*order.
    """
    if not h > 0:
        raise ValidationError("h must be positive")
    fn = as_scalar_fn(f)
    nodes, weights = gauss_legendre(order)
    u = 0.25 * h * (nodes + 1.0)
    w = 0.25 * h * weights
    s = (u[:, None] + u[None, :]).ravel()
    ww = (w[:, None] * w[None, :]).ravel()
    xa = np.atleast_1d(np.asarray(x, dtype=float))[:, None]
    vals = 2 * np.broadcast_to(fn(xa + s), (xa.shape[0], s.size)) - np.broadcast_to(fn(xa + 2 * s), (xa.shape[0], s.size))
    out = 4.0 / h**2 * (vals @ ww)
    return out if np.ndim(x) else float(out[0])


# -- error bound -----------------------------------------------------------


def error_bound(f, x, cfg: OperatorConfig, grid: Grid = Grid(), form: str = "exact"):
    """Steklov-mean bound on |T(f, x) - f(x)| with step h = 1/sqrt([n-2]).

        5 w1 sqrt([n-2]) * first + (9/2) w2 ([n-2] * second + 2)

    ``w1 = omega(f, h)``, ``w2 = omega2(f, h)``.  With ``form="exact"``
    ``first = |T(t - x, x)|`` and ``second = T((t - x)^2, x)`` come from the
    validated moments; ``form="published"`` uses the printed brackets.
    """
    p, q = float(cfg.pq.p), float(cfg.pq.q)
    big_n, n2, n3, two = cfg.integer(cfg.n), cfg.integer(cfg.n - 2), cfg.integer(cfg.n - 3), cfg.integer(2)
    d, a = cfg.denominator, cfg.alpha
    h = 1.0 / math.sqrt(n2)
    w1 = modulus_omega(f, h, grid)
    w2 = modulus_omega2(f, h, grid)
    xa = np.asarray(x, dtype=float)
    root = math.sqrt(n2)
    if form == "published":
        first = a * root / d + big_n / (q * p**2 * d * root) + np.abs(big_n**2 / (p * q**2 * d * root) - root) * xa
        second = (
            (big_n**4 / (d**2 * p * q**6 * n3) - 2 * big_n**2 / (p * q**2 * d) + n2) * xa**2
            + (2 * a * big_n**2 / (d**2 * p * q**2) + big_n**2 * (q * (p + two) + p**2) / (d**2 * p**4 * q**5 * n3)) * xa
            + 2 * a * big_n / (d**2 * q * p**2)
            + two * big_n**2 / (d**2 * p**5 * q**3 * n3)
            + n2 * a**2 / d**2
        )
    elif form == "exact":
        first = root * np.abs(moment_m1(xa, cfg) - xa)
        second = n2 * central_moment2(xa, cfg)
    else:
        raise ValidationError("form must be 'exact' or 'published'")
    val = 5.0 * w1 * first + 4.5 * w2 * (second + 2.0)
    return val if np.ndim(x) else float(val)


def weighted_norm(g, grid: Grid = Grid()) -> float:
    """max over the grid of |g(x)| / (1 + x^2)."""
    x = grid.values()
    vals = np.broadcast_to(np.asarray(as_scalar_fn(g)(x), dtype=float), x.shape)
    return float(np.max(np.abs(vals) / (1.0 + x * x)))


# -- experiments -----------------------------------------------------------


def _check_ns(ns):
    ns = [int(n) for n in ns]
    if any(n < 4 for n in ns):
        raise ValidationError("every n must be >= 4")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValidationError("ns must be strictly increasing")
    return ns


def korovkin_table(scheme: SequenceScheme, ns, stancu=(0.0, 0.0), grid: Grid = Grid(), form: str = "exact"):
    """Weighted distances ||T(t^i) - x^i|| for i = 0, 1, 2 from the closed-form moments."""
    alpha, beta = stancu
    rows = []
    for n in _check_ns(ns):
        pq = scheme.at(n)
        cfg = OperatorConfig(n, pq, alpha, beta)
        norms = {
            "norm_i0": weighted_norm(lambda x: moment_m0(x, cfg, form) - 1.0, grid),
            "norm_i1": weighted_norm(lambda x: moment_m1(x, cfg, form) - x, grid),
            "norm_i2": weighted_norm(lambda x: moment_m2(x, cfg, form) - x * x, grid),
        }
        rows.append(ExperimentRow(n, float(pq.p), float(pq.q), norms))
    return rows


def korovkin_tail_excess(scheme, n, stancu=(0.0, 0.0), grid: Grid = Grid(), form="exact", factor=100.0, points=200):
    """How much the weighted discrepancy beyond the grid exceeds the in-grid sup.

    Returns ``(excess_i1, excess_i2)``; non-positive values mean the grid
    sup is not beaten on [x_max, factor * x_max].
    """
    alpha, beta = stancu
    cfg = OperatorConfig(n, scheme.at(n), alpha, beta)
    inside = grid.values()
    outside = np.geomspace(grid.x_max, factor * grid.x_max, points)

    def sup(xs, i):
        m = moment_m1(xs, cfg, form) if i == 1 else moment_m2(xs, cfg, form)
        return float(np.max(np.abs(m - xs**i) / (1 + xs * xs)))

    return tuple(sup(outside, i) - sup(inside, i) for i in (1, 2))


def voronovskaja_constants(pq: PqPair, n: int, beta: float = 0.0) -> tuple[float, float]:
    """Finite-n values of the two asymptotic constants.

    A_n = [n] ([n]/[n-2] - 1),  B_n = [n] ([n]^3 / (([n] + beta) [n-2] [n-3]) - 1).
    """
    from .calculus import pq_integer

    big_n = float(pq_integer(n, pq))
    n2, n3 = float(pq_integer(n - 2, pq)), float(pq_integer(n - 3, pq))
    a_n = big_n * (big_n / n2 - 1.0)
    b_n = big_n * (big_n**3 / ((big_n + beta) * n2 * n3) - 1.0)
    return a_n, b_n


def voronovskaja_table(f, d1, d2, scheme: SequenceScheme, ns, stancu=(0.0, 0.0), xs=(0.5, 1.0, 2.0), cfg_kwargs=None):
    """Per (n, x): lhs = [n] (T(f, x) - f(x)) by direct evaluation, the finite-n
    constants, rhs = f'(x)(1 + alpha + A_n x) + f''(x)(1 + B_n x) x / 2, and
    err = |lhs - rhs|.  ``d1`` and ``d2`` are the analytic derivatives."""
    alpha, beta = stancu
    fn, g1, g2 = as_scalar_fn(f), as_scalar_fn(d1), as_scalar_fn(d2)
    xs = np.asarray(xs, dtype=float)
    rows = []
    for n in _check_ns(ns):
        pq = scheme.at(n)
        cfg = OperatorConfig(n, pq, alpha, beta, **(cfg_kwargs or {}))
        big_n = cfg.integer(n)
        tf = operator_apply_many(fn, xs, cfg)
        fx = np.broadcast_to(np.asarray(fn(xs), dtype=float), xs.shape)
        lhs = big_n * (tf - fx)
        a_n, b_n = voronovskaja_constants(pq, n, beta)
        f1 = np.broadcast_to(np.asarray(g1(xs), dtype=float), xs.shape)
        f2 = np.broadcast_to(np.asarray(g2(xs), dtype=float), xs.shape)
        rhs = f1 * (1.0 + alpha + a_n * xs) + 0.5 * f2 * (1.0 + b_n * xs) * xs
        for i, x in enumerate(xs):
            rows.append(
                ExperimentRow(
                    n,
                    float(pq.p),
                    float(pq.q),
                    {
                        "x": float(x),
                        "lhs": float(lhs[i]),
                        "A_n": a_n,
                        "B_n": b_n,
                        "rhs": float(rhs[i]),
                        "err": float(abs(lhs[i] - rhs[i])),
                    },
                )
            )
    return rows
