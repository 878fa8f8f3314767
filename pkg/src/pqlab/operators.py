"""The (p,q)-Szasz-Mirakyan-Baskakov-Stancu operator.

    T(f, x) = [n-1] sum_k s_k(x) c_k int_0^inf b_k(t) f(([n] p^k t + alpha) / ([n] + beta)) d_{p,q}t

with Szasz weights ``s_k`` (normalized by E_{p,q}), Baskakov kernels ``b_k``
and the bilateral Jackson integral of :mod:`pqlab.integrate`.

Two per-k normalizers are available.  ``"exact"`` (default) is the
reciprocal of the bilateral integral of ``b_k`` in closed form,

    c_k = q^(k(k+1)/2) p^((k+1) + (n-1)(n-2)/2),

which is what makes ``T(1, x) = 1``.  ``"published"`` is
``q^((k(k+1)-2)/2) p^((k+1)(k+2)/2)``; with it ``T(1, x) != 1``.  See
``ERRATA.md`` for the comparison.

The moment functions come in the same two flavours: ``form="exact"`` is the
closed form of the operator defined here (validated against direct
evaluation), ``form="published"`` transcribes the published expressions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .calculus import (
    DEFAULT_TRUNCATION,
    PqPair,
    Truncation,
    log_pq_exp_big_terms,
    log_pq_factorials,
    pq_integer,
)
from .errors import DivergentTail, DomainError, NodeBudgetExceeded, ValidationError
from .integrate import DEFAULT_QUAD, QuadConfig, gauss_legendre, jackson_improper
from .kernels import kernel_sums

__all__ = [
    "ScalarFn",
    "as_scalar_fn",
    "OperatorConfig",
    "szasz_basis",
    "baskakov_weight",
    "log_kernel_normalizer",
    "per_k_normalization",
    "kernel_integrals",
    "operator_apply",
    "operator_apply_many",
    "moment_m0",
    "moment_m1",
    "moment_m2",
    "central_moment2",
]

NORMALIZATIONS = ("exact", "published")
FORMS = ("exact", "published")


@dataclass(frozen=True)
class ScalarFn:
    """A real function on [0, inf) evaluated elementwise on numpy arrays.

    ``growth`` is ``"bounded"`` or the degree of a polynomial majorant; it
    only scales truncation heuristics.
    """

    func: Callable
    growth: object = 2
    label: str = ""

    def __call__(self, t):
        return self.func(t)

    @property
    def degree(self) -> int:
        return 0 if self.growth == "bounded" else int(self.growth)


def as_scalar_fn(f, growth=2) -> ScalarFn:
    if isinstance(f, ScalarFn):
        return f
    probe = np.array([0.25, 0.5])
    try:
        with np.errstate(all="ignore"):
            out = np.asarray(f(probe), dtype=float)
        vectorized = out.shape in {(), (2,)}
    except (TypeError, ValueError):
        vectorized = False
    func = f if vectorized else np.vectorize(f, otypes=[float])
    return ScalarFn(func, growth=growth, label=getattr(f, "__name__", ""))


@dataclass(frozen=True)
class OperatorConfig:
    n: int
    pq: PqPair
    alpha: float = 0.0
    beta: float = 0.0
    trunc: Truncation = field(default=DEFAULT_TRUNCATION)
    quad: QuadConfig = field(default=DEFAULT_QUAD)
    normalization: str = "exact"
    allow_alpha_above_beta: bool = False

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 4:
            raise ValidationError(f"n must be an integer >= 4, got {self.n!r}")
        if self.alpha < 0 or self.beta < 0:
            raise ValidationError("alpha and beta must be non-negative")
        if self.alpha > self.beta and not self.allow_alpha_above_beta:
            raise ValidationError(
                f"Stancu shifts need alpha <= beta (alpha={self.alpha}, beta={self.beta}); "
                "set allow_alpha_above_beta to override"
            )
        if not (self.pq.strict or self.pq.classical):
            raise ValidationError("operator needs 0 < q < p <= 1, or p = q = 1 for the classical limit")
        if self.normalization not in NORMALIZATIONS:
            raise ValidationError(f"normalization must be one of {NORMALIZATIONS}")

    @property
    def classical(self) -> bool:
        return self.pq.classical

    def integer(self, m: int) -> float:
        return float(pq_integer(m, self.pq))

    @property
    def denominator(self) -> float:
        return self.integer(self.n) + self.beta


# -- basis functions -------------------------------------------------------


def _log_szasz(xs, n, pq):
    """log s_k(x) as a (K+1, len(xs)) array; K covers the heaviest column."""
    u = float(pq_integer(n, pq)) * np.asarray(xs, dtype=float)
    lt, log_sum = log_pq_exp_big_terms(u, pq)
    return lt - log_sum


def szasz_basis(n: int, k: int, x, pq: PqPair, trunc: Truncation = DEFAULT_TRUNCATION):
    """s_{n,k}(x) = q^(k(k-1)/2) ([n] x)^k / ([k]! E_{p,q}([n] x)), via logs."""
    if k < 0:
        raise ValidationError("k must be >= 0")
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    if (xs < 0).any():
        raise ValidationError("x must be >= 0")
    u = float(pq_integer(n, pq)) * xs
    _, log_sum = log_pq_exp_big_terms(u, pq)
    lf = log_pq_factorials(k, pq)[k]
    with np.errstate(divide="ignore"):
        log_u = np.log(u)
    log_term = 0.5 * k * (k - 1) * math.log(float(pq.q)) - lf + (k * log_u if k else 0.0)
    out = np.exp(log_term - log_sum)
    return out if np.ndim(x) else float(out[0])


def _log_baskakov(n, k, t, pq):
    p, q = float(pq.p), float(pq.q)
    lf = log_pq_factorials(n + k - 1, pq)
    log_binom = lf[n + k - 1] - lf[k] - lf[n - 1]
    t = np.asarray(t, dtype=float)
    log_den = np.zeros_like(t)
    for s in range(n + k):
        log_den += np.log(p**s + q**s * p * t)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_t = np.log(t)
        tk = np.where(t == 0, 0.0 if k == 0 else -np.inf, k * log_t)
    return log_binom + tk - log_den


def baskakov_weight(n: int, k: int, t, pq: PqPair):
    """b_{n,k}(t) = [n+k-1 choose k] t^k / (1 (+) pt)^(n+k).

    At t = 0 and k = 0 this is p^(-n(n-1)/2), the reciprocal of the
    p-part of the empty-argument power.
    """
    if k < 0 or n < 1:
        raise ValidationError("need n >= 1 and k >= 0")
    out = np.exp(_log_baskakov(n, k, t, pq))
    return out if np.ndim(t) else float(out)


def log_kernel_normalizer(n: int, k, pq: PqPair, kind: str = "exact"):
    """log of [n-1] times the per-k power factor multiplying the kernel integral."""
    p, q = float(pq.p), float(pq.q)
    k = np.asarray(k, dtype=float)
    base = math.log(float(pq_integer(n - 1, pq)))
    if kind == "exact":
        return base + 0.5 * k * (k + 1) * math.log(q) + ((k + 1) + 0.5 * (n - 1) * (n - 2)) * math.log(p)
    if kind == "published":
        return base + 0.5 * (k * (k + 1) - 2) * math.log(q) + 0.5 * (k + 1) * (k + 2) * math.log(p)
    raise ValidationError(f"kind must be one of {NORMALIZATIONS}")


def per_k_normalization(n: int, k: int, pq: PqPair, kind: str = "exact", quad: QuadConfig = DEFAULT_QUAD) -> float:
    """Normalizer times the generic bilateral Jackson integral of b_{n,k}.

    Uses :func:`jackson_improper` directly (not the operator's batched
    kernel), so it is an independent route to the same quantity.
    """
    integral = jackson_improper(lambda t: np.exp(_log_baskakov(n, k, t, pq)), pq, quad)
    return float(np.exp(log_kernel_normalizer(n, k, pq, kind))) * integral


# -- kernel integrals ------------------------------------------------------

_EDGE = 3
_INITIAL_HALF_WIDTH = 256


def _eval_matrix(fn, arg, what):
    with np.errstate(all="ignore"):
        vals = np.asarray(fn(arg), dtype=float)
    vals = np.broadcast_to(vals, arg.shape)
    bad = ~np.isfinite(vals)
    if bad.any():
        idx = np.unravel_index(np.argmax(bad), bad.shape)
        k = int(idx[0]) if bad.ndim == 2 else None
        raise DomainError(f"{what} is not finite", t=float(arg[idx]), k=k)
    return vals


def _kernel_integrals_jackson(fn, cfg, kmax):
    n, pq = cfg.n, cfg.pq
    p, q = float(pq.p), float(pq.q)
    big_n = cfg.integer(n)
    denom = cfg.denominator
    k = np.arange(kmax + 1)
    lf = log_pq_factorials(n + kmax, pq)
    log_binom = lf[n - 1 + k] - lf[k] - lf[n - 1]
    log_coef = math.log(p - q) + log_binom + log_kernel_normalizer(n, k, pq, cfg.normalization)
    scale = big_n * p ** k.astype(float) / denom

    ratio = q / p
    threshold = cfg.quad.abs_tol * (1.0 - ratio)
    budget = cfg.quad.node_budget
    j_small, j_big = _INITIAL_HALF_WIDTH, _INITIAL_HALF_WIDTH  # nodes towards 0 / towards inf
    history = []
    while True:
        # t ascending: j from j_small down to -j_big, t_j = ratio**j / p
        j = np.arange(j_small, -j_big - 1, -1, dtype=float)
        t = ratio**j / p
        arg = scale[:, None] * t[None, :] + cfg.alpha / denom
        vals = _eval_matrix(fn, arg, "operator argument function")
        sums, lo, hi = kernel_sums(n, kmax, p, q, t, vals, log_coef, _EDGE)
        grow_small = lo.max() >= threshold
        grow_big = hi.max() >= threshold
        if not (grow_small or grow_big):
            return sums
        history.append(hi.max())
        if grow_small:
            if j_small >= budget:
                raise NodeBudgetExceeded(
                    f"kernel ladder towards zero needs more than {budget} nodes", k=int(np.argmax(lo))
                )
            j_small = min(2 * j_small, budget)
        if grow_big:
            if j_big >= budget:
                if len(history) >= 4 and all(history[-i] > history[-i - 1] for i in range(1, 4)):
                    raise DivergentTail("kernel integral diverges towards infinity", k=int(np.argmax(hi)))
                raise NodeBudgetExceeded(
                    f"kernel ladder towards infinity needs more than {budget} nodes", k=int(np.argmax(hi))
                )
            j_big = min(2 * j_big, budget)


def _kernel_integrals_classical(fn, cfg, kmax):
    """Classical kernel integrals for all k on one shared quadrature grid.

    With t = s / (1 - s) the classical kernel becomes the Beta(k+1, n-1)
    density on (0, 1), and the argument of f no longer depends on k, so f is
    evaluated once per node.  Composite 20-point Gauss-Legendre panels are
    doubled until every J_k changes by less than ``abs_tol``.
    """
    n = cfg.n
    denom = n + cfg.beta
    k = np.arange(kmax + 1, dtype=float)[:, None]
    log_norm = np.array([math.lgamma(n + j) - math.lgamma(j + 1) - math.lgamma(n - 1) for j in range(kmax + 1)])
    x20, w20 = gauss_legendre(20)
    panels = 64
    previous = None
    while True:
        edges = np.linspace(0.0, 1.0, panels + 1)
        half = 0.5 * np.diff(edges)
        s = (edges[:-1, None] + half[:, None] * (x20[None, :] + 1.0)).ravel()
        w = (half[:, None] * w20[None, :]).ravel()
        vals = _eval_matrix(fn, (n * s / (1.0 - s) + cfg.alpha) / denom, "operator argument function")
        log_w = log_norm[:, None] + k * np.log(s)[None, :] + (n - 2) * np.log1p(-s)[None, :]
        current = np.exp(log_w) @ (w * vals)
        if previous is not None and np.abs(current - previous).max() < cfg.quad.abs_tol:
            return current
        if panels >= _CLASSICAL_MAX_PANELS:
            raise NodeBudgetExceeded(
                f"classical kernel quadrature did not settle within {panels} panels",
                k=int(np.argmax(np.abs(current - previous))),
            )
        previous = current
        panels *= 2


_CLASSICAL_MAX_PANELS = 8192


def kernel_integrals(f, cfg: OperatorConfig, kmax: int) -> np.ndarray:
    """J_k = normalized kernel integral of f at the shifted argument, k = 0..kmax.

    ``T(f, x) = sum_k s_k(x) J_k``; the J_k do not depend on x.
    """
    fn = as_scalar_fn(f)
    if cfg.classical:
        return _kernel_integrals_classical(fn, cfg, kmax)
    return _kernel_integrals_jackson(fn, cfg, kmax)


# -- operator --------------------------------------------------------------


def operator_apply_many(f, xs, cfg: OperatorConfig) -> np.ndarray:
    """T(f, x) for every x in ``xs`` sharing one set of kernel integrals."""
    fn = as_scalar_fn(f)
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    if (xs < 0).any():
        raise ValidationError("x must be >= 0")
    if not (xs > 0).any():
        return np.full(xs.shape, kernel_integrals(fn, cfg, 0)[0])
    log_s = _log_szasz(xs, cfg.n, cfg.pq)
    kmax = log_s.shape[0] - 1
    if kmax + 1 > cfg.trunc.max_terms:
        raise ValidationError(f"Szasz sum needs {kmax + 1} terms, above max_terms={cfg.trunc.max_terms}")
    weights = np.exp(log_s)
    sums = kernel_integrals(fn, cfg, kmax)
    last = np.abs(weights[-1] * sums[-1]).max()
    if last >= cfg.trunc.abs_tol:
        # heavy growth of f: the weight tail is tiny but J_k is not
        log_s = np.vstack([log_s, _extend_log_szasz(log_s, xs, cfg, kmax)])
        weights = np.exp(log_s)
        sums = kernel_integrals(fn, cfg, log_s.shape[0] - 1)
    return sums @ weights


def _extend_log_szasz(log_s, xs, cfg, kmax):
    extra = np.arange(kmax + 1, 2 * kmax + 2)
    pq = cfg.pq
    lf = log_pq_factorials(int(extra[-1]), pq)[extra]
    u = cfg.integer(cfg.n) * xs
    with np.errstate(divide="ignore"):
        log_u = np.log(u)
    lt = 0.5 * extra[:, None] * (extra[:, None] - 1) * math.log(float(pq.q)) + extra[:, None] * log_u - lf[:, None]
    # log E(u) is already folded into log_s; recover it from the k = 0 row
    return lt + log_s[0][None, :]


def operator_apply(f, x: float, cfg: OperatorConfig) -> float:
    """T(f, x) by direct evaluation; x = 0 uses only the k = 0 term."""
    if x < 0:
        raise ValidationError("x must be >= 0")
    if x == 0:
        return float(kernel_integrals(f, cfg, 0)[0])
    return float(operator_apply_many(f, [x], cfg)[0])


# -- closed-form moments ---------------------------------------------------


def _check_form(form):
    if form not in FORMS:
        raise ValidationError(f"form must be one of {FORMS}")


def _constants(cfg):
    p, q = float(cfg.pq.p), float(cfg.pq.q)
    n = cfg.n
    return p, q, cfg.integer(n), cfg.integer(n - 2), cfg.integer(n - 3), cfg.integer(2), cfg.denominator


def _exp_ratio(u, factor, pq):
    """E_{p,q}(factor u) / E_{p,q}(u), elementwise."""
    if factor == 1.0:
        return np.ones_like(u)
    _, top = log_pq_exp_big_terms(factor * u, pq)
    _, bottom = log_pq_exp_big_terms(u, pq)
    return np.exp(top - bottom)


def _kernel_means(x, cfg):
    """Szasz averages of p^k and p^(2k) weighted normalized kernel moments.

    first  = sum_k s_k p^k  * c_k int t   b_k
    second = sum_k s_k p^2k * c_k int t^2 b_k
    """
    p, q, big_n, n2, n3, two, _ = _constants(cfg)
    n = cfg.n
    u = big_n * np.asarray(x, dtype=float)
    rho1 = _exp_ratio(u, p, cfg.pq)
    rho2 = _exp_ratio(u, p * p, cfg.pq)
    first = p ** (n - 3) / (q * n2) * rho1 * (1.0 + p * p * u / q)
    poly = two + ((p * p + p * two) * p * p / q + p**5 / q**2) * u + p**8 * u * u / q**3
    second = p ** (2 * n - 7) / (q**3 * n2 * n3) * rho2 * poly
    return first, second


def _shape(x, value):
    return value if np.ndim(x) else float(np.asarray(value).reshape(-1)[0])


def moment_m0(x, cfg: OperatorConfig, form: str = "exact"):
    _check_form(form)
    return _shape(x, np.ones_like(np.asarray(x, dtype=float)))


def moment_m1(x, cfg: OperatorConfig, form: str = "exact"):
    """T(t, x)."""
    _check_form(form)
    p, q, big_n, n2, n3, two, d = _constants(cfg)
    x = np.asarray(x, dtype=float) if np.ndim(x) else x
    a = cfg.alpha
    if form == "published":
        val = a / d + big_n / (p * q**2 * d * n2) + big_n**2 / (p * q**2 * d * n2) * x
    else:
        first, _ = _kernel_means(x, cfg)
        val = a / d + big_n / d * first
    return _shape(x, val)


def moment_m2(x, cfg: OperatorConfig, form: str = "exact"):
    """T(t^2, x)."""
    _check_form(form)
    p, q, big_n, n2, n3, two, d = _constants(cfg)
    x = np.asarray(x, dtype=float) if np.ndim(x) else x
    a = cfg.alpha
    if form == "published":
        val = (
            a**2 / d**2
            + 2 * a * big_n / (d**2 * p * q**2 * n2)
            + two * big_n**2 / (d**2 * p**5 * q**3 * n2 * n3)
            + big_n**2 / (d**2 * p * q**2 * n2) * ((q * (p + two) + p**2) * big_n / (p**3 * q**3 * n3) + 2 * a) * x
            + big_n**4 / (d**2 * p * q**6 * n2 * n3) * x**2
        )
    else:
        first, second = _kernel_means(x, cfg)
        val = a**2 / d**2 + 2 * a * big_n / d**2 * first + big_n**2 / d**2 * second
    return _shape(x, val)


def central_moment2(x, cfg: OperatorConfig, form: str = "exact"):
    """T((t - x)^2, x).

    The exact form expands the square around the shifted argument,
    ``(alpha/D - x + [n] p^k t / D)^2``, which is an algebraic route separate
    from ``m2 - 2 x m1 + x^2``.  The published form is transcribed as printed.
    """
    _check_form(form)
    p, q, big_n, n2, n3, two, d = _constants(cfg)
    x = np.asarray(x, dtype=float) if np.ndim(x) else x
    a = cfg.alpha
    if form == "published":
        c2 = big_n**4 / (d**2 * p * q**6 * n2 * n3) - 2 * big_n**2 / (p * q**2 * d * n2) + 1
        c1 = (
            2 * a * big_n**2 / (d**2 * p * q**2 * n2)
            + big_n**3 * (q * (p + two) + p**2) / (d**2 * p**4 * q**5 * n2 * n3)
            - 2 * a / d
            - 2 * big_n / (q * p**2 * d * n2)
        )
        c0 = 2 * a * big_n / (d**2 * q * p**2 * n2) + two * big_n**2 / (d**2 * p**5 * q**3 * n2 * n3) + a**2 / d**2
        val = c2 * x**2 + c1 * x + c0
    else:
        first, second = _kernel_means(x, cfg)
        shift = a / d - x
        val = shift**2 + 2 * shift * big_n / d * first + big_n**2 / d**2 * second
    return _shape(x, val)
