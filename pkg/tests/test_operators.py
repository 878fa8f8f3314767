import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pqlab import _kernels_py
from pqlab.calculus import PqPair, log_pq_factorials, pq_integer
from pqlab.errors import DivergentTail, DomainError, NodeBudgetExceeded, ValidationError
from pqlab.integrate import QuadConfig, classical_improper
from pqlab.operators import (
    OperatorConfig,
    as_scalar_fn,
    baskakov_weight,
    central_moment2,
    kernel_integrals,
    log_kernel_normalizer,
    moment_m0,
    moment_m1,
    moment_m2,
    operator_apply,
    operator_apply_many,
    per_k_normalization,
    szasz_basis,
)

PQ = PqPair(0.95, 0.9)


def cfg_of(n=6, p=0.95, q=0.9, alpha=0.0, beta=0.0, **kw):
    return OperatorConfig(n, PqPair(p, q), alpha, beta, **kw)


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValidationError):
            cfg_of(n=3)
        with pytest.raises(ValidationError):
            cfg_of(alpha=-1)
        with pytest.raises(ValidationError):
            cfg_of(alpha=2, beta=1)
        assert cfg_of(alpha=2, beta=1, allow_alpha_above_beta=True).alpha == 2
        with pytest.raises(ValidationError):
            OperatorConfig(6, PqPair(0.9, 0.9))
        with pytest.raises(ValidationError):
            cfg_of(normalization="other")

    def test_scalar_fn_wraps_scalar_only_functions(self):
        fn = as_scalar_fn(lambda t: math.exp(-t))
        assert np.allclose(fn(np.array([0.0, 1.0])), [1.0, math.exp(-1)])


class TestBasis:
    def test_szasz_examples(self):
        assert szasz_basis(5, 0, 0.0, PQ) == 1
        assert szasz_basis(5, 3, 0.0, PQ) == 0
        total = sum(szasz_basis(5, k, 1.0, PQ) for k in range(200))
        assert total == pytest.approx(1, abs=1e-9)

    def test_szasz_large_argument(self):
        pq = PqPair(1.0, 1.0)
        # Poisson weights with mean 5000, far beyond exp overflow
        assert szasz_basis(1000, 5000, 5.0, pq) == pytest.approx(
            math.exp(-5000 + 5000 * math.log(5000) - math.lgamma(5001)), rel=1e-9
        )

    def test_baskakov_examples(self):
        assert baskakov_weight(5, 0, 0.0, PqPair(1, 1)) == 1
        assert baskakov_weight(5, 0, 0.0, PQ) == pytest.approx(0.95 ** (-10))
        assert baskakov_weight(5, 2, 1.0, PqPair(1, 1)) == pytest.approx(15 / 128)
        assert baskakov_weight(5, 2, 0.0, PQ) == 0

    def test_baskakov_matches_product_form(self):
        from pqlab.calculus import pq_binomial, pq_power_plus

        for k, t in itertools.product(range(5), (0.3, 1.0, 4.0)):
            direct = pq_binomial(6 + k - 1, k, PQ) * t**k / pq_power_plus(1, PQ.p * t, 6 + k, PQ)
            assert baskakov_weight(6, k, t, PQ) == pytest.approx(direct, rel=1e-12)


class TestNormalization:
    @pytest.mark.parametrize("n", [5, 8])
    @pytest.mark.parametrize("p,q", [(0.95, 0.9), (0.99, 0.97), (1.0, 0.9)])
    def test_per_k_exact_constant(self, n, p, q):
        for k in range(9):
            assert per_k_normalization(n, k, PqPair(p, q)) == pytest.approx(1, abs=1e-9)

    def test_per_k_stated_constant_ratio(self):
        # stated constant times integral = q^-1 p^(k(k+1)/2 - (n-1)(n-2)/2)
        for n, k in itertools.product([5, 8], range(9)):
            got = per_k_normalization(n, k, PQ, "published")
            assert got == pytest.approx(PQ.p ** (k * (k + 1) / 2 - (n - 1) * (n - 2) / 2) / PQ.q, rel=1e-9)

    def test_operator_of_one(self):
        for n, (p, q), (a, b) in itertools.product([4, 6, 10], [(1.0, 0.9), (0.95, 0.9), (0.99, 0.98)], [(0, 0), (1, 2)]):
            vals = operator_apply_many(lambda t: np.ones_like(t), [0.0, 0.5, 1.0, 2.0, 5.0], cfg_of(n, p, q, a, b))
            assert np.allclose(vals, 1.0, atol=1e-8, rtol=0)

    def test_published_normalization_breaks_constants(self):
        v = operator_apply(lambda t: np.ones_like(t), 1.0, cfg_of(normalization="published"))
        assert abs(v - 1) > 0.1

    def test_kernel_route_matches_generic_route(self):
        # batched kernel integrals vs the generic Jackson integral, f = 1
        cfg = cfg_of(8, 0.97, 0.93)
        batched = kernel_integrals(lambda t: np.ones_like(t), cfg, 8)
        generic = [per_k_normalization(8, k, cfg.pq) for k in range(9)]
        assert np.allclose(batched, generic, rtol=1e-10)


class TestOperator:
    def test_first_moment_example(self):
        cfg = cfg_of(6, 0.95, 0.9, 1.0, 2.0)
        assert operator_apply(lambda t: t, 1.0, cfg) == pytest.approx(moment_m1(1.0, cfg), abs=1e-6)

    def test_zero_short_circuit(self):
        cfg = cfg_of(6, 0.95, 0.9, 1.0, 2.0)
        f = lambda t: np.exp(-t)  # noqa: E731
        assert operator_apply(f, 0.0, cfg) == kernel_integrals(f, cfg, 0)[0]
        assert operator_apply(f, 1e-300, cfg) == pytest.approx(operator_apply(f, 0.0, cfg), rel=1e-12)

    def test_second_moment_at_zero(self):
        cfg = cfg_of(6, 0.98, 0.95)
        p, q, n = cfg.pq.p, cfg.pq.q, 6
        big_n, n2, n3, two = (pq_integer(m, cfg.pq) for m in (n, n - 2, n - 3, 2))
        direct = operator_apply(lambda t: t * t, 0.0, cfg)
        assert direct == pytest.approx(two * p ** (2 * n - 7) / (q**3 * n2 * n3), rel=1e-10)
        assert moment_m2(0.0, cfg) == pytest.approx(direct, rel=1e-10)
        # the published constant is off by exactly p^(2n-2), so it only
        # agrees in the limit p, q -> 1
        published = two * big_n**2 / (big_n**2 * p**5 * q**3 * n2 * n3)
        assert direct / published == pytest.approx(p ** (2 * n - 2), rel=1e-10)

    @pytest.mark.parametrize("x", [0.0, 0.5, 2.0, 7.0])
    def test_moments_match_direct(self, x):
        cfg = cfg_of(8, 0.98, 0.95, 0.5, 1.0)
        assert moment_m1(x, cfg) == pytest.approx(operator_apply(lambda t: t, x, cfg), rel=1e-5)
        assert moment_m2(x, cfg) == pytest.approx(operator_apply(lambda t: t * t, x, cfg), rel=1e-5)

    def test_published_moments_disagree(self):
        # recorded in ERRATA.md: the printed moments are not the operator's
        cfg = cfg_of(8, 0.98, 0.95, 0.5, 1.0)
        direct = operator_apply(lambda t: t, 2.0, cfg)
        assert abs(moment_m1(2.0, cfg, "published") - direct) / direct > 1e-4

    def test_moment_forms_at_classical_limit(self):
        cfg = OperatorConfig(10, PqPair(1, 1))
        xs = np.array([0.0, 0.5, 3.0])
        expected = (10 * xs + 1) / 8
        assert np.allclose(moment_m1(xs, cfg), expected)
        assert np.allclose(moment_m1(xs, cfg, "published"), expected)
        assert np.allclose(moment_m2(xs, cfg), moment_m2(xs, cfg, "published"))
        assert np.all(moment_m0(xs, cfg) == 1)

    def test_central_moment_examples(self):
        cfg = cfg_of(8, 0.98, 0.95)
        direct = operator_apply(lambda t: (t - 1) ** 2, 1.0, cfg)
        assert central_moment2(1.0, cfg) == pytest.approx(direct, rel=1e-5)
        cfg = cfg_of(8, 0.98, 0.95, 0.5, 1.0)
        assert central_moment2(0.0, cfg) == pytest.approx(moment_m2(0.0, cfg), rel=1e-12)
        # published display at x = 0 is its constant term
        big_n, n2, n3, two = (pq_integer(m, cfg.pq) for m in (8, 6, 5, 2))
        p, q, a, d = 0.98, 0.95, 0.5, big_n + 1.0
        c0 = 2 * a * big_n / (d**2 * q * p**2 * n2) + two * big_n**2 / (d**2 * p**5 * q**3 * n2 * n3) + a**2 / d**2
        assert central_moment2(0.0, cfg, "published") == pytest.approx(c0, rel=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(
        st.integers(4, 30),
        st.floats(0.8, 1.0),
        st.floats(0.1, 0.99),
        st.floats(0, 3),
        st.floats(0, 1),
        st.floats(0, 10),
    )
    def test_central_identity(self, n, p, qfrac, beta, afrac, x):
        cfg = OperatorConfig(n, PqPair(p, p * qfrac), afrac * beta, beta)
        ref = moment_m2(x, cfg) - 2 * x * moment_m1(x, cfg) + x * x
        assert central_moment2(x, cfg) == pytest.approx(ref, rel=1e-10)

    def test_positivity_and_monotonicity(self):
        cfg = cfg_of(8, 0.97, 0.93, 0.5, 1.0)
        xs = np.linspace(0, 6, 25)
        f = lambda t: np.sin(t) ** 2  # noqa: E731
        g = lambda t: np.sin(t) ** 2 + np.exp(-t)  # noqa: E731
        tf, tg = operator_apply_many(f, xs, cfg), operator_apply_many(g, xs, cfg)
        assert np.all(tf >= 0)
        assert np.all(tg >= tf)

    @pytest.mark.parametrize("f", [np.sin, np.cos, lambda t: np.sign(np.sin(3 * t)), lambda t: 1 / (1 + t)])
    def test_bounded_stays_bounded(self, f):
        cfg = cfg_of(10, 0.99, 0.97, 1.0, 2.0)
        vals = operator_apply_many(f, np.linspace(0, 10, 41), cfg)
        assert np.max(np.abs(vals)) <= 1 + 1e-8

    def test_classical_limit_matches_per_k_oracle(self):
        n = 10
        cfg = OperatorConfig(n, PqPair(1, 1))
        f = lambda t: np.exp(-t)  # noqa: E731
        batched = kernel_integrals(f, cfg, 30)
        for k in (0, 3, 12, 30):
            lb = math.lgamma(n + k) - math.lgamma(k + 1) - math.lgamma(n)
            ref = (n - 1) * classical_improper(lambda t: np.exp(lb + k * np.log(t) - (n + k) * np.log1p(t)) * f(t))
            assert batched[k] == pytest.approx(ref, abs=1e-11)

    def test_classical_operator_value(self):
        # T(t, x) = (n x + 1) / (n - 2) at p = q = 1
        cfg = OperatorConfig(10, PqPair(1, 1))
        assert operator_apply(lambda t: t, 2.0, cfg) == pytest.approx(21 / 8, rel=1e-12)

    def test_errors_carry_k(self):
        cfg = cfg_of(6, 0.95, 0.9)
        # t^n outgrows every kernel, so the ladder towards infinity diverges;
        # a shorter budget stops it before t^4 overflows
        short = cfg_of(4, 0.95, 0.9, quad=QuadConfig(node_budget=2100))
        with pytest.raises(DivergentTail) as info:
            operator_apply(lambda t: t**4, 1.0, short)
        assert info.value.k is not None
        # exponential growth overflows at some node first
        with pytest.raises(DomainError) as info:
            operator_apply(np.exp, 1.0, cfg)
        assert info.value.k is not None
        with pytest.raises(DomainError) as info:
            operator_apply(lambda t: np.sqrt(t - 1.0), 1.0, cfg)
        assert info.value.k is not None and info.value.t < 1.0


class TestBackends:
    def test_compiled_matches_numpy(self):
        compiled = pytest.importorskip("pqlab._kernels")
        for n, p, q, kmax in [(5, 0.95, 0.9, 10), (16, 0.97, 0.94, 60), (40, 0.99, 0.98, 150)]:
            pq = PqPair(p, q)
            j = np.arange(600, -601, -1, dtype=float)
            t = (q / p) ** j / p
            k = np.arange(kmax + 1)
            lf = log_pq_factorials(n + kmax, pq)
            log_coef = math.log(p - q) + lf[n - 1 + k] - lf[k] - lf[n - 1] + log_kernel_normalizer(n, k, pq)
            vals = np.broadcast_to(np.cos(t)[None, :], (kmax + 1, t.size))
            a = _kernels_py.kernel_sums(n, kmax, p, q, t, vals, log_coef, 3)
            b = compiled.kernel_sums(n, kmax, p, q, t, vals, log_coef, 3)
            for x, y in zip(a, b):
                # signed values cancel, so compare against the overall scale
                assert np.allclose(x, y, rtol=1e-12, atol=1e-12 * np.max(np.abs(x)))
