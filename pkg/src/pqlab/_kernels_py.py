"""Pure-numpy implementation of the hot kernels (reference and fallback)."""
import numpy as np


def kernel_sums(n, kmax, p, q, t, values, log_coef, edge):
    """Normalized Jackson sums of the Baskakov kernels against sampled values.

    For k = 0..kmax returns ``sums[k] = sum_j exp(L[k, j]) * values[k, j]`` with

        L[k, j] = log_coef[k] + (k + 1) log t_j - sum_{s < n + k} log(p^s + q^s p t_j)

    and, per k, the largest term magnitude among the first and among the
    last ``edge`` nodes (``t`` ascending); those drive the tail rule.
    """
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    log_t = np.log(t)
    pt = p * t
    log_den = np.zeros_like(t)
    for s in range(n):
        log_den += np.log(p**s + q**s * pt)
    sums = np.empty(kmax + 1)
    lo = np.empty(kmax + 1)
    hi = np.empty(kmax + 1)
    for k in range(kmax + 1):
        if k:
            s = n + k - 1
            log_den += np.log(p**s + q**s * pt)
        terms = np.exp(log_coef[k] + (k + 1) * log_t - log_den) * values[k]
        sums[k] = terms.sum()
        lo[k] = np.abs(terms[:edge]).max()
        hi[k] = np.abs(terms[-edge:]).max()
    return sums, lo, hi
