"""Brute-force oracles shared by the test modules.

Everything here is deliberately independent of the implementation paths it
checks: direct series summation, exhaustive enumeration of configurations,
and log-free arithmetic where feasible.
"""

import math
from fractions import Fraction

from zrp import log_weight
from zrp.canonical import iter_compositions


def series_log_partition(phi, R, model, kmax=4000):
    """log sum_k w(k) phi^k by direct truncated summation."""
    return math.log(math.fsum(math.exp(log_weight(k, R, model)) * phi**k for k in range(kmax)))


def enumeration_log_z(L, N, R, model):
    """log Z(L,N) by summing the product weights over every configuration."""
    total = 0.0
    for eta in iter_compositions(L, N):
        total += math.exp(sum(log_weight(k, R, model) for k in eta))
    return math.log(total)


def exact_log_z(L, N, R, model):
    """log Z(L,N) in exact rational arithmetic (floats are rationals).

    Weight products and the sum over configurations are Fractions, so the
    only rounding is the final log of an exact big-integer ratio.
    """
    c0 = Fraction(model.c0)
    c1 = Fraction(model.c1)

    def weight(k):
        if k <= R:
            return Fraction(1, 1) / c0**k
        return (Fraction(1, 1) / c0**R) * c1 ** (R - k)

    total = Fraction(0)
    for eta in iter_compositions(L, N):
        term = Fraction(1)
        for k in eta:
            term *= weight(k)
        total += term
    return math.log(total.numerator) - math.log(total.denominator)


def enumerate_bounded(L, N, R):
    """All configurations with every occupation <= R."""
    return [eta for eta in iter_compositions(L, N) if max(eta) <= R]


def max_site_partition(L, N, R, model):
    """Z split by the number of sites above R, via enumeration."""
    out = {}
    for eta in iter_compositions(L, N):
        m = sum(1 for k in eta if k > R)
        out[m] = out.get(m, 0.0) + math.exp(sum(log_weight(k, R, model) for k in eta))
    return out


def exact_canonical_pmf(L, N, R, model):
    """{configuration: probability} under the canonical measure."""
    weights = {
        eta: math.exp(sum(log_weight(k, R, model) for k in eta))
        for eta in iter_compositions(L, N)
    }
    z = sum(weights.values())
    return {eta: w / z for eta, w in weights.items()}
