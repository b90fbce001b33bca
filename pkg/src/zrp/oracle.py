"""Exhaustive-enumeration checks for small systems.

Builds the full generator matrix of the process on the configurations with
N particles on L sites and verifies stationarity of the product-form weights
(and detailed balance for symmetric kernels) by direct linear algebra, plus
the empirical distribution of a long simulation run.
"""

from __future__ import annotations

import math

import numpy as np

from .canonical import iter_compositions
from .errors import ResourceError
from .grand_canonical import RateModel, log_weight
from .kmc import Lattice, SimState, state_time_distribution

MAX_ORACLE_STATES = 20_000


def enumerate_states(L: int, N: int, limit: int = MAX_ORACLE_STATES) -> list[tuple[int, ...]]:
    """All configurations of N particles on L sites, smallest systems only."""
    count = math.comb(N + L - 1, L - 1)
    if count > limit:
        raise ResourceError(f"state space has {count} configurations, limit {limit}")
    return list(iter_compositions(L, N))


def build_generator(
    L: int, N: int, R: int, model: RateModel, lattice: Lattice
) -> tuple[list[tuple[int, ...]], np.ndarray, np.ndarray]:
    """(states, generator matrix Q, stationary weights pi) for the finite chain."""
    states = enumerate_states(L, N)
    index = {s: i for i, s in enumerate(states)}
    n = len(states)
    Q = np.zeros((n, n))
    for s, i in index.items():
        for x in range(L):
            k = s[x]
            if k == 0:
                continue
            g = model.jump_rate(k, R)
            for off, p in zip(lattice.offsets, lattice.probabilities):
                y = (x + off) % L
                t = list(s)
                t[x] -= 1
                t[y] += 1
                j = index[tuple(t)]
                rate = g * p
                Q[i, j] += rate
                Q[i, i] -= rate
    pi = np.array([math.exp(sum(log_weight(k, R, model) for k in s)) for s in states])
    pi /= pi.sum()
    return states, Q, pi


def stationarity_residual(pi: np.ndarray, Q: np.ndarray) -> float:
    """max_j |(pi Q)_j|, zero iff pi is stationary."""
    return float(np.abs(pi @ Q).max())


def detailed_balance_residual(pi: np.ndarray, Q: np.ndarray) -> float:
    """max |pi_i Q_ij - pi_j Q_ji| over i != j."""
    F = pi[:, None] * Q
    off = F - F.T
    np.fill_diagonal(off, 0.0)
    return float(np.abs(off).max())


def kmc_empirical_tv(
    L: int,
    N: int,
    R: int,
    model: RateModel,
    lattice: Lattice,
    rng: np.random.Generator,
    n_events: int,
    initial: tuple[int, ...] | None = None,
) -> float:
    """Total-variation distance between a long run's time-weighted empirical
    state distribution and the exact stationary law."""
    states, _, pi = build_generator(L, N, R, model, lattice)
    if initial is None:
        initial = states[0]
    st = SimState.from_occupations(np.array(initial, dtype=np.int64), R)
    acc, pows = state_time_distribution(st, model, lattice, rng, n_events)
    total = acc.sum()
    tv = 0.0
    for s, p in zip(states, pi):
        code = int(sum(e * q for e, q in zip(s, pows)))
        tv += abs(acc[code] / total - p)
    return 0.5 * tv
