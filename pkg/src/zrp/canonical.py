"""Canonical-ensemble computations for the zero-range process.

Exact finite-size quantities via the partition-function recursion
Z(l,n) = sum_k w(k) Z(l-1,n-k) held in log space, bounded-composition
counts, the decomposition of the state space by the number of sites above
the cutoff, exact phase-conditioned sampling, and the closed-form
thermodynamic-limit quantities (canonical entropy, transition and
metastability densities, background rate function, lifetime exponents,
specific relative entropy).
"""

from __future__ import annotations

import itertools
import math
import struct
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.special import gammaln

from .errors import DomainError, EmptyPhaseError, ResourceError
from .grand_canonical import LATTICE_DEP, RateModel, fluid_entropy, log_partition

DEFAULT_TABLE_BUDGET = 4_000_000_000  # limit on L * N_max^2
RHO_TRANS_TOL = 1e-12
_CACHE_MAX = 16

CACHE_MAGIC = b"ZRPC"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sIIIIdd")  # magic, version, L, N_max, R, c0, c1


def composition_entropy(rho: float) -> float:
    """Entropy density of unconstrained compositions, (1+r)log(1+r) - r log r."""
    if rho < 0.0:
        raise DomainError(f"density must be >= 0, got {rho}")
    if rho == 0.0:
        return 0.0
    return (1.0 + rho) * math.log1p(rho) - rho * math.log(rho)


def log_composition_count(L: int, N: int) -> float:
    """Log number of compositions of N into L nonnegative parts (stars and bars)."""
    if L < 1 or N < 0:
        raise DomainError(f"need L >= 1 and N >= 0, got L={L}, N={N}")
    return float(gammaln(N + L) - gammaln(L) - gammaln(N + 1))


def _log_binom(n: int, k: int) -> float:
    if k < 0 or k > n:
        return -math.inf
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


@njit(cache=True, nogil=True)
def _next_bounded_count_row(prev, R):
    # C(l,n) = sum_{k=0}^{min(R,n)} C(l-1,n-k), log space, max-subtraction
    N = prev.shape[0] - 1
    row = np.full(N + 1, -np.inf)
    for n in range(N + 1):
        kmax = min(R, n)
        m = -np.inf
        for k in range(kmax + 1):
            t = prev[n - k]
            if t > m:
                m = t
        if m > -np.inf:
            s = 0.0
            for k in range(kmax + 1):
                s += np.exp(prev[n - k] - m)
            row[n] = m + np.log(s)
    return row


@njit(cache=True, nogil=True)
def _next_partition_row(prev, R, lc0, lc1):
    # Z(l,n) = sum_k w(k) Z(l-1,n-k).  Bulk k <= R by direct log-sum-exp;
    # the k > R tail obeys tail(n) = logaddexp(tail(n-1) - lc1,
    # w(R+1) + prev(n-R-1)), a positive-term recurrence with no cancellation.
    N = prev.shape[0] - 1
    row = np.full(N + 1, -np.inf)
    for n in range(N + 1):
        kmax = min(R, n)
        m = -np.inf
        for k in range(kmax + 1):
            t = -k * lc0 + prev[n - k]
            if t > m:
                m = t
        if m > -np.inf:
            s = 0.0
            for k in range(kmax + 1):
                s += np.exp(-k * lc0 + prev[n - k] - m)
            row[n] = m + np.log(s)
    if N >= R + 1:
        tail = -np.inf
        w_first = -R * lc0 - lc1
        for n in range(R + 1, N + 1):
            t_new = w_first + prev[n - R - 1]
            a = tail - lc1
            if a < t_new:
                a, t_new = t_new, a
            if t_new == -np.inf:
                tail = a
            else:
                tail = a + np.log1p(np.exp(t_new - a))
            if row[n] == -np.inf:
                row[n] = tail
            elif tail > row[n]:
                row[n] = tail + np.log1p(np.exp(row[n] - tail))
            else:
                row[n] = row[n] + np.log1p(np.exp(tail - row[n]))
    return row


_COUNT_CACHE: OrderedDict = OrderedDict()
_TABLE_CACHE: OrderedDict = OrderedDict()


def _cache_put(cache: OrderedDict, key, value):
    cache[key] = value
    if len(cache) > _CACHE_MAX:
        cache.popitem(last=False)


def bounded_count_table(L: int, N_max: int, R: int) -> np.ndarray:
    """Table of log |X0(l,n)| (compositions with all parts <= R) for l <= L, n <= N_max."""
    if L < 1 or N_max < 0 or R < 0:
        raise DomainError(f"need L >= 1, N_max >= 0, R >= 0, got {L}, {N_max}, {R}")
    key = (L, N_max, R)
    if key in _COUNT_CACHE:
        _COUNT_CACHE.move_to_end(key)
        return _COUNT_CACHE[key]
    table = np.full((L + 1, N_max + 1), -np.inf)
    table[0, 0] = 0.0
    for l in range(1, L + 1):
        table[l] = _next_bounded_count_row(table[l - 1], R)
    table.setflags(write=False)
    _cache_put(_COUNT_CACHE, key, table)
    return table


def log_bounded_count(L: int, N: int, R: int) -> float:
    """Log count of compositions of N into L parts all <= R; -inf when N > L*R."""
    return float(bounded_count_table(L, N, R)[L, N])


@dataclass(frozen=True)
class CanonicalTable:
    """Log-space recursion tables for a fixed cutoff.

    ``log_z[l, n]`` is the log canonical partition function on l sites with n
    particles, ``log_count_bounded[l, n]`` the log number of configurations
    with all occupations <= cutoff.  Rows are immutable once built and safe
    to share across threads.
    """

    L: int
    N_max: int
    cutoff: int
    model: RateModel
    log_z: np.ndarray
    log_count_bounded: np.ndarray

    def entropy_estimate(self, l: int, n: int) -> float:
        """Finite-size entropy density (1/l) log Z(l,n)."""
        return float(self.log_z[l, n]) / l

    def save(self, path) -> None:
        save_table(self, path)


def canonical_table(L: int, N_max: int, model: RateModel, budget: int = DEFAULT_TABLE_BUDGET) -> CanonicalTable:
    """Build (or fetch from cache) the recursion tables up to (L, N_max).

    In particle-dependent mode the cutoff is fixed by the target particle
    number N_max, so one table is built per target N.
    """
    if L < 1 or N_max < 0:
        raise DomainError(f"need L >= 1 and N_max >= 0, got L={L}, N_max={N_max}")
    if L * N_max * N_max > budget:
        raise ResourceError(
            f"table size L*N_max^2 = {L * N_max * N_max} exceeds budget {budget}"
        )
    R = model.cutoff(L=L, N=N_max)
    key = (L, N_max, R, model.c0, model.c1)
    if key in _TABLE_CACHE:
        _TABLE_CACHE.move_to_end(key)
        cached = _TABLE_CACHE[key]
        return cached
    lc0, lc1 = math.log(model.c0), math.log(model.c1)
    log_z = np.full((L + 1, N_max + 1), -np.inf)
    log_z[0, 0] = 0.0
    for l in range(1, L + 1):
        log_z[l] = _next_partition_row(log_z[l - 1], R, lc0, lc1)
    log_z.setflags(write=False)
    table = CanonicalTable(
        L=L,
        N_max=N_max,
        cutoff=R,
        model=model,
        log_z=log_z,
        log_count_bounded=bounded_count_table(L, N_max, R),
    )
    _cache_put(_TABLE_CACHE, key, table)
    return table


def save_table(table: CanonicalTable, path) -> None:
    """Write a table cache file: ZRPC header then both float64 tables row-major."""
    header = _HEADER.pack(
        CACHE_MAGIC, CACHE_VERSION, table.L, table.N_max, table.cutoff, table.model.c0, table.model.c1
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(table.log_z, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(table.log_count_bounded, dtype="<f8").tobytes())


def load_table(path) -> CanonicalTable:
    """Read a table cache file written by :func:`save_table`.

    The restored model pins the stored cutoff through ``explicit_R`` (the
    file does not record how R was derived).
    """
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        magic, version, L, N_max, R, c0, c1 = _HEADER.unpack(raw)
        if magic != CACHE_MAGIC:
            raise ValueError(f"not a table cache file (magic {magic!r})")
        if version != CACHE_VERSION:
            raise ValueError(f"unsupported cache version {version}")
        shape = (L + 1, N_max + 1)
        count = shape[0] * shape[1]
        log_z = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(shape).copy()
        counts = np.frombuffer(fh.read(8 * count), dtype="<f8").reshape(shape).copy()
    log_z.setflags(write=False)
    counts.setflags(write=False)
    model = RateModel(c0=c0, c1=c1, a=0.0, mode=LATTICE_DEP, explicit_R=int(R))
    return CanonicalTable(
        L=L, N_max=N_max, cutoff=int(R), model=model, log_z=log_z, log_count_bounded=counts
    )


def iter_compositions(L: int, N: int):
    """Yield all compositions of N into L nonnegative ordered parts."""
    if L < 1 or N < 0:
        raise DomainError(f"need L >= 1 and N >= 0, got L={L}, N={N}")
    for cuts in itertools.combinations(range(N + L - 1), L - 1):
        prev = -1
        parts = []
        for c in cuts:
            parts.append(c - prev - 1)
            prev = c
        parts.append(N + L - 2 - prev)
        yield tuple(parts)


@dataclass(frozen=True)
class PhaseDecomposition:
    """Split of the canonical partition function by the number of sites above R."""

    L: int
    N: int
    cutoff: int
    M: int
    log_z_m: np.ndarray
    probabilities: np.ndarray
    log_z_total: float


def phase_decomposition(L: int, N: int, model: RateModel, table: CanonicalTable | None = None) -> PhaseDecomposition:
    """Exact weights Z^m of configurations with exactly m sites above the cutoff.

    Probabilities are normalized by the recursion value of Z(L,N); their sum
    being 1 within 1e-9 cross-validates the decomposition against the
    recursion.
    """
    if table is None:
        table = canonical_table(L, N, model)
    R = table.cutoff
    counts = table.log_count_bounded
    lc0, lc1 = math.log(model.c0), math.log(model.c1)
    if N == 0:
        M = 0
    elif R >= 1:
        M = min(L, -(-N // R))
    else:
        M = min(L, N)
    log_z_m = np.full(M + 1, -np.inf)
    log_z_m[0] = -N * lc0 + counts[L, N]
    for m in range(1, M + 1):
        k_lo = m * (R + 1)
        if k_lo > N:
            break
        ks = np.arange(k_lo, N + 1)
        terms = (
            -(N - ks) * lc0
            - (ks - m * R) * lc1
            + counts[L - m, N - ks]
            + gammaln(ks - m * R)
            - gammaln(float(m))
            - gammaln(ks - m * R - m + 1)
        )
        finite = terms[np.isfinite(terms)]
        if finite.size:
            top = finite.max()
            log_sum = top + math.log(np.exp(finite - top).sum())
            log_z_m[m] = _log_binom(L, m) - m * R * lc0 + log_sum
    log_total = float(table.log_z[L, N])
    probabilities = np.exp(log_z_m - log_total)
    return PhaseDecomposition(
        L=L, N=N, cutoff=R, M=M, log_z_m=log_z_m, probabilities=probabilities, log_z_total=log_total
    )


def _effective_a(rho: float, model: RateModel) -> float:
    return model.a if model.mode == LATTICE_DEP else model.a * rho


def transition_density(model: RateModel) -> float:
    """Density where fluid and condensed contributions to the entropy cross.

    Unique root >= rho_c of the defining relation; found by bisection with
    bracket doubling from rho_c.
    """
    a = model.a
    c0, c1 = model.c0, model.c1
    rho_c = c1 / (c0 - c1)
    if a == 0.0:
        return rho_c
    log_ratio = math.log(c0 / c1)
    s_c = fluid_entropy(rho_c, model)
    lc1 = math.log(c1)

    def excess(rho: float) -> float:
        budget = a * log_ratio * (1.0 if model.mode == LATTICE_DEP else rho)
        return s_c - (rho - rho_c) * lc1 - fluid_entropy(rho, model) - budget

    hi = rho_c + max(1.0, 2.0 * a)
    while excess(hi) <= 0.0:
        hi = rho_c + 2.0 * (hi - rho_c)
        if hi > 1e12:
            raise ResourceError("transition-density bracket failed to close")
    lo = rho_c
    while hi - lo > RHO_TRANS_TOL:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if excess(mid) <= 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def metastable_onset(model: RateModel) -> float:
    """Density where the condensed phase first becomes metastable."""
    if model.a == 0.0:
        raise DomainError("no metastable region for a = 0")
    rho_c0 = model.c1 / (model.c0 - model.c1)
    if model.mode == LATTICE_DEP:
        return rho_c0 + model.a
    return rho_c0 / (1.0 - model.a)


def canonical_entropy(rho: float, model: RateModel) -> float:
    """Thermodynamic-limit canonical entropy density.

    Fluid entropy up to the transition density; beyond it the condensate
    contributes a linear term.  The transition line itself takes the
    condensed branch (the two branches agree there anyway).
    """
    if rho < 0.0:
        raise DomainError(f"density must be >= 0, got {rho}")
    rho_t = transition_density(model)
    if rho < rho_t:
        return fluid_entropy(rho, model)
    c0, c1, a = model.c0, model.c1, model.a
    rho_c0 = c1 / (c0 - c1)
    lc1 = math.log(c1)
    log_ratio = math.log(c0 / c1)
    if model.mode == LATTICE_DEP:
        return fluid_entropy(rho_c0, model) - (rho - rho_c0) * lc1 - a * log_ratio
    return fluid_entropy(rho_c0, model) - rho * (a * log_ratio + lc1) + rho_c0 * lc1


def rate_function(rho: float, rho_bg: float, model: RateModel) -> float:
    """Large-deviation rate of observing background density rho_bg at total density rho.

    Infinite for rho_bg > rho; otherwise two branches meeting continuously at
    rho_bg = rho - a (a replaced by rho*a in particle mode).
    """
    if rho <= 0.0:
        raise DomainError(f"total density must be > 0, got {rho}")
    if rho_bg < 0.0:
        raise DomainError(f"background density must be >= 0, got {rho_bg}")
    if rho_bg > rho:
        return math.inf
    a_eff = _effective_a(rho, model)
    s_can = canonical_entropy(rho, model)
    base = s_can - fluid_entropy(rho_bg, model)
    if rho_bg >= rho - a_eff:
        val = base + (rho - rho_bg) * math.log(model.c0)
    else:
        val = base + (rho - rho_bg) * math.log(model.c1) + a_eff * math.log(model.c0 / model.c1)
    if -1e-9 < val < 0.0:
        return 0.0  # exact minima, float roundoff only
    return val


@dataclass(frozen=True)
class RateFunctionCurve:
    """Background rate function on a grid, with detected extrema."""

    rho: float
    rho_bg: np.ndarray
    values: np.ndarray
    local_minima: tuple[float, ...]
    local_maxima: tuple[float, ...]
    global_minimum: float
    branch_point: float
    branch_gap: float


def rate_function_curve(
    rho: float, model: RateModel, n_grid: int = 801, rho_bg_max: float | None = None
) -> RateFunctionCurve:
    """Evaluate the rate function on a grid and locate its finite extrema.

    The grid always contains the analytically special points (rho_c, the
    branch point rho - a, rho itself) so minima are not straddled.
    """
    a_eff = _effective_a(rho, model)
    rho_c0 = model.c1 / (model.c0 - model.c1)
    hi = rho_bg_max if rho_bg_max is not None else rho * 1.05
    grid = np.linspace(0.0, hi, n_grid)
    special = [rho, rho_c0, rho - a_eff]
    pts = np.concatenate([grid, [p for p in special if 0.0 <= p <= hi]])
    pts = np.unique(pts)
    vals = np.array([rate_function(rho, b, model) for b in pts])
    finite = np.isfinite(vals)
    idx = np.where(finite)[0]
    minima, maxima = [], []
    for j, i in enumerate(idx):
        v = vals[i]
        left = vals[idx[j - 1]] if j > 0 else math.inf
        right = vals[idx[j + 1]] if j + 1 < len(idx) else math.inf
        if v < left and v < right:
            minima.append(float(pts[i]))
        elif v > left and v > right:
            maxima.append(float(pts[i]))
    gmin = min(((vals[i], pts[i]) for i in idx), key=lambda t: (t[0], t[1]))[1]
    branch = rho - a_eff
    gap = 0.0
    if 0.0 <= branch <= rho:
        base = canonical_entropy(rho, model) - fluid_entropy(branch, model)
        up = base + (rho - branch) * math.log(model.c0)
        down = base + (rho - branch) * math.log(model.c1) + a_eff * math.log(model.c0 / model.c1)
        gap = abs(up - down)
    return RateFunctionCurve(
        rho=rho,
        rho_bg=pts,
        values=vals,
        local_minima=tuple(minima),
        local_maxima=tuple(maxima),
        global_minimum=float(gmin),
        branch_point=branch,
        branch_gap=gap,
    )


@dataclass(frozen=True)
class LifetimeExponents:
    """Exponential growth rates of the metastable phase lifetimes."""

    xi_fluid: float
    xi_cond: float


def lifetime_exponents(rho: float, model: RateModel) -> LifetimeExponents:
    """Lifetime exponents of the fluid and condensed phases at density rho.

    Only defined from the metastability onset upward (exactly at the onset
    the condensed exponent is zero); below it the fluid phase never dies and
    the condensed phase is not stable.
    """
    onset = metastable_onset(model)
    if rho < onset:
        raise DomainError(f"need rho >= metastability onset {onset}, got {rho}")
    a_eff = _effective_a(rho, model)
    rho_c0 = model.c1 / (model.c0 - model.c1)
    lc0, lc1 = math.log(model.c0), math.log(model.c1)
    xi_fluid = fluid_entropy(rho, model) - fluid_entropy(rho - a_eff, model) + a_eff * lc0
    xi_cond = (
        fluid_entropy(rho_c0, model)
        - fluid_entropy(rho - a_eff, model)
        + (rho_c0 + a_eff - rho) * lc1
    )
    return LifetimeExponents(xi_fluid=xi_fluid, xi_cond=xi_cond)


def specific_relative_entropy(
    L: int, N: int, phi: float, model: RateModel, table: CanonicalTable | None = None
) -> float:
    """Specific relative entropy between the canonical and grand-canonical laws.

    log z_R(phi) - (N/L) log phi - (1/L) log Z(L,N); equals
    -(1/L) log nu(Sigma = N).
    """
    if phi <= 0.0 or phi >= model.c1:
        raise DomainError(f"need 0 < phi < c1 = {model.c1}, got {phi}")
    if table is None:
        table = canonical_table(L, N, model)
    R = table.cutoff
    return float(log_partition(phi, R, model) - (N / L) * math.log(phi) - table.log_z[L, N] / L)


def _categorical_from_logs(log_weights: np.ndarray, rng: np.random.Generator) -> int:
    top = np.max(log_weights)
    if top == -math.inf:
        raise EmptyPhaseError("requested phase has no configurations")
    w = np.exp(log_weights - top)
    c = np.cumsum(w)
    return int(np.searchsorted(c, rng.random() * c[-1], side="right"))


def _sample_bounded_uniform(L: int, N: int, R: int, counts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample from compositions of N into L parts all <= R.

    Site-by-site conditional sampling P(eta_1 = k) = |X0(L-1, N-k)| / |X0(L, N)|.
    """
    if counts[L, N] == -np.inf:
        raise EmptyPhaseError(f"no configuration of {N} particles on {L} sites with max {R}")
    eta = np.zeros(L, dtype=np.int64)
    rem = N
    for i in range(L):
        if rem == 0:
            break
        left = L - i
        if left == 1:
            eta[i] = rem
            break
        kmax = min(R, rem)
        lw = counts[left - 1, rem - kmax : rem + 1][::-1].astype(float)
        eta[i] = _categorical_from_logs(lw, rng)
        rem -= int(eta[i])
    return eta


def _sample_condensate_total(
    L: int, N: int, R: int, m: int, model: RateModel, counts: np.ndarray, rng: np.random.Generator
) -> int:
    """Total particles k on the m condensate sites, k in [m(R+1), N]."""
    lc0, lc1 = math.log(model.c0), math.log(model.c1)
    ks = np.arange(m * (R + 1), N + 1)
    if ks.size == 0:
        raise EmptyPhaseError(f"cannot place {m} sites above cutoff {R} with {N} particles")
    logw = (
        -(N - ks) * lc0
        - (ks - m * R) * lc1
        + counts[L - m, N - ks]
        + gammaln(ks - m * R)
        - gammaln(float(m))
        - gammaln(ks - m * R - m + 1)
    )
    return int(ks[_categorical_from_logs(logw, rng)])


def _sample_uniform_composition(total: int, parts: int, minimum: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform composition of ``total`` into ``parts`` ordered parts, each >= minimum."""
    excess = total - parts * minimum
    out = np.empty(parts, dtype=np.int64)
    for i in range(parts - 1):
        remaining = parts - i
        js = np.arange(excess + 1)
        logw = gammaln(excess - js + remaining - 1) - gammaln(excess - js + 1)
        out[i] = minimum + _categorical_from_logs(logw, rng)
        excess -= int(out[i]) - minimum
    out[parts - 1] = minimum + excess
    return out


def sample_canonical(
    L: int,
    N: int,
    model: RateModel,
    phase: str,
    rng: np.random.Generator,
    table: CanonicalTable | None = None,
) -> np.ndarray:
    """Exact sample from the canonical measure, optionally phase-conditioned.

    ``fluid`` draws uniformly from the configurations with all sites <= R
    (all of which carry equal weight), ``condensed`` from the quasi-stationary
    law on exactly-one-site-above-R, and ``unconditioned`` mixes every
    m-condensate sector with its exact probability.
    """
    if phase not in ("fluid", "condensed", "unconditioned"):
        raise DomainError(f"unknown phase {phase!r}")
    if table is None:
        table = canonical_table(L, N, model)
    R = table.cutoff
    counts = table.log_count_bounded
    if N == 0:
        if phase == "condensed":
            raise EmptyPhaseError("condensed phase empty for N = 0")
        return np.zeros(L, dtype=np.int64)

    if phase == "fluid":
        return _sample_bounded_uniform(L, N, R, counts, rng)

    if phase == "condensed":
        if N <= R:
            raise EmptyPhaseError(f"condensed phase empty for N = {N} <= R = {R}")
        m = 1
    else:
        decomp = phase_decomposition(L, N, model, table=table)
        m = _categorical_from_logs(decomp.log_z_m, rng)
        if m == 0:
            return _sample_bounded_uniform(L, N, R, counts, rng)

    k = _sample_condensate_total(L, N, R, m, model, counts, rng)
    sites = np.sort(rng.choice(L, size=m, replace=False))
    occupancies = _sample_uniform_composition(k, m, R + 1, rng)
    eta = np.zeros(L, dtype=np.int64)
    background = _sample_bounded_uniform(L - m, N - k, R, counts, rng)
    mask = np.ones(L, dtype=bool)
    mask[sites] = False
    eta[mask] = background
    eta[sites] = occupancies
    return eta
