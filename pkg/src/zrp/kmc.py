"""Event-driven (Gillespie) simulation of the zero-range process.

The jump rates take only two values, so the total exit rate is
c0*A + c1*B where A and B count the sites in the fast and slow class.
Every event costs O(1): waiting times come from the total rate, the source
class is picked proportionally to its rate mass, the source site uniformly
inside its class (swap-remove index sets), and the occupancy histogram plus
a max cursor keep the maximum occupation current (the max moves by at most
one per event).

All hot loops are numba kernels that release the GIL, so replicas can run
on a thread pool.  One SimState is owned by one worker at a time; a
generator is never shared between threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numba import njit

from .canonical import canonical_table, lifetime_exponents, sample_canonical
from .errors import BadInitialError, DomainError
from .grand_canonical import RateModel

TMAX_SAFETY = 5000.0  # auto t_max = SAFETY * exp(xi * L); subexponential prefactors reach ~300
_MAX_EVENTS = 2**62


@dataclass(frozen=True)
class Lattice:
    """Translation-invariant 1D ring with a finite-range jump kernel."""

    size: int
    offsets: tuple[int, ...]
    probabilities: tuple[float, ...]

    def __post_init__(self):
        if self.size < 2:
            raise DomainError(f"lattice needs at least 2 sites, got {self.size}")
        if len(self.offsets) != len(self.probabilities) or not self.offsets:
            raise DomainError("offsets and probabilities must be nonempty and aligned")
        if any(o == 0 or abs(o) >= self.size for o in self.offsets):
            raise DomainError("offsets must be nonzero and smaller than the lattice")
        if any(p <= 0.0 for p in self.probabilities):
            raise DomainError("kernel probabilities must be positive")
        if abs(sum(self.probabilities) - 1.0) > 1e-9:
            raise DomainError(f"kernel probabilities must sum to 1, got {sum(self.probabilities)}")
        g = self.size
        for o in self.offsets:
            g = math.gcd(g, o % self.size)
        if g != 1:
            raise DomainError("jump kernel is not irreducible on this lattice")

    @classmethod
    def ring(cls, size: int) -> "Lattice":
        """Symmetric nearest-neighbour ring, p(+1) = p(-1) = 1/2."""
        return cls(size=size, offsets=(1, -1), probabilities=(0.5, 0.5))

    @classmethod
    def totally_asymmetric(cls, size: int) -> "Lattice":
        """Totally asymmetric nearest-neighbour ring, p(+1) = 1."""
        return cls(size=size, offsets=(1,), probabilities=(1.0,))

    @property
    def range(self) -> int:
        return max(abs(o) for o in self.offsets)

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        offsets = np.asarray(self.offsets, dtype=np.int64)
        cum = np.cumsum(np.asarray(self.probabilities, dtype=np.float64))
        cum[-1] = 1.0
        return offsets, cum


@njit(cache=True, nogil=True, inline="always")
def _class_add(sites, pos, scal, ci, x):
    n = scal[ci]
    sites[n] = x
    pos[x] = n
    scal[ci] = n + 1


@njit(cache=True, nogil=True, inline="always")
def _class_remove(sites, pos, scal, ci, x):
    i = pos[x]
    n = scal[ci] - 1
    last = sites[n]
    sites[i] = last
    pos[last] = i
    pos[x] = -1
    scal[ci] = n


@njit(cache=True, nogil=True, inline="always")
def _occ_class(k, R):
    if k == 0:
        return 0
    if k <= R:
        return 1
    return 2


@njit(cache=True, nogil=True, inline="always")
def _flush_bin(hist, occ_acc, stamps, j, t):
    occ_acc[j] += hist[j] * (t - stamps[j])
    stamps[j] = t


@njit(cache=True, nogil=True, inline="always")
def _execute_event(
    eta, a_sites, a_pos, b_sites, b_pos, hist, scal, R, c0, c1, offsets, cumprobs, rng,
    t, occ_acc, stamps, track_occupancy,
):
    # caller has already advanced time to t; scal = [A, B, max, events]
    L = eta.shape[0]
    A = scal[0]
    B = scal[1]
    lam = c0 * A + c1 * B
    u = rng.random() * lam
    ua = c0 * A
    if u < ua:
        # conditional on the class, u/c0 is again uniform: one draw picks both
        i = int(u / c0)
        if i >= A:
            i = A - 1
        src = a_sites[i]
    else:
        i = int((u - ua) / c1)
        if i >= B:
            i = B - 1
        src = b_sites[i]
    u = rng.random()
    j = 0
    while cumprobs[j] < u:
        j += 1
    dst = src + offsets[j]
    if dst >= L:
        dst -= L
    elif dst < 0:
        dst += L

    k = eta[src]
    m = eta[dst]
    if track_occupancy:
        _flush_bin(hist, occ_acc, stamps, k, t)
        _flush_bin(hist, occ_acc, stamps, k - 1, t)
        _flush_bin(hist, occ_acc, stamps, m, t)
        _flush_bin(hist, occ_acc, stamps, m + 1, t)

    eta[src] = k - 1
    hist[k] -= 1
    hist[k - 1] += 1
    cb = _occ_class(k, R)
    ca = _occ_class(k - 1, R)
    if cb != ca:
        if cb == 1:
            _class_remove(a_sites, a_pos, scal, 0, src)
        else:
            _class_remove(b_sites, b_pos, scal, 1, src)
        if ca == 1:
            _class_add(a_sites, a_pos, scal, 0, src)
        elif ca == 2:
            _class_add(b_sites, b_pos, scal, 1, src)

    eta[dst] = m + 1
    hist[m] -= 1
    hist[m + 1] += 1
    cb = _occ_class(m, R)
    ca = _occ_class(m + 1, R)
    if cb != ca:
        if cb == 1:
            _class_remove(a_sites, a_pos, scal, 0, dst)
        elif cb == 2:
            _class_remove(b_sites, b_pos, scal, 1, dst)
        if ca == 1:
            _class_add(a_sites, a_pos, scal, 0, dst)
        else:
            _class_add(b_sites, b_pos, scal, 1, dst)

    top = scal[2]
    if m + 1 > top:
        top = m + 1
    while top > 0 and hist[top] == 0:
        top -= 1
    scal[2] = top
    scal[3] += 1
    return src, dst


@njit(cache=True, nogil=True)
def _kernel_advance(
    eta, a_sites, a_pos, b_sites, b_pos, hist, scal, fscal,
    R, c0, c1, offsets, cumprobs, rng, max_events, t_max,
):
    t = fscal[0]
    done = 0
    dummy = np.zeros(1, dtype=np.float64)
    while done < max_events:
        lam = c0 * scal[0] + c1 * scal[1]
        dt = -np.log1p(-rng.random()) / lam
        if t + dt > t_max:
            t = t_max
            break
        t = t + dt
        _execute_event(
            eta, a_sites, a_pos, b_sites, b_pos, hist, scal, R, c0, c1,
            offsets, cumprobs, rng, t, dummy, dummy, False,
        )
        done += 1
    fscal[0] = t
    return done


@njit(cache=True, nogil=True)
def _kernel_hit(
    eta, a_sites, a_pos, b_sites, b_pos, hist, scal, fscal,
    R, c0, c1, offsets, cumprobs, rng, t_max, target_above, max_events,
):
    t = fscal[0]
    done = 0
    censored = True
    dummy = np.zeros(1, dtype=np.float64)
    while done < max_events:
        lam = c0 * scal[0] + c1 * scal[1]
        dt = -np.log1p(-rng.random()) / lam
        if t + dt > t_max:
            t = t_max
            break
        t = t + dt
        _execute_event(
            eta, a_sites, a_pos, b_sites, b_pos, hist, scal, R, c0, c1,
            offsets, cumprobs, rng, t, dummy, dummy, False,
        )
        done += 1
        if (scal[2] > R) == target_above:
            censored = False
            break
    fscal[0] = t
    return t, censored, done


@njit(cache=True, nogil=True)
def _kernel_record(
    eta, a_sites, a_pos, b_sites, b_pos, hist, scal, fscal,
    R, c0, c1, offsets, cumprobs, rng, t_max, rec_t, rec_src, rec_dst,
):
    t = fscal[0]
    n = rec_t.shape[0]
    done = 0
    dummy = np.zeros(1, dtype=np.float64)
    while done < n:
        lam = c0 * scal[0] + c1 * scal[1]
        dt = -np.log1p(-rng.random()) / lam
        if t + dt > t_max:
            t = t_max
            break
        t = t + dt
        src, dst = _execute_event(
            eta, a_sites, a_pos, b_sites, b_pos, hist, scal, R, c0, c1,
            offsets, cumprobs, rng, t, dummy, dummy, False,
        )
        rec_t[done] = t
        rec_src[done] = src
        rec_dst[done] = dst
        done += 1
    fscal[0] = t
    return done


@njit(cache=True, nogil=True)
def _kernel_state_times(
    eta, a_sites, a_pos, b_sites, b_pos, hist, scal, fscal,
    R, c0, c1, offsets, cumprobs, rng, n_events, pows, acc,
):
    # time-weighted state occupation for exhaustively enumerable systems;
    # the packed state code moves with the particle
    dummy = np.zeros(1, dtype=np.float64)
    t = fscal[0]
    code = 0
    for x in range(eta.shape[0]):
        code += eta[x] * pows[x]
    for _ in range(n_events):
        lam = c0 * scal[0] + c1 * scal[1]
        dt = -np.log1p(-rng.random()) / lam
        acc[code] += dt
        t = t + dt
        src, dst = _execute_event(
            eta, a_sites, a_pos, b_sites, b_pos, hist, scal, R, c0, c1,
            offsets, cumprobs, rng, t, dummy, dummy, False,
        )
        code += pows[dst] - pows[src]
    fscal[0] = t


@njit(cache=True, nogil=True)
def _kernel_occupancy_times(
    eta, a_sites, a_pos, b_sites, b_pos, hist, scal, fscal,
    R, c0, c1, offsets, cumprobs, rng, n_events, occ_acc, stamps,
):
    # lazy per-bin accumulation of the occupancy histogram's time integral
    t = fscal[0]
    for _ in range(n_events):
        lam = c0 * scal[0] + c1 * scal[1]
        dt = -np.log1p(-rng.random()) / lam
        t = t + dt
        _execute_event(
            eta, a_sites, a_pos, b_sites, b_pos, hist, scal, R, c0, c1,
            offsets, cumprobs, rng, t, occ_acc, stamps, True,
        )
    for j in range(occ_acc.shape[0]):
        _flush_bin(hist, occ_acc, stamps, j, t)
    fscal[0] = t


@njit(cache=True, nogil=True)
def _kernel_trajectory(
    eta, a_sites, a_pos, b_sites, b_pos, hist, scal, fscal,
    R, c0, c1, offsets, cumprobs, rng, sample_dt, n_particles,
    out_sbg, out_max, out_a, out_b,
):
    dummy = np.zeros(1, dtype=np.float64)
    t = fscal[0]
    n_samples = out_sbg.shape[0]
    idx = 0
    while idx < n_samples:
        lam = c0 * scal[0] + c1 * scal[1]
        dt = -np.log1p(-rng.random()) / lam
        t_next = t + dt
        while idx < n_samples and idx * sample_dt < t_next:
            out_sbg[idx] = n_particles - scal[2]
            out_max[idx] = scal[2]
            out_a[idx] = scal[0]
            out_b[idx] = scal[1]
            idx += 1
        if idx >= n_samples:
            t = t_next
            break
        t = t_next
        _execute_event(
            eta, a_sites, a_pos, b_sites, b_pos, hist, scal, R, c0, c1,
            offsets, cumprobs, rng, t, dummy, dummy, False,
        )
    fscal[0] = t


@dataclass
class SimState:
    """Lattice occupations plus the incremental bookkeeping for O(1) stepping."""

    eta: np.ndarray
    cutoff: int
    n_particles: int
    hist: np.ndarray
    a_sites: np.ndarray
    a_pos: np.ndarray
    b_sites: np.ndarray
    b_pos: np.ndarray
    scal: np.ndarray
    fscal: np.ndarray

    @classmethod
    def from_occupations(cls, eta, cutoff: int) -> "SimState":
        eta = np.asarray(eta, dtype=np.int64).copy()
        if np.any(eta < 0):
            raise DomainError("occupations must be nonnegative")
        n = int(eta.sum())
        if n < 1:
            raise DomainError("need at least one particle")
        L = eta.shape[0]
        hist = np.zeros(n + 1, dtype=np.int64)
        a_sites = np.full(L, -1, dtype=np.int64)
        a_pos = np.full(L, -1, dtype=np.int64)
        b_sites = np.full(L, -1, dtype=np.int64)
        b_pos = np.full(L, -1, dtype=np.int64)
        scal = np.zeros(4, dtype=np.int64)
        for x in range(L):
            k = int(eta[x])
            hist[k] += 1
            if 1 <= k <= cutoff:
                _class_add(a_sites, a_pos, scal, 0, x)
            elif k > cutoff:
                _class_add(b_sites, b_pos, scal, 1, x)
        scal[2] = int(eta.max())
        return cls(
            eta=eta,
            cutoff=cutoff,
            n_particles=n,
            hist=hist,
            a_sites=a_sites,
            a_pos=a_pos,
            b_sites=b_sites,
            b_pos=b_pos,
            scal=scal,
            fscal=np.zeros(1, dtype=np.float64),
        )

    @property
    def n_fast(self) -> int:
        """Sites in the fast class (1 <= occupation <= cutoff)."""
        return int(self.scal[0])

    @property
    def n_slow(self) -> int:
        """Sites in the slow class (occupation > cutoff)."""
        return int(self.scal[1])

    @property
    def max_occupation(self) -> int:
        return int(self.scal[2])

    @property
    def events(self) -> int:
        return int(self.scal[3])

    @property
    def time(self) -> float:
        return float(self.fscal[0])

    @property
    def background_sum(self) -> int:
        """Particles outside the maximally occupied site."""
        return self.n_particles - self.max_occupation

    def total_rate(self, model: RateModel) -> float:
        return model.c0 * self.n_fast + model.c1 * self.n_slow

    def _kernel_args(self):
        return (
            self.eta, self.a_sites, self.a_pos, self.b_sites, self.b_pos,
            self.hist, self.scal, self.fscal,
        )

    def check_bookkeeping(self) -> None:
        """Recompute every derived quantity from eta and compare exactly."""
        fresh = SimState.from_occupations(self.eta, self.cutoff)
        if not np.array_equal(fresh.hist, self.hist):
            raise AssertionError("histogram out of sync")
        if fresh.scal[0] != self.scal[0] or fresh.scal[1] != self.scal[1]:
            raise AssertionError("class counts out of sync")
        if fresh.scal[2] != self.scal[2]:
            raise AssertionError("max occupation out of sync")
        if set(self.a_sites[: self.n_fast].tolist()) != set(fresh.a_sites[: fresh.n_fast].tolist()):
            raise AssertionError("fast-class membership out of sync")
        if set(self.b_sites[: self.n_slow].tolist()) != set(fresh.b_sites[: fresh.n_slow].tolist()):
            raise AssertionError("slow-class membership out of sync")


@dataclass(frozen=True)
class EventRecord:
    time: float
    source: int
    dest: int


@dataclass(frozen=True)
class HittingTime:
    """First time the max-occupation condition flips; censored at t_max."""

    time: float
    censored: bool
    events: int


def step(state: SimState, model: RateModel, lattice: Lattice, rng: np.random.Generator) -> EventRecord:
    """Execute one event and return its record."""
    offsets, cum = lattice.arrays()
    rec_t = np.empty(1, dtype=np.float64)
    rec_src = np.empty(1, dtype=np.uint32)
    rec_dst = np.empty(1, dtype=np.uint32)
    _kernel_record(
        *state._kernel_args(), state.cutoff, model.c0, model.c1, offsets, cum, rng,
        np.inf, rec_t, rec_src, rec_dst,
    )
    return EventRecord(time=float(rec_t[0]), source=int(rec_src[0]), dest=int(rec_dst[0]))


def advance(state: SimState, model: RateModel, lattice: Lattice, rng: np.random.Generator,
            max_events: int, t_max: float = np.inf) -> int:
    """Run up to max_events events (stopping at t_max); returns events executed."""
    offsets, cum = lattice.arrays()
    return int(
        _kernel_advance(
            *state._kernel_args(), state.cutoff, model.c0, model.c1, offsets, cum, rng,
            max_events, t_max,
        )
    )


def run_to_hit(
    state: SimState,
    model: RateModel,
    lattice: Lattice,
    target: str,
    t_max: float,
    rng: np.random.Generator,
    max_events: int = _MAX_EVENTS,
) -> HittingTime:
    """Run until the max-occupation condition flips (or censor at t_max).

    ``fluid_exit`` waits for max > R starting from a fluid state;
    ``cond_exit`` waits for max <= R starting from a condensed state.
    """
    above = state.max_occupation > state.cutoff
    if target == "fluid_exit":
        if above:
            raise BadInitialError("fluid_exit requires max occupation <= cutoff initially")
        target_above = True
    elif target == "cond_exit":
        if not above:
            raise BadInitialError("cond_exit requires max occupation > cutoff initially")
        target_above = False
    else:
        raise DomainError(f"unknown hitting target {target!r}")
    offsets, cum = lattice.arrays()
    t, censored, events = _kernel_hit(
        *state._kernel_args(), state.cutoff, model.c0, model.c1, offsets, cum, rng,
        t_max, target_above, max_events,
    )
    return HittingTime(time=float(t), censored=bool(censored), events=int(events))


def init_state(L: int, N: int, model: RateModel, phase: str, rng: np.random.Generator) -> SimState:
    """Initial SimState from the exact canonical sampler or uniform placement."""
    R = model.cutoff(L=L, N=N)
    if phase in ("fluid", "condensed"):
        eta = sample_canonical(L, N, model, phase, rng)
    elif phase == "uniform":
        eta = rng.multinomial(N, np.full(L, 1.0 / L)).astype(np.int64)
    else:
        raise DomainError(f"unknown init phase {phase!r}")
    return SimState.from_occupations(eta, R)


def trajectory_observables(
    state: SimState,
    model: RateModel,
    lattice: Lattice,
    rng: np.random.Generator,
    t_end: float,
    sample_dt: float,
) -> dict[str, np.ndarray]:
    """Piecewise-constant observables sampled on the regular grid k * sample_dt."""
    if sample_dt <= 0.0:
        raise DomainError(f"sample_dt must be > 0, got {sample_dt}")
    n_samples = int(math.floor(t_end / sample_dt)) + 1
    out_sbg = np.empty(n_samples, dtype=np.int64)
    out_max = np.empty(n_samples, dtype=np.int64)
    out_a = np.empty(n_samples, dtype=np.int64)
    out_b = np.empty(n_samples, dtype=np.int64)
    offsets, cum = lattice.arrays()
    _kernel_trajectory(
        *state._kernel_args(), state.cutoff, model.c0, model.c1, offsets, cum, rng,
        sample_dt, state.n_particles, out_sbg, out_max, out_a, out_b,
    )
    L = state.eta.shape[0]
    return {
        "t": np.arange(n_samples) * sample_dt,
        "sigma_bg_per_L": out_sbg / L,
        "max_per_L": out_max / L,
        "A": out_a,
        "B": out_b,
    }


def occupancy_time_histogram(
    state: SimState, model: RateModel, lattice: Lattice, rng: np.random.Generator, n_events: int
) -> tuple[np.ndarray, float]:
    """Time-weighted histogram of site occupations over a run.

    Returns (integral of #sites at each occupation over time, elapsed time);
    dividing by L * elapsed gives the empirical single-site distribution.
    """
    occ_acc = np.zeros(state.n_particles + 1, dtype=np.float64)
    stamps = np.full(state.n_particles + 1, state.time, dtype=np.float64)
    offsets, cum = lattice.arrays()
    t0 = state.time
    _kernel_occupancy_times(
        *state._kernel_args(), state.cutoff, model.c0, model.c1, offsets, cum, rng,
        n_events, occ_acc, stamps,
    )
    return occ_acc, state.time - t0


def state_time_distribution(
    state: SimState, model: RateModel, lattice: Lattice, rng: np.random.Generator, n_events: int
) -> tuple[np.ndarray, np.ndarray]:
    """Time-weighted distribution over packed state codes (tiny systems only).

    State code is sum_x eta_x * (N+1)^x; the code array has (N+1)^L entries.
    """
    L = state.eta.shape[0]
    base = state.n_particles + 1
    if base**L > 50_000_000:
        raise DomainError("state space too large to track exhaustively")
    pows = base ** np.arange(L, dtype=np.int64)
    acc = np.zeros(base**L, dtype=np.float64)
    offsets, cum = lattice.arrays()
    _kernel_state_times(
        *state._kernel_args(), state.cutoff, model.c0, model.c1, offsets, cum, rng,
        n_events, pows, acc,
    )
    return acc, pows


def record_events(
    state: SimState, model: RateModel, lattice: Lattice, rng: np.random.Generator,
    n_events: int, t_max: float = np.inf,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Run and record (time, source, dest) per event, for dumps and debugging."""
    rec_t = np.empty(n_events, dtype=np.float64)
    rec_src = np.empty(n_events, dtype=np.uint32)
    rec_dst = np.empty(n_events, dtype=np.uint32)
    offsets, cum = lattice.arrays()
    done = _kernel_record(
        *state._kernel_args(), state.cutoff, model.c0, model.c1, offsets, cum, rng,
        t_max, rec_t, rec_src, rec_dst,
    )
    return rec_t[:done], rec_src[:done], rec_dst[:done]


@dataclass(frozen=True)
class ReplicaLifetime:
    """Hitting times of one replica pair (fluid and condensed runs)."""

    L: int
    replica: int
    tau_fluid: float
    fluid_censored: bool
    tau_cond: float
    cond_censored: bool


def replica_rngs(seed: int, L: int, replica: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Two independent reproducible streams for the (seed, L, replica) cell."""
    children = np.random.SeedSequence((seed, L, replica)).spawn(2)
    return np.random.default_rng(children[0]), np.random.default_rng(children[1])


def auto_t_max(L: int, rho: float, model: RateModel) -> tuple[float, float]:
    """Generous censoring horizons from the analytic lifetime exponents."""
    xi = lifetime_exponents(rho, model)
    return TMAX_SAFETY * math.exp(xi.xi_fluid * L), TMAX_SAFETY * math.exp(xi.xi_cond * L)


def lifetime_sweep(
    L_values,
    rho: float,
    model: RateModel,
    replicas: int,
    seed: int,
    t_max: float | None = None,
    lattice_factory: Callable[[int], Lattice] = Lattice.ring,
    workers: int = 1,
) -> list[ReplicaLifetime]:
    """Measure fluid and condensed hitting times over lattice sizes and replicas.

    Per-replica streams derive deterministically from (seed, L, replica), so
    results are independent of scheduling; replicas run on a thread pool
    (the kernels release the GIL).
    """
    jobs = []
    for L in L_values:
        N = int(round(rho * L))
        table = canonical_table(L, N, model)  # built once, shared read-only
        if t_max is None:
            tf, tc = auto_t_max(L, rho, model)
        else:
            tf = tc = float(t_max)
        lattice = lattice_factory(L)
        for rep in range(replicas):
            jobs.append((L, N, table, lattice, tf, tc, rep))

    def one(job) -> ReplicaLifetime:
        L, N, table, lattice, tf, tc, rep = job
        rng_f, rng_c = replica_rngs(seed, L, rep)
        eta = sample_canonical(L, N, model, "fluid", rng_f, table=table)
        state = SimState.from_occupations(eta, table.cutoff)
        hit_f = run_to_hit(state, model, lattice, "fluid_exit", tf, rng_f)
        eta = sample_canonical(L, N, model, "condensed", rng_c, table=table)
        state = SimState.from_occupations(eta, table.cutoff)
        hit_c = run_to_hit(state, model, lattice, "cond_exit", tc, rng_c)
        return ReplicaLifetime(
            L=L,
            replica=rep,
            tau_fluid=hit_f.time,
            fluid_censored=hit_f.censored,
            tau_cond=hit_c.time,
            cond_censored=hit_c.censored,
        )

    if workers <= 1:
        results = [one(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, jobs))
    return results


def lifetime_records(records: list[ReplicaLifetime], rho: float, model: RateModel) -> list["ExperimentRecord"]:
    """Aggregate a sweep into ExperimentRecord rows (mean lifetime per L, phase)."""
    from .records import ExperimentRecord

    out = []
    base = {"rho": rho, "c0": model.c0, "c1": model.c1, "a": model.a, "mode": model.mode}
    for row in summarize_lifetimes(records):
        for phase in ("fluid", "cond"):
            if row[f"n_uncensored_{phase}"] < 1:
                continue
            out.append(
                ExperimentRecord(
                    params={**base, "L": row["L"], "phase": phase},
                    observable="mean_lifetime",
                    value=row[f"mean_tau_{phase}"],
                    stderr=row[f"se_tau_{phase}"],
                    censored_fraction=row[f"censored_fraction_{phase}"],
                    provenance="simulation",
                )
            )
    return out


def summarize_lifetimes(records: list[ReplicaLifetime]) -> list[dict]:
    """Per-L mean/SE of uncensored lifetimes plus censoring fractions."""
    out = []
    for L in sorted({r.L for r in records}):
        group = [r for r in records if r.L == L]
        row: dict = {"L": L, "replicas": len(group)}
        for phase, taus, cens in (
            ("fluid", [r.tau_fluid for r in group], [r.fluid_censored for r in group]),
            ("cond", [r.tau_cond for r in group], [r.cond_censored for r in group]),
        ):
            ok = np.array([t for t, c in zip(taus, cens) if not c])
            frac = 1.0 - ok.size / len(group)
            row[f"n_uncensored_{phase}"] = int(ok.size)
            row[f"censored_fraction_{phase}"] = frac
            row[f"mean_tau_{phase}"] = float(ok.mean()) if ok.size else math.nan
            row[f"se_tau_{phase}"] = float(ok.std(ddof=1) / math.sqrt(ok.size)) if ok.size > 1 else math.nan
        out.append(row)
    return out
