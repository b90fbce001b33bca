"""Grand-canonical and fluid-limit quantities of the zero-range process.

Single-site stationary weights, partition functions, fugacity/density
inversion, pressures, entropy densities, critical densities and exact
marginal sampling, for both cutoff conventions (lattice-size dependent and
particle-number dependent).

Everything here is a pure function of its inputs; the only stateful object
is the caller-supplied random generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

LATTICE_DEP = "lattice"
PARTICLE_DEP = "particle"

# invert_density targets |density(phi) - rho| <= RHO_TOL * max(1, rho) and
# keeps bisecting down to the double-precision floor if needed.
PHI_TOL = 1e-12
RHO_TOL = 1e-10
MAX_BISECT = 200


@dataclass(frozen=True)
class RateModel:
    """Jump-rate parameters and the cutoff convention.

    A particle leaves a site holding k particles at rate c0 if k <= R and at
    the slower rate c1 if k > R; the cutoff R scales with the lattice size
    (``mode="lattice"``, R = floor(a*L)) or with the particle number
    (``mode="particle"``, R = floor(a*N)).  ``explicit_R`` pins R directly.
    """

    c0: float
    c1: float
    a: float = 0.0
    mode: str = LATTICE_DEP
    explicit_R: int | None = None

    def __post_init__(self):
        if not (self.c0 > self.c1 > 0.0):
            raise DomainError(f"need c0 > c1 > 0, got c0={self.c0}, c1={self.c1}")
        if self.a < 0.0:
            raise DomainError(f"cutoff ratio a must be >= 0, got {self.a}")
        if self.mode not in (LATTICE_DEP, PARTICLE_DEP):
            raise DomainError(f"mode must be '{LATTICE_DEP}' or '{PARTICLE_DEP}', got {self.mode!r}")
        if self.mode == PARTICLE_DEP and self.a >= 1.0:
            raise DomainError(f"particle-dependent mode requires a < 1, got a={self.a}")
        if self.explicit_R is not None and self.explicit_R < 0:
            raise DomainError(f"explicit_R must be >= 0, got {self.explicit_R}")

    def cutoff(self, L: int | None = None, N: int | None = None) -> int:
        """Cutoff R for a system of L sites / N particles."""
        if self.explicit_R is not None:
            return int(self.explicit_R)
        if self.mode == LATTICE_DEP:
            if L is None:
                raise DomainError("lattice-dependent cutoff needs L")
            return int(math.floor(self.a * L))
        if N is None:
            raise DomainError("particle-dependent cutoff needs N")
        return int(math.floor(self.a * N))

    def jump_rate(self, k: int, R: int) -> float:
        """Exit rate of a site holding k particles."""
        if k <= 0:
            return 0.0
        return self.c0 if k <= R else self.c1


def log_weight(k: int, R: int, model: RateModel) -> float:
    """Log stationary single-site weight; the empty product at k=0 is 1."""
    if k < 0 or R < 0:
        raise DomainError(f"need k >= 0 and R >= 0, got k={k}, R={R}")
    if k <= R:
        return -k * math.log(model.c0)
    return -R * math.log(model.c0) + (R - k) * math.log(model.c1)


def _check_phi(phi: float, model: RateModel) -> None:
    if phi < 0.0 or phi >= model.c1:
        raise DomainError(
            f"fugacity must satisfy 0 <= phi < c1 = {model.c1} (series diverges beyond), got {phi}"
        )


def log_partition(phi: float, R: int, model: RateModel) -> float:
    """Log of the single-site normalization at cutoff R.

    Closed form c0/(c0-phi) * (1 + (phi/c0)^(R+1) (c0-c1)/(c1-phi)),
    evaluated in log space so the near-critical blow-up stays finite-safe.
    """
    _check_phi(phi, model)
    if phi == 0.0:
        return 0.0
    c0, c1 = model.c0, model.c1
    base = math.log(c0) - math.log(c0 - phi)
    tail = (R + 1) * math.log(phi / c0) + math.log(c0 - c1) - math.log(c1 - phi)
    return base + np.logaddexp(0.0, tail)


def density(phi: float, R: int, model: RateModel) -> float:
    """Expected occupation per site at fugacity phi and cutoff R."""
    _check_phi(phi, model)
    if phi == 0.0:
        return 0.0
    c0, c1 = model.c0, model.c1
    q = math.exp((R + 1) * math.log(phi / c0))
    bulk = phi / (c0 - phi)
    num = R + 1 + phi / (c1 - phi)
    den = (c1 - phi) / (c0 - c1) + q
    return bulk + q * num / den


def invert_density(rho: float, R: int, model: RateModel) -> float:
    """Fugacity phi in [0, c1) whose marginal has mean occupation rho.

    Bisection on [0, c1) (the density is strictly increasing and onto
    [0, inf)); stops once |density(phi) - rho| <= 1e-10 * max(1, rho) or the
    bracket is exhausted at double precision.
    """
    if rho < 0.0:
        raise DomainError(f"density must be >= 0, got {rho}")
    if rho == 0.0:
        return 0.0
    c0, c1 = model.c0, model.c1
    lo, hi = 0.0, c1
    tol = RHO_TOL * max(1.0, rho)
    best_phi, best_err = 0.0, rho
    for _ in range(MAX_BISECT):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        r = density(mid, R, model)
        err = abs(r - rho)
        if err < best_err:
            best_phi, best_err = mid, err
        if err <= tol and hi - lo <= PHI_TOL:
            return mid
        if r < rho:
            lo = mid
        else:
            hi = mid
    return best_phi


def fluid_fugacity(rho: float, model: RateModel) -> float:
    """Inverse of the fluid-limit density, c0 * rho / (1 + rho)."""
    if rho < 0.0:
        raise DomainError(f"density must be >= 0, got {rho}")
    return model.c0 * rho / (1.0 + rho)


def fluid_density(phi: float, model: RateModel) -> float:
    """Fluid-limit density phi / (c0 - phi), defined for 0 <= phi < c0."""
    if phi < 0.0 or phi >= model.c0:
        raise DomainError(f"fluid fugacity must satisfy 0 <= phi < c0 = {model.c0}, got {phi}")
    return phi / (model.c0 - phi)


def fluid_pressure(phi: float, model: RateModel) -> float:
    """Pressure of the fluid phase, log(c0 / (c0 - phi))."""
    if phi < 0.0 or phi >= model.c0:
        raise DomainError(f"fluid fugacity must satisfy 0 <= phi < c0 = {model.c0}, got {phi}")
    return math.log(model.c0) - math.log(model.c0 - phi)


def fluid_entropy(rho: float, model: RateModel) -> float:
    """Fluid entropy density, the negative Legendre transform of the pressure.

    (1+rho)log(1+rho) - rho(log c0 + log rho), continuously extended to 0 at
    rho = 0.
    """
    if rho < 0.0:
        raise DomainError(f"density must be >= 0, got {rho}")
    if rho == 0.0:
        return 0.0
    return (1.0 + rho) * math.log1p(rho) - rho * (math.log(model.c0) + math.log(rho))


@dataclass(frozen=True)
class FluidQuantities:
    """Fluid-limit point: fugacity, density, log normalization (= pressure), entropy."""

    phi: float
    rho: float
    log_z: float
    pressure: float
    entropy: float


def fluid_quantities(model: RateModel, rho: float | None = None, phi: float | None = None) -> FluidQuantities:
    """All fluid-limit quantities at a given density or fugacity (give exactly one)."""
    if (rho is None) == (phi is None):
        raise DomainError("give exactly one of rho, phi")
    if rho is not None:
        phi = fluid_fugacity(rho, model)
    else:
        rho = fluid_density(phi, model)
    p = fluid_pressure(phi, model)
    return FluidQuantities(phi=phi, rho=rho, log_z=p, pressure=p, entropy=fluid_entropy(rho, model))


def critical_fugacity(model: RateModel) -> float:
    """Fugacity where the infinite-volume pressure stops being finite."""
    if model.mode == LATTICE_DEP:
        return model.c1
    return model.c1 * (model.c0 / model.c1) ** model.a


def critical_density(model: RateModel) -> float:
    """Critical density: c1/(c0-c1), or its a-dependent analogue in particle mode."""
    if model.mode == LATTICE_DEP:
        return model.c1 / (model.c0 - model.c1)
    e = 1.0 - model.a
    return model.c1**e / (model.c0**e - model.c1**e)


def grand_canonical_entropy(rho: float, model: RateModel) -> float:
    """Grand-canonical entropy density (negative Legendre transform of the pressure).

    Equals the fluid entropy up to the critical density and continues
    linearly with slope -log(phi_c) beyond it.
    """
    rho_c = critical_density(model)
    if rho <= rho_c:
        return fluid_entropy(rho, model)
    return fluid_entropy(rho_c, model) - (rho - rho_c) * math.log(critical_fugacity(model))


@dataclass(frozen=True)
class GrandCanonicalPoint:
    """A finite-cutoff grand-canonical state: fugacity, cutoff, log z, density."""

    model: RateModel
    phi: float
    cutoff: int
    log_z: float
    rho: float


def grand_canonical_point(
    model: RateModel, cutoff: int, phi: float | None = None, rho: float | None = None
) -> GrandCanonicalPoint:
    """Build a GrandCanonicalPoint from a fugacity or by inverting a density."""
    if (rho is None) == (phi is None):
        raise DomainError("give exactly one of rho, phi")
    if phi is None:
        phi = invert_density(rho, cutoff, model)
    _check_phi(phi, model)
    return GrandCanonicalPoint(
        model=model,
        phi=phi,
        cutoff=cutoff,
        log_z=log_partition(phi, cutoff, model),
        rho=density(phi, cutoff, model),
    )


def marginal_log_pmf(point: GrandCanonicalPoint, k: int) -> float:
    """Log probability of occupation k under the single-site marginal."""
    if point.phi == 0.0:
        return 0.0 if k == 0 else -math.inf
    return log_weight(k, point.cutoff, point.model) + k * math.log(point.phi) - point.log_z


def marginal_pmf(point: GrandCanonicalPoint, k: int) -> float:
    """Probability of occupation k under the single-site marginal."""
    return math.exp(marginal_log_pmf(point, k))


def _geom_sum0(r: float, n: int) -> float:
    # sum_{k=0}^{n} r^k
    if r == 0.0:
        return 1.0
    return (1.0 - r ** (n + 1)) / (1.0 - r)


def _geom_sum1(r: float, n: int) -> float:
    # sum_{k=0}^{n} k r^k
    if r == 0.0:
        return 0.0
    return r * (1.0 - (n + 1) * r**n + n * r ** (n + 1)) / (1.0 - r) ** 2


def _geom_sum2(r: float, n: int) -> float:
    # sum_{k=0}^{n} k^2 r^k
    if r == 0.0:
        return 0.0
    num = 1.0 + r - (n + 1) ** 2 * r**n + (2 * n * n + 2 * n - 1) * r ** (n + 1) - n * n * r ** (n + 2)
    return r * num / (1.0 - r) ** 3


def _piece_masses(point: GrandCanonicalPoint) -> tuple[float, float, float, float]:
    """(r0, r1, bulk mass, tail mass) of the unnormalized two-piece marginal."""
    m = point.model
    r0 = point.phi / m.c0
    r1 = point.phi / m.c1
    R = point.cutoff
    s0 = _geom_sum0(r0, R)
    s1 = 0.0 if r0 == 0.0 else r0**R * r1 / (1.0 - r1)
    return r0, r1, s0, s1


def marginal_mean(point: GrandCanonicalPoint) -> float:
    """Mean occupation, identical to the density at this point."""
    return point.rho


def marginal_variance(point: GrandCanonicalPoint) -> float:
    """Exact occupation variance from closed-form geometric sums.

    Safe in the supercritical regime where the variance grows like
    (c0/c1)^(R/2) and direct summation over k is hopeless.
    """
    r0, r1, s0, s1 = _piece_masses(point)
    R = point.cutoff
    if r0 == 0.0:
        return 0.0
    z = s0 + s1
    tail0 = r1 / (1.0 - r1)
    tail1 = r1 / (1.0 - r1) ** 2
    tail2 = r1 * (1.0 + r1) / (1.0 - r1) ** 3
    m1 = _geom_sum1(r0, R) + r0**R * (R * tail0 + tail1)
    m2 = _geom_sum2(r0, R) + r0**R * (R * R * tail0 + 2.0 * R * tail1 + tail2)
    mean = m1 / z
    return m2 / z - mean * mean


def tail_exceed_probability(point: GrandCanonicalPoint) -> float:
    """Exact probability that a single site holds more than R particles."""
    _, _, s0, s1 = _piece_masses(point)
    return s1 / (s0 + s1)


def marginal_quantile(point: GrandCanonicalPoint, u: np.ndarray | float) -> np.ndarray | int:
    """Inverse CDF of the single-site marginal, exact two-piece geometric inversion.

    The bulk (k <= R) and the tail (k > R) are geometric with ratios phi/c0
    and phi/c1; each piece is inverted in closed form, so tail events with
    probabilities near the 2^-53 resolution of a double are hit with the
    correct mass (no truncation of the support).
    """
    scalar = np.isscalar(u)
    u = np.atleast_1d(np.asarray(u, dtype=np.float64))
    if np.any((u < 0.0) | (u >= 1.0)):
        raise DomainError("quantile argument must lie in [0, 1)")
    r0, r1, s0, s1 = _piece_masses(point)
    R = point.cutoff
    k = np.zeros(u.shape, dtype=np.int64)
    if r0 > 0.0:
        z = s0 + s1
        target = u * z
        bulk = target < s0
        with np.errstate(divide="ignore"):
            h = np.log1p(-target[bulk] * (1.0 - r0)) / math.log(r0)
        k[bulk] = np.clip(np.floor(h).astype(np.int64), 0, R)
        tail = ~bulk
        if np.any(tail):
            v = np.clip((target[tail] - s0) / s1, 0.0, 1.0 - 2**-53)
            g = np.log1p(-v) / math.log(r1)
            k[tail] = R + 1 + np.floor(g).astype(np.int64)
    if scalar:
        return int(k[0])
    return k


def sample_marginal(point: GrandCanonicalPoint, rng: np.random.Generator, size: int | None = None):
    """Draw occupation numbers from the single-site marginal.

    Returns an int for ``size=None``, else an int64 array of that length.
    """
    if size is None:
        return marginal_quantile(point, float(rng.random()))
    return marginal_quantile(point, rng.random(size))
