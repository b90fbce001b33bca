"""Stationary ensembles and event-driven simulation of a zero-range process
with size-dependent jump rates: condensation transition, ensemble
(non)equivalence, metastable lifetimes, and an exact Gillespie simulator.
"""

from .errors import (
    BadInitialError,
    ConfigError,
    DomainError,
    EmptyPhaseError,
    InsufficientDataError,
    ResourceError,
    ZRPError,
)
from .grand_canonical import (
    LATTICE_DEP,
    PARTICLE_DEP,
    FluidQuantities,
    GrandCanonicalPoint,
    RateModel,
    critical_density,
    critical_fugacity,
    density,
    fluid_density,
    fluid_entropy,
    fluid_fugacity,
    fluid_pressure,
    fluid_quantities,
    grand_canonical_entropy,
    grand_canonical_point,
    invert_density,
    log_partition,
    log_weight,
    marginal_pmf,
    marginal_quantile,
    marginal_variance,
    sample_marginal,
    tail_exceed_probability,
)
from .canonical import (
    CanonicalTable,
    LifetimeExponents,
    PhaseDecomposition,
    RateFunctionCurve,
    bounded_count_table,
    canonical_entropy,
    canonical_table,
    composition_entropy,
    iter_compositions,
    lifetime_exponents,
    load_table,
    log_bounded_count,
    log_composition_count,
    metastable_onset,
    phase_decomposition,
    rate_function,
    rate_function_curve,
    sample_canonical,
    save_table,
    specific_relative_entropy,
    transition_density,
)
from .records import ExperimentRecord
from .kmc import (
    HittingTime,
    Lattice,
    ReplicaLifetime,
    SimState,
    lifetime_records,
    advance,
    init_state,
    lifetime_sweep,
    occupancy_time_histogram,
    record_events,
    replica_rngs,
    run_to_hit,
    state_time_distribution,
    step,
    summarize_lifetimes,
    trajectory_observables,
)

__version__ = "0.1.0"
