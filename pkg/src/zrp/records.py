"""Result records for sweeps: one observable estimate per row."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DomainError

PROVENANCES = ("analytic", "recursion", "simulation")


@dataclass(frozen=True)
class ExperimentRecord:
    """One row of a sweep result.

    Stochastic records (simulation) carry a standard error; analytic ones
    must not.  ``params`` identifies the point in parameter space.
    """

    params: dict = field(compare=False)
    observable: str = ""
    value: float = 0.0
    stderr: float | None = None
    censored_fraction: float | None = None
    provenance: str = "analytic"

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise DomainError(f"provenance must be one of {PROVENANCES}, got {self.provenance!r}")
        if self.provenance == "analytic" and self.stderr is not None:
            raise DomainError("analytic records must not carry a standard error")
        if self.provenance == "simulation" and self.stderr is None:
            raise DomainError("simulation records must carry a standard error")

    def csv_row(self) -> tuple:
        key = ";".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return (
            key,
            self.observable,
            self.value,
            "" if self.stderr is None else self.stderr,
            "" if self.censored_fraction is None else self.censored_fraction,
            self.provenance,
        )


CSV_COLUMNS = ("params", "observable", "value", "stderr", "censored_fraction", "provenance")
