"""Pipeline configuration shared by the verifier and the command line."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional


@dataclass(frozen=True)
class Config:
    seed: int = 0
    deref_bound: int = 1
    tests: int = 10
    grid: Optional[tuple[int, ...]] = None  # enumerate int inputs over these values instead of sampling
    int_range: int = 5
    step_budget: int = 100_000
    check_step_budget: int = 10_000
    max_nodes: int = 5
    num_bound: int = 8
    field_values: tuple[int, ...] = (0,)
    mutation_rounds: int = 10
    mutants_per_round: int = 500
    relearn_budget: int = 3
    max_states: int = 2_000_000
    emit: str = "report"

    def __post_init__(self):
        for name in ("deref_bound", "tests", "step_budget", "check_step_budget", "mutation_rounds",
                     "mutants_per_round", "relearn_budget", "max_states"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name.replace('_', '-')} must be at least 1")
        if self.max_nodes < 0 or self.num_bound < 0 or self.int_range < 0:
            raise ValueError("bounds must be non-negative")
        if self.emit not in ("report", "csv", "sl"):
            raise ValueError(f"unknown emit mode {self.emit}")

    @property
    def num_range(self) -> tuple[int, int]:
        return (-self.num_bound, self.num_bound)

    def describe(self) -> str:
        parts = []
        for f in fields(self):
            if f.name == "emit":
                continue
            parts.append(f"{f.name}={getattr(self, f.name)}")
        return " ".join(parts)
