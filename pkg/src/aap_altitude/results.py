"""Result containers shared by both solvers."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field


class Termination(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERS = "max_iters"
    INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class IterationRecord:
    k: int
    h_k: float
    l_k: float
    subproblem_h: float
    step_bound: float = math.inf
    accepted: bool = True


@dataclass
class SolveResult:
    h_opt: float
    gee_opt: float
    iterations: int
    trace: list = field(default_factory=list)
    termination: Termination = Termination.CONVERGED
    wall_time_ms: float = 0.0
    # Polyblock (f_max, f_min) history of the last outer iteration, MFP only.
    bound_trace: list | None = None

    def to_dict(self) -> dict:
        return {
            "h_opt": self.h_opt,
            "gee_opt": self.gee_opt,
            "iterations": self.iterations,
            "termination": self.termination.value,
            "trace": [dataclasses.asdict(r) for r in self.trace],
        }
