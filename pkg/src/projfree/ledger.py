"""Oracle-call accounting.

Solvers are compared by how many component gradients, full-gradient passes,
linear-oracle calls and projections they spend; every operation that touches
one of these increments the ledger it was handed. Counters only ever grow
within a run. Concurrent lanes use independent ledgers and merge afterwards.
"""

from dataclasses import dataclass


@dataclass
class CostLedger:
    component_grad_evals: int = 0
    full_grad_passes: int = 0
    lo_calls: int = 0
    projection_calls: int = 0

    def merge(self, other: "CostLedger") -> "CostLedger":
        """Field-wise sum (associative and commutative)."""
        return CostLedger(
            self.component_grad_evals + other.component_grad_evals,
            self.full_grad_passes + other.full_grad_passes,
            self.lo_calls + other.lo_calls,
            self.projection_calls + other.projection_calls,
        )

    def copy(self) -> "CostLedger":
        return CostLedger(
            self.component_grad_evals,
            self.full_grad_passes,
            self.lo_calls,
            self.projection_calls,
        )

    def as_dict(self) -> dict:
        return {
            "component_grad_evals": self.component_grad_evals,
            "full_grad_passes": self.full_grad_passes,
            "lo_calls": self.lo_calls,
            "projection_calls": self.projection_calls,
        }
