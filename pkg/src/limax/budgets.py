"""Budget constraints over strategy mixes.

Two shapes: a single total step budget (uniform matroid over increments),
and per-group budgets for a partition of the strategies (partition matroid).
Greedy loops only ever ask two questions: is this mix feasible, and which
coordinates can still grow by one step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .strategy import as_steps

__all__ = [
    "TotalBudget",
    "PartitionedBudget",
    "InfeasibleStateError",
    "is_feasible",
    "feasible_increments",
    "total_steps",
]


class InfeasibleStateError(ValueError):
    """A mix that violates its constraint was passed where feasibility is a contract."""


@dataclass(frozen=True)
class TotalBudget:
    """At most ``steps`` increments in total across all coordinates."""

    steps: int

    def __post_init__(self):
        if self.steps < 0:
            raise ValueError("budget steps must be >= 0")


class PartitionedBudget:
    """Strategies split into disjoint groups, each with its own step cap.

    Groups must cover [0, d) and contain at least two strategies each; a
    singleton group is just a per-coordinate cap, which the models already
    express by clamping curves.
    """

    def __init__(self, groups, caps):
        groups = tuple(tuple(int(j) for j in g) for g in groups)
        caps = tuple(int(c) for c in caps)
        if len(groups) != len(caps):
            raise ValueError("need one cap per group")
        if any(c < 0 for c in caps):
            raise ValueError("caps must be >= 0")
        if any(len(g) <= 1 for g in groups):
            raise ValueError("every group must contain more than one strategy")
        flat = [j for g in groups for j in g]
        d = len(flat)
        if sorted(flat) != list(range(d)):
            raise ValueError("groups must partition 0..d-1")
        self.groups = groups
        self.caps = caps
        self.d = d
        group_of = np.empty(d, dtype=np.int64)
        for gi, g in enumerate(groups):
            for j in g:
                group_of[j] = gi
        group_of.flags.writeable = False
        self.group_of = group_of

    def __repr__(self):
        return f"PartitionedBudget(groups={self.groups}, caps={self.caps})"

    def group_totals(self, steps: np.ndarray) -> np.ndarray:
        return np.bincount(self.group_of, weights=steps, minlength=len(self.caps)).astype(np.int64)


def is_feasible(x, constraint) -> bool:
    """True iff every applicable budget inequality holds (inclusive)."""
    steps = as_steps(x)
    if isinstance(constraint, TotalBudget):
        return int(steps.sum()) <= constraint.steps
    totals = constraint.group_totals(steps)
    return bool(np.all(totals <= np.asarray(constraint.caps)))


def feasible_increments(x, constraint) -> np.ndarray:
    """Coordinates j such that x + e_j stays feasible, ascending.

    Raises :class:`InfeasibleStateError` if x itself is infeasible.
    """
    steps = as_steps(x)
    if not is_feasible(steps, constraint):
        raise InfeasibleStateError("mix violates the constraint")
    if isinstance(constraint, TotalBudget):
        if int(steps.sum()) < constraint.steps:
            return np.arange(len(steps))
        return np.empty(0, dtype=np.int64)
    totals = constraint.group_totals(steps)
    open_groups = totals < np.asarray(constraint.caps)
    return np.flatnonzero(open_groups[constraint.group_of])


def total_steps(constraint) -> int:
    """Upper bound on greedy rounds: the total number of increments available."""
    if isinstance(constraint, TotalBudget):
        return constraint.steps
    return int(sum(constraint.caps))
