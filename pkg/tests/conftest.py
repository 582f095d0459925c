"""Shared test helpers: randomized small instances and lattice sweeps."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
import pytest

from limax.graph import (IC, LT, DirectedGraph, TriggeringParams,
                         from_edges)
from limax.strategy import IndependentActivation, LatticeConfig


@dataclass
class Instance:
    graph: DirectedGraph
    params: TriggeringParams
    model: IndependentActivation
    lattice: LatticeConfig


def random_concave_table(rng, steps: int, total_cap: float = 0.9) -> np.ndarray:
    """Random nondecreasing concave lattice table with q(0) = 0."""
    marginals = np.sort(rng.uniform(0.05, 1.0, size=steps))[::-1]
    total = rng.uniform(0.3, total_cap)
    marginals *= total / marginals.sum()
    return np.concatenate(([0.0], np.cumsum(marginals)))


def random_graph(rng, n: int, m: int, kind: str = IC) -> tuple[DirectedGraph, TriggeringParams]:
    pairs = [(u, v) for u in range(n) for v in range(n) if u != v]
    take = min(m, len(pairs))
    idx = rng.choice(len(pairs), size=take, replace=False)
    graph = from_edges(n, [pairs[i] for i in idx])
    if kind == IC:
        params = TriggeringParams.build(
            graph, IC, [rng.uniform(0.2, 0.9, size=len(a)) for a in graph.in_neighbors])
    else:
        rows = []
        for a in graph.in_neighbors:
            if len(a) == 0:
                rows.append(np.empty(0))
                continue
            w = rng.uniform(0.1, 1.0, size=len(a))
            w *= rng.uniform(0.3, 1.0) / w.sum()
            rows.append(w)
        params = TriggeringParams.build(graph, LT, rows)
    return graph, params


def random_instance(rng, n_max=8, m_max=10, d_max=3, steps_max=3,
                    kind: str | None = None, extra_steps: int = 0) -> Instance:
    """Random small instance with concave independent activation everywhere.

    ``extra_steps`` widens the table domain beyond the budget so sweeps can
    look one or two steps past the box they certify.
    """
    n = int(rng.integers(3, n_max + 1))
    m = int(rng.integers(2, m_max + 1))
    d = int(rng.integers(1, d_max + 1))
    steps = int(rng.integers(1, steps_max + 1))
    kind = kind or (IC if rng.random() < 0.7 else LT)
    graph, params = random_graph(rng, n, m, kind)
    lattice = LatticeConfig(d=d, delta=1.0, budget_steps=steps + extra_steps)
    strategies = []
    tables = []
    for v in range(n):
        count = int(rng.integers(0, min(d, 2) + 1)) if rng.random() < 0.85 else 0
        js = rng.choice(d, size=count, replace=False) if count else np.empty(0, dtype=np.int64)
        strategies.append(np.asarray(js, dtype=np.int64))
        tables.append(np.vstack([random_concave_table(rng, lattice.budget_steps)
                                 for _ in js]) if count else
                      np.empty((0, lattice.budget_steps + 1)))
    model = IndependentActivation(n, lattice, strategies, tables)
    return Instance(graph, params, model, lattice)


def sweep_monotone_dr(f, d: int, bound: int, tol: float = 1e-9) -> tuple[int, int]:
    """Count monotonicity / diminishing-return violations of f on {0..bound}^d.

    ``f`` maps an int step vector to a float and must accept coordinates up
    to bound + 1.  One-step marginal comparisons imply the full pairwise
    property on the box by chaining.
    """
    vals: dict[tuple, float] = {}
    for pt in product(range(bound + 2), repeat=d):
        vals[pt] = float(f(np.array(pt, dtype=np.int64)))

    def marg(pt: tuple, j: int) -> float:
        up = list(pt)
        up[j] += 1
        return vals[tuple(up)] - vals[pt]

    mono = dr = 0
    for pt in product(range(bound + 1), repeat=d):
        for j in range(d):
            if marg(pt, j) < -tol:
                mono += 1
            for i in range(d):
                up = list(pt)
                up[i] += 1
                up = tuple(up)
                if max(up) > bound:
                    continue
                if marg(pt, j) < marg(up, j) - tol:
                    dr += 1
    return mono, dr


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
