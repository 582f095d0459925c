import numpy as np
import pytest

from conftest import random_instance, sweep_monotone_dr

from limax.budgets import PartitionedBudget, TotalBudget
from limax.graph import LT, from_edges, uniform_ic
from limax.oracles import (InstanceTooLargeError, LiveEdgeEnumeration,
                           enumerate_feasible_mixes, exact_g, exact_g_subsets,
                           exact_opt, exact_sigma, simulate_spread_mix,
                           simulate_spread_seeds)
from limax.rng import stream
from limax.strategy import (IndependentActivation, LatticeConfig,
                            StrategyMix)


def _model_with_h(n, lat, h_by_node):
    tabs = []
    strategies = []
    for v in range(n):
        h = h_by_node.get(v, 0.0)
        if h > 0:
            strategies.append(np.array([v % lat.d]))
            row = np.concatenate(([0.0], np.full(lat.budget_steps, h)))
            tabs.append(row[None, :])
        else:
            strategies.append(np.empty(0, dtype=np.int64))
            tabs.append(np.empty((0, lat.budget_steps + 1)))
    return IndependentActivation(n, lat, strategies, tabs)


# --- Monte-Carlo spread -------------------------------------------------------

def test_spread_empty_seed_set():
    g = from_edges(3, [(0, 1)])
    est = simulate_spread_seeds(g, uniform_ic(g, 0.5), set(), 100, stream(0, 0))
    assert est.mean == 0.0


def test_spread_all_seeds():
    g = from_edges(4, [(0, 1), (2, 3)])
    est = simulate_spread_seeds(g, uniform_ic(g, 0.1), {0, 1, 2, 3}, 200, stream(0, 1))
    assert est.mean == 4.0 and est.se == 0.0


def test_spread_deterministic_chain():
    g = from_edges(3, [(0, 1), (1, 2)])
    est = simulate_spread_seeds(g, uniform_ic(g, 1.0), {0}, 500, stream(0, 2))
    assert est.mean == 3.0


def test_spread_chain_scalar_path():
    # force the per-run path (runs < vectorization threshold)
    g = from_edges(3, [(0, 1), (1, 2)])
    est = simulate_spread_seeds(g, uniform_ic(g, 1.0), {0}, 9, stream(0, 3))
    assert est.mean == 3.0


def test_mix_zero_is_zero():
    g = from_edges(3, [(0, 1), (1, 2)])
    lat = LatticeConfig(d=3, delta=1.0, budget_steps=1)
    model = _model_with_h(3, lat, {0: 0.4})
    est = simulate_spread_mix(g, uniform_ic(g, 0.5), model,
                              StrategyMix.zeros(3), 300, stream(0, 4))
    assert est.mean == 0.0


def test_mix_single_node_bernoulli():
    g = from_edges(1, [])
    lat = LatticeConfig(d=1, delta=1.0, budget_steps=1)
    model = _model_with_h(1, lat, {0: 0.75})
    est = simulate_spread_mix(g, uniform_ic(g, 0.5), model,
                              StrategyMix([1]), 100_000, stream(0, 5))
    assert abs(est.mean - 0.75) <= 3 * est.se


# --- exact enumeration --------------------------------------------------------

def test_exact_single_node():
    g = from_edges(1, [])
    lat = LatticeConfig(d=1, delta=1.0, budget_steps=1)
    model = _model_with_h(1, lat, {0: 0.3})
    assert exact_g(g, uniform_ic(g, 0.5), model, StrategyMix([1])) == pytest.approx(0.3)


def test_exact_certain_edge_hand_value():
    # u -> v with p = 1, h_u = 0.5, h_v = 0: g = 0.5 * 2 = 1.0
    g = from_edges(2, [(0, 1)])
    lat = LatticeConfig(d=2, delta=1.0, budget_steps=1)
    model = _model_with_h(2, lat, {0: 0.5})
    assert exact_g(g, uniform_ic(g, 1.0), model, StrategyMix([1, 1])) == pytest.approx(1.0)


def test_exact_triangle_matches_simulation():
    g = from_edges(3, [(0, 1), (1, 2), (2, 0)])
    params = uniform_ic(g, 0.35)
    lat = LatticeConfig(d=2, delta=1.0, budget_steps=2)
    model = _model_with_h(3, lat, {0: 0.5, 1: 0.25, 2: 0.6})
    x = StrategyMix([1, 1])
    exact = exact_g(g, params, model, x)
    est = simulate_spread_mix(g, params, model, x, 1_000_000, stream(1, 0))
    assert abs(exact - est.mean) <= 3 * est.se


def test_exact_matches_subset_enumeration(rng):
    for _ in range(6):
        inst = random_instance(rng, n_max=5, m_max=6, d_max=2, steps_max=2)
        x = StrategyMix(rng.integers(0, inst.lattice.budget_steps + 1,
                                     size=inst.lattice.d))
        a = exact_g(inst.graph, inst.params, inst.model, x)
        b = exact_g_subsets(inst.graph, inst.params, inst.model, x)
        assert a == pytest.approx(b, abs=1e-10)


def test_exact_lt_enumeration(rng):
    inst = random_instance(rng, n_max=5, m_max=6, d_max=2, steps_max=2, kind=LT)
    x = StrategyMix(np.full(inst.lattice.d, inst.lattice.budget_steps))
    exact = exact_g(inst.graph, inst.params, inst.model, x)
    est = simulate_spread_mix(inst.graph, inst.params, inst.model, x,
                              400_000, stream(1, 1))
    assert abs(exact - est.mean) <= 3 * est.se + 1e-9


def test_exact_sigma_seed_sets():
    g = from_edges(3, [(0, 1), (1, 2)])
    params = uniform_ic(g, 0.5)
    enum = LiveEdgeEnumeration(g, params)
    assert enum.sigma([]) == 0.0
    # sigma({0}) = 1 + 0.5 + 0.25
    assert exact_sigma(g, params, [0], enum) == pytest.approx(1.75)


def test_size_guard():
    g = from_edges(14, [(i, i + 1) for i in range(13)])
    with pytest.raises(InstanceTooLargeError):
        LiveEdgeEnumeration(g, uniform_ic(g, 0.5))


def test_exact_opt_zero_budget():
    g = from_edges(2, [(0, 1)])
    lat = LatticeConfig(d=2, delta=1.0, budget_steps=0)
    model = _model_with_h(2, lat, {})
    mix, opt = exact_opt(g, uniform_ic(g, 0.5), model, lat, TotalBudget(0))
    assert mix == StrategyMix.zeros(2) and opt == 0.0


def test_exact_opt_single_strategy_monotone(rng):
    inst = random_instance(rng, n_max=5, m_max=6, d_max=1, steps_max=3)
    K = inst.lattice.budget_steps
    mix, opt = exact_opt(inst.graph, inst.params, inst.model, inst.lattice,
                         TotalBudget(K))
    # monotone in the single coordinate: the optimum spends everything
    assert mix.steps.tolist() == [K]
    assert opt == pytest.approx(
        exact_g(inst.graph, inst.params, inst.model, StrategyMix([K])))


def test_exact_opt_matches_reversed_enumeration(rng):
    inst = random_instance(rng, n_max=5, m_max=6, d_max=2, steps_max=2)
    constraint = TotalBudget(inst.lattice.budget_steps)
    mix, opt = exact_opt(inst.graph, inst.params, inst.model, inst.lattice,
                         constraint)
    # independent re-enumeration in the opposite loop order
    enum = LiveEdgeEnumeration(inst.graph, inst.params)
    best = -1.0
    for steps in reversed(list(enumerate_feasible_mixes(inst.lattice, constraint))):
        val = enum.spread_given_h(inst.model.h_all(steps))
        if val > best:
            best = val
    assert opt == pytest.approx(best, abs=1e-12)
    assert exact_g(inst.graph, inst.params, inst.model, mix) == pytest.approx(opt)


def test_exact_opt_partitioned_enumeration():
    g = from_edges(4, [(0, 1), (2, 3)])
    lat = LatticeConfig(d=4, delta=1.0, budget_steps=2)
    model = _model_with_h(4, lat, {0: 0.5, 1: 0.2, 2: 0.4, 3: 0.3})
    constraint = PartitionedBudget(groups=[(0, 1), (2, 3)], caps=[1, 1])
    mix, opt = exact_opt(g, uniform_ic(g, 0.5), model, lat, constraint)
    assert mix.steps.sum() <= 2
    from limax.budgets import is_feasible
    assert is_feasible(mix, constraint)


def test_enumeration_point_guard():
    lat = LatticeConfig(d=8, delta=1.0, budget_steps=20)
    with pytest.raises(InstanceTooLargeError):
        list(enumerate_feasible_mixes(lat, TotalBudget(20)))


@pytest.mark.parametrize("seed", [0, 1])
def test_exact_g_monotone_dr_sweep(seed):
    gen = np.random.default_rng(300 + seed)
    inst = random_instance(gen, n_max=6, m_max=8, d_max=3, steps_max=3,
                           extra_steps=2)
    enum = LiveEdgeEnumeration(inst.graph, inst.params)
    bound = inst.lattice.budget_steps - 2
    mono, dr = sweep_monotone_dr(
        lambda s: enum.spread_given_h(inst.model.h_all(s)),
        inst.lattice.d, bound)
    assert mono == 0 and dr == 0


def test_simulation_agrees_with_exact_small(rng):
    inst = random_instance(rng, n_max=5, m_max=6, d_max=2, steps_max=2)
    x = StrategyMix(np.full(inst.lattice.d, 1))
    exact = exact_g(inst.graph, inst.params, inst.model, x)
    est = simulate_spread_mix(inst.graph, inst.params, inst.model, x,
                              200_000, stream(1, 2))
    assert abs(exact - est.mean) <= 3 * est.se + 1e-9
