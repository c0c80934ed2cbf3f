import numpy as np
import pytest

from conftest import tiny_instance
from lotforge.instance import Instance
from lotforge.oracle import (OracleConfig, SizeGuardError, solve_exact,
                             solve_exact_routes)
from lotforge.solution import check_feasible, evaluate_cost


def test_zero_demand():
    ins = Instance(num_periods=2, num_warehouses=1, num_retailers=1,
                   retailer_warehouse=[0], demand=[[0, 0]],
                   setup_cost=np.full((3, 2), 9.0), holding_cost=np.ones((3, 2)))
    cost, sol, routes = solve_exact(ins)
    assert cost == 0.0
    assert routes == {}
    assert not sol.y.any()


def test_single_demand_pays_all_three_setups():
    ins = Instance(num_periods=1, num_warehouses=1, num_retailers=1,
                   retailer_warehouse=[0], demand=[[10]],
                   setup_cost=[[7.0], [3.0], [2.0]],
                   holding_cost=np.zeros((3, 1)))
    cost, sol, routes = solve_exact(ins)
    assert cost == 12.0
    assert routes == {(0, 0): (0, 0, 0)}


def test_size_guard():
    ins = Instance(num_periods=4, num_warehouses=2, num_retailers=3,
                   retailer_warehouse=[0, 0, 1], demand=np.ones((3, 4), dtype=int),
                   setup_cost=np.ones((6, 4)), holding_cost=np.ones((6, 4)))
    with pytest.raises(SizeGuardError):
        solve_exact(ins)  # 6 * 4 = 24 bits > default guard of 20
    with pytest.raises(SizeGuardError):
        solve_exact_routes(ins)
    solve_exact(ins, OracleConfig(max_setup_bits=24))


def test_witness_is_feasible_and_prices_out():
    rng = np.random.default_rng(3)
    for _ in range(25):
        ins = tiny_instance(rng)
        cost, sol, routes = solve_exact(ins, OracleConfig(max_setup_bits=24))
        assert check_feasible(ins, sol, tol=1e-9) == []
        assert evaluate_cost(ins, sol) == cost
        assert set(routes) == {(r, t) for r in range(ins.num_retailers)
                               for t in range(ins.num_periods)
                               if ins.demand[r, t] > 0}


def test_cross_check_against_route_enumeration():
    rng = np.random.default_rng(4)
    for _ in range(20):
        ins = tiny_instance(rng, max_retailers=2, max_periods=3)
        cfg = OracleConfig(max_setup_bits=24)
        pattern_cost, _, _ = solve_exact(ins, cfg)
        route_cost = solve_exact_routes(ins, cfg)
        assert pattern_cost == route_cost


def test_forbidden_routes_respected():
    rng = np.random.default_rng(5)
    for _ in range(10):
        ins = tiny_instance(rng, max_retailers=2, max_periods=3)
        base_cost, _, base_routes = solve_exact(ins, OracleConfig(max_setup_bits=24))
        # Forbid every route actually used; the optimum cannot improve.
        forbidden = frozenset((r, k2, t) for (r, t), (_, _, k2) in base_routes.items()
                              if k2 < t)
        cfg = OracleConfig(max_setup_bits=24, forbidden=forbidden)
        cost, _, routes = solve_exact(ins, cfg)
        assert cost >= base_cost
        for (r, t), (_, _, k2) in routes.items():
            assert (r, k2, t) not in forbidden
        assert solve_exact_routes(ins, cfg) == cost


def test_route_tie_break_is_lexicographic():
    # All holding costs zero: every admissible triple costs the same, so
    # the witness must pick (k0, k1, k2) lexicographically smallest among
    # open setups.
    ins = Instance(num_periods=2, num_warehouses=1, num_retailers=1,
                   retailer_warehouse=[0], demand=[[0, 8]],
                   setup_cost=[[1.0, 50.0], [1.0, 50.0], [1.0, 50.0]],
                   holding_cost=np.zeros((3, 2)))
    cost, _, routes = solve_exact(ins)
    assert cost == 3.0
    assert routes[(0, 1)] == (0, 0, 0)
