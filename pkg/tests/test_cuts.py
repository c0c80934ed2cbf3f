import itertools

import numpy as np
import pytest

from conftest import (convex_combination, lf3_point_from_routes,
                      random_routes, tiny_instance)
from lotforge import cuts as cm
from lotforge.formulations import VarId, build_3lf, build_std, export_lp
from lotforge.instance import Instance, cumulative_demand
from lotforge.oracle import OracleConfig, solve_exact
from lotforge.solution import from_routes
from lotforge.formulations import std_point_from_solution


def fixed_instance():
    return Instance(
        num_periods=4, num_warehouses=1, num_retailers=2,
        retailer_warehouse=[0, 0],
        demand=[[5, 0, 7, 3], [2, 6, 0, 4]],
        setup_cost=[[40.0] * 4, [15.0] * 4, [6.0] * 4, [5.0] * 4],
        holding_cost=[[0.25] * 4, [0.5] * 4, [1.0] * 4, [0.75] * 4])


def zeros_point(instance):
    point = {}
    for fac in range(instance.num_facilities):
        b, idx = instance.level(fac), instance.facility_id(fac).index
        for k in range(instance.num_periods):
            for fam in ("x", "s", "y"):
                point[VarId(fam, b, idx, k)] = 0.0
    return point


def fractional_point_std(instance, rng):
    point = {}
    cum = cumulative_demand(instance)
    for fac in range(instance.num_facilities):
        b, idx = instance.level(fac), instance.facility_id(fac).index
        for k in range(instance.num_periods):
            point[VarId("y", b, idx, k)] = float(rng.random())
            point[VarId("x", b, idx, k)] = float(rng.random() * cum.tail(fac, k))
            point[VarId("s", b, idx, k)] = float(rng.random() * 10)
    return point


def fractional_point_3lf(instance, rng):
    point = {}
    cum = cumulative_demand(instance)
    for fac in range(instance.num_facilities):
        b, idx = instance.level(fac), instance.facility_id(fac).index
        for k in range(instance.num_periods):
            point[VarId("y", b, idx, k)] = float(rng.random())
    for r in range(instance.num_retailers):
        rfac = instance.retailer(r)
        for b in range(3):
            for k in range(instance.num_periods):
                point[VarId("x3", b, r, k)] = float(rng.random() * cum.tail(rfac, k))
                point[VarId("s3", b, r, k)] = float(rng.random() * 10)
    return point


def masks(lo, hi):
    """All bitmasks over bit positions lo..hi inclusive."""
    bits = list(range(lo, hi + 1))
    out = []
    for combo in itertools.product((0, 1), repeat=len(bits)):
        m = 0
        for bit, chosen in zip(bits, combo):
            if chosen:
                m |= 1 << bit
        out.append(m)
    return out


def check_inspection_against_brute(point, built_cuts, inspect_total,
                                   inspect_masks):
    """built_cuts maps each mask combo to a Cut; the inspection result must
    attain the brute-force minimum and pick the inclusion-maximal argmin."""
    values = {combo: cm.eval_inequality(cut, point)
              for combo, cut in built_cuts.items()}
    best = min(values.values())
    assert inspect_total == pytest.approx(best + built_cuts[next(iter(built_cuts))].rhs,
                                          abs=1e-9)
    argmin = [c for c, v in values.items() if v <= best + 1e-9]
    union = tuple(int(np.bitwise_or.reduce([c[i] for c in argmin]))
                  for i in range(len(inspect_masks)))
    assert union in built_cuts and values[union] <= best + 1e-9
    assert tuple(inspect_masks) == union


# ----------------------------------------------------------------------
# eval_inequality basics

def test_eval_missing_variable():
    cut = cm.Cut("SL_STD", (), {VarId("x", 0, 0, 0): 1.0}, 5.0)
    with pytest.raises(KeyError):
        cm.eval_inequality(cut, {})


def test_all_zero_point_slack_is_minus_rhs():
    ins = fixed_instance()
    cum = cumulative_demand(ins)
    point = zeros_point(ins)
    for l in range(4):
        full = (1 << (l + 1)) - 1
        cut = cm.make_single_level_std_cut(ins, cum, 0, l, full)
        assert cm.eval_inequality(cut, point) == -cum.table[0, 0, l]


def test_two_period_hand_computation():
    ins = Instance(num_periods=2, num_warehouses=1, num_retailers=1,
                   retailer_warehouse=[0], demand=[[4, 6]],
                   setup_cost=np.ones((3, 2)), holding_cost=np.ones((3, 2)))
    cum = cumulative_demand(ins)
    rfac = ins.retailer(0)
    # l = 1, S = {period 1}: x_r_1 + d_{2,2} * y_r_2 >= d_{1,2} = 10.
    cut = cm.make_single_level_std_cut(ins, cum, rfac, 1, 0b10)
    point = zeros_point(ins)
    point[VarId("x", 2, 0, 0)] = 4.0
    point[VarId("y", 2, 0, 1)] = 1.0
    assert cm.eval_inequality(cut, point) == pytest.approx(4.0 + 6.0 - 10.0)


# ----------------------------------------------------------------------
# Separator behavior on trivial points

def test_zero_point_yields_full_S_cuts():
    ins = fixed_instance()
    point = zeros_point(ins)
    cuts = cm.separate_single_level_std(ins, point, tol=10.0)
    assert cuts
    for cut in cuts:
        b, idx, l, mask = cut.params
        assert mask == (1 << (l + 1)) - 1
        assert cut.rhs > 10.0
        assert cm.eval_inequality(cut, point) == -cut.rhs


def test_feasible_integer_point_yields_no_cuts():
    ins = fixed_instance()
    routes = {(r, t): (t, t, t) for r in range(2) for t in range(4)
              if ins.demand[r, t] > 0}
    sol = from_routes(ins, routes)
    point = std_point_from_solution(ins, sol.x, sol.y, sol.s)
    tol = 1e-9
    assert cm.separate_single_level_std(ins, point, tol) == []
    assert cm.separate_two_level_std(ins, point, tol) == []
    assert cm.separate_three_level_std(ins, point, tol) == []


def test_closed_network_two_level_violation():
    ins = fixed_instance()
    point = zeros_point(ins)
    cuts = cm.separate_two_level_std(ins, point, tol=10.0)
    assert cuts
    cum = cumulative_demand(ins)
    for cut in cuts:
        assert cm.eval_inequality(cut, point) == -cut.rhs
    rhs_values = {cut.params[:2] + (cut.params[3],): cut.rhs for cut in cuts}
    for (b, idx, l), rhs in rhs_values.items():
        fac = 0 if b == 0 else (1 + idx if b == 1 else 1 + 1 + idx)
        assert rhs == cum.table[fac, 0, l]


def test_separator_soundness_fractional_points():
    rng = np.random.default_rng(11)
    ins = fixed_instance()
    for _ in range(20):
        point = fractional_point_std(ins, rng)
        for sep in (cm.separate_single_level_std, cm.separate_two_level_std,
                    cm.separate_three_level_std):
            for cut in sep(ins, point, tol=1.0):
                assert cm.eval_inequality(cut, point) < -1.0
        point3 = fractional_point_3lf(ins, rng)
        for sep in (cm.separate_single_level_3lf, cm.separate_two_level_3lf,
                    cm.separate_three_level_3lf):
            for cut in sep(ins, point3, tol=1.0):
                assert cm.eval_inequality(cut, point3) < -1.0


# ----------------------------------------------------------------------
# Validity on random feasible integer solutions

def test_validity_all_families_random_integer_solutions():
    rng = np.random.default_rng(12)
    for _ in range(10):
        ins = tiny_instance(rng)
        for _ in range(20):
            routes = random_routes(ins, rng)
            sol = from_routes(ins, routes)
            std_point = std_point_from_solution(ins, sol.x, sol.y, sol.s)
            tol = 1e-6
            assert cm.separate_single_level_std(ins, std_point, tol) == []
            assert cm.separate_two_level_std(ins, std_point, tol) == []
            assert cm.separate_three_level_std(ins, std_point, tol) == []
            lf_point = lf3_point_from_routes(ins, routes)
            assert cm.separate_single_level_3lf(ins, lf_point, tol) == []
            assert cm.separate_two_level_3lf(ins, lf_point, tol) == []
            assert cm.separate_three_level_3lf(ins, lf_point, tol) == []


# ----------------------------------------------------------------------
# Separation exactness vs brute force over S subsets

def test_single_level_std_brute_force():
    rng = np.random.default_rng(13)
    ins = fixed_instance()
    cum = cumulative_demand(ins)
    for _ in range(5):
        point = fractional_point_std(ins, rng)
        slots = cm._StdSlots(ins, cum, point)
        for fac in range(ins.num_facilities):
            for l in range(4):
                built = {(m,): cm.make_single_level_std_cut(ins, cum, fac, l, m)
                         for m in masks(0, l)}
                total, mask = cm._inspect_segment_std(slots, ins, fac, 0, l, l)
                check_inspection_against_brute(point, built, total, (mask,))


def test_two_level_std_brute_force():
    rng = np.random.default_rng(14)
    ins = fixed_instance()
    cum = cumulative_demand(ins)
    point = fractional_point_std(ins, rng)
    slots = cm._StdSlots(ins, cum, point)
    for fac, succ in cm._two_level_pairs(ins):
        lower = ins.level(succ[0])
        for l in range(1, 4):
            for li in range(l):
                built = {}
                succ_mask_space = [masks(li + 1, l)] * len(succ)
                for um in masks(0, li):
                    for sm in itertools.product(*succ_mask_space):
                        built[(um,) + sm] = cm.make_two_level_std_cut(
                            ins, cum, fac, lower, l, li, um, tuple(sm))
                total, um = cm._inspect_segment_std(slots, ins, fac, 0, li, l)
                sms = []
                for j in succ:
                    val, m = cm._inspect_segment_std(slots, ins, j, li + 1, l, l)
                    total += val
                    sms.append(m)
                check_inspection_against_brute(point, built, total, (um, *sms))


def test_three_level_std_brute_force():
    rng = np.random.default_rng(15)
    ins = fixed_instance()
    cum = cumulative_demand(ins)
    point = fractional_point_std(ins, rng)
    slots = cm._StdSlots(ins, cum, point)
    W, R = ins.num_warehouses, ins.num_retailers
    for l in range(2, 4):
        for lp in range(l - 1):
            for lw in range(lp + 1, l):
                built = {}
                spaces = ([masks(0, lp)] + [masks(lp + 1, lw)] * W
                          + [masks(lw + 1, l)] * R)
                for combo in itertools.product(*spaces):
                    built[combo] = cm.make_three_level_std_cut(
                        ins, cum, l, lp, lw, combo[0],
                        tuple(combo[1:1 + W]), tuple(combo[1 + W:]))
                total, pm = cm._inspect_segment_std(slots, ins, 0, 0, lp, l)
                chosen = [pm]
                for w in range(W):
                    val, m = cm._inspect_segment_std(
                        slots, ins, ins.warehouse(w), lp + 1, lw, l)
                    total += val
                    chosen.append(m)
                for r in range(R):
                    val, m = cm._inspect_segment_std(
                        slots, ins, ins.retailer(r), lw + 1, l, l)
                    total += val
                    chosen.append(m)
                check_inspection_against_brute(point, built, total, chosen)


def test_single_level_3lf_brute_force():
    rng = np.random.default_rng(16)
    ins = fixed_instance()
    cum = cumulative_demand(ins)
    point = fractional_point_3lf(ins, rng)
    for r in range(ins.num_retailers):
        for b in range(3):
            for l in range(4):
                built = {(m,): cm.make_single_level_3lf_cut(ins, cum, r, b, l, m)
                         for m in masks(0, l)}
                total, mask = cm._inspect_segment_3lf(ins, cum, point, r, b, 0, l, l)
                check_inspection_against_brute(point, built, total, (mask,))


def test_two_level_3lf_brute_force():
    rng = np.random.default_rng(17)
    ins = fixed_instance()
    cum = cumulative_demand(ins)
    point = fractional_point_3lf(ins, rng)
    for r in range(ins.num_retailers):
        for b in range(3):
            for b2 in range(b + 1, 3):
                for l in range(1, 4):
                    for lb in range(l):
                        built = {}
                        for m1 in masks(0, lb):
                            for m2 in masks(lb + 1, l):
                                built[(m1, m2)] = cm.make_two_level_3lf_cut(
                                    ins, cum, r, b, b2, l, lb, m1, m2)
                        t1, m1 = cm._inspect_segment_3lf(ins, cum, point,
                                                         r, b, 0, lb, l)
                        t2, m2 = cm._inspect_segment_3lf(ins, cum, point,
                                                         r, b2, lb + 1, l, l)
                        check_inspection_against_brute(point, built, t1 + t2,
                                                       (m1, m2))


def test_three_level_3lf_brute_force():
    rng = np.random.default_rng(18)
    ins = fixed_instance()
    cum = cumulative_demand(ins)
    point = fractional_point_3lf(ins, rng)
    for r in range(ins.num_retailers):
        for l in range(2, 4):
            for l0 in range(l - 1):
                for l1 in range(l0 + 1, l):
                    built = {}
                    for m0 in masks(0, l0):
                        for m1 in masks(l0 + 1, l1):
                            for m2 in masks(l1 + 1, l):
                                built[(m0, m1, m2)] = cm.make_three_level_3lf_cut(
                                    ins, cum, r, l, l0, l1, m0, m1, m2)
                    t0, m0 = cm._inspect_segment_3lf(ins, cum, point, r, 0, 0, l0, l)
                    t1, m1 = cm._inspect_segment_3lf(ins, cum, point,
                                                     r, 1, l0 + 1, l1, l)
                    t2, m2 = cm._inspect_segment_3lf(ins, cum, point,
                                                     r, 2, l1 + 1, l, l)
                    check_inspection_against_brute(point, built, t0 + t1 + t2,
                                                   (m0, m1, m2))


def test_tie_goes_to_setup_term():
    ins = fixed_instance()
    cum = cumulative_demand(ins)
    point = zeros_point(ins)
    # Engineer an exact tie at (plant, period 0): x == d * y.
    point[VarId("y", 0, 0, 0)] = 0.5
    point[VarId("x", 0, 0, 0)] = 0.5 * cum.table[0, 0, 3]
    slots = cm._StdSlots(ins, cum, point)
    _, mask = cm._inspect_segment_std(slots, ins, 0, 0, 3, 3)
    assert mask & 1  # period 0 lands in S despite the tie


# ----------------------------------------------------------------------
# Cutting-plane driver

def test_loop_rejects_mc_models():
    ins = fixed_instance()
    from lotforge.formulations import build_mc
    with pytest.raises(ValueError):
        cm.cutting_plane_loop(ins, build_mc(ins), lambda m: None)


def test_loop_zero_rounds():
    ins = fixed_instance()
    result = cm.cutting_plane_loop(ins, build_std(ins), lambda m: zeros_point(ins),
                                   cm.CutConfig(max_rounds=0))
    assert result.cuts == [] and result.rounds == 0 and result.status == "ok"


def test_loop_optimal_integer_point_stops_immediately():
    ins = fixed_instance()
    _, sol, _ = solve_exact(ins, OracleConfig(max_setup_bits=24))
    point = std_point_from_solution(ins, sol.x, sol.y, sol.s)
    result = cm.cutting_plane_loop(ins, build_std(ins), lambda m: point)
    assert result.cuts == []
    assert result.rounds == 1
    assert result.status == "ok"
    assert result.objective == pytest.approx(sol.cost)


def test_loop_unavailable_source():
    ins = fixed_instance()
    result = cm.cutting_plane_loop(ins, build_std(ins), lambda m: None)
    assert result.status == "lp_unavailable"
    assert result.rounds == 0 and result.cuts == []


def test_loop_scripted_mock_matches_expected_pool():
    ins = fixed_instance()
    bad = zeros_point(ins)
    routes = {(r, t): (t, t, t) for r in range(2) for t in range(4)
              if ins.demand[r, t] > 0}
    sol = from_routes(ins, routes)
    good = std_point_from_solution(ins, sol.x, sol.y, sol.s)
    replies = iter([bad, good])
    seen_models = []

    def source(model):
        seen_models.append(model)
        return next(replies)

    result = cm.cutting_plane_loop(ins, build_std(ins), source)
    expected = cm.separate_single_level_std(ins, bad, 10.0)
    assert {c.key() for c in result.cuts} == {c.key() for c in expected}
    assert result.rounds == 2
    # Round two's model must include the round-one pool.
    names = [c.name for c in seen_models[1].constraints]
    assert sum(n.startswith("cut_") for n in names) == len(expected)


def test_loop_schedule_and_dedup():
    ins = fixed_instance()
    point = zeros_point(ins)
    calls = []

    def source(model):
        calls.append(len(model.constraints))
        return point

    config = cm.CutConfig(max_rounds=4, two_level_every=2, three_level_every=10)
    result = cm.cutting_plane_loop(ins, build_std(ins), source, config)
    families = {c.family for c in result.cuts}
    assert families == {"SL_STD", "TL_STD"}
    # Round 3 separates single-level only; everything is already pooled,
    # so the loop stops there.
    assert result.rounds == 3
    keys = [c.key() for c in result.cuts]
    assert len(keys) == len(set(keys))
    assert calls == sorted(calls)  # the pool only ever grows


def test_loop_three_level_round():
    ins = fixed_instance()
    point = zeros_point(ins)
    config = cm.CutConfig(max_rounds=4, two_level_every=2, three_level_every=3)
    result = cm.cutting_plane_loop(ins, build_std(ins), lambda m: point, config)
    assert "THL_STD" in {c.family for c in result.cuts}


def test_loop_3lf_space():
    ins = fixed_instance()
    point = {k: 0.0 for k in fractional_point_3lf(ins, np.random.default_rng(0))}
    result = cm.cutting_plane_loop(ins, build_3lf(ins), lambda m: point,
                                   cm.CutConfig(max_rounds=2))
    assert result.cuts
    assert {c.family for c in result.cuts} == {"SL_3LF"}


def test_add_cuts_exported_rows():
    ins = fixed_instance()
    cuts = cm.separate_single_level_std(ins, zeros_point(ins), 10.0)
    model = cm.add_cuts_to_model(build_std(ins), cuts)
    text = export_lp(model)
    assert f"cut_SL_STD_{len(cuts) - 1}:" in text
