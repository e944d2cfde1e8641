import numpy as np
import pytest

from conftest import line_network, rider, synthetic_candidate
from crossride.economics import MarketShares, Mechanism, PricingParams
from crossride.geo import precompute_distance_matrix
from crossride.shareability import (
    SEQUENCE_LABELS,
    InnerBenchmark,
    VehicleAccessModel,
    WindowConfig,
    access_distances,
    active_riders,
    best_shared_path,
    check_detour,
    check_profit,
    check_wait,
    feasibility_matrix,
    make_candidate,
    profit_aware_filter,
    sequence_distances,
    split_pair,
    verify_match,
)

CFG = WindowConfig()


def test_active_riders_window_membership(line):
    queue = [rider(line, k, 0, 1, t) for k, t in enumerate([0, 1, 4, 6])]
    assert [r.id for r in active_riders(queue, 5, WindowConfig(5, 5, 10, 0.2))] == [0, 1, 2]


def test_active_riders_carry_over(line):
    r = rider(line, 0, 0, 1, 0.0)
    assert active_riders([r], 12, CFG) == []
    assert active_riders([r], 8, CFG) == [r]


def test_identical_trips_total_is_direct(line):
    a, b = rider(line, 1, 0, 3), rider(line, 2, 0, 3)
    path = best_shared_path(a, b, line)
    assert path.total_distance == 3.0
    assert path.in_trip == (3.0, 3.0)
    assert all(p.total_distance == 3.0 for p in sequence_distances(a, b, line))


def test_nested_trip_uses_outer_order(line):
    a, b = rider(line, 1, 0, 3), rider(line, 2, 1, 2)
    totals = [p.total_distance for p in sequence_distances(a, b, line)]
    assert totals == [3.0, 5.0, 4.0, 4.0]
    path = best_shared_path(a, b, line)
    assert SEQUENCE_LABELS[path.sequence] == "OiOjDjDi"
    assert path.in_trip == (3.0, 1.0)


def test_opposite_directions(line):
    # hand enumeration: 9, 9, 6, 6; the first minimum wins the tie
    a, b = rider(line, 1, 0, 3), rider(line, 2, 3, 0)
    assert [p.total_distance for p in sequence_distances(a, b, line)] == [9.0, 9.0, 6.0, 6.0]
    path = best_shared_path(a, b, line)
    assert path.label == "OiOjDiDj" and path.in_trip == (3.0, 3.0)
    cand = make_candidate(a, b, line, PricingParams())
    assert check_detour(cand, CFG)
    # 12.8 + 12.8 - 6 * 4 * 0.5 = 13.6 < 7 + 7
    assert cand.joint_profit == pytest.approx(13.6)
    assert not check_profit(cand)


def test_crossing_trips_rejected_by_detour(line):
    # totals 9, 9, 7, 7; rider i rides 0 -> 4 -> 3, i.e. 5 miles for a 3 mile trip
    a, b = rider(line, 1, 0, 3), rider(line, 2, 4, 1)
    path = best_shared_path(a, b, line)
    assert path.total_distance == 7.0 and path.in_trip == (5.0, 3.0)
    cand = make_candidate(a, b, line, PricingParams())
    assert not check_detour(cand, CFG)
    m = feasibility_matrix([a, b], 0.0, line, CFG, PricingParams())
    assert not m.entries.any()


def test_check_wait_examples():
    access = VehicleAccessModel("constant", 1.0)
    cand = synthetic_candidate()  # first leg of length zero: both riders see 1.0 mi
    assert access_distances(cand, access) == (1.0, 1.0)
    assert check_wait(cand, 5.0, CFG, access, 0.25)  # 4 + 5 = 9
    assert not check_wait(cand, 6.5, CFG, access, 0.25)  # 4 + 6.5
    assert check_wait(cand, 10.0, CFG, VehicleAccessModel(), 0.25)
    assert not check_wait(cand, 11.0, CFG, VehicleAccessModel(), 0.25)


def test_second_pickup_adds_first_leg():
    cand = synthetic_candidate(legs=(1.5, 2.0, 0.5))
    assert access_distances(cand, VehicleAccessModel("constant", 0.5)) == (0.5, 2.0)
    flipped = synthetic_candidate(legs=(1.5, 2.0, 0.5), sequence=1)  # j picked first
    assert access_distances(flipped, VehicleAccessModel("constant", 0.5)) == (2.0, 0.5)


def test_uniform_access_is_seeded():
    a = VehicleAccessModel("uniform-random", 2.0, seed=5)
    b = VehicleAccessModel("uniform-random", 2.0, seed=5)
    vals = [a.base_distance(k) for k in range(50)]
    assert vals == [b.base_distance(k) for k in range(50)]
    assert all(0 <= v < 2.0 for v in vals) and len(set(vals)) == 50
    assert list(a.base_distances([3, 4])) == vals[3:5]


def test_check_detour_examples():
    assert check_detour(synthetic_candidate(in_trip=(2.3, 2.0)), CFG)  # 0.15
    assert not check_detour(synthetic_candidate(in_trip=(2.5, 2.0)), CFG)  # 0.25
    assert check_detour(synthetic_candidate(), WindowConfig(max_detour=0.0))
    assert not check_detour(synthetic_candidate(direct=(0.0, 2.0)), CFG)


def test_check_profit_examples():
    assert check_profit(synthetic_candidate())
    assert check_profit(synthetic_candidate(joint=10.0))
    assert not check_profit(synthetic_candidate(joint=9.99))


def test_single_rider_matrix(line):
    m = feasibility_matrix([rider(line, 1, 0, 3)], 5.0, line, CFG, PricingParams())
    assert m.entries.shape == (1, 1) and not m.entries.any()
    assert list(m.pairs()) == []


def test_coincident_riders_feasible(line, pricing):
    a, b = rider(line, 1, 0, 3, 1.0), rider(line, 2, 0, 3, 2.0, platform=1)
    m = feasibility_matrix([a, b], 5.0, line, CFG, pricing)
    assert list(m.pairs()) == [(1, 2)]
    cand = m.candidate(2, 1)
    assert cand.joint_profit == pytest.approx(12.8 * 2 - 3 * 4 * 0.5)
    assert verify_match(cand, 5.0, CFG, VehicleAccessModel(), pricing) == []


def test_verify_match_names_failures(line, pricing):
    cand = make_candidate(rider(line, 1, 0, 3), rider(line, 2, 4, 1), line, pricing)
    failed = verify_match(cand, 0.0, CFG, VehicleAccessModel(), pricing)
    assert "C2-detour" in failed and "C1-wait" in failed


def test_filter_keeps_intra_pairs(line, pricing):
    a, b = rider(line, 1, 0, 3), rider(line, 2, 0, 3)
    m = feasibility_matrix([a, b], 1.0, line, CFG, pricing)
    for mech in Mechanism:
        assert (profit_aware_filter(m, mech, MarketShares()).entries == m.entries).all()


def test_filter_shapley_without_alternatives(line, pricing):
    a, b = rider(line, 1, 0, 3), rider(line, 2, 0, 3, platform=1)
    m = feasibility_matrix([a, b], 1.0, line, CFG, pricing)
    assert m.entries[0, 1]
    assert profit_aware_filter(m, "shapley", MarketShares()).entries[0, 1]


def test_filter_degenerate_market_share(line, pricing):
    a, b = rider(line, 1, 0, 3), rider(line, 2, 0, 3, platform=1)
    m = feasibility_matrix([a, b], 1.0, line, CFG, pricing)
    assert not profit_aware_filter(m, "market", MarketShares((1.0, 0.0))).entries.any()


def test_filter_respects_intra_alternative(pricing):
    # riders 1 and 2 on platform 0 share perfectly; rider 3 on platform 1 would pair with 1
    net = line_network(10)
    a, b = rider(net, 1, 0, 6), rider(net, 2, 0, 6)
    c = rider(net, 3, 0, 5, platform=1)
    m = feasibility_matrix([a, b, c], 1.0, net, CFG, pricing)
    assert m.entries.all(where=~np.eye(3, dtype=bool))
    pair = profit_aware_filter(m, "shapley", MarketShares(), InnerBenchmark.PAIR)
    # the whole intra pair profit beats any half-surplus inter share
    assert not pair.entries[0, 2] and not pair.entries[1, 2] and pair.entries[0, 1]


def test_split_pair_intra_is_symmetric(line, pricing):
    a, b = rider(line, 1, 0, 3), rider(line, 2, 0, 3)
    cand = make_candidate(a, b, line, pricing)
    for mech in Mechanism:
        x, y = split_pair(cand, mech, MarketShares())
        assert x == pytest.approx(y) and x + y == pytest.approx(cand.joint_profit)


def test_matrix_accepts_precomputed_distances(line, pricing):
    riders = [rider(line, k, k % 3, 3 + k % 4, k * 0.5, k % 2) for k in range(6)]
    dm = precompute_distance_matrix(line, sorted(line.nodes))
    a = feasibility_matrix(riders, 4.0, line, CFG, pricing)
    b = feasibility_matrix(riders, 4.0, dm, CFG, pricing)
    assert (a.entries == b.entries).all()
