import dataclasses
from fractions import Fraction

import pytest

from mpls.campaigns import (
    k4_report,
    laminar_campaign,
    near_marker_report,
    rota_campaign,
    trace_campaign,
)
from mpls.exact import brute_force_optimum
from mpls.exchange import (
    CLASS_BLOCKED_EARLIER,
    CLASS_DOUBLE,
    ExchangeBudgetError,
    ExchangeInputError,
    estimate_near_marker_probability,
    find_rota_exchange,
    k4_non_composability_witness,
    near_marker_bound,
    refine_laminar,
    verify_conflict_trace,
    verify_k4_witness,
    build_conflict_trace,
)
from mpls.generators import generate
from mpls.instance import ParityInstance, Solution
from mpls.matroids import FreeMatroid, PartitionMatroid, UniformMatroid
from mpls.solver import sliding_local_search

EPS = Fraction("0.3873")
DELTA = Fraction("0.0001")
GAMMA = Fraction("0.2253")


def test_exchange_certificate_on_uniform_matroid():
    cert = find_rota_exchange(UniformMatroid(6, 3), [{0}, {1, 2}], {3, 4, 5})
    assert cert is not None
    assert [len(p) for p in cert.exchanged] == [1, 2]
    union = frozenset().union(*cert.exchanged)
    assert union <= {3, 4, 5}
    assert len(union) == 3
    cert.verify()


def test_exchange_tolerates_source_target_overlap():
    cert = find_rota_exchange(UniformMatroid(3, 2), [{0}, {1}], {0, 1})
    assert cert is not None
    assert frozenset().union(*cert.exchanged) == {0, 1}


def test_exchange_input_validation():
    m = UniformMatroid(6, 3)
    with pytest.raises(ExchangeInputError):
        find_rota_exchange(m, [{0, 1}, {1}], {3, 4, 5})
    with pytest.raises(ExchangeInputError):
        find_rota_exchange(UniformMatroid(6, 1), [{0}, {1}], {3})
    with pytest.raises(ExchangeInputError):
        find_rota_exchange(UniformMatroid(6, 2), [{0}], {3, 4, 5})
    with pytest.raises(ExchangeInputError):
        find_rota_exchange(m, [{0}, {1}], {3})


def test_exchange_budget_guard():
    m = FreeMatroid(40)
    parts = [frozenset(range(10)), frozenset(range(10, 20))]
    target = frozenset(range(20, 40))
    with pytest.raises(ExchangeBudgetError):
        find_rota_exchange(m, parts, target)
    cert = find_rota_exchange(m, parts, target, search_budget=400_000)
    assert cert is not None


def test_refinement_when_parts_overlap_the_kept_target():
    # Source {0, 2, 3} and target {0, 1, 2, 3} overlap, so the contracted
    # search must shrink the parts before refining.
    m = PartitionMatroid([[0], [1], [2], [3]], [1, 1, 1, 1])
    parts = (frozenset([2]), frozenset([3]), frozenset([0]))
    target = frozenset([0, 1, 2, 3])
    exchange_set = frozenset([0, 1, 2])
    cert = refine_laminar(m, parts, target, exchange_set)
    assert frozenset().union(*cert.exchanged) == exchange_set
    assert [len(p) for p in cert.exchanged] == [1, 1, 1]
    cert.verify()


def test_refinement_input_validation():
    m = FreeMatroid(6)
    with pytest.raises(ExchangeInputError):
        refine_laminar(m, [{0}, {1}], {2, 3}, {2, 4})
    with pytest.raises(ExchangeInputError):
        refine_laminar(m, [{0}, {1}], {2, 3}, {2})


def test_rota_campaign_finds_every_certificate():
    report = rota_campaign(cases=60, seed=7)
    assert report["successes"] == 60
    assert report["failures"] == []


def test_laminar_campaign_refines_every_case():
    report = laminar_campaign(cases=60, seed=13)
    assert report["successes"] == 60
    assert report["failures"] == []


def trap_conflict(seed):
    inst = generate("greedy-trap", k=3, rho=Fraction(3, 10))
    sol, trace = sliding_local_search(inst, EPS, DELTA, seed)
    optimum = brute_force_optimum(inst).optimum
    ct = build_conflict_trace(inst, trace, optimum, GAMMA)
    return inst, sol, ct


def test_conflict_trace_of_trapped_run():
    # seed 0 draws a shift below rho; the solver keeps the heavy edge and
    # every light optimum edge is displaced by an earlier interval.
    inst, sol, ct = trap_conflict(0)
    assert sorted(sol.edges) == [0]
    assert verify_conflict_trace(ct) == []
    assert [r.cls for r in ct.reports] == [CLASS_BLOCKED_EARLIER] * 3
    assert [r.conflict_size for r in ct.reports] == [1, 1, 1]
    assert all(r.near_marker for r in ct.reports)
    assert ct.singles_weight() == 0


def test_conflict_trace_of_recovered_run():
    inst, sol, ct = trap_conflict(2)
    assert sorted(sol.edges) == [1, 2, 3]
    assert verify_conflict_trace(ct) == []
    assert [r.cls for r in ct.reports] == [CLASS_DOUBLE] * 3
    assert [r.conflict_size for r in ct.reports] == [3, 3, 3]
    assert all(r.near_marker is None for r in ct.reports)
    assert ct.singles_weight() <= sol.weight


def test_conflict_trace_verifier_catches_tampering():
    _, _, ct = trap_conflict(0)
    shrunk = list(ct.blocked_sets)
    shrunk[-1] = shrunk[-1] - {min(shrunk[-1])}
    tampered = dataclasses.replace(ct, blocked_sets=tuple(shrunk))
    assert verify_conflict_trace(tampered) != []


def test_trace_campaign_verifies_every_run():
    report = trace_campaign(runs=10, seed=5, epsilon=EPS, delta=DELTA, gamma=GAMMA)
    assert report["successes"] == 10
    assert report["failures"] == []


def test_near_marker_bound_value():
    bound = near_marker_bound(EPS, GAMMA)
    assert bound == GAMMA / (EPS * (1 + GAMMA))
    assert float(bound) == pytest.approx(0.4748, abs=1e-4)
    assert near_marker_bound(EPS, Fraction(0)) == 0


def test_near_marker_frequencies_stay_under_bound():
    inst = generate("set-packing", n=8, m=7, k=3, seed=11)
    report = near_marker_report(inst, EPS, GAMMA, samples=2000, seed=1)
    assert report["all_within_bound"]
    assert report["all_within_tolerance"]
    assert report["edges"]


def test_gamma_zero_never_counts():
    inst = generate("set-packing", n=8, m=7, k=3, seed=11)
    optimum = brute_force_optimum(inst).optimum
    freqs = estimate_near_marker_probability(
        inst, optimum, EPS, Fraction(0), samples=500, seed=3
    )
    assert set(freqs) == set(optimum.edges)
    assert all(f == 0 for f in freqs.values())


def test_zero_weight_edge_is_never_near_a_marker():
    inst = ParityInstance(
        2,
        (frozenset([0]), frozenset([1])),
        (Fraction(1), Fraction(0)),
        FreeMatroid(2),
        1,
    )
    claimed = Solution(frozenset([0, 1]), Fraction(1))
    freqs = estimate_near_marker_probability(
        inst, claimed, EPS, GAMMA, samples=200, seed=0
    )
    assert freqs[1] == 0


def test_estimator_rejects_out_of_range_parameters():
    inst = generate("set-packing", n=8, m=7, k=3, seed=11)
    optimum = brute_force_optimum(inst).optimum
    too_big = 1 / (1 - EPS) - 1 + Fraction(1, 100)
    with pytest.raises(ValueError):
        estimate_near_marker_probability(inst, optimum, EPS, too_big, 10, 0)
    with pytest.raises(ValueError):
        estimate_near_marker_probability(inst, optimum, Fraction(1), GAMMA, 10, 0)
    with pytest.raises(ValueError):
        estimate_near_marker_probability(inst, optimum, EPS, GAMMA, 0, 0)


def test_k4_witness_is_frozen_and_verifies():
    w = k4_non_composability_witness()
    assert sorted(w.base_edges) == [0, 1, 2]
    assert (w.first.add, w.first.remove) == ((3,), (0,))
    assert (w.second.add, w.second.remove) == ((4, 5), (1, 2))
    assert w.first.gain == 0 and w.second.gain == 0
    assert verify_k4_witness(w)
    report = k4_report()
    assert report["verified"]
    assert report["base_edges"] == [0, 1, 2]
