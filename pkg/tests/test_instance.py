from fractions import Fraction
from itertools import combinations

import pytest

from mpls.instance import (
    InstanceError,
    ParityInstance,
    RawParityInstance,
    cost_of_vertices,
    from_matroid_intersection,
    make_disjoint,
    vertex_costs,
)
from mpls.exact import brute_force_intersection, brute_force_optimum
from mpls.matroids import (
    FreeMatroid,
    PartitionMatroid,
    UniformMatroid,
    VertexCopyMatroid,
)


def singles(n, weights, matroid, arity=1):
    return ParityInstance(
        num_vertices=n,
        edges=tuple(frozenset([v]) for v in range(n)),
        weights=tuple(Fraction(w) for w in weights),
        matroid=matroid,
        arity=arity,
    )


def test_rejects_overlapping_edges():
    with pytest.raises(InstanceError):
        ParityInstance(3, (frozenset({0, 1}), frozenset({1, 2})), (Fraction(1),) * 2,
                       FreeMatroid(3), 2)


def test_rejects_uncovered_vertex():
    with pytest.raises(InstanceError):
        ParityInstance(3, (frozenset({0, 1}),), (Fraction(1),), FreeMatroid(3), 2)


def test_rejects_negative_weight():
    with pytest.raises(InstanceError):
        singles(2, [1, -1], FreeMatroid(2))


def test_rejects_ground_mismatch():
    with pytest.raises(InstanceError):
        singles(2, [1, 1], FreeMatroid(3))


def test_rejects_oversized_edge():
    with pytest.raises(InstanceError):
        ParityInstance(3, (frozenset({0, 1, 2}),), (Fraction(1),), FreeMatroid(3), 2)


def test_feasibility_is_one_oracle_call():
    inst = singles(3, [1, 2, 3], UniformMatroid(3, 2))
    inst.matroid.reset_calls()
    assert inst.is_feasible({0, 1})
    assert inst.matroid.calls == 1
    assert not inst.is_feasible({0, 1, 2})


def test_weight_numerators_share_denominator():
    inst = singles(3, [Fraction(1, 2), Fraction(1, 3), 1], FreeMatroid(3))
    assert inst.weight_denominator == 6
    assert inst.weight_numerators == (3, 2, 6)


def test_vertex_costs():
    inst = ParityInstance(
        4,
        (frozenset({0, 1}), frozenset({2}), frozenset({3})),
        (Fraction(5), Fraction(2), Fraction(1)),
        FreeMatroid(4),
        2,
    )
    costs = vertex_costs(inst, {0, 1})
    assert costs == {0: Fraction(5), 1: Fraction(5), 2: Fraction(2)}
    assert cost_of_vertices(inst, {0, 1}, {1, 2}) == Fraction(7)
    with pytest.raises(InstanceError):
        cost_of_vertices(inst, {0}, {3})


def overlap_raw():
    # Two hyperedges sharing vertex 1 on a rank-2 uniform matroid.
    return RawParityInstance(
        num_vertices=3,
        edges=(frozenset({0, 1}), frozenset({1, 2})),
        weights=(Fraction(2), Fraction(3)),
        matroid=UniformMatroid(3, 2),
        arity=2,
    )


def test_make_disjoint_copy_numbering_is_frozen():
    norm = make_disjoint(overlap_raw())
    assert norm.num_vertices == 4
    # copies in (vertex, incident edge) order: v0->0, v1->(1,2), v2->3
    assert norm.edges == (frozenset({0, 1}), frozenset({2, 3}))
    assert isinstance(norm.matroid, VertexCopyMatroid)


def test_make_disjoint_preserves_feasibility_of_every_edge_set():
    raw = overlap_raw()
    norm = make_disjoint(raw)
    for size in range(3):
        for ids in combinations(range(2), size):
            assert raw.is_feasible(ids) == norm.is_feasible(ids)


def test_make_disjoint_drops_isolated_vertices():
    raw = RawParityInstance(
        num_vertices=4,
        edges=(frozenset({1}), frozenset({3})),
        weights=(Fraction(1), Fraction(1)),
        matroid=FreeMatroid(4),
        arity=1,
    )
    norm = make_disjoint(raw)
    assert norm.num_vertices == 2


def test_make_disjoint_keeps_exact_covers_unchanged():
    matroid = UniformMatroid(4, 2)
    raw = RawParityInstance(
        num_vertices=4,
        edges=(frozenset({0, 1}), frozenset({2, 3})),
        weights=(Fraction(1), Fraction(2)),
        matroid=matroid,
        arity=2,
    )
    norm = make_disjoint(raw)
    assert norm.matroid is matroid
    assert norm.edges == raw.edges


def test_raw_optimum_survives_normalization():
    raw = overlap_raw()
    assert brute_force_optimum(raw).optimum.weight == Fraction(3)
    norm = make_disjoint(raw)
    result = brute_force_optimum(norm)
    assert result.optimum.weight == Fraction(3)
    assert sorted(result.optimum.edges) == [1]


def test_intersection_single_uniform_matroid_takes_top_r():
    weights = [Fraction(w) for w in (5, 1, 7, 3)]
    inst = from_matroid_intersection([UniformMatroid(4, 2)], weights)
    assert inst.arity == 1
    assert inst.num_edges == 4
    assert brute_force_optimum(inst).optimum.weight == Fraction(12)


def max_weight_bipartite_matching(n_left, n_right, edges, weights):
    """Exhaustive max-weight matching; independent of the matroid code."""
    best = Fraction(0)
    ids = range(len(edges))
    for size in range(min(n_left, n_right) + 1):
        for combo in combinations(ids, size):
            lefts = [edges[j][0] for j in combo]
            rights = [edges[j][1] for j in combo]
            if len(set(lefts)) == size and len(set(rights)) == size:
                w = sum((weights[j] for j in combo), Fraction(0))
                best = max(best, w)
    return best


def test_intersection_of_two_partitions_is_bipartite_matching():
    # Element j is the pair (left[j], right[j]); one partition matroid per side.
    left = [0, 0, 1, 1, 2]
    right = [0, 1, 0, 2, 1]
    weights = [Fraction(w) for w in (4, 3, 3, 5, 2)]
    n = len(left)
    left_blocks = [[j for j in range(n) if left[j] == s] for s in range(3)]
    right_blocks = [[j for j in range(n) if right[j] == s] for s in range(3)]
    m_left = PartitionMatroid(left_blocks, [1, 1, 1])
    m_right = PartitionMatroid(right_blocks, [1, 1, 1])

    expected = max_weight_bipartite_matching(3, 3, list(zip(left, right)), weights)
    assert brute_force_intersection([m_left, m_right], weights).weight == expected

    inst = from_matroid_intersection([m_left, m_right], weights)
    assert inst.arity == 2
    assert brute_force_optimum(inst).optimum.weight == expected


def test_intersection_edges_use_labelled_copies():
    inst = from_matroid_intersection(
        [UniformMatroid(3, 1), UniformMatroid(3, 2)], [Fraction(1)] * 3
    )
    assert inst.num_vertices == 6
    assert inst.edges[1] == frozenset({1, 4})
