import threading
from itertools import combinations

import pytest
from hypothesis import given, strategies as st

from mpls.matroids import (
    DependentContractionError,
    FreeMatroid,
    GraphicMatroid,
    GroundSetError,
    LinearMatroid,
    MatroidAxiomError,
    MatroidOracle,
    PartitionMatroid,
    UniformMatroid,
    check_matroid_axioms,
    contract,
    disjoint_union,
    independent_subsets,
    relabel,
    restrict,
    with_coloops,
)

AXIOM_CASES = [
    FreeMatroid(4),
    UniformMatroid(5, 2),
    UniformMatroid(4, 0),
    UniformMatroid(3, 3),
    PartitionMatroid([[0, 1], [2, 3, 4]], [1, 2]),
    PartitionMatroid([[0], [1], [2]], [0, 1, 1]),
    GraphicMatroid(3, [(0, 1), (1, 2), (0, 2), (0, 1)]),
    GraphicMatroid(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 1)]),
    LinearMatroid(2, [[1, 0], [0, 1], [1, 1], [0, 0]]),
    LinearMatroid(5, [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 2, 3], [4, 4, 4]]),
]


@pytest.mark.parametrize("oracle", AXIOM_CASES, ids=lambda o: type(o).__name__)
def test_families_satisfy_axioms(oracle):
    check_matroid_axioms(oracle)


def test_combinators_satisfy_axioms():
    base = GraphicMatroid(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)])
    check_matroid_axioms(restrict(base, [0, 1, 2, 4]))
    check_matroid_axioms(contract(base, [0]))
    shifted = relabel(UniformMatroid(3, 2), {0: 10, 1: 11, 2: 12})
    check_matroid_axioms(disjoint_union([UniformMatroid(2, 1), shifted]))
    check_matroid_axioms(relabel(base, {i: i + 10 for i in range(5)}))
    check_matroid_axioms(with_coloops(UniformMatroid(2, 1), [5, 6]))


class _TwoWorlds(MatroidOracle):
    """Looks downward closed but fails the exchange axiom."""

    def __init__(self):
        super().__init__(range(4))

    def _independent(self, subset):
        return subset <= {0, 1} or subset <= {2, 3}


class _NoDownward(MatroidOracle):
    def __init__(self):
        super().__init__(range(4))

    def _independent(self, subset):
        return len(subset) != 1


def test_axiom_checker_catches_exchange_violation():
    with pytest.raises(MatroidAxiomError):
        check_matroid_axioms(_TwoWorlds())


def test_axiom_checker_catches_downward_violation():
    with pytest.raises(MatroidAxiomError):
        check_matroid_axioms(_NoDownward())


@given(st.sets(st.integers(0, 7)), st.integers(0, 8))
def test_uniform_rank(subset, r):
    oracle = UniformMatroid(8, r)
    assert oracle.rank(subset) == min(len(subset), r)


def test_graphic_rank_spanning():
    k4 = GraphicMatroid(4, [(u, v) for u in range(4) for v in range(u + 1, 4)])
    assert k4.rank(k4.ground) == 3


def test_rank_monotone_and_submodular():
    oracle = LinearMatroid(2, [[1, 0], [0, 1], [1, 1], [1, 0], [0, 0]])
    n = 5
    subsets = [frozenset(j for j in range(n) if mask >> j & 1) for mask in range(1 << n)]
    ranks = {s: oracle.rank(s) for s in subsets}
    for a in subsets:
        for b in subsets:
            if a <= b:
                assert ranks[a] <= ranks[b]
            assert ranks[a | b] + ranks[a & b] <= ranks[a] + ranks[b]


def test_rank_uses_one_call_per_element():
    oracle = UniformMatroid(6, 3)
    oracle.reset_calls()
    oracle.rank({0, 2, 4, 5})
    assert oracle.calls == 4


def test_graphic_matches_binary_representation():
    # A forest iff the corresponding GF(2) incidence columns are independent.
    edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2), (1, 2)]
    graphic = GraphicMatroid(4, edges)
    cols = []
    for u, v in edges:
        col = [0, 0, 0, 0]
        col[u] ^= 1
        col[v] ^= 1
        cols.append(col)
    linear = LinearMatroid(2, cols)
    for size in range(len(edges) + 1):
        for combo in combinations(range(len(edges)), size):
            assert graphic.is_independent(combo) == linear.is_independent(combo)


def test_contract_triangle_becomes_rank_one():
    triangle = GraphicMatroid(3, [(0, 1), (1, 2), (0, 2)])
    contracted = contract(triangle, [0])
    assert contracted.ground == {1, 2}
    assert contracted.is_independent({1})
    assert contracted.is_independent({2})
    assert not contracted.is_independent({1, 2})


def test_contract_rejects_dependent_set():
    with pytest.raises(DependentContractionError):
        contract(UniformMatroid(3, 1), [0, 1])


def test_restrict_then_contract_compose():
    base = GraphicMatroid(4, [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)])
    small = contract(restrict(base, [0, 1, 2, 3]), [0])
    assert sorted(small.ground) == [1, 2, 3]
    check_matroid_axioms(small)


def test_disjoint_union_splits_by_part():
    shifted = relabel(UniformMatroid(2, 1), {0: 10, 1: 11})
    union = disjoint_union([UniformMatroid(2, 1), shifted])
    assert sorted(union.ground) == [0, 1, 10, 11]
    assert union.is_independent({0, 10})
    assert not union.is_independent({0, 1})
    assert not union.is_independent({10, 11})


def test_disjoint_union_rejects_shared_ground():
    with pytest.raises(GroundSetError):
        disjoint_union([UniformMatroid(2, 1), UniformMatroid(2, 2)])


def test_relabel_requires_bijection():
    with pytest.raises(ValueError):
        relabel(UniformMatroid(2, 1), {0: 7, 1: 7})


def test_coloops_are_always_addable():
    oracle = with_coloops(UniformMatroid(2, 1), [9, 10])
    for s in independent_subsets(restrict(oracle, [0, 1])):
        assert oracle.is_independent(s | {9, 10})


def test_ground_set_error():
    with pytest.raises(GroundSetError):
        UniformMatroid(3, 1).is_independent({5})


def test_call_counter_thread_safety():
    oracle = FreeMatroid(3)
    oracle.reset_calls()

    def worker():
        for _ in range(200):
            oracle.is_independent({0, 1})

    threads = [threading.Thread(target=worker) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert oracle.calls == 1600


@given(st.data())
def test_partition_counts_match_direct_check(data):
    blocks = [[0, 1, 2], [3, 4], [5]]
    caps = [
        data.draw(st.integers(0, 3)),
        data.draw(st.integers(0, 2)),
        data.draw(st.integers(0, 1)),
    ]
    oracle = PartitionMatroid(blocks, caps)
    subset = data.draw(st.sets(st.integers(0, 5)))
    expected = all(
        len(subset & set(block)) <= cap for block, cap in zip(blocks, caps)
    )
    assert oracle.is_independent(subset) == expected
