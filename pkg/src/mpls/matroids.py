"""Matroid independence oracles.

Every matroid here is presented as a black box answering "is this subset
independent?".  Rank, restriction, contraction and disjoint unions are all
derived from that single query.  Oracles are immutable after construction;
combinators wrap a base oracle instead of copying it.  Each oracle keeps a
thread-safe counter of independence queries so call budgets can be asserted
by tests and reported by the solver.
"""

from __future__ import annotations

import threading
from itertools import combinations
from typing import Iterable, Sequence


class GroundSetError(ValueError):
    """A query or construction referenced elements outside the ground set."""


class DependentContractionError(ValueError):
    """Contraction was requested on a dependent set."""


class MatroidAxiomError(AssertionError):
    """Raised by the exhaustive axiom checker when a structure is not a matroid."""


class MatroidOracle:
    """Base class for independence oracles over a finite ground set.

    Subclasses implement ``_independent`` for a frozenset already known to
    lie inside ``ground``.  The public entry point validates the query,
    bumps the call counter, and delegates.
    """

    __slots__ = ("ground", "_calls", "_lock")

    def __init__(self, ground: Iterable[int]):
        self.ground: frozenset[int] = frozenset(ground)
        self._calls = 0
        self._lock = threading.Lock()

    def is_independent(self, subset: Iterable[int]) -> bool:
        s = frozenset(subset)
        if not s <= self.ground:
            raise GroundSetError(
                f"query contains elements outside the ground set: {sorted(s - self.ground)}"
            )
        with self._lock:
            self._calls += 1
        return self._independent(s)

    def _independent(self, subset: frozenset[int]) -> bool:
        raise NotImplementedError

    @property
    def calls(self) -> int:
        """Number of independence queries answered so far."""
        return self._calls

    def reset_calls(self) -> None:
        with self._lock:
            self._calls = 0

    def rank(self, subset: Iterable[int]) -> int:
        """Rank of ``subset`` by greedy augmentation.

        Uses exactly one oracle call per element of the subset; correctness
        of the greedy relies on the exchange property.
        """
        acc: set[int] = set()
        count = 0
        for e in sorted(frozenset(subset)):
            acc.add(e)
            if self.is_independent(acc):
                count += 1
            else:
                acc.discard(e)
        return count

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"{type(self).__name__}(|ground|={len(self.ground)})"


class FreeMatroid(MatroidOracle):
    """Every subset independent."""

    __slots__ = ()

    def __init__(self, n: int):
        if n < 0:
            raise ValueError("ground size must be nonnegative")
        super().__init__(range(n))

    def _independent(self, subset: frozenset[int]) -> bool:
        return True


class UniformMatroid(MatroidOracle):
    """Independent iff the subset has at most ``r`` elements."""

    __slots__ = ("r",)

    def __init__(self, n: int, r: int):
        if n < 0 or not 0 <= r:
            raise ValueError("need n >= 0 and r >= 0")
        super().__init__(range(n))
        self.r = r

    def _independent(self, subset: frozenset[int]) -> bool:
        return len(subset) <= self.r


class PartitionMatroid(MatroidOracle):
    """At most ``capacities[i]`` elements from ``blocks[i]``.

    Blocks must be pairwise disjoint; their union is the ground set.
    """

    __slots__ = ("blocks", "capacities", "_block_of")

    def __init__(self, blocks: Sequence[Iterable[int]], capacities: Sequence[int]):
        blocks = tuple(frozenset(b) for b in blocks)
        if len(blocks) != len(capacities):
            raise ValueError("one capacity per block required")
        block_of: dict[int, int] = {}
        for i, b in enumerate(blocks):
            for v in b:
                if v in block_of:
                    raise ValueError(f"element {v} appears in two blocks")
                block_of[v] = i
        caps = tuple(int(c) for c in capacities)
        if any(c < 0 for c in caps):
            raise ValueError("capacities must be nonnegative")
        super().__init__(block_of)
        self.blocks = blocks
        self.capacities = caps
        self._block_of = block_of

    def _independent(self, subset: frozenset[int]) -> bool:
        counts: dict[int, int] = {}
        block_of = self._block_of
        caps = self.capacities
        for v in subset:
            b = block_of[v]
            c = counts.get(b, 0) + 1
            if c > caps[b]:
                return False
            counts[b] = c
        return True


class GraphicMatroid(MatroidOracle):
    """Ground elements are edges of a graph; independent iff they form a forest."""

    __slots__ = ("num_graph_vertices", "graph_edges")

    def __init__(self, num_graph_vertices: int, graph_edges: Sequence[tuple[int, int]]):
        edges = tuple((int(u), int(v)) for u, v in graph_edges)
        for u, v in edges:
            if not (0 <= u < num_graph_vertices and 0 <= v < num_graph_vertices):
                raise ValueError(f"edge ({u},{v}) outside vertex range")
        super().__init__(range(len(edges)))
        self.num_graph_vertices = num_graph_vertices
        self.graph_edges = edges

    def _independent(self, subset: frozenset[int]) -> bool:
        parent: dict[int, int] = {}

        def find(x: int) -> int:
            root = x
            while parent.get(root, root) != root:
                root = parent[root]
            while parent.get(x, x) != x:
                parent[x], x = root, parent[x]
            return root

        for idx in subset:
            u, v = self.graph_edges[idx]
            ru, rv = find(u), find(v)
            if ru == rv:
                return False  # closes a cycle (covers self-loops too)
            parent[ru] = rv
        return True


class LinearMatroid(MatroidOracle):
    """Columns of a matrix over a prime field; independent iff full column rank.

    Arithmetic is exact modular arithmetic, no floating point anywhere.
    """

    __slots__ = ("prime", "columns", "_dim")

    def __init__(self, prime: int, columns: Sequence[Sequence[int]]):
        if prime < 2 or any(prime % d == 0 for d in range(2, min(prime, 40))):
            raise ValueError(f"{prime} is not a small prime")
        cols = tuple(tuple(int(x) % prime for x in c) for c in columns)
        if cols:
            dim = len(cols[0])
            if any(len(c) != dim for c in cols):
                raise ValueError("columns must share a dimension")
        else:
            dim = 0
        super().__init__(range(len(cols)))
        self.prime = prime
        self.columns = cols
        self._dim = dim

    def _independent(self, subset: frozenset[int]) -> bool:
        if len(subset) > self._dim:
            return False
        p = self.prime
        pivots: list[tuple[int, list[int]]] = []  # (pivot row, reduced column)
        for i in sorted(subset):
            col = list(self.columns[i])
            for prow, pcol in pivots:
                factor = col[prow]
                if factor:
                    for r in range(self._dim):
                        col[r] = (col[r] - factor * pcol[r]) % p
            pivot_row = next((r for r in range(self._dim) if col[r]), None)
            if pivot_row is None:
                return False
            inv = pow(col[pivot_row], -1, p)
            col = [(inv * x) % p for x in col]
            pivots.append((pivot_row, col))
        return True


class RestrictedMatroid(MatroidOracle):
    """Base matroid restricted to a subset of its ground set."""

    __slots__ = ("base",)

    def __init__(self, base: MatroidOracle, keep: Iterable[int]):
        keep = frozenset(keep)
        if not keep <= base.ground:
            raise GroundSetError("restriction outside the base ground set")
        super().__init__(keep)
        self.base = base

    def _independent(self, subset: frozenset[int]) -> bool:
        return self.base.is_independent(subset)


class ContractedMatroid(MatroidOracle):
    """Base matroid contracted on an independent set.

    A set is independent here iff its union with the contracted set is
    independent in the base.  Contracting a dependent set is rejected.
    """

    __slots__ = ("base", "away")

    def __init__(self, base: MatroidOracle, away: Iterable[int]):
        away = frozenset(away)
        if not away <= base.ground:
            raise GroundSetError("contraction set outside the base ground set")
        if not base.is_independent(away):
            raise DependentContractionError("can only contract an independent set")
        super().__init__(base.ground - away)
        self.base = base
        self.away = away

    def _independent(self, subset: frozenset[int]) -> bool:
        return self.base.is_independent(subset | self.away)


class DisjointUnionMatroid(MatroidOracle):
    """Union of matroids living on pairwise disjoint ground sets.

    A set is independent iff its intersection with each part's ground set
    is independent there.  This deliberately does not implement matroid
    union over a shared ground set.
    """

    __slots__ = ("parts", "_owner")

    def __init__(self, parts: Sequence[MatroidOracle]):
        owner: dict[int, int] = {}
        for i, part in enumerate(parts):
            for v in part.ground:
                if v in owner:
                    raise GroundSetError(
                        f"element {v} appears in two parts; grounds must be disjoint"
                    )
                owner[v] = i
        super().__init__(owner)
        self.parts = tuple(parts)
        self._owner = owner

    def _independent(self, subset: frozenset[int]) -> bool:
        split: dict[int, set[int]] = {}
        for v in subset:
            split.setdefault(self._owner[v], set()).add(v)
        return all(self.parts[i].is_independent(s) for i, s in split.items())


class RelabeledMatroid(MatroidOracle):
    """Base matroid with ground elements renamed through a bijection."""

    __slots__ = ("base", "_back")

    def __init__(self, base: MatroidOracle, mapping: dict[int, int]):
        if frozenset(mapping) != base.ground:
            raise GroundSetError("mapping must cover exactly the base ground set")
        back = {new: old for old, new in mapping.items()}
        if len(back) != len(mapping):
            raise ValueError("mapping must be a bijection")
        super().__init__(back)
        self.base = base
        self._back = back

    def _independent(self, subset: frozenset[int]) -> bool:
        back = self._back
        return self.base.is_independent(frozenset(back[v] for v in subset))


class VertexCopyMatroid(MatroidOracle):
    """Copies of base elements: at most one copy each, originals independent.

    Ground elements are copies; ``copy_to_original`` sends each copy to the
    base element it duplicates.  A set of copies is independent iff no two
    copies share an original and the set of originals is independent in the
    base matroid.
    """

    __slots__ = ("base", "copy_to_original")

    def __init__(self, base: MatroidOracle, copy_to_original: dict[int, int]):
        originals = frozenset(copy_to_original.values())
        if not originals <= base.ground:
            raise GroundSetError("copy targets outside the base ground set")
        super().__init__(copy_to_original)
        self.base = base
        self.copy_to_original = dict(copy_to_original)

    def _independent(self, subset: frozenset[int]) -> bool:
        seen: set[int] = set()
        mapping = self.copy_to_original
        for c in subset:
            o = mapping[c]
            if o in seen:
                return False
            seen.add(o)
        return self.base.is_independent(seen)


class ColoopExtensionMatroid(MatroidOracle):
    """Base matroid plus fresh elements that are independent of everything."""

    __slots__ = ("base", "extras")

    def __init__(self, base: MatroidOracle, extras: Iterable[int]):
        extras = frozenset(extras)
        if extras & base.ground:
            raise GroundSetError("coloop ids must be fresh")
        super().__init__(base.ground | extras)
        self.base = base
        self.extras = extras

    def _independent(self, subset: frozenset[int]) -> bool:
        return self.base.is_independent(subset - self.extras)


def restrict(oracle: MatroidOracle, keep: Iterable[int]) -> MatroidOracle:
    return RestrictedMatroid(oracle, keep)


def contract(oracle: MatroidOracle, away: Iterable[int]) -> MatroidOracle:
    return ContractedMatroid(oracle, away)


def disjoint_union(parts: Sequence[MatroidOracle]) -> MatroidOracle:
    return DisjointUnionMatroid(parts)


def relabel(oracle: MatroidOracle, mapping: dict[int, int]) -> MatroidOracle:
    return RelabeledMatroid(oracle, mapping)


def with_coloops(oracle: MatroidOracle, extras: Iterable[int]) -> MatroidOracle:
    return ColoopExtensionMatroid(oracle, extras)


def check_matroid_axioms(oracle: MatroidOracle, max_ground: int = 8) -> None:
    """Exhaustively verify the three matroid axioms.

    Checks that the empty set is independent, that independence is closed
    downward, and that the exchange property holds for every pair of
    independent sets of different sizes.  Exponential in the ground size,
    so refuse anything larger than ``max_ground`` elements.

    Raises MatroidAxiomError on the first violation found.
    """
    elems = sorted(oracle.ground)
    n = len(elems)
    if n > max_ground:
        raise ValueError(f"ground set of size {n} exceeds the exhaustive limit {max_ground}")

    indep: dict[int, bool] = {}
    for mask in range(1 << n):
        subset = frozenset(elems[i] for i in range(n) if mask >> i & 1)
        indep[mask] = oracle.is_independent(subset)

    if not indep[0]:
        raise MatroidAxiomError("empty set is dependent")

    for mask in range(1 << n):
        if not indep[mask]:
            continue
        for i in range(n):
            if mask >> i & 1 and not indep[mask & ~(1 << i)]:
                raise MatroidAxiomError(
                    f"downward closure fails at {sorted(elems[j] for j in range(n) if mask >> j & 1)}"
                )

    sizes = {mask: bin(mask).count("1") for mask in range(1 << n)}
    independent_masks = [m for m in range(1 << n) if indep[m]]
    for a in independent_masks:
        for b in independent_masks:
            if sizes[a] >= sizes[b]:
                continue
            extra = b & ~a
            if not any(indep[a | (1 << i)] for i in range(n) if extra >> i & 1):
                set_a = sorted(elems[i] for i in range(n) if a >> i & 1)
                set_b = sorted(elems[i] for i in range(n) if b >> i & 1)
                raise MatroidAxiomError(f"exchange fails for {set_a} vs {set_b}")


def independent_subsets(oracle: MatroidOracle, pool: Iterable[int] | None = None):
    """Yield every independent subset of ``pool`` (default: whole ground set).

    Intended for exhaustive verification at small sizes only.
    """
    elems = sorted(oracle.ground if pool is None else frozenset(pool))
    for size in range(len(elems) + 1):
        for combo in combinations(elems, size):
            s = frozenset(combo)
            if oracle.is_independent(s):
                yield s
