"""Exchange certificates and conflict diagnostics.

This module makes the structural facts behind the solver's guarantee
checkable on concrete runs:

* ``find_rota_exchange``: for independent sets S (with a partition) and T,
  exhibit disjoint pieces of T, one per part, whose removal from T leaves
  room for that part.  Exhaustive search, small scale, certificate
  re-verified through the oracle.
* ``refine_laminar``: refine such an exchange so the pieces partition a
  given exchange set for S, by contracting away the rest of T.
* ``build_conflict_trace``: replay a solver trace against an exact
  optimum and produce a nested chain of blocked optimum vertices, one
  layer per weight interval, that explains which optimum edges the
  solution displaced and where.
* ``estimate_near_marker_probability``: sampled frequency of an optimum
  edge landing within a relative ``gamma`` of the marker above it.
* ``k4_non_composability_witness``: a small graphic instance showing two
  individually feasible swaps whose union is infeasible.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

from .instance import ParityInstance, Solution
from .matroids import ContractedMatroid, GraphicMatroid, MatroidOracle, with_coloops
from .serialization import instance_signature
from .solver import IntervalScheme, SolverTrace, SwapMove, compute_markers

CLASS_SINGLE = "single"
CLASS_DOUBLE = "double"
CLASS_BLOCKED_EARLIER = "blocked-earlier"
CLASS_UNBLOCKED = "unblocked-zero-weight"


class ExchangeInputError(ValueError):
    """Preconditions of an exchange operation were violated."""


class ExchangeSearchError(RuntimeError):
    """No certificate found where one must exist; indicates a bug."""


class ExchangeBudgetError(ValueError):
    """The exhaustive search would exceed its size budget."""


class CertificateError(AssertionError):
    """A constructed certificate failed re-verification."""


@dataclass(frozen=True)
class ExchangeCertificate:
    """Disjoint pieces of ``target``, one per part of the source partition.

    Piece i has the size of part i, and part i together with the rest of
    the target is independent.
    """

    matroid: MatroidOracle
    parts: tuple[frozenset[int], ...]
    target: frozenset[int]
    exchanged: tuple[frozenset[int], ...]

    def verify(self) -> None:
        """Re-check every claim through fresh oracle calls."""
        if len(self.exchanged) != len(self.parts):
            raise CertificateError("piece count does not match part count")
        source = frozenset().union(*self.parts) if self.parts else frozenset()
        if not self.matroid.is_independent(source):
            raise CertificateError("source set is not independent")
        if not self.matroid.is_independent(self.target):
            raise CertificateError("target set is not independent")
        taken: set[int] = set()
        for part, piece in zip(self.parts, self.exchanged):
            if not piece <= self.target:
                raise CertificateError("piece leaves the target set")
            if taken & piece:
                raise CertificateError("pieces are not disjoint")
            taken |= piece
            if len(piece) != len(part):
                raise CertificateError("piece size differs from its part")
            if not self.matroid.is_independent(part | (self.target - piece)):
                raise CertificateError("part does not fit after removing its piece")


def find_rota_exchange(
    matroid: MatroidOracle,
    parts: Sequence[Iterable[int]],
    target: Iterable[int],
    search_budget: int = 200_000,
) -> ExchangeCertificate | None:
    """Exhaustive search for an exchange certificate.

    ``parts`` partitions an independent source set; ``target`` is an
    independent set at least as large.  Every part's admissible pieces
    are enumerated up front (a piece is admissible when the part fits
    into the target minus that piece), then a backtracking pass picks
    pairwise disjoint pieces.  Returns None only if no certificate
    exists at all.
    """
    parts = tuple(frozenset(p) for p in parts)
    target_set = frozenset(target)
    source: set[int] = set()
    for p in parts:
        if source & p:
            raise ExchangeInputError("parts must be pairwise disjoint")
        source |= p
    if not matroid.is_independent(source):
        raise ExchangeInputError("source set must be independent")
    if not matroid.is_independent(target_set):
        raise ExchangeInputError("target set must be independent")
    if len(source) > len(target_set):
        raise ExchangeInputError("target must be at least as large as the source")

    target_sorted = sorted(target_set)
    cost = sum(_binomial(len(target_sorted), len(p)) for p in parts)
    if cost > search_budget:
        raise ExchangeBudgetError(f"candidate enumeration needs {cost} oracle calls")

    admissible: list[list[frozenset[int]]] = []
    for part in parts:
        options = [
            frozenset(piece)
            for piece in combinations(target_sorted, len(part))
            if matroid.is_independent(part | (target_set - frozenset(piece)))
        ]
        if not options:
            return None
        admissible.append(options)

    chosen: list[frozenset[int]] = []

    def backtrack(i: int, taken: frozenset[int]) -> bool:
        if i == len(parts):
            return True
        for piece in admissible[i]:
            if taken & piece:
                continue
            chosen.append(piece)
            if backtrack(i + 1, taken | piece):
                return True
            chosen.pop()
        return False

    if not backtrack(0, frozenset()):
        return None
    cert = ExchangeCertificate(
        matroid=matroid, parts=parts, target=target_set, exchanged=tuple(chosen)
    )
    cert.verify()
    return cert


def _binomial(n: int, k: int) -> int:
    if k < 0 or k > n:
        return 0
    out = 1
    for i in range(min(k, n - k)):
        out = out * (n - i) // (i + 1)
    return out


def refine_laminar(
    matroid: MatroidOracle,
    parts: Sequence[Iterable[int]],
    target: Iterable[int],
    exchange_set: Iterable[int],
) -> ExchangeCertificate:
    """Refine an exchange set for the whole source into per-part pieces.

    ``exchange_set`` is a subset of ``target`` of the source's size whose
    removal makes room for the entire source.  Contracting the rest of
    the target reduces the refinement to a plain exchange search inside
    the exchange set.  Source elements sitting inside the contracted
    part of the target drop out of that search; their pieces are padded
    back to full part size from the unused remainder of the exchange
    set, which is safe because removing more of the target only shrinks
    the set whose independence is claimed.  The final pieces partition
    the exchange set.
    """
    parts = tuple(frozenset(p) for p in parts)
    target_set = frozenset(target)
    swap_out = frozenset(exchange_set)
    source = frozenset().union(*parts) if parts else frozenset()
    if not swap_out <= target_set:
        raise ExchangeInputError("exchange set must lie inside the target")
    if len(swap_out) != len(source):
        raise ExchangeInputError("exchange set must have the source's size")
    if not matroid.is_independent(source | (target_set - swap_out)):
        raise ExchangeInputError("removing the exchange set must make room for the source")

    kept = target_set - swap_out
    contracted = ContractedMatroid(matroid, kept)
    shrunk = tuple(p - kept for p in parts)
    inner = find_rota_exchange(contracted, shrunk, swap_out)
    if inner is None:
        raise ExchangeSearchError("per-part refinement must exist but was not found")

    spare = sorted(swap_out - frozenset().union(*inner.exchanged, frozenset()))
    pieces: list[frozenset[int]] = []
    cursor = 0
    for part, piece in zip(parts, inner.exchanged):
        missing = len(part) - len(piece)
        pieces.append(piece | frozenset(spare[cursor : cursor + missing]))
        cursor += missing
    cert = ExchangeCertificate(
        matroid=matroid, parts=parts, target=target_set, exchanged=tuple(pieces)
    )
    cert.verify()
    return cert


class ConflictTraceError(RuntimeError):
    """Construction of the conflict trace hit an impossible state."""


@dataclass(frozen=True)
class OptimumEdgeReport:
    """How one optimum edge relates to the blocked-vertex chain."""

    edge: int
    original_edge: int | None
    vertices: frozenset[int]
    weight: Fraction
    own_interval: int
    first_blocked: int | None
    conflict_size: int
    cls: str
    upper_marker: Fraction
    near_marker: bool | None


@dataclass(frozen=True)
class ConflictTrace:
    """Nested blocked-vertex chain plus a per-optimum-edge classification.

    ``blocked_sets[i]`` grows by exactly the number of solution vertices
    accepted in interval i, stays inside the (dummy-padded) optimum
    vertex set, and leaves the remainder of the optimum compatible with
    the solution prefix.  Every positive-weight optimum edge is blocked
    no later than its own interval: inside it with one contact (single),
    inside it with several (double), or already in an earlier interval.
    """

    gamma: Fraction
    scheme: IntervalScheme
    extended_matroid: MatroidOracle
    optimum_vertices: frozenset[int]
    solution_vertex_sets: tuple[frozenset[int], ...]
    blocked_sets: tuple[frozenset[int], ...]
    reports: tuple[OptimumEdgeReport, ...]

    def singles_weight(self) -> Fraction:
        return sum(
            (r.weight for r in self.reports if r.cls == CLASS_SINGLE), Fraction(0)
        )


def _single_part_exchange(
    oracle: MatroidOracle,
    part: frozenset[int],
    avail: frozenset[int],
    forced: frozenset[int],
) -> frozenset[int]:
    """Pick X inside ``avail`` with |X| = |part|, ``forced`` inside X, and
    ``part`` independent together with ``avail - X``.

    Constructive: greedily extend ``part`` by elements of the available
    set outside ``forced``; whatever could not be added must be removed,
    and the set is padded from the extension to reach the exact size.
    Existence is guaranteed because the available set is independent and
    ``forced`` is part of the source.
    """
    grown = set(part)
    extension: list[int] = []
    for t in sorted(avail - forced):
        grown.add(t)
        if oracle.is_independent(grown):
            extension.append(t)
        else:
            grown.discard(t)
    leftovers = (avail - forced) - set(extension)
    pick = set(forced) | leftovers
    pad = len(part) - len(pick)
    if pad < 0:
        raise ConflictTraceError("exchange counting argument failed")
    pick.update(extension[:pad])
    pick_frozen = frozenset(pick)
    if len(pick_frozen) != len(part) or not oracle.is_independent(part | (avail - pick_frozen)):
        raise ConflictTraceError("constructed exchange set failed verification")
    return pick_frozen


def build_conflict_trace(
    instance: ParityInstance,
    trace: SolverTrace,
    optimum: Solution,
    gamma: Fraction,
) -> ConflictTrace:
    """Explain an exact optimum against a finished solver run.

    The optimum's vertex set is padded with zero-weight dummy edges
    (fresh coloop vertices, one edge of full arity at a time) until it is
    at least as large as the solution's.  Then, interval by interval, an
    exchange inside the remaining optimum vertices is carved out for the
    newly accepted solution vertices; vertices shared between solution
    and optimum are forced into their own interval's layer so shared
    edges are blocked on time.  The final classification tags every
    (padded) optimum edge by where and how hard it was blocked.
    """
    gamma = Fraction(gamma)
    if gamma < 0:
        raise ExchangeInputError("gamma must be nonnegative")
    if trace.instance_signature != instance_signature(instance):
        raise ExchangeInputError("trace belongs to a different instance")
    if trace.scheme is None:
        raise ExchangeInputError("degenerate trace has no interval structure")
    if not instance.is_feasible(optimum.edges):
        raise ExchangeInputError("claimed optimum is not feasible")
    scheme = trace.scheme
    if len(trace.records) != scheme.levels + 1:
        raise ExchangeInputError("trace does not cover all intervals")

    solution_vertex_sets = tuple(
        instance.vertices_of(r.added) for r in trace.records
    )
    solution_vertices = frozenset().union(*solution_vertex_sets)

    padded: list[tuple[int | None, frozenset[int], Fraction]] = [
        (j, instance.edges[j], instance.weights[j]) for j in sorted(optimum.edges)
    ]
    optimum_vertices = set(instance.vertices_of(optimum.edges))
    next_vertex = instance.num_vertices
    while len(optimum_vertices) < len(solution_vertices):
        dummy = frozenset(range(next_vertex, next_vertex + instance.arity))
        padded.append((None, dummy, Fraction(0)))
        optimum_vertices |= dummy
        next_vertex += instance.arity
    if next_vertex > instance.num_vertices:
        extended = with_coloops(instance.matroid, range(instance.num_vertices, next_vertex))
    else:
        extended = instance.matroid
    optimum_frozen = frozenset(optimum_vertices)

    blocked: list[frozenset[int]] = [frozenset()]
    prefix: frozenset[int] = frozenset()
    for level_verts in solution_vertex_sets:
        avail = optimum_frozen - blocked[-1]
        if not level_verts:
            blocked.append(blocked[-1])
            continue
        oracle = ContractedMatroid(extended, prefix) if prefix else extended
        forced = level_verts & avail
        layer = _single_part_exchange(oracle, level_verts, avail, forced)
        blocked.append(blocked[-1] | layer)
        prefix = prefix | level_verts

    reports: list[OptimumEdgeReport] = []
    for idx, (orig, verts, weight) in enumerate(padded):
        own = scheme.interval_of(weight)
        first = None
        conflict = 0
        for i in range(1, len(blocked)):
            hit = verts & blocked[i]
            if hit:
                first = i
                conflict = len(hit)
                break
        if first is None:
            cls = CLASS_UNBLOCKED
        elif first == own:
            cls = CLASS_SINGLE if conflict == 1 else CLASS_DOUBLE
        elif first < own:
            cls = CLASS_BLOCKED_EARLIER
        else:
            raise ConflictTraceError(
                f"optimum edge {orig} blocked after its own interval; "
                "was the trace verified locally optimal?"
            )
        marker = scheme.upper_marker(weight)
        near = None
        if cls == CLASS_BLOCKED_EARLIER:
            near = (1 + gamma) * weight >= marker
        reports.append(
            OptimumEdgeReport(
                edge=idx,
                original_edge=orig,
                vertices=verts,
                weight=weight,
                own_interval=own,
                first_blocked=first,
                conflict_size=conflict,
                cls=cls,
                upper_marker=marker,
                near_marker=near,
            )
        )

    return ConflictTrace(
        gamma=gamma,
        scheme=scheme,
        extended_matroid=extended,
        optimum_vertices=optimum_frozen,
        solution_vertex_sets=solution_vertex_sets,
        blocked_sets=tuple(blocked),
        reports=tuple(reports),
    )


def verify_conflict_trace(ct: ConflictTrace) -> list[str]:
    """Independent re-check of every conflict-trace invariant.

    Returns a list of human-readable problems; empty means the trace is
    sound.  Uses only oracle calls and the stored sets, never the
    construction internals.
    """
    problems: list[str] = []
    blocked = ct.blocked_sets
    levels = len(ct.solution_vertex_sets)
    if len(blocked) != levels + 1:
        return [f"expected {levels + 1} blocked sets, found {len(blocked)}"]

    prefix: frozenset[int] = frozenset()
    if not ct.extended_matroid.is_independent(ct.optimum_vertices):
        problems.append("padded optimum vertex set is not independent")
    for i in range(1, levels + 1):
        t_prev, t_cur = blocked[i - 1], blocked[i]
        if not t_prev <= t_cur:
            problems.append(f"blocked sets not nested at interval {i}")
        if not t_cur <= ct.optimum_vertices:
            problems.append(f"blocked set {i} leaves the optimum vertices")
        grown = len(t_cur) - len(t_prev)
        if grown != len(ct.solution_vertex_sets[i - 1]):
            problems.append(
                f"interval {i}: layer grew by {grown}, solution added "
                f"{len(ct.solution_vertex_sets[i - 1])} vertices"
            )
        prefix = prefix | ct.solution_vertex_sets[i - 1]
        if not ct.extended_matroid.is_independent(prefix | (ct.optimum_vertices - t_cur)):
            problems.append(f"interval {i}: prefix plus unblocked optimum is dependent")

    for r in ct.reports:
        expected_first = None
        expected_conflict = 0
        for i in range(1, levels + 1):
            hit = r.vertices & blocked[i]
            if hit:
                expected_first = i
                expected_conflict = len(hit)
                break
        if (expected_first, expected_conflict) != (r.first_blocked, r.conflict_size):
            problems.append(f"edge report {r.edge}: blocking data does not match the sets")
            continue
        if r.weight > 0:
            if r.first_blocked is None or r.first_blocked > r.own_interval:
                problems.append(
                    f"edge report {r.edge}: positive weight but not blocked by interval "
                    f"{r.own_interval}"
                )
        if r.first_blocked is None:
            expected_cls = CLASS_UNBLOCKED
        elif r.first_blocked == r.own_interval:
            expected_cls = CLASS_SINGLE if r.conflict_size == 1 else CLASS_DOUBLE
        elif r.first_blocked < r.own_interval:
            expected_cls = CLASS_BLOCKED_EARLIER
        else:
            expected_cls = "impossible"
        if r.cls != expected_cls:
            problems.append(f"edge report {r.edge}: class {r.cls}, expected {expected_cls}")
        if r.cls == CLASS_BLOCKED_EARLIER:
            expected_near = (1 + ct.gamma) * r.weight >= r.upper_marker
            if r.near_marker != expected_near:
                problems.append(f"edge report {r.edge}: near-marker flag wrong")
        elif r.near_marker is not None:
            problems.append(f"edge report {r.edge}: spurious near-marker flag")
        if ct.scheme.upper_marker(r.weight) != r.upper_marker:
            problems.append(f"edge report {r.edge}: stored marker mismatch")
    return problems


def estimate_near_marker_probability(
    instance: ParityInstance,
    optimum: Solution,
    epsilon: Fraction,
    gamma: Fraction,
    samples: int,
    seed: int,
    delta: Fraction = Fraction(1, 10000),
) -> dict[int, Fraction]:
    """Per-edge frequency of landing within ``gamma`` of the marker above.

    For each sampled shift, an optimum edge is counted when its weight w
    satisfies ``(1 + gamma) * w >= m`` for the smallest marker m at or
    above w.  The bound ``gamma / (epsilon * (1 + gamma))`` caps the true
    probability whenever ``gamma <= 1 / (1 - epsilon) - 1``; that range
    is enforced here.
    """
    epsilon, gamma = Fraction(epsilon), Fraction(gamma)
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if not 0 <= gamma <= 1 / (1 - epsilon) - 1:
        raise ValueError("gamma must lie in [0, 1/(1 - epsilon) - 1]")
    if samples < 1:
        raise ValueError("need at least one sample")

    base = compute_markers(instance, epsilon, delta, Fraction(0))
    positive_markers = base.markers[: base.levels + 1]  # descending, all > 0
    edge_ids = sorted(optimum.edges, key=lambda j: (instance.weights[j], j))
    weights = [instance.weights[j] for j in edge_ids]

    counts = {j: 0 for j in edge_ids}
    rng = random.Random(seed)
    one_plus_gamma = 1 + gamma
    for _ in range(samples):
        tau = epsilon * Fraction(rng.getrandbits(53), 1 << 53)
        shrink_back = 1 - tau  # markers scale linearly with the shift
        p = base.levels
        for j, w in zip(edge_ids, weights):
            scaled = w / shrink_back
            while positive_markers[p] < scaled:
                p -= 1
            if one_plus_gamma * scaled >= positive_markers[p]:
                counts[j] += 1
    return {j: Fraction(c, samples) for j, c in counts.items()}


def near_marker_bound(epsilon: Fraction, gamma: Fraction) -> Fraction:
    """Upper bound on the near-marker probability for admissible gamma."""
    epsilon, gamma = Fraction(epsilon), Fraction(gamma)
    return gamma / (epsilon * (1 + gamma))


@dataclass(frozen=True)
class K4Witness:
    """Two feasible swaps on one solution whose union is infeasible."""

    instance: ParityInstance
    base_edges: frozenset[int]
    first: SwapMove
    second: SwapMove


def k4_non_composability_witness() -> K4Witness:
    """Search the complete graph on four vertices for the witness.

    The instance puts one unit-weight singleton hyperedge on each graph
    edge, with forests as the independent sets.  The first (in a fixed
    deterministic order) pair of individually feasible swaps with
    disjoint additions and removals whose combined application creates a
    cycle is returned; its existence is asserted, not assumed.
    """
    graph_edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    matroid = GraphicMatroid(4, graph_edges)
    inst = ParityInstance(
        num_vertices=6,
        edges=tuple(frozenset([i]) for i in range(6)),
        weights=tuple(Fraction(1) for _ in range(6)),
        matroid=matroid,
        arity=1,
    )

    def feasible(ids: Iterable[int]) -> bool:
        return inst.is_feasible(frozenset(ids))

    all_ids = range(6)
    for base_size in range(3, 0, -1):
        for base in combinations(all_ids, base_size):
            base_set = frozenset(base)
            if not feasible(base_set):
                continue
            moves: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
            outside = [j for j in all_ids if j not in base_set]
            for add_size in (1, 2):
                for add in combinations(outside, add_size):
                    for rem_size in range(0, min(2, base_size) + 1):
                        for rem in combinations(sorted(base_set), rem_size):
                            if feasible((base_set - frozenset(rem)) | frozenset(add)):
                                moves.append((add, rem))
            def gain(add: tuple[int, ...], rem: tuple[int, ...]) -> Fraction:
                added = sum((inst.weights[j] for j in add), Fraction(0))
                removed = sum((inst.weights[j] for j in rem), Fraction(0))
                return added - removed

            for a, b in combinations(moves, 2):
                if set(a[0]) & set(b[0]) or set(a[1]) & set(b[1]):
                    continue
                merged = (base_set - frozenset(a[1]) - frozenset(b[1])) | frozenset(
                    a[0]
                ) | frozenset(b[0])
                if not feasible(merged):
                    return K4Witness(
                        instance=inst,
                        base_edges=base_set,
                        first=SwapMove(a[0], a[1], gain(*a)),
                        second=SwapMove(b[0], b[1], gain(*b)),
                    )
    raise ExchangeSearchError("no witness found on the complete graph; this is a bug")


def verify_k4_witness(witness: K4Witness) -> bool:
    """Oracle re-check: both swaps feasible alone, their union infeasible."""
    inst = witness.instance
    base = witness.base_edges
    if not inst.is_feasible(base):
        return False
    first_applied = (base - frozenset(witness.first.remove)) | frozenset(witness.first.add)
    second_applied = (base - frozenset(witness.second.remove)) | frozenset(witness.second.add)
    if not inst.is_feasible(first_applied) or not inst.is_feasible(second_applied):
        return False
    merged = (
        base
        - frozenset(witness.first.remove)
        - frozenset(witness.second.remove)
    ) | frozenset(witness.first.add) | frozenset(witness.second.add)
    return not inst.is_feasible(merged)
