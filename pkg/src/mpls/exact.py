"""Exact reference computations for small instances.

Two independent brute-force routes (flat subset enumeration and weight
branch-and-bound) compute the same canonical optimum: maximum weight,
ties broken toward the lexicographically smallest sorted edge-id tuple.
Size limits guard the exponential work; the environment variable
``MPLS_EXACT_LIMIT`` can raise or lower the default cap.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from .instance import ParityInstance, RawParityInstance, Solution
from .matroids import MatroidOracle
from .serialization import instance_signature
from .solver import SolverTrace

SUBSET_ENUM = "subset-enum"
BRANCH_AND_BOUND = "branch-and-bound"

DEFAULT_LIMITS = {SUBSET_ENUM: 14, BRANCH_AND_BOUND: 20}
EXACT_LIMIT_ENV = "MPLS_EXACT_LIMIT"


class SizeLimitExceeded(ValueError):
    """Instance too large for exhaustive search; carries the size report."""

    def __init__(self, edges: int, limit: int, method: str):
        super().__init__(f"{edges} edges exceeds the {method} limit of {limit}")
        self.edges = edges
        self.limit = limit
        self.method = method


class TraceMismatch(ValueError):
    """The trace does not belong to the given instance."""


@dataclass(frozen=True)
class ExactResult:
    optimum: Solution
    explored: int
    method: str


def resolve_limit(method: str, limit: int | None = None) -> int:
    """Explicit limit wins; otherwise the environment override; else default."""
    if limit is not None:
        return limit
    env = os.environ.get(EXACT_LIMIT_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ValueError(f"{EXACT_LIMIT_ENV} must be an integer, got {env!r}") from exc
    return DEFAULT_LIMITS[method]


def _prepare(instance: ParityInstance | RawParityInstance):
    edges = instance.edges
    weights = instance.weights
    matroid = instance.matroid
    return edges, weights, matroid


def _enumerate_optimum(instance) -> tuple[Solution, int]:
    """Flat scan over all edge subsets; deliberately simple."""
    edges, weights, matroid = _prepare(instance)
    m = len(edges)
    best_key: tuple[int, ...] | None = None
    best_weight = Fraction(0)
    explored = 0
    for size in range(m + 1):
        for combo in combinations(range(m), size):
            explored += 1
            used: set[int] = set()
            ok = True
            for j in combo:
                e = edges[j]
                if used & e:
                    ok = False
                    break
                used |= e
            if not ok or not matroid.is_independent(used):
                continue
            w = sum((weights[j] for j in combo), Fraction(0))
            if w > best_weight or (w == best_weight and (best_key is None or combo < best_key)):
                best_weight = w
                best_key = combo
    return Solution(frozenset(best_key or ()), best_weight), explored


def _branch_and_bound_optimum(instance) -> tuple[Solution, int]:
    """Depth-first include/exclude with an admissible remaining-weight bound.

    Pruning only happens on a strict bound violation so the canonical
    tie-break (lexicographically smallest edge set among maximum weight)
    is preserved exactly.
    """
    edges, weights, matroid = _prepare(instance)
    m = len(edges)
    suffix = [Fraction(0)] * (m + 1)
    for j in range(m - 1, -1, -1):
        suffix[j] = suffix[j + 1] + weights[j]

    best_weight = Fraction(0)
    best_key: tuple[int, ...] = ()
    explored = 0

    def visit(j: int, chosen: list[int], used: frozenset[int], weight: Fraction) -> None:
        nonlocal best_weight, best_key, explored
        explored += 1
        key = tuple(chosen)
        if weight > best_weight or (weight == best_weight and key < best_key):
            best_weight = weight
            best_key = key
        if j == m or weight + suffix[j] < best_weight:
            return
        e = edges[j]
        if not (used & e):
            grown = used | e
            if matroid.is_independent(grown):
                chosen.append(j)
                visit(j + 1, chosen, grown, weight + weights[j])
                chosen.pop()
        visit(j + 1, chosen, used, weight)

    visit(0, [], frozenset(), Fraction(0))
    return Solution(frozenset(best_key), best_weight), explored


def brute_force_optimum(
    instance: ParityInstance | RawParityInstance,
    limit: int | None = None,
    method: str = BRANCH_AND_BOUND,
) -> ExactResult:
    """Canonical exact optimum of a (possibly raw) parity instance.

    Feasibility means pairwise vertex-disjoint edges with an independent
    vertex union; for normalized instances the disjointness test is
    vacuous but kept, so raw instances are handled by the same code.
    """
    if method not in DEFAULT_LIMITS:
        raise ValueError(f"unknown exact method {method!r}")
    cap = resolve_limit(method, limit)
    m = len(instance.edges)
    if m > cap:
        raise SizeLimitExceeded(m, cap, method)
    if method == SUBSET_ENUM:
        optimum, explored = _enumerate_optimum(instance)
    else:
        optimum, explored = _branch_and_bound_optimum(instance)
    return ExactResult(optimum=optimum, explored=explored, method=method)


def brute_force_intersection(
    matroids: Sequence[MatroidOracle],
    weights: Sequence[Fraction],
    limit: int = 20,
) -> Solution:
    """Max-weight common independent set of several matroids, by enumeration.

    Elements play the role of edge ids; the same canonical tie-break as
    the parity brute force applies.
    """
    n = len(weights)
    if n > limit:
        raise SizeLimitExceeded(n, limit, "intersection-enum")
    best_key: tuple[int, ...] | None = None
    best_weight = Fraction(0)
    for size in range(n + 1):
        for combo in combinations(range(n), size):
            s = frozenset(combo)
            if all(m.is_independent(s) for m in matroids):
                w = sum((Fraction(weights[j]) for j in combo), Fraction(0))
                if w > best_weight or (
                    w == best_weight and (best_key is None or combo < best_key)
                ):
                    best_weight = w
                    best_key = combo
    return Solution(frozenset(best_key or ()), best_weight)


def verify_local_optimum(instance: ParityInstance, trace: SolverTrace) -> bool:
    """Re-check that no improving swap existed at any interval's close.

    Replays the per-interval prefix solutions recorded in the trace and
    enumerates every candidate swap from scratch, with none of the
    solver's pruning, using fraction arithmetic directly.  Returns False
    as soon as one improving swap is found.
    """
    if trace.instance_signature != instance_signature(instance):
        raise TraceMismatch("trace was produced for a different instance")
    if trace.scheme is None:
        return True  # degenerate run: nothing was searched, nothing to refute

    scheme = trace.scheme
    weights = instance.weights
    prefix: set[int] = set()
    for record in trace.records:
        prefix |= set(record.added)
        interval = scheme.interval(record.index)
        inside = [j for j in range(instance.num_edges) if interval.contains(weights[j])]
        outside_sol = [j for j in inside if j not in prefix]
        in_sol = [j for j in inside if j in prefix]
        base = instance.vertices_of(prefix)
        for add_size in (1, 2):
            for add in combinations(outside_sol, add_size):
                add_w = sum((weights[j] for j in add), Fraction(0))
                add_verts = instance.vertices_of(add)
                if len(add_verts) < sum(len(instance.edges[j]) for j in add):
                    continue  # overlapping additions can never be applied
                for rem_size in range(0, min(2 * instance.arity, len(in_sol)) + 1):
                    for rem in combinations(in_sol, rem_size):
                        rem_w = sum((weights[j] for j in rem), Fraction(0))
                        if add_w <= rem_w:
                            continue
                        target = (base - instance.vertices_of(rem)) | add_verts
                        if instance.matroid.is_independent(target):
                            return False
    return True


def verify_tail_bound(
    instance: ParityInstance,
    scheme,
    optimum: Solution,
) -> bool:
    """Check the discarded-tail inequality for an exact optimum.

    Optimum edges lighter than the last positive marker must carry at
    most a ``delta`` fraction of the optimum weight.  Exact arithmetic,
    no tolerance.
    """
    last_marker = scheme.markers[scheme.levels]
    tail = sum(
        (instance.weights[j] for j in optimum.edges if instance.weights[j] < last_marker),
        Fraction(0),
    )
    return tail <= scheme.delta * optimum.weight
