"""Sliding local search over randomized geometric weight intervals.

The solver draws one random shift, builds a geometric ladder of weight
markers from the heaviest individually feasible edge, and processes the
induced weight intervals from heavy to light.  Inside an interval it
repeatedly applies improving swaps: add at most two non-solution edges of
the interval, remove at most ``2 * arity`` solution edges of the same
interval, subject to feasibility and a strict weight increase.  Edges
accepted in earlier (heavier) intervals are never removed again.

All weight arithmetic is exact.  Edge weights are compared through
integer numerators over a common denominator; markers and the random
shift are exact rationals, so interval membership and improvement tests
never see floating point.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Any, Callable, Iterable, Sequence

from .instance import ParityInstance, Solution
from .serialization import format_fraction, instance_signature, parse_fraction

FIRST_LEX = "first-lex"
BEST_GAIN = "best-gain"
SWAP_RULES = (FIRST_LEX, BEST_GAIN)


class DegenerateInstanceError(ValueError):
    """No individually feasible edge with positive weight exists."""


class LocalSearchError(RuntimeError):
    """An applied swap broke feasibility; indicates an internal bug."""


@dataclass(frozen=True)
class WeightInterval:
    """Half-open weight range (lower, upper], optionally closed at the bottom."""

    upper: Fraction
    lower: Fraction
    closed_lower: bool = False

    def contains(self, w: Fraction) -> bool:
        if w > self.upper:
            return False
        if w > self.lower:
            return True
        return self.closed_lower and w == self.lower


@dataclass(frozen=True)
class IntervalScheme:
    """Marker ladder for one solver run.

    ``markers[j]`` is the j-th marker; ``markers[0]`` sits above the
    heaviest feasible weight, each later marker shrinks by the factor
    ``1 - epsilon``, and ``markers[levels + 1]`` is the zero sentinel.
    Interval j covers ``(markers[j], markers[j-1]]`` for j up to
    ``levels``; the final interval ``levels + 1`` is closed at zero.
    A weight equal to a marker belongs to the interval below that marker.
    """

    max_feasible_weight: Fraction
    epsilon: Fraction
    delta: Fraction
    tau: Fraction
    levels: int
    markers: tuple[Fraction, ...]

    def interval(self, j: int) -> WeightInterval:
        if not 1 <= j <= self.levels + 1:
            raise ValueError(f"interval index {j} out of range 1..{self.levels + 1}")
        return WeightInterval(
            upper=self.markers[j - 1],
            lower=self.markers[j],
            closed_lower=(j == self.levels + 1),
        )

    def interval_of(self, w: Fraction) -> int:
        """Index of the interval containing weight ``w``."""
        w = Fraction(w)
        if w < 0 or w > self.markers[0]:
            raise ValueError(f"weight {w} outside the marker range")
        for j in range(1, self.levels + 1):
            if w > self.markers[j]:
                return j
        return self.levels + 1

    def upper_marker(self, w: Fraction) -> Fraction:
        """Smallest positive marker at or above ``w``."""
        w = Fraction(w)
        for j in range(self.levels, -1, -1):
            if self.markers[j] >= w:
                return self.markers[j]
        raise ValueError(f"weight {w} above the top marker")


def compute_markers(
    instance: ParityInstance,
    epsilon: Fraction,
    delta: Fraction,
    tau: Fraction,
) -> IntervalScheme:
    """Build the marker ladder for this instance and shift.

    The ladder starts from the heaviest weight among edges that are
    feasible on their own.  The number of levels is the smallest that
    pushes the residual geometric tail below ``delta`` relative weight;
    it is found by exact rational iteration, not floating-point logs.

    Raises DegenerateInstanceError when no edge is feasible alone or the
    best feasible weight is zero.
    """
    epsilon, delta, tau = Fraction(epsilon), Fraction(delta), Fraction(tau)
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if not 0 <= tau < epsilon:
        raise ValueError("the shift must lie in [0, epsilon)")

    heaviest = Fraction(0)
    any_feasible = False
    for j, ok in enumerate(instance.feasible_alone):
        if ok:
            any_feasible = True
            if instance.weights[j] > heaviest:
                heaviest = instance.weights[j]
    if not any_feasible:
        raise DegenerateInstanceError("no edge is feasible on its own")
    if heaviest == 0:
        raise DegenerateInstanceError("all feasible edges have zero weight")

    shrink = 1 - epsilon
    target = delta / len(instance.edges)
    power = Fraction(1)
    steps = 0
    while power > target:
        power *= shrink
        steps += 1
    levels = steps + 1

    first = heaviest * (1 - tau)
    markers = [first / shrink, first]
    for _ in range(levels - 1):
        markers.append(markers[-1] * shrink)
    markers.append(Fraction(0))
    return IntervalScheme(
        max_feasible_weight=heaviest,
        epsilon=epsilon,
        delta=delta,
        tau=tau,
        levels=levels,
        markers=tuple(markers),
    )


@dataclass(frozen=True)
class SwapMove:
    """One applied (or candidate) swap: add ``add``, remove ``remove``."""

    add: tuple[int, ...]
    remove: tuple[int, ...]
    gain: Fraction


@dataclass(frozen=True)
class IntervalRecord:
    index: int
    upper: Fraction
    lower: Fraction
    added: tuple[int, ...]
    swaps: tuple[SwapMove, ...]
    oracle_calls: int


@dataclass(frozen=True)
class SolverTrace:
    """Everything needed to replay and audit one sliding run.

    ``oracle_calls`` counts independence queries issued by the search
    itself (swap tests and post-swap feasibility asserts); instance-level
    cached lookups such as per-edge feasibility are excluded so the count
    is identical no matter how often the instance was used before.
    """

    instance_signature: str
    epsilon: Fraction
    delta: Fraction
    seed: int
    tau: Fraction | None
    rule: str
    scheme: IntervalScheme | None
    records: tuple[IntervalRecord, ...]
    final_edges: tuple[int, ...]
    final_weight: Fraction
    oracle_calls: int


def _swap_search(
    instance: ParityInstance,
    sol_set: set[int],
    sol_verts: frozenset[int],
    interval_ids: Sequence[int],
    rule: str,
    indep: Callable[[frozenset[int]], bool],
) -> tuple[tuple[int, ...], tuple[int, ...], int] | None:
    """Find an improving swap inside one interval, or None.

    Candidate additions are interval edges outside the solution, at most
    two at a time; removals come only from interval edges currently in
    the solution, at most ``2 * arity`` of them.  ``first-lex`` accepts
    the first improving pair in enumeration order (additions by size then
    id order, removals by size then id order); ``best-gain`` scans
    everything and keeps the maximum gain, breaking ties toward the
    lexicographically smallest move.

    A candidate addition is pruned outright if it stays infeasible even
    after removing every interval edge of the solution, which is the
    weakest requirement any removal choice could meet.
    """
    wn = instance.weight_numerators
    edges = instance.edges
    cand = [j for j in interval_ids if j not in sol_set]
    pool = [j for j in interval_ids if j in sol_set]
    if not cand:
        return None

    stripped = sol_verts
    for j in pool:
        stripped = stripped - edges[j]
    max_remove = min(2 * instance.arity, len(pool))

    removal_sizes = range(0, max_remove + 1)
    best: tuple[int, tuple[int, ...], tuple[int, ...]] | None = None

    for add_size in (1, 2):
        for add in combinations(cand, add_size):
            gain_add = sum(wn[j] for j in add)
            if gain_add == 0:
                continue  # cannot strictly improve
            add_verts = frozenset().union(*(edges[j] for j in add))
            if pool and not indep(stripped | add_verts):
                continue
            for rem_size in removal_sizes:
                for rem in combinations(pool, rem_size):
                    loss = sum(wn[j] for j in rem)
                    if loss >= gain_add:
                        continue
                    if best is not None and rule == BEST_GAIN:
                        move_key = (-(gain_add - loss), len(add), add, len(rem), rem)
                        best_key = (-best[0], len(best[1]), best[1], len(best[2]), best[2])
                        if move_key >= best_key:
                            continue
                    removed_verts = frozenset().union(*(edges[j] for j in rem)) if rem else frozenset()
                    if not indep((sol_verts - removed_verts) | add_verts):
                        continue
                    if rule == FIRST_LEX:
                        return add, rem, gain_add - loss
                    best = (gain_add - loss, add, rem)
    if best is None:
        return None
    return best[1], best[2], best[0]


def find_improving_swap(
    instance: ParityInstance,
    solution_edges: Iterable[int],
    interval: WeightInterval,
    rule: str = FIRST_LEX,
) -> SwapMove | None:
    """Public single-shot swap search for a feasible solution and interval."""
    if rule not in SWAP_RULES:
        raise ValueError(f"unknown swap rule {rule!r}")
    sol = set(solution_edges)
    if not instance.is_feasible(sol):
        raise ValueError("the starting solution is not feasible")
    ids = [
        j
        for j in range(instance.num_edges)
        if instance.feasible_alone[j] and interval.contains(instance.weights[j])
    ]
    sol_verts = instance.vertices_of(sol)
    found = _swap_search(
        instance, sol, sol_verts, ids, rule, lambda vs: instance.matroid.is_independent(vs)
    )
    if found is None:
        return None
    add, rem, gain_num = found
    return SwapMove(add=add, remove=rem, gain=Fraction(gain_num, instance.weight_denominator))


def _run_interval(
    instance: ParityInstance,
    sol_set: set[int],
    sol_verts: frozenset[int],
    interval_ids: Sequence[int],
    rule: str,
    indep: Callable[[frozenset[int]], bool],
) -> tuple[list[SwapMove], frozenset[int]]:
    """Apply improving swaps inside one interval until none remain."""
    edges = instance.edges
    den = instance.weight_denominator
    swaps: list[SwapMove] = []
    while True:
        found = _swap_search(instance, sol_set, sol_verts, interval_ids, rule, indep)
        if found is None:
            return swaps, sol_verts
        add, rem, gain_num = found
        for j in rem:
            sol_set.discard(j)
            sol_verts = sol_verts - edges[j]
        for j in add:
            sol_set.add(j)
            sol_verts = sol_verts | edges[j]
        if not indep(sol_verts):
            raise LocalSearchError(f"swap add={add} remove={rem} broke feasibility")
        swaps.append(SwapMove(add=add, remove=rem, gain=Fraction(gain_num, den)))


def interval_local_search(
    instance: ParityInstance,
    solution_edges: Iterable[int],
    interval: WeightInterval,
    rule: str = FIRST_LEX,
) -> Solution:
    """Exhaust improving swaps for one interval starting from a feasible set."""
    if rule not in SWAP_RULES:
        raise ValueError(f"unknown swap rule {rule!r}")
    sol = set(solution_edges)
    if not instance.is_feasible(sol):
        raise ValueError("the starting solution is not feasible")
    ids = [
        j
        for j in range(instance.num_edges)
        if instance.feasible_alone[j] and interval.contains(instance.weights[j])
    ]
    verts = instance.vertices_of(sol)
    _run_interval(
        instance, sol, verts, ids, rule, lambda vs: instance.matroid.is_independent(vs)
    )
    return instance.solution(sol)


def _draw_shift(epsilon: Fraction, seed: int) -> Fraction:
    """Shift uniform on [0, epsilon) at 53-bit resolution, as an exact rational."""
    rng = random.Random(seed)
    return epsilon * Fraction(rng.getrandbits(53), 1 << 53)


def sliding_local_search(
    instance: ParityInstance,
    epsilon: Fraction,
    delta: Fraction,
    seed: int,
    rule: str = FIRST_LEX,
) -> tuple[Solution, SolverTrace]:
    """Run the full sliding pass and return the solution plus its trace.

    Requires ``epsilon`` in (0, 1/2): beyond that the interval ladder is
    still well defined but the approximation argument is not, so it is
    rejected here rather than silently accepted.
    """
    epsilon, delta = Fraction(epsilon), Fraction(delta)
    if not 0 < epsilon < Fraction(1, 2):
        raise ValueError("epsilon must lie in (0, 1/2)")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if rule not in SWAP_RULES:
        raise ValueError(f"unknown swap rule {rule!r}")

    signature = instance_signature(instance)
    tau = _draw_shift(epsilon, seed)
    try:
        scheme = compute_markers(instance, epsilon, delta, tau)
    except DegenerateInstanceError:
        empty = instance.solution(())
        trace = SolverTrace(
            instance_signature=signature,
            epsilon=epsilon,
            delta=delta,
            seed=seed,
            tau=tau,
            rule=rule,
            scheme=None,
            records=(),
            final_edges=(),
            final_weight=empty.weight,
            oracle_calls=0,
        )
        return empty, trace

    # Distribute candidate edges over intervals with one merged sweep.
    by_weight = sorted(
        (j for j in range(instance.num_edges) if instance.feasible_alone[j]),
        key=lambda j: (-instance.weight_numerators[j], j),
    )
    interval_ids: list[list[int]] = [[] for _ in range(scheme.levels + 2)]
    level = 1
    for j in by_weight:
        w = instance.weights[j]
        while level <= scheme.levels and w <= scheme.markers[level]:
            level += 1
        interval_ids[level].append(j)
    for ids in interval_ids:
        ids.sort()

    counter = [0]
    matroid = instance.matroid

    def indep(vs: frozenset[int]) -> bool:
        counter[0] += 1
        return matroid.is_independent(vs)

    sol_set: set[int] = set()
    sol_verts: frozenset[int] = frozenset()
    records: list[IntervalRecord] = []
    for j in range(1, scheme.levels + 2):
        calls_before = counter[0]
        swaps, sol_verts = _run_interval(
            instance, sol_set, sol_verts, interval_ids[j], rule, indep
        )
        records.append(
            IntervalRecord(
                index=j,
                upper=scheme.markers[j - 1],
                lower=scheme.markers[j],
                added=tuple(sorted(sol_set.intersection(interval_ids[j]))),
                swaps=tuple(swaps),
                oracle_calls=counter[0] - calls_before,
            )
        )

    solution = instance.solution(sol_set)
    trace = SolverTrace(
        instance_signature=signature,
        epsilon=epsilon,
        delta=delta,
        seed=seed,
        tau=tau,
        rule=rule,
        scheme=scheme,
        records=tuple(records),
        final_edges=tuple(sorted(sol_set)),
        final_weight=solution.weight,
        oracle_calls=counter[0],
    )
    return solution, trace


def greedy(instance: ParityInstance) -> Solution:
    """Add edges by decreasing weight (ties by id) whenever feasible."""
    order = sorted(range(instance.num_edges), key=lambda j: (-instance.weight_numerators[j], j))
    sol: set[int] = set()
    verts: frozenset[int] = frozenset()
    for j in order:
        trial = verts | instance.edges[j]
        if instance.matroid.is_independent(trial):
            sol.add(j)
            verts = trial
    return instance.solution(sol)


def scale_weights(instance: ParityInstance, epsilon_scale: Fraction) -> ParityInstance:
    """Round weights down to integer multiples of a grid step.

    The multiplier is ``|E| / (epsilon_scale * W)`` with W the heaviest
    individually feasible weight, so every scaled weight is an integer at
    most ``|E| / epsilon_scale``.  Improving swaps on the scaled instance
    then raise an integer total, bounding the number of applied swaps by
    ``|E|^2 / epsilon_scale``, at an approximation loss of at most the
    factor ``1 - epsilon_scale``.  Instances with no positive feasible
    weight are returned unchanged.
    """
    eps = Fraction(epsilon_scale)
    if not 0 < eps < 1:
        raise ValueError("epsilon_scale must lie in (0, 1)")
    heaviest = Fraction(0)
    for j, ok in enumerate(instance.feasible_alone):
        if ok and instance.weights[j] > heaviest:
            heaviest = instance.weights[j]
    if heaviest == 0:
        return instance
    multiplier = Fraction(instance.num_edges) / (eps * heaviest)
    scaled = tuple(
        Fraction((multiplier * w).numerator // (multiplier * w).denominator)
        for w in instance.weights
    )
    return ParityInstance(
        num_vertices=instance.num_vertices,
        edges=instance.edges,
        weights=scaled,
        matroid=instance.matroid,
        arity=instance.arity,
    )


def best_of_runs(
    instance: ParityInstance,
    epsilon: Fraction,
    delta: Fraction,
    runs: int,
    seed: int,
    rule: str = FIRST_LEX,
    max_workers: int | None = None,
) -> Solution:
    """Best solution over independent sliding runs with derived seeds.

    Seeds are derived deterministically from ``seed``; runs may execute
    concurrently.  Ties in the final weight resolve to the earliest run,
    so the result does not depend on scheduling.
    """
    if runs < 1:
        raise ValueError("need at least one run")
    derive = random.Random(seed)
    seeds = [derive.getrandbits(63) for _ in range(runs)]

    def one(s: int) -> Solution:
        return sliding_local_search(instance, epsilon, delta, s, rule)[0]

    if runs == 1:
        results = [one(seeds[0])]
    else:
        workers = max_workers or min(runs, 8)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, seeds))

    best = results[0]
    for sol in results[1:]:
        if sol.weight > best.weight:
            best = sol
    return best


def _swap_to_obj(move: SwapMove) -> dict[str, Any]:
    return {
        "add": list(move.add),
        "remove": list(move.remove),
        "gain": format_fraction(move.gain),
    }


def _swap_from_obj(obj: dict[str, Any]) -> SwapMove:
    return SwapMove(
        add=tuple(obj["add"]), remove=tuple(obj["remove"]), gain=parse_fraction(obj["gain"])
    )


def trace_to_json_obj(trace: SolverTrace) -> dict[str, Any]:
    scheme = trace.scheme
    return {
        "instance_signature": trace.instance_signature,
        "epsilon": format_fraction(trace.epsilon),
        "delta": format_fraction(trace.delta),
        "seed": trace.seed,
        "tau": None if trace.tau is None else format_fraction(trace.tau),
        "rule": trace.rule,
        "scheme": None
        if scheme is None
        else {
            "max_feasible_weight": format_fraction(scheme.max_feasible_weight),
            "levels": scheme.levels,
            "markers": [format_fraction(m) for m in scheme.markers],
        },
        "records": [
            {
                "index": r.index,
                "upper": format_fraction(r.upper),
                "lower": format_fraction(r.lower),
                "added": list(r.added),
                "swaps": [_swap_to_obj(s) for s in r.swaps],
                "oracle_calls": r.oracle_calls,
            }
            for r in trace.records
        ],
        "final_edges": list(trace.final_edges),
        "final_weight": format_fraction(trace.final_weight),
        "oracle_calls": trace.oracle_calls,
    }


def trace_from_json_obj(obj: dict[str, Any]) -> SolverTrace:
    epsilon = parse_fraction(obj["epsilon"])
    delta = parse_fraction(obj["delta"])
    tau = None if obj["tau"] is None else parse_fraction(obj["tau"])
    scheme_obj = obj["scheme"]
    scheme = None
    if scheme_obj is not None:
        scheme = IntervalScheme(
            max_feasible_weight=parse_fraction(scheme_obj["max_feasible_weight"]),
            epsilon=epsilon,
            delta=delta,
            tau=tau if tau is not None else Fraction(0),
            levels=int(scheme_obj["levels"]),
            markers=tuple(parse_fraction(m) for m in scheme_obj["markers"]),
        )
    return SolverTrace(
        instance_signature=obj["instance_signature"],
        epsilon=epsilon,
        delta=delta,
        seed=obj["seed"],
        tau=tau,
        rule=obj["rule"],
        scheme=scheme,
        records=tuple(
            IntervalRecord(
                index=r["index"],
                upper=parse_fraction(r["upper"]),
                lower=parse_fraction(r["lower"]),
                added=tuple(r["added"]),
                swaps=tuple(_swap_from_obj(s) for s in r["swaps"]),
                oracle_calls=r["oracle_calls"],
            )
            for r in obj["records"]
        ),
        final_edges=tuple(obj["final_edges"]),
        final_weight=parse_fraction(obj["final_weight"]),
        oracle_calls=obj["oracle_calls"],
    )
