"""Lossless file formats: instances, results, and exact rational strings.

Rationals are serialized as strings, never floats.  Weights whose
denominator divides a power of ten round-trip as plain decimal strings
("0.35"); anything else falls back to "p/q".  Both forms parse back to
the identical Fraction.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

from .instance import InstanceError, ParityInstance, RawParityInstance, make_disjoint
from .matroids import (
    FreeMatroid,
    GraphicMatroid,
    LinearMatroid,
    MatroidOracle,
    PartitionMatroid,
    UniformMatroid,
)


class FormatError(ValueError):
    """Unparseable or schema-violating input."""


def parse_fraction(text: str | int) -> Fraction:
    """Parse "3", "0.35" or "7/10" into an exact Fraction."""
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise FormatError(f"not a rational: {text!r}") from exc


def format_fraction(value: Fraction) -> str:
    """Exact string form, preferring terminating decimals.

    Decimal output is used when the denominator is of the form 2^a * 5^b,
    otherwise "p/q".  Either way parse_fraction returns the same value.
    """
    value = Fraction(value)
    den = value.denominator
    twos = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    fives = 0
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"{value.numerator}/{value.denominator}"
    if value.denominator == 1:
        return str(value.numerator)
    shift = max(twos, fives)
    scaled = value.numerator * 10**shift // value.denominator
    sign = "-" if scaled < 0 else ""
    digits = str(abs(scaled)).rjust(shift + 1, "0")
    return f"{sign}{digits[:-shift]}.{digits[-shift:]}"


def matroid_to_descriptor(oracle: MatroidOracle) -> dict[str, Any]:
    """Descriptor dict for the serializable matroid families."""
    if isinstance(oracle, UniformMatroid):
        return {"family": "uniform", "n": len(oracle.ground), "r": oracle.r}
    if isinstance(oracle, PartitionMatroid):
        return {
            "family": "partition",
            "blocks": [sorted(b) for b in oracle.blocks],
            "capacities": list(oracle.capacities),
        }
    if isinstance(oracle, GraphicMatroid):
        return {
            "family": "graphic",
            "vertices": oracle.num_graph_vertices,
            "edges": [[u, v] for u, v in oracle.graph_edges],
        }
    if isinstance(oracle, LinearMatroid):
        return {
            "family": "linear",
            "field_prime": oracle.prime,
            "columns": [list(c) for c in oracle.columns],
        }
    if isinstance(oracle, FreeMatroid):
        return {"family": "free", "n": len(oracle.ground)}
    raise FormatError(f"matroid of type {type(oracle).__name__} has no file descriptor")


def matroid_from_descriptor(desc: dict[str, Any]) -> MatroidOracle:
    try:
        family = desc["family"]
        if family == "uniform":
            return UniformMatroid(int(desc["n"]), int(desc["r"]))
        if family == "partition":
            return PartitionMatroid(
                [list(map(int, b)) for b in desc["blocks"]],
                [int(c) for c in desc["capacities"]],
            )
        if family == "graphic":
            return GraphicMatroid(
                int(desc["vertices"]), [(int(u), int(v)) for u, v in desc["edges"]]
            )
        if family == "linear":
            return LinearMatroid(
                int(desc["field_prime"]), [list(map(int, c)) for c in desc["columns"]]
            )
        if family == "free":
            return FreeMatroid(int(desc["n"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad matroid descriptor: {exc}") from exc
    raise FormatError(f"unknown matroid family {family!r}")


@dataclass
class InstanceDoc:
    """The on-disk instance model.

    Stores the raw (possibly overlapping) hypergraph plus a serializable
    matroid descriptor.  Normalization to the disjoint form happens on
    load, in memory; files always carry the raw shape.
    """

    arity: int
    num_vertices: int
    edge_verts: list[list[int]]
    edge_weights: list[Fraction]
    matroid_desc: dict[str, Any]
    name: str = field(default="instance")

    def to_json_obj(self) -> dict[str, Any]:
        return {
            "k": self.arity,
            "vertices": self.num_vertices,
            "edges": [
                {"verts": sorted(v), "w": format_fraction(w)}
                for v, w in zip(self.edge_verts, self.edge_weights)
            ],
            "matroid": self.matroid_desc,
            "name": self.name,
        }

    @classmethod
    def from_json_obj(cls, obj: dict[str, Any]) -> "InstanceDoc":
        try:
            edges = obj["edges"]
            doc = cls(
                arity=int(obj["k"]),
                num_vertices=int(obj["vertices"]),
                edge_verts=[[int(v) for v in e["verts"]] for e in edges],
                edge_weights=[parse_fraction(e["w"]) for e in edges],
                matroid_desc=dict(obj["matroid"]),
                name=str(obj.get("name", "instance")),
            )
        except (KeyError, TypeError) as exc:
            raise FormatError(f"bad instance document: {exc}") from exc
        return doc

    def to_raw(self) -> RawParityInstance:
        return RawParityInstance(
            num_vertices=self.num_vertices,
            edges=tuple(frozenset(v) for v in self.edge_verts),
            weights=tuple(self.edge_weights),
            matroid=matroid_from_descriptor(self.matroid_desc),
            arity=self.arity,
        )

    def normalize(self) -> ParityInstance:
        return make_disjoint(self.to_raw())


def dumps_canonical(obj: Any) -> str:
    """Canonical JSON text: sorted keys, fixed separators, trailing newline."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def save_instance(doc: InstanceDoc, path: str | Path) -> None:
    Path(path).write_text(dumps_canonical(doc.to_json_obj()), encoding="utf-8")


def load_instance_doc(path: str | Path) -> InstanceDoc:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"invalid JSON in {path}: {exc}") from exc
    return InstanceDoc.from_json_obj(obj)


def load_instance(path: str | Path) -> ParityInstance:
    """Load and normalize; the instance a solver should consume."""
    try:
        return load_instance_doc(path).normalize()
    except InstanceError as exc:
        raise FormatError(f"invalid instance in {path}: {exc}") from exc


def instance_signature(instance: ParityInstance) -> str:
    """Short content hash used to detect trace/instance mismatches."""
    payload = {
        "k": instance.arity,
        "vertices": instance.num_vertices,
        "edges": [sorted(e) for e in instance.edges],
        "weights": [format_fraction(w) for w in instance.weights],
        "matroid": type(instance.matroid).__name__,
    }
    digest = hashlib.sha256(dumps_canonical(payload).encode("utf-8")).hexdigest()
    return digest[:16]


@dataclass
class ResultRecord:
    """One solver (or exact) run, serialized as a JSON line.

    Wall time is measured but excluded from serialization by default so
    identical runs produce byte-identical output files; pass
    ``with_timing=True`` to include it.
    """

    instance: str
    algo: str
    seed: int | None
    tau: Fraction | None
    weight: Fraction
    optimum: Fraction | None
    ratio: Fraction | None
    oracle_calls: int | None
    swaps: int | None
    status: str = "ok"
    wall_time_s: float | None = None

    def to_json_obj(self, with_timing: bool = False) -> dict[str, Any]:
        obj: dict[str, Any] = {
            "instance": self.instance,
            "algo": self.algo,
            "seed": self.seed,
            "tau": None if self.tau is None else format_fraction(self.tau),
            "weight": format_fraction(self.weight),
            "optimum": None if self.optimum is None else format_fraction(self.optimum),
            "ratio": None if self.ratio is None else format_fraction(self.ratio),
            "oracle_calls": self.oracle_calls,
            "swaps": self.swaps,
            "status": self.status,
        }
        if with_timing:
            obj["wall_time_s"] = self.wall_time_s
        return obj


def write_jsonl(records: list[dict[str, Any]], path: str | Path) -> None:
    text = "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in records)
    Path(path).write_text(text, encoding="utf-8")
