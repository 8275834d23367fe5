"""Readers and writers for the JSON and TSV file formats."""
from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

from .covers import BaseGraph, Edge, VoltageGraph
from .groups import PermGroup, Permutation, Subgroup
from .magnetic import ConnectionData


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_json(path, payload) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ------------------------------------------------------------------ groups


def group_to_dict(group: PermGroup, parent: str | None = None) -> dict:
    out = {"name": group.name, "degree": group.degree, "generators": [list(g.images) for g in group.generators]}
    if parent is not None:
        out["parent"] = parent
    return out


def _perms(doc: dict) -> tuple[int, list[Permutation]]:
    degree = int(doc["degree"])
    gens = [Permutation(g) for g in doc.get("generators", [])]
    for g in gens:
        if g.degree != degree:
            raise ValueError(f"generator of length {g.degree} in a degree-{degree} group")
    return degree, gens


def load_group(path) -> PermGroup:
    doc = read_json(path)
    degree, gens = _perms(doc)
    return PermGroup(degree, gens, name=doc.get("name", Path(path).stem))


def load_subgroup(path, parent: PermGroup) -> Subgroup:
    doc = read_json(path)
    degree, gens = _perms(doc)
    if degree != parent.degree:
        raise ValueError(f"degree {degree} does not match parent degree {parent.degree}")
    return Subgroup(parent, gens, name=doc.get("name", Path(path).stem))


# ------------------------------------------------------------------ graphs


def base_graph_from_dict(doc: dict) -> BaseGraph:
    edges = [Edge(int(e["id"]), int(e["from"]), int(e["to"])) for e in doc["edges"]]
    return BaseGraph(int(doc["vertices"]), edges)


def load_base_graph(path) -> BaseGraph:
    return base_graph_from_dict(read_json(path))


def load_voltage_graph(path, group: PermGroup) -> VoltageGraph:
    doc = read_json(path)
    base = base_graph_from_dict(doc)
    voltage = {int(e["id"]): Permutation(e["voltage"]) for e in doc["edges"]}
    return VoltageGraph(base, group, voltage)


def voltage_graph_to_dict(vg: VoltageGraph, group_file: str) -> dict:
    return {
        "vertices": vg.base.vertex_count,
        "edges": [
            {"id": e.id, "from": e.tail, "to": e.head, "voltage": list(vg.voltage[e.id].images)}
            for e in vg.base.edges
        ],
        "group": group_file,
    }


def graph_to_dict(graph) -> dict:
    out = {"vertices": graph.vertex_count, "edges": [{"id": e.id, "from": e.tail, "to": e.head} for e in graph.edges]}
    if hasattr(graph, "parent"):
        for d, p, c in zip(out["edges"], graph.parent, graph.tail_coset):
            d["parent"] = p
            d["coset"] = c
    return out


# ------------------------------------------------------- connections, fields


def connection_to_dict(conn: ConnectionData, graph_id: str) -> dict:
    return {
        "graph": graph_id,
        "phases": [
            {"edge": e, "turn": {"num": p.numerator, "den": p.denominator}}
            for e, p in sorted(conn.phases.items())
        ],
    }


def connection_from_dict(doc: dict) -> ConnectionData:
    phases = {}
    for item in doc["phases"]:
        turn = item["turn"]
        den = int(turn["den"])
        if den <= 0:
            raise ValueError("phase denominators must be positive")
        phases[int(item["edge"])] = Fraction(int(turn["num"]), den)
    return ConnectionData(phases)


def load_connection(path) -> ConnectionData:
    return connection_from_dict(read_json(path))


def load_field(path, n: int, key: str = "q") -> list[float]:
    """Vertex field file ``{"values": [{"vertex": v, key: x}]}`` covering ``0..n-1``."""
    doc = read_json(path)
    out: list[float | None] = [None] * n
    for item in doc["values"]:
        v = int(item["vertex"])
        if not 0 <= v < n:
            raise ValueError(f"vertex {v} out of range 0..{n - 1}")
        out[v] = float(item[key])
    missing = [v for v, x in enumerate(out) if x is None]
    if missing:
        raise ValueError(f"field misses vertices {missing}")
    return out


def field_to_dict(values: Sequence[float], key: str = "q") -> dict:
    return {"values": [{"vertex": v, key: float(x)} for v, x in enumerate(values)]}


def write_spectra_tsv(path, rows: Iterable[tuple[int, Sequence[float]]]) -> None:
    """One line per eigenvalue: ``k``, index, value (12 significant digits)."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(spectra_tsv_text(rows), encoding="utf-8")


def spectra_tsv_text(rows: Iterable[tuple[int, Sequence[float]]]) -> str:
    lines = ["k\tindex\tvalue"]
    for k, values in rows:
        lines.extend(f"{k}\t{i}\t{float(x):.12g}" for i, x in enumerate(values))
    return "\n".join(lines) + "\n"
