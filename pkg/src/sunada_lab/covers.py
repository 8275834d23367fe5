"""Voltage graphs, derived covers and their quotients by subgroups of the deck group."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import SubgroupNotContained, ValidationFailed
from .groups import CosetTable, PermGroup, Permutation, coset_action, trivial_subgroup


@dataclass(frozen=True)
class Edge:
    id: int
    tail: int
    head: int

    @property
    def is_loop(self) -> bool:
        return self.tail == self.head


@dataclass
class BaseGraph:
    """Multigraph with oriented edges; loops and parallel edges allowed."""

    vertex_count: int
    edges: list[Edge]

    def __post_init__(self):
        if self.vertex_count < 1:
            raise ValueError("vertex_count must be positive")
        ids = set()
        for e in self.edges:
            if not (0 <= e.tail < self.vertex_count and 0 <= e.head < self.vertex_count):
                raise ValueError(f"edge {e.id} has an endpoint out of range")
            if e.id in ids:
                raise ValueError(f"duplicate edge id {e.id}")
            ids.add(e.id)

    @classmethod
    def from_pairs(cls, vertex_count: int, pairs: Sequence[tuple[int, int]]) -> "BaseGraph":
        return cls(vertex_count, [Edge(i, u, v) for i, (u, v) in enumerate(pairs)])

    @classmethod
    def cycle(cls, n: int) -> "BaseGraph":
        return cls.from_pairs(n, [(i, (i + 1) % n) for i in range(n)])

    @classmethod
    def path(cls, n: int) -> "BaseGraph":
        return cls.from_pairs(n, [(i, i + 1) for i in range(n - 1)])


@dataclass
class VoltageGraph:
    base: BaseGraph
    group: PermGroup
    voltage: dict[int, Permutation]

    def __post_init__(self):
        for e in self.base.edges:
            if e.id not in self.voltage:
                raise ValidationFailed(f"voltage_graph.edges[{e.id}].voltage", "missing voltage")
            if self.voltage[e.id] not in self.group:
                raise ValidationFailed(
                    f"voltage_graph.edges[{e.id}].voltage", f"not an element of {self.group.name}"
                )


@dataclass
class QuotientGraph:
    """``H \\ cover``: vertex ``(u, Hx)`` has index ``u * index + coset``.

    Edge ``i * index + c`` is the lift of the ``i``-th base edge starting at coset ``c``.
    """

    base: BaseGraph
    coset_table: CosetTable
    edges: list[Edge]
    parent: list[int]
    tail_coset: list[int]
    voltage: Mapping[int, Permutation] = field(repr=False)

    @property
    def index(self) -> int:
        return self.coset_table.index

    @property
    def vertex_count(self) -> int:
        return self.base.vertex_count * self.index

    @property
    def vertices(self) -> list[tuple[int, int]]:
        return [(u, c) for u in range(self.base.vertex_count) for c in range(self.index)]

    def vertex(self, u: int, coset: int) -> int:
        return u * self.index + coset

    def edge_id(self, base_position: int, coset: int) -> int:
        return base_position * self.index + coset


def _build(base: BaseGraph, voltage: Mapping[int, Permutation], table: CosetTable) -> QuotientGraph:
    n = table.index
    edges, parent, tail_coset = [], [], []
    for i, e in enumerate(base.edges):
        act = table.action(voltage[e.id])
        for c in range(n):
            edges.append(Edge(i * n + c, e.tail * n + c, e.head * n + act[c]))
            parent.append(e.id)
            tail_coset.append(c)
    return QuotientGraph(base, table, edges, parent, tail_coset, voltage)


def quotient(vg: VoltageGraph, H: PermGroup) -> QuotientGraph:
    """Quotient of the derived cover by ``H``, built straight from the coset table."""
    for g in H.generators:
        if g not in vg.group:
            raise SubgroupNotContained(f"{H.name} is not a subgroup of {vg.group.name}")
    return _build(vg.base, vg.voltage, coset_action(vg.group, H))


def derive_cover(vg: VoltageGraph) -> QuotientGraph:
    """Vertices ``(u, g)``; base edge ``u -> v`` lifts to ``(u, g) -> (v, g * voltage)``."""
    return quotient(vg, trivial_subgroup(vg.group))


def check_free_action(vg: VoltageGraph, H: PermGroup) -> bool:
    """True iff no non-identity ``h`` fixes a cover vertex ``(u, g)`` under ``g -> h g``."""
    for h in H.elements:
        if h.is_identity():
            continue
        for g in vg.group.elements:
            if h * g == g:
                return False
    return True


def connectivity(graph) -> int:
    """Number of connected components (union-find over the edge list)."""
    parent = list(range(graph.vertex_count))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in graph.edges:
        a, b = find(e.tail), find(e.head)
        if a != b:
            parent[a] = b
    return len({find(v) for v in range(graph.vertex_count)})


def sigma_map(m1: QuotientGraph, m2: QuotientGraph, tau: Permutation) -> tuple[list[int], list[int]]:
    """Vertex and edge maps ``(u, G1 g) -> (u, G2 tau g)`` from ``m1`` to ``m2``.

    Only meaningful when ``tau G1 tau^-1 = G2``; callers check that.
    """
    t1, t2 = m1.coset_table, m2.coset_table
    coset_map = [t2.coset_of[tau * r] for r in t1.coset_reps]
    n1, n2 = t1.index, t2.index
    vmap = [u * n2 + coset_map[c] for u in range(m1.base.vertex_count) for c in range(n1)]
    emap = [m2.edge_id(eid // n1, coset_map[eid % n1]) for eid in range(len(m1.edges))]
    return vmap, emap


def projection(fine: QuotientGraph, coarse: QuotientGraph) -> tuple[list[int], list[int]]:
    """Vertex and edge maps ``(u, Hx) -> (u, Kx)`` for ``H <= K`` sharing a voltage graph."""
    tf, tc = fine.coset_table, coarse.coset_table
    for g in tf.subgroup.generators:
        if g not in tc.subgroup:
            raise SubgroupNotContained(f"{tf.subgroup.name} is not contained in {tc.subgroup.name}")
    coset_map = [tc.coset_of[r] for r in tf.coset_reps]
    nf, nc = tf.index, tc.index
    vmap = [u * nc + coset_map[c] for u in range(fine.base.vertex_count) for c in range(nf)]
    emap = [coarse.edge_id(eid // nf, coset_map[eid % nf]) for eid in range(len(fine.edges))]
    return vmap, emap
