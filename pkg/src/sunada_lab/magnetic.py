"""Discrete Hermitian line bundles over graphs: U(1) edge phases, tensor powers,
magnetic Schroedinger operators, holonomy, gauge changes and transplantation.

Phases are exact fractions of a full turn.  Floating point enters only when
``exp(2 pi i k theta)`` is written into an operator matrix.
"""
from __future__ import annotations

import cmath
import math
import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from .covers import QuotientGraph, projection, sigma_map
from .errors import (
    DimensionMismatch,
    EigenResidualError,
    LengthMismatch,
    MissingPhase,
    MissingPotential,
    NonHermitian,
    NotInvariant,
    NotNormalizing,
)
from .groups import Intertwiner, Permutation, coset_action

T = TypeVar("T")


def _turn(x) -> Fraction:
    if isinstance(x, float):
        raise TypeError("phases must be exact rationals, not floats")
    return Fraction(x) % 1


@dataclass
class ConnectionData:
    """Phase (turns, reduced to [0, 1)) carried by each oriented edge id.

    Traversing an edge against its orientation contributes the negated phase.
    """

    phases: dict[int, Fraction]

    def __post_init__(self):
        self.phases = {int(e): _turn(p) for e, p in self.phases.items()}

    @classmethod
    def zero(cls, graph) -> "ConnectionData":
        return cls({e.id: Fraction(0) for e in graph.edges})

    def phase(self, edge_id: int, reverse: bool = False) -> Fraction:
        try:
            p = self.phases[edge_id]
        except KeyError:
            raise MissingPhase(f"no phase for edge {edge_id}") from None
        return (-p) % 1 if reverse else p

    def power(self, k: int) -> "ConnectionData":
        """Connection on the k-th tensor power: every phase multiplied by k."""
        return ConnectionData({e: k * p for e, p in self.phases.items()})

    def __eq__(self, other):
        return isinstance(other, ConnectionData) and self.phases == other.phases


@dataclass
class Potential:
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("potential values must be finite")

    @classmethod
    def zeros(cls, n: int) -> "Potential":
        return cls(np.zeros(n))

    def __len__(self):
        return len(self.values)


@dataclass
class MagneticOperator:
    matrix: np.ndarray
    k: int = 0
    label: str = ""

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]


def build_operator(graph, conn: ConnectionData, k: int = 1, q: Potential | None = None, label: str = "") -> MagneticOperator:
    """``H[v,v] = deg(v) + Q(v)``, ``H[v,w] = -sum_{e: v->w} exp(2 pi i k theta_e)``.

    A loop at ``v`` adds ``2 - 2 cos(2 pi k theta_e)`` to the diagonal.
    """
    n = graph.vertex_count
    if q is not None and len(q) != n:
        raise MissingPotential(f"potential has {len(q)} values for {n} vertices")
    H = np.zeros((n, n), dtype=complex)
    diag = np.zeros(n)
    for e in graph.edges:
        theta = (k * conn.phase(e.id)) % 1
        z = cmath.exp(2j * math.pi * float(theta))
        if e.is_loop:
            diag[e.tail] += 2.0 - 2.0 * z.real
        else:
            diag[e.tail] += 1.0
            diag[e.head] += 1.0
            H[e.tail, e.head] -= z
            H[e.head, e.tail] -= z.conjugate()
    if q is not None:
        diag += q.values
    H[np.diag_indices(n)] += diag
    if not np.array_equal(H, H.conj().T):
        raise NonHermitian("operator assembly lost Hermitian symmetry")
    return MagneticOperator(H, k, label)


def eigenvalues(op: MagneticOperator, verify: bool = False) -> np.ndarray:
    """Ascending eigenvalues from LAPACK's Hermitian solver.

    With ``verify`` the eigenpairs are checked: ``|Hx - lx| <= 1e-10 |H|``.
    """
    H = op.matrix
    if not np.array_equal(H, H.conj().T):
        raise NonHermitian("matrix is not exactly Hermitian")
    if H.shape[0] == 0:
        return np.zeros(0)
    if not verify:
        return np.linalg.eigvalsh(H)
    w, V = np.linalg.eigh(H)
    resid = eigen_residual(H, w, V)
    bound = 1e-10 * max(np.linalg.norm(H, 2), 1.0)
    if resid > bound:
        raise EigenResidualError(f"eigenpair residual {resid:.3e} exceeds {bound:.3e}")
    return w


def eigen_residual(H: np.ndarray, w: np.ndarray, V: np.ndarray) -> float:
    return float(np.linalg.norm(H @ V - V * w, axis=0).max()) if len(w) else 0.0


@dataclass
class SpectrumComparison:
    max_gap: float
    equal: bool


def compare_spectra(a: Sequence[float], b: Sequence[float], tol: float = 1e-8) -> SpectrumComparison:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise LengthMismatch(f"spectra have lengths {len(a)} and {len(b)}")
    gap = float(np.abs(np.sort(a) - np.sort(b)).max()) if a.size else 0.0
    return SpectrumComparison(gap, gap <= tol)


# ------------------------------------------------------------------ descent


def descend_connection(
    graph: QuotientGraph,
    base_phases: ConnectionData,
    mid_phases: ConnectionData | None = None,
    mid_graph: QuotientGraph | None = None,
) -> ConnectionData:
    """Connection on ``H \\ cover`` induced by G-invariant data.

    The phase of the lift of base edge ``e`` at ``(u, Hx)`` is
    ``base(e) + mid(e at (u, Gx))`` where ``mid`` lives on ``G \\ cover``.
    """
    phases = {e.id: base_phases.phase(graph.parent[e.id]) for e in graph.edges}
    if mid_phases is not None:
        if mid_graph is None:
            raise ValueError("mid_phases given without the intermediate quotient")
        _, emap = projection(graph, mid_graph)
        for e in graph.edges:
            phases[e.id] += mid_phases.phase(emap[e.id])
    return ConnectionData(phases)


def descend_potential(graph: QuotientGraph, values: Sequence[float], mid_graph: QuotientGraph | None = None) -> Potential:
    """Pull a function on ``G \\ cover`` (or on the base when ``mid_graph`` is None) up to ``graph``."""
    values = np.asarray(values, dtype=float)
    if mid_graph is None:
        if len(values) != graph.base.vertex_count:
            raise MissingPotential("potential does not cover the base vertices")
        return Potential(values[np.arange(graph.vertex_count) // graph.index])
    if len(values) != mid_graph.vertex_count:
        raise MissingPotential("potential does not cover the intermediate quotient")
    vmap, _ = projection(graph, mid_graph)
    return Potential(values[vmap])


def check_invariant(graph: QuotientGraph, values: Sequence[float], mid_graph: QuotientGraph, error=NotInvariant) -> None:
    """Raise ``error`` unless ``values`` is constant on every fibre over ``mid_graph``.

    Constancy on fibres is exactly G-invariance of the lift to the cover.
    """
    vmap, _ = projection(graph, mid_graph)
    seen: dict[int, tuple[int, float]] = {}
    for v, m in enumerate(vmap):
        x = float(values[v])
        if m in seen and seen[m][1] != x:
            orbit = [w for w, mm in enumerate(vmap) if mm == m]
            raise error(f"field is not constant on the orbit over vertex {m}: {orbit}", orbit=orbit)
        seen.setdefault(m, (v, x))


def check_common_descent(m1, values1, m2, values2, mid_graph, error=NotInvariant) -> None:
    """Both fields must be lifts of the same function on ``mid_graph``."""
    check_invariant(m1, values1, mid_graph, error)
    check_invariant(m2, values2, mid_graph, error)
    v1, _ = projection(m1, mid_graph)
    v2, _ = projection(m2, mid_graph)
    on_mid1 = {m: float(values1[v]) for v, m in enumerate(v1)}
    on_mid2 = {m: float(values2[v]) for v, m in enumerate(v2)}
    for m in sorted(on_mid1):
        if on_mid1[m] != on_mid2.get(m):
            raise error(
                f"fields on the two quotients disagree over vertex {m}",
                orbit=[v for v, mm in enumerate(v1) if mm == m],
            )


def _check_normalizing(tau: Permutation, m1: QuotientGraph, m2: QuotientGraph) -> None:
    g1, g2 = m1.coset_table.subgroup, m2.coset_table.subgroup
    ti = tau.inverse()
    if {tau * h * ti for h in g1.elements} != set(g2.elements):
        raise NotNormalizing("tau Gamma1 tau^-1 != Gamma2")


def pullback_by_sigma(conn2: ConnectionData, tau: Permutation, m1: QuotientGraph, m2: QuotientGraph) -> ConnectionData:
    """``(sigma* conn2)(e at (u, G1 g)) = conn2(e at (u, G2 tau g))``."""
    _check_normalizing(tau, m1, m2)
    _, emap = sigma_map(m1, m2, tau)
    return ConnectionData({e.id: conn2.phase(emap[e.id]) for e in m1.edges})


def pullback_potential_by_sigma(q2: Potential, tau: Permutation, m1: QuotientGraph, m2: QuotientGraph) -> Potential:
    _check_normalizing(tau, m1, m2)
    vmap, _ = sigma_map(m1, m2, tau)
    return Potential(q2.values[vmap])


# ---------------------------------------------------------------- holonomy


@dataclass
class CycleHolonomy:
    edge: int
    tail: int
    head: int
    turn: Fraction  # in (-1/2, 1/2]

    @property
    def angle(self) -> float:
        return 2 * math.pi * float(self.turn)


def _centered(t: Fraction) -> Fraction:
    t = t % 1
    return t - 1 if t > Fraction(1, 2) else t


@dataclass
class HolonomyReport:
    tree_edges: list[int]
    cycles: list[CycleHolonomy]
    tree_gauge: list[Fraction]

    def to_dict(self) -> dict:
        return {
            "tree_edges": self.tree_edges,
            "cycles": [
                {"edge": c.edge, "tail": c.tail, "head": c.head,
                 "turn": {"num": c.turn.numerator, "den": c.turn.denominator}, "angle": c.angle}
                for c in self.cycles
            ],
        }

    def differences(self, other: "HolonomyReport") -> list[float]:
        """Per-cycle circular distance (radians) to a report on the same graph."""
        if [c.edge for c in self.cycles] != [c.edge for c in other.cycles]:
            raise ValueError("holonomy reports use different cycle bases")
        return [abs(_centered(a.turn - b.turn)) * 2 * math.pi for a, b in zip(self.cycles, other.cycles)]


def spanning_forest(graph) -> tuple[list[int], list[int], list[tuple[int, int]]]:
    """BFS forest, lowest vertex index first; returns (tree edge ids, roots, parent links)."""
    n = graph.vertex_count
    adj: list[list[tuple[int, int, int]]] = [[] for _ in range(n)]
    for e in graph.edges:
        if e.is_loop:
            continue
        adj[e.tail].append((e.head, e.id, +1))
        adj[e.head].append((e.tail, e.id, -1))
    for a in adj:
        a.sort()
    seen = [False] * n
    tree, roots = [], []
    link: list[tuple[int, int]] = [(-1, 0)] * n  # (edge id, +1 if traversed along orientation)
    for r in range(n):
        if seen[r]:
            continue
        roots.append(r)
        seen[r] = True
        queue = deque([r])
        while queue:
            v = queue.popleft()
            for w, eid, sign in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    tree.append(eid)
                    link[w] = (eid, sign)
                    queue.append(w)
    return tree, roots, link


def holonomy_report(graph, conn: ConnectionData, k: int = 1) -> HolonomyReport:
    """Exact holonomy of the fundamental cycle of every non-tree edge."""
    conn = conn.power(k) if k != 1 else conn
    tree, roots, _ = spanning_forest(graph)
    tree_set = set(tree)
    by_id = {e.id: e for e in graph.edges}
    # tree potential: phase accumulated from the component root
    n = graph.vertex_count
    pot: list[Fraction | None] = [None] * n
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for eid in tree:
        e = by_id[eid]
        adj[e.tail].append((e.head, eid))
        adj[e.head].append((e.tail, eid))
    for r in roots:
        pot[r] = Fraction(0)
        queue = deque([r])
        while queue:
            v = queue.popleft()
            for w, eid in adj[v]:
                if pot[w] is None:
                    e = by_id[eid]
                    step = conn.phase(eid) if e.tail == v else -conn.phase(eid)
                    pot[w] = pot[v] + step
                    queue.append(w)
    cycles = []
    for e in graph.edges:
        if e.id in tree_set:
            continue
        turn = pot[e.tail] + conn.phase(e.id) - pot[e.head]
        cycles.append(CycleHolonomy(e.id, e.tail, e.head, _centered(turn)))
    return HolonomyReport(sorted(tree), cycles, [p % 1 for p in pot])


def gauge_transform(graph, conn: ConnectionData, gauge: Sequence) -> ConnectionData:
    """``theta'(v -> w) = theta + gauge(w) - gauge(v)``."""
    if len(gauge) != graph.vertex_count:
        raise DimensionMismatch("gauge must be defined on every vertex")
    g = [_turn(x) for x in gauge]
    return ConnectionData({e.id: conn.phase(e.id) + g[e.head] - g[e.tail] for e in graph.edges})


# ---------------------------------------------------------- transplantation


def transplant_matrix(tw: Intertwiner, m1: QuotientGraph, m2: QuotientGraph) -> np.ndarray:
    """Block matrix of the transplantation from sections on ``m2`` to sections on ``m1``.

    ``tw`` intertwines the coset representations of the intermediate group G
    on ``Gamma1 \\ G`` and ``Gamma2 \\ G``; the quotients may be taken in any
    overgroup of G.  On each sheet of ``G \\ cover`` the block is ``T^t``.
    """
    G = tw.source.parent
    hatG = m1.coset_table.parent
    if m2.coset_table.parent is not hatG and m2.coset_table.parent.generators != hatG.generators:
        raise DimensionMismatch("quotients come from different voltage groups")
    if m1.base.vertex_count != m2.base.vertex_count:
        raise DimensionMismatch("quotients have different base graphs")
    sheets = coset_action(hatG, G)
    Tm = tw.matrix
    B = np.zeros((m1.index, m2.index))
    for c1, r1 in enumerate(m1.coset_table.coset_reps):
        t = sheets.coset_reps[sheets.coset_of[r1]]
        a1 = tw.source.coset_of[r1 * t.inverse()]
        for c, y in enumerate(tw.target.coset_reps):
            B[c1, m2.coset_table.coset_of[y * t]] += Tm[c, a1]
    return np.kron(np.eye(m1.base.vertex_count), B)


def transplant_section(P: np.ndarray, section: np.ndarray) -> np.ndarray:
    section = np.asarray(section)
    if P.shape[1] != section.shape[0]:
        raise DimensionMismatch(f"section has length {section.shape[0]}, expected {P.shape[1]}")
    return P @ section


def intertwining_residual(P: np.ndarray, op1: MagneticOperator, op2: MagneticOperator) -> float:
    """``max |P (H2) - (H1) P|`` for the transplantation ``P`` from ``m2`` to ``m1``."""
    if P.shape != (op1.dimension, op2.dimension):
        raise DimensionMismatch(f"transplant shape {P.shape} vs operators {op1.dimension}, {op2.dimension}")
    return float(np.abs(P @ op2.matrix - op1.matrix @ P).max()) if P.size else 0.0


# ------------------------------------------------------------------- sweep


def thread_count() -> int:
    env = os.environ.get("SUNADA_LAB_THREADS")
    if env:
        return max(1, int(env))
    return max(1, min(8, os.cpu_count() or 1))


def sweep(fn: Callable[[int], T], ks: Iterable[int]) -> list[T]:
    """Evaluate ``fn`` for each k (possibly concurrently); results in ascending-k order."""
    ks = sorted(ks)
    workers = min(thread_count(), len(ks))
    if workers <= 1:
        return [fn(k) for k in ks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, ks))
