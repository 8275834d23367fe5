"""Finite permutation groups: enumeration, conjugacy, Gassmann tests, coset
actions and exact G-equivariant intertwiners.

Permutations act on the right: ``(p * q)`` applies ``p`` first, then ``q``,
so ``(p * q)[i] == q[p[i]]``.  With this convention the right-coset action
``Hx -> Hxg`` is a homomorphism ``action(g * h) == action(g) * action(h)``.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    CapExceeded,
    IllConditioned,
    NoInvertibleFound,
    NotAlmostConjugate,
    SubgroupNotContained,
)

ELEMENT_CAP = 200_000
DEGREE_CAP = 10_000
SEARCH_CAP = 10_000


class Permutation:
    """A bijection of ``{0, ..., degree-1}`` stored as its image array."""

    __slots__ = ("images", "_hash")

    def __init__(self, images: Iterable[int], check: bool = True):
        self.images = tuple(int(i) for i in images)
        if check and sorted(self.images) != list(range(len(self.images))):
            raise ValueError(f"{list(self.images)} is not a permutation")
        self._hash = hash(self.images)

    @classmethod
    def identity(cls, degree: int) -> "Permutation":
        return cls(range(degree), check=False)

    @classmethod
    def from_cycles(cls, degree: int, *cycles: Sequence[int]) -> "Permutation":
        images = list(range(degree))
        for cyc in cycles:
            for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
                images[a] = b
        return cls(images)

    @property
    def degree(self) -> int:
        return len(self.images)

    def __mul__(self, other: "Permutation") -> "Permutation":
        o = other.images
        return Permutation([o[i] for i in self.images], check=False)

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.images)
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(inv, check=False)

    def __pow__(self, n: int) -> "Permutation":
        base = self if n >= 0 else self.inverse()
        result = Permutation.identity(self.degree)
        for _ in range(abs(n)):
            result = result * base
        return result

    def conjugate_by(self, g: "Permutation") -> "Permutation":
        """Return ``g * self * g^-1``."""
        return g * self * g.inverse()

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.images))

    def fixed_points(self) -> int:
        return sum(1 for i, j in enumerate(self.images) if i == j)

    def cycle_type(self) -> tuple[int, ...]:
        seen = [False] * len(self.images)
        lengths = []
        for start in range(len(self.images)):
            if seen[start]:
                continue
            n, i = 0, start
            while not seen[i]:
                seen[i] = True
                i = self.images[i]
                n += 1
            lengths.append(n)
        return tuple(sorted(lengths, reverse=True))

    def order(self) -> int:
        from math import lcm

        out = 1
        for n in self.cycle_type():
            out = lcm(out, n)
        return out

    def matrix(self) -> np.ndarray:
        """Permutation matrix ``P`` with ``P[self[i], i] = 1`` (maps e_i to e_{p(i)})."""
        n = len(self.images)
        m = np.zeros((n, n), dtype=np.int64)
        m[list(self.images), list(range(n))] = 1
        return m

    def __eq__(self, other):
        return isinstance(other, Permutation) and self.images == other.images

    def __lt__(self, other):
        return self.images < other.images

    def __hash__(self):
        return self._hash

    def __len__(self):
        return len(self.images)

    def __getitem__(self, i):
        return self.images[i]

    def __repr__(self):
        return f"Permutation({list(self.images)})"


def _closure(degree: int, generators: Sequence[Permutation], cap: int) -> list[Permutation]:
    identity = Permutation.identity(degree)
    elements = [identity]
    seen = {identity}
    queue = deque([identity])
    while queue:
        x = queue.popleft()
        for g in generators:
            y = x * g
            if y not in seen:
                seen.add(y)
                elements.append(y)
                if len(elements) > cap:
                    raise CapExceeded(f"group closure exceeds {cap} elements")
                queue.append(y)
    return elements


class PermGroup:
    """Permutation group given by generators; elements are enumerated lazily."""

    def __init__(self, degree: int, generators: Sequence[Permutation] = (), name: str = "G"):
        if degree < 1:
            raise ValueError("degree must be positive")
        if degree > DEGREE_CAP:
            raise CapExceeded(f"degree {degree} exceeds cap {DEGREE_CAP}")
        gens = [g if isinstance(g, Permutation) else Permutation(g) for g in generators]
        for g in gens:
            if g.degree != degree:
                raise ValueError(f"generator {g} has degree {g.degree}, expected {degree}")
        self.degree = degree
        self.generators = gens
        self.name = name
        self._elements: list[Permutation] | None = None
        self._index: dict[Permutation, int] | None = None
        self._classes: ConjugacyClassTable | None = None

    @property
    def identity(self) -> Permutation:
        return Permutation.identity(self.degree)

    @property
    def elements(self) -> list[Permutation]:
        if self._elements is None:
            enumerate_elements(self)
        return self._elements

    @property
    def order(self) -> int:
        return len(self.elements)

    def index_of(self, g: Permutation) -> int:
        if self._index is None:
            self._index = {x: i for i, x in enumerate(self.elements)}
        return self._index[g]

    def __contains__(self, g: Permutation) -> bool:
        if self._index is None:
            self._index = {x: i for i, x in enumerate(self.elements)}
        return g in self._index

    def __len__(self):
        return self.order

    def __repr__(self):
        return f"PermGroup({self.name!r}, degree={self.degree}, gens={len(self.generators)})"


class Subgroup(PermGroup):
    """Subgroup of ``parent`` generated by ``generators``."""

    def __init__(self, parent: PermGroup, generators: Sequence[Permutation] = (), name: str = "H"):
        super().__init__(parent.degree, generators, name=name)
        self.parent = parent
        for g in self.generators:
            if g not in parent:
                raise SubgroupNotContained(f"generator {g} of {name} is not in {parent.name}")

    @classmethod
    def from_elements(cls, parent: PermGroup, elements: Iterable[Permutation], name: str = "H") -> "Subgroup":
        """Subgroup with the given element set; a small generating set is picked greedily."""
        target = set(elements)
        gens: list[Permutation] = []
        current = {parent.identity}
        for g in sorted(target, key=lambda x: (-x.order(), x.images)):
            if g not in current:
                gens.append(g)
                current = set(_closure(parent.degree, gens, ELEMENT_CAP))
            if len(current) == len(target):
                break
        if current != target:
            raise ValueError("element set is not a subgroup")
        sub = cls(parent, gens, name=name)
        return sub

    def element_set(self) -> frozenset[Permutation]:
        return frozenset(self.elements)

    def is_subgroup_of(self, other: PermGroup) -> bool:
        return all(g in other for g in self.generators)


def enumerate_elements(group: PermGroup, cap: int = ELEMENT_CAP) -> list[Permutation]:
    """Close the generators under composition; sets ``group.order``."""
    if group._elements is None:
        group._elements = _closure(group.degree, group.generators, cap)
    return group._elements


def trivial_subgroup(G: PermGroup) -> Subgroup:
    return Subgroup(G, [], name="1")


def full_subgroup(G: PermGroup) -> Subgroup:
    return Subgroup(G, G.generators, name=G.name)


def stabilizer(G: PermGroup, points: Iterable[int], name: str = "Stab") -> Subgroup:
    """Setwise stabilizer of ``points`` (a single point gives the point stabilizer)."""
    pts = frozenset(points)
    elems = [g for g in G.elements if frozenset(g[p] for p in pts) == pts]
    return Subgroup.from_elements(G, elems, name=name)


# ---------------------------------------------------------------- conjugacy


@dataclass
class ConjugacyClassTable:
    representatives: list[Permutation]
    sizes: list[int]
    class_of: dict[Permutation, int]

    def __len__(self):
        return len(self.representatives)


def conjugacy_classes(group: PermGroup) -> ConjugacyClassTable:
    if group._classes is not None:
        return group._classes
    gens = group.generators
    inv_gens = [g.inverse() for g in gens]
    class_of: dict[Permutation, int] = {}
    reps, sizes = [], []
    for x in group.elements:
        if x in class_of:
            continue
        idx = len(reps)
        class_of[x] = idx
        queue = deque([x])
        size = 1
        while queue:
            y = queue.popleft()
            for g, gi in zip(gens, inv_gens):
                z = gi * y * g
                if z not in class_of:
                    class_of[z] = idx
                    size += 1
                    queue.append(z)
        reps.append(x)
        sizes.append(size)
    group._classes = ConjugacyClassTable(reps, sizes, class_of)
    return group._classes


def class_counts(G: PermGroup, H: PermGroup) -> list[int]:
    """Number of elements of ``H`` in each conjugacy class of ``G``."""
    table = conjugacy_classes(G)
    counts = [0] * len(table)
    for h in H.elements:
        counts[table.class_of[h]] += 1
    return counts


def _check_contained(G: PermGroup, *subgroups: PermGroup) -> None:
    for H in subgroups:
        for g in H.generators:
            if g not in G:
                raise SubgroupNotContained(f"{H.name} is not contained in {G.name}")


def is_conjugate_subgroups(G: PermGroup, H1: PermGroup, H2: PermGroup) -> bool:
    """Exhaustive test for some g in G with g H1 g^-1 = H2."""
    _check_contained(G, H1, H2)
    if H1.order != H2.order:
        return False
    target = set(H2.elements)
    gens = H1.generators
    for g in G.elements:
        gi = g.inverse()
        if all(g * h * gi in target for h in gens):
            return True
    return False


@dataclass
class AlmostConjugacyReport:
    verdict: bool
    per_class_counts: list[tuple[int, int]]
    class_representatives: list[Permutation]
    class_sizes: list[int]

    def to_dict(self) -> dict:
        return {
            "almost_conjugate": self.verdict,
            "classes": [
                {"representative": list(r.images), "size": s, "count_1": a, "count_2": b}
                for r, s, (a, b) in zip(
                    self.class_representatives, self.class_sizes, self.per_class_counts
                )
            ],
        }


def almost_conjugate(G: PermGroup, H1: PermGroup, H2: PermGroup) -> AlmostConjugacyReport:
    _check_contained(G, H1, H2)
    table = conjugacy_classes(G)
    c1, c2 = class_counts(G, H1), class_counts(G, H2)
    return AlmostConjugacyReport(
        verdict=c1 == c2,
        per_class_counts=list(zip(c1, c2)),
        class_representatives=list(table.representatives),
        class_sizes=list(table.sizes),
    )


# -------------------------------------------------------------- coset action


@dataclass
class CosetTable:
    """Right cosets ``H g`` of ``subgroup`` in its parent and the action of the parent on them."""

    subgroup: PermGroup
    parent: PermGroup
    coset_reps: list[Permutation]
    coset_of: dict[Permutation, int]
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def index(self) -> int:
        return len(self.coset_reps)

    def action(self, g: Permutation) -> Permutation:
        """Permutation of coset indices sending ``Hx`` to ``Hxg``."""
        hit = self._cache.get(g)
        if hit is None:
            hit = Permutation([self.coset_of[r * g] for r in self.coset_reps], check=False)
            self._cache[g] = hit
        return hit

    def matrix(self, g: Permutation) -> np.ndarray:
        """``rho(g)``: the permutation matrix sending basis vector e_c to e_{cg}."""
        return self.action(g).matrix()


def coset_action(G: PermGroup, H: PermGroup) -> CosetTable:
    _check_contained(G, H)
    H_elems = H.elements
    coset_of: dict[Permutation, int] = {}
    reps: list[Permutation] = []
    for g in G.elements:
        if g in coset_of:
            continue
        idx = len(reps)
        reps.append(g)
        for h in H_elems:
            coset_of[h * g] = idx
    return CosetTable(H, G, reps, coset_of)


def permutation_character(table: CosetTable, g: Permutation) -> int:
    """Number of cosets fixed by ``g``."""
    return table.action(g).fixed_points()


# ------------------------------------------------------- exact linear algebra


def bareiss_rank(matrix: Sequence[Sequence[int]]) -> int:
    """Rank of an integer matrix by fraction-free Gaussian elimination."""
    a = [[int(x) for x in row] for row in matrix]
    if not a:
        return 0
    rows, cols = len(a), len(a[0])
    rank, prev = 0, 1
    for col in range(cols):
        pivot = next((r for r in range(rank, rows) if a[r][col] != 0), None)
        if pivot is None:
            continue
        a[rank], a[pivot] = a[pivot], a[rank]
        p = a[rank][col]
        for r in range(rank + 1, rows):
            for c in range(col + 1, cols):
                a[r][c] = (a[r][c] * p - a[r][col] * a[rank][c]) // prev
            a[r][col] = 0
        prev = p
        rank += 1
        if rank == rows:
            break
    return rank


def bareiss_determinant(matrix: Sequence[Sequence[int]]) -> int:
    a = [[int(x) for x in row] for row in matrix]
    n = len(a)
    if any(len(row) != n for row in a):
        raise ValueError("determinant of a non-square matrix")
    sign, prev = 1, 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((r for r in range(k + 1, n) if a[r][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1] if n else 1


# -------------------------------------------------------------- intertwiner


@dataclass
class Intertwiner:
    """Integer matrix ``T`` (index2 x index1) with ``T rho1(g) = rho2(g) T``."""

    matrix: np.ndarray
    source: CosetTable
    target: CosetTable
    seed: int | None = None
    attempts: int = 1

    def residual(self, g: Permutation) -> int:
        """Exact integer residual max|T rho1(g) - rho2(g) T| via explicit matrix products."""
        T = self.matrix
        diff = T @ self.source.matrix(g) - self.target.matrix(g) @ T
        return int(np.abs(diff).max()) if diff.size else 0


def average_over_group(G: PermGroup, t1: CosetTable, t2: CosetTable, X: np.ndarray) -> np.ndarray:
    """``sum_g rho2(g) X rho1(g)^-1`` computed by index scattering."""
    X = np.asarray(X, dtype=np.int64)
    T = np.zeros((t2.index, t1.index), dtype=np.int64)
    for g in G.elements:
        p2 = list(t2.action(g).images)
        p1 = list(t1.action(g).images)
        T[np.ix_(p2, p1)] += X
    return T


def build_intertwiner(
    G: PermGroup,
    H1: PermGroup,
    H2: PermGroup,
    seed: int = 0,
    X: np.ndarray | None = None,
    attempts: int = 20,
) -> Intertwiner:
    """Average a random integer matrix over G until the result is invertible.

    ``X`` bypasses the random draw (used for the scalar ``H1 == H2`` case).
    """
    report = almost_conjugate(G, H1, H2)
    if not report.verdict:
        raise NotAlmostConjugate(f"{H1.name} and {H2.name} are not almost conjugate in {G.name}")
    t1, t2 = coset_action(G, H1), coset_action(G, H2)
    candidates: list[tuple[int | None, np.ndarray]]
    if X is not None:
        candidates = [(None, np.asarray(X, dtype=np.int64))]
    else:
        candidates = []
        for i in range(attempts):
            rng = np.random.default_rng(seed + i)
            candidates.append((seed + i, rng.integers(0, 10, size=(t2.index, t1.index))))
    tried = []
    for n, (s, Xi) in enumerate(candidates, start=1):
        tried.append(s)
        T = average_over_group(G, t1, t2, Xi)
        if bareiss_rank(T.tolist()) < t1.index:
            continue
        tw = Intertwiner(T, t1, t2, seed=s, attempts=n)
        for g in G.generators:
            if tw.residual(g) != 0:
                raise AssertionError("averaged matrix failed to intertwine")
        return tw
    raise NoInvertibleFound(tried)


def unitarize_intertwiner(tw: Intertwiner) -> np.ndarray:
    """Orthogonal polar factor ``T (T^t T)^{-1/2}`` of the intertwiner."""
    T = tw.matrix.astype(float)
    gram = T.T @ T
    w, V = np.linalg.eigh(gram)
    if w[0] < 1e-12 * w[-1]:
        raise IllConditioned(f"Gram eigenvalue ratio {w[0] / w[-1]:.3e} below 1e-12")
    inv_sqrt = (V / np.sqrt(w)) @ V.T
    return T @ inv_sqrt


# ------------------------------------------------------------ Gassmann search


def _cyclic(g: Permutation) -> frozenset[Permutation]:
    out = [Permutation.identity(g.degree)]
    x = g
    while not x.is_identity():
        out.append(x)
        x = x * g
    return frozenset(out)


def candidate_subgroups(G: PermGroup, max_generators: int = 2, cap: int = SEARCH_CAP) -> list[frozenset[Permutation]]:
    """All subgroups generated by at most ``max_generators`` elements, as element sets."""
    if max_generators not in (1, 2):
        raise ValueError("max_generators must be 1 or 2")
    cyclics: dict[frozenset, Permutation] = {}
    for g in G.elements:
        c = _cyclic(g)
        if c not in cyclics:
            cyclics[c] = g
    found: dict[frozenset, None] = {c: None for c in cyclics}
    if max_generators == 2:
        items = list(cyclics.items())
        for (ca, a), (cb, b) in combinations(items, 2):
            if b in ca or a in cb:
                continue
            sub = frozenset(_closure(G.degree, [a, b], ELEMENT_CAP))
            if sub not in found:
                found[sub] = None
                if len(found) > cap:
                    raise CapExceeded(f"more than {cap} candidate subgroups")
    if len(found) > cap:
        raise CapExceeded(f"more than {cap} candidate subgroups")
    return sorted(found, key=lambda s: (len(s), sorted(x.images for x in s)))


def search_gassmann(G: PermGroup, max_generators: int = 2, cap: int = SEARCH_CAP) -> list[tuple[Subgroup, Subgroup]]:
    """Unordered pairs of almost conjugate, nonconjugate <=2-generator subgroups."""
    table = conjugacy_classes(G)
    subs = candidate_subgroups(G, max_generators, cap)

    def profile(s):
        counts = [0] * len(table)
        for h in s:
            counts[table.class_of[h]] += 1
        return tuple(counts)

    profiles = [profile(s) for s in subs]
    # label each subgroup by its conjugacy class of subgroups
    label: dict[frozenset, int] = {}
    for s in subs:
        if s in label:
            continue
        lab = len(label)
        for g in G.elements:
            gi = g.inverse()
            label.setdefault(frozenset(g * h * gi for h in s), lab)
    pairs = []
    for i, j in combinations(range(len(subs)), 2):
        if profiles[i] == profiles[j] and label[subs[i]] != label[subs[j]]:
            pairs.append(
                (
                    Subgroup.from_elements(G, subs[i], name=f"H{i}"),
                    Subgroup.from_elements(G, subs[j], name=f"H{j}"),
                )
            )
    return pairs


def rational_inverse(T: np.ndarray) -> list[list[Fraction]]:
    """Exact inverse over the rationals (Gauss-Jordan on Fractions)."""
    n = T.shape[0]
    a = [[Fraction(int(x)) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(T.tolist())]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            raise ZeroDivisionError("singular matrix")
        a[col], a[piv] = a[piv], a[col]
        p = a[col][col]
        a[col] = [x / p for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [row[n:] for row in a]
