"""Standard groups used by the test corpus and the bundled scenarios.

GL(3, F2) is built from its 3x3 matrices; nothing here is a hardcoded
generator array for it.
"""
from __future__ import annotations

import json
from itertools import product
from pathlib import Path

import numpy as np

from .groups import PermGroup, Permutation, Subgroup, stabilizer

# nonzero vectors of F2^3, encoded as the integers 1..7 (bit i = coordinate i)
FANO_VECTORS = [np.array([(v >> i) & 1 for i in range(3)], dtype=np.int64) for v in range(1, 8)]


def _vec_index(v: np.ndarray) -> int:
    return int(sum(int(x) << i for i, x in enumerate(v % 2))) - 1


def gl32_matrices() -> list[np.ndarray]:
    """Every invertible 3x3 matrix over F2 (exhaustive over all 512 matrices)."""
    out = []
    for bits in product((0, 1), repeat=9):
        m = np.array(bits, dtype=np.int64).reshape(3, 3)
        if round(np.linalg.det(m)) % 2 == 1:
            out.append(m)
    return out


def f2_inverse(m: np.ndarray) -> np.ndarray:
    for cand in gl32_matrices():
        if ((m @ cand) % 2 == np.eye(3, dtype=np.int64)).all():
            return cand
    raise ValueError("matrix is singular over F2")


def point_permutation(m: np.ndarray) -> Permutation:
    """Action ``v -> m v`` on the 7 nonzero vectors."""
    return Permutation([_vec_index(m @ v) for v in FANO_VECTORS])


def point_plane_permutation(m: np.ndarray) -> Permutation:
    """Action on points (0..6) and planes (7..13); plane ``f`` is ker(f), moved by ``f -> f m^-1``."""
    minv = f2_inverse(m)
    pts = [_vec_index(m @ v) for v in FANO_VECTORS]
    planes = [7 + _vec_index(f @ minv) for f in FANO_VECTORS]
    return Permutation(pts + planes)


def polarity() -> Permutation:
    """Correlation exchanging point ``v`` with the plane ker(v^t)."""
    return Permutation(list(range(7, 14)) + list(range(7)))


# two matrices that generate GL(3, F2): a Singer cycle of order 7 and a transvection;
# the only maximal subgroup containing an element of order 7 is 7:3, which has no involutions
SINGER = np.array([[0, 0, 1], [1, 0, 1], [0, 1, 0]], dtype=np.int64)  # companion of x^3 + x + 1
TRANSVECTION = np.array([[1, 1, 0], [0, 1, 0], [0, 0, 1]], dtype=np.int64)


def gl32_points() -> PermGroup:
    return PermGroup(7, [point_permutation(SINGER), point_permutation(TRANSVECTION)], name="GL(3,2)")


def gl32_points_planes() -> PermGroup:
    return PermGroup(
        14, [point_plane_permutation(SINGER), point_plane_permutation(TRANSVECTION)], name="GL(3,2)-14"
    )


def gl32_with_polarity() -> PermGroup:
    """GL(3,2) extended by the polarity: order 336, acting on points and planes."""
    gens = [point_plane_permutation(SINGER), point_plane_permutation(TRANSVECTION), polarity()]
    return PermGroup(14, gens, name="GL(3,2):2")


def fano_line(f_index: int = 0) -> list[int]:
    """Points (as indices) on the plane ker(f) for the ``f_index``-th functional."""
    f = FANO_VECTORS[f_index]
    return [i for i, v in enumerate(FANO_VECTORS) if int(f @ v) % 2 == 0]


def fano_pair(G: PermGroup | None = None) -> tuple[PermGroup, Subgroup, Subgroup]:
    """GL(3,2) on 7 points with the point stabilizer and the plane stabilizer."""
    G = G or gl32_points()
    g1 = stabilizer(G, [0], name="Gamma1")
    g2 = stabilizer(G, fano_line(0), name="Gamma2")
    return G, g1, g2


def symmetric_group(n: int) -> PermGroup:
    gens = [Permutation.from_cycles(n, [0, 1])]
    if n > 2:
        gens.append(Permutation.from_cycles(n, list(range(n))))
    return PermGroup(n, gens if n > 1 else [], name=f"S{n}")


def cyclic_group(n: int) -> PermGroup:
    return PermGroup(n, [Permutation.from_cycles(n, list(range(n)))] if n > 1 else [], name=f"C{n}")


def dihedral_group_d4() -> PermGroup:
    return PermGroup(4, [Permutation.from_cycles(4, [0, 1, 2, 3]), Permutation.from_cycles(4, [1, 3])], name="D4")


_QUAT = {
    # (a, b) -> a*b for the units 1, i, j, k encoded 0..3 with sign
    (0, 0): (1, 0), (0, 1): (1, 1), (0, 2): (1, 2), (0, 3): (1, 3),
    (1, 0): (1, 1), (1, 1): (-1, 0), (1, 2): (1, 3), (1, 3): (-1, 2),
    (2, 0): (1, 2), (2, 1): (-1, 3), (2, 2): (-1, 0), (2, 3): (1, 1),
    (3, 0): (1, 3), (3, 1): (1, 2), (3, 2): (-1, 1), (3, 3): (-1, 0),
}


def quaternion_group() -> PermGroup:
    """Q8 in its right regular representation; element ``s*u`` is index ``u + 4*(s<0)``."""

    def mul(x, y):
        sx, ux = (-1 if x >= 4 else 1), x % 4
        sy, uy = (-1 if y >= 4 else 1), y % 4
        s, u = _QUAT[(ux, uy)]
        s *= sx * sy
        return u + (4 if s < 0 else 0)

    gens = [Permutation([mul(x, g) for x in range(8)]) for g in (1, 2)]
    return PermGroup(8, gens, name="Q8")


def s3_x_s3() -> PermGroup:
    gens = [
        Permutation.from_cycles(6, [0, 1]),
        Permutation.from_cycles(6, [0, 1, 2]),
        Permutation.from_cycles(6, [3, 4]),
        Permutation.from_cycles(6, [3, 4, 5]),
    ]
    return PermGroup(6, gens, name="S3xS3")


# ------------------------------------------------------------ bundled scenarios

BROOKS_SEED = 0  # chosen so the tau-broken holonomy shift is at least 0.1 rad


def _subgroup_doc(H: PermGroup) -> dict:
    return {"name": H.name, "degree": H.degree, "generators": [list(g.images) for g in H.generators]}


def _voltage_doc(pairs, voltages) -> dict:
    return {
        "vertices": 1 + max(max(p) for p in pairs),
        "group": "group.json",
        "edges": [
            {"id": i, "from": a, "to": b, "voltage": list(v.images)}
            for i, ((a, b), v) in enumerate(zip(pairs, voltages))
        ],
    }


def _scenario_doc(name, seed=0, **extra) -> dict:
    doc = {
        "name": name,
        "group": "group.json",
        "gamma1": "gamma1.json",
        "gamma2": "gamma2.json",
        "voltage_graph": "voltage_graph.json",
        "connection": {"mode": "random", "max_den": 360},
        "potential": {"mode": "random"},
        "curvature": {"mode": "constant", "value": -2.0},
        "k_range": [0, 8],
        "tol": 1e-8,
        "seed": seed,
        "output": f"out/{name}",
    }
    doc.update(extra)
    return doc


def bundled_scenarios(brooks_seed: int = BROOKS_SEED) -> dict[str, dict[str, dict]]:
    """File contents for each bundled scenario, keyed by directory then file name."""
    theta = [(0, 1), (0, 1), (0, 1)]  # two vertices joined by three parallel edges
    out: dict[str, dict[str, dict]] = {}

    G, g1, g2 = fano_pair()
    fano_v = [G.identity, point_permutation(SINGER), point_permutation(TRANSVECTION)]
    out["fano"] = {
        "group.json": _subgroup_doc(G),
        "gamma1.json": _subgroup_doc(g1),
        "gamma2.json": _subgroup_doc(g2),
        "voltage_graph.json": _voltage_doc(theta, fano_v),
        "scenario.json": _scenario_doc("fano"),
    }
    out["degenerate"] = {
        "group.json": _subgroup_doc(G),
        "gamma1.json": _subgroup_doc(g1),
        "gamma2.json": {**_subgroup_doc(g1), "name": "Gamma1 again"},
        "voltage_graph.json": _voltage_doc(theta, fano_v),
        "scenario.json": _scenario_doc("degenerate"),
    }

    hat = gl32_with_polarity()
    G14 = gl32_points_planes()
    tau = polarity()
    b1 = stabilizer(G14, [0], name="Gamma1")
    b2 = Subgroup(G14, [tau * g * tau.inverse() for g in b1.generators], name="Gamma2")
    brooks_v = [hat.identity, point_plane_permutation(SINGER), point_plane_permutation(TRANSVECTION) * tau]
    out["brooks"] = {
        "group.json": _subgroup_doc(hat),
        "G.json": _subgroup_doc(G14),
        "gamma1.json": _subgroup_doc(b1),
        "gamma2.json": _subgroup_doc(b2),
        "voltage_graph.json": _voltage_doc(theta, brooks_v),
        "scenario.json": _scenario_doc(
            "brooks",
            seed=brooks_seed,
            G="G.json",
            tau=list(tau.images),
            connection={"mode": "random", "max_den": 360, "break_tau": True},
        ),
    }

    S4 = symmetric_group(4)
    c1 = Subgroup(S4, [Permutation.from_cycles(4, [0, 1])], name="<(0 1)>")
    c2 = Subgroup(S4, [Permutation([1, 0, 3, 2])], name="<(0 1)(2 3)>")
    s4_v = [S4.identity, Permutation.from_cycles(4, [0, 1, 2, 3]), Permutation.from_cycles(4, [0, 1])]
    out["s4_control"] = {
        "group.json": _subgroup_doc(S4),
        "gamma1.json": _subgroup_doc(c1),
        "gamma2.json": _subgroup_doc(c2),
        "voltage_graph.json": _voltage_doc(theta, s4_v),
        "scenario.json": _scenario_doc("s4_control"),
    }
    return out


def write_scenarios(root, brooks_seed: int = BROOKS_SEED) -> list:
    """Write every bundled scenario below ``root``; returns the scenario file paths."""
    root = Path(root)
    paths = []
    for name, files in bundled_scenarios(brooks_seed).items():
        d = root / name
        d.mkdir(parents=True, exist_ok=True)
        for fname, doc in files.items():
            (d / fname).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        paths.append(d / "scenario.json")
    return paths


if __name__ == "__main__":
    import sys

    for p in write_scenarios(sys.argv[1] if len(sys.argv) > 1 else "scenarios"):
        print(p)
