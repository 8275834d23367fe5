"""Acceptance criteria 1-10.  Each test prints one PASS/FAIL line (collected in the terminal summary)."""
import json
import math
import time
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from sunada_lab.cli import main
from sunada_lab.covers import BaseGraph
from sunada_lab.fixtures import (
    FANO_VECTORS,
    dihedral_group_d4,
    gl32_matrices,
    quaternion_group,
    s3_x_s3,
    symmetric_group,
)
from sunada_lab.groups import Permutation, Subgroup, almost_conjugate
from sunada_lab.magnetic import (
    ConnectionData,
    build_operator,
    eigenvalues,
    gauge_transform,
    holonomy_report,
)
from sunada_lab.scenario import Pipeline, load_scenario

RESULTS = {}

# frozen from the matrix-level oracle below: (element order, class size) -> elements of
# each order-24 stabilizer in that class of GL(3,2)
FANO_CLASS_COUNTS = {(1, 1): 1, (2, 21): 9, (3, 56): 8, (4, 42): 6, (7, 24): 0}


def record(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def fano(fano_path):
    return Pipeline(load_scenario(fano_path))


# ------------------------------------------------------------------- oracles


def _key(m):
    return tuple(int(x) for x in m.flatten())


def matrix_oracle():
    """Class intersection counts computed on 3x3 matrices over F2, no permutations involved."""
    mats = gl32_matrices()
    eye = np.eye(3, dtype=np.int64)
    inv = {_key(m): next(c for c in mats if ((m @ c) % 2 == eye).all()) for m in mats}
    cls, sizes = {}, []
    for x in mats:
        if _key(x) in cls:
            continue
        members = {_key((inv[_key(g)] @ x @ g) % 2) for g in mats}
        for k in members:
            cls[k] = len(sizes)
        sizes.append(len(members))
    e0 = FANO_VECTORS[0]
    plane = [v for v in FANO_VECTORS if int(e0 @ v) % 2 == 0]
    point_stab = [m for m in mats if ((m @ e0) % 2 == e0).all()]
    plane_stab = [m for m in mats if all(int(e0 @ (m @ v)) % 2 == 0 for v in plane)]

    def order(m):
        return next(n for n in range(1, 8) if (np.linalg.matrix_power(m, n) % 2 == eye).all())

    def counts(S):
        out = {}
        for m in S:
            key = (order(m), sizes[cls[_key(m)]])
            out[key] = out.get(key, 0) + 1
        return out

    conj = any(
        {_key((inv[_key(g)] @ m @ g) % 2) for m in point_stab} == {_key(m) for m in plane_stab} for g in mats
    )
    return counts(point_stab), counts(plane_stab), conj


def closure(gens, identity):
    seen = {identity}
    frontier = [identity]
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = x * g
                if y not in seen:
                    seen.add(y)
                    nxt.append(y)
        frontier = nxt
    return frozenset(seen)


def character(G_elems, H):
    """Fixed cosets of g on H\\G: #{x : x g x^-1 in H} / |H|."""
    out = []
    for g in G_elems:
        n = sum(1 for x in G_elems if x * g * x.inverse() in H)
        out.append(n // len(H))
    return tuple(out)


# ------------------------------------------------------------------ criteria


def test_criterion_01_gassmann_verification(fano_path, capsys):
    t0 = time.perf_counter()
    code = main(["gassmann", "verify", "--scenario", str(fano_path)])
    elapsed = time.perf_counter() - t0
    rep = json.loads(capsys.readouterr().out)
    c1, c2, conj = matrix_oracle()
    G = load_scenario(fano_path).G
    got = {}
    for row in rep["classes"]:
        key = (Permutation(row["representative"]).order(), row["size"])
        got.setdefault(key, [0, 0])
        got[key][0] += row["count_1"]
        got[key][1] += row["count_2"]
    ok = (
        code == 0
        and rep["almost_conjugate"] is True
        and rep["conjugate"] is False
        and G.order == 168
        and all(r["count_1"] == r["count_2"] for r in rep["classes"])
        and c1 == c2
        and not conj
        and {k: v[0] for k, v in got.items() if v[0]} == c1
        and all(c1.get(k, 0) == v for k, v in FANO_CLASS_COUNTS.items())
        and elapsed < 5
    )
    record(1, ok, f"almost_conjugate={rep['almost_conjugate']} conjugate={rep['conjugate']} "
                  f"counts={sorted(c1.items())} time={elapsed:.2f}s")


def test_criterion_02_bundle_isospectrality(fano):
    t0 = time.perf_counter()
    levels = fano.compare(range(9), with_potential=False)
    elapsed = time.perf_counter() - t0
    gap = max(x["gap"] for x in levels)
    # the connection really is nontrivial
    nontrivial = any(p != 0 for p in fano.bundle1[0].phases.values())
    record(2, gap < 1e-8 and elapsed < 10 and nontrivial, f"max gap {gap:.2e} over k=0..8, time={elapsed:.2f}s")


def test_criterion_03_potentials(fano):
    levels = fano.compare(range(9), with_potential=True)
    gap = max(x["gap"] for x in levels)
    q = fano.bundle1[1].values
    record(3, gap < 1e-8 and np.ptp(q) > 0, f"max gap with Q {gap:.2e} over k=0..8")


def test_criterion_04_exact_transplantation(fano):
    rep = fano.transplant_report(range(9))
    tw = fano.intertwiner
    exact = all(
        np.array_equal(tw.matrix @ tw.source.matrix(g), tw.target.matrix(g) @ tw.matrix)
        for g in fano.scenario.G.generators
    )
    ok = rep["max_residual"] < 1e-10 and exact and rep["integer_residual_all_elements"] == 0
    record(4, ok, f"max residual {rep['max_residual']:.2e}; integer identity exact on generators: {exact}")


def test_criterion_05_quantum_equivalence(fano):
    ks = range(1, 9)
    rep = fano.quantum(ks)
    R1, _ = fano.curvature()
    affine = 0.0
    for k, e1 in zip(rep.ks, rep.eigenvalues_1):
        d = eigenvalues(build_operator(fano.m1, fano.bundle1[0], k))
        affine = max(affine, float(np.abs(e1 - (d - 1 / 3) / (2 * k * k)).max()))
    gap = max(rep.gaps)
    ok = rep.verdict and gap < 1e-10 and affine < 1e-12 and np.all(R1.values == -2.0)
    record(5, ok, f"max quantum gap {gap:.2e} for k=1..8; affine law deviation {affine:.2e}")


def test_criterion_06_brooks_pair(brooks_path):
    pipe = Pipeline(load_scenario(brooks_path))
    s = pipe.scenario
    index = s.hatG.order // s.G.order
    conj = {s.tau * h * s.tau.inverse() for h in s.gamma1.elements} == set(s.gamma2.elements)
    rep = pipe.brooks(range(9))
    ok = (
        index == 2
        and conj
        and not rep["connections_equal"]
        and rep["max_gap"] < 1e-8
        and rep["max_holonomy_difference"] >= 0.1
    )
    record(6, ok, f"[hatG:G]={index} max gap {rep['max_gap']:.2e}; "
                  f"max holonomy difference {rep['max_holonomy_difference']:.3f} rad")


def test_criterion_07_negative_control(scenario_dir):
    path = scenario_dir / "s4_control" / "scenario.json"
    s = load_scenario(path)
    ac = almost_conjugate(s.G, s.gamma1, s.gamma2).verdict
    worst = []
    for seed in range(5):
        pipe = Pipeline(s, seed=seed)
        worst.append(max(x["gap"] for x in pipe.compare(range(9), with_potential=False)))
    ok = not ac and any(w > 1e-6 for w in worst)
    record(7, ok, f"almost_conjugate={ac}; per-seed max gaps {[f'{w:.2e}' for w in worst]}")


@pytest.mark.parametrize("name", ["S3", "S4", "D4", "Q8", "S3xS3"])
def test_criterion_08_character_criterion(name):
    G = {
        "S3": lambda: symmetric_group(3),
        "S4": lambda: symmetric_group(4),
        "D4": dihedral_group_d4,
        "Q8": quaternion_group,
        "S3xS3": s3_x_s3,
    }[name]()
    els = G.elements
    subs = {closure([a, b], G.identity) for a, b in product(els, repeat=2)}
    subs = sorted(subs, key=lambda s: (len(s), sorted(p.images for p in s)))
    chars = {s: character(els, s) for s in subs}
    groups = {s: Subgroup.from_elements(G, s) for s in subs}
    mismatches = 0
    pairs = 0
    for i, a in enumerate(subs):
        for b in subs[i:]:
            pairs += 1
            if almost_conjugate(G, groups[a], groups[b]).verdict != (chars[a] == chars[b]):
                mismatches += 1
    RESULTS.setdefault("8parts", []).append(f"{name}:{len(subs)} subgroups/{pairs} pairs")
    if mismatches:
        RESULTS.setdefault("8fail", []).append(name)
    ok_all = not RESULTS.get("8fail")
    record(8, mismatches == 0 and ok_all, f"character criterion agrees on every pair ({', '.join(RESULTS['8parts'])})")


def test_criterion_09_closed_form_cycles():
    rng = np.random.default_rng(2024)
    worst = 0.0
    for n in range(1, 13):
        theta = Fraction(int(rng.integers(0, 360)), 360)  # per-edge phase, flux phi = 2 pi n theta
        g = BaseGraph.cycle(n) if n > 1 else BaseGraph.from_pairs(1, [(0, 0)])
        conn = ConnectionData({e.id: theta for e in g.edges})
        phi = 2 * math.pi * n * float(theta)
        for k in range(9):
            expect = np.sort([2 - 2 * math.cos((2 * math.pi * j + k * phi) / n) for j in range(n)])
            got = eigenvalues(build_operator(g, conn, k))
            worst = max(worst, float(np.abs(got - expect).max()))
    record(9, worst < 1e-10, f"max deviation from closed form {worst:.2e} (n=1..12, k=0..8)")


def test_criterion_10_gauge_and_power_laws(fano):
    m1 = fano.m1
    conn = fano.bundle1[0]
    rng = np.random.default_rng(10)
    spec_dev, holo_ok = 0.0, True
    graphs = [(BaseGraph.cycle(6), None), (m1, conn)]
    for trial in range(100):
        g, c = graphs[trial % 2]
        if c is None:
            c = ConnectionData({e.id: Fraction(int(rng.integers(0, 360)), 360) for e in g.edges})
        gauge = [Fraction(int(x), 360) for x in rng.integers(0, 360, size=g.vertex_count)]
        c2 = gauge_transform(g, c, gauge)
        k = int(rng.integers(0, 9))
        a = eigenvalues(build_operator(g, c, k))
        b = eigenvalues(build_operator(g, c2, k))
        spec_dev = max(spec_dev, float(np.abs(a - b).max()))
        h1, h2 = holonomy_report(g, c, k), holonomy_report(g, c2, k)
        holo_ok &= [x.turn for x in h1.cycles] == [x.turn for x in h2.cycles]
    power_ok = True
    for k in range(9):
        ck = conn.power(k)
        power_ok &= all(ck.phases[e] == (k * p) % 1 for e, p in conn.phases.items())
        h1, hk = holonomy_report(m1, conn), holonomy_report(m1, conn, k)
        power_ok &= all((k * a.turn - b.turn) % 1 == 0 for a, b in zip(h1.cycles, hk.cycles))
    ok = spec_dev < 1e-12 and holo_ok and power_ok
    record(10, ok, f"100 gauges: spectral deviation {spec_dev:.2e}, holonomy fixed={holo_ok}; power law exact={power_ok}")
