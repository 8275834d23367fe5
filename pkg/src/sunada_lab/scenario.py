"""Scenario files, seeded invariant data and the end-to-end verification pipeline."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np

from . import __version__
from .covers import (
    QuotientGraph,
    VoltageGraph,
    check_free_action,
    connectivity,
    quotient,
    sigma_map,
)
from .errors import SubgroupNotContained, SunadaLabError, ValidationFailed
from .groups import (
    PermGroup,
    Permutation,
    Subgroup,
    almost_conjugate,
    build_intertwiner,
    full_subgroup,
    is_conjugate_subgroups,
    unitarize_intertwiner,
)
from .io import (
    file_hash,
    load_connection,
    load_field,
    load_group,
    load_subgroup,
    load_voltage_graph,
    read_json,
    write_json,
    write_spectra_tsv,
)
from .isomorphism import IsoCertificate, graph_isomorphic
from .magnetic import (
    ConnectionData,
    HolonomyReport,
    Potential,
    build_operator,
    compare_spectra,
    descend_connection,
    descend_potential,
    eigenvalues,
    holonomy_report,
    intertwining_residual,
    pullback_by_sigma,
    pullback_potential_by_sigma,
    sweep,
    transplant_matrix,
)
from .quantum import CurvatureField, QuantumSpectrumReport, quantum_equivalence

DEFAULT_K = (0, 8)
DEFAULT_QUANTUM_K = (1, 8)
DEFAULT_TOL = 1e-8
RESIDUAL_TOL = 1e-10
MAX_DEN = 360
CONNECTION_MODES = ("random", "zero", "files")
POTENTIAL_MODES = ("random", "zero", "file")
CURVATURE_MODES = ("constant", "file", "quotients")


@dataclass
class Scenario:
    path: Path
    raw: dict
    hatG: PermGroup
    G: Subgroup
    gamma1: Subgroup
    gamma2: Subgroup
    tau: Permutation | None
    vg: VoltageGraph
    k_range: tuple[int, int]
    tol: float
    seed: int
    output: Path | None
    inputs: dict[str, str] = field(default_factory=dict)  # field -> relative file name

    @property
    def name(self) -> str:
        return self.raw.get("name", self.path.stem)

    def resolve(self, rel: str) -> Path:
        return (self.path.parent / rel).resolve()

    def input_hashes(self) -> dict[str, str]:
        out = {"scenario": file_hash(self.path)}
        for key, rel in sorted(self.inputs.items()):
            out[key] = file_hash(self.resolve(rel))
        return out


def _require(doc: dict, key: str):
    if key not in doc or doc[key] is None:
        raise ValidationFailed(key, "required field is missing")
    return doc[key]


def _load(fieldname: str, fn, *args):
    try:
        return fn(*args)
    except ValidationFailed:
        raise
    except SubgroupNotContained as exc:
        raise ValidationFailed(fieldname, f"not a subgroup: {exc}") from exc
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError, SunadaLabError) as exc:
        raise ValidationFailed(fieldname, str(exc)) from exc


def parse_k_range(value) -> tuple[int, int]:
    """Accept ``"LO..HI"``, ``[LO, HI]`` or a single integer."""
    if isinstance(value, str):
        if ".." in value:
            lo, hi = value.split("..", 1)
            lo, hi = int(lo), int(hi)
        else:
            lo = hi = int(value)
    elif isinstance(value, int):
        lo = hi = value
    else:
        lo, hi = (int(x) for x in value)
    if lo > hi:
        raise ValueError(f"empty k range {lo}..{hi}")
    return lo, hi


def load_scenario(path) -> Scenario:
    path = Path(path).resolve()
    try:
        doc = read_json(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationFailed("scenario", str(exc)) from exc
    base_dir = path.parent
    inputs: dict[str, str] = {}

    def ref(key):
        rel = _require(doc, key)
        inputs[key] = rel
        return base_dir / rel

    hatG = _load("group", load_group, ref("group"))
    if doc.get("G"):
        G = _load("G", load_subgroup, ref("G"), hatG)
        G.name = G.name or "G"
    else:
        G = full_subgroup(hatG)
    gamma1 = _load("gamma1", load_subgroup, ref("gamma1"), G)
    gamma2 = _load("gamma2", load_subgroup, ref("gamma2"), G)

    tau = None
    if doc.get("tau") is not None:
        tau = _load("tau", Permutation, doc["tau"])
        if tau.degree != hatG.degree:
            raise ValidationFailed("tau", f"degree {tau.degree} does not match group degree {hatG.degree}")
        if tau not in hatG:
            raise ValidationFailed("tau", "tau is not an element of the deck group")
        ti = tau.inverse()
        if any(tau * g * ti not in G for g in G.generators):
            raise ValidationFailed("tau", "tau does not normalize G")
        if {tau * h * ti for h in gamma1.elements} != set(gamma2.elements):
            raise ValidationFailed("tau", "tau Gamma1 tau^-1 != Gamma2")

    vg_path = ref("voltage_graph")
    vg = _load("voltage_graph", load_voltage_graph, vg_path, hatG)
    vg_group = read_json(vg_path).get("group")
    if vg_group is not None and (vg_path.parent / vg_group).resolve() != (base_dir / inputs["group"]).resolve():
        raise ValidationFailed("voltage_graph.group", "voltage graph refers to a different group file")

    k_range = _load("k_range", parse_k_range, doc.get("k_range", list(DEFAULT_K)))
    tol = float(doc.get("tol", DEFAULT_TOL))
    if not tol > 0:
        raise ValidationFailed("tol", "tolerance must be positive")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int):
        raise ValidationFailed("seed", "seed must be an integer")

    conn = doc.get("connection", {"mode": "random"})
    if conn.get("mode", "random") not in CONNECTION_MODES:
        raise ValidationFailed("connection.mode", f"expected one of {CONNECTION_MODES}")
    if conn.get("mode") == "files":
        inputs["connection.base"] = _require(conn, "base")
        if conn.get("mid"):
            inputs["connection.mid"] = conn["mid"]
    if not 1 <= int(conn.get("max_den", MAX_DEN)) <= MAX_DEN:
        raise ValidationFailed("connection.max_den", f"denominator bound must lie in 1..{MAX_DEN}")
    pot = doc.get("potential", {"mode": "random"})
    if pot.get("mode", "random") not in POTENTIAL_MODES:
        raise ValidationFailed("potential.mode", f"expected one of {POTENTIAL_MODES}")
    if pot.get("mode") == "file":
        inputs["potential.path"] = _require(pot, "path")
    curv = doc.get("curvature", {"mode": "constant"})
    if curv.get("mode", "constant") not in CURVATURE_MODES:
        raise ValidationFailed("curvature.mode", f"expected one of {CURVATURE_MODES}")
    if curv.get("mode") == "file":
        inputs["curvature.path"] = _require(curv, "path")
    if curv.get("mode") == "quotients":
        inputs["curvature.m1"] = _require(curv, "m1")
        inputs["curvature.m2"] = _require(curv, "m2")
    for key, rel in inputs.items():
        if not (base_dir / rel).is_file():
            raise ValidationFailed(key, f"file not found: {rel}")

    out = doc.get("output")
    return Scenario(
        path=path,
        raw=doc,
        hatG=hatG,
        G=G,
        gamma1=gamma1,
        gamma2=gamma2,
        tau=tau,
        vg=vg,
        k_range=k_range,
        tol=tol,
        seed=seed,
        output=(base_dir / out) if out else None,
        inputs=inputs,
    )


# ----------------------------------------------------------- invariant data


@dataclass
class InvariantData:
    """Connection and potential on ``G \\ cover``, split as base pullback plus mid layer."""

    base_phases: ConnectionData
    mid_phases: ConnectionData | None
    mid_potential: np.ndarray
    seed: int


def _random_turns(rng, keys, max_den):
    return {k: Fraction(int(rng.integers(0, max_den)), max_den) for k in keys}


def tau_asymmetry(mid: QuotientGraph, mid_phases: ConnectionData, tau: Permutation) -> float:
    """Largest holonomy change (radians) of the mid layer under the sheet swap by tau."""
    swapped = pullback_by_sigma(mid_phases, tau, mid, mid)
    return max(holonomy_report(mid, mid_phases).differences(holonomy_report(mid, swapped)), default=0.0)


def generate_invariant_data(scenario: Scenario, seed: int | None = None, mid: QuotientGraph | None = None) -> InvariantData:
    """Seeded G-invariant data: everything is drawn on the base or on ``G \\ cover``.

    Connection options: ``max_den`` (phases are ``j / max_den`` turns) and
    ``break_tau`` (mid layer must change holonomy under tau; the seed is
    advanced until it does).
    """
    seed = scenario.seed if seed is None else seed
    mid = mid if mid is not None else quotient(scenario.vg, scenario.G)
    base = scenario.vg.base
    cspec = scenario.raw.get("connection", {"mode": "random"})
    pspec = scenario.raw.get("potential", {"mode": "random"})
    cmode, pmode = cspec.get("mode", "random"), pspec.get("mode", "random")
    layered = mid.index > 1
    max_den = int(cspec.get("max_den", MAX_DEN))
    break_tau = bool(cspec.get("break_tau", False))
    if break_tau and scenario.tau is None:
        raise ValidationFailed("connection.break_tau", "requires tau")

    used = seed
    if cmode == "zero":
        base_phases = ConnectionData.zero(base)
        mid_phases = ConnectionData.zero(mid) if layered else None
    elif cmode == "files":
        base_phases = _load("connection.base", load_connection, scenario.resolve(cspec["base"]))
        mid_phases = None
        if cspec.get("mid"):
            mid_phases = _load("connection.mid", load_connection, scenario.resolve(cspec["mid"]))
        for e in base.edges:
            if e.id not in base_phases.phases:
                raise ValidationFailed("connection.base", f"missing phase for edge {e.id}")
        if mid_phases is not None:
            for e in mid.edges:
                if e.id not in mid_phases.phases:
                    raise ValidationFailed("connection.mid", f"missing phase for edge {e.id}")
    else:
        while True:
            rng_base, rng_mid, _ = (np.random.default_rng(s) for s in np.random.SeedSequence(used).spawn(3))
            base_phases = ConnectionData(_random_turns(rng_base, [e.id for e in base.edges], max_den))
            mid_phases = None
            if layered:
                turns = _random_turns(rng_mid, [e.id for e in mid.edges], max_den)
                if scenario.tau is not None and not break_tau:
                    _, emap = sigma_map(mid, mid, scenario.tau)
                    for eid in sorted(turns):
                        turns[emap[eid]] = turns[eid] if emap[eid] > eid else turns[emap[eid]]
                mid_phases = ConnectionData(turns)
            if not break_tau or tau_asymmetry(mid, mid_phases, scenario.tau) > 0:
                break
            used += 1

    if pmode == "zero":
        q = np.zeros(mid.vertex_count)
    elif pmode == "file":
        q = np.array(_load("potential.path", load_field, scenario.resolve(pspec["path"]), mid.vertex_count, "q"))
    else:
        _, _, rng_q = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3))
        q = rng_q.uniform(-1.0, 1.0, size=mid.vertex_count)
    return InvariantData(base_phases, mid_phases, q, used)


# ------------------------------------------------------------------ pipeline


def _k_list(k_range) -> list[int]:
    lo, hi = k_range
    return list(range(lo, hi + 1))


class Pipeline:
    """Lazily evaluated verification steps for one scenario and seed."""

    def __init__(self, scenario: Scenario, seed: int | None = None, tol: float | None = None):
        self.scenario = scenario
        self.seed = scenario.seed if seed is None else seed
        self.tol = scenario.tol if tol is None else tol
        self.timings: dict[str, float] = {}

    def _timed(self, key, fn):
        t0 = time.perf_counter()
        out = fn()
        self.timings[key] = self.timings.get(key, 0.0) + time.perf_counter() - t0
        return out

    # --- structure
    @cached_property
    def m1(self) -> QuotientGraph:
        return quotient(self.scenario.vg, self.scenario.gamma1)

    @cached_property
    def m2(self) -> QuotientGraph:
        return quotient(self.scenario.vg, self.scenario.gamma2)

    @cached_property
    def mid(self) -> QuotientGraph:
        return quotient(self.scenario.vg, self.scenario.G)

    @cached_property
    def gassmann(self) -> dict:
        s = self.scenario

        def run():
            rep = almost_conjugate(s.G, s.gamma1, s.gamma2)
            out = rep.to_dict()
            out["conjugate"] = is_conjugate_subgroups(s.G, s.gamma1, s.gamma2)
            out["order_G"] = s.G.order
            out["orders"] = [s.gamma1.order, s.gamma2.order]
            if rep.verdict:
                assert s.gamma1.order == s.gamma2.order
            if out["conjugate"]:
                assert rep.verdict
            return out

        return self._timed("gassmann", run)

    def cover_summary(self) -> dict:
        s = self.scenario
        out = {}
        for key, g, H in (("M1", self.m1, s.gamma1), ("M2", self.m2, s.gamma2), ("mid", self.mid, s.G)):
            out[key] = {
                "vertices": g.vertex_count,
                "edges": len(g.edges),
                "index": g.index,
                "components": connectivity(g),
                "free_action": check_free_action(s.vg, H),
            }
        out["cover"] = {"vertices": s.vg.base.vertex_count * s.hatG.order, "edges": len(s.vg.base.edges) * s.hatG.order}
        return out

    @cached_property
    def isomorphism(self) -> IsoCertificate:
        return self._timed("isomorphism", lambda: graph_isomorphic(self.m1, self.m2))

    # --- data
    @cached_property
    def data(self) -> InvariantData:
        return generate_invariant_data(self.scenario, self.seed, self.mid)

    @cached_property
    def layered(self) -> bool:
        return self.data.mid_phases is not None

    def _descend(self, graph):
        d = self.data
        conn = descend_connection(graph, d.base_phases, d.mid_phases, self.mid if self.layered else None)
        return conn, descend_potential(graph, d.mid_potential, self.mid)

    @cached_property
    def bundle1(self) -> tuple[ConnectionData, Potential]:
        return self._descend(self.m1)

    @cached_property
    def bundle2(self) -> tuple[ConnectionData, Potential]:
        return self._descend(self.m2)

    # --- spectra
    def spectra(self, ks, with_potential: bool = True) -> list[tuple[int, np.ndarray, np.ndarray]]:
        (c1, q1), (c2, q2) = self.bundle1, self.bundle2
        if not with_potential:
            q1 = q2 = None

        def level(k):
            e1 = eigenvalues(build_operator(self.m1, c1, k, q1))
            e2 = eigenvalues(build_operator(self.m2, c2, k, q2))
            return k, e1, e2

        return self._timed("spectra", lambda: sweep(level, ks))

    def compare(self, ks, with_potential: bool = True) -> list[dict]:
        return [
            {"k": k, "gap": compare_spectra(e1, e2, self.tol).max_gap, "equal": compare_spectra(e1, e2, self.tol).equal}
            for k, e1, e2 in self.spectra(ks, with_potential)
        ]

    # --- transplantation
    @cached_property
    def intertwiner(self):
        s = self.scenario
        return self._timed("intertwiner", lambda: build_intertwiner(s.G, s.gamma1, s.gamma2, seed=self.seed))

    @cached_property
    def transplant(self) -> np.ndarray:
        return transplant_matrix(self.intertwiner, self.m1, self.m2)

    def transplant_report(self, ks) -> dict:
        s = self.scenario
        tw = self.intertwiner
        (c1, q1), (c2, q2) = self.bundle1, self.bundle2
        P = self.transplant

        def level(k):
            o1 = build_operator(self.m1, c1, k, q1)
            o2 = build_operator(self.m2, c2, k, q2)
            return {"k": k, "residual": intertwining_residual(P, o1, o2)}

        levels = self._timed("transplant", lambda: sweep(level, ks))
        U = unitarize_intertwiner(tw)
        gen_res = [tw.residual(g) for g in s.G.generators]
        all_res = max(tw.residual(g) for g in s.G.elements)
        return {
            "matrix": tw.matrix.tolist(),
            "intertwiner_seed": tw.seed,
            "attempts": tw.attempts,
            "integer_residual_generators": gen_res,
            "integer_residual_all_elements": all_res,
            "orthogonality_defect": float(np.abs(U.T @ U - np.eye(U.shape[0])).max()),
            "levels": levels,
            "max_residual": max(x["residual"] for x in levels),
            "verified": all(r == 0 for r in gen_res) and all_res == 0
            and all(x["residual"] < RESIDUAL_TOL for x in levels),
        }

    # --- holonomy
    def holonomy(self) -> dict[str, HolonomyReport]:
        return {"M1": holonomy_report(self.m1, self.bundle1[0]), "M2": holonomy_report(self.m2, self.bundle2[0])}

    # --- quantum
    def curvature(self) -> tuple[CurvatureField, CurvatureField]:
        spec = self.scenario.raw.get("curvature", {"mode": "constant"})
        mode = spec.get("mode", "constant")
        if mode == "constant":
            value = float(spec.get("value", -2.0))
            return CurvatureField.constant(self.m1.vertex_count, value), CurvatureField.constant(self.m2.vertex_count, value)
        if mode == "file":
            vals = _load("curvature.path", load_field, self.scenario.resolve(spec["path"]), self.mid.vertex_count, "r")
            return (
                CurvatureField(descend_potential(self.m1, vals, self.mid).values),
                CurvatureField(descend_potential(self.m2, vals, self.mid).values),
            )
        r1 = _load("curvature.m1", load_field, self.scenario.resolve(spec["m1"]), self.m1.vertex_count, "r")
        r2 = _load("curvature.m2", load_field, self.scenario.resolve(spec["m2"]), self.m2.vertex_count, "r")
        return CurvatureField(r1), CurvatureField(r2)

    def quantum(self, ks) -> QuantumSpectrumReport:
        R1, R2 = self.curvature()
        c1, c2 = self.bundle1[0], self.bundle2[0]
        return self._timed(
            "quantum",
            lambda: quantum_equivalence(self.m1, c1, self.m2, c2, ks, R1, R2, mid=self.mid, tol=self.tol),
        )

    # --- same-bundle pair via tau
    def brooks(self, ks) -> dict:
        s = self.scenario
        if s.tau is None:
            raise ValidationFailed("tau", "the brooks step needs tau")
        (c1, q1), (c2, q2) = self.bundle1, self.bundle2
        pc = pullback_by_sigma(c2, s.tau, self.m1, self.m2)
        pq = pullback_potential_by_sigma(q2, s.tau, self.m1, self.m2)

        def level(k):
            e1 = eigenvalues(build_operator(self.m1, c1, k, q1))
            e2 = eigenvalues(build_operator(self.m1, pc, k, pq))
            return {"k": k, "gap": compare_spectra(e1, e2, self.tol).max_gap}, e1, e2

        rows = self._timed("brooks", lambda: sweep(level, ks))
        h1 = holonomy_report(self.m1, c1)
        h2 = holonomy_report(self.m1, pc)
        diffs = h1.differences(h2)
        changed = [i for i, d in enumerate(diffs) if d > 0]
        return {
            "levels": [r[0] for r in rows],
            "spectra": [(r[0]["k"], r[1], r[2]) for r in rows],
            "max_gap": max(r[0]["gap"] for r in rows),
            "isospectral": all(r[0]["gap"] <= self.tol for r in rows),
            "connections_equal": pc == c1,
            "holonomy_1": h1.to_dict(),
            "holonomy_sigma": h2.to_dict(),
            "holonomy_differences": diffs,
            "max_holonomy_difference": max(diffs, default=0.0),
            "cycles_with_different_holonomy": changed,
            "potentials_equal": bool(np.array_equal(pq.values, q1.values)),
        }


# ------------------------------------------------------------------ reports


def _spectra_block(rows) -> list[dict]:
    return [{"k": k, "M1": e1.tolist(), "M2": e2.tolist()} for k, e1, e2 in rows]


def run_scenario(path, k_range=None, tol=None, seed=None, out=None) -> tuple[dict, int]:
    """Run every check for a scenario; returns ``(report, exit_code)``.

    Writes ``report.json``, ``timings.json`` and TSV spectra when an output
    directory is known.
    """
    scenario = load_scenario(path)
    pipe = Pipeline(scenario, seed=seed, tol=tol)
    ks = _k_list(parse_k_range(k_range) if k_range is not None else scenario.k_range)
    qks = [k for k in ks if k >= 1]

    gassmann = pipe.gassmann
    bundle_rows = pipe.spectra(ks, with_potential=False)
    schr_rows = pipe.spectra(ks, with_potential=True)
    bundle = [{"k": k, "gap": compare_spectra(a, b).max_gap} for k, a, b in bundle_rows]
    schr = [{"k": k, "gap": compare_spectra(a, b).max_gap} for k, a, b in schr_rows]
    report: dict = {
        "tool": {"name": "sunada_lab", "version": __version__},
        "scenario": scenario.name,
        "inputs": scenario.input_hashes(),
        "seeds": {"requested": pipe.seed, "data": pipe.data.seed},
        "tol": pipe.tol,
        "k": ks,
        "gassmann": gassmann,
        "cover": pipe.cover_summary(),
        "isomorphism": pipe.isomorphism.to_dict(),
        "bundle": {"levels": bundle, "equal": all(r["gap"] <= pipe.tol for r in bundle),
                   "spectra": _spectra_block(bundle_rows)},
        "schrodinger": {"levels": schr, "equal": all(r["gap"] <= pipe.tol for r in schr),
                        "spectra": _spectra_block(schr_rows)},
        "holonomy": {k: v.to_dict() for k, v in pipe.holonomy().items()},
    }
    verdicts = [gassmann["almost_conjugate"], report["bundle"]["equal"], report["schrodinger"]["equal"]]
    if gassmann["almost_conjugate"]:
        report["transplant"] = pipe.transplant_report(ks)
        verdicts.append(report["transplant"]["verified"])
    if qks:
        q = pipe.quantum(qks)
        report["quantum"] = q.to_dict()
        verdicts.append(q.verdict)
    if scenario.tau is not None:
        b = pipe.brooks(ks)
        brooks_rows = b.pop("spectra")
        report["brooks"] = b
        verdicts.append(b["isospectral"])
        if scenario.raw.get("connection", {}).get("break_tau"):
            verdicts.append(b["max_holonomy_difference"] > 0)
    report["verified"] = all(verdicts)

    out_dir = Path(out) if out is not None else scenario.output
    if out_dir is not None:
        write_json(out_dir / "report.json", report)
        write_json(out_dir / "timings.json", {k: round(v, 6) for k, v in sorted(pipe.timings.items())})
        write_spectra_tsv(out_dir / "spectra_M1.tsv", [(k, e1) for k, e1, _ in schr_rows])
        write_spectra_tsv(out_dir / "spectra_M2.tsv", [(k, e2) for k, _, e2 in schr_rows])
        if "quantum" in report:
            write_json(out_dir / "quantum.json", report["quantum"])
        if scenario.tau is not None:
            write_spectra_tsv(out_dir / "spectra_M1_sigma.tsv", [(k, e2) for k, _, e2 in brooks_rows])
    return report, 0 if report["verified"] else 1
