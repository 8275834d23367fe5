"""Command line entry point ``sunada-lab``.

Exit codes: 0 verified, 1 verdict negative, 2 error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .covers import connectivity, check_free_action
from .errors import SunadaLabError, ValidationFailed
from .groups import search_gassmann
from .io import graph_to_dict, load_base_graph, load_group, spectra_tsv_text, write_json
from .isomorphism import graph_isomorphic
from .scenario import (
    DEFAULT_K,
    DEFAULT_QUANTUM_K,
    DEFAULT_TOL,
    Pipeline,
    load_scenario,
    parse_k_range,
    run_scenario,
)

OK, NEGATIVE, ERROR = 0, 1, 2


def _k_list(text, default):
    lo, hi = parse_k_range(text) if text is not None else default
    return list(range(lo, hi + 1))


def _emit(args, payload: dict, tsv: str | None = None, name: str = "result") -> None:
    if args.format == "tsv" and tsv is not None:
        text = tsv
    else:
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        suffix = "tsv" if args.format == "tsv" and tsv is not None else "json"
        (out / f"{name}.{suffix}").write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def _pipeline(args) -> Pipeline:
    if not args.scenario:
        raise ValidationFailed("scenario", "--scenario is required")
    return Pipeline(load_scenario(args.scenario), seed=args.seed, tol=args.tol)


# ------------------------------------------------------------------ commands


def cmd_gassmann_verify(args) -> int:
    pipe = _pipeline(args)
    rep = pipe.gassmann
    _emit(args, rep, name="gassmann")
    return OK if rep["almost_conjugate"] else NEGATIVE


def cmd_gassmann_search(args) -> int:
    if args.group:
        G = load_group(args.group)
    elif args.scenario:
        G = load_scenario(args.scenario).G
    else:
        raise ValidationFailed("group", "give --group or --scenario")
    pairs = search_gassmann(G, max_generators=args.max_generators)
    payload = {
        "group": G.name,
        "order": G.order,
        "pairs": [
            {
                "orders": [a.order, b.order],
                "gamma1": [list(g.images) for g in a.generators],
                "gamma2": [list(g.images) for g in b.generators],
            }
            for a, b in pairs
        ],
    }
    _emit(args, payload, name="gassmann_search")
    return OK if pairs else NEGATIVE


def cmd_cover_build(args) -> int:
    pipe = _pipeline(args)
    s = pipe.scenario
    summary = pipe.cover_summary()
    payload = {"summary": summary, "M1": graph_to_dict(pipe.m1), "M2": graph_to_dict(pipe.m2)}
    if args.out:
        for key in ("M1", "M2"):
            write_json(Path(args.out) / f"{key}.json", payload[key])
    _emit(args, payload, name="cover")
    ok = all(check_free_action(s.vg, H) for H in (s.gamma1, s.gamma2))
    return OK if ok else NEGATIVE


def cmd_spectra(args) -> int:
    pipe = _pipeline(args)
    rows = pipe.spectra(_k_list(args.k, DEFAULT_K), with_potential=not args.no_potential)
    payload = {"levels": [{"k": k, "M1": a.tolist(), "M2": b.tolist()} for k, a, b in rows]}
    tsv = "# M1\n" + spectra_tsv_text([(k, a) for k, a, _ in rows]) + "# M2\n" + spectra_tsv_text(
        [(k, b) for k, _, b in rows]
    )
    _emit(args, payload, tsv, name="spectra")
    return OK


def cmd_compare(args) -> int:
    pipe = _pipeline(args)
    levels = pipe.compare(_k_list(args.k, DEFAULT_K), with_potential=not args.no_potential)
    equal = all(x["equal"] for x in levels)
    tsv = "k\tgap\tequal\n" + "".join(f"{x['k']}\t{x['gap']:.3e}\t{str(x['equal']).lower()}\n" for x in levels)
    _emit(args, {"tol": pipe.tol, "levels": levels, "equal": equal}, tsv, name="compare")
    return OK if equal else NEGATIVE


def cmd_transplant(args) -> int:
    pipe = _pipeline(args)
    if not pipe.gassmann["almost_conjugate"]:
        _emit(args, {"verified": False, "reason": "subgroups are not almost conjugate"}, name="transplant")
        return NEGATIVE
    rep = pipe.transplant_report(_k_list(args.k, DEFAULT_K))
    _emit(args, rep, name="transplant")
    return OK if rep["verified"] else NEGATIVE


def cmd_quantum(args) -> int:
    pipe = _pipeline(args)
    rep = pipe.quantum(_k_list(args.k, DEFAULT_QUANTUM_K))
    tsv = "k\tgap\n" + "".join(f"{k}\t{g:.3e}\n" for k, g in zip(rep.ks, rep.gaps))
    _emit(args, rep.to_dict(), tsv, name="quantum")
    return OK if rep.verdict else NEGATIVE


def cmd_brooks(args) -> int:
    pipe = _pipeline(args)
    rep = pipe.brooks(_k_list(args.k, DEFAULT_K))
    rep.pop("spectra")
    _emit(args, rep, name="brooks")
    ok = rep["isospectral"]
    if pipe.scenario.raw.get("connection", {}).get("break_tau"):
        ok = ok and rep["max_holonomy_difference"] > 0
    return OK if ok else NEGATIVE


def cmd_isocheck(args) -> int:
    if args.graph_a and args.graph_b:
        a, b = load_base_graph(args.graph_a), load_base_graph(args.graph_b)
    elif args.scenario:
        pipe = _pipeline(args)
        a, b = pipe.m1, pipe.m2
    else:
        raise ValidationFailed("graph_a", "give --graph-a and --graph-b, or --scenario")
    cert = graph_isomorphic(a, b)
    payload = cert.to_dict()
    payload["components"] = [connectivity(a), connectivity(b)]
    _emit(args, payload, name="isocheck")
    return OK if cert.isomorphic else NEGATIVE


def cmd_run(args) -> int:
    if not args.scenario:
        raise ValidationFailed("scenario", "--scenario is required")
    report, code = run_scenario(args.scenario, k_range=args.k, tol=args.tol, seed=args.seed, out=args.out)
    summary = {
        "scenario": report["scenario"],
        "verified": report["verified"],
        "almost_conjugate": report["gassmann"]["almost_conjugate"],
        "max_gap": max(x["gap"] for x in report["schrodinger"]["levels"]),
    }
    sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return code


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--scenario", metavar="PATH")
    common.add_argument("--k", metavar="LO..HI", help="k range (default 0..8, quantum 1..8)")
    common.add_argument("--tol", type=float, default=None, help=f"spectral tolerance (default {DEFAULT_TOL:g})")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--format", choices=("json", "tsv"), default="json")

    parser = argparse.ArgumentParser(prog="sunada-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gassmann", help="almost-conjugacy checks")
    gsub = g.add_subparsers(dest="action", required=True)
    gsub.add_parser("verify", parents=[common]).set_defaults(func=cmd_gassmann_verify)
    gs = gsub.add_parser("search", parents=[common])
    gs.add_argument("--group", metavar="PATH")
    gs.add_argument("--max-generators", type=int, default=2)
    gs.set_defaults(func=cmd_gassmann_search)

    c = sub.add_parser("cover", help="derived covers and quotients")
    csub = c.add_subparsers(dest="action", required=True)
    csub.add_parser("build", parents=[common]).set_defaults(func=cmd_cover_build)

    for name, fn in (("spectra", cmd_spectra), ("compare", cmd_compare)):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--no-potential", action="store_true", help="drop Q (bundle Laplacian only)")
        p.set_defaults(func=fn)
    sub.add_parser("transplant", parents=[common]).set_defaults(func=cmd_transplant)
    sub.add_parser("quantum", parents=[common]).set_defaults(func=cmd_quantum)
    sub.add_parser("brooks", parents=[common]).set_defaults(func=cmd_brooks)
    iso = sub.add_parser("isocheck", parents=[common])
    iso.add_argument("--graph-a", metavar="PATH")
    iso.add_argument("--graph-b", metavar="PATH")
    iso.set_defaults(func=cmd_isocheck)
    sub.add_parser("run", parents=[common], help="full pipeline with report files").set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return OK if exc.code == 0 else ERROR
    try:
        return args.func(args)
    except ValidationFailed as exc:
        print(f"error: invalid {exc.field}: {exc.message}", file=sys.stderr)
        return ERROR
    except (SunadaLabError, OSError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return ERROR


if __name__ == "__main__":
    sys.exit(main())
