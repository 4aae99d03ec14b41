# qherm/cli.py
from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Any, Callable, Dict, List, Optional, Tuple

from pydantic import ValidationError
from rich.console import Console
from rich.logging import RichHandler

from .collineation import (
    bm_elation_group,
    check_sharp_transitivity,
    generate_group,
    linear_stabilizer_generators,
)
from .config import EngineConfig, RunConfig, load_engine_config
from .equivalence import (
    canonical_witness,
    find_equivalence,
    parameter_class_count,
    stabilizer_generators,
    theorem_fast_path,
    verify_stabilizer,
    verify_witness,
)
from .errors import TheoremViolation
from .field import FieldCtx, field_for_q
from .oarray import build_oa, check_simple, verify_strength2
from .reporting import (
    build_census_report,
    build_checks_report,
    build_spectrum_report,
    build_strength_report,
    census_lines,
    field_table,
    key_value_lines,
    records,
)
from .state_io import (
    collineation_line,
    export_oa,
    import_oa,
    save_collineations,
    save_oa_keys,
    save_point_set,
    save_witness,
    write_json,
)
from .variety import (
    PointSet,
    VarietyParams,
    affine_part,
    build_bab,
    build_cone_F,
    build_hermitian_surface,
    build_mab,
    is_quasi_hermitian,
    line_census,
    make_params,
)

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2

Result = Tuple[int, Dict[str, Any]]


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--q", type=int, default=2, help="Subfield order q (2, 4, 8 or 16); points live in PG(3,q^2)")
    p.add_argument("--a", type=int, default=1, help="Parameter a as a GF(q^2) bit-pattern encoding")
    p.add_argument("--b", type=int, default=2, help="Parameter b as a GF(q^2) bit-pattern encoding")
    p.add_argument("--threads", type=int, default=None, help="Worker threads (default: config, else all cores)")
    p.add_argument("--json", dest="json_path", default=None, help="Mirror the report as JSON to this path")
    p.add_argument("--config", default=None, help="Engine defaults YAML (default: qherm/configs/default.yaml)")
    p.add_argument("--verbose", action="store_true", help="Debug logging on stderr")
    p.add_argument("--out", default=None, help="Output path")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    p = argparse.ArgumentParser(
        prog="qherm",
        description="BM quasi-Hermitian varieties of PG(3,q^2), q even: construction, checks, equivalence, orthogonal arrays.",
    )
    p.add_argument("--list-field", type=int, metavar="Q", default=None,
                   help="Print the GF(Q^2) encoding table (encoding, log_omega, in_subfield, trace, norm) and exit")
    groups = p.add_subparsers(dest="group", metavar="{variety,group,equiv,oa}")

    variety = groups.add_parser("variety", help="Point sets M_{a,b}, B_{a,b}, F")
    va = variety.add_subparsers(dest="action", required=True)
    for name, text in (("build", "Build a point set and report its size"),
                       ("check-qh", "Size and hyperplane spectrum against the Hermitian values"),
                       ("census", "Lines contained in the set through each of its points")):
        sp = va.add_parser(name, parents=[common], help=text)
        sp.add_argument("--set", dest="which", default="M", choices=["M", "B", "F", "H"],
                        help="M_{a,b} (default), B_{a,b}, cone F, or the Hermitian surface")

    group = groups.add_parser("group", help="Stabilizer of M_{a,b}")
    ga = group.add_subparsers(dest="action", required=True)
    for name, text in (("order", "Order of the closure of the stabilizer generators"),
                       ("verify", "Closure plus per-element stabilizer checks"),
                       ("sharp", "S = <phi, psi> acts sharply transitively on the affine points")):
        sp = ga.add_parser(name, parents=[common], help=text)
        sp.add_argument("--semilinear", action="store_true", help="Add the field automorphism generator")
        sp.add_argument("--cap", type=int, default=None, help="Abort the closure beyond this many elements")

    equiv = groups.add_parser("equiv", help="Projective equivalence of M_{a,b} and M_{a',b'}")
    ea = equiv.add_subparsers(dest="action", required=True)
    ea.add_parser("reduce", parents=[common], help="Map M_{a,b} onto its canonical form M_{alpha,epsilon}")
    sp = ea.add_parser("find", parents=[common], help="Witness collineation M_{a,b} -> M_{a2,b2}")
    sp.add_argument("--a2", type=int, required=True, help="Target parameter a'")
    sp.add_argument("--b2", type=int, required=True, help="Target parameter b'")
    sp.add_argument("--fast", action="store_true", help="Chain canonical reductions instead of searching")
    ea.add_parser("classes", parents=[common], help="Equivalence classes over all valid (a, b)")

    oa = groups.add_parser("oa", help="Orthogonal arrays OA(q^5, q^4, q, 2)")
    oa_act = oa.add_subparsers(dest="action", required=True)
    oa_act.add_parser("build", parents=[common], help="Build the array; write it with --out")
    sp = oa_act.add_parser("verify", parents=[common], help="Strength-2 check of an array file")
    sp.add_argument("path", help="OA file")
    sp.add_argument("--mode", default="full", choices=["full", "sampled"], help="All column pairs or a seeded sample")
    sp.add_argument("--pairs", type=int, default=None, help="Sampled column pairs")
    sp.add_argument("--seed", type=int, default=None, help="Sampling seed (required with --mode sampled)")
    oa_act.add_parser("export", parents=[common], help="Write the array and its row/column keys (needs --out)")
    return p


def _setup_logging(verbose: bool) -> None:
    handler = RichHandler(console=Console(stderr=True), show_path=False, rich_tracebacks=False)
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING, format="%(message)s",
                        handlers=[handler], force=True)


def _run_config(args: argparse.Namespace, engine: EngineConfig) -> RunConfig:
    pairs = getattr(args, "pairs", None)
    seed = getattr(args, "seed", None)
    cap = getattr(args, "cap", None)
    return RunConfig(
        q=args.q, a=args.a, b=args.b,
        a2=getattr(args, "a2", None), b2=getattr(args, "b2", None),
        mode=getattr(args, "mode", "full"),
        seed=seed,
        pairs=engine.sampled_pairs if pairs is None else pairs,
        cap=engine.group_cap if cap is None else cap,
        out=args.out, json_path=args.json_path,
        threads=args.threads if args.threads is not None else engine.threads,
        semilinear=bool(getattr(args, "semilinear", False)),
    )


def _emit(lines: List[str]) -> None:
    for line in lines:
        print(line)


def _params(ctx: FieldCtx, run: RunConfig) -> VarietyParams:
    return make_params(ctx, run.a, run.b)


def _select_set(ctx: FieldCtx, run: RunConfig, which: str) -> PointSet:
    if which == "F":
        return build_cone_F(ctx)
    if which == "H":
        return build_hermitian_surface(ctx)
    params = _params(ctx, run)
    return build_bab(ctx, params) if which == "B" else build_mab(ctx, params)


# --- variety ----------------------------------------------------------------

def _variety_build(ctx: FieldCtx, run: RunConfig, engine: EngineConfig, args: argparse.Namespace) -> Result:
    s = _select_set(ctx, run, args.which)
    affine = len(affine_part(ctx, s))
    if run.out:
        save_point_set(ctx, s, run.out)
        logger.info("wrote %d points to %s", len(s), run.out)
    payload = {"set": s.label, "size": len(s), "affine": affine, "infinite": len(s) - affine}
    _emit([" ".join(key_value_lines(payload))])
    return EXIT_OK, payload


def _variety_check_qh(ctx: FieldCtx, run: RunConfig, engine: EngineConfig, args: argparse.Namespace) -> Result:
    s = _select_set(ctx, run, args.which)
    report = is_quasi_hermitian(ctx, s, chunk=engine.spectrum_chunk, threads=run.threads)
    _emit([report.summary()])
    if run.out:
        build_spectrum_report(report).to_csv(run.out, index=False)
    payload = {"size": report.size, "expected_size": report.expected_size,
               "spectrum": {str(k): v for k, v in report.spectrum.items()}, "qh": report.is_qh}
    return (EXIT_OK if report.is_qh else EXIT_VIOLATION), payload


def _variety_census(ctx: FieldCtx, run: RunConfig, engine: EngineConfig, args: argparse.Namespace) -> Result:
    s = _select_set(ctx, run, args.which)
    census = line_census(ctx, s, threads=run.threads)
    _emit(list(census_lines(census)))
    if census.plane_ok is not None:
        _emit([f"plane_check={'true' if census.plane_ok else 'false'}"])
    df = build_census_report(census)
    if run.out:
        df.to_csv(run.out, index=False)
    payload = {"classes": records(df), "plane_ok": census.plane_ok}
    return (EXIT_VIOLATION if census.plane_ok is False else EXIT_OK), payload


# --- group ------------------------------------------------------------------

def _group_order(ctx: FieldCtx, run: RunConfig, engine: EngineConfig, args: argparse.Namespace) -> Result:
    params = _params(ctx, run)
    gens = stabilizer_generators(ctx, params, semilinear=run.semilinear, threads=run.threads)
    group = generate_group(ctx, gens, run.cap)
    if run.out:
        save_collineations(ctx, list(group.generators), run.out)
    _emit([str(len(group))])
    return EXIT_OK, {"order": len(group), "linear_order": group.linear_order, "generators": len(group.generators)}


def _group_verify(ctx: FieldCtx, run: RunConfig, engine: EngineConfig, args: argparse.Namespace) -> Result:
    params = _params(ctx, run)
    report = verify_stabilizer(ctx, params, semilinear=run.semilinear, cap=run.cap,
                               chunk=engine.image_chunk, threads=run.threads)
    summary = {
        "order": report.order,
        "expected": report.expected_order,
        "linear_order": report.linear_order,
        "index": report.order // max(report.linear_order, 1),
    }
    _emit([" ".join(key_value_lines(summary))] + key_value_lines(report.checks))
    if run.out:
        build_checks_report({**summary, **report.checks}).to_csv(run.out, index=False)
    return (EXIT_OK if report.ok else EXIT_VIOLATION), {**summary, "checks": report.checks}


def _group_sharp(ctx: FieldCtx, run: RunConfig, engine: EngineConfig, args: argparse.Namespace) -> Result:
    params = _params(ctx, run)
    s_group = generate_group(ctx, linear_stabilizer_generators(ctx, params, parts=("phi", "psi")), run.cap)
    domain = affine_part(ctx, build_mab(ctx, params))
    sharp = check_sharp_transitivity(ctx, s_group, domain)
    family = bm_elation_group(ctx, params)
    same = family.key_set() == s_group.key_set()
    payload = {"order": len(s_group), "domain": len(domain), "sharp": sharp, "elation_family": same}
    _emit([" ".join(key_value_lines(payload))])
    return (EXIT_OK if sharp and same else EXIT_VIOLATION), payload


# --- equivalence ------------------------------------------------------------

def _witness_payload(w) -> Dict[str, Any]:
    return {
        "source": [w.source.a, w.source.b],
        "target": [w.target.a, w.target.b],
        "case": w.case_tag,
        "aut_exp": w.aut_exp,
        "map": list(w.map.key),
    }


def _equiv_reduce(ctx: FieldCtx, run: RunConfig, engine: EngineConfig, args: argparse.Namespace) -> Result:
    params = _params(ctx, run)
    w = canonical_witness(ctx, params, verify=ctx.q <= engine.verify_max_q)
    _emit([f"source=({params.a},{params.b}) target=({w.target.a},{w.target.b})", collineation_line(w.map)])
    if run.out:
        save_witness(ctx, w, run.out)
    return EXIT_OK, _witness_payload(w)


def _equiv_find(ctx: FieldCtx, run: RunConfig, engine: EngineConfig, args: argparse.Namespace) -> Result:
    p1 = _params(ctx, run)
    p2 = make_params(ctx, run.a2, run.b2)
    verify = ctx.q <= engine.verify_max_q
    if args.fast:
        w = theorem_fast_path(ctx, p1, p2, verify=verify)
        if w is None:
            raise TheoremViolation(f"fast path found no map {p1} -> {p2}")
    else:
        w = find_equivalence(ctx, p1, p2, threads=run.threads, verify=verify)
    ok = verify_witness(ctx, w)
    _emit([f"case={w.case_tag} sigma={w.aut_exp} verified={'true' if ok else 'false'}", collineation_line(w.map)])
    if run.out:
        save_witness(ctx, w, run.out)
    return (EXIT_OK if ok else EXIT_VIOLATION), {**_witness_payload(w), "verified": ok}


def _equiv_classes(ctx: FieldCtx, run: RunConfig, engine: EngineConfig, args: argparse.Namespace) -> Result:
    classes = parameter_class_count(ctx, threads=run.threads)
    _emit([f"classes={classes}"])
    return (EXIT_OK if classes == 1 else EXIT_VIOLATION), {"classes": classes}


# --- orthogonal arrays ------------------------------------------------------

def _oa_build(ctx: FieldCtx, run: RunConfig, engine: EngineConfig, args: argparse.Namespace) -> Result:
    oa = build_oa(ctx, _params(ctx, run), column_block=engine.oa_column_block, threads=run.threads)
    if run.out:
        export_oa(oa, run.out)
        logger.info("wrote %s", run.out)
    simple = check_simple(oa)
    _emit([oa.header, f"simple={'true' if simple else 'false'}"])
    return (EXIT_OK if simple else EXIT_VIOLATION), {"header": oa.header, "simple": simple}


def _oa_verify(ctx: FieldCtx, run: RunConfig, engine: EngineConfig, args: argparse.Namespace) -> Result:
    oa = import_oa(args.path)
    report = verify_strength2(oa, mode=run.mode, n_pairs=run.pairs, seed=run.seed, threads=run.threads)
    simple = check_simple(oa)
    payload = {"mode": report.mode, "pairs": report.pairs_checked, "lambda": report.index,
               "violations": len(report.violations), "simple": simple}
    if report.seed is not None:
        payload["seed"] = report.seed
    _emit([" ".join(key_value_lines(payload))])
    if run.out:
        build_strength_report(report).to_csv(run.out, index=False)
    return (EXIT_OK if report.ok and simple else EXIT_VIOLATION), payload


def _oa_export(ctx: FieldCtx, run: RunConfig, engine: EngineConfig, args: argparse.Namespace) -> Result:
    if not run.out:
        raise ValueError("oa export needs --out")
    oa = build_oa(ctx, _params(ctx, run), column_block=engine.oa_column_block, threads=run.threads)
    keys_path = os.path.splitext(run.out)[0] + ".keys.csv"
    export_oa(oa, run.out)
    save_oa_keys(oa, keys_path)
    _emit([oa.header, f"array={run.out}", f"keys={keys_path}"])
    return EXIT_OK, {"header": oa.header, "array": run.out, "keys": keys_path}


COMMANDS: Dict[Tuple[str, str], Callable[..., Result]] = {
    ("variety", "build"): _variety_build,
    ("variety", "check-qh"): _variety_check_qh,
    ("variety", "census"): _variety_census,
    ("group", "order"): _group_order,
    ("group", "verify"): _group_verify,
    ("group", "sharp"): _group_sharp,
    ("equiv", "reduce"): _equiv_reduce,
    ("equiv", "find"): _equiv_find,
    ("equiv", "classes"): _equiv_classes,
    ("oa", "build"): _oa_build,
    ("oa", "verify"): _oa_verify,
    ("oa", "export"): _oa_export,
}


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    if args.list_field is not None:
        try:
            ctx = field_for_q(args.list_field)
        except ValueError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
        print(f"# GF({ctx.order}) modulus={ctx.modulus} omega={int(ctx.omega)} eta={ctx.eta_bits} epsilon={ctx.epsilon_bits}")
        print(field_table(ctx).to_csv(index=False), end="")
        return EXIT_OK
    if args.group is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE

    _setup_logging(args.verbose)
    try:
        engine = load_engine_config(args.config)
        run = _run_config(args, engine)
        ctx = field_for_q(run.q)
        code, payload = COMMANDS[(args.group, args.action)](ctx, run, engine, args)
    except TheoremViolation as e:
        logger.error("verification failed: %s", e)
        return EXIT_VIOLATION
    except (ValidationError, ValueError, OSError) as e:
        logger.error("%s", e)
        return EXIT_USAGE

    if run.json_path:
        write_json(run.json_path, {"command": f"{args.group} {args.action}", "q": run.q,
                                   "a": run.a, "b": run.b, "exit": code, "report": payload})
    return code
