"""Command-line front end.

Every invocation ends with one verdict line ``<status> <message>`` where status
is pass, fail or budget; with --json the line is a JSON object instead. When an
artifact is written to stdout (no --out) the verdict goes to stderr.

Exit codes: 0 claim holds, 1 mathematical failure, 2 usage error, 3 budget
exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .incidence import BudgetExceeded

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3
STATUS = {EXIT_OK: "pass", EXIT_FAIL: "fail", EXIT_BUDGET: "budget"}


class UsageError(Exception):
    pass


class Outcome:
    def __init__(self, code: int, message: str, artifact: str | None = None, **details):
        self.code = code
        self.message = message
        self.artifact = artifact
        self.details = details


def _budget(args) -> int | None:
    if args.budget is not None:
        return args.budget
    from .search import default_budget

    return default_budget()


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _load_structure(path: str):
    from .incidence import from_json

    try:
        return from_json(_read(path))
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"{path} is not incidence JSON: {exc}") from exc


def _load_arc(path: str):
    from .pseudoarcs import pseudo_arc_from_text

    try:
        return pseudo_arc_from_text(_read(path))
    except (ValueError, IndexError) as exc:
        raise UsageError(f"{path} is not a pseudo-arc file: {exc}") from exc


# --------------------------------------------------------------------------
# construct


def _conic(q: int) -> list[int]:
    from .fieldred import standard_conic
    from .planes import conic_points

    return conic_points(standard_conic(q))


def cmd_construct(args) -> Outcome:
    from . import constructions as C
    from .fieldred import canonical_pseudo_conic
    from .incidence import to_json
    from .planes import extension_points
    from .pseudoarcs import dualize, pseudo_arc_to_text

    q, n, what = args.q, args.n, args.what
    if what == "pseudo-conic":
        K = canonical_pseudo_conic(n, q)
        return Outcome(EXIT_OK, f"pseudo-conic of size {K.size} in PG({K.ambient},{q})", pseudo_arc_to_text(K))
    if what == "t2":
        S = C.t2_oval(_conic(q), q)
    elif what == "t2star":
        if q % 2:
            raise UsageError("t2star needs q even")
        conic = _conic(q)
        S = C.t2_star_hyperoval(conic + extension_points(conic, q), q)
    elif what == "as-gq":
        conic = _conic(q)
        S = C.as_gq_from_arc([p for i, p in enumerate(conic) if i != args.drop % len(conic)], q)
    elif what == "wq":
        S = C.w_q(q)
    elif what == "t-pseudo":
        S = C.t_pseudo_oval(canonical_pseudo_conic(n, q))
    elif what == "gq-pseudo-arc":
        K = _load_arc(args.input) if args.input else canonical_pseudo_conic(n, q)
        if not args.input:
            K = K.without(args.drop % K.size)
        S = C.gq_from_pseudo_arc(K)
    elif what == "laguerre-classical":
        S = C.classical_laguerre(q)
    else:
        S = C.laguerre_from_dual_pseudo_oval(dualize(canonical_pseudo_conic(n, q)))
    return Outcome(
        EXIT_OK,
        f"{what} with {S.num_points} points, {len(S.lines)} lines, {len(S.circles)} circles",
        to_json(S) + "\n",
    )


# --------------------------------------------------------------------------
# verify


def cmd_verify(args) -> Outcome:
    from .incidence import miquel_check, verify_gq, verify_laguerre, verify_near_plane

    if args.what == "pseudo-arc":
        from .pseudoarcs import is_complete, is_pseudo_arc

        K = _load_arc(args.file)
        ok, bad = is_pseudo_arc(K)
        if not ok:
            return Outcome(EXIT_FAIL, f"triple {bad} does not span PG({K.ambient},{K.q})")
        oval = K.q**K.n + 1
        tag = {oval: "pseudo-oval", oval + 1: "pseudo-hyperoval"}.get(K.size, "pseudo-arc")
        extra = " complete" if args.completeness and is_complete(K) else ""
        return Outcome(EXIT_OK, f"{tag} of size {K.size} in PG({K.ambient},{K.q}){extra}")
    if args.what == "oa":
        from .constructions import oa_from_text, verify_oa

        try:
            A = oa_from_text(_read(args.file))
        except (ValueError, IndexError) as exc:
            raise UsageError(f"{args.file} is not an OA text file: {exc}") from exc
        ok, bad = verify_oa(A, args.strength, args.index)
        t = A.strength if args.strength is None else args.strength
        lam = A.index if args.index is None else args.index
        if not ok:
            return Outcome(EXIT_FAIL, f"OA strength {t} index {lam} fails at {bad}")
        return Outcome(EXIT_OK, f"OA of {A.k} rows, {A.N} columns, {A.levels} levels, strength {t}, index {lam}")
    S = _load_structure(args.file)
    if args.what == "gq":
        res = verify_gq(S)
        return Outcome(EXIT_OK, str(res)) if res else Outcome(EXIT_FAIL, str(res))
    if args.what == "near-plane":
        res = verify_near_plane(S)
        return Outcome(EXIT_OK, f"near-plane of order {res}") if res else Outcome(EXIT_FAIL, str(res))
    res = verify_laguerre(S)
    if not res:
        return Outcome(EXIT_FAIL, str(res))
    msg = f"Laguerre plane of order {res}"
    if args.miquel:
        m = miquel_check(S, args.miquel, args.seed)
        if not m.holds:
            return Outcome(EXIT_FAIL, f"{msg}, Miquel fails at {m.counterexample}")
        msg += f", Miquel holds on {m.trials} sampled configurations"
    return Outcome(EXIT_OK, msg)


# --------------------------------------------------------------------------
# derive


def cmd_derive(args) -> Outcome:
    from .incidence import derive_affine, payne_derive, to_json, verify_affine_plane, verify_gq

    S = _load_structure(args.file)
    try:
        if args.what == "payne":
            D = payne_derive(S, args.point)
            res = verify_gq(D)
            return Outcome(EXIT_OK if res else EXIT_FAIL, f"derived {res}", to_json(D) + "\n")
        A = derive_affine(S, args.point)
    except ValueError as exc:
        return Outcome(EXIT_FAIL, str(exc))
    res = verify_affine_plane(A)
    return Outcome(EXIT_OK if res else EXIT_FAIL, f"affine plane of order {res}", to_json(A) + "\n")


# --------------------------------------------------------------------------
# oa


def cmd_oa(args) -> Outcome:
    from .constructions import ConstructionError, extend_near_plane, oa_from_laguerre, oa_to_text, verify_oa
    from .incidence import to_json

    S = _load_structure(args.file)
    try:
        if args.what == "extract":
            A = oa_from_laguerre(S)
            ok, bad = verify_oa(A)
            msg = f"OA of {A.k} rows, {A.N} columns, {A.levels} levels, strength {A.strength}"
            return Outcome(EXIT_OK if ok else EXIT_FAIL, msg if ok else f"{msg} fails at {bad}", oa_to_text(A))
        budget = _budget(args)
        ext = extend_near_plane(S, budget if budget is not None else 10**6)
    except ConstructionError as exc:
        return Outcome(EXIT_FAIL, str(exc))
    k = len(ext.solutions)
    if not ext.exhaustive:
        return Outcome(EXIT_BUDGET, f"extensions {k} found before the budget ran out")
    art = to_json(ext.solutions[0]) + "\n" if k else None
    tag = " (unique)" if k == 1 else ""
    return Outcome(EXIT_OK if k else EXIT_FAIL, f"extensions {k}{tag}", art, nodes=ext.nodes)


# --------------------------------------------------------------------------
# search


def cmd_search(args) -> Outcome:
    from .search import SearchSpec, audit_extendability, enumerate_pseudo_arcs, main_theorem_pipeline

    if args.what == "main-theorem":
        if not args.file:
            raise UsageError("main-theorem needs a pseudo-arc file")
        from .pseudoarcs import PseudoArcError

        K = _load_arc(args.file)
        try:
            rep = main_theorem_pipeline(K, args.element, bound_mode=args.bound_mode, budget=_budget(args))
        except PseudoArcError as exc:
            return Outcome(EXIT_FAIL, f"precondition: {exc}")
        body = json.dumps(rep.to_dict(), sort_keys=True, indent=1) + "\n"
        if rep.conclusion:
            msg = f"extensions {len(rep.extensions)}, all pseudo-conics"
            return Outcome(EXIT_OK, msg, body)
        return Outcome(EXIT_FAIL, "conclusion not reached: " + "; ".join(rep.notes or ["not a pseudo-conic"]), body)
    for name in ("n", "q", "size"):
        if getattr(args, name) is None:
            raise UsageError(f"--{name} is required")
    if args.what == "audit":
        rep = audit_extendability(
            args.n,
            args.q,
            args.size,
            symmetry=args.symmetry,
            budget=_budget(args),
            shards=args.shards,
            checkpoint_dir=args.checkpoint_dir,
            parallel=args.shards > 1,
        )
        code = EXIT_OK if rep.claim_holds else EXIT_FAIL if rep.complete else EXIT_BUDGET
        return Outcome(code, rep.verdict, rep.to_json(timing=not args.stable) + "\n")
    from .pseudoarcs import pseudo_arc_to_text

    spec = SearchSpec(args.n, args.q, args.size, args.symmetry or "none", budget=_budget(args), shards=args.shards)
    res = enumerate_pseudo_arcs(spec, parallel=args.shards > 1)
    body = json.dumps(
        {"report": res.report.to_dict(timing=not args.stable), "arcs": [pseudo_arc_to_text(K) for K in res.arcs]},
        sort_keys=True,
        indent=1,
    )
    code = EXIT_OK if res.report.exhaustive else EXIT_BUDGET
    tag = "exhaustive" if res.report.exhaustive else "non-exhaustive"
    return Outcome(code, f"pseudo-arcs {len(res.arcs)} {tag}", body + "\n")


# --------------------------------------------------------------------------
# iso


def cmd_iso(args) -> Outcome:
    from .incidence import check_isomorphism, isomorphic

    S1, S2 = _load_structure(args.first), _load_structure(args.second)
    budget = _budget(args)
    iso = isomorphic(S1, S2, budget if budget is not None else 100000)
    if iso is None:
        return Outcome(EXIT_FAIL, "not isomorphic")
    if not check_isomorphism(S1, S2, iso):
        return Outcome(EXIT_FAIL, "isomorphism failed re-verification")
    body = json.dumps({"points": list(iso.points), "lines": list(iso.lines), "circles": list(iso.circles)}) + "\n"
    return Outcome(EXIT_OK, "isomorphic", body)


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
    common.add_argument("--budget", type=int, default=None, help="node budget (default: $ARCGEOM_BUDGET)")
    common.add_argument("--shards", type=int, default=1, help="parallel shards for searches")
    common.add_argument("--json", action="store_true", help="emit the verdict as a JSON line")
    common.add_argument("--out", help="write the artifact here instead of stdout")

    p = argparse.ArgumentParser(prog="arcgeom", description="Pseudo-arcs, GQs, Laguerre planes and audits.")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", parents=[common], help="build a structure")
    c.add_argument(
        "what",
        choices=[
            "t2",
            "t2star",
            "as-gq",
            "wq",
            "t-pseudo",
            "gq-pseudo-arc",
            "laguerre-classical",
            "laguerre-dual",
            "pseudo-conic",
        ],
    )
    c.add_argument("--q", type=int, required=True)
    c.add_argument("--n", type=int, default=1)
    c.add_argument("--drop", type=int, default=-1, help="element removed for as-gq and gq-pseudo-arc")
    c.add_argument("--input", help="pseudo-arc file for gq-pseudo-arc")
    c.set_defaults(func=cmd_construct)

    v = sub.add_parser("verify", parents=[common], help="check axioms")
    v.add_argument("what", choices=["gq", "laguerre", "near-plane", "oa", "pseudo-arc"])
    v.add_argument("file")
    v.add_argument("--miquel", type=int, default=0, help="sample this many Miquel configurations")
    v.add_argument("--strength", type=int, default=None)
    v.add_argument("--index", type=int, default=None)
    v.add_argument("--completeness", action="store_true", help="also report whether the pseudo-arc is complete")
    v.set_defaults(func=cmd_verify)

    d = sub.add_parser("derive", parents=[common], help="Payne derivation or derived affine plane")
    d.add_argument("what", choices=["payne", "affine"])
    d.add_argument("file")
    d.add_argument("--point", type=int, default=0)
    d.set_defaults(func=cmd_derive)

    o = sub.add_parser("oa", parents=[common], help="orthogonal array extraction, near-plane extension")
    o.add_argument("what", choices=["extract", "extend"])
    o.add_argument("file")
    o.set_defaults(func=cmd_oa)

    s = sub.add_parser("search", parents=[common], help="pseudo-arc enumeration and audits")
    s.add_argument("what", choices=["pseudo-arcs", "audit", "main-theorem"])
    s.add_argument("file", nargs="?")
    s.add_argument("--n", type=int)
    s.add_argument("--q", type=int)
    s.add_argument("--size", type=int)
    s.add_argument("--symmetry", choices=["none", "fix-first", "fix-first-two", "frame"])
    s.add_argument("--checkpoint-dir")
    s.add_argument("--element", type=int, default=0, help="projection element for main-theorem")
    s.add_argument("--bound-mode", action="store_true", help="accept an upper bound for m2'")
    s.add_argument("--stable", action="store_true", help="omit wall time for byte-stable output")
    s.set_defaults(func=cmd_search)

    i = sub.add_parser("iso", parents=[common], help="incidence isomorphism")
    i.add_argument("what", choices=["compare"])
    i.add_argument("first")
    i.add_argument("second")
    i.set_defaults(func=cmd_iso)
    return p


def _emit(args, out: Outcome) -> None:
    to_stdout = out.artifact is not None and not args.out
    if out.artifact is not None:
        if args.out:
            Path(args.out).write_text(out.artifact)
        else:
            sys.stdout.write(out.artifact)
    status = STATUS.get(out.code, "fail")
    if args.json:
        line = json.dumps({"status": status, "verdict": out.message, **out.details}, sort_keys=True)
    else:
        line = f"{status} {out.message}"
    print(line, file=sys.stderr if to_stdout else sys.stdout)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    if args.shards < 1:
        print("usage: --shards must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        out = args.func(args)
    except UsageError as exc:
        print(f"usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BudgetExceeded as exc:
        out = Outcome(EXIT_BUDGET, str(exc))
    except ValueError as exc:
        # Field or parameter outside the supported range.
        print(f"usage: {exc}", file=sys.stderr)
        return EXIT_USAGE
    _emit(args, out)
    return out.code


if __name__ == "__main__":
    sys.exit(main())
