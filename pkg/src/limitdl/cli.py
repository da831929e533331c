"""Command-line interface.

Exit codes: 10 satisfiable, 20 unsatisfiable, 30 unknown; 0 for successful
non-verdict subcommands, 1 for usage or parse errors, 2 for validation or
verification rejections.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import entwined as E
from .background import theory_for
from .driver import SolveConfig, solve, verify
from .frontends import (IllFormedMachine, LCMConfig, encode_lcm,
                        load_machine, simulate_reachable)
from .syntax import (SyntaxProblem, _Ctx, normalize_problem, parse_problem,
                     print_problem, read_sexprs)
from .typesys import validate

EXIT_SAT = 10
EXIT_UNSAT = 20
EXIT_UNKNOWN = 30
EXIT_OK = 0
EXIT_USAGE = 1
EXIT_REJECTED = 2


def _load_problem(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        return normalize_problem(parse_problem(fh.read()))


def _emit(args, payload: dict, human: str) -> None:
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        print(human)


def _cmd_solve(args) -> int:
    p = _load_problem(args.problem)
    cfg = SolveConfig(resolution_slice=args.budget_resolution,
                      model_slice=args.budget_models,
                      total_budget=args.total_budget,
                      hint=args.hint, mode=args.mode, workers=args.workers)
    v = solve(p, cfg)
    if v.kind == "INVALID":
        for e in v.report.errors:
            print(e, file=sys.stderr)
        _emit(args, {"verdict": "INVALID",
                     "report": v.report.to_json()}, "INVALID")
        return EXIT_REJECTED
    payload = {"verdict": v.kind, "stats": v.stats}
    if v.kind == "SAT":
        model = E.serialize_model(v.model)
        payload["model"] = model
        if args.emit_model:
            with open(args.emit_model, "w", encoding="utf-8") as fh:
                json.dump(model, fh, indent=1)
        _emit(args, payload, "SAT")
        return EXIT_SAT
    if v.kind == "UNSAT":
        payload["proof"] = v.trace.to_json()
        if args.emit_proof:
            with open(args.emit_proof, "w", encoding="utf-8") as fh:
                fh.write(v.trace.dumps())
        _emit(args, payload, "UNSAT")
        return EXIT_UNSAT
    _emit(args, payload, "UNKNOWN")
    return EXIT_UNKNOWN


def _cmd_typecheck(args) -> int:
    p = _load_problem(args.problem)
    rep = validate(p)
    _emit(args, rep.to_json(),
          rep.mode if rep.ok else
          "Rejected: " + "; ".join(rep.errors))
    return EXIT_OK if rep.ok else EXIT_REJECTED


def _cmd_verify_model(args) -> int:
    p = _load_problem(args.problem)
    try:
        with open(args.model, "r", encoding="utf-8") as fh:
            witness = json.load(fh)
    except json.JSONDecodeError as e:
        print(f"SchemaError: {e}", file=sys.stderr)
        _emit(args, {"ok": False, "error": f"SchemaError: {e}"}, "false")
        return EXIT_REJECTED
    ok, diag = verify(p, witness)
    if not ok:
        print(diag, file=sys.stderr)
    _emit(args, {"ok": ok, "diagnostic": diag}, "true" if ok else "false")
    return EXIT_OK if ok else EXIT_REJECTED


def _parse_target(spec: str, counters: int) -> LCMConfig:
    parts = [s.strip() for s in spec.split(",")]
    if len(parts) != counters + 1:
        raise IllFormedMachine(
            f"target must be 'state,{counters} counter values'")
    try:
        vals = tuple(int(x) for x in parts[1:])
    except ValueError:
        raise IllFormedMachine("target counter values must be integers")
    return LCMConfig(parts[0], vals)


def _cmd_encode_lcm(args) -> int:
    m = load_machine(args.machine)
    target = _parse_target(args.target, m.counters)
    if args.simulate:
        reach = simulate_reachable(m, target, args.cap)
        _emit(args, {"reachable": reach}, "reachable" if reach
              else "unreachable")
        return EXIT_OK
    p = encode_lcm(m, target, cover=args.cover)
    text = print_problem(p)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return EXIT_OK


def _cmd_eval(args) -> int:
    p = _load_problem(args.problem)
    theory = theory_for(p.theory_kind, p.dim, p.direction)
    m = E.load_model(p, theory, args.model)
    ctx = _Ctx(list(p.fin_elems), p.decl_map, p.dim)
    exprs = read_sexprs(args.term)
    if len(exprs) != 1:
        print("eval takes exactly one term", file=sys.stderr)
        return EXIT_USAGE
    t = ctx.parse_term(exprs[0], {})
    v = E.eval_term(m, t, {})
    out = str(v).lower() if isinstance(v, bool) else repr(v)
    _emit(args, {"value": v if isinstance(v, (bool, str)) else out}, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="limitdl",
                                 description="clause solver over ordered "
                                             "numeric background theories")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(sp):
        sp.add_argument("--json", action="store_true",
                        help="machine-readable output on stdout")

    sp = sub.add_parser("solve", help="decide satisfiability")
    sp.add_argument("problem")
    sp.add_argument("--budget-resolution", type=int, default=2000,
                    metavar="N", help="refutation steps per round")
    sp.add_argument("--budget-models", type=int, default=50, metavar="N",
                    help="model candidates per round")
    sp.add_argument("--total-budget", type=int, default=None, metavar="N")
    sp.add_argument("--hint", metavar="FILE",
                    help="model witness to try first")
    sp.add_argument("--mode", choices=["auto", "fo", "initial"],
                    default="auto")
    sp.add_argument("--emit-proof", metavar="FILE")
    sp.add_argument("--emit-model", metavar="FILE")
    sp.add_argument("--workers", type=int, default=1)
    common(sp)
    sp.set_defaults(fn=_cmd_solve)

    sp = sub.add_parser("typecheck", help="validate a problem")
    sp.add_argument("problem")
    common(sp)
    sp.set_defaults(fn=_cmd_typecheck)

    sp = sub.add_parser("verify-model", help="check a witness")
    sp.add_argument("problem")
    sp.add_argument("model")
    common(sp)
    sp.set_defaults(fn=_cmd_verify_model)

    sp = sub.add_parser("encode-lcm",
                        help="compile a lossy counter machine query")
    sp.add_argument("machine")
    sp.add_argument("--target", required=True,
                    metavar="q,v1,...", help="target configuration")
    sp.add_argument("-o", "--output", metavar="FILE")
    sp.add_argument("--cover", action="store_true",
                    help="coverability goal (counters at least the target)")
    sp.add_argument("--simulate", action="store_true",
                    help=argparse.SUPPRESS)  # brute-force oracle
    sp.add_argument("--cap", type=int, default=10, help=argparse.SUPPRESS)
    common(sp)
    sp.set_defaults(fn=_cmd_encode_lcm)

    sp = sub.add_parser("eval", help="evaluate a ground term in a witness")
    sp.add_argument("problem")
    sp.add_argument("model")
    sp.add_argument("term")
    common(sp)
    sp.set_defaults(fn=_cmd_eval)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    try:
        return args.fn(args)
    except (SyntaxProblem, IllFormedMachine, E.SchemaError,
            E.FrameInconsistency, OSError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
