"""Sort checking, type order, initiality classification, and whole-problem
validation.

A relational sort sigma1 -> ... -> sigmak -> o is *initial* when
  (O1) at most one argument is the numeric sort W,
  (O2) if argument j is W then every earlier argument's order is strictly
       below the order of the suffix starting at j, and
  (O3) every argument is S, W, or itself initial.
Initial sorts with a W argument are *active*, without one *inactive*.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax import (
    App, Arrow, Atom, BgAtom, BG_RELS, Clause, FIN, FgAtom, Fin, PredRef,
    PROP, Problem, Prop, SConst, Sort, Var, W, WLit, WOp, WSort, arg_sorts,
    has_limit_clause, mk_arrow, result_sort, spine,
)


class TypeErrorLD(Exception):
    pass


def type_order(s: Sort) -> int:
    match s:
        case Prop() | Fin() | WSort():
            return 0
        case Arrow(a, b):
            return max(type_order(a) + 1, type_order(b))
    raise TypeError(s)


def is_relational(s: Sort) -> bool:
    """Arguments are base sorts or relational; result is o."""
    if s == PROP:
        return True
    if isinstance(s, Arrow):
        a_ok = s.arg in (FIN, W) or is_relational(s.arg)
        return a_ok and is_relational(s.res)
    return False


def is_initial(s: Sort) -> bool:
    if not is_relational(s):
        return False
    args = arg_sorts(s)
    w_idx = [i for i, a in enumerate(args) if a == W]
    if len(w_idx) > 1:
        return False  # O1
    if w_idx:
        j = w_idx[0]
        suffix = mk_arrow(args[j:], PROP)
        bound = type_order(suffix)
        for a in args[:j]:
            if type_order(a) >= bound:
                return False  # O2
    for a in args:
        if a in (FIN, W):
            continue
        if not is_initial(a):
            return False  # O3
    return True


def classify(s: Sort) -> str:
    """'active' | 'inactive' | 'noninitial' for a relational sort."""
    if not is_initial(s):
        return "noninitial"
    return "active" if W in arg_sorts(s) else "inactive"


def w_position(s: Sort) -> int | None:
    for i, a in enumerate(arg_sorts(s)):
        if a == W:
            return i
    return None


# ---------------------------------------------------------------------------
# term sort inference


def infer_sort(t, vmap: dict[str, Sort], decls: dict[str, Sort]) -> Sort:
    match t:
        case Var(n):
            if n not in vmap:
                raise TypeErrorLD(f"unbound variable {n!r}")
            return vmap[n]
        case PredRef(n):
            return decls[n]
        case SConst():
            return FIN
        case WLit() | WOp():
            return W
        case App(fn, a):
            fs = infer_sort(fn, vmap, decls)
            if not isinstance(fs, Arrow):
                raise TypeErrorLD(f"cannot apply term of sort {fs}")
            as_ = infer_sort(a, vmap, decls)
            if as_ != fs.arg:
                raise TypeErrorLD(f"argument sort {as_} does not match {fs.arg}")
            return fs.res
    raise TypeError(t)


def _check_numeric(t, vmap, decls, dim: int) -> str:
    """Return 'scalar' or 'tuple' for a numeric term; raise on mismatch."""
    match t:
        case Var(n):
            if vmap.get(n) != W:
                raise TypeErrorLD(f"variable {n!r} is not numeric")
            return "tuple"
        case WLit(vals):
            if len(vals) == 1:
                return "scalar" if dim > 1 else "tuple"
            if len(vals) != dim:
                raise TypeErrorLD(f"tuple literal of length {len(vals)}, expected {dim}")
            return "tuple"
        case WOp("comp", (a,), _):
            if _check_numeric(a, vmap, decls, dim) != "tuple":
                raise TypeErrorLD("comp applies to a tuple-valued term")
            return "scalar"
        case WOp("scale", (a,), _):
            return _check_numeric(a, vmap, decls, dim)
        case WOp("+" | "-", (a, b)):
            ka = _check_numeric(a, vmap, decls, dim)
            kb = _check_numeric(b, vmap, decls, dim)
            if ka != kb:
                # a bare integer literal may stand for either kind
                if isinstance(a, WLit) and len(a.vals) == 1:
                    return kb
                if isinstance(b, WLit) and len(b.vals) == 1:
                    return ka
                raise TypeErrorLD("mixed scalar/tuple arithmetic")
            return ka
    raise TypeErrorLD(f"not a numeric term: {t}")


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    mode: str  # "FirstOrder" | "InitialHigherOrder" | "Rejected"
    max_order: int = 0
    pred_info: dict[str, dict] = field(default_factory=dict)
    errors: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.mode != "Rejected"

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "maxOrder": self.max_order,
            "predicates": self.pred_info,
            "errors": self.errors,
        }


def _check_clause_sorts(cl: Clause, decls: dict[str, Sort], dim: int,
                        errors: list[str]) -> None:
    vmap = dict(cl.vars)
    label = "goal" if cl.head is None else f"clause for {cl.head[0]}"

    def chk_formula(f) -> None:
        from .syntax import AndF, OrF
        if isinstance(f, (AndF, OrF)):
            for a in f.args:
                chk_formula(a)
            return
        chk_atom(f)

    def chk_atom(a: Atom) -> None:
        if isinstance(a, BgAtom):
            if a.rel == "eqs":
                for side in (a.lhs, a.rhs):
                    try:
                        s = infer_sort(side, vmap, decls)
                    except TypeErrorLD as e:
                        errors.append(f"{label}: {e}")
                        return
                    if s != FIN:
                        errors.append(f"{label}: eqs argument is not of sort S")
                return
            try:
                _check_numeric(a.lhs, vmap, decls, dim)
                _check_numeric(a.rhs, vmap, decls, dim)
            except TypeErrorLD as e:
                errors.append(f"{label}: {e}")
            return
        try:
            s = infer_sort(a.term, vmap, decls)
        except TypeErrorLD as e:
            errors.append(f"{label}: {e}")
            return
        if s != PROP:
            errors.append(f"{label}: foreground atom has sort {s}, not o")

    chk_formula(cl.body)
    if cl.head is not None:
        pname, hargs = cl.head
        sorts = arg_sorts(decls[pname])
        if len(hargs) != len(sorts):
            errors.append(f"{label}: head arity mismatch")
            return
        for a, srt in zip(hargs, sorts):
            try:
                s = infer_sort(a, vmap, decls)
            except TypeErrorLD as e:
                errors.append(f"{label}: {e}")
                continue
            if s != srt:
                errors.append(f"{label}: head argument sort {s}, expected {srt}")


def validate(p: Problem, require_explicit_limits: bool = False) -> ValidationReport:
    errors: list[str] = []
    decls = dict(p.decls)
    pred_info: dict[str, dict] = {}
    max_order = 0
    all_first_order = True
    for name, s in p.decls:
        order = type_order(s)
        cls = classify(s)
        pred_info[name] = {
            "sort": str(s), "order": order, "class": cls,
            "wPosition": w_position(s),
        }
        if cls == "noninitial":
            if not is_relational(s):
                errors.append(f"predicate {name!r}: sort {s} is not relational")
            else:
                # report which condition failed for diagnostics
                args = arg_sorts(s)
                wps = [i for i, a in enumerate(args) if a == W]
                if len(wps) > 1:
                    errors.append(f"predicate {name!r}: more than one W argument (O1)")
                elif wps:
                    j = wps[0]
                    bound = type_order(mk_arrow(args[j:], PROP))
                    bad = [i for i, a in enumerate(args[:j])
                           if type_order(a) >= bound]
                    if bad:
                        errors.append(
                            f"predicate {name!r}: argument {bad[0]} has order >= "
                            f"order of the W suffix (O2)")
                    else:
                        errors.append(f"predicate {name!r}: non-initial argument (O3)")
                else:
                    errors.append(f"predicate {name!r}: non-initial argument (O3)")
        max_order = max(max_order, order)
        if order > 1 or any(a not in (FIN, W) for a in arg_sorts(s)):
            all_first_order = False

    for cl in list(p.clauses) + list(p.goals):
        for n, s in cl.vars:
            if s not in (FIN, W) and not is_initial(s):
                errors.append(f"variable {n!r} has non-initial sort {s}")
        _check_clause_sorts(cl, decls, p.dim, errors)

    for name, s in p.decls:
        if w_position(s) is not None and require_explicit_limits \
                and not has_limit_clause(p, name):
            errors.append(f"predicate {name!r} lacks an explicit limit clause")

    # variables must live in finite frames at the final stage
    for cl in list(p.clauses) + list(p.goals):
        for n, s in cl.vars:
            if s not in (FIN, W) and type_order(s) > max_order:
                errors.append(f"variable {n!r} has order above every predicate")

    if errors:
        return ValidationReport("Rejected", max_order, pred_info, errors)
    mode = "FirstOrder" if all_first_order else "InitialHigherOrder"
    return ValidationReport(mode, max_order, pred_info, [])
