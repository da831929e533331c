"""Finite-presentation models and the model-checking semi-procedure.

A candidate model interprets every predicate by a finite table.  A predicate
whose sort takes a numeric-domain argument (an *active* predicate) is a
function that is monotone in that argument; such a function into a finite
boolean table is exactly a family of upward-closed numeric sets, so we store
one upset descriptor per combination of the non-numeric arguments.  A
predicate without a numeric argument (*inactive*) is a plain boolean table.

Frames — the finite spaces the non-numeric variables of a clause range
over — are built in stages: base sorts are listed outright, arrows without a
numeric argument are full function spaces, and arrows with a numeric argument
are populated by ``{top} ∪ partial applications of lower-order predicates``,
deduplicated extensionally.

Clause checking enumerates valuations of the non-numeric variables over these
frames and translates each instance into a linear-arithmetic sentence over
the numeric variables, decided by the ``presburger`` module.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

from . import presburger as P
from .background import (ALL, EMPTY, Antichain, AtLeast, Theory, Upset,
                         compile_atom, comp_var, upset_from_json,
                         upset_to_json)
from .syntax import (FIN, PROP, W, AndF, App, Arrow, Atom, BgAtom, BodyF,
                     Clause, FgAtom, OrF, PredRef, Problem, SConst, Sort,
                     Term, Var, WLit, WOp, arg_sorts, mk_app, print_sort,
                     spine)
from .typesys import classify, type_order, w_position


class FrameTooLarge(Exception):
    pass


class StageOrderViolation(Exception):
    pass


class MissingValuation(Exception):
    pass


class SchemaError(Exception):
    pass


class FrameInconsistency(Exception):
    pass


MAX_FRAME = 1 << 16


# ---------------------------------------------------------------------------
# canonical value-terms (used for witness serialization and provenance)


@dataclass(frozen=True)
class Top:
    sort: Sort


@dataclass(frozen=True)
class SVal:
    const: str


@dataclass(frozen=True)
class PredApp:
    pred: str
    args: tuple["CanonicalValue", ...]


CanonicalValue = Top | SVal | PredApp


# ---------------------------------------------------------------------------
# extensional values
#
# A frame element is one of
#   bool                        sort o
#   str                         finite-sort constant
#   FnVal(sort, vals)           arrow without numeric argument: the table of
#                               results, indexed by the argument's frame
#   ActVal(sort, descs)         arrow with a numeric argument: one upset
#                               descriptor per combination of the non-numeric
#                               arguments (row-major over their frames)
#
# Values are compared structurally; because upsets are kept canonical and
# tables are fully materialized, structural equality is extensional equality.


@dataclass(frozen=True)
class FnVal:
    sort: Sort
    vals: tuple


@dataclass(frozen=True)
class ActVal:
    sort: Sort
    descs: tuple[Upset, ...]


Value = bool | str | FnVal | ActVal


def nonw_sorts(s: Sort) -> list[Sort]:
    return [a for a in arg_sorts(s) if a != W]


def suffix_sort(s: Sort, k: int) -> Sort:
    for _ in range(k):
        if not isinstance(s, Arrow):
            raise ValueError("suffix past result sort")
        s = s.res
    return s


def canonical_upset(theory: Theory, u: Upset) -> Upset:
    """One representative per denoted set (needed for extensional dedup)."""
    u = theory.canonicalize(u)
    if isinstance(u, Antichain):
        if not u.gens:
            return EMPTY
        bottom = tuple([None] * theory.dim) if theory.flipped else \
            tuple([0] * theory.dim)
        if u.gens == (bottom,):
            return ALL
    return u


# ---------------------------------------------------------------------------
# structures


class EntwinedStructure:
    """A full interpretation of every declared predicate, plus the frames it
    induces.  Immutable once constructed."""

    def __init__(self, problem: Problem, theory: Theory,
                 interps: Mapping[str, Value],
                 max_frame: int = MAX_FRAME):
        self.problem = problem
        self.theory = theory
        # canonical descriptors make structural equality extensional
        self.interps = {
            n: ActVal(v.sort, tuple(canonical_upset(theory, d)
                                    for d in v.descs))
            if isinstance(v, ActVal) else v
            for n, v in interps.items()}
        self.max_frame = max_frame
        self._frames: dict[Sort, list[Value]] = {}
        self._canon: dict[Sort, list[CanonicalValue]] = {}

    # -- frames --------------------------------------------------------

    def frame_size(self, s: Sort) -> int:
        """Cardinality of the frame, computed without materializing inactive
        function spaces."""
        if s == PROP:
            return 2
        if s == FIN:
            return len(self.problem.fin_elems)
        if s == W:
            raise StageOrderViolation("the numeric sort has no finite frame")
        if isinstance(s, Arrow):
            if classify(s) == "active":
                return len(self.frame(s))
            return self.frame_size(s.res) ** self.frame_size(s.arg)
        raise TypeError(s)

    def frame(self, s: Sort) -> list[Value]:
        if s in self._frames:
            return self._frames[s]
        if s == PROP:
            vals: list[Value] = [False, True]
            canon: list[CanonicalValue] = [SVal("false"), SVal("true")]
        elif s == FIN:
            vals = list(self.problem.fin_elems)
            canon = [SVal(c) for c in vals]
        elif s == W:
            raise StageOrderViolation("the numeric sort has no finite frame")
        elif isinstance(s, Arrow):
            if classify(s) == "noninitial":
                raise StageOrderViolation(
                    f"sort {print_sort(s)} has no materializable frame")
            if classify(s) == "active":
                vals, canon = self._active_frame(s)
            else:
                vals, canon = self._function_space(s)
        else:
            raise TypeError(s)
        self._frames[s] = vals
        self._canon[s] = canon
        return vals

    def _function_space(self, s: Arrow) -> tuple[list[Value], list]:
        size = self.frame_size(s)
        if size > self.max_frame:
            raise FrameTooLarge(
                f"frame of {print_sort(s)} has {size} elements "
                f"(limit {self.max_frame})")
        dom = self.frame(s.arg)
        cod = self.frame(s.res)
        vals: list[Value] = []
        for combo in itertools.product(cod, repeat=len(dom)):
            vals.append(FnVal(s, combo))
        # the constant-true table is the only one with a canonical name
        canon = [Top(s) if v == self.top(s) else None for v in vals]
        return vals, canon

    def _active_frame(self, s: Arrow) -> tuple[list[Value], list]:
        """{top} ∪ extensionally distinct partial applications of predicates
        of order ≤ order(s) whose sort ends in s."""
        order = type_order(s)
        vals: list[Value] = [self.top(s)]
        canon: list[CanonicalValue] = [Top(s)]
        for pname, psort in self.problem.decls:
            if type_order(psort) > order or pname not in self.interps:
                continue
            pargs = arg_sorts(psort)
            wpos = w_position(psort)
            stop = len(pargs) if wpos is None else wpos
            for k in range(stop + 1):
                if suffix_sort(psort, k) != s:
                    continue
                prefix = pargs[:k]
                for combo in itertools.product(*(self.frame(a) for a in prefix)):
                    v = self.interps[pname]
                    for a in combo:
                        v = self.apply(v, a)
                    if v not in vals:
                        vals.append(v)
                        arg_canons = [self._try_canon(a_s, a)
                                      for a_s, a in zip(prefix, combo)]
                        canon.append(
                            PredApp(pname, tuple(arg_canons))
                            if all(c is not None for c in arg_canons)
                            else None)
        if len(vals) > self.max_frame:
            raise FrameTooLarge(f"frame of {print_sort(s)} too large")
        return vals, canon

    def _try_canon(self, s: Sort, v: Value) -> CanonicalValue | None:
        fr = self.frame(s)
        return self._canon[s][fr.index(v)]

    def canon_of(self, s: Sort, v: Value) -> CanonicalValue:
        c = self._try_canon(s, v)
        if c is None:
            raise SchemaError(
                f"element of {print_sort(s)} has no canonical value-term")
        return c

    def resolve_canon(self, s: Sort, c: CanonicalValue) -> Value:
        match c:
            case Top(ts):
                if ts != s:
                    raise FrameInconsistency(
                        f"top of {print_sort(ts)} used at {print_sort(s)}")
                return self.top(s)
            case SVal(name):
                if s == PROP:
                    if name not in ("true", "false"):
                        raise SchemaError(f"bad boolean constant {name!r}")
                    return name == "true"
                if name not in self.problem.fin_elems:
                    raise SchemaError(f"unknown finite constant {name!r}")
                return name
            case PredApp(pname, args):
                try:
                    psort = self.problem.decl(pname)
                except KeyError:
                    raise SchemaError(f"undeclared predicate {pname!r}")
                if pname not in self.interps:
                    raise StageOrderViolation(
                        f"{pname} is not interpreted below {print_sort(s)}")
                pargs = arg_sorts(psort)
                if len(args) > len(pargs):
                    raise SchemaError(f"too many arguments to {pname}")
                v: Value = self.interps[pname]
                for a_s, a_c in zip(pargs, args):
                    v = self.apply(v, self.resolve_canon(a_s, a_c))
                if suffix_sort(psort, len(args)) != s:
                    raise FrameInconsistency(
                        f"{pname} applied to {len(args)} arguments does not "
                        f"have sort {print_sort(s)}")
                return v

    # -- rows of an active sort -----------------------------------------

    def rows(self, s: Sort) -> list[tuple[Value, ...]]:
        return list(itertools.product(*(self.frame(a) for a in nonw_sorts(s))))

    def top(self, s: Sort) -> Value:
        if s == PROP:
            return True
        if not isinstance(s, Arrow) or classify(s) == "noninitial":
            raise StageOrderViolation(f"no top element at {print_sort(s)}")
        if classify(s) == "active":
            return ActVal(s, (ALL,) * len(self.rows(s)))
        return FnVal(s, (self.top(s.res),) * self.frame_size(s.arg))

    # -- application -----------------------------------------------------

    def apply(self, v: Value, arg) -> Value:
        """Apply a value to a concrete argument (a Value, or a concrete
        numeric point for the numeric slot of an active value)."""
        if isinstance(v, FnVal):
            dom = self.frame(v.sort.arg)
            return v.vals[dom.index(arg)]
        if isinstance(v, ActVal):
            s: Arrow = v.sort
            if s.arg == W:
                return self._apply_w(v, arg)
            dom = self.frame(s.arg)
            i = dom.index(arg)
            rest = nonw_sorts(s.res)
            stride = math.prod(self.frame_size(a) for a in rest)
            sub = v.descs[i * stride:(i + 1) * stride]
            res = s.res
            if res == PROP:
                raise StageOrderViolation("active value with no numeric slot")
            return ActVal(res, sub)
        raise TypeError(f"cannot apply {v!r}")

    def _apply_w(self, v: ActVal, w: Sequence[int]) -> Value:
        """Apply at the numeric slot: each residual row collapses to the
        boolean 'does w lie in the row's upset'."""
        res = v.sort.res
        rest = nonw_sorts(res)
        sizes = [self.frame_size(a) for a in rest]

        def build(s: Sort, base: int, strides: list[int]) -> Value:
            if s == PROP:
                return self.theory.member(w, v.descs[base])
            stride = strides[0]
            dom = self.frame(s.arg)
            return FnVal(s, tuple(build(s.res, base + i * stride, strides[1:])
                                  for i in range(len(dom))))

        strides = []
        acc = 1
        for sz in reversed(sizes):
            strides.append(acc)
            acc *= sz
        strides.reverse()
        return build(res, 0, strides)

    def full_table(self, s: Sort, v: Value) -> tuple[bool, ...]:
        """Flatten a value of inactive relational sort into its boolean table
        over rows(s) (all argument combinations, row-major)."""
        if s == PROP:
            return (bool(v),)
        out: list[bool] = []
        for a in self.frame(s.arg):
            out.extend(self.full_table(s.res, self.apply(v, a)))
        return tuple(out)


# ---------------------------------------------------------------------------
# term evaluation (all numeric subterms concrete)


def _eval_w(t: Term, val: Mapping[str, object], dim: int) -> tuple[int, ...]:
    match t:
        case WLit(vs):
            return tuple(vs) if len(vs) > 1 or dim == 1 else tuple(vs) * dim
        case Var(n):
            if n not in val:
                raise MissingValuation(n)
            w = val[n]
            if not isinstance(w, tuple):
                raise MissingValuation(f"{n} is not a numeric point")
            return w
        case WOp("+", (a, b)):
            return tuple(x + y for x, y in
                         zip(_eval_w(a, val, dim), _eval_w(b, val, dim)))
        case WOp("-", (a, b)):
            return tuple(x - y for x, y in
                         zip(_eval_w(a, val, dim), _eval_w(b, val, dim)))
        case WOp("scale", (a,), k):
            return tuple(k * x for x in _eval_w(a, val, dim))
        case WOp("comp", (a,), k):
            return (_eval_w(a, val, dim)[k - 1],)
    raise MissingValuation(f"non-concrete numeric term {t!r}")


def eval_term(m: EntwinedStructure, t: Term,
              val: Mapping[str, object]) -> object:
    """Evaluate a term whose numeric subterms are all concrete.  Numeric
    points are passed as int tuples in ``val``."""
    match t:
        case Var(n):
            if n not in val:
                raise MissingValuation(n)
            return val[n]
        case PredRef(n):
            return m.interps[n]
        case SConst(n):
            return n
        case WLit() | WOp():
            return _eval_w(t, val, m.theory.dim)
        case App(fn, arg):
            f = eval_term(m, fn, val)
            a = eval_term(m, arg, val)
            return m.apply(f, a)
    raise TypeError(t)


# ---------------------------------------------------------------------------
# clause checking
#
# Non-numeric variables are enumerated over their frames; numeric variables
# stay symbolic as component variables.  Evaluating a term symbolically
# yields a list of guarded outcomes: each case is (guard formula, value) with
# mutually exclusive guards; an outcome of sort o is a formula instead of a
# value.  Passing a symbolic numeric variable into an active value whose
# residual sort is not o splits into one case per candidate frame element
# (region splitting).


_Cases = list[tuple[P.Formula, object]]

_FORMULA_TYPES = (P.TrueF, P.FalseF, P.Cmp, P.Div, P.Not, P.And, P.Or,
                  P.Exists, P.Forall)


def _w_comps(name: str, dim: int) -> list[str]:
    return [comp_var(name, i + 1) for i in range(dim)]


def _sym_apply(m: EntwinedStructure, cases: _Cases, arg_t: Term,
               wvars: set[str], val: dict) -> _Cases:
    th = m.theory
    # numeric argument?
    if isinstance(arg_t, (WLit, WOp)) or (
            isinstance(arg_t, Var) and arg_t.name in wvars):
        symbolic = isinstance(arg_t, Var) and arg_t.name in wvars
        out: _Cases = []
        for g, v in cases:
            if not isinstance(v, ActVal) or v.sort.arg != W:
                raise TypeError("numeric argument to a non-active value")
            if not symbolic:
                w = _eval_w(arg_t, val, th.dim)
                out.append((g, m.apply(v, w)))
                continue
            comps = _w_comps(arg_t.name, th.dim)
            res = v.sort.res
            if res == PROP:
                out.append((g, th.upset_formula(v.descs[0], comps)))
                continue
            # region split: one case per candidate residual value
            row_fs = [th.upset_formula(d, comps) for d in v.descs]
            for u in m.frame(res):
                table = m.full_table(res, u)
                parts = [f if b else P.Not(f)
                         for f, b in zip(row_fs, table)]
                out.append((P.conj([g] + parts), u))
        return out
    # ordinary argument: evaluate it (itself possibly case-split)
    sub = _sym_eval(m, arg_t, wvars, val)
    out = []
    for g1, v1 in cases:
        for g2, a in sub:
            if isinstance(a, _FORMULA_TYPES):
                # boolean argument whose truth depends on numeric variables:
                # split on it
                out.append((P.conj([g1, g2, a]), m.apply(v1, True)))
                out.append((P.conj([g1, g2, P.Not(a)]), m.apply(v1, False)))
            else:
                out.append((P.conj([g1, g2]), m.apply(v1, a)))
    return out


def _sym_eval(m: EntwinedStructure, t: Term, wvars: set[str],
              val: dict) -> _Cases:
    match t:
        case Var(n):
            if n in wvars:
                raise MissingValuation(
                    f"numeric variable {n} outside an argument position")
            if n not in val:
                raise MissingValuation(n)
            return [(P.TRUE, val[n])]
        case PredRef(n):
            return [(P.TRUE, m.interps[n])]
        case SConst(n):
            return [(P.TRUE, n)]
        case WLit() | WOp():
            return [(P.TRUE, _eval_w(t, val, m.theory.dim))]
        case App(fn, arg):
            return _sym_apply(m, _sym_eval(m, fn, wvars, val), arg, wvars, val)
    raise TypeError(t)


def _atom_formula(m: EntwinedStructure, a: Atom, wvars: set[str],
                  val: dict) -> P.Formula:
    if isinstance(a, BgAtom):
        sval_env = {n: v for n, v in val.items() if isinstance(v, str)}
        return compile_atom(a, m.theory, sval_env)
    cases = _sym_eval(m, a.term, wvars, val)
    parts = []
    for g, v in cases:
        if isinstance(v, bool):
            f = P.TRUE if v else P.FALSE
        else:
            f = v  # a formula of sort o
        parts.append(P.conj([g, f]))
    return P.disj(parts)


def _body_formula(m: EntwinedStructure, b: BodyF, wvars: set[str],
                  val: dict) -> P.Formula:
    if isinstance(b, AndF):
        return P.conj(_body_formula(m, x, wvars, val) for x in b.args)
    if isinstance(b, OrF):
        return P.disj(_body_formula(m, x, wvars, val) for x in b.args)
    return _atom_formula(m, b, wvars, val)


def clause_sentence(m: EntwinedStructure, c: Clause, wvars: list[str],
                    val: dict) -> P.Formula:
    """body → head as a formula over the numeric component variables."""
    wset = set(wvars)
    body = _body_formula(m, c.body, wset, val)
    if c.head is None:
        head: P.Formula = P.FALSE
    else:
        hname, hargs = c.head
        head = _atom_formula(
            m, FgAtom(mk_app(PredRef(hname), list(hargs))), wset, val)
    return P.implies(body, head)


def check_clause(m: EntwinedStructure, c: Clause) -> bool:
    th = m.theory
    wvars = [n for n, s in c.vars if s == W]
    others = [(n, s) for n, s in c.vars if s != W]
    domains = []
    for _, s in others:
        if s == FIN:
            domains.append(list(m.problem.fin_elems))
        else:
            domains.append(m.frame(s))
    comps = [c_ for n in wvars for c_ in _w_comps(n, th.dim)]
    bounds = [P.ge(P.LinTerm.of_var(v), P.LinTerm.of_const(0))
              for v in comps] if th.nat else []
    for combo in itertools.product(*domains):
        val = {n: v for (n, _), v in zip(others, combo)}
        f = clause_sentence(m, c, wvars, val)
        # the universal closure holds iff its negation has no numeric witness
        if P.sat_exists_all([P.Not(f)] + bounds) is not None:
            return False
    return True


def check_model(m: EntwinedStructure, p: Problem) -> bool:
    return all(check_clause(m, c) for c in itertools.chain(p.clauses, p.goals))


# ---------------------------------------------------------------------------
# fair enumeration of candidate structures


def _upset_pool(theory: Theory, k: int, cache: list[Upset],
                it: Iterator[Upset]) -> Upset:
    while len(cache) <= k:
        cache.append(next(it))
    return cache[k]


def _compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _pred_choices(m: EntwinedStructure, pname: str, psort: Sort, weight: int,
                  cache: list, it) -> Iterator[Value]:
    """All interpretations of one predicate with the given size measure,
    relative to the already-fixed lower interpretations held by m."""
    th = m.theory
    if psort == PROP:
        if weight in (0, 1):
            yield weight == 1
        return
    if classify(psort) == "active":
        nrows = len(m.rows(psort))
        for idxs in _compositions(weight, nrows):
            descs = tuple(canonical_upset(th, _upset_pool(th, k, cache, it))
                          for k in idxs)
            yield ActVal(psort, descs)
        return
    # inactive: finite table space, index = weight
    rows = m.rows(psort)
    if weight >= (1 << len(rows)):
        return
    bits = [bool((weight >> i) & 1) for i in range(len(rows))]

    def build(s: Sort, base: int, stride_info) -> Value:
        if s == PROP:
            return bits[base]
        total = stride_info[0]
        dom = m.frame(s.arg)
        sub = total // len(dom)
        return FnVal(s, tuple(build(s.res, base + i * sub, (sub,))
                              for i in range(len(dom))))

    yield build(psort, 0, (len(rows),))


def enumerate_structures(p: Problem, theory: Theory,
                         hint: EntwinedStructure | None = None,
                         max_frame: int = MAX_FRAME
                         ) -> Iterator[EntwinedStructure]:
    """Fair enumeration: every finitely presented structure appears at some
    finite index.  A hint structure, if given, is yielded first."""
    if hint is not None:
        yield hint
    preds = sorted(p.decls, key=lambda d: (type_order(d[1]), d[0]))
    cache: list[Upset] = []
    pool = theory.enumerate_upsets()

    def gen(i: int, budget: int, interps: dict) -> Iterator[dict]:
        if i == len(preds):
            if budget == 0:
                yield dict(interps)
            return
        pname, psort = preds[i]
        m = EntwinedStructure(p, theory, interps, max_frame)
        last = i == len(preds) - 1
        weights = [budget] if last else range(budget + 1)
        for w in weights:
            for v in _pred_choices(m, pname, psort, w, cache, pool):
                interps[pname] = v
                yield from gen(i + 1, budget - w, interps)
                del interps[pname]

    for total in itertools.count():
        for interps in gen(0, total, {}):
            yield EntwinedStructure(p, theory, interps, max_frame)


# ---------------------------------------------------------------------------
# first-order least model
#
# For first-order problems the immediate-consequence operator maps descriptor
# tables to descriptor tables: the one-step consequence of a clause at a fixed
# valuation of the finite-sort variables is a Presburger-definable set of
# numeric points, upward closed in the working order once the limit clauses
# are folded in, and such a set is exactly representable by a descriptor.
# When the iteration converges the result is the least model: the problem is
# satisfiable iff the least model satisfies the goals.


def _extract_lia(theory: Theory, phi: P.Formula, comp: str) -> Upset:
    psi = P.eliminate(phi)
    if P.sat_exists_all([psi]) is None:
        return EMPTY
    if P.sat_exists_all([P.nnf(P.Not(psi))]) is None:
        return ALL
    w_in = P.sat_exists_all([psi]).get(comp, 0)
    w_out = P.sat_exists_all([P.nnf(P.Not(psi))]).get(comp, 0)

    def holds(x: int) -> bool:
        return P.evaluate0(psi, {comp: x})

    if theory.flipped:
        lo, hi = w_in, w_out  # holds(lo), not holds(hi), lo < hi
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if holds(mid):
                lo = mid
            else:
                hi = mid
        return AtLeast(lo)
    lo, hi = w_out, w_in  # not holds(lo), holds(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if holds(mid):
            hi = mid
        else:
            lo = mid
    return AtLeast(hi)


def _extract_nat_up(theory: Theory, phi: P.Formula,
                    comps: list[str]) -> Upset:
    psi = P.eliminate(phi, nat_vars=comps)
    bounds = [P.ge(P.LinTerm.of_var(c), P.LinTerm.of_const(0)) for c in comps]
    gens: list[tuple[int, ...]] = []
    while True:
        ask = [psi] + bounds
        if gens:
            ask.append(P.Not(theory.upset_formula(Antichain(tuple(gens)),
                                                  comps)))
        w = P.sat_exists_all(ask)
        if w is None:
            break
        pt = [w.get(c, 0) for c in comps]

        def holds(p: Sequence[int]) -> bool:
            return P.evaluate0(psi, dict(zip(comps, p)))

        moved = True
        while moved:
            moved = False
            for i in range(len(comps)):
                lo, hi = 0, pt[i]  # least value keeping membership
                if hi == 0:
                    continue
                probe = list(pt)
                probe[i] = 0
                if holds(probe):
                    pt[i] = 0
                    moved = True
                    continue
                while hi - lo > 1:
                    mid = (lo + hi) // 2
                    probe[i] = mid
                    if holds(probe):
                        hi = mid
                    else:
                        lo = mid
                if hi < pt[i]:
                    pt[i] = hi
                    moved = True
        gens.append(tuple(pt))
    return canonical_upset(theory, Antichain(tuple(gens)))


def _extract_nat_down(theory: Theory, phi: P.Formula,
                      comps: list[str]) -> Upset:
    """Maximal points of a downward-closed set, with None marking coordinates
    that are unbounded (the set contains points with that coordinate
    arbitrarily large)."""
    bounds = [P.ge(P.LinTerm.of_var(c), P.LinTerm.of_const(0)) for c in comps]
    psi = P.eliminate(phi, nat_vars=comps)
    gens: list[tuple[int | None, ...]] = []

    def closed(constraints: list[P.Formula]) -> P.Formula:
        f = P.conj([psi] + constraints)
        for c in comps:
            f = P.Exists(c, f)
        return f

    while True:
        ask = [psi] + bounds
        if gens:
            ask.append(P.Not(theory.upset_formula(Antichain(tuple(gens)),
                                                  comps)))
        w = P.sat_exists_all(ask)
        if w is None:
            break
        seed = [w.get(c, 0) for c in comps]
        g: list[int | None] = []
        for i, ci in enumerate(comps):
            def constraints(vi: P.Formula | None, m: str | None) -> list:
                out: list[P.Formula] = []
                for j, cj in enumerate(comps):
                    t = P.LinTerm.of_var(cj)
                    if j < i:
                        if g[j] is None:
                            out.append(P.ge(t, P.LinTerm.of_var(m))
                                       if m else P.TRUE)
                        else:
                            out.append(P.eq(t, P.LinTerm.of_const(g[j])))
                    elif j == i:
                        if m:
                            out.append(P.ge(t, P.LinTerm.of_var(m)))
                    else:
                        out.append(P.ge(t, P.LinTerm.of_const(seed[j])))
                return out
            unb = P.Forall("_m", closed(constraints(None, "_m")))
            if P.decide(unb, nat_vars=comps):
                g.append(None)
                continue
            # bounded: binary search the maximum

            def at(v: int) -> bool:
                eqv = P.eq(P.LinTerm.of_var(ci), P.LinTerm.of_const(v))
                return P.decide(closed(constraints(None, None) + [eqv]),
                                nat_vars=comps)

            lo = seed[i]
            hi = lo + 1
            while at(hi):
                lo = hi
                hi *= 2
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if at(mid):
                    lo = mid
                else:
                    hi = mid
            g.append(lo)
        gens.append(tuple(g))
        if len(gens) > 256:
            raise FrameTooLarge("descriptor extraction did not converge")
    return canonical_upset(theory, Antichain(tuple(gens)))


def extract_upset(theory: Theory, phi: P.Formula, comps: list[str]) -> Upset:
    """Descriptor of a set of numeric points given by a formula over the
    component variables; the set must be upward closed in the working
    order (the caller guarantees it, e.g. via limit clauses)."""
    if theory.kind == "lia":
        return _extract_lia(theory, phi, comps[0])
    if theory.flipped:
        return _extract_nat_down(theory, phi, comps)
    return _extract_nat_up(theory, phi, comps)


def _fn_from_bits(m: EntwinedStructure, s: Sort, bits: list[bool]) -> Value:
    it = iter(bits)

    def build(t: Sort) -> Value:
        if t == PROP:
            return next(it)
        return FnVal(t, tuple(build(t.res) for _ in m.frame(t.arg)))

    return build(s)


# After this many fixpoint rounds without convergence, accelerate growing
# descriptors to their limit (Karp-Miller style).  The result is then a
# post-fixpoint rather than the least model, but every candidate is
# re-verified by check_model before it is reported, so acceleration can
# only cost completeness, never soundness.
_WIDEN_AFTER = 6


def _widen_coord(theory: Theory, gi: int | None, oi: int | None):
    if theory.flipped:
        # working order reversed: strictly larger natural value -> omega
        if oi is not None and (gi is None or gi > oi):
            return None
        return gi
    return 0 if gi < oi else gi


def _widen(theory: Theory, old: Upset, new: Upset) -> Upset:
    """Extrapolate a strictly growing descriptor towards its limit."""
    if isinstance(old, AtLeast) and isinstance(new, AtLeast):
        grew = new.k > old.k if theory.flipped else new.k < old.k
        return ALL if grew else new
    if isinstance(old, Antichain) and isinstance(new, Antichain):
        oldset = set(old.gens)
        out = []
        for g in new.gens:
            if g not in oldset:
                for o in old.gens:
                    if theory.w_leq(g, o):  # g strictly enlarges o
                        g = tuple(_widen_coord(theory, gi, oi)
                                  for gi, oi in zip(g, o))
            out.append(g)
        return theory.canonicalize(Antichain(tuple(out)))
    return new


def fo_least_model(p: Problem, theory: Theory,
                   max_rounds: int = 50) -> EntwinedStructure | None:
    """Compute the least model of a first-order problem by fixpoint
    iteration over descriptor tables; None if the iteration does not
    converge within max_rounds."""
    dim = theory.dim
    # per predicate: ground-argument row -> descriptor (active) or bool
    state: dict[str, dict] = {}
    layouts: dict[str, tuple[list[Sort], bool]] = {}
    for pname, psort in p.decls:
        gsorts = nonw_sorts(psort)
        active = W in arg_sorts(psort)
        for s in gsorts:
            if s not in (FIN, PROP):
                raise ValueError("least-model engine requires a first-order "
                                 "problem")
        layouts[pname] = (gsorts, active)
        rows = itertools.product(*(
            list(p.fin_elems) if s == FIN else [False, True] for s in gsorts))
        init = theory.empty_upset() if active else False
        state[pname] = {r: init for r in rows}

    def ground_dom(s: Sort):
        return list(p.fin_elems) if s == FIN else [False, True]

    def atom_formula(a: Atom, val: dict, wvars: set[str]) -> P.Formula:
        if isinstance(a, BgAtom):
            sval_env = {n: v for n, v in val.items() if isinstance(v, str)}
            return compile_atom(a, theory, sval_env)
        head, args = spine(a.term)
        if not isinstance(head, PredRef):
            raise ValueError("least-model engine requires a first-order "
                             "problem")
        gsorts, active = layouts[head.name]
        grounds: list = []
        wterm: Term | None = None
        for t in args:
            sort_is_w = isinstance(t, (WLit, WOp)) or (
                isinstance(t, Var) and t.name in wvars)
            if sort_is_w:
                wterm = t
            elif isinstance(t, Var):
                grounds.append(val[t.name])
            elif isinstance(t, SConst):
                grounds.append(t.name)
            else:
                raise ValueError("non-atomic argument in a first-order atom")
        entry = state[head.name][tuple(grounds)]
        if not active:
            return P.TRUE if entry else P.FALSE
        if isinstance(wterm, Var):
            comps = _w_comps(wterm.name, dim)
            return theory.upset_formula(entry, comps)
        wpt = _eval_w(wterm, {}, dim)
        return P.TRUE if theory.member(wpt, entry) else P.FALSE

    def body_formula(b: BodyF, val: dict, wvars: set[str]) -> P.Formula:
        if isinstance(b, AndF):
            return P.conj(body_formula(x, val, wvars) for x in b.args)
        if isinstance(b, OrF):
            return P.disj(body_formula(x, val, wvars) for x in b.args)
        return atom_formula(b, val, wvars)

    nat_bound = (lambda cs: [P.ge(P.LinTerm.of_var(c), P.LinTerm.of_const(0))
                             for c in cs]) if theory.nat else (lambda cs: [])

    for rnd in range(max_rounds):
        changed = False
        for c in p.clauses:
            hname, hargs = c.head
            gsorts, active = layouts[hname]
            wvars = {n for n, s in c.vars if s == W}
            gvars = [(n, s) for n, s in c.vars if s != W]
            hw: Term | None = None
            hground: list[Term] = []
            for t in hargs:
                if isinstance(t, (WLit, WOp)) or (
                        isinstance(t, Var) and t.name in wvars):
                    hw = t
                else:
                    hground.append(t)
            for combo in itertools.product(*(ground_dom(s) for _, s in gvars)):
                val = {n: v for (n, _), v in zip(gvars, combo)}
                row = tuple(val[t.name] if isinstance(t, Var) else t.name
                            for t in hground)
                body = body_formula(c.body, val, wvars)
                if body is P.FALSE:
                    continue
                if not active:
                    if state[hname][row]:
                        continue
                    f = body
                    evars = [v for n in wvars for v in _w_comps(n, dim)]
                    f = P.conj([f] + nat_bound(evars))
                    for v in evars:
                        f = P.Exists(v, f)
                    if P.decide(f, nat_vars=evars if theory.nat else ()):
                        state[hname][row] = True
                        changed = True
                    continue
                old = state[hname][row]
                if isinstance(hw, Var):
                    comps = _w_comps(hw.name, dim)
                    others = [v for n in wvars if n != hw.name
                              for v in _w_comps(n, dim)]
                else:
                    # concrete head point: derive it when the body closes
                    comps_pt = _eval_w(hw, {}, dim)
                    if theory.member(comps_pt, old):
                        continue
                    evars = [v for n in wvars for v in _w_comps(n, dim)]
                    f = P.conj([body] + nat_bound(evars))
                    for v in evars:
                        f = P.Exists(v, f)
                    if P.decide(f, nat_vars=evars if theory.nat else ()):
                        new = extract_upset(
                            theory,
                            P.disj([theory.upset_formula(old, ["_x%d" % i for i in range(dim)]),
                                    P.conj([P.eq(P.LinTerm.of_var("_x%d" % i),
                                                 P.LinTerm.of_const(comps_pt[i]))
                                            for i in range(dim)])]),
                            ["_x%d" % i for i in range(dim)])
                        state[hname][row] = new
                        changed = True
                    continue
                f = P.conj([body] + nat_bound(others))
                for v in others:
                    f = P.Exists(v, f)
                f = P.eliminate(f, nat_vars=others if theory.nat else ())
                phi = P.disj([theory.upset_formula(old, comps), f])
                # quick no-op test: is phi ⊆ old?
                gap = [phi, P.Not(theory.upset_formula(old, comps))]
                if P.sat_exists_all(gap + nat_bound(comps)) is None:
                    continue
                new = extract_upset(theory, phi, comps)
                if rnd >= _WIDEN_AFTER:
                    new = _widen(theory, old, new)
                state[hname][row] = new
                changed = True
        if not changed:
            interps: dict[str, Value] = {}
            m0 = EntwinedStructure(p, theory, {})
            for pname, psort in p.decls:
                gsorts, active = layouts[pname]
                rows = list(itertools.product(*(ground_dom(s)
                                                for s in gsorts)))
                if active:
                    interps[pname] = ActVal(
                        psort, tuple(state[pname][r] for r in rows))
                elif psort == PROP:
                    interps[pname] = state[pname][()]
                else:
                    interps[pname] = _fn_from_bits(
                        m0, psort, [state[pname][r] for r in rows])
            return EntwinedStructure(p, theory, interps)
    return None


# ---------------------------------------------------------------------------
# bounded canonical model (first-order test oracle)


@dataclass
class BoundedModel:
    relations: dict[str, set[tuple]]
    goal_violated: bool
    window: int

    def holds(self, pred: str, args: tuple) -> bool:
        return args in self.relations.get(pred, set())


def _window_grid(theory: Theory, window: int) -> list[tuple[int, ...]]:
    if theory.nat:
        return list(itertools.product(range(window + 1), repeat=theory.dim))
    return [(x,) for x in range(-window, window + 1)]


def _py_expr(f: P.Formula, names: dict[str, str]) -> str:
    """Render a quantifier-free formula as a python boolean expression over
    the variables renamed per `names`."""
    def term(t: P.LinTerm) -> str:
        parts = [str(t.const)]
        for v, c in t.coeffs:
            parts.append(f"{c}*{names[v]}")
        return "+".join(parts)

    match f:
        case P.TrueF():
            return "True"
        case P.FalseF():
            return "False"
        case P.Cmp(op, t):
            pyop = {"<=": "<=", "<": "<", "=": "==", "!=": "!=",
                    ">": ">", ">=": ">="}[op]
            return f"(({term(t)}){pyop}0)"
        case P.Div(d, t, neg):
            rel = "!=" if neg else "=="
            return f"((({term(t)})%{d}){rel}0)"
        case P.Not(g):
            return f"(not {_py_expr(g, names)})"
        case P.And(args):
            return "(" + " and ".join(_py_expr(a, names) for a in args) + ")"
        case P.Or(args):
            return "(" + " or ".join(_py_expr(a, names) for a in args) + ")"
    raise TypeError(f"not quantifier-free: {f}")


def bounded_canonical_model(p: Problem, theory: Theory,
                            window: int) -> BoundedModel:
    """Least-fixpoint iteration of immediate consequence over numeric points
    inside the window.  Only meaningful when the derivations of interest stay
    within the window; used to cross-check verdicts on curated problems."""
    grid = _window_grid(theory, window)
    grid_set = set(grid)
    dim = theory.dim
    rels: dict[str, set[tuple]] = {n: set() for n, _ in p.decls}

    def compile_instance(c: Clause, val: dict):
        """For a fixed finite-sort valuation, compile the clause into a fast
        membership test over an assignment tuple of the clause's W vars."""
        wnames = [n for n, s in c.vars if s == W]
        widx = {n: i for i, n in enumerate(wnames)}
        names = {comp_var(n, j + 1): f"w[{i}][{j}]"
                 for n, i in widx.items() for j in range(dim)}
        bgs: list[P.Formula] = []
        fgs: list[tuple[str, list]] = []
        for a in c.body_atoms():
            if isinstance(a, BgAtom):
                bgs.append(compile_atom(a, theory, val))
            else:
                head, args = spine(a.term)
                if not isinstance(head, PredRef):
                    raise ValueError(
                        "bounded oracle requires first-order problems")
                getters = []
                for t in args:
                    if isinstance(t, Var) and t.name in widx:
                        getters.append(("w", widx[t.name]))
                    elif isinstance(t, Var):
                        getters.append(("k", val[t.name]))
                    elif isinstance(t, SConst):
                        getters.append(("k", t.name))
                    else:
                        getters.append(("k", _eval_w(t, {}, dim)))
                fgs.append((head.name, getters))
        bg_f = P.conj(bgs)
        bg_test = eval("lambda w: " + _py_expr(bg_f, names))  # noqa: S307
        return wnames, bg_test, fgs

    def fg_key(getters: list, w: tuple) -> tuple:
        return tuple(w[i] if k == "w" else i for k, i in getters)

    def fin_vals(c: Clause) -> Iterator[dict]:
        gvars = [(n, s) for n, s in c.vars if s != W]
        doms = []
        for _, s in gvars:
            if s == FIN:
                doms.append(list(p.fin_elems))
            else:
                raise ValueError("bounded oracle requires first-order "
                                 "problems")
        for combo in itertools.product(*doms):
            yield {n: v for (n, _), v in zip(gvars, combo)}

    def head_key(hargs, val: dict, wnames: list, w: tuple):
        out = []
        for t in hargs:
            if isinstance(t, Var) and t.name in val:
                out.append(val[t.name])
            elif isinstance(t, Var):
                out.append(w[wnames.index(t.name)])
            elif isinstance(t, SConst):
                out.append(t.name)
            else:
                out.append(_eval_w(t, {}, dim))
        return tuple(out)

    compiled = []
    for c in p.clauses:
        for val in fin_vals(c):
            compiled.append((c, val, *compile_instance(c, val)))

    changed = True
    while changed:
        changed = False
        for c, val, wnames, bg_test, fgs in compiled:
            hname, hargs = c.head
            rel = rels[hname]
            for w in itertools.product(grid, repeat=len(wnames)):
                if not bg_test(w):
                    continue
                if any(fg_key(g, w) not in rels[q] for q, g in fgs):
                    continue
                key = head_key(hargs, val, wnames, w)
                if any(isinstance(x, tuple) and x not in grid_set
                       for x in key):
                    continue  # head point fell outside the window
                if key not in rel:
                    rel.add(key)
                    changed = True

    violated = False
    for g in p.goals:
        for val in fin_vals(g):
            wnames, bg_test, fgs = compile_instance(g, val)
            for w in itertools.product(grid, repeat=len(wnames)):
                if bg_test(w) and \
                        all(fg_key(x, w) in rels[q] for q, x in fgs):
                    violated = True
                    break
            if violated:
                break
        if violated:
            break
    return BoundedModel(rels, violated, window)


# ---------------------------------------------------------------------------
# serialization


def _canon_to_json(c: CanonicalValue) -> dict:
    match c:
        case Top(s):
            return {"top": print_sort(s)}
        case SVal(n):
            return {"s": n}
        case PredApp(p_, args):
            return {"app": [p_] + [_canon_to_json(a) for a in args]}
    raise TypeError(c)


def _canon_from_json(d) -> CanonicalValue:
    if not isinstance(d, dict):
        raise SchemaError(f"bad canonical value {d!r}")
    if "top" in d:
        return Top(_sort_from_str(d["top"]))
    if "s" in d:
        return SVal(str(d["s"]))
    if "app" in d:
        a = d["app"]
        if not a or not isinstance(a[0], str):
            raise SchemaError("bad application value")
        return PredApp(a[0], tuple(_canon_from_json(x) for x in a[1:]))
    raise SchemaError(f"bad canonical value {d!r}")


def _sort_from_str(s: str) -> Sort:
    from .syntax import _parse_sort, read_sexprs
    try:
        return _parse_sort(read_sexprs(s)[0])
    except Exception as e:
        raise SchemaError(f"bad sort string {s!r}: {e}")


def serialize_model(m: EntwinedStructure) -> dict:
    p = m.problem
    stages = max((type_order(s) for _, s in p.decls), default=1)
    preds = {}
    for pname, psort in p.decls:
        v = m.interps[pname]
        kind = "active" if psort != PROP and classify(psort) == "active" \
            else "inactive"
        rows = []
        if kind == "active":
            assert isinstance(v, ActVal)
            wpos = w_position(psort)
            nw = nonw_sorts(psort)
            for row, desc in zip(m.rows(psort), v.descs):
                pre = row[:wpos]
                post = row[wpos:]
                rows.append({
                    "pre": [_canon_to_json(m.canon_of(s_, x))
                            for s_, x in zip(nw[:wpos], pre)],
                    "post": [_canon_to_json(m.canon_of(s_, x))
                             for s_, x in zip(nw[wpos:], post)],
                    "upset": upset_to_json(desc),
                })
        else:
            table = m.full_table(psort, v)
            args_sorts = arg_sorts(psort)
            combos = itertools.product(*(m.frame(s_) for s_ in args_sorts))
            for combo, b in zip(combos, table):
                rows.append({
                    "args": [_canon_to_json(m.canon_of(s_, x))
                             for s_, x in zip(args_sorts, combo)],
                    "value": bool(b),
                })
        preds[pname] = {"kind": kind, "rows": rows}
    return {"stages": stages, "predicates": preds}


def deserialize_model(p: Problem, theory: Theory, data: dict,
                      max_frame: int = MAX_FRAME) -> EntwinedStructure:
    if not isinstance(data, dict) or "predicates" not in data:
        raise SchemaError("witness must be an object with a 'predicates' key")
    pd = data["predicates"]
    if not isinstance(pd, dict):
        raise SchemaError("'predicates' must be an object")
    decls = p.decl_map
    for name in pd:
        if name not in decls:
            raise SchemaError(f"undeclared predicate {name!r} in witness")
    for name in decls:
        if name not in pd:
            raise SchemaError(f"witness missing predicate {name!r}")

    interps: dict[str, Value] = {}
    for pname, psort in sorted(p.decls, key=lambda d: (type_order(d[1]), d[0])):
        m = EntwinedStructure(p, theory, interps, max_frame)
        entry = pd[pname]
        kind = "active" if psort != PROP and classify(psort) == "active" \
            else "inactive"
        if not isinstance(entry, dict) or entry.get("kind") != kind or \
                not isinstance(entry.get("rows"), list):
            raise SchemaError(f"bad entry for predicate {pname!r}")
        if kind == "active":
            nw = nonw_sorts(psort)
            wpos = w_position(psort)
            rows = m.rows(psort)
            table: dict[tuple, Upset] = {}
            for r in entry["rows"]:
                if not isinstance(r, dict) or "upset" not in r:
                    raise SchemaError(f"bad row in {pname!r}")
                pre = [m.resolve_canon(s_, _canon_from_json(x))
                       for s_, x in zip(nw, r.get("pre", []))]
                post = [m.resolve_canon(s_, _canon_from_json(x))
                        for s_, x in zip(nw[len(pre):], r.get("post", []))]
                key = tuple(pre) + tuple(post)
                if len(key) != len(nw):
                    raise FrameInconsistency(
                        f"row arity mismatch for {pname!r}")
                try:
                    u = canonical_upset(theory, upset_from_json(r["upset"]))
                except Exception as e:
                    raise SchemaError(f"bad upset in {pname!r}: {e}")
                if key in table:
                    raise FrameInconsistency(f"duplicate row in {pname!r}")
                table[key] = u
            descs = []
            for row in rows:
                if row not in table:
                    raise FrameInconsistency(
                        f"witness for {pname!r} misses a frame row")
                descs.append(table.pop(row))
            if table:
                raise FrameInconsistency(
                    f"witness for {pname!r} has rows outside the frame")
            interps[pname] = ActVal(psort, tuple(descs))
            del wpos
        elif psort == PROP:
            rows = entry["rows"]
            if len(rows) != 1 or "value" not in rows[0]:
                raise SchemaError(f"bad propositional entry {pname!r}")
            interps[pname] = bool(rows[0]["value"])
        else:
            args_sorts = arg_sorts(psort)
            combos = list(itertools.product(
                *(m.frame(s_) for s_ in args_sorts)))
            table2: dict[tuple, bool] = {}
            for r in entry["rows"]:
                if not isinstance(r, dict) or "value" not in r:
                    raise SchemaError(f"bad row in {pname!r}")
                key = tuple(m.resolve_canon(s_, _canon_from_json(x))
                            for s_, x in zip(args_sorts, r.get("args", [])))
                if len(key) != len(args_sorts):
                    raise FrameInconsistency(f"row arity mismatch {pname!r}")
                if key in table2:
                    raise FrameInconsistency(f"duplicate row in {pname!r}")
                table2[key] = bool(r["value"])
            bits = []
            for combo in combos:
                if combo not in table2:
                    raise FrameInconsistency(
                        f"witness for {pname!r} misses a frame row")
                bits.append(table2.pop(combo))
            if table2:
                raise FrameInconsistency(
                    f"witness for {pname!r} has rows outside the frame")

            it = iter(bits)

            def build(s: Sort) -> Value:
                if s == PROP:
                    return next(it)
                dom = m.frame(s.arg)
                return FnVal(s, tuple(build(s.res) for _ in dom))

            interps[pname] = build(psort)
    return EntwinedStructure(p, theory, interps, max_frame)


def load_model(p: Problem, theory: Theory, path: str) -> EntwinedStructure:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise SchemaError(f"witness is not valid JSON: {e}")
    return deserialize_model(p, theory, data)
