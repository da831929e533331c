"""Linear integer arithmetic: terms, formulas, Cooper-style quantifier
elimination, and a decision procedure for closed sentences.

Terms are linear combinations of integer variables with arbitrary-precision
coefficients.  Formulas are built from comparisons, divisibility atoms,
boolean connectives and quantifiers.  Divisibility atoms are produced by
elimination and are accepted on input; the surface language never emits them.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping


# ---------------------------------------------------------------------------
# linear terms


@dataclass(frozen=True)
class LinTerm:
    """const + sum(coeff * var); coeffs sorted by var name, zero-free."""

    const: int
    coeffs: tuple[tuple[str, int], ...] = ()

    @staticmethod
    def of_const(c: int) -> "LinTerm":
        return LinTerm(c)

    @staticmethod
    def of_var(name: str, coeff: int = 1) -> "LinTerm":
        if coeff == 0:
            return LinTerm(0)
        return LinTerm(0, ((name, coeff),))

    @staticmethod
    def make(const: int, coeffs: Mapping[str, int]) -> "LinTerm":
        items = tuple(sorted((v, c) for v, c in coeffs.items() if c != 0))
        return LinTerm(const, items)

    def coeff(self, var: str) -> int:
        for v, c in self.coeffs:
            if v == var:
                return c
        return 0

    @functools.cached_property
    def vars(self) -> tuple[str, ...]:
        return tuple(v for v, _ in self.coeffs)

    def is_const(self) -> bool:
        return not self.coeffs

    def add(self, other: "LinTerm") -> "LinTerm":
        d = dict(self.coeffs)
        for v, c in other.coeffs:
            d[v] = d.get(v, 0) + c
        return LinTerm.make(self.const + other.const, d)

    def neg(self) -> "LinTerm":
        return LinTerm(-self.const, tuple((v, -c) for v, c in self.coeffs))

    def sub(self, other: "LinTerm") -> "LinTerm":
        return self.add(other.neg())

    def scale(self, k: int) -> "LinTerm":
        if k == 0:
            return LinTerm(0)
        return LinTerm(self.const * k, tuple((v, c * k) for v, c in self.coeffs))

    def drop(self, var: str) -> "LinTerm":
        return LinTerm(self.const, tuple((v, c) for v, c in self.coeffs if v != var))

    def subst(self, var: str, t: "LinTerm") -> "LinTerm":
        c = self.coeff(var)
        if c == 0:
            return self
        return self.drop(var).add(t.scale(c))

    def eval(self, env: Mapping[str, int]) -> int:
        total = self.const
        for v, c in self.coeffs:
            total += c * env[v]
        return total

    def __str__(self) -> str:
        parts = []
        for v, c in self.coeffs:
            if c == 1:
                parts.append(v)
            elif c == -1:
                parts.append(f"-{v}")
            else:
                parts.append(f"{c}*{v}")
        if self.const != 0 or not parts:
            parts.append(str(self.const))
        return " + ".join(parts).replace("+ -", "- ")


# ---------------------------------------------------------------------------
# formulas


@dataclass(frozen=True)
class TrueF:
    def __str__(self) -> str:
        return "true"


@dataclass(frozen=True)
class FalseF:
    def __str__(self) -> str:
        return "false"


TRUE = TrueF()
FALSE = FalseF()

# comparison ops are over "t op 0"
_OPS = ("<", "<=", "=", "!=", ">=", ">")


@dataclass(frozen=True)
class Cmp:
    op: str
    t: LinTerm

    def __post_init__(self) -> None:
        if self.op not in _OPS:
            raise ValueError(f"bad comparison op {self.op!r}")

    def __str__(self) -> str:
        return f"({self.t} {self.op} 0)"


@dataclass(frozen=True)
class Div:
    """d | t (or its negation when neg is set)."""

    d: int
    t: LinTerm
    neg: bool = False

    def __str__(self) -> str:
        bar = "∤" if self.neg else "|"
        return f"({self.d} {bar} {self.t})"


@dataclass(frozen=True)
class Not:
    f: "Formula"

    def __str__(self) -> str:
        return f"(not {self.f})"


@dataclass(frozen=True)
class And:
    args: tuple["Formula", ...]

    def __str__(self) -> str:
        return "(and " + " ".join(map(str, self.args)) + ")"


@dataclass(frozen=True)
class Or:
    args: tuple["Formula", ...]

    def __str__(self) -> str:
        return "(or " + " ".join(map(str, self.args)) + ")"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"

    def __str__(self) -> str:
        return f"(exists ({self.var}) {self.body})"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"

    def __str__(self) -> str:
        return f"(forall ({self.var}) {self.body})"


Formula = TrueF | FalseF | Cmp | Div | Not | And | Or | Exists | Forall


# constructors with on-the-fly simplification -------------------------------


def cmp_atom(op: str, t: LinTerm) -> Formula:
    if t.is_const():
        c = t.const
        holds = {
            "<": c < 0, "<=": c <= 0, "=": c == 0,
            "!=": c != 0, ">=": c >= 0, ">": c > 0,
        }[op]
        return TRUE if holds else FALSE
    g = math.gcd(*(abs(c) for _, c in t.coeffs))
    if g > 1:
        # t = g*u + c; rewrite each op over u with exact integer bounds
        u = LinTerm(0, tuple((v, c // g) for v, c in t.coeffs))
        c = t.const
        if op in ("=", "!="):
            if c % g != 0:
                return TRUE if op == "!=" else FALSE
            t = u.add(LinTerm.of_const(c // g))
        elif op == "<":
            # g*u + c < 0  <=>  u <= floor((-c-1)/g)  <=>  u - floor(...) - 1 < 0
            b = (-c - 1) // g
            return cmp_atom("<", u.sub(LinTerm.of_const(b + 1)))
        elif op == "<=":
            b = (-c) // g
            return cmp_atom("<", u.sub(LinTerm.of_const(b + 1)))
        elif op == ">":
            return cmp_atom("<", t.neg())
        elif op == ">=":
            return cmp_atom("<=", t.neg())
    return Cmp(op, t)


def le(a: LinTerm, b: LinTerm) -> Formula:
    return cmp_atom("<=", a.sub(b))


def lt(a: LinTerm, b: LinTerm) -> Formula:
    return cmp_atom("<", a.sub(b))


def eq(a: LinTerm, b: LinTerm) -> Formula:
    return cmp_atom("=", a.sub(b))


def ne(a: LinTerm, b: LinTerm) -> Formula:
    return cmp_atom("!=", a.sub(b))


def ge(a: LinTerm, b: LinTerm) -> Formula:
    return cmp_atom(">=", a.sub(b))


def gt(a: LinTerm, b: LinTerm) -> Formula:
    return cmp_atom(">", a.sub(b))


def div_atom(d: int, t: LinTerm, neg: bool = False) -> Formula:
    d = abs(d)
    if d == 0:
        raise ValueError("divisibility by zero")
    if d == 1:
        return FALSE if neg else TRUE
    if t.is_const():
        holds = t.const % d == 0
        return (TRUE if holds else FALSE) if not neg else (FALSE if holds else TRUE)
    return Div(d, t, neg)


def conj(args: Iterable[Formula]) -> Formula:
    out: list[Formula] = []
    seen: set[Formula] = set()
    for a in args:
        if isinstance(a, FalseF):
            return FALSE
        if isinstance(a, TrueF):
            continue
        if isinstance(a, And):
            for x in a.args:
                if isinstance(x, FalseF):
                    return FALSE
                if not isinstance(x, TrueF) and x not in seen:
                    seen.add(x)
                    out.append(x)
        elif a not in seen:
            seen.add(a)
            out.append(a)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(args: Iterable[Formula]) -> Formula:
    out: list[Formula] = []
    seen: set[Formula] = set()
    for a in args:
        if isinstance(a, TrueF):
            return TRUE
        if isinstance(a, FalseF):
            continue
        if isinstance(a, Or):
            for x in a.args:
                if isinstance(x, TrueF):
                    return TRUE
                if not isinstance(x, FalseF) and x not in seen:
                    seen.add(x)
                    out.append(x)
        elif a not in seen:
            seen.add(a)
            out.append(a)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def neg_f(f: Formula) -> Formula:
    if isinstance(f, TrueF):
        return FALSE
    if isinstance(f, FalseF):
        return TRUE
    if isinstance(f, Not):
        return f.f
    return Not(f)


def implies(a: Formula, b: Formula) -> Formula:
    return disj([neg_f(a), b])


# ---------------------------------------------------------------------------
# free variables, substitution, evaluation


def free_vars(f: Formula) -> frozenset[str]:
    match f:
        case TrueF() | FalseF():
            return frozenset()
        case Cmp(_, t) | Div(_, t, _):
            return frozenset(t.vars)
        case Not(g):
            return free_vars(g)
        case And(args) | Or(args):
            s: frozenset[str] = frozenset()
            for a in args:
                s |= free_vars(a)
            return s
        case Exists(v, b) | Forall(v, b):
            return free_vars(b) - {v}
    raise TypeError(f)


def subst(f: Formula, var: str, t: LinTerm) -> Formula:
    match f:
        case TrueF() | FalseF():
            return f
        case Cmp(op, u):
            return cmp_atom(op, u.subst(var, t))
        case Div(d, u, neg):
            return div_atom(d, u.subst(var, t), neg)
        case Not(g):
            return neg_f(subst(g, var, t))
        case And(args):
            return conj(subst(a, var, t) for a in args)
        case Or(args):
            return disj(subst(a, var, t) for a in args)
        case Exists(v, b):
            if v == var:
                return f
            if v in t.vars:
                raise ValueError("substitution would capture bound variable")
            return Exists(v, subst(b, var, t))
        case Forall(v, b):
            if v == var:
                return f
            if v in t.vars:
                raise ValueError("substitution would capture bound variable")
            return Forall(v, subst(b, var, t))
    raise TypeError(f)


def evaluate(f: Formula, env: Mapping[str, int]) -> bool:
    """Evaluate a quantifier-free formula under a total assignment."""
    match f:
        case TrueF():
            return True
        case FalseF():
            return False
        case Cmp(op, t):
            v = t.eval(env)
            return {"<": v < 0, "<=": v <= 0, "=": v == 0,
                    "!=": v != 0, ">=": v >= 0, ">": v > 0}[op]
        case Div(d, t, neg):
            holds = t.eval(env) % d == 0
            return not holds if neg else holds
        case Not(g):
            return not evaluate(g, env)
        case And(args):
            return all(evaluate(a, env) for a in args)
        case Or(args):
            return any(evaluate(a, env) for a in args)
    raise ValueError(f"quantifier in evaluate: {f}")


class _ZeroEnv(dict):
    def __missing__(self, key: str) -> int:
        return 0


def evaluate0(f: Formula, env: Mapping[str, int]) -> bool:
    """Evaluate with 0 as the default for unassigned variables."""
    return evaluate(f, _ZeroEnv(env))


def close(f: Formula, env: Mapping[str, int]) -> Formula:
    """Substitute an assignment for the free variables of f."""
    g = f
    for v in free_vars(f):
        g = subst(g, v, LinTerm.of_const(env[v]))
    return g


# ---------------------------------------------------------------------------
# negation normal form with strict-< literals


def _nnf(f: Formula, neg: bool) -> Formula:
    match f:
        case TrueF():
            return FALSE if neg else TRUE
        case FalseF():
            return TRUE if neg else FALSE
        case Not(g):
            return _nnf(g, not neg)
        case And(args):
            if neg:
                return disj(_nnf(a, True) for a in args)
            return conj(_nnf(a, False) for a in args)
        case Or(args):
            if neg:
                return conj(_nnf(a, True) for a in args)
            return disj(_nnf(a, False) for a in args)
        case Div(d, t, n):
            return div_atom(d, t, n != neg)
        case Cmp(op, t):
            if neg:
                op = {"<": ">=", "<=": ">", "=": "!=",
                      "!=": "=", ">=": "<", ">": "<="}[op]
            one = LinTerm.of_const(1)
            match op:
                case "<":
                    return cmp_atom("<", t)
                case "<=":
                    return cmp_atom("<", t.sub(one))  # t <= 0  <=>  t - 1 < 0
                case "=":
                    return conj([cmp_atom("<", t.sub(one)), cmp_atom("<", t.neg().sub(one))])
                case "!=":
                    return disj([cmp_atom("<", t), cmp_atom("<", t.neg())])
                case ">=":
                    return cmp_atom("<", t.neg().sub(one))
                case ">":
                    return cmp_atom("<", t.neg())
        case Exists(v, b):
            if neg:
                return Forall(v, _nnf(b, True))
            return Exists(v, _nnf(b, False))
        case Forall(v, b):
            if neg:
                return Exists(v, _nnf(b, True))
            return Forall(v, _nnf(b, False))
    raise TypeError(f)


def nnf(f: Formula) -> Formula:
    return _nnf(f, False)


# ---------------------------------------------------------------------------
# Cooper elimination


def _lcm(a: int, b: int) -> int:
    return abs(a * b) // math.gcd(a, b)


def _atoms_with(f: Formula, var: str) -> list[Formula]:
    out: list[Formula] = []

    def walk(g: Formula) -> None:
        match g:
            case Cmp(_, t) | Div(_, t, _):
                if t.coeff(var) != 0:
                    out.append(g)
            case And(args) | Or(args):
                for a in args:
                    walk(a)
            case _:
                pass

    walk(f)
    return out


def _map_atoms(f: Formula, fn) -> Formula:
    match f:
        case And(args):
            return conj(_map_atoms(a, fn) for a in args)
        case Or(args):
            return disj(_map_atoms(a, fn) for a in args)
        case _:
            return fn(f)


def _cooper(var: str, f: Formula) -> Formula:
    """Eliminate (exists var . f) for f quantifier-free in NNF with strict-<
    comparison literals and (possibly negated) divisibility literals."""
    atoms = _atoms_with(f, var)
    if not atoms:
        return f

    delta = 1
    for a in atoms:
        t = a.t  # type: ignore[union-attr]
        delta = _lcm(delta, t.coeff(var))

    # Rescale every literal so the variable's coefficient is +-delta, then
    # read it through x' = delta * var.  Literal shapes after rescaling:
    #   ('ub', s): x' + s < 0      ('lb', s): s < x'      ('div', d, s, neg): d | x' + s
    def rescale(g: Formula):
        match g:
            case Cmp(op, t):
                c = t.coeff(var)
                if c == 0:
                    return g
                assert op == "<", f"non-strict literal reached cooper: {g}"
                m = delta // abs(c)
                t2 = t.scale(m)
                rest = t2.drop(var)
                if c > 0:
                    return ("ub", rest)
                return ("lb", rest)
            case Div(d, t, neg):
                c = t.coeff(var)
                if c == 0:
                    return g
                m = delta // abs(c)
                t2 = t.scale(m)
                rest = t2.drop(var)
                if c < 0:
                    rest = rest.neg()  # d | -x' + s  <=>  d | x' - s
                return ("div", d * m, rest, neg)
        return g

    # Build substituted instances directly: given a LinTerm x_t for x',
    # rebuild each literal from its rescaled shape.
    def build(x_t: LinTerm, minus_inf: bool) -> Formula:
        def fn(g: Formula) -> Formula:
            r = rescale(g)
            if isinstance(r, tuple):
                if r[0] == "ub":
                    if minus_inf:
                        return TRUE
                    return cmp_atom("<", x_t.add(r[1]))
                if r[0] == "lb":
                    if minus_inf:
                        return FALSE
                    return cmp_atom("<", r[1].sub(x_t))
                if r[0] == "div":
                    return div_atom(r[1], x_t.add(r[2]), r[3])
            return r  # atom without var

        return _map_atoms(f, fn)

    lbs: list[LinTerm] = []
    ubs: list[LinTerm] = []
    bigd = delta
    for a in atoms:
        r = rescale(a)
        if isinstance(r, tuple):
            if r[0] == "lb":
                lbs.append(r[1])
            elif r[0] == "ub":
                ubs.append(r[1])
            else:
                bigd = _lcm(bigd, r[1])

    def build_plus(x_t: LinTerm, plus_inf: bool) -> Formula:
        def fn(g: Formula) -> Formula:
            r = rescale(g)
            if isinstance(r, tuple):
                if r[0] == "ub":
                    if plus_inf:
                        return FALSE
                    return cmp_atom("<", x_t.add(r[1]))
                if r[0] == "lb":
                    if plus_inf:
                        return TRUE
                    return cmp_atom("<", r[1].sub(x_t))
                if r[0] == "div":
                    return div_atom(r[1], x_t.add(r[2]), r[3])
            return r

        return _map_atoms(f, fn)

    # Every candidate x' must also satisfy delta | x' (from x' = delta * x).
    out: list[Formula] = []
    if len(lbs) <= len(ubs):
        cands = [(LinTerm.of_const(j), True) for j in range(1, bigd + 1)] + [
            (b.add(LinTerm.of_const(j)), False) for b in lbs for j in range(1, bigd + 1)
        ]
        for x_t, inf in cands:
            out.append(conj([div_atom(delta, x_t), build(x_t, minus_inf=inf)]))
    else:
        # mirror form: sample below each upper bound and at +infinity.
        # x' + s < 0 gives upper bound x' < -s; sample x' = -s - j.
        cands = [(LinTerm.of_const(-j), True) for j in range(1, bigd + 1)] + [
            (s.neg().sub(LinTerm.of_const(j)), False) for s in ubs for j in range(1, bigd + 1)
        ]
        for x_t, inf in cands:
            out.append(conj([div_atom(delta, x_t), build_plus(x_t, plus_inf=inf)]))
    return disj(out)


def _relativize(f: Formula, nat_vars: frozenset[str]) -> Formula:
    """Constrain quantifiers over naturals to non-negative values."""
    zero = LinTerm.of_const(0)
    match f:
        case Exists(v, b):
            b2 = _relativize(b, nat_vars)
            if v in nat_vars:
                return Exists(v, conj([ge(LinTerm.of_var(v), zero), b2]))
            return Exists(v, b2)
        case Forall(v, b):
            b2 = _relativize(b, nat_vars)
            if v in nat_vars:
                return Forall(v, implies(ge(LinTerm.of_var(v), zero), b2))
            return Forall(v, b2)
        case Not(g):
            return neg_f(_relativize(g, nat_vars))
        case And(args):
            return conj(_relativize(a, nat_vars) for a in args)
        case Or(args):
            return disj(_relativize(a, nat_vars) for a in args)
        case _:
            return f


def eliminate(f: Formula, nat_vars: Iterable[str] = ()) -> Formula:
    """Return an equivalent quantifier-free formula (may contain Div atoms).

    Variables listed in nat_vars range over the naturals wherever quantified;
    free occurrences are left unconstrained (callers add their own bounds).
    """
    f = _relativize(f, frozenset(nat_vars))

    def go(g: Formula) -> Formula:
        match g:
            case Exists(v, b):
                return _cooper(v, nnf(go(b)))
            case Forall(v, b):
                return neg_f(_cooper(v, _nnf(go(b), True)))
            case Not(h):
                return neg_f(go(h))
            case And(args):
                return conj(go(a) for a in args)
            case Or(args):
                return disj(go(a) for a in args)
            case _:
                return g

    return go(f)


def decide(f: Formula, nat_vars: Iterable[str] = ()) -> bool:
    """Decide a closed sentence."""
    if free_vars(f):
        raise ValueError(f"decide requires a sentence; free: {sorted(free_vars(f))}")
    g = eliminate(f, nat_vars)
    return evaluate(nnf(g), {})


# ---------------------------------------------------------------------------
# fast path: satisfiability of a single existential block
#
# The solver's hot queries are "exists xs . matrix" with no quantifier
# alternation.  We lazily expand the matrix into conjunctive branches and
# decide each branch by unit-equality substitution, interval propagation,
# and Cooper-style elimination one variable at a time with early exit.


def _lits_of(f: Formula, acc: list, pending: list) -> bool:
    """Split f into atomic literals (acc) and non-atomic parts (pending).
    Returns False if f is trivially unsatisfiable."""
    match f:
        case TrueF():
            return True
        case FalseF():
            return False
        case Cmp() | Div():
            acc.append(f)
            return True
        case And(args):
            for a in args:
                if not _lits_of(a, acc, pending):
                    return False
            return True
        case Not(g):
            return _lits_of(_nnf(g, True), acc, pending)
        case Or():
            pending.append(f)
            return True
    raise ValueError(f"quantifier reached branch expansion: {f}")


def _branches(fs: list[Formula]):
    """Lazy DNF: yield lists of atomic literals whose disjunction covers
    the conjunction of fs."""
    acc: list = []
    pending: list = []
    for f in fs:
        if not _lits_of(f, acc, pending):
            return
    if not pending:
        yield acc
        return
    first = pending[0]
    rest = pending[1:]
    assert isinstance(first, Or)
    for alt in first.args:
        yield from _branches([alt] + rest + acc)


def _propagate_intervals(lits: list) -> bool | None:
    """Interval constraint propagation; returns False when definitely
    unsatisfiable, None when inconclusive."""
    lo: dict[str, int | None] = {}
    hi: dict[str, int | None] = {}
    vs: set[str] = set()
    rows = []
    for f in lits:
        if isinstance(f, Cmp) and f.op in ("<=", "="):
            rows.append(f)
            vs.update(f.t.vars)
    for v in vs:
        lo[v] = None
        hi[v] = None

    def ceil_div(a: int, b: int) -> int:
        return -((-a) // b)

    for _ in range(40):
        changed = False
        for f in rows:
            # interval of the whole term: finite partial sums plus a count
            # of unbounded contributions, so excluding one var is O(1)
            lo_sum = hi_sum = f.t.const
            lo_none = hi_none = 0
            for v, c in f.t.coeffs:
                vl, vh = (lo[v], hi[v]) if c > 0 else (hi[v], lo[v])
                if vl is None:
                    lo_none += 1
                else:
                    lo_sum += c * vl
                if vh is None:
                    hi_none += 1
                else:
                    hi_sum += c * vh
            iseq = f.op == "="
            for v, c in f.t.coeffs:
                vl, vh = (lo[v], hi[v]) if c > 0 else (hi[v], lo[v])
                # literal: c*v + rest <= 0 (or = 0)
                if (lo_none - (1 if vl is None else 0)) == 0:
                    tlo = lo_sum if vl is None else lo_sum - c * vl
                    # c*v <= -rest <= -tlo
                    if c > 0:
                        b = (-tlo) // c
                        if vh is None or b < vh:
                            hi[v] = b
                            changed = True
                    else:
                        b = ceil_div(tlo, -c)
                        if vh is None or b > vh:
                            lo[v] = b
                            changed = True
                if iseq and (hi_none - (1 if vh is None else 0)) == 0:
                    thi = hi_sum if vh is None else hi_sum - c * vh
                    # c*v = -rest >= -thi
                    if c > 0:
                        b = ceil_div(-thi, c)
                        if vl is None or b > vl:
                            lo[v] = b
                            changed = True
                    else:
                        b = thi // (-c)
                        if vl is None or b < vl:
                            hi[v] = b
                            changed = True
        for v in vs:
            if lo[v] is not None and hi[v] is not None and lo[v] > hi[v]:
                return False
        if not changed:
            break
    return None


def _subst_lits(lits: list, var: str, t: LinTerm) -> list | None:
    """Substitute into every literal; None when a literal folds to false."""
    out = []
    for f in lits:
        if var not in f.t.vars:
            out.append(f)
            continue
        if type(f) is Cmp:
            g = cmp_atom(f.op, f.t.subst(var, t))
        else:
            g = div_atom(f.d, f.t.subst(var, t), f.neg)
        if g is FALSE:
            return None
        if g is not TRUE:
            out.append(g)
    return out


def _eval0(t: LinTerm, env: dict[str, int]) -> int:
    """Evaluate with 0 as the default for unconstrained variables."""
    total = t.const
    for v, c in t.coeffs:
        total += c * env.get(v, 0)
    return total


def _sat_lits(lits: list, depth: int = 0) -> dict[str, int] | None:
    """Satisfying assignment for a conjunction of Cmp/Div literals over the
    integers, or None.  Variables absent from the result are free; read
    them as 0."""
    # normalize comparisons to '<='/'=' over the integers, fold constants
    one = LinTerm.of_const(1)
    work: list = []
    for f in lits:
        if type(f) is Cmp:
            op = f.op
            if op == "<=" or op == "=":
                work.append(f)
                continue
            if op == "<":
                g = cmp_atom("<=", f.t.add(one))
            elif op == ">":
                g = cmp_atom("<=", f.t.neg().add(one))
            elif op == ">=":
                g = cmp_atom("<=", f.t.neg())
            else:  # '!=' splits into two branches
                rest = [x for x in lits if x is not f]
                a = cmp_atom("<=", f.t.add(one))
                b = cmp_atom("<=", f.t.neg().add(one))
                w = _sat_lits(rest + [a], depth)
                if w is not None:
                    return w
                return _sat_lits(rest + [b], depth)
            if g is FALSE:
                return None
            if g is not TRUE:
                work.append(g)
        elif f is FALSE:
            return None
        elif f is not TRUE:
            work.append(f)
    lits = work

    # unit equality substitution
    for i, f in enumerate(lits):
        if isinstance(f, Cmp) and f.op == "=":
            for v, c in f.t.coeffs:
                if abs(c) == 1:
                    rest = f.t.drop(v)
                    sol = rest.neg() if c == 1 else rest
                    nxt = _subst_lits(lits[:i] + lits[i + 1:], v, sol)
                    if nxt is None:
                        return None
                    w = _sat_lits(nxt, depth)
                    if w is not None:
                        w[v] = _eval0(sol, w)
                    return w

    if not lits:
        return {}
    if depth % 4 == 0 and _propagate_intervals(lits) is False:
        return None

    # per-variable elimination cost, in one pass over the literals
    stats: dict[str, list] = {}  # var -> [delta, nlb, nub, ndiv, has_eq]
    for f in lits:
        isdiv = isinstance(f, Div)
        for v, c in f.t.coeffs:
            st = stats.get(v)
            if st is None:
                st = stats[v] = [1, 0, 0, 0, False]
            st[0] = _lcm(st[0], c)
            if isdiv:
                st[3] += 1
            elif f.op == "=":
                st[4] = True
            elif (c > 0) == (f.op == "<="):
                st[2] += 1
            else:
                st[1] += 1
    if not stats:
        return {}

    def cost(v: str) -> tuple:
        d, nlb, nub, ndiv, has_eq = stats[v]
        if has_eq:
            return (0, 0, v)
        return (1, d * (min(nlb, nub) + 1) + ndiv, v)

    var = min(stats, key=cost)
    delta = stats[var][0]

    # rescale literals so the coefficient is +-delta; x' = delta * var
    eq_terms: list[LinTerm] = []
    lb_terms: list[LinTerm] = []   # x' >= s
    ub_terms: list[LinTerm] = []   # x' <= s
    divs: list[tuple[int, LinTerm, bool]] = []  # d | x' + s
    others: list = []
    for f in lits:
        c = f.t.coeff(var)
        if c == 0:
            others.append(f)
            continue
        m = delta // abs(c)
        t2 = f.t.scale(m)
        rest = t2.drop(var)
        if isinstance(f, Div):
            if c < 0:
                rest = rest.neg()
            divs.append((f.d * m, rest, f.neg))
        elif f.op == "=":
            eq_terms.append(rest.neg() if c > 0 else rest)
        elif c > 0:
            ub_terms.append(rest.neg())  # x' + rest <= 0
        else:
            lb_terms.append(rest)  # -x' + rest <= 0  =>  x' >= rest

    bigd = delta
    for d, _, _ in divs:
        bigd = _lcm(bigd, d)

    def try_candidate(x_t: LinTerm) -> dict[str, int] | None:
        new: list = [div_atom(delta, x_t)]
        for s in eq_terms:
            new.append(cmp_atom("=", x_t.sub(s)))
        for s in ub_terms:
            new.append(cmp_atom("<=", x_t.sub(s)))
        for s in lb_terms:
            new.append(cmp_atom("<=", s.sub(x_t)))
        for d, s, ng in divs:
            new.append(div_atom(d, x_t.add(s), ng))
        folded = []
        for g in new:
            if isinstance(g, FalseF):
                return None
            if not isinstance(g, TrueF):
                folded.append(g)
        w = _sat_lits(others + folded, depth + 1)
        if w is not None:
            w[var] = _eval0(x_t, w) // delta  # exact: delta | x_t was added
        return w

    if eq_terms:
        return try_candidate(eq_terms[0])
    if not lb_terms or not ub_terms:
        # x' = delta*var is unbounded in one direction: every lb/ub literal
        # holds far enough out, only residues mod bigd matter
        for j in range(0, bigd, delta):
            new: list = []
            ok = True
            for d, s, ng in divs:
                g = div_atom(d, s.add(LinTerm.of_const(j)), ng)
                if isinstance(g, FalseF):
                    ok = False
                    break
                if not isinstance(g, TrueF):
                    new.append(g)
            if not ok:
                continue
            w = _sat_lits(others + new, depth + 1)
            if w is None:
                continue
            if lb_terms:
                base = max(_eval0(b, w) for b in lb_terms)
                xp = base + ((j - base) % bigd)
            elif ub_terms:
                top = min(_eval0(a, w) for a in ub_terms)
                xp = top - ((top - j) % bigd)
            else:
                xp = j
            w[var] = xp // delta
            return w
        return None
    side = lb_terms if len(lb_terms) <= len(ub_terms) else ub_terms
    sign = 1 if side is lb_terms else -1
    for b in side:
        for j in range(bigd):
            w = try_candidate(b.add(LinTerm.of_const(sign * j)))
            if w is not None:
                return w
    return None


def reduce_conj(fs: Iterable[Formula], pins: dict[str, LinTerm]) -> list | None:
    """Flatten a conjunction and eliminate every variable pinned by a
    unit-coefficient equality, recording var -> term in pins (updated in
    place; existing entries are kept reduced).  The residual list is
    equivalent to the input over the remaining variables.  Returns None
    when the conjunction folds to false."""
    one = LinTerm.of_const(1)
    lits: list = []
    stack = list(fs)
    while stack:
        f = stack.pop()
        if f is TRUE or isinstance(f, TrueF):
            continue
        if f is FALSE or isinstance(f, FalseF):
            return None
        if isinstance(f, And):
            stack.extend(f.args)
            continue
        if type(f) is Cmp:
            op = f.op
            if op == "<":
                f = cmp_atom("<=", f.t.add(one))
            elif op == ">":
                f = cmp_atom("<=", f.t.neg().add(one))
            elif op == ">=":
                f = cmp_atom("<=", f.t.neg())
            if isinstance(f, TrueF):
                continue
            if isinstance(f, FalseF):
                return None
        lits.append(f)

    while True:
        pin = None
        for idx, f in enumerate(lits):
            if type(f) is Cmp and f.op == "=":
                for v, c in f.t.coeffs:
                    if c == 1 or c == -1:
                        rest = f.t.drop(v)
                        pin = (idx, v, rest.neg() if c == 1 else rest)
                        break
                if pin:
                    break
        if pin is None:
            return lits
        idx, v, t = pin
        del lits[idx]
        out: list = []
        for f in lits:
            vs = f.t.vars if isinstance(f, (Cmp, Div)) else free_vars(f)
            if v not in vs:
                out.append(f)
                continue
            g = subst(f, v, t)
            if isinstance(g, FalseF):
                return None
            if isinstance(g, TrueF):
                continue
            if isinstance(g, And):
                out.extend(g.args)
            else:
                out.append(g)
        lits = out
        for k, tv in pins.items():
            if v in tv.vars:
                pins[k] = tv.subst(v, t)
        pins[v] = t


def sat_exists(matrix: Formula) -> bool:
    """Satisfiability over the integers of a quantifier-free formula,
    i.e. truth of its existential closure."""
    return sat_exists_all([matrix]) is not None


def _norm_for_prop(lits: list) -> list | None:
    """Rewrite comparison literals to '<='/'=' so interval propagation can
    read them; returns None on a constant contradiction."""
    one = LinTerm.of_const(1)
    out: list = []
    for f in lits:
        if type(f) is Cmp and f.op not in ("<=", "="):
            if f.op == "<":
                g = cmp_atom("<=", f.t.add(one))
            elif f.op == ">":
                g = cmp_atom("<=", f.t.neg().add(one))
            elif f.op == ">=":
                g = cmp_atom("<=", f.t.neg())
            else:
                continue  # '!=' carries no interval information
            if g is FALSE:
                return None
            if g is not TRUE:
                out.append(g)
        elif f is FALSE:
            return None
        elif f is not TRUE:
            out.append(f)
    return out


def _solve_pend(lits: list, pends: list) -> dict[str, int] | None:
    """Branch over pending disjunctions, pruning each partial branch by
    interval propagation before expanding further."""
    if not pends:
        return _sat_lits(lits)
    work = _norm_for_prop(lits)
    if work is None or _propagate_intervals(work) is False:
        return None
    i = min(range(len(pends)), key=lambda j: len(pends[j].args))
    chosen = pends[i]
    rest = pends[:i] + pends[i + 1:]
    for alt in chosen.args:
        acc = list(lits)
        sub = list(rest)
        if _lits_of(alt, acc, sub):
            w = _solve_pend(acc, sub)
            if w is not None:
                return w
    return None


def sat_exists_all(matrices: list[Formula]) -> dict[str, int] | None:
    """Satisfying assignment for a conjunction of quantifier-free formulas
    (variables absent from the result are free; read them as 0), or None."""
    acc: list = []
    pend: list = []
    for f in matrices:
        if not _lits_of(f, acc, pend):
            return None
    return _solve_pend(acc, pend)
