"""Background theories and upset descriptors.

A theory fixes the numeric domain (Z for lia, N^d for nat) and a *working*
preorder: the natural componentwise order, or its converse for downward
problems.  Descriptors denote sets that are upward closed in the working
order:

  lia:  Empty | All | AtLeast(k)         ({w : k <=_work w})
  nat:  Antichain(gens)                  (union of principal upsets)

For downward nat problems generators may carry None ("omega") coordinates,
since the converse order needs unbounded generators to describe sets such
as the whole domain.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

from . import presburger as P
from .presburger import Formula, LinTerm
from .syntax import BgAtom, SConst, Term, Var, WLit, WOp


class TheoryError(Exception):
    pass


# ---------------------------------------------------------------------------
# descriptors


@dataclass(frozen=True)
class Empty:
    def __str__(self) -> str:
        return "empty"


@dataclass(frozen=True)
class All:
    def __str__(self) -> str:
        return "all"


@dataclass(frozen=True)
class AtLeast:
    k: int

    def __str__(self) -> str:
        return f"atleast({self.k})"


@dataclass(frozen=True)
class Antichain:
    gens: tuple[tuple[int | None, ...], ...]  # None encodes omega

    def __str__(self) -> str:
        def fmt(g):
            return "(" + ",".join("w" if x is None else str(x) for x in g) + ")"
        return "{" + ",".join(fmt(g) for g in self.gens) + "}"


Upset = Empty | All | AtLeast | Antichain

EMPTY = Empty()
ALL = All()


def upset_to_json(u: Upset) -> dict:
    match u:
        case Empty():
            return {"kind": "empty"}
        case All():
            return {"kind": "all"}
        case AtLeast(k):
            return {"kind": "atleast", "k": k}
        case Antichain(gens):
            return {"kind": "antichain", "min": [list(g) for g in gens]}
    raise TypeError(u)


def upset_from_json(d: dict) -> Upset:
    match d.get("kind"):
        case "empty":
            return EMPTY
        case "all":
            return ALL
        case "atleast":
            return AtLeast(int(d["k"]))
        case "antichain":
            return Antichain(tuple(
                tuple(None if x is None else int(x) for x in g) for g in d["min"]))
    raise TheoryError(f"bad upset descriptor {d!r}")


# ---------------------------------------------------------------------------
# theory handle


def _gen_key(g: tuple[int | None, ...]):
    return tuple((x is None, x if x is not None else 0) for x in g)


class Theory:
    """Background theory with a working order (natural or flipped)."""

    def __init__(self, kind: str, dim: int, flipped: bool):
        if kind not in ("lia", "nat"):
            raise TheoryError(f"unknown theory {kind!r}")
        if kind == "lia" and dim != 1:
            raise TheoryError("lia is one-dimensional")
        self.kind = kind
        self.dim = dim
        self.flipped = flipped

    @property
    def nat(self) -> bool:
        return self.kind == "nat"

    # -- order ---------------------------------------------------------

    def in_domain(self, w: Sequence[int]) -> bool:
        if len(w) != self.dim:
            return False
        return not self.nat or all(x >= 0 for x in w)

    def _leq_nat(self, a, b) -> bool:
        # componentwise, None (omega) above everything
        for x, y in zip(a, b):
            if y is None:
                continue
            if x is None or x > y:
                return False
        return True

    def w_leq(self, a: Sequence[int], b: Sequence[int]) -> bool:
        """a <= b in the working order."""
        a, b = tuple(a), tuple(b)
        return self._leq_nat(b, a) if self.flipped else self._leq_nat(a, b)

    # -- descriptors -----------------------------------------------------

    def member(self, w: Sequence[int], u: Upset) -> bool:
        w = tuple(w)
        if not self.in_domain(w):
            raise TheoryError(f"{w} outside the domain")
        match u:
            case Empty():
                return False
            case All():
                return True
            case AtLeast(k):
                if self.kind != "lia":
                    raise TheoryError("atleast descriptor outside lia")
                return w[0] <= k if self.flipped else w[0] >= k
            case Antichain(gens):
                if self.kind != "nat":
                    raise TheoryError("antichain descriptor outside nat")
                return any(self.w_leq(g, w) for g in gens)
        raise TypeError(u)

    def canonicalize(self, u: Upset) -> Upset:
        match u:
            case Empty() | All() | AtLeast():
                return u
            case Antichain(gens):
                if self.kind != "nat":
                    raise TheoryError("antichain descriptor outside nat")
                if not self.flipped and any(x is None for g in gens for x in g):
                    raise TheoryError("omega coordinates only in the flipped order")
                keep = []
                for g in gens:
                    if any(h != g and self.w_leq(h, g) for h in gens):
                        continue
                    if g not in keep:
                        keep.append(g)
                return Antichain(tuple(sorted(keep, key=_gen_key)))
        raise TypeError(u)

    def upset_formula(self, u: Upset, comps: Sequence[str]) -> Formula:
        """Membership of the point named by component variables comps."""
        if len(comps) != self.dim:
            raise TheoryError("component count mismatch")
        vs = [LinTerm.of_var(c) for c in comps]
        match u:
            case Empty():
                return P.FALSE
            case All():
                return P.TRUE
            case AtLeast(k):
                kk = LinTerm.of_const(k)
                return P.le(vs[0], kk) if self.flipped else P.ge(vs[0], kk)
            case Antichain(gens):
                disjuncts = []
                for g in gens:
                    lits = []
                    for x, gi in zip(vs, g):
                        if gi is None:
                            continue
                        c = LinTerm.of_const(gi)
                        lits.append(P.le(x, c) if self.flipped else P.ge(x, c))
                    disjuncts.append(P.conj(lits))
                return P.disj(disjuncts)
        raise TypeError(u)

    # -- enumeration -----------------------------------------------------

    def enumerate_upsets(self) -> Iterator[Upset]:
        """Fair, injective, canonical enumeration of all descriptors."""
        if self.kind == "lia":
            yield EMPTY
            yield ALL
            yield AtLeast(0)
            k = 1
            while True:
                yield AtLeast(k)
                yield AtLeast(-k)
                k += 1
        else:
            seen: set[Antichain] = set()
            yield EMPTY  # Antichain(()) is the same set; emit the canonical empty
            budget = 1
            while True:
                entries: list[int | None] = list(range(budget))
                if self.flipped:
                    entries.append(None)
                grid = sorted(itertools.product(entries, repeat=self.dim),
                              key=lambda g: _gen_key(g))

                def extend(prefix: list, start: int) -> Iterator[Antichain]:
                    if prefix:
                        a = self.canonicalize(Antichain(tuple(prefix)))
                        if len(a.gens) == len(prefix):
                            yield a
                    if len(prefix) < budget:
                        for i in range(start, len(grid)):
                            g = grid[i]
                            if all(not self.w_leq(h, g) and not self.w_leq(g, h)
                                   for h in prefix):
                                yield from extend(prefix + [g], i + 1)

                for a in extend([], 0):
                    if a not in seen:
                        seen.add(a)
                        yield a
                budget += 1

    def empty_upset(self) -> Upset:
        return EMPTY if self.kind == "lia" else Antichain(())

    def member_empty_ok(self) -> None:
        pass


def theory_for(kind: str, dim: int, direction: str) -> Theory:
    return Theory(kind, dim, flipped=(direction == "downward"))


# ---------------------------------------------------------------------------
# compiling background atoms to arithmetic


def comp_var(name: str, i: int) -> str:
    """Component variable name for component i (1-based) of W variable name."""
    return f"{name}#{i}"


def w_var_terms(name: str, dim: int) -> list[LinTerm]:
    return [LinTerm.of_var(comp_var(name, i + 1)) for i in range(dim)]


def _components(t: Term, dim: int, sval_env: dict[str, str] | None) -> list[LinTerm]:
    """Compile a numeric term to its component LinTerms (length dim or 1)."""
    match t:
        case Var(n):
            return w_var_terms(n, dim)
        case WLit(vals):
            return [LinTerm.of_const(v) for v in vals]
        case WOp("comp", (a,), k):
            cs = _components(a, dim, sval_env)
            if len(cs) == 1:
                raise TheoryError("comp applied to a scalar term")
            return [cs[k - 1]]
        case WOp("scale", (a,), k):
            return [c.scale(k) for c in _components(a, dim, sval_env)]
        case WOp("+" | "-" as op, (a, b)):
            ca = _components(a, dim, sval_env)
            cb = _components(b, dim, sval_env)
            if len(ca) == 1 and len(cb) > 1:
                ca = ca * len(cb)
            if len(cb) == 1 and len(ca) > 1:
                cb = cb * len(ca)
            if len(ca) != len(cb):
                raise TheoryError("component count mismatch in arithmetic")
            if op == "+":
                return [x.add(y) for x, y in zip(ca, cb)]
            return [x.sub(y) for x, y in zip(ca, cb)]
    raise TheoryError(f"not a numeric term: {t}")


def compile_atom(atom: BgAtom, theory: Theory,
                 sval_env: dict[str, str] | None = None) -> Formula:
    """Translate a background atom to arithmetic.  Comparisons are over the
    natural order (the working order only affects descriptors).  eqs atoms
    need sval_env to resolve finite-sort variables."""
    if atom.rel == "eqs":
        def sval(t: Term) -> str:
            if isinstance(t, SConst):
                return t.name
            if isinstance(t, Var):
                if sval_env is None or t.name not in sval_env:
                    raise TheoryError(f"unvaluated finite variable {t.name!r}")
                return sval_env[t.name]
            raise TheoryError("eqs arguments must be finite constants or variables")
        return P.TRUE if sval(atom.lhs) == sval(atom.rhs) else P.FALSE

    ls = _components(atom.lhs, theory.dim, sval_env)
    rs = _components(atom.rhs, theory.dim, sval_env)
    if len(ls) == 1 and len(rs) > 1:
        ls = ls * len(rs)
    if len(rs) == 1 and len(ls) > 1:
        rs = rs * len(ls)
    if len(ls) != len(rs):
        raise TheoryError("comparison between different component counts")
    pairs = list(zip(ls, rs))
    match atom.rel:
        case "eq":
            return P.conj(P.eq(a, b) for a, b in pairs)
        case "neq":
            return P.disj(P.ne(a, b) for a, b in pairs)
        case "leq":
            return P.conj(P.le(a, b) for a, b in pairs)
        case "geq":
            return P.conj(P.ge(a, b) for a, b in pairs)
        case "lt":
            if len(pairs) == 1:
                return P.lt(*pairs[0])
            return P.conj([P.conj(P.le(a, b) for a, b in pairs),
                           P.disj(P.lt(a, b) for a, b in pairs)])
        case "gt":
            if len(pairs) == 1:
                return P.gt(*pairs[0])
            return P.conj([P.conj(P.ge(a, b) for a, b in pairs),
                           P.disj(P.gt(a, b) for a, b in pairs)])
    raise TheoryError(f"unknown relation {atom.rel!r}")


# ---------------------------------------------------------------------------
# satisfiability of background conjunctions


def _subst_equalities(f: Formula, protected: frozenset[str] = frozenset()) -> Formula:
    """Substitute away variables pinned by unit-coefficient equalities.
    Sound for existentially closed conjunctions."""
    while True:
        if not isinstance(f, P.And):
            conjuncts = [f]
        else:
            conjuncts = list(f.args)
        done = True
        for i, a in enumerate(conjuncts):
            if isinstance(a, P.Cmp) and a.op == "=":
                for v_, c_ in a.t.coeffs:
                    if abs(c_) == 1 and v_ not in protected:
                        # solve: v = -(t - c*v)/c
                        rest = a.t.drop(v_)
                        sol = rest.neg() if c_ == 1 else rest
                        rem = conjuncts[:i] + conjuncts[i + 1:]
                        f = P.conj(P.subst(g, v_, sol) for g in rem)
                        done = False
                        break
                if not done:
                    break
        if done:
            return P.conj(conjuncts)


def exists_sat(atoms: Sequence[BgAtom], varsorts: dict[str, object],
               theory: Theory, fin_elems: Sequence[str]) -> bool:
    """Is the existential closure of the conjunction satisfiable?  Finite-sort
    variables are enumerated; numeric variables are decided arithmetically."""
    from .syntax import FIN, W as WS
    svars = [n for n, s in varsorts.items() if s == FIN]
    wvars = [n for n, s in varsorts.items() if s == WS]
    num_atoms = [a for a in atoms if a.rel != "eqs"]
    eqs_atoms = [a for a in atoms if a.rel == "eqs"]

    for combo in itertools.product(fin_elems, repeat=len(svars)) \
            if svars else [()]:
        env = dict(zip(svars, combo))
        try:
            if not all(compile_atom(a, theory, env) == P.TRUE for a in eqs_atoms):
                continue
        except TheoryError:
            raise
        fs = [compile_atom(a, theory, env) for a in num_atoms]
        if theory.nat:
            fs += [P.ge(LinTerm.of_var(comp_var(n, i + 1)), LinTerm.of_const(0))
                   for n in wvars for i in range(theory.dim)]
        if P.sat_exists_all(fs) is not None:
            return True
    return False


# ---------------------------------------------------------------------------
# incremental background state for the refutation search
#
# Goals only ever gain background atoms, so each search node carries the
# equality-reduced residual of its constraint system plus the accumulated
# variable pins; a resolution step then costs work proportional to the few
# atoms it adds rather than to the whole system.  Only usable when no
# finite-sort variables occur (no enumeration splits the state).


@dataclass
class BgState:
    pins: dict[str, LinTerm]
    residual: list  # quantifier-free formulas, conjoined
    witness: dict[str, int]  # satisfying assignment (absent vars read as 0)


def _apply_pins(f: Formula, pins: dict[str, LinTerm]) -> Formula:
    vs = f.t.vars if isinstance(f, (P.Cmp, P.Div)) else tuple(P.free_vars(f))
    for v in vs:
        t = pins.get(v)
        if t is None:
            continue
        if isinstance(f, (P.TrueF, P.FalseF)):
            break
        f = P.subst(f, v, t)
    return f


def bg_state(atoms: Sequence[BgAtom], wvars: Sequence[str],
             theory: Theory) -> BgState | None:
    """Reduced state for a fresh conjunction; None when unsatisfiable."""
    st = BgState({}, [], {})
    return bg_extend(st, atoms, wvars, theory)


def bg_extend(state: BgState, new_atoms: Sequence[BgAtom],
              new_wvars: Sequence[str], theory: Theory) -> BgState | None:
    """Conjoin new atoms (and nonnegativity bounds for new numeric
    variables) onto a reduced state; None when unsatisfiable."""
    fs: list[Formula] = []
    for a in new_atoms:
        f = _apply_pins(compile_atom(a, theory, {}), state.pins)
        if isinstance(f, P.FalseF):
            return None
        if not isinstance(f, P.TrueF):
            fs.append(f)
    if theory.nat:
        for n in new_wvars:
            for i in range(theory.dim):
                fs.append(P.ge(LinTerm.of_var(comp_var(n, i + 1)),
                               LinTerm.of_const(0)))
    if not fs:
        return state
    pins = dict(state.pins)
    residual = P.reduce_conj(fs + state.residual, pins)
    if residual is None:
        return None
    # the parent's witness usually still works; solve only when it fails
    w = state.witness
    if all(P.evaluate0(f, w) for f in residual):
        return BgState(pins, residual, w)
    w = P.sat_exists_all(residual)
    if w is None:
        return None
    return BgState(pins, residual, w)
