"""Refutation search by resolution.

Goal clauses are negated atom sets.  Resolving a predicate-headed goal atom
against a definite clause substitutes the atom's arguments for the clause's
head variables in a freshly renamed copy of the body; the goal's own
variables are never instantiated, so background constraints only accumulate.
A goal refutes when no predicate-headed foreground atoms remain and its
background part is satisfiable (variable-headed foreground atoms are
satisfied by the top interpretation and are ignored).

The search is uniform-cost: ordinary resolution steps cost 1, limit-clause
steps cost more (they are always applicable and would otherwise flood the
frontier).  Goals whose background part is unsatisfiable are pruned — sound
and complete, since background atoms persist along every branch.  Atom
selection is leftmost predicate-headed, which is complete for Horn programs
because resolution leaves the rest of the goal untouched.
"""

from __future__ import annotations

import heapq
import itertools
import json
from dataclasses import dataclass, field, replace as dc_replace

from .background import BgState, Theory, bg_extend, bg_state, exists_sat
from .syntax import (
    App, Atom, BgAtom, Clause, FIN, FgAtom, PredRef, Problem, SConst, Sort,
    Term, Var, W, WLit, WOp, mk_app, print_term, spine,
)

LIMIT_COST = 64


class TraceError(Exception):
    pass


# ---------------------------------------------------------------------------
# substitution / renaming on terms


def subst_term(t: Term, env: dict[str, Term]) -> Term:
    match t:
        case Var(n):
            return env.get(n, t)
        case App(f, a):
            return App(subst_term(f, env), subst_term(a, env))
        case WOp(op, args, k):
            return WOp(op, tuple(subst_term(a, env) for a in args), k)
        case _:
            return t


def subst_atom(a: Atom, env: dict[str, Term]) -> Atom:
    if isinstance(a, BgAtom):
        return BgAtom(a.rel, subst_term(a.lhs, env), subst_term(a.rhs, env))
    return FgAtom(subst_term(a.term, env))


# ---------------------------------------------------------------------------
# goal states


@dataclass(frozen=True)
class Goal:
    atoms: tuple[Atom, ...]
    varsorts: tuple[tuple[str, Sort], ...]

    def sortmap(self) -> dict[str, Sort]:
        return dict(self.varsorts)


def atom_vars(a: Atom) -> list[str]:
    out: list[str] = []

    def walk(t: Term) -> None:
        match t:
            case Var(n):
                if n not in out:
                    out.append(n)
            case App(f, x):
                walk(f)
                walk(x)
            case WOp(_, args, _):
                for x in args:
                    walk(x)
            case _:
                pass

    if isinstance(a, BgAtom):
        walk(a.lhs)
        walk(a.rhs)
    else:
        walk(a.term)
    return out


def goal_of_clause(cl: Clause) -> Goal:
    assert cl.head is None
    atoms = tuple(cl.body_atoms())
    used = [v for a in atoms for v in atom_vars(a)]
    vs = tuple((n, s) for n, s in cl.vars if n in used)
    return Goal(atoms, vs)


def print_goal(g: Goal) -> str:
    from .syntax import print_formula
    return " & ".join(print_formula(a) for a in g.atoms) or "<empty>"


def canonical_goal(g: Goal, sort_atoms: bool = True) -> str:
    """Renaming-invariant key: atoms sorted by a name-blind skeleton, then
    variables renumbered in traversal order."""
    def skel(a: Atom) -> str:
        def blind(t: Term) -> str:
            match t:
                case Var(_):
                    return "_"
                case App(f, x):
                    return f"({blind(f)} {blind(x)})"
                case WOp(op, args, k):
                    return f"({op}{k if k is not None else ''} " + \
                        " ".join(blind(x) for x in args) + ")"
                case _:
                    return print_term(t)
        if isinstance(a, BgAtom):
            return f"({a.rel} {blind(a.lhs)} {blind(a.rhs)})"
        return blind(a.term)

    atoms = sorted(g.atoms, key=skel) if sort_atoms else list(g.atoms)
    names: dict[str, str] = {}

    def ren(t: Term) -> Term:
        match t:
            case Var(n):
                if n not in names:
                    names[n] = f"v{len(names)}"
                return Var(names[n])
            case App(f, x):
                return App(ren(f), ren(x))
            case WOp(op, args, k):
                return WOp(op, tuple(ren(x) for x in args), k)
            case _:
                return t

    parts = []
    for a in atoms:
        if isinstance(a, BgAtom):
            parts.append(f"({a.rel} {print_term(ren(a.lhs))} {print_term(ren(a.rhs))})")
        else:
            parts.append(print_term(ren(a.term)))
    return " & ".join(parts)


# ---------------------------------------------------------------------------
# the two rules


def resolve(goal: Goal, atom_idx: int, cl: Clause, fresh: "itertools.count") -> Goal:
    """Resolve the predicate-headed foreground atom at atom_idx against a
    definite clause (standardized apart)."""
    a = goal.atoms[atom_idx]
    if not isinstance(a, FgAtom):
        raise ValueError("can only resolve foreground atoms")
    head, args = spine(a.term)
    if not isinstance(head, PredRef):
        raise ValueError("can only resolve predicate-headed atoms")
    assert cl.head is not None and cl.head[0] == head.name
    hvars = cl.head[1]
    if len(hvars) != len(args):
        raise ValueError("arity mismatch")

    suffix = f"${next(fresh)}"
    ren = {n: Var(n + suffix) for n, _ in cl.vars}
    env: dict[str, Term] = {}
    for hv, arg in zip(hvars, args):
        assert isinstance(hv, Var)
        env[hv.name] = arg
    for n, _ in cl.vars:
        if n not in env:
            env[n] = ren[n]

    body = [subst_atom(b, env) for b in cl.body_atoms()]
    new_atoms = goal.atoms[:atom_idx] + tuple(body) + goal.atoms[atom_idx + 1:]
    new_vars = dict(goal.varsorts)
    hnames = {hv.name for hv in hvars}  # type: ignore[union-attr]
    for n, s in cl.vars:
        if n not in hnames:
            new_vars[n + suffix] = s
    used = {v for at in new_atoms for v in atom_vars(at)}
    return Goal(new_atoms, tuple((n, s) for n, s in new_vars.items() if n in used))


def resolvable_indices(g: Goal) -> list[int]:
    out = []
    for i, a in enumerate(g.atoms):
        if isinstance(a, FgAtom) and isinstance(spine(a.term)[0], PredRef):
            out.append(i)
    return out


def try_refute(g: Goal, theory: Theory, fin_elems) -> bool:
    """Refutation rule: succeeds when no predicate-headed foreground atoms
    remain and the background conjunction is satisfiable."""
    if resolvable_indices(g):
        return False
    bg = [a for a in g.atoms if isinstance(a, BgAtom)]
    vs = {n: s for n, s in g.varsorts if s in (FIN, W)}
    return exists_sat(bg, vs, theory, fin_elems)


def bg_unsat(g: Goal, theory: Theory, fin_elems) -> bool:
    bg = [a for a in g.atoms if isinstance(a, BgAtom)]
    if not bg:
        return False
    vs = {n: s for n, s in g.varsorts if s in (FIN, W)}
    return not exists_sat(bg, vs, theory, fin_elems)


# ---------------------------------------------------------------------------
# traces


@dataclass
class TraceStep:
    goal: str  # canonical printed form (order-preserving)
    rule: str  # "resolution" | "refutation"
    parent: int | None
    atom: int | None
    definite: int | None


@dataclass
class ProofTrace:
    steps: list[TraceStep]
    constraints: str  # printed background conjunction of the final goal

    def to_json(self) -> dict:
        return {
            "steps": [
                {"goal": s.goal, "rule": s.rule, "parent": s.parent,
                 "atom": s.atom, "definite": s.definite}
                for s in self.steps
            ],
            "constraints": self.constraints,
        }

    @staticmethod
    def from_json(d: dict) -> "ProofTrace":
        return ProofTrace(
            [TraceStep(s["goal"], s["rule"], s.get("parent"), s.get("atom"),
                       s.get("definite")) for s in d["steps"]],
            d["constraints"])

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


# ---------------------------------------------------------------------------
# saturation


@dataclass
class Refuted:
    trace: ProofTrace
    steps_used: int


@dataclass
class BudgetExhausted:
    steps_used: int


@dataclass
class _Node:
    goal: Goal
    root: int  # index of originating goal clause
    parent: "_Node | None"
    atom: int | None
    definite: int | None
    via_limit: bool = False  # produced by a limit-clause step
    bg: BgState | None = None  # reduced background state (incremental mode)


class Saturator:
    """Resumable uniform-cost refutation search over all goal clauses."""

    def __init__(self, problem: Problem, theory: Theory,
                 limit_cost: int = LIMIT_COST):
        self.problem = problem
        self.theory = theory
        self.limit_cost = limit_cost
        self.fresh = itertools.count()
        self.steps_used = 0
        self._seq = itertools.count()
        self._frontier: list[tuple[int, int, _Node]] = []
        self._seen: set[str] = set()
        self._by_pred: dict[str, list[tuple[int, Clause, int]]] = {}
        for i, cl in enumerate(problem.clauses):
            self._by_pred.setdefault(cl.head[0], []).append(  # type: ignore[index]
                (i, cl, len(cl.body_atoms())))
        # incremental background states need purely numeric constraints
        self._incr = not any(
            s == FIN
            for c in list(problem.clauses) + list(problem.goals)
            for _, s in c.vars
        ) and not any(
            isinstance(a, BgAtom) and a.rel == "eqs"
            for c in list(problem.clauses) + list(problem.goals)
            for a in c.body_atoms()
        )
        for ri, gcl in enumerate(problem.goals):
            g = goal_of_clause(gcl)
            st = None
            if self._incr:
                st = bg_state([a for a in g.atoms if isinstance(a, BgAtom)],
                              [n for n, s in g.varsorts if s == W], theory)
                if st is None:
                    continue  # goal clause can never fire
            node = _Node(g, ri, None, None, None, bg=st)
            heapq.heappush(self._frontier, (0, next(self._seq), node))
            self._seen.add(canonical_goal(g))

    def exhausted(self) -> bool:
        return not self._frontier

    def run(self, budget: int) -> Refuted | BudgetExhausted:
        """Spend up to budget rule applications; resumable."""
        spent = 0
        fins = self.problem.fin_elems
        while self._frontier and spent < budget:
            cost, _, node = heapq.heappop(self._frontier)
            g = node.goal
            idxs = resolvable_indices(g)
            if not idxs:
                # in incremental mode the background part is known
                # satisfiable, so this is a refutation outright
                if self._incr or try_refute(g, self.theory, fins):
                    self.steps_used += 1
                    return Refuted(self._build_trace(node), self.steps_used)
                continue
            parent_names = {n for n, _ in g.varsorts}
            i = idxs[0]
            a = g.atoms[i]
            pname = spine(a.term)[0].name  # type: ignore[union-attr]
            for ci, cl, nbody in self._by_pred.get(pname, []):
                hvars = cl.head[1]  # type: ignore[index]
                if len(hvars) != len(spine(a.term)[1]):
                    continue
                if cl.is_limit and node.via_limit:
                    # two consecutive limit steps on the same atom are
                    # subsumed by one (the order is transitive)
                    continue
                spent += 1
                self.steps_used += 1
                child = resolve(g, i, cl, self.fresh)
                key = canonical_goal(child)
                if key in self._seen:
                    continue
                self._seen.add(key)
                st = None
                if self._incr:
                    new_bg = [x for x in child.atoms[i:i + nbody]
                              if isinstance(x, BgAtom)]
                    new_w = [n for n, s in child.varsorts
                             if s == W and n not in parent_names]
                    st = bg_extend(node.bg, new_bg, new_w, self.theory)
                    if st is None:
                        continue
                elif bg_unsat(child, self.theory, fins):
                    continue
                step_cost = self.limit_cost if cl.is_limit else 1
                heapq.heappush(self._frontier,
                               (cost + step_cost, next(self._seq),
                                _Node(child, node.root, node, i, ci,
                                      via_limit=cl.is_limit, bg=st)))
        return BudgetExhausted(self.steps_used)

    def _build_trace(self, node: _Node) -> ProofTrace:
        chain: list[_Node] = []
        n: _Node | None = node
        while n is not None:
            chain.append(n)
            n = n.parent
        chain.reverse()
        steps = []
        for j, nd in enumerate(chain):
            if nd.parent is None:
                steps.append(TraceStep(canonical_goal(nd.goal, sort_atoms=False),
                                       "root", None, None, None))
            else:
                steps.append(TraceStep(canonical_goal(nd.goal, sort_atoms=False),
                                       "resolution", j - 1, nd.atom, nd.definite))
        steps.append(TraceStep(steps[-1].goal, "refutation", len(steps) - 1,
                               None, None))
        # root index is stored in the first step's definite slot
        steps[0].definite = chain[0].root
        from .syntax import print_formula
        bg = [a for a in node.goal.atoms if isinstance(a, BgAtom)]
        constraints = " & ".join(print_formula(a) for a in bg)
        return ProofTrace(steps, constraints)


def saturate(problem: Problem, theory: Theory,
             budget: int) -> Refuted | BudgetExhausted:
    return Saturator(problem, theory).run(budget)


# ---------------------------------------------------------------------------
# replay


def replay(trace: ProofTrace, problem: Problem, theory: Theory) -> bool:
    """Re-execute a trace step by step; True only if every resolution step
    reproduces the recorded goal and the final refutation check passes."""
    steps = trace.steps
    if not steps or steps[0].rule != "root" or steps[-1].rule != "refutation":
        raise TraceError("malformed trace shape")
    root_idx = steps[0].definite
    if root_idx is None or not 0 <= root_idx < len(problem.goals):
        raise TraceError("bad root goal index")
    fresh = itertools.count()
    goals: list[Goal] = [goal_of_clause(problem.goals[root_idx])]
    if canonical_goal(goals[0], sort_atoms=False) != steps[0].goal:
        raise TraceError("root goal mismatch")
    for s in steps[1:-1]:
        if s.rule != "resolution":
            raise TraceError(f"unexpected rule {s.rule!r}")
        if s.parent is None or not 0 <= s.parent < len(goals):
            raise TraceError("bad parent reference")
        parent = goals[s.parent]
        if s.definite is None or not 0 <= s.definite < len(problem.clauses):
            raise TraceError("bad definite clause reference")
        if s.atom is None or not 0 <= s.atom < len(parent.atoms):
            raise TraceError("bad atom index")
        a = parent.atoms[s.atom]
        if not isinstance(a, FgAtom):
            raise TraceError("recorded atom is not foreground")
        head = spine(a.term)[0]
        cl = problem.clauses[s.definite]
        if not isinstance(head, PredRef) or cl.head is None \
                or cl.head[0] != head.name:
            raise TraceError("definite clause head does not match atom")
        child = resolve(parent, s.atom, cl, fresh)
        if canonical_goal(child, sort_atoms=False) != s.goal:
            raise TraceError("replayed goal differs from recorded goal")
        goals.append(child)
    final = goals[steps[-1].parent] if steps[-1].parent is not None else goals[-1]
    if not try_refute(final, theory, problem.fin_elems):
        raise TraceError("final refutation check failed")
    return True
