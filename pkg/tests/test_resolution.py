"""Resolution, saturation, and trace replay tests."""

import itertools

import pytest

from limitdl.background import theory_for
from limitdl.resolution import (
    BudgetExhausted, ProofTrace, Refuted, Saturator, TraceError,
    canonical_goal, goal_of_clause, replay, resolve, saturate, try_refute,
)
from limitdl.syntax import normalize_problem, parse_problem


def load(text):
    p = normalize_problem(parse_problem(text))
    return p, theory_for(p.theory_kind, p.dim, p.direction)


UNSAT_SIMPLE = """
(theory (lia))
(declare R (-> W o))
(clause ((x W)) (head (R x)) (body (geq x 5)))
(goal () (body (R 7)))
"""

SAT_SIMPLE = """
(theory (lia))
(declare R (-> W o))
(clause ((x W)) (head (R x)) (body (geq x 5)))
(goal () (body (and (R 3) (leq 3 3))))
"""


def test_resolve_substitutes_head_args():
    p, th = load(UNSAT_SIMPLE)
    g = goal_of_clause(p.goals[0])
    cl = [c for c in p.clauses if not c.is_limit][0]
    child = resolve(g, 0, cl, itertools.count())
    # the clause body geq(x,5) instantiated at 7 becomes ground
    assert try_refute(child, th, p.fin_elems)


def test_saturate_refutes_and_replays():
    p, th = load(UNSAT_SIMPLE)
    r = saturate(p, th, budget=100)
    assert isinstance(r, Refuted)
    assert replay(r.trace, p, th)


def test_saturate_budget_exhausted_on_sat():
    p, th = load(SAT_SIMPLE)
    r = saturate(p, th, budget=200)
    assert isinstance(r, BudgetExhausted)


def test_saturator_is_resumable():
    p, th = load(UNSAT_SIMPLE)
    s = Saturator(p, th)
    r = s.run(0)
    assert isinstance(r, BudgetExhausted)
    r = s.run(100)
    assert isinstance(r, Refuted)


def test_refutation_needs_limit_clause():
    # downward problem: R holds at 5 and (by closure) below; goal asks at 3
    p, th = load("""
(theory (nat 1))
(direction downward)
(declare R (-> W o))
(clause ((x W)) (head (R x)) (body (eq x 5)))
(goal () (body (R 3)))
""")
    r = saturate(p, th, budget=500)
    assert isinstance(r, Refuted)
    # some step must use the limit clause
    lim_ids = {i for i, c in enumerate(p.clauses) if c.is_limit}
    assert any(s.definite in lim_ids for s in r.trace.steps if s.rule == "resolution")
    assert replay(r.trace, p, th)


def test_recursive_chain():
    base = """
(theory (nat 1))
(declare R (-> W o))
(clause ((x W)) (head (R x)) (body (eq x 10)))
(clause ((x W) (y W)) (head (R x)) (body (and (R y) (eq x (+ y 2)))))
(goal () (body (R %d)))
"""
    # upward closure of {10, 12, 14, ...} is {x : x >= 10}
    p, th = load(base % 16)
    r = saturate(p, th, budget=5000)
    assert isinstance(r, Refuted)
    assert replay(r.trace, p, th)
    p2, th2 = load(base % 13)  # needs the limit clause
    r2 = saturate(p2, th2, budget=5000)
    assert isinstance(r2, Refuted)
    p3, th3 = load(base % 7)  # below the closure: not derivable
    r3 = saturate(p3, th3, budget=3000)
    assert isinstance(r3, BudgetExhausted)


def test_variable_headed_atoms_are_ignored_by_refutation():
    p, th = load("""
(theory (lia))
(declare R (-> (-> W o) o))
(clause ((f (-> W o))) (head (R f)) (body (f 3)))
(goal ((f (-> W o))) (body (R f)))
""")
    # after one resolution the goal is (f 3): variable-headed, no background
    r = saturate(p, th, budget=100)
    assert isinstance(r, Refuted)


def test_trace_json_roundtrip():
    p, th = load(UNSAT_SIMPLE)
    r = saturate(p, th, budget=100)
    assert isinstance(r, Refuted)
    t2 = ProofTrace.from_json(r.trace.to_json())
    assert replay(t2, p, th)


def test_replay_rejects_corrupted_trace():
    p, th = load(UNSAT_SIMPLE)
    r = saturate(p, th, budget=100)
    assert isinstance(r, Refuted)
    d = r.trace.to_json()
    # corrupt a recorded goal
    bad = ProofTrace.from_json(d)
    for s in bad.steps:
        if s.rule == "resolution":
            s.goal = s.goal.replace("7", "8")
    with pytest.raises(TraceError):
        replay(bad, p, th)
    # corrupt a clause reference
    bad2 = ProofTrace.from_json(d)
    for s in bad2.steps:
        if s.rule == "resolution":
            s.definite = 10 ** 6
    with pytest.raises(TraceError):
        replay(bad2, p, th)


def test_canonical_goal_renaming_invariance():
    p, _ = load(SAT_SIMPLE)
    g = goal_of_clause(p.goals[0])
    assert canonical_goal(g) == canonical_goal(g)
    text2 = SAT_SIMPLE.replace("(x W)", "(zz W)").replace("x 5", "zz 5").replace("(R x)", "(R zz)")
    p2, _ = load(text2)
    assert canonical_goal(goal_of_clause(p2.goals[0])) == canonical_goal(g)
