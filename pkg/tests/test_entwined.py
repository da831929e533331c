"""Frame construction, clause checking, model serialization, least models."""

import itertools
import json
import os

import pytest

from limitdl import entwined as E
from limitdl.background import ALL, EMPTY, Antichain, AtLeast, theory_for
from limitdl.syntax import PROP, W, Arrow, normalize_problem, parse_problem
from limitdl.typesys import validate

FIX = os.path.join(os.path.dirname(__file__), "..", "fixtures")


def load(name):
    with open(os.path.join(FIX, name), encoding="utf-8") as fh:
        return normalize_problem(parse_problem(fh.read()))


def theory_of(p):
    return theory_for(p.theory_kind, p.dim, p.direction)


# ---------------------------------------------------------------------------
# the worked third-order example: X : S -> (S->o) -> o -> xi with
# xi = W -> (W->o) -> o over the integers in the upward order

XYZ_TEXT = """
(theory (lia))
(direction upward)
(finsort S (club diamond spade heart))
(declare Y (-> S S o))
(declare X (-> S (-> S o) o W (-> W o) o))
(declare Z (-> W (-> S (-> S o) o W (-> W o) o) o))
"""

XI = Arrow(W, Arrow(Arrow(W, PROP), PROP))


def xyz_structure():
    p = normalize_problem(parse_problem(XYZ_TEXT))
    th = theory_of(p)
    m0 = E.EntwinedStructure(p, th, {})
    rho = p.decl_map["X"]
    ysort = p.decl_map["Y"]
    fins = m0.frame(ysort.arg)
    # Y s1 s2 iff both arguments are diamond or spade
    mid = {"diamond", "spade"}
    y_val = E.FnVal(ysort, tuple(
        E.FnVal(ysort.res, tuple(s1 in mid and s2 in mid for s2 in fins))
        for s1 in fins))
    # X s f b w g iff b and f(s) and w > 5; rows cover all non-W argument
    # positions, including the (W -> o) position after the W argument
    descs = []
    for s, f, b, _g in m0.rows(rho):
        hit = bool(b) and m0.apply(f, s) is True
        descs.append(AtLeast(6) if hit else EMPTY)
    x_val = E.ActVal(rho, tuple(descs))
    return E.EntwinedStructure(p, th, {"Y": y_val, "X": x_val}), p, th


def test_xi_frame_has_exactly_three_elements():
    m, p, th = xyz_structure()
    fr = m.frame(XI)
    assert len(fr) == 3
    assert {str(v.descs[0]) for v in fr} == {"all", "empty", "atleast(6)"}


def test_stage_two_w_arrow_frame_is_top_only():
    m, p, th = xyz_structure()
    fr = m.frame(Arrow(W, PROP))
    assert len(fr) == 1
    assert fr[0].descs == (ALL,)


def test_xi_nontrivial_element_is_threshold_at_six():
    m, p, th = xyz_structure()
    fr = m.frame(XI)
    mid = [v for v in fr if v.descs == (AtLeast(6),)]
    assert len(mid) == 1
    top_wo = m.frame(Arrow(W, PROP))[0]
    for w, want in ((5, False), (6, True), (100, True)):
        got = m.apply(m.apply(mid[0], (w,)), top_wo)
        assert got is want


def test_inactive_function_space_count():
    m, p, th = xyz_structure()
    s = p.decl_map["Y"]  # S -> S -> o with four elements: (2^4)^4 tables
    assert m.frame_size(s) == 65536
    assert len(m.frame(s)) == 65536


def test_frame_too_large():
    p = normalize_problem(parse_problem(XYZ_TEXT))
    th = theory_of(p)
    m = E.EntwinedStructure(p, th, {}, max_frame=1000)
    with pytest.raises(E.FrameTooLarge):
        m.frame(p.decl_map["Y"])


def test_noninitial_sort_rejected():
    m, p, th = xyz_structure()
    with pytest.raises(E.StageOrderViolation):
        m.frame(Arrow(W, Arrow(W, PROP)))


# ---------------------------------------------------------------------------
# clause checking


THRESH = """
(theory (lia))
(direction upward)
(declare R (-> W o))
(clause ((x W)) (head (R x)) (body (geq x 5)))
(goal () (body (R 3)))
"""


def thresh_model(desc):
    p = normalize_problem(parse_problem(THRESH))
    th = theory_of(p)
    m = E.EntwinedStructure(p, th, {"R": E.ActVal(p.decl_map["R"], (desc,))})
    return m, p


def test_check_clause_threshold():
    m, p = thresh_model(AtLeast(5))
    clause = [c for c in p.clauses if not c.is_limit][0]
    assert E.check_clause(m, clause)
    m2, _ = thresh_model(AtLeast(6))
    assert not E.check_clause(m2, clause)  # 5 satisfies the body, not R


def test_check_model_includes_goal():
    m, p = thresh_model(AtLeast(5))
    assert E.check_model(m, p)  # R 3 is false, so the goal clause holds
    m2, _ = thresh_model(AtLeast(3))
    assert not E.check_model(m2, p)


def test_monotone_in_w_by_construction():
    # every active interpretation denotes an upward-closed relation
    m, p = thresh_model(AtLeast(5))
    r = m.interps["R"]
    prev = False
    for w in range(-10, 11):
        cur = m.apply(r, (w,)) is True
        assert prev <= cur  # once true, stays true in the working order
        prev = cur


def test_enumeration_starts_with_small_descriptors():
    p = normalize_problem(parse_problem(THRESH))
    th = theory_of(p)
    first = list(itertools.islice(E.enumerate_structures(p, th), 6))
    descs = {m.interps["R"].descs[0] for m in first}
    assert EMPTY in descs and ALL in descs
    assert len(descs) == len(first)  # no duplicate candidates


# ---------------------------------------------------------------------------
# flagship higher-order witness


def test_integral_witness_verifies_on_256_not_255():
    p256 = load("integral256.lchc")
    th = theory_of(p256)
    m = E.load_model(p256, th, os.path.join(FIX, "integral256.model.json"))
    assert E.check_model(m, p256)
    p255 = load("integral255.lchc")
    m255 = E.load_model(p255, th, os.path.join(FIX, "integral256.model.json"))
    assert not E.check_model(m255, p255)


def test_serialize_roundtrip():
    p = load("integral256.lchc")
    th = theory_of(p)
    m = E.load_model(p, th, os.path.join(FIX, "integral256.model.json"))
    data = E.serialize_model(m)
    m2 = E.deserialize_model(p, th, data)
    assert m2.interps == m.interps
    assert E.serialize_model(m2) == data


def test_deserialize_rejects_unknown_predicate():
    p = load("integral256.lchc")
    th = theory_of(p)
    with open(os.path.join(FIX, "integral256.model.json")) as fh:
        data = json.load(fh)
    data["predicates"]["Mystery"] = {"kind": "inactive", "rows": []}
    with pytest.raises(E.SchemaError):
        E.deserialize_model(p, th, data)


def test_deserialize_rejects_missing_rows():
    p = load("integral256.lchc")
    th = theory_of(p)
    with open(os.path.join(FIX, "integral256.model.json")) as fh:
        data = json.load(fh)
    data["predicates"]["Integral"]["rows"] = \
        data["predicates"]["Integral"]["rows"][:1]
    with pytest.raises(E.FrameInconsistency):
        E.deserialize_model(p, th, data)


def test_load_canonicalizes_dominated_generators():
    text = """
(theory (nat 2))
(direction upward)
(declare R (-> W o))
(clause ((u W)) (head (R u)) (body (geq u (tuple 1 1))))
(goal () (body (R (tuple 0 0))))
"""
    p = normalize_problem(parse_problem(text))
    th = theory_of(p)
    data = {"stages": 2, "predicates": {"R": {"kind": "active", "rows": [
        {"pre": [], "post": [],
         "upset": {"kind": "antichain", "min": [[1, 1], [2, 2]]}}]}}}
    m = E.deserialize_model(p, th, data)
    assert m.interps["R"].descs == (Antichain(((1, 1),)),)


# ---------------------------------------------------------------------------
# first-order fixpoint and the bounded differential oracle


def test_least_model_of_multiplication():
    p = load("mult6.lchc")
    th = theory_of(p)
    m = E.fo_least_model(p, th)
    assert m is not None
    assert m.interps["G"].descs == (Antichain(((6, 0),)),)
    f_rows = m.interps["F"].descs
    assert set(f_rows) == {Antichain(((0, 2), (3, 1), (6, 0)))}
    assert not E.check_model(m, p)  # goal G (6,0) is violated: unsatisfiable
    p5 = load("mult5.lchc")
    m5 = E.fo_least_model(p5, th)
    assert E.check_model(m5, p5)


def test_bounded_oracle_upward_closure():
    text = """
(theory (nat 2))
(direction upward)
(declare R (-> W o))
(clause ((u W)) (head (R u)) (body (geq u (tuple 1 1))))
(goal () (body (R (tuple 0 0))))
"""
    p = normalize_problem(parse_problem(text))
    th = theory_of(p)
    bm = E.bounded_canonical_model(p, th, window=3)
    assert bm.holds("R", ((2, 2),))
    assert bm.holds("R", ((1, 1),))
    assert not bm.holds("R", ((0, 1),))
    assert not bm.goal_violated


def test_extract_upset_downward_omega():
    # {u : u2 = 0} in the downward order is generated by (omega, 0)
    from limitdl import presburger as P
    th = theory_for("nat", 2, "downward")
    phi = P.eq(P.LinTerm.of_var("c1"), P.LinTerm.of_const(0))
    u = E.extract_upset(th, phi, ["c0", "c1"])
    assert u == Antichain(((None, 0),))
