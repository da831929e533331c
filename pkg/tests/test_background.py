"""Descriptor and theory tests.

Oracles: membership is cross-checked against the arithmetic formula route
(upset_formula + decide) on sampled points; canonicalization against a
brute-force minimal-generator computation.
"""

import itertools
import random

import pytest

from limitdl import presburger as P
from limitdl.background import (
    ALL, Antichain, AtLeast, EMPTY, Theory, TheoryError, comp_var,
    compile_atom, exists_sat, theory_for, upset_from_json, upset_to_json,
)
from limitdl.syntax import BgAtom, FIN, SConst, Var, W, WLit, WOp


LIA_UP = Theory("lia", 1, flipped=False)
LIA_DOWN = Theory("lia", 1, flipped=True)
NAT2_UP = Theory("nat", 2, flipped=False)
NAT2_DOWN = Theory("nat", 2, flipped=True)


def test_member_lia():
    assert LIA_UP.member((5,), AtLeast(3))
    assert not LIA_UP.member((2,), AtLeast(3))
    assert LIA_DOWN.member((2,), AtLeast(3))
    assert not LIA_DOWN.member((5,), AtLeast(3))
    assert LIA_UP.member((-10,), ALL)
    assert not LIA_UP.member((-10,), EMPTY)


def test_member_nat():
    u = Antichain(((1, 2), (3, 0)))
    assert NAT2_UP.member((1, 2), u)
    assert NAT2_UP.member((5, 5), u)
    assert not NAT2_UP.member((0, 5), u)
    assert NAT2_UP.member((3, 0), u)
    d = Antichain(((1, 2),))
    assert NAT2_DOWN.member((0, 0), d)
    assert NAT2_DOWN.member((1, 2), d)
    assert not NAT2_DOWN.member((2, 0), d)
    omega = Antichain(((None, 3),))
    assert NAT2_DOWN.member((100, 3), omega)
    assert not NAT2_DOWN.member((0, 4), omega)


def test_domain_check():
    with pytest.raises(TheoryError):
        NAT2_UP.member((-1, 0), ALL)
    with pytest.raises(TheoryError):
        LIA_UP.member((1, 2), ALL)


def test_canonicalize_removes_dominated():
    u = Antichain(((1, 2), (2, 2), (3, 0), (1, 2)))
    c = NAT2_UP.canonicalize(u)
    assert c == Antichain(((1, 2), (3, 0)))
    # flipped: (2,2) dominates (1,2)
    c2 = NAT2_DOWN.canonicalize(u)
    assert c2 == Antichain(((2, 2), (3, 0)))


def test_canonicalize_idempotent_random():
    rng = random.Random(7)
    for _ in range(200):
        gens = tuple(tuple(rng.randint(0, 4) for _ in range(2))
                     for _ in range(rng.randint(0, 5)))
        for th in (NAT2_UP, NAT2_DOWN):
            c = th.canonicalize(Antichain(gens))
            assert th.canonicalize(c) == c
            # same denotation on a sample window
            for w in itertools.product(range(6), repeat=2):
                assert th.member(w, c) == th.member(w, Antichain(gens))


def test_member_monotone_in_working_order():
    rng = random.Random(11)
    for th in (NAT2_UP, NAT2_DOWN):
        ups = []
        it = th.enumerate_upsets()
        for _ in range(60):
            ups.append(next(it))
        for u in ups:
            for _ in range(30):
                a = tuple(rng.randint(0, 6) for _ in range(2))
                b = tuple(rng.randint(0, 6) for _ in range(2))
                if th.w_leq(a, b) and th.member(a, u):
                    assert th.member(b, u)


def test_formula_agreement_1000_samples():
    """member(w, u) must agree with deciding the compiled membership formula."""
    rng = random.Random(3)
    checked = 0
    for th in (LIA_UP, LIA_DOWN, NAT2_UP, NAT2_DOWN):
        it = th.enumerate_upsets()
        ups = [next(it) for _ in range(40)]
        comps = [comp_var("w", i + 1) for i in range(th.dim)]
        for u in ups:
            f = th.upset_formula(u, comps)
            for _ in range(10):
                if th.nat:
                    w = tuple(rng.randint(0, 8) for _ in range(th.dim))
                else:
                    w = (rng.randint(-8, 8),)
                env = dict(zip(comps, w))
                assert P.evaluate(P.nnf(f), env) == th.member(w, u), (th.kind, th.flipped, u, w)
                checked += 1
    assert checked >= 1000


def test_enumeration_injective_and_canonical():
    for th in (LIA_UP, NAT2_UP, NAT2_DOWN):
        it = th.enumerate_upsets()
        seen = set()
        for _ in range(300):
            u = next(it)
            assert u not in seen
            seen.add(u)
            if isinstance(u, Antichain):
                assert th.canonicalize(u) == u


def test_enumeration_reaches_targets():
    def index_of(th, target, cap=5000):
        for i, u in enumerate(th.enumerate_upsets()):
            if u == target:
                return i
            if i > cap:
                raise AssertionError(f"{target} not reached in {cap}")
    assert index_of(LIA_UP, AtLeast(5)) < 20
    assert index_of(NAT2_UP, Antichain(((0, 0),))) < 10  # the whole domain
    assert index_of(NAT2_DOWN, Antichain(((None, None),))) < 10
    assert index_of(NAT2_DOWN, Antichain(((1, 2),))) < 200
    th1 = Theory("nat", 1, flipped=True)
    assert index_of(th1, Antichain(((3,),))) < 30


def test_upset_json_roundtrip():
    for u in (EMPTY, ALL, AtLeast(-7), Antichain(((1, 2), (None, 0)))):
        assert upset_from_json(upset_to_json(u)) == u


def test_compile_atom_tuples():
    th = NAT2_UP
    a = BgAtom("leq", Var("x"), WLit((3, 4)))
    f = compile_atom(a, th)
    env = {comp_var("x", 1): 2, comp_var("x", 2): 4}
    assert P.evaluate(P.nnf(f), env)
    env2 = {comp_var("x", 1): 2, comp_var("x", 2): 5}
    assert not P.evaluate(P.nnf(f), env2)
    # strict product-order lt: (3,4) < (3,4) fails, (2,4) < (3,4) holds
    b = BgAtom("lt", Var("x"), WLit((3, 4)))
    g = compile_atom(b, th)
    assert not P.evaluate(P.nnf(g), {comp_var("x", 1): 3, comp_var("x", 2): 4})
    assert P.evaluate(P.nnf(g), {comp_var("x", 1): 2, comp_var("x", 2): 4})


def test_compile_atom_components_and_arith():
    th = NAT2_UP
    a = BgAtom("eq", WOp("comp", (Var("u"),), k=1),
               WOp("+", (WOp("comp", (Var("v"),), k=2), WLit((1,)))))
    f = compile_atom(a, th)
    env = {comp_var("u", 1): 5, comp_var("v", 2): 4}
    assert P.evaluate(P.nnf(f), env)


def test_compile_eqs():
    th = LIA_UP
    assert compile_atom(BgAtom("eqs", SConst("a"), SConst("a")), th) == P.TRUE
    assert compile_atom(BgAtom("eqs", Var("s"), SConst("a")), th, {"s": "b"}) == P.FALSE


def test_exists_sat_basic():
    th = LIA_UP
    atoms = [BgAtom("geq", Var("x"), WLit((5,))), BgAtom("leq", Var("x"), WLit((4,)))]
    assert not exists_sat(atoms, {"x": W}, th, [])
    atoms2 = [BgAtom("geq", Var("x"), WLit((5,))), BgAtom("leq", Var("x"), WLit((9,)))]
    assert exists_sat(atoms2, {"x": W}, th, [])


def test_exists_sat_nat_bounds():
    th = Theory("nat", 1, flipped=False)
    atoms = [BgAtom("lt", Var("x"), WLit((0,)))]
    assert not exists_sat(atoms, {"x": W}, th, [])


def test_exists_sat_with_fin_vars():
    th = LIA_UP
    atoms = [BgAtom("eqs", Var("s"), SConst("b")),
             BgAtom("geq", Var("x"), WLit((0,)))]
    assert exists_sat(atoms, {"s": FIN, "x": W}, th, ["a", "b"])
    assert not exists_sat(atoms, {"s": FIN, "x": W}, th, ["a"])


def test_exists_sat_equality_chain():
    # long substitution chains (the saturation workload)
    th = Theory("nat", 2, flipped=True)
    atoms = []
    names = [f"v{i}" for i in range(10)]
    for i in range(9):
        atoms.append(BgAtom("eq", WOp("comp", (Var(names[i + 1]),), k=1),
                            WOp("+", (WOp("comp", (Var(names[i]),), k=1), WLit((1,))))))
    atoms.append(BgAtom("eq", WOp("comp", (Var(names[0]),), k=1), WLit((0,))))
    atoms.append(BgAtom("eq", WOp("comp", (Var(names[9]),), k=1), WLit((9,))))
    assert exists_sat(atoms, {n: W for n in names}, th, [])
    atoms[-1] = BgAtom("eq", WOp("comp", (Var(names[9]),), k=1), WLit((8,)))
    assert not exists_sat(atoms, {n: W for n in names}, th, [])
