import random

import pytest
from hypothesis import given, strategies as st

from whilecf import lang
from whilecf.assertions import (FALSE, TRUE, And, Cmp, Exists, Forall, Implies, Lit, LVar,
                                Not, Or, Prog, conj, cond_false, cond_true, defined, disj,
                                entails, free_lvars, inst, models, parse_assertion,
                                pretty_assertion, satisfies, states_formula, subst, with_defined)
from whilecf.errors import CapExceeded, EvalError
from whilecf.gen import gen_assertion
from whilecf.lang import Footprint, enumerate_states, eval_expr, gen_expr, parse_expr

from conftest import FP2, states

FP = Footprint(("x", "y"), 3)
ERR = object()


def naive_term(t, s, env):
    m = s.fp.modulus
    if isinstance(t, LVar):
        return env[t.name]
    if isinstance(t, Lit):
        return t.value % m
    if isinstance(t, Prog):
        try:
            return eval_expr(t.expr, s)
        except EvalError:
            return ERR
    args = [naive_term(a, s, env) for a in t.args]
    if any(a is ERR for a in args):
        return ERR
    try:
        if len(args) == 1:
            return lang.apply_unary(t.op, args[0], m)
        return lang.apply_op(t.op, args[0], args[1], m)
    except EvalError:
        return ERR


def naive(p, s, env):
    """Direct reading of the satisfaction relation (strict atoms)."""
    if p == TRUE:
        return True
    if p == FALSE:
        return False
    if isinstance(p, Cmp):
        a, b = naive_term(p.left, s, env), naive_term(p.right, s, env)
        if a is ERR or b is ERR:
            return False
        return {"=": a == b, "<=": a <= b, "<": a < b}[p.rel]
    if isinstance(p, Not):
        return not naive(p.arg, s, env)
    if isinstance(p, And):
        return naive(p.left, s, env) and naive(p.right, s, env)
    if isinstance(p, Or):
        return naive(p.left, s, env) or naive(p.right, s, env)
    if isinstance(p, Implies):
        return (not naive(p.left, s, env)) or naive(p.right, s, env)
    vals = (naive(p.body, s, {**env, p.var: d}) for d in range(s.fp.modulus))
    return any(vals) if isinstance(p, Exists) else all(vals)


def x_eq(v):
    return Cmp("=", Prog(lang.Var("x")), Lit(v))


def test_satisfies_examples():
    fp = Footprint(("x", "y"), 8)
    assert satisfies(fp.state(x=4), {}, parse_assertion("[x] = 4"))
    p = parse_assertion("exists n. [x] = n * [y]")
    assert satisfies(fp.state(x=6, y=2), {}, p)
    # the witness is n = 3, and it is the only one below 4
    assert [n for n in range(8) if satisfies(fp.state(x=6, y=2), {"n": n},
                                              parse_assertion("[x] = n * [y]"))] == [3, 7]
    for s in enumerate_states(FP):
        assert not satisfies(s, {"n": 1}, FALSE)


def test_unbound_logic_variable_rejected():
    with pytest.raises(KeyError):
        satisfies(FP.state(), {}, parse_assertion("[x] = n"))


@given(st.integers(0, 2**32))
def test_compiled_satisfaction_matches_naive(seed):
    rng = random.Random(seed)
    p = gen_assertion(rng, FP, 3, ("m",))
    for s in enumerate_states(FP):
        for m in range(FP.modulus):
            assert satisfies(s, {"m": m}, p) == naive(p, s, {"m": m})


@given(st.integers(0, 2**32))
def test_quantifier_duality(seed):
    rng = random.Random(seed)
    body = gen_assertion(rng, FP, 2, ("v",))
    a, b = Not(Exists("v", body)), Forall("v", Not(body))
    for s in enumerate_states(FP):
        assert satisfies(s, {}, a) == satisfies(s, {}, b)


def test_strict_atoms():
    div = Prog(parse_expr("x / y"))
    p = Cmp("=", div, div)
    assert p == defined(parse_expr("x / y"))
    assert not satisfies(FP.state(x=1, y=0), {}, p)
    assert not satisfies(FP.state(x=1, y=0), {}, Cmp("<=", div, Lit(2)))
    assert satisfies(FP.state(x=1, y=0), {}, Not(Cmp("<=", div, Lit(2))))


@given(st.integers(0, 2**32))
def test_atoms_over_total_expressions_are_arithmetic(seed):
    rng = random.Random(seed)
    opts = lang.GenOptions(allow_division=False)
    e1, e2 = gen_expr(rng, FP, 2, opts), gen_expr(rng, FP, 2, opts)
    rel = rng.choice(("=", "<=", "<"))
    p = Cmp(rel, Prog(e1), Prog(e2))
    for s in enumerate_states(FP):
        a, b = eval_expr(e1, s), eval_expr(e2, s)
        assert satisfies(s, {}, p) == {"=": a == b, "<=": a <= b, "<": a < b}[rel]


def test_cond_atoms():
    e = parse_expr("x - 1")
    for s in enumerate_states(FP):
        v = (s["x"] - 1) % 3
        assert satisfies(s, {}, cond_true(e)) == (v != 0)
        assert satisfies(s, {}, cond_false(e)) == (v == 0)


def test_subst_examples():
    y1 = parse_expr("y + 1")
    assert subst(x_eq(1), "x", y1) == Cmp("=", Prog(y1), Lit(1))
    got = subst(parse_assertion("exists n. [x] = n"), "x", lang.Const(0))
    assert got == parse_assertion("exists n. [0] = n")


@given(st.integers(0, 2**32))
def test_substitution_lemma(seed):
    # s |= P[x := e]  iff  s[x := eval e] |= P, whenever e evaluates
    rng = random.Random(seed)
    p = gen_assertion(rng, FP, 3)
    x = rng.choice(FP.vars)
    e = gen_expr(rng, FP, 2)
    q = subst(p, x, e)
    for s in enumerate_states(FP):
        try:
            v = eval_expr(e, s)
        except EvalError:
            continue
        assert satisfies(s, {}, q) == satisfies(s.set(x, v), {}, p)


@given(st.integers(0, 2**32))
def test_inst_lemma(seed):
    rng = random.Random(seed)
    p = gen_assertion(rng, FP, 3, ("v", "n"))
    d = rng.randrange(FP.modulus)
    q = inst(p, "v", Lit(d))
    assert "v" not in free_lvars(q)
    for s in enumerate_states(FP):
        for n in range(FP.modulus):
            assert satisfies(s, {"n": n}, q) == satisfies(s, {"n": n, "v": d}, p)


def test_inst_avoids_capture():
    p = Exists("n", Cmp("=", LVar("v"), LVar("n")))
    q = inst(p, "v", LVar("n"))
    # "exists n'. n = n'" holds for every n
    for s in enumerate_states(FP):
        for n in range(3):
            assert satisfies(s, {"n": n}, q)


def test_entails_examples():
    assert entails(FALSE, x_eq(2), FP).ok
    both = parse_assertion("[x] = 1 /\\ [y] = 2")
    assert entails(both, x_eq(1), FP).ok
    v = entails(parse_assertion("[x] <= 2"), x_eq(1), Footprint(("x",), 8))
    assert v.refuted and v.state.as_dict() == {"x": 0}


def test_entails_closes_free_logic_variables():
    assert entails(parse_assertion("[x] = m"), parse_assertion("[x] = m"), FP).ok
    v = entails(parse_assertion("[x] = m"), parse_assertion("[x] = 0"), FP)
    assert v.refuted and v.env == {"m": 1}


@given(st.integers(0, 2**32))
def test_entails_preorder(seed):
    rng = random.Random(seed)
    a, b, c = (gen_assertion(rng, FP, 2) for _ in range(3))
    assert entails(a, a, FP).ok
    if entails(a, b, FP).ok and entails(b, c, FP).ok:
        assert entails(a, c, FP).ok


@given(st.integers(0, 2**32))
def test_entails_matches_model_inclusion(seed):
    rng = random.Random(seed)
    a, b = gen_assertion(rng, FP, 2), gen_assertion(rng, FP, 2)
    inclusion = set(models(a, FP)) <= set(models(b, FP))
    assert entails(a, b, FP).ok == inclusion


def test_entails_cap():
    big = Footprint(("a", "b", "c", "d"), 8)
    with pytest.raises(CapExceeded):
        entails(parse_assertion("[a] = n /\\ [b] = k /\\ [c] = j"), FALSE, big, cap=10_000)


@given(st.integers(0, 2**32))
def test_pretty_parse_round_trip(seed):
    p = gen_assertion(random.Random(seed), FP, 3, ("m",))
    assert parse_assertion(pretty_assertion(p)) == p


def test_states_formula_denotes_exactly(fp2):
    rng = random.Random(3)
    for _ in range(20):
        chosen = set(rng.sample(enumerate_states(fp2), rng.randint(0, 6)))
        assert set(models(states_formula(chosen), fp2)) == chosen


def test_with_defined_only_for_partial_expressions():
    p = x_eq(1)
    assert with_defined(p, parse_expr("x + 1")) == p
    e = parse_expr("x / y")
    assert with_defined(p, e) == conj(p, defined(e))
    assert with_defined(with_defined(p, e), e) == with_defined(p, e)


def test_disj_simplifies_units():
    p = x_eq(1)
    assert disj(FALSE, p) == p and disj(p, FALSE) == p and disj(p, p) == p


@given(states(FP2))
def test_true_and_false(s):
    assert satisfies(s, {}, TRUE) and not satisfies(s, {}, FALSE)
