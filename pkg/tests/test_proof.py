import random
from dataclasses import fields, replace

import pytest
from hypothesis import given, strategies as st

from whilecf import lang
from whilecf.assertions import FALSE, TRUE, Cmp, Lit, Prog, conj
from whilecf.bigstep import valid_big
from whilecf.errors import MalformedNode, ParseError
from whilecf.gen import random_safe_instance, semantic_proof, set_formula
from whilecf.lang import (BREAK, SKIP, Assign, Footprint, For, Var, enumerate_states,
                          parse_command, parse_expr)
from whilecf.proof import (PRIMARY_RULES, RULE_FOR, Certificate, RAssign, RBreak, RConseq,
                           RContinue, RIf, RLoop, RSeq, RSkip, Triple, check, conclusion,
                           node_count, parse_certificate, parse_tree, print_certificate,
                           print_tree, rule_counts, source_hash, subtrees)
from whilecf.smallstep import valid_wp

from conftest import FP2

FP = Footprint(("x",), 4)


def x_eq(v):
    return Cmp("=", Prog(Var("x")), Lit(v))


def test_skip_conclusion():
    assert conclusion(RSkip(TRUE)) == Triple(TRUE, SKIP, TRUE, FALSE, FALSE)


def test_break_and_continue_conclusions():
    p = x_eq(1)
    assert conclusion(RBreak(p)) == Triple(p, BREAK, FALSE, p, FALSE)
    assert conclusion(RContinue(p)).posts == (FALSE, FALSE, p)


def test_assign_conclusion():
    e = parse_expr("x + 1")
    got = conclusion(RAssign("x", e, x_eq(1)))
    assert got == Triple(Cmp("=", Prog(e), Lit(1)), Assign("x", e), x_eq(1), FALSE, FALSE)


def test_assign_with_partial_expression_requires_definedness():
    e = parse_expr("1 / x")
    pre = conclusion(RAssign("x", e, TRUE)).pre
    assert pre == conj(TRUE, Cmp("=", Prog(e), Prog(e)))
    assert [s["x"] for s in _models(pre)] == [1, 2, 3]


def _models(p):
    from whilecf.assertions import models
    return models(p, FP)


def test_seq_with_mismatched_control_posts():
    left = RBreak(TRUE)            # break post true
    right = RSkip(FALSE)
    t = RSeq(FALSE, RConseq(left, TRUE, FALSE, TRUE, FALSE), right)
    with pytest.raises(MalformedNode):
        conclusion(t)


def test_seq_with_wrong_mid():
    with pytest.raises(MalformedNode) as info:
        conclusion(RSeq(x_eq(2), RSkip(TRUE), RSkip(TRUE)))
    assert info.value.path == "root"


def test_check_ok_and_failure():
    assert check(RSkip(TRUE), FP).ok
    rep = check(RConseq(RSkip(TRUE), TRUE, x_eq(0), FALSE, FALSE), FP)
    assert not rep.ok
    (f,) = rep.failures
    assert f.path == "root" and f.counterexample.as_dict() == {"x": 1}


def test_check_reports_nested_path():
    bad = RConseq(RSkip(x_eq(1)), x_eq(1), x_eq(2), FALSE, FALSE)
    rep = check(RSeq(x_eq(2), bad, RSkip(x_eq(2))), FP)
    assert [f.path for f in rep.failures] == ["root.left"]


def test_check_rejects_foreign_variables():
    rep = check(RSkip(Cmp("=", Prog(Var("q")), Lit(0))), FP)
    assert not rep.ok and "footprint" in rep.failures[0].obligation


def test_loop_conclusion():
    inv = x_eq(0)
    body = RConseq(RBreak(inv), inv, inv, inv, inv)
    incr = RConseq(RSkip(inv), inv, inv, inv, FALSE)
    t = RLoop(inv, inv, body, incr)
    assert conclusion(t) == Triple(inv, For(BREAK, SKIP), inv, FALSE, FALSE)
    assert check(t, FP).ok


def test_unique_rule_per_constructor():
    syntax = [RSkip, RBreak, RContinue, RAssign, RSeq, RIf, RLoop]
    assert sorted(r.__name__ for r in RULE_FOR.values()) == sorted(r.__name__ for r in syntax)
    assert set(PRIMARY_RULES) == set(syntax) | {RConseq}
    ctors = [lang.Skip, lang.Break, lang.Continue, lang.Assign, lang.Seq, lang.If, lang.For]
    assert set(RULE_FOR) == set(ctors)


def _instance(seed, fp=FP2, size=8):
    rng = random.Random(seed)
    c, S = random_safe_instance(rng, fp, size)
    return c, S, semantic_proof(c, S, fp, rng, slack=0.4), rng


@given(st.integers(0, 2**32))
def test_semantic_proofs_check_and_are_valid(seed):
    c, S, t, _ = _instance(seed)
    rep = check(t, FP2)
    assert rep.ok, rep
    assert rep.triple.cmd == c and rep.triple.pre == set_formula(S, FP2)
    assert not valid_big(rep.triple, FP2, 2000).refuted
    assert not valid_wp(rep.triple, FP2, 2000).refuted


def _conseq_nodes(t, path=()):
    if isinstance(t, RConseq):
        yield path
    for i, s in enumerate(subtrees(t)):
        yield from _conseq_nodes(s, path + (i,))


def _replace_at(t, path, f):
    if not path:
        return f(t)
    kids = list(subtrees(t))
    kids[path[0]] = _replace_at(kids[path[0]], path[1:], f)
    names = [fl.name for fl in fields(t) if isinstance(getattr(t, fl.name), tuple(PRIMARY_RULES))]
    return replace(t, **dict(zip(names, kids)))


@given(st.integers(0, 2**32))
def test_checker_soundness_under_mutation(seed):
    # perturb one consequence node; whenever the result still checks, it is valid
    c, S, t, rng = _instance(seed, size=6)
    spots = list(_conseq_nodes(t))
    if not spots:
        return
    path = rng.choice(spots)
    field = rng.choice(["pre", "post", "post_brk", "post_con"])
    pool = enumerate_states(FP2)
    new = set_formula(rng.sample(pool, rng.randint(0, len(pool))), FP2)
    mutated = _replace_at(t, path, lambda n: replace(n, **{field: new}))
    rep = check(mutated, FP2)
    if rep.ok:
        assert not valid_big(rep.triple, FP2, 2000).refuted
        assert not valid_wp(rep.triple, FP2, 2000).refuted


@given(st.integers(0, 2**32))
def test_tree_text_round_trip(seed):
    _, _, t, _ = _instance(seed)
    assert parse_tree(print_tree(t)) == t


def test_certificate_round_trip():
    _, _, t, _ = _instance(4)
    cert = Certificate(t, FP2, source_hash("skip"))
    text = print_certificate(cert)
    back = parse_certificate(text)
    assert back == cert
    assert print_certificate(back) == text
    assert back.check().ok


def test_certificate_parse_errors():
    with pytest.raises(ParseError):
        parse_certificate("(certificate (footprint (x) 4) (source none) (skip {true})")
    with pytest.raises(ParseError):
        parse_certificate("(certificate (footprint (x) 4) (source none) (frob {true}))")
    with pytest.raises(ParseError):
        parse_certificate("(proof)")


def test_rule_counts_and_size():
    t = RSeq(TRUE, RSkip(TRUE), RConseq(RSkip(TRUE), TRUE, TRUE, FALSE, FALSE))
    assert rule_counts(t) == {"seq": 1, "skip": 2, "conseq": 1}
    assert node_count(t) == 4


def test_if_conclusion_needs_branch_shapes():
    e = parse_expr("x")
    bad = RIf(e, RSkip(TRUE), RSkip(TRUE))
    with pytest.raises(MalformedNode):
        conclusion(bad)


def test_parse_tree_example():
    t = parse_tree("(seq {[x] = 1} (assign x {1} {[x] = 1}) (skip {[x] = 1}))")
    assert conclusion(t).cmd == parse_command("x = 1 ;; skip")
    assert check(t, FP).ok
