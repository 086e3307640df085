import pytest
from hypothesis import given, settings, strategies as st

from whilecf.assertions import (FALSE, TRUE, And, Cmp, Exists, Lit, LVar, Or, Prog, cond_false,
                                cond_true, disj, entails, models)
from whilecf.bigstep import valid_big
from whilecf.errors import EmptyDomain, ShapeError, SideConditionError
from whilecf.extended import (conseq, conseq_pre, domain_membership, ex_finite, if_seq, inv_if,
                              inv_loop, inv_seq, inv_skip, loop_nocontinue, loop_unroll1,
                              merge_disj, nocontinue, regroup, seq_assoc, seq_assoc_inv,
                              to_triple)
from whilecf.fuzz import TRANSFORMERS, suite_transformers
from whilecf.gen import semantic_proof, set_formula
from whilecf.lang import (BREAK, CONTINUE, SKIP, Footprint, For, Seq, Var, enumerate_states,
                          parse_command, parse_expr)
from whilecf.proof import (RAssign, RBreak, RConseq, RContinue, RIf, RLoop, RSeq, RSkip, Triple,
                           check, conclusion)
from whilecf.verify import parse_annotated, parse_spec, symexec

FP = Footprint(("x",), 4)
FP2 = Footprint(("x", "y"), 4)


def x_eq(v):
    return Cmp("=", Prog(Var("x")), Lit(v))


def ok_tree(t, fp=FP):
    rep = check(t, fp)
    assert rep.ok, rep
    return rep.triple


def test_inv_seq_on_seq_node():
    t = RSeq(TRUE, RSkip(TRUE), RSkip(TRUE))
    s = inv_seq(t)
    assert (s.mid, s.left, s.right) == (TRUE, t.left, t.right)


def test_inv_seq_through_consequence():
    inner = RSeq(TRUE, RSkip(TRUE), RSkip(TRUE))
    t = RConseq(inner, x_eq(1), TRUE, x_eq(2), FALSE)
    s = inv_seq(t)
    assert s.mid == TRUE
    assert conclusion(s.left) == Triple(x_eq(1), SKIP, TRUE, x_eq(2), FALSE)
    assert conclusion(s.right) == Triple(TRUE, SKIP, TRUE, x_eq(2), FALSE)
    ok_tree(s.left)
    ok_tree(s.right)
    back = conseq(RSeq(s.mid, s.left, s.right), *[getattr(conclusion(t), f) for f in
                                                    ("pre", "post", "post_brk", "post_con")])
    assert ok_tree(back) == conclusion(t)


def _loop_tree(inv=None):
    inv = inv or x_eq(0)
    body = RConseq(RBreak(inv), inv, inv, inv, inv)
    incr = RConseq(RSkip(inv), inv, inv, inv, FALSE)
    return RLoop(inv, inv, body, incr)


def test_inv_loop_on_loop_node():
    t = _loop_tree()
    ls = inv_loop(t)
    assert (ls.i1, ls.i2, ls.body, ls.incr) == (t.inv, t.inv_incr, t.body, t.incr)
    assert ls.entry == (t.inv, t.inv)


def test_inv_loop_through_consequence():
    t = RConseq(_loop_tree(), FALSE, TRUE, FALSE, FALSE)
    ls = inv_loop(t)
    assert ls.i1 == x_eq(0)
    assert conclusion(ls.body).post_brk == TRUE
    assert conclusion(ls.incr).post_brk == TRUE
    assert entails(*ls.entry, FP).ok
    ok_tree(ls.body)
    ok_tree(ls.incr)


def _if_tree():
    e = parse_expr("x")
    a = RConseq(RSkip(TRUE), And(TRUE, cond_true(e)), TRUE, FALSE, FALSE)
    b = RConseq(RSkip(TRUE), And(TRUE, cond_false(e)), TRUE, FALSE, FALSE)
    return RIf(e, a, b)


def test_inv_if_on_if_node():
    t = _if_tree()
    assert inv_if(t) == (t.then, t.els)


def test_inv_if_distributes_consequence():
    e = parse_expr("x")
    t = RConseq(_if_tree(), x_eq(1), TRUE, FALSE, FALSE)
    a, b = inv_if(t)
    assert conclusion(a).pre == And(x_eq(1), cond_true(e))
    assert conclusion(b).pre == And(x_eq(1), cond_false(e))
    ok_tree(a)
    ok_tree(b)


def test_inv_skip_gives_entailment():
    p, q = inv_skip(RConseq(RSkip(TRUE), x_eq(1), TRUE, FALSE, FALSE))
    assert entails(p, q, FP).ok


def test_merge_skip():
    a, b = x_eq(1), x_eq(2)
    t = merge_disj(RSkip(a), RSkip(b))
    assert ok_tree(t) == Triple(Or(a, b), SKIP, Or(a, b), FALSE, FALSE)


def test_merge_assign():
    e = parse_expr("x + 1")
    t = merge_disj(RAssign("x", e, x_eq(1)), RAssign("x", e, x_eq(2)))
    got = ok_tree(t)
    assert got.post == Or(x_eq(1), x_eq(2))
    assert isinstance(t, RAssign) and t.post == Or(x_eq(1), x_eq(2))


def test_merge_rejects_different_commands():
    with pytest.raises(ShapeError):
        merge_disj(RSkip(TRUE), RBreak(TRUE))


def test_ex_finite_single():
    body = Cmp("=", Prog(Var("x")), LVar("n"))
    t = ex_finite("n", body, {2: RSkip(x_eq(2))}, 4)
    assert ok_tree(t) == Triple(Exists("n", And(Cmp("=", LVar("n"), Lit(2)), body)), SKIP,
                                x_eq(2), FALSE, FALSE)


def test_ex_finite_two_values():
    body = Cmp("=", Prog(Var("x")), LVar("n"))
    post = Or(x_eq(0), x_eq(1))
    fam = {d: RConseq(RSkip(x_eq(d)), x_eq(d), post, FALSE, FALSE) for d in (0, 1)}
    t = ex_finite("n", body, fam, 4)
    got = ok_tree(t)
    assert got.pre == Exists("n", And(Cmp("<=", LVar("n"), Lit(1)), body))
    assert [s["x"] for s in models(got.pre, FP)] == [0, 1]
    assert valid_big(got, FP).ok


def test_ex_finite_checks_family():
    body = Cmp("=", Prog(Var("x")), LVar("n"))
    with pytest.raises(EmptyDomain):
        ex_finite("n", body, {}, 4)
    with pytest.raises(ShapeError):
        ex_finite("n", body, {0: RSkip(x_eq(1))}, 4)


def test_domain_membership_forms():
    assert domain_membership("v", range(4), 4) == TRUE
    assert domain_membership("v", [0, 1], 4) == Cmp("<=", LVar("v"), Lit(1))
    assert domain_membership("v", [1, 3], 4) == Or(Cmp("=", LVar("v"), Lit(1)),
                                                    Cmp("=", LVar("v"), Lit(3)))


def test_nocontinue_examples():
    p = x_eq(1)
    t = nocontinue(RSkip(p), x_eq(0))
    assert ok_tree(t) == Triple(p, SKIP, p, FALSE, x_eq(0))
    with pytest.raises(SideConditionError):
        nocontinue(RContinue(p), FALSE)


def test_nocontinue_allows_nested_loop_continue():
    inv = TRUE
    body = RConseq(RContinue(inv), inv, inv, inv, inv)
    incr = RConseq(RBreak(inv), inv, inv, inv, FALSE)
    loop = RLoop(inv, inv, body, incr)
    t = nocontinue(loop, x_eq(3))
    assert ok_tree(t).cmd == For(CONTINUE, BREAK)


def test_nocontinue_seq():
    c = parse_command("x = 1 ;; x = x + 1")
    S = set(enumerate_states(FP))
    t = semantic_proof(c, S, FP)
    out = nocontinue(t, x_eq(3))
    got = ok_tree(out)
    assert got.post_con == x_eq(3) and got.post == conclusion(t).post
    assert valid_big(got, FP).ok


def test_if_seq_identical_mids():
    c = parse_command("if x then (x = 1 ;; skip) else (x = 1 ;; skip)")
    t = semantic_proof(c, set(enumerate_states(FP)), FP)
    out = if_seq(t)
    got = ok_tree(out)
    assert got.cmd == parse_command("(if x then x = 1 else x = 1) ;; skip")


def test_if_seq_shape_error():
    t = semantic_proof(parse_command("if x then skip else break"), set(enumerate_states(FP)), FP)
    with pytest.raises(ShapeError):
        if_seq(t)


def test_loop_nocontinue_degenerate():
    inv = TRUE
    body = RSeq(inv, RSkip(inv), RSkip(inv))
    body = RConseq(body, inv, inv, FALSE, inv)
    t = RLoop(inv, inv, body, RConseq(RSkip(inv), inv, inv, FALSE, FALSE))
    out = loop_nocontinue(t)
    assert ok_tree(out).cmd == For(SKIP, SKIP)


def test_loop_nocontinue_rejects_continue():
    c = For(Seq(CONTINUE, SKIP), SKIP)
    t = semantic_proof(c, {FP.state()}, FP)
    with pytest.raises(SideConditionError):
        loop_nocontinue(t)


def test_loop_nocontinue_on_divide_loop():
    # the divide loop with a modular invariant, merged body proved by symexec
    spec = parse_spec(open(_programs("divide_loop.spec")).read())
    fp = Footprint(("x", "y", "z"), 8)
    merged = parse_annotated(
        "for {inv: [y] = m /\\ 0 < m} {incr_inv: [y] = m /\\ 0 < m} (;; skip) "
        "((if x > 1 then break else z = x / y) ;; x = z / y)")
    tree, posts, vcs = symexec(merged, spec.pre, fp)
    assert all(entails(v.lhs, v.rhs, fp).ok for v in vcs)
    full = conseq(tree, None, disj(posts.normal, FALSE), FALSE, FALSE)
    out = loop_nocontinue(full)
    got = ok_tree(out, fp)
    assert got.cmd == parse_command("for(;; x = z / y) if x > 1 then break else z = x / y")


def _programs(name):
    import os
    return os.path.join(os.path.dirname(__file__), "..", "programs", name)


def _proofs_for_unroll(c1, c2, S, fp):
    from whilecf.gen import post_sets
    from whilecf.lang import ExitKind
    F = lambda s: set_formula(s, fp)   # noqa: E731
    N, B, C = ExitKind.NORMAL, ExitKind.BRK, ExitKind.CON
    s1, _ = post_sets(c1, S)
    p1 = s1[N] | s1[C]
    s2, _ = post_sets(c2, p1)
    p2 = s2[N]
    rb = s1[B] | s2[B]
    loop = For(c1, c2)
    ls, _ = post_sets(loop, p2)
    q = ls[N] | rb
    t1 = conseq(semantic_proof(c1, S, fp), F(S), F(p1), F(rb), F(p1))
    t2 = conseq(semantic_proof(c2, p1, fp), F(p1), F(p2), F(rb), F(s2[C]))
    t3 = conseq(semantic_proof(loop, p2, fp), F(p2), F(q), FALSE, FALSE)
    return t1, t2, t3


def test_loop_unroll1_two_iteration_counter():
    c1 = parse_command("if x == 2 then break else skip")
    c2 = parse_command("x = x + 1")
    t1, t2, t3 = _proofs_for_unroll(c1, c2, {FP.state(x=0)}, FP)
    out = loop_unroll1(t1, t2, t3, FP)
    got = ok_tree(out)
    assert got.cmd == For(c1, c2) and got.pre == x_eq(0)
    assert valid_big(got, FP).ok


def test_loop_unroll1_same_pre_is_t3():
    t3 = conseq(semantic_proof(For(BREAK, SKIP), set(enumerate_states(FP)), FP))
    t1 = conseq(semantic_proof(BREAK, set(enumerate_states(FP)), FP), TRUE, FALSE, TRUE, FALSE)
    t2 = conseq(semantic_proof(SKIP, set(), FP), FALSE, TRUE, TRUE, FALSE)
    with pytest.raises(ShapeError):
        # t2 must start from t1's normal post
        loop_unroll1(t1, RConseq(RSkip(TRUE), TRUE, TRUE, TRUE, FALSE), t3, FP)
    p = conclusion(t3).pre
    t1 = conseq(RBreak(p), p, p, p, p)
    t2 = conseq(RSkip(p), p, p, p, FALSE)
    assert loop_unroll1(t1, t2, t3, FP) == t3


def test_loop_unroll1_needs_break_post_in_q():
    p = x_eq(0)
    t3 = RConseq(_loop_tree(p), p, p, FALSE, FALSE)
    t1 = RConseq(RBreak(x_eq(1)), x_eq(1), p, x_eq(1), p)
    t2 = RConseq(RSkip(p), p, p, x_eq(1), FALSE)
    with pytest.raises(SideConditionError):
        loop_unroll1(t1, t2, t3, FP)


def test_seq_assoc_skips():
    t = RSeq(TRUE, RSeq(TRUE, RSkip(TRUE), RSkip(TRUE)), RSkip(TRUE))
    out = seq_assoc(t)
    assert ok_tree(out).cmd == Seq(SKIP, Seq(SKIP, SKIP))
    back = seq_assoc_inv(out)
    assert ok_tree(back) == conclusion(t)


def test_regroup_matches_target():
    c = parse_command("x = 1 ;; x = x + 1 ;; x = x + 1 ;; skip")
    t = semantic_proof(c, set(enumerate_states(FP)), FP)
    target = Seq(Seq(c.first, c.second.first), Seq(c.second.second.first, SKIP))
    out = regroup(t, target)
    assert ok_tree(out).cmd == target


def test_conseq_pre_examples():
    t = RSkip(x_eq(1))
    assert ok_tree(conseq_pre(t, x_eq(1), FP)) == conclusion(t)
    assert ok_tree(conseq_pre(t, FALSE, FP)).pre == FALSE
    with pytest.raises(SideConditionError) as info:
        conseq_pre(t, TRUE, FP)
    assert info.value.witness is not None


def test_to_triple_rejects_other_command():
    with pytest.raises(ShapeError):
        to_triple(RSkip(TRUE), Triple(TRUE, BREAK, TRUE))


def test_conseq_collapses_layers():
    t = conseq(conseq(RSkip(x_eq(1)), FALSE), TRUE, TRUE)
    assert isinstance(t, RConseq) and isinstance(t.child, RSkip)
    assert conseq(RSkip(TRUE)) == RSkip(TRUE)


@pytest.mark.parametrize("name", sorted(TRANSFORMERS))
def test_transformer_contracts(name):
    # exact conclusions, checking outputs and oracle-valid triples
    res = suite_transformers(12, seed=17, names=[name])
    assert res.checked == 12 and res.ok, res.violations


@settings(max_examples=15)
@given(st.integers(0, 2**32))
def test_if_seq_random(seed):
    res = suite_transformers(1, seed=seed, names=["if_seq", "merge_disj", "loop_unroll1"])
    assert res.ok, res.violations
