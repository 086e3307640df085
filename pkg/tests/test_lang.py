import random
from collections import Counter

import pytest
from hypothesis import given, strategies as st

from whilecf import lang
from whilecf.errors import EvalError, ParseError
from whilecf.lang import (BREAK, CONTINUE, SKIP, Assign, Binary, Const, Footprint, For, If, Seq,
                          Var, constructor_name, enumerate_states, eval_expr, gen_expr,
                          gen_random_command, has_toplevel_continue, parse_command, parse_expr,
                          pretty, pretty_expr)

from conftest import FP2, FP3, commands, states


def test_parse_skip():
    assert parse_command("skip") == SKIP


def test_parse_division_fragment():
    c = parse_command("z = x / y ;; skip")
    assert c == Seq(Assign("z", Binary("/", Var("x"), Var("y"))), SKIP)


def test_parse_unbalanced_for():
    with pytest.raises(ParseError):
        parse_command("for( break")


def test_parse_error_has_position():
    with pytest.raises(ParseError) as info:
        parse_command("skip ;;\n  x = = 1")
    assert info.value.line == 2


def test_seq_is_right_associative():
    assert parse_command("skip ;; break ;; continue") == Seq(SKIP, Seq(BREAK, CONTINUE))


def test_comments_are_ignored():
    assert parse_command("# nothing\nskip # here\n") == SKIP


def test_pretty_examples():
    assert pretty(SKIP) == "skip"
    assert pretty(Seq(BREAK, CONTINUE)) == "break ;; continue"


def test_pretty_left_nested_seq_keeps_grouping():
    c = Seq(Seq(SKIP, BREAK), CONTINUE)
    assert parse_command(pretty(c)) == c


@given(commands(FP3, 12))
def test_parse_pretty_round_trip(c):
    assert parse_command(pretty(c)) == c


@given(st.integers(0, 2**32))
def test_expr_round_trip(seed):
    e = gen_expr(random.Random(seed), FP3, 3)
    assert parse_expr(pretty_expr(e)) == e


def test_eval_examples():
    fp = Footprint(("x", "y"), 8)
    assert eval_expr(parse_expr("x + y"), fp.state(x=5, y=6)) == 3
    with pytest.raises(EvalError):
        eval_expr(parse_expr("x / y"), fp.state(x=3, y=0))
    assert eval_expr(parse_expr("x < y"), fp.state(x=1, y=2)) == 1


def test_mod_by_zero_errors():
    with pytest.raises(EvalError):
        eval_expr(parse_expr("x % y"), FP2.state(x=1, y=0))


@given(st.integers(0, 2**32), states(FP3))
def test_eval_deterministic_and_in_range(seed, s):
    e = gen_expr(random.Random(seed), FP3, 3)
    try:
        v = eval_expr(e, s)
    except EvalError:
        with pytest.raises(EvalError):
            eval_expr(e, s)
        return
    assert v == eval_expr(e, s)
    assert 0 <= v < FP3.modulus


@given(st.integers(0, 2**32), states(FP3))
def test_comparisons_yield_bits(seed, s):
    rng = random.Random(seed)
    a, b = gen_expr(rng, FP3, 1), gen_expr(rng, FP3, 1)
    op = rng.choice(lang.CMP_OPS + lang.LOGIC_OPS)
    try:
        assert eval_expr(Binary(op, a, b), s) in (0, 1)
    except EvalError:
        pass


def test_has_toplevel_continue_examples():
    assert has_toplevel_continue(CONTINUE)
    assert not has_toplevel_continue(For(CONTINUE, SKIP))
    assert has_toplevel_continue(Seq(SKIP, If(Var("x"), CONTINUE, SKIP)))


def _syntactic_continue(c):
    # independent oracle: walk the tree, not entering loops
    if c == CONTINUE:
        return True
    if isinstance(c, Seq):
        return _syntactic_continue(c.first) or _syntactic_continue(c.second)
    if isinstance(c, If):
        return _syntactic_continue(c.then) or _syntactic_continue(c.els)
    return False


@given(commands(FP2, 10))
def test_has_toplevel_continue_matches_walk(c):
    assert has_toplevel_continue(c) == _syntactic_continue(c)


@given(commands(FP2, 6), commands(FP2, 6))
def test_loops_hide_continue(b, i):
    assert not has_toplevel_continue(For(b, i))


def test_enumerate_states_counts():
    fp = Footprint(("x",), 2)
    assert [s.as_dict() for s in enumerate_states(fp)] == [{"x": 0}, {"x": 1}]
    assert len(enumerate_states(Footprint(("x", "y"), 2))) == 4
    assert len(enumerate_states(Footprint(("x", "y", "z"), 4))) == 64


def test_footprint_invariants():
    with pytest.raises(ValueError):
        Footprint((), 8)
    with pytest.raises(ValueError):
        Footprint(("x", "x"), 8)
    with pytest.raises(ValueError):
        Footprint(("x",), 1)


def test_state_domain_is_footprint():
    with pytest.raises(KeyError):
        FP2.state(z=1)
    assert FP2.state(x=5).as_dict() == {"x": 1, "y": 0}


def test_generator_leaf_and_determinism():
    c = gen_random_command(1, 1, FP3)
    assert lang.command_size(c) == 1
    assert gen_random_command(7, 12, FP3) == gen_random_command(7, 12, FP3)


def test_generator_variety():
    kinds = Counter()
    for seed in range(1000):
        for sub in lang.subcommands(gen_random_command(seed, 12, FP3)):
            kinds[constructor_name(sub)] += 1
    assert len(kinds) >= 4
    assert set(kinds) == {"Skip", "Assign", "Seq", "If", "For", "Break", "Continue"}


def test_generator_respects_options():
    opts = lang.GenOptions(allow_continue=False, allow_loops=False)
    for seed in range(200):
        c = gen_random_command(seed, 10, FP2, opts)
        names = {constructor_name(s) for s in lang.subcommands(c)}
        assert "Continue" not in names and "For" not in names


@given(commands(FP3, 12))
def test_generated_assign_targets_in_footprint(c):
    assert lang.command_vars(c) <= set(FP3.vars)


def test_const_is_reduced():
    assert eval_expr(Const(3), FP2.state()) == 3
