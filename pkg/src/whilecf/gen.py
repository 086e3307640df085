"""Random instances: state sets, assertions and semantically built proof trees.

The proof builder works from exact reachable-state sets, so every tree it
returns checks by construction (the checker still verifies that).  It is
the source of "valid premise proofs" for the transformer and rule suites.
"""
from __future__ import annotations

import random

from . import lang
from .assertions import (FALSE, TRUE, And, Arith, Cmp, Exists, Forall, Implies, Lit, LVar, Not,
                         Or, Prog, RELS, cond_false, cond_true, states_formula)
from .lang import (Assign, Break, Continue, ExitKind, For, If, Seq, Skip, enumerate_states,
                   eval_expr)
from .proof import RAssign, RBreak, RContinue, RIf, RLoop, RSeq, RSkip
from .extended import conseq
from .smallstep import EXACT_DIVERGES, EXACT_TERMINAL, run_exact
from .verify import ForAnn

N, B, C = ExitKind.NORMAL, ExitKind.BRK, ExitKind.CON
EXACT_FUEL_LIMIT = 200_000


def set_formula(states, fp):
    """A deterministic assertion denoting exactly ``states``."""
    states = frozenset(states)
    total = fp.size
    if not states:
        return FALSE
    if len(states) == total:
        return TRUE
    if len(states) * 2 > total:
        rest = set(enumerate_states(fp)) - states
        return Not(states_formula(rest))
    return states_formula(states)


def outcome(c, st):
    """(exit, state) on termination, None on divergence, "stuck" on error."""
    kind, ek, out = run_exact(c, (), st, EXACT_FUEL_LIMIT)
    if kind == EXACT_TERMINAL:
        return (ek, out)
    if kind == EXACT_DIVERGES:
        return None
    if kind == "fuel":
        raise RuntimeError(f"exact run did not settle for {lang.pretty(c)!r}")
    return "stuck"


def post_sets(c, states):
    """Exit-indexed result sets, and the set of states that get stuck."""
    out = {N: set(), B: set(), C: set()}
    bad = set()
    for st in states:
        r = outcome(c, st)
        if r is None:
            continue
        if r == "stuck":
            bad.add(st)
        else:
            out[r[0]].add(r[1])
    return out, bad


def safe_states(c, fp):
    _, bad = post_sets(c, enumerate_states(fp))
    return [s for s in enumerate_states(fp) if s not in bad]


class ProofBuilder:
    """Build {F(S)} c {F(N), [F(B), F(C)]} for a set S of states safe for c.

    With ``slack`` > 0 some nodes are proved from a larger state set and
    then narrowed by consequence, which varies the tree shapes.
    """

    def __init__(self, fp, rng=None, slack=0.0):
        self.fp = fp
        self.rng = rng or random.Random(0)
        self.slack = slack
        self.universe = enumerate_states(fp)

    def F(self, states):
        return set_formula(states, self.fp)

    def posts(self, sets):
        return self.F(sets[N]), self.F(sets[B]), self.F(sets[C])

    def prove(self, c, states):
        states = frozenset(states)
        sets, bad = post_sets(c, states)
        if bad:
            raise ValueError(f"{sorted(bad, key=lambda s: s.vals)[0]!r} is unsafe for "
                             f"{lang.pretty(c)!r}")
        if self.slack and self.rng.random() < self.slack:
            bigger = states | self._harmless_extra(c, states, sets)
            if bigger != states:
                t = self._prove(c, bigger, sets)
                return conseq(t, pre=self.F(states))
        return self._prove(c, states, sets)

    def _harmless_extra(self, c, states, sets):
        cands = [s for s in self.universe if s not in states]
        self.rng.shuffle(cands)
        extra = set()
        for s in cands[:6]:
            r = outcome(c, s)
            if r == "stuck":
                continue
            if r is None or r[1] in sets[r[0]]:
                extra.add(s)
        return extra

    def _prove(self, c, S, sets):
        F = self.F
        t = type(c)
        pre = F(S)
        if t is Skip:
            return RSkip(pre)
        if t is Break:
            return RBreak(pre)
        if t is Continue:
            return RContinue(pre)
        if t is Assign:
            node = RAssign(c.name, c.expr, F(sets[N]))
            return conseq(node, pre=pre)
        q, rb, rc = self.posts(sets)
        if t is Seq:
            s1, _ = post_sets(c.first, S)
            left = conseq(self.prove(c.first, S), post_brk=rb, post_con=rc)
            right = conseq(self.prove(c.second, s1[N]), post_brk=rb, post_con=rc)
            return RSeq(F(s1[N]), left, right)
        if t is If:
            st = {s for s in S if eval_expr(c.cond, s)}
            sf = S - st
            a = conseq(self.prove(c.then, st), And(pre, cond_true(c.cond)), q, rb, rc)
            b = conseq(self.prove(c.els, sf), And(pre, cond_false(c.cond)), q, rb, rc)
            return conseq(RIf(c.cond, a, b), pre=pre)
        if t is For:
            heads, mids = loop_sets(c, S)
            bs, _ = post_sets(c.body, heads)
            cs, _ = post_sets(c.incr, mids)
            exits = bs[B] | cs[B]
            h, i, qb = F(heads), F(mids), F(exits)
            body = conseq(self.prove(c.body, heads), h, i, qb, i)
            incr = conseq(self.prove(c.incr, mids), i, h, qb, FALSE)
            return conseq(RLoop(h, i, body, incr), pre=pre)
        raise TypeError(f"not a command: {c!r}")


def loop_sets(c, states):
    """Exact loop-head and pre-increment state sets for For(c.body, c.incr) from states."""
    heads = set(states)
    while True:
        bs, _ = post_sets(c.body, heads)
        mids = bs[N] | bs[C]
        cs, _ = post_sets(c.incr, mids)
        new = set(states) | cs[N]
        if new == heads:
            return heads, mids
        heads = new


def annotate(c, states, fp, rng=None, drop_incr=0.0):
    """Annotate every loop with its exact invariants (states must be safe for c).

    With probability ``drop_incr`` a loop keeps only its body invariant.
    """
    t = type(c)
    if t is Seq:
        s1, _ = post_sets(c.first, states)
        return Seq(annotate(c.first, states, fp, rng, drop_incr),
                   annotate(c.second, s1[N], fp, rng, drop_incr))
    if t is If:
        st = {s for s in states if eval_expr(c.cond, s)}
        return If(c.cond, annotate(c.then, st, fp, rng, drop_incr),
                  annotate(c.els, set(states) - st, fp, rng, drop_incr))
    if t is For:
        heads, mids = loop_sets(c, states)
        body = annotate(c.body, heads, fp, rng, drop_incr)
        incr = annotate(c.incr, mids, fp, rng, drop_incr)
        keep = not (rng and rng.random() < drop_incr)
        return ForAnn(body, incr, set_formula(heads, fp),
                      set_formula(mids, fp) if keep else None)
    return c


def semantic_proof(c, states, fp, rng=None, slack=0.0):
    return ProofBuilder(fp, rng, slack).prove(c, states)


def random_state_set(rng, fp, pool=None, min_size=1):
    pool = list(pool if pool is not None else enumerate_states(fp))
    if not pool:
        return set()
    k = rng.randint(min(min_size, len(pool)), len(pool))
    return set(rng.sample(pool, k))


def gen_term(rng, fp, lvars=(), depth=1):
    r = rng.random()
    if depth <= 0 or r < 0.5:
        pick = rng.random()
        if lvars and pick < 0.35:
            return LVar(rng.choice(lvars))
        if pick < 0.6:
            return Lit(rng.randrange(fp.modulus))
        return Prog(lang.gen_expr(rng, fp, 1))
    op = rng.choice(("+", "-", "*", "/", "%"))
    return Arith(op, (gen_term(rng, fp, lvars, depth - 1), gen_term(rng, fp, lvars, depth - 1)))


def gen_assertion(rng, fp, depth=3, lvars=(), fresh=("n", "k")):
    """A random assertion whose free logic variables are among ``lvars``."""
    if depth <= 0 or rng.random() < 0.25:
        if rng.random() < 0.1:
            return rng.choice((TRUE, FALSE))
        return Cmp(rng.choice(RELS), gen_term(rng, fp, lvars), gen_term(rng, fp, lvars))
    k = rng.randrange(6)
    if k == 0:
        return Not(gen_assertion(rng, fp, depth - 1, lvars, fresh))
    if k in (1, 2, 3):
        ctor = (And, Or, Implies)[k - 1]
        return ctor(gen_assertion(rng, fp, depth - 1, lvars, fresh),
                    gen_assertion(rng, fp, depth - 1, lvars, fresh))
    v = rng.choice(fresh)
    ctor = Exists if k == 4 else Forall
    return ctor(v, gen_assertion(rng, fp, depth - 1, tuple(set(lvars) | {v}), fresh))


def random_safe_instance(rng, fp, size, opts=None, tries=50):
    """A command and a nonempty set of initial states on which it is safe."""
    for _ in range(tries):
        c = lang.gen_random_command(rng, rng.randint(1, size), fp, opts)
        ok = safe_states(c, fp)
        if ok:
            return c, random_state_set(rng, fp, ok)
    raise RuntimeError("could not find a command with safe states")


__all__ = ["gen_term", "gen_assertion", "loop_sets", "annotate", "set_formula", "outcome", "post_sets", "safe_states", "ProofBuilder",
           "semantic_proof", "random_state_set", "random_safe_instance"]
