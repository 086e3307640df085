"""Seeded property suites: semantics, oracles, rules, transformers, refinements,
simulations, big-step theorems and certificates.

Each suite returns a SuiteResult.  Instance i of suite s draws from its own
generator seeded with "seed:s:i", so results do not depend on order or on
how many other instances ran.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import lang
from .assertions import (FALSE, And, Cmp, Exists, Lit, LVar, Prog, cond_false, cond_true, conj,
                         disj, entails, inst)
from .bigstep import ERR, OOF, TERMINATED, Outcome, eval_big, refines_big, valid_big
from .extended import (conseq, conseq_pre, domain_membership, ex_finite, if_seq, inv_if,
                       inv_loop, inv_seq, loop_nocontinue, loop_unroll1, merge_disj, nocontinue,
                       seq_assoc, seq_assoc_inv)
from .gen import (annotate, loop_sets, post_sets, random_state_set, safe_states,
                  semantic_proof, set_formula)
from .lang import (SKIP, Assign, Const, Footprint, For, GenOptions, If, Seq, Var,
                   enumerate_states, gen_expr, gen_random_command, has_toplevel_continue, pretty)
from .proof import (RAssign, RBreak, RConseq, RContinue, RIf, RLoop, RSeq, RSkip, Triple, _compose,
                    check, conclusion)
from .simulation import (build_rel_dead, build_rel_ifseq, build_rel_loop_nocontinue,
                         check_simulation, ifseq_programs, lemma_guard_sim_check,
                         lemma_wp_sim_check, loop_nocontinue_programs, mutate, refines_small)
from .smallstep import (EXACT_DIVERGES, EXACT_STUCK, EXACT_TERMINAL, Config, Posts,
                        enumerate_continuations, run_exact, run_small, valid_wp)
from .verify import Spec, verify

N, B, C = lang.ExitKind.NORMAL, lang.ExitKind.BRK, lang.ExitKind.CON
DEFAULT_FP = Footprint(("x", "y", "z"), 8)
SMALL_FP = Footprint(("x", "y"), 4)
NO_CONTINUE = GenOptions(allow_continue=False)


@dataclass
class SuiteResult:
    suite: str
    checked: int = 0
    violations: list = field(default_factory=list)
    inconclusive: int = 0
    skipped: int = 0
    counts: dict = field(default_factory=dict)

    @property
    def ok(self):
        return not self.violations

    def __str__(self):
        s = (f"{self.suite}: {self.checked} checked, {len(self.violations)} violations, "
             f"{self.inconclusive} inconclusive")
        if self.skipped:
            s += f", {self.skipped} skipped"
        return s

    def bump(self, key, n=1):
        self.counts[key] = self.counts.get(key, 0) + n


def instance_rng(seed, suite, i):
    return random.Random(f"{seed}:{suite}:{i}")


# ---------------------------------------------------------------------------
# shrinking


def _shrink_candidates(c):
    """Smaller commands: children, skip, and one child shrunk in place."""
    kids = lang.children(c)
    for k in kids:
        yield k
    if c != SKIP:
        yield SKIP
    t = type(c)
    if t is Assign and type(c.expr) is not Const:
        yield Assign(c.name, Const(1))
    for i, k in enumerate(kids):
        for k2 in _shrink_candidates(k):
            if t is Seq:
                yield Seq(k2, c.second) if i == 0 else Seq(c.first, k2)
            elif t is If:
                yield If(c.cond, k2, c.els) if i == 0 else If(c.cond, c.then, k2)
            elif t is For:
                yield For(k2, c.incr) if i == 0 else For(c.body, k2)


def shrink_command(c, fails, budget=300):
    """Greedy shrinking: keep taking the first smaller command that still fails."""
    tries = 0
    improved = True
    while improved and tries < budget:
        improved = False
        for cand in _shrink_candidates(c):
            tries += 1
            if tries > budget:
                break
            if lang.command_size(cand) < lang.command_size(c) and fails(cand):
                c = cand
                improved = True
                break
    return c


def shrink_parts(parts, fails, budget=300):
    """Shrink each command in ``parts`` in turn while ``fails(*parts)`` holds."""
    parts = list(parts)
    for i in range(len(parts)):
        def one(c, i=i):
            return fails(*parts[:i], c, *parts[i + 1:])
        parts[i] = shrink_command(parts[i], one, budget)
    return parts


def shrink_state(states, fails):
    """The first state (in enumeration order) that still fails."""
    for st in sorted(states, key=lambda s: s.vals):
        if fails(st):
            return st
    return None


# ---------------------------------------------------------------------------
# semantics: big-step and small-step agree


def _small_outcome(c, st, fuel):
    kind, ek, out = run_exact(c, (), st, fuel)
    if kind == EXACT_TERMINAL:
        return Outcome(TERMINATED, ek, out)
    if kind == EXACT_STUCK:
        return ERR
    if kind == EXACT_DIVERGES:
        return "diverges"
    return OOF


def _big_outcome(c, st, fuel, max_fuel):
    o = eval_big(c, st, fuel)
    while o == OOF and fuel < max_fuel:
        fuel *= 8
        o = eval_big(c, st, fuel)
    return o


def semantics_disagree(c, st, fuel=10000, big_fuel=400):
    """None when big-step and small-step agree on (c, st); otherwise a message."""
    s = _small_outcome(c, st, fuel)
    if s == OOF:
        return None
    if s == "diverges":
        b = eval_big(c, st, big_fuel)
        return None if b == OOF else f"small-step diverges, big-step gives {b}"
    b = _big_outcome(c, st, big_fuel, fuel * 8)
    if b == OOF:
        return f"small-step gives {s}, big-step ran out of fuel"
    if b != s:
        return f"big-step {b}, small-step {s}"
    plain = run_small(Config(c, (), st), fuel)
    if plain != s:
        return f"fuel-bounded small-step {plain}, exact run {s}"
    return None


def suite_semantics(count=1000, seed=0, fp=None, size=12, fuel=10000):
    fp = fp or Footprint(("x", "y", "z"), 4)
    res = SuiteResult("semantics")
    states = enumerate_states(fp)
    for i in range(count):
        rng = instance_rng(seed, "semantics", i)
        c = gen_random_command(rng, rng.randint(1, size), fp)
        for st in states:
            res.checked += 1
            msg = semantics_disagree(c, st, fuel)
            if msg is None:
                continue

            def fails(cmd):
                return any(semantics_disagree(cmd, s, fuel) for s in states)
            small = shrink_command(c, fails)
            bad = shrink_state(states, lambda s: semantics_disagree(small, s, fuel) is not None)
            res.violations.append(f"{pretty(small)} from {bad!r}: "
                                  f"{semantics_disagree(small, bad, fuel)} (seed {seed}, #{i})")
            break
    return res


# ---------------------------------------------------------------------------
# oracles: big-step validity and WP validity agree


def random_triple(rng, fp, size=8):
    c = gen_random_command(rng, rng.randint(1, size), fp)
    pre_set = random_state_set(rng, fp)
    if rng.random() < 0.6:
        # posts near the strongest postcondition, so valid triples show up
        safe = set(safe_states(c, fp))
        if rng.random() < 0.7:
            pre_set &= safe
        sets, _ = post_sets(c, pre_set & safe)
        posts = []
        for k in (N, B, C):
            s = set(sets[k])
            if rng.random() < 0.4:
                s |= random_state_set(rng, fp, min_size=0)
            if s and rng.random() < 0.2:
                s.discard(rng.choice(sorted(s, key=lambda x: x.vals)))
            posts.append(set_formula(s, fp))
    else:
        posts = [set_formula(random_state_set(rng, fp, min_size=0), fp) for _ in range(3)]
    return Triple(set_formula(pre_set, fp), c, *posts)


def suite_oracles(count=200, seed=0, fp=None, fuel=3000):
    fp = fp or SMALL_FP
    res = SuiteResult("oracles")
    for i in range(count):
        rng = instance_rng(seed, "oracles", i)
        t = random_triple(rng, fp)
        vb, vw = valid_big(t, fp, fuel), valid_wp(t, fp, fuel)
        if not (vb.conclusive and vw.conclusive):
            res.inconclusive += 1
            continue
        res.checked += 1
        res.bump("valid" if vw.ok else "invalid")
        if vb.ok != vw.ok:
            def fails(c):
                t2 = Triple(t.pre, c, *t.posts)
                a, b = valid_big(t2, fp, fuel), valid_wp(t2, fp, fuel)
                return a.conclusive and b.conclusive and a.ok != b.ok
            t = Triple(t.pre, shrink_command(t.cmd, fails), *t.posts)
            vb, vw = valid_big(t, fp, fuel), valid_wp(t, fp, fuel)
            res.violations.append(f"{t}: big {vb}, wp {vw} (seed {seed}, #{i})")
    return res


# ---------------------------------------------------------------------------
# primary rules: valid premises give valid conclusions


def _valid(t, fp, fuel):
    """Premise validity: exact WP validity, and big-step does not refute it."""
    return valid_wp(t, fp, fuel).ok and not valid_big(t, fp, fuel).refuted


def _widen(rng, s, fp, p=0.5):
    s = set(s)
    if rng.random() < p:
        s |= random_state_set(rng, fp, min_size=0)
    return s


def _small_cmd(rng, fp, size=5, opts=None):
    return gen_random_command(rng, rng.randint(1, size), fp, opts)


def rule_instance(rule, rng, fp, fuel=3000):
    """(node, premises, side conditions) with premises valid, or None."""
    F = lambda s: set_formula(s, fp)   # noqa: E731
    universe = enumerate_states(fp)
    if rule in ("skip", "break", "continue"):
        node = {"skip": RSkip, "break": RBreak, "continue": RContinue}[rule](
            F(random_state_set(rng, fp, min_size=0)))
        return node, [], []
    if rule == "assign":
        x = rng.choice(fp.vars)
        e = gen_expr(rng, fp, 2)
        return RAssign(x, e, F(random_state_set(rng, fp, min_size=0))), [], []
    if rule == "seq":
        c1, c2 = _small_cmd(rng, fp), _small_cmd(rng, fp)
        S = random_state_set(rng, fp) & set(safe_states(Seq(c1, c2), fp)) \
            if rng.random() < 0.8 else random_state_set(rng, fp)
        s1, _ = post_sets(c1, S)
        mid = _widen(rng, s1[N], fp, 0.3)
        s2, _ = post_sets(c2, mid)
        rb = F(_widen(rng, s1[B] | s2[B], fp))
        rc = F(_widen(rng, s1[C] | s2[C], fp))
        prem = [Triple(F(S), c1, F(mid), rb, rc),
                Triple(F(mid), c2, F(_widen(rng, s2[N], fp)), rb, rc)]
        return RSeq(F(mid), None, None), prem, []
    if rule == "if":
        e = gen_expr(rng, fp, 2, cond=True)
        c1, c2 = _small_cmd(rng, fp), _small_cmd(rng, fp)
        S = random_state_set(rng, fp)
        if rng.random() < 0.8:
            S &= set(safe_states(If(e, c1, c2), fp))
        p = F(S)
        st = {s for s in S if lang.try_eval(e, s) not in (None, 0)}
        sf = {s for s in S if lang.try_eval(e, s) == 0}
        a, _ = post_sets(c1, st)
        b, _ = post_sets(c2, sf)
        q = [F(_widen(rng, a[k] | b[k], fp)) for k in (N, B, C)]
        prem = [Triple(And(p, cond_true(e)), c1, *q), Triple(And(p, cond_false(e)), c2, *q)]
        return RIf(e, None, None), prem, []
    if rule == "loop":
        c1, c2 = _small_cmd(rng, fp, 4), _small_cmd(rng, fp, 3)
        S = random_state_set(rng, fp)
        if rng.random() < 0.8:
            S &= set(safe_states(For(c1, c2), fp))
        heads, mids = loop_sets(For(c1, c2), S)
        heads = _widen(rng, heads, fp, 0.2)
        bs, _ = post_sets(c1, heads)
        mids = _widen(rng, mids | bs[N] | bs[C], fp, 0.2)
        cs, _ = post_sets(c2, mids)
        q = F(_widen(rng, bs[B] | cs[B], fp))
        i1, i2 = F(heads), F(mids)
        prem = [Triple(i1, c1, i2, q, i2), Triple(i2, c2, i1, q, FALSE)]
        return RLoop(i1, i2, None, None), prem, []
    if rule == "conseq":
        c = _small_cmd(rng, fp)
        S = random_state_set(rng, fp, safe_states(c, fp))
        sets, _ = post_sets(c, S)
        prem = Triple(F(S), c, *(F(sets[k]) for k in (N, B, C)))
        narrower = random_state_set(rng, fp, S, min_size=0) if S else set()
        pre = F(narrower if rng.random() < 0.7 else random_state_set(rng, fp, universe))
        posts = [F(_widen(rng, sets[k], fp)) for k in (N, B, C)]
        node = RConseq(None, pre, *posts)
        side = [(pre, prem.pre)] + list(zip(prem.posts, posts))
        return node, [prem], side
    raise ValueError(f"unknown rule {rule!r}")


RULE_NAMES = ("skip", "break", "continue", "assign", "seq", "if", "loop", "conseq")


def suite_rules(count=100, seed=0, fp=None, fuel=3000, tries=40):
    """``count`` instances per rule."""
    fp = fp or SMALL_FP
    res = SuiteResult("rules")
    for rule in RULE_NAMES:
        for i in range(count):
            rng = instance_rng(seed, f"rules/{rule}", i)
            for _ in range(tries):
                node, prem, side = rule_instance(rule, rng, fp, fuel)
                if all(_valid(p, fp, fuel) for p in prem) and \
                        all(entails(p, q, fp).ok for p, q in side):
                    break
            else:
                res.skipped += 1
                continue
            concl = _compose(node, prem, "root")
            res.checked += 1
            res.bump(rule)
            vw, vb = valid_wp(concl, fp, fuel), valid_big(concl, fp, fuel)
            if not vw.ok or vb.refuted:
                res.violations.append(f"{rule}: premises {[str(p) for p in prem]} give "
                                      f"{concl}: wp {vw}, big {vb} (seed {seed}, #{i})")
    return res


# ---------------------------------------------------------------------------
# extended rules as transformers


def _proof_of(rng, fp, make_cmd, opts=None, tries=60, weaken=0.3):
    """A command from ``make_cmd(rng)`` and a checked proof of it from safe states."""
    for _ in range(tries):
        c = make_cmd(rng)
        if c is None:
            continue
        ok = safe_states(c, fp)
        if not ok:
            continue
        S = random_state_set(rng, fp, ok)
        t = semantic_proof(c, S, fp, rng, slack=0.4)
        if rng.random() < weaken:
            cc = conclusion(t)
            posts = [disj(p, set_formula(random_state_set(rng, fp, min_size=0), fp))
                     if rng.random() < 0.5 else p for p in cc.posts]
            t = conseq(t, None, *posts)
        return c, S, t
    return None


def _cmd(rng, fp, size=4, opts=None):
    return gen_random_command(rng, rng.randint(1, size), fp, opts)


def _seq_cmd(rng, fp):
    return Seq(_cmd(rng, fp), _cmd(rng, fp))


def _loop_cmd(rng, fp):
    return For(_cmd(rng, fp), _cmd(rng, fp, 3))


def _if_cmd(rng, fp):
    return If(gen_expr(rng, fp, 2, cond=True), _cmd(rng, fp), _cmd(rng, fp))


def _tx_inv_seq(rng, fp):
    got = _proof_of(rng, fp, lambda r: _seq_cmd(r, fp))
    if not got:
        return None
    c, _, t = got
    cc = conclusion(t)
    s = inv_seq(t)
    expect = [(s.left, Triple(cc.pre, c.first, s.mid, cc.post_brk, cc.post_con)),
              (s.right, Triple(s.mid, c.second, cc.post, cc.post_brk, cc.post_con))]
    recomposed = conseq(RSeq(s.mid, s.left, s.right), cc.pre, *cc.posts)
    return t, expect + [(recomposed, cc)]


def _tx_inv_loop(rng, fp):
    got = _proof_of(rng, fp, lambda r: _loop_cmd(r, fp))
    if not got:
        return None
    c, _, t = got
    cc = conclusion(t)
    ls = inv_loop(t)
    expect = [(ls.body, Triple(ls.i1, c.body, ls.i2, cc.post, ls.i2)),
              (ls.incr, Triple(ls.i2, c.incr, ls.i1, cc.post, FALSE))]
    return t, expect, [ls.entry]


def _tx_inv_if(rng, fp):
    got = _proof_of(rng, fp, lambda r: _if_cmd(r, fp))
    if not got:
        return None
    c, _, t = got
    cc = conclusion(t)
    a, b = inv_if(t)
    return t, [(a, Triple(And(cc.pre, cond_true(c.cond)), c.then, *cc.posts)),
               (b, Triple(And(cc.pre, cond_false(c.cond)), c.els, *cc.posts))]


def _tx_merge_disj(rng, fp):
    for _ in range(40):
        c = _cmd(rng, fp, 6)
        ok = safe_states(c, fp)
        if len(ok) >= 1:
            break
    else:
        return None
    t1 = semantic_proof(c, random_state_set(rng, fp, ok), fp, rng, slack=0.4)
    t2 = semantic_proof(c, random_state_set(rng, fp, ok), fp, rng, slack=0.4)
    a, b = conclusion(t1), conclusion(t2)
    out = merge_disj(t1, t2)
    return None, [(out, Triple(disj(a.pre, b.pre), c, disj(a.post, b.post),
                               disj(a.post_brk, b.post_brk), disj(a.post_con, b.post_con)))]


def _tx_ex_finite(rng, fp):
    for _ in range(40):
        c = _cmd(rng, fp, 6)
        ok = safe_states(c, fp)
        if ok:
            break
    else:
        return None
    x = rng.choice(fp.vars)
    S = random_state_set(rng, fp, ok)
    body = And(Cmp("=", Prog(Var(x)), LVar("v")), set_formula(S, fp))
    dom = sorted(rng.sample(range(fp.modulus), rng.randint(1, fp.modulus)))
    parts = {d: {s for s in S if s[x] == d} for d in dom}
    union = set().union(*parts.values())
    sets, _ = post_sets(c, union)
    posts = [set_formula(sets[k], fp) for k in (N, B, C)]
    family = {}
    for d, part in parts.items():
        t = semantic_proof(c, part, fp, rng, slack=0.3)
        family[d] = conseq(t, inst(body, "v", Lit(d)), *posts)
    out = ex_finite("v", body, family, fp.modulus)
    pre = Exists("v", conj(domain_membership("v", dom, fp.modulus), body))
    return None, [(out, Triple(pre, c, *posts))]


def _tx_nocontinue(rng, fp):
    got = _proof_of(rng, fp, lambda r: _cmd(r, fp, 6, NO_CONTINUE)
                    if r.random() < 0.5 else _cmd(r, fp, 6))
    if not got:
        return None
    c, _, t = got
    if has_toplevel_continue(c):
        return None
    cc = conclusion(t)
    rc = set_formula(random_state_set(rng, fp, min_size=0), fp)
    return t, [(nocontinue(t, rc), Triple(cc.pre, c, cc.post, cc.post_brk, rc))]


def _tx_if_seq(rng, fp):
    def make(r):
        c3 = _cmd(r, fp, 3)
        return If(gen_expr(r, fp, 2, cond=True), Seq(_cmd(r, fp, 3), c3), Seq(_cmd(r, fp, 3), c3))
    got = _proof_of(rng, fp, make)
    if not got:
        return None
    c, _, t = got
    cc = conclusion(t)
    target = Seq(If(c.cond, c.then.first, c.els.first), c.then.second)
    return t, [(if_seq(t), Triple(cc.pre, target, *cc.posts))]


def _tx_loop_nocontinue(rng, fp):
    def make(r):
        return For(Seq(_cmd(r, fp, 4, NO_CONTINUE), _cmd(r, fp, 3, NO_CONTINUE)), SKIP)
    got = _proof_of(rng, fp, make)
    if not got:
        return None
    c, _, t = got
    cc = conclusion(t)
    target = For(c.body.first, c.body.second)
    return t, [(loop_nocontinue(t), Triple(cc.pre, target, *cc.posts))]


def _tx_loop_unroll1(rng, fp):
    F = lambda s: set_formula(s, fp)   # noqa: E731
    for _ in range(60):
        c1 = _cmd(rng, fp, 4)
        c2 = _cmd(rng, fp, 3, NO_CONTINUE if rng.random() < 0.7 else None)
        loop = For(c1, c2)
        ok = safe_states(loop, fp)
        if ok:
            break
    else:
        return None
    S = random_state_set(rng, fp, ok)
    s1, _ = post_sets(c1, S)
    p1 = s1[N] | s1[C]
    s2, _ = post_sets(c2, p1)
    p2 = s2[N]
    rb = s1[B] | s2[B]
    ls, _ = post_sets(loop, p2)
    q = ls[N] | rb
    t1 = conseq(semantic_proof(c1, S, fp, rng, 0.3), F(S), F(p1), F(rb), F(p1))
    t2 = conseq(semantic_proof(c2, p1, fp, rng, 0.3), F(p1), F(p2), F(rb), F(s2[C]))
    t3 = conseq(semantic_proof(loop, p2, fp, rng, 0.3), F(p2), F(q), FALSE, FALSE)
    out = loop_unroll1(t1, t2, t3, fp)
    return None, [(out, Triple(F(S), loop, F(q), FALSE, FALSE))]


def _tx_seq_assoc(rng, fp):
    got = _proof_of(rng, fp, lambda r: Seq(Seq(_cmd(r, fp, 3), _cmd(r, fp, 3)), _cmd(r, fp, 3)))
    if not got:
        return None
    c, _, t = got
    cc = conclusion(t)
    a, b, d = c.first.first, c.first.second, c.second
    out = seq_assoc(t)
    back = seq_assoc_inv(out)
    return t, [(out, Triple(cc.pre, Seq(a, Seq(b, d)), *cc.posts)), (back, cc)]


def _tx_conseq_pre(rng, fp):
    got = _proof_of(rng, fp, lambda r: _cmd(r, fp, 6))
    if not got:
        return None
    c, S, t = got
    cc = conclusion(t)
    p = set_formula(random_state_set(rng, fp, S, min_size=0), fp)
    return t, [(conseq_pre(t, p, fp), Triple(p, c, *cc.posts))]


TRANSFORMERS = {
    "inv_seq": _tx_inv_seq, "inv_loop": _tx_inv_loop, "inv_if": _tx_inv_if,
    "merge_disj": _tx_merge_disj, "ex_finite": _tx_ex_finite, "nocontinue": _tx_nocontinue,
    "if_seq": _tx_if_seq, "loop_nocontinue": _tx_loop_nocontinue,
    "loop_unroll1": _tx_loop_unroll1, "seq_assoc": _tx_seq_assoc, "conseq_pre": _tx_conseq_pre,
}


def suite_transformers(count=50, seed=0, fp=None, fuel=3000, names=None):
    """``count`` instances per transformer."""
    fp = fp or SMALL_FP
    res = SuiteResult("transformers")
    for name in names or TRANSFORMERS:
        make = TRANSFORMERS[name]
        done = i = 0
        while done < count and i < count * 4:
            rng = instance_rng(seed, f"transformers/{name}", i)
            i += 1
            got = make(rng, fp)
            if got is None:
                continue
            done += 1
            res.checked += 1
            res.bump(name)
            src, outputs = got[0], got[1]
            entail = got[2] if len(got) > 2 else []
            if src is not None and not check(src, fp).ok:
                res.violations.append(f"{name}: generated premise proof does not check")
                continue
            for tree, want in outputs:
                rep = check(tree, fp)
                msg = None
                if not rep.ok:
                    msg = f"output does not check: {rep}"
                elif rep.triple != want:
                    msg = f"concludes {rep.triple}, expected {want}"
                else:
                    vw, vb = valid_wp(want, fp, fuel), valid_big(want, fp, fuel)
                    if not vw.ok or vb.refuted:
                        msg = f"conclusion {want} not valid: wp {vw}, big {vb}"
                if msg:
                    res.violations.append(f"{name}: {msg} (seed {seed}, #{i - 1})")
                    break
            for p, q in entail:
                if not entails(p, q, fp).ok:
                    res.violations.append(f"{name}: entry entailment fails (seed {seed}, #{i - 1})")
        if done < count:
            res.skipped += count - done
    return res


# ---------------------------------------------------------------------------
# refinements


def ifseq_instance(rng, fp, size=4):
    e = gen_expr(rng, fp, 2, cond=True)
    return e, _cmd(rng, fp, size), _cmd(rng, fp, size), _cmd(rng, fp, size)


def loop_nc_instance(rng, fp, size=4):
    return _cmd(rng, fp, size, NO_CONTINUE), _cmd(rng, fp, size - 1, NO_CONTINUE)


def suite_refinements(count=100, seed=0, fp=None, fuel=2000):
    fp = fp or SMALL_FP
    res = SuiteResult("refinements")
    for kind in ("if_seq", "loop_nocontinue"):
        for i in range(count):
            rng = instance_rng(seed, f"refinements/{kind}", i)
            if kind == "if_seq":
                e, *parts = ifseq_instance(rng, fp)
                programs = lambda *ps, e=e: ifseq_programs(e, *ps)   # noqa: E731
            else:
                parts = list(loop_nc_instance(rng, fp))
                programs = loop_nocontinue_programs
            for name, oracle in (("big", refines_big), ("small", refines_small)):
                v = oracle(*programs(*parts), fp, fuel)
                res.checked += 1
                res.bump(f"{kind}/{name}")
                if not v.conclusive:
                    res.inconclusive += 1
                if v.refuted:
                    small = shrink_parts(
                        parts, lambda *ps: oracle(*programs(*ps), fp, fuel).refuted)
                    lhs, rhs = programs(*small)
                    v = oracle(lhs, rhs, fp, fuel)
                    res.violations.append(f"{kind} {name}: {pretty(lhs)} vs {pretty(rhs)}: {v} "
                                          f"(seed {seed}, #{i})")
    return res


# ---------------------------------------------------------------------------
# simulations and the lifting lemmas


def suite_simulation(count=20, seed=0, fp=None, fuel=2000, choices=10):
    fp = fp or Footprint(("x", "y"), 3)
    res = SuiteResult("simulation")
    for kind in ("if_seq", "loop_nocontinue", "dead"):
        for i in range(count):
            rng = instance_rng(seed, f"simulation/{kind}", i)
            if kind == "if_seq":
                rel = build_rel_ifseq(*ifseq_instance(rng, fp, 3), fp)
            elif kind == "loop_nocontinue":
                rel = build_rel_loop_nocontinue(*loop_nc_instance(rng, fp, 4), fp)
            else:
                ks = enumerate_continuations(fp, 2, 3)
                rel = build_rel_dead(rng.choice(ks), fp)
            guard_mode = kind == "dead"
            res.checked += 1
            res.bump(kind)
            rep = check_simulation(rel, fp, fuel, guard_mode=guard_mode)
            if not rep.ok:
                res.violations.append(f"{kind} table is not a simulation: {rep.violations[0]}")
                continue
            for _ in range(choices):
                if not guard_mode:
                    posts = Posts(*(set_formula(random_state_set(rng, fp, min_size=0), fp)
                                    for _ in range(3)))
                    v = lemma_wp_sim_check(rel, posts, fp, fuel)
                    if v.refuted:
                        res.violations.append(f"{kind}: wp lemma refuted: {v}")
                pre = set_formula(random_state_set(rng, fp, min_size=0), fp)
                v = lemma_guard_sim_check(rel, pre, fp, fuel)
                if v.refuted:
                    res.violations.append(f"{kind}: guard lemma refuted: {v}")
            bad, victim = mutate(rel, rng, fp, fuel)
            if check_simulation(bad, fp, fuel, guard_mode=guard_mode).ok:
                res.violations.append(f"{kind}: mutation of {victim} went undetected")
    return res


# ---------------------------------------------------------------------------
# big-step if-seq and nocontinue theorems


def _near_posts(rng, c, S, fp):
    sets, _ = post_sets(c, S)
    return [set_formula(_widen(rng, sets[k], fp, 0.3), fp) for k in (N, B, C)]


def _theorem_instance(kind, rng, fp):
    """(parts, build) where build(*parts) gives the (premise, conclusion) triples."""
    if kind == "if_seq":
        e, *parts = ifseq_instance(rng, fp)
        rhs = ifseq_programs(e, *parts)[1]
        pool = safe_states(rhs, fp) if rng.random() < 0.8 else enumerate_states(fp)
        S = random_state_set(rng, fp, pool or enumerate_states(fp))
        pre = set_formula(S, fp)
        posts = _near_posts(rng, rhs, S & set(pool), fp)

        def build(*ps):
            lhs, rhs = ifseq_programs(e, *ps)
            return Triple(pre, rhs, *posts), Triple(pre, lhs, *posts)
        return parts, build
    # continue may occur inside nested loops, never at top level
    c = _cmd(rng, fp, 6)
    while has_toplevel_continue(c):
        c = _cmd(rng, fp, 6)
    pool = safe_states(c, fp) or enumerate_states(fp)
    S = random_state_set(rng, fp, pool)
    pre = set_formula(S, fp)
    posts = _near_posts(rng, c, S, fp)
    rc = set_formula(random_state_set(rng, fp, min_size=0), fp)

    def build(c):
        return Triple(pre, c, *posts), Triple(pre, c, posts[0], posts[1], rc)
    return [c], build


def suite_theorems(count=200, seed=0, fp=None, fuel=2000):
    """Big-step if-seq and nocontinue theorems as oracle implications."""
    fp = fp or SMALL_FP
    res = SuiteResult("theorems")

    def broken(build, *parts):
        if any(has_toplevel_continue(p) for p in parts) and len(parts) == 1:
            return False
        prem, concl = build(*parts)
        return valid_big(prem, fp, fuel).ok and valid_big(concl, fp, fuel).refuted

    for kind in ("if_seq", "nocontinue"):
        for i in range(count):
            rng = instance_rng(seed, f"theorems/{kind}", i)
            parts, build = _theorem_instance(kind, rng, fp)
            prem, concl = build(*parts)
            res.checked += 1
            if not valid_big(prem, fp, fuel).ok:
                res.bump(f"{kind}/vacuous")
                continue
            res.bump(f"{kind}/premise valid")
            vc = valid_big(concl, fp, fuel)
            if vc.refuted:
                small = shrink_parts(parts, lambda *ps: broken(build, *ps))
                prem, concl = build(*small)
                res.violations.append(f"{kind}: {prem} valid but {concl}: "
                                      f"{valid_big(concl, fp, fuel)} (seed {seed}, #{i})")
            elif not vc.conclusive:
                res.inconclusive += 1
    return res


# ---------------------------------------------------------------------------
# certificates from symbolic execution


def certificate_instance(rng, fp, size=8):
    for _ in range(60):
        c = gen_random_command(rng, rng.randint(1, size), fp)
        ok = safe_states(c, fp)
        if ok:
            break
    else:
        return None
    S = random_state_set(rng, fp, ok)
    ac = annotate(c, S, fp, rng, drop_incr=0.4)
    sets, _ = post_sets(c, S)
    spec = Spec(set_formula(S, fp), *(set_formula(sets[k], fp) for k in (N, B, C)))
    return c, ac, spec


def suite_certificates(count=100, seed=0, fp=None, fuel=3000):
    fp = fp or SMALL_FP
    res = SuiteResult("certificates")
    for i in range(count):
        rng = instance_rng(seed, "certificates", i)
        got = certificate_instance(rng, fp)
        if got is None:
            res.skipped += 1
            continue
        c, ac, spec = got
        flags = rng.choice([(None, None), (True, True), (False, False)])
        r = verify(ac, spec, fp, *flags)
        res.checked += 1
        if not r.ok or r.certificate is None:
            why = r.errors or [str(f) for f in r.failures[:2]]
            res.violations.append(f"{pretty(c)}: verification failed: {why} (seed {seed}, #{i})")
            continue
        res.bump("transformed" if r.transforms else "plain")
        rep = r.certificate.check()
        concl = rep.triple
        if not rep.ok or concl.cmd != c:
            res.violations.append(f"{pretty(c)}: certificate does not re-check: {rep}")
            continue
        vb = valid_big(concl, fp, fuel)
        if vb.refuted:
            res.violations.append(f"{pretty(c)}: certified triple refuted: {vb}")
    return res


SUITES = {
    "semantics": suite_semantics, "oracles": suite_oracles, "rules": suite_rules,
    "transformers": suite_transformers, "refinements": suite_refinements,
    "simulation": suite_simulation, "theorems": suite_theorems,
    "certificates": suite_certificates,
}


def run_suite(name, count=None, seed=0, **kw):
    fn = SUITES[name]
    if count is None:
        return fn(seed=seed, **kw)
    return fn(count, seed, **kw)


__all__ = ["SuiteResult", "SUITES", "run_suite", "shrink_command", "shrink_state",
           "semantics_disagree", "random_triple", "rule_instance", "RULE_NAMES", "TRANSFORMERS",
           "certificate_instance"] + [f"suite_{k}" for k in SUITES]
