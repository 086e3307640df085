"""Extended rules as proof-tree transformers.

Every transformer takes checked trees and returns a tree whose conclusion is
the rule's conclusion.  The inversions push consequence layers into the
premises; the rest are assembled from inversions, disjunction merging and
the primary rules.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import lang
from .assertions import (FALSE, TRUE, And, Cmp, Exists, Lit, LVar, cond_false, cond_true, conj,
                         disj, disj_all, entails, inst, pretty_assertion)
from .errors import EmptyDomain, ShapeError, SideConditionError
from .lang import For, If, Seq, has_toplevel_continue
from .proof import (RAssign, RBreak, RConseq, RContinue, RIf, RLoop, RSeq, RSkip, Triple,
                    conclusion)


@dataclass(frozen=True)
class SplitResult:
    mid: object
    left: object
    right: object


@dataclass(frozen=True)
class LoopSplit:
    i1: object
    i2: object
    body: object
    incr: object
    entry: tuple  # (P, i1): P |- i1 holds semantically for checked input


def conseq(t, pre=None, post=None, post_brk=None, post_con=None):
    """Consequence wrapper; collapses stacked layers and drops no-op ones."""
    c = conclusion(t)
    pre = c.pre if pre is None else pre
    post = c.post if post is None else post
    post_brk = c.post_brk if post_brk is None else post_brk
    post_con = c.post_con if post_con is None else post_con
    base = t.child if type(t) is RConseq else t
    b = conclusion(base)
    if (b.pre, b.post, b.post_brk, b.post_con) == (pre, post, post_brk, post_con):
        return base
    return RConseq(base, pre, post, post_brk, post_con)


def to_triple(t, target: Triple):
    """Wrap t so that it concludes exactly ``target`` (same command)."""
    c = conclusion(t)
    if c.cmd != target.cmd:
        raise ShapeError("command mismatch")
    return conseq(t, target.pre, target.post, target.post_brk, target.post_con)


def _expect(t, ctor, what):
    c = conclusion(t)
    if type(c.cmd) is not ctor:
        raise ShapeError(f"expected a proof about {what}, got {lang.pretty(c.cmd)!r}")
    return c


# ---------------------------------------------------------------------------
# inversions


def inv_seq(t) -> SplitResult:
    _expect(t, Seq, "a sequence")
    if type(t) is RSeq:
        return SplitResult(t.mid, t.left, t.right)
    if type(t) is RConseq:
        s = inv_seq(t.child)
        left = conseq(s.left, t.pre, s.mid, t.post_brk, t.post_con)
        right = conseq(s.right, s.mid, t.post, t.post_brk, t.post_con)
        return SplitResult(s.mid, left, right)
    raise ShapeError(f"no sequence rule at {type(t).__name__}")


def inv_loop(t) -> LoopSplit:
    c = _expect(t, For, "a loop")
    if type(t) is RLoop:
        return LoopSplit(t.inv, t.inv_incr, t.body, t.incr, (t.inv, t.inv))
    if type(t) is RConseq:
        s = inv_loop(t.child)
        body = conseq(s.body, s.i1, s.i2, c.post, s.i2)
        incr = conseq(s.incr, s.i2, s.i1, c.post, FALSE)
        return LoopSplit(s.i1, s.i2, body, incr, (c.pre, s.i1))
    raise ShapeError(f"no loop rule at {type(t).__name__}")


def inv_if(t):
    """Branch proofs with preconditions exactly pre /\\ [e] true and pre /\\ [e] = 0."""
    c = _expect(t, If, "a conditional")
    e = c.cmd.cond
    if type(t) is RIf:
        a, b = t.then, t.els
    elif type(t) is RConseq:
        a, b = inv_if(t.child)
    else:
        raise ShapeError(f"no conditional rule at {type(t).__name__}")
    a = conseq(a, And(c.pre, cond_true(e)), *c.posts)
    b = conseq(b, And(c.pre, cond_false(e)), *c.posts)
    return a, b


def inv_skip(t):
    """Skip inversion: the pre entails the post (returned as a pair)."""
    c = _expect(t, lang.Skip, "skip")
    return (c.pre, c.post)


# ---------------------------------------------------------------------------
# disjunction merging


def merge_disj(t1, t2):
    """Combine proofs of one command into {P1 \\/ P2} c {Q1 \\/ Q2, [..]}."""
    c1, c2 = conclusion(t1), conclusion(t2)
    if c1.cmd != c2.cmd:
        raise ShapeError("merge_disj needs proofs about the same command")
    target = Triple(disj(c1.pre, c2.pre), c1.cmd, disj(c1.post, c2.post),
                    disj(c1.post_brk, c2.post_brk), disj(c1.post_con, c2.post_con))
    if t1 == t2:
        return t1
    return to_triple(_merge(t1, t2, c1, c2), target)


def _merge(t1, t2, c1, c2):
    cmd = c1.cmd
    tt = type(cmd)
    pre = disj(c1.pre, c2.pre)
    if tt is lang.Skip:
        return RSkip(pre)
    if tt is lang.Break:
        return RBreak(pre)
    if tt is lang.Continue:
        return RContinue(pre)
    if tt is lang.Assign:
        return RAssign(cmd.name, cmd.expr, disj(c1.post, c2.post))
    if tt is Seq:
        s1, s2 = inv_seq(t1), inv_seq(t2)
        left = merge_disj(s1.left, s2.left)
        right = merge_disj(s1.right, s2.right)
        return RSeq(disj(s1.mid, s2.mid), left, right)
    if tt is If:
        a1, b1 = inv_if(t1)
        a2, b2 = inv_if(t2)
        ct, cf = cond_true(cmd.cond), cond_false(cmd.cond)
        a = conseq(merge_disj(a1, a2), And(pre, ct))
        b = conseq(merge_disj(b1, b2), And(pre, cf))
        return RIf(cmd.cond, a, b)
    if tt is For:
        l1, l2 = inv_loop(t1), inv_loop(t2)
        body = merge_disj(l1.body, l2.body)
        incr = merge_disj(l1.incr, l2.incr)
        return RLoop(disj(l1.i1, l2.i1), disj(l1.i2, l2.i2), body, incr)
    raise ShapeError(f"cannot merge proofs about {cmd!r}")


def domain_membership(var, dom, modulus):
    dom = sorted(set(dom))
    if dom == list(range(len(dom))):
        if len(dom) >= modulus:
            return TRUE
        return Cmp("<=", LVar(var), Lit(dom[-1]))
    return disj_all(Cmp("=", LVar(var), Lit(d)) for d in dom)


def ex_finite(var: str, body, family: dict, modulus: int = lang.DEFAULT_MODULUS):
    """Finite existential rule: from proofs of {body[var:=d]} c {Q,[R]} for d in D
    conclude {exists var. var in D /\\ body} c {Q,[R]}."""
    if not family:
        raise EmptyDomain("ex_finite needs at least one domain value")
    trees = [family[d] for d in sorted(family)]
    concls = [conclusion(t) for t in trees]
    first = concls[0]
    for d, c in zip(sorted(family), concls):
        if (c.cmd, c.posts) != (first.cmd, first.posts):
            raise ShapeError("family members must share command and postconditions")
        if c.pre != inst(body, var, Lit(d)):
            raise ShapeError(f"member {d} does not prove the instance of the body")
    merged = trees[0]
    for t in trees[1:]:
        merged = merge_disj(merged, t)
    pre = Exists(var, conj(domain_membership(var, family, modulus), body))
    return conseq(merged, pre, *first.posts)


# ---------------------------------------------------------------------------
# structural rules


def _drop_continue(t):
    """Rewrite a proof of a continue-free command so its continue post is false."""
    tt = type(t)
    if tt in (RSkip, RBreak, RAssign, RLoop):
        return t
    if tt is RContinue:
        raise SideConditionError("command contains a top-level continue")
    if tt is RSeq:
        return RSeq(t.mid, _drop_continue(t.left), _drop_continue(t.right))
    if tt is RIf:
        return RIf(t.cond, _drop_continue(t.then), _drop_continue(t.els))
    if tt is RConseq:
        return RConseq(_drop_continue(t.child), t.pre, t.post, t.post_brk, FALSE)
    raise ShapeError(f"unknown node {t!r}")


def nocontinue(t, rc):
    c = conclusion(t)
    if has_toplevel_continue(c.cmd):
        raise SideConditionError(f"{lang.pretty(c.cmd)!r} contains a top-level continue")
    return conseq(_drop_continue(t), post_con=rc)


def conseq_pre(t, p, fp, cap=lang.DEFAULT_CAP):
    """Replace the precondition by p (which must entail it), keeping the posts."""
    c = conclusion(t)
    v = entails(p, c.pre, fp, cap)
    if not v.ok:
        raise SideConditionError(
            f"{pretty_assertion(p)} does not entail {pretty_assertion(c.pre)}", v.state)
    return conseq(t, pre=p)


# ---------------------------------------------------------------------------
# transformation rules


def if_seq(t):
    """From {P} if e then c1;;c3 else c2;;c3 {..} to {P} (if e then c1 else c2);;c3 {..}."""
    c = _expect(t, If, "a distributed conditional")
    a, b = c.cmd.then, c.cmd.els
    if not (type(a) is Seq and type(b) is Seq and a.second == b.second):
        raise ShapeError("branches must both end in the same command")
    ta, tb = inv_if(t)
    sa, sb = inv_seq(ta), inv_seq(tb)
    if sa.mid == sb.mid:
        mid, tail = sa.mid, sa.right
    else:
        tail = merge_disj(sa.right, sb.right)
        mid = disj(sa.mid, sb.mid)
    left_a = conseq(sa.left, post=mid)
    left_b = conseq(sb.left, post=mid)
    cond = RIf(c.cmd.cond, left_a, left_b)
    tail = conseq(tail, None, *c.posts)
    out = RSeq(mid, cond, tail)
    return conseq(out, pre=c.pre)


def loop_nocontinue(t):
    """From {P} for(;;skip)(c1;;c2) {..} to {P} for(;;c2) c1 {..} (no continue in c1, c2)."""
    c = _expect(t, For, "a loop")
    body, incr = c.cmd.body, c.cmd.incr
    if type(body) is not Seq or type(incr) is not lang.Skip:
        raise ShapeError("expected for(;; skip) (c1 ;; c2)")
    c1, c2 = body.first, body.second
    if has_toplevel_continue(c1) or has_toplevel_continue(c2):
        raise SideConditionError("loop body contains a top-level continue")
    ls = inv_loop(t)
    q = c.post
    # {I2} skip {I1}: so I2 |- I1 and the body may end in I1 directly
    b = conseq(ls.body, ls.i1, ls.i1, q, ls.i1)
    s = inv_seq(b)
    right = nocontinue(s.right, FALSE)
    left = nocontinue(s.left, s.mid)
    loop = RLoop(ls.i1, s.mid, left, right)
    return conseq(loop, c.pre, *c.posts)


def loop_unroll1(t1, t2, t3, fp, cap=lang.DEFAULT_CAP):
    """Peel the first iteration: t1 proves c1, t2 proves c2 from t1's post, t3 the loop."""
    a, b, c = conclusion(t1), conclusion(t2), conclusion(t3)
    if type(c.cmd) is not For:
        raise ShapeError("third premise must be about a loop")
    c1, c2 = c.cmd.body, c.cmd.incr
    if a.cmd != c1 or b.cmd != c2:
        raise ShapeError("premises must prove the loop's body and increment")
    p, p1, p2, rb = a.pre, a.post, b.post, a.post_brk
    if a.post_con != p1 or b.pre != p1 or b.post_brk != rb or c.pre != p2:
        raise ShapeError("premises do not chain as {P}c1{P1,[Rb,P1]} {P1}c2{P2,[Rb,..]} {P2}loop")
    if p == c.pre:
        return t3
    q = c.post
    v = entails(rb, q, fp, cap)
    if not v.ok:
        raise SideConditionError(
            f"break post {pretty_assertion(rb)} does not entail {pretty_assertion(q)}", v.state)
    if b.post_con != FALSE:
        if has_toplevel_continue(c2):
            v = entails(b.post_con, FALSE, fp, cap)
            if not v.ok:
                raise SideConditionError("increment may exit by continue", v.state)
            t2 = conseq(t2, post_con=FALSE)
        else:
            t2 = nocontinue(t2, FALSE)
    ls = inv_loop(t3)
    first_body = conseq(t1, p, p1, q, p1)
    first_incr = conseq(t2, p1, ls.i1, q, FALSE)   # P2 |- I1 by loop inversion
    body = merge_disj(first_body, ls.body)
    incr = conseq(merge_disj(first_incr, ls.incr), post=disj(p, ls.i1))
    loop = RLoop(disj(p, ls.i1), disj(p1, ls.i2), body, incr)
    return conseq(loop, p, *c.posts)


def seq_assoc(t):
    """((c1;;c2);;c3) to (c1;;(c2;;c3))."""
    c = _expect(t, Seq, "a sequence")
    if type(c.cmd.first) is not Seq:
        raise ShapeError("expected (c1 ;; c2) ;; c3")
    s = inv_seq(t)
    s2 = inv_seq(s.left)
    return RSeq(s2.mid, s2.left, RSeq(s.mid, s2.right, s.right))


def seq_assoc_inv(t):
    """(c1;;(c2;;c3)) to ((c1;;c2);;c3)."""
    c = _expect(t, Seq, "a sequence")
    if type(c.cmd.second) is not Seq:
        raise ShapeError("expected c1 ;; (c2 ;; c3)")
    s = inv_seq(t)
    s2 = inv_seq(s.right)
    return RSeq(s2.mid, RSeq(s.mid, s.left, s2.left), s2.right)


# ---------------------------------------------------------------------------
# regrouping sequences


def seq_leaves(c):
    if type(c) is Seq:
        return seq_leaves(c.first) + seq_leaves(c.second)
    return [c]


def regroup(t, target):
    """Reassociate the ;; spine of t's command to match ``target``."""
    c = conclusion(t)
    if c.cmd == target:
        return t
    if type(target) is not Seq or type(c.cmd) is not Seq:
        raise ShapeError("commands differ beyond sequence association")
    if seq_leaves(c.cmd) != seq_leaves(target):
        raise ShapeError("commands differ beyond sequence association")
    want = len(seq_leaves(target.first))
    while True:
        have = len(seq_leaves(conclusion(t).cmd.first))
        if have == want:
            break
        t = seq_assoc(t) if have > want else seq_assoc_inv(t)
    s = inv_seq(t)
    return RSeq(s.mid, regroup(s.left, target.first), regroup(s.right, target.second))


__all__ = [
    "SplitResult", "LoopSplit", "conseq", "to_triple", "inv_seq", "inv_loop", "inv_if", "inv_skip",
    "merge_disj", "ex_finite", "domain_membership", "nocontinue", "conseq_pre", "if_seq",
    "loop_nocontinue", "loop_unroll1", "seq_assoc", "seq_assoc_inv", "regroup", "seq_leaves",
]
