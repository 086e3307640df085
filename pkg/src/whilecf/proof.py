"""Proof trees over the primary rules, a checker and the certificate format."""
from __future__ import annotations

import functools
import hashlib
import re
from dataclasses import dataclass, field

from . import lang
from .assertions import (FALSE, TRUE, And, Assertion, cond_false, cond_true, entails,
                         parse_assertion_stream, pretty_assertion, prog_vars, subst, with_defined)
from .errors import MalformedNode, ParseError
from .lang import (Assign, Footprint, For, If, Seq, TokenStream, parse_expr_stream, pretty,
                   pretty_expr)


@dataclass(frozen=True)
class Triple:
    pre: Assertion
    cmd: lang.Command
    post: Assertion
    post_brk: Assertion = FALSE
    post_con: Assertion = FALSE

    @property
    def posts(self):
        return (self.post, self.post_brk, self.post_con)

    def __str__(self):
        p = pretty_assertion
        return (f"{{{p(self.pre)}}} {pretty(self.cmd)} "
                f"{{{p(self.post)}, [{p(self.post_brk)}, {p(self.post_con)}]}}")


# ---------------------------------------------------------------------------
# proof-tree nodes


class ProofTree:
    __slots__ = ()


@dataclass(frozen=True)
class RSkip(ProofTree):
    pre: Assertion


@dataclass(frozen=True)
class RBreak(ProofTree):
    pre: Assertion


@dataclass(frozen=True)
class RContinue(ProofTree):
    pre: Assertion


@dataclass(frozen=True)
class RAssign(ProofTree):
    name: str
    expr: lang.Expr
    post: Assertion


@dataclass(frozen=True)
class RSeq(ProofTree):
    mid: Assertion
    left: ProofTree
    right: ProofTree


@dataclass(frozen=True)
class RIf(ProofTree):
    cond: lang.Expr
    then: ProofTree
    els: ProofTree


@dataclass(frozen=True)
class RLoop(ProofTree):
    inv: Assertion        # before the body
    inv_incr: Assertion   # before the increment
    body: ProofTree
    incr: ProofTree


@dataclass(frozen=True)
class RConseq(ProofTree):
    child: ProofTree
    pre: Assertion
    post: Assertion
    post_brk: Assertion
    post_con: Assertion


# the syntax-directed rule for each command constructor
RULE_FOR = {lang.Skip: RSkip, lang.Break: RBreak, lang.Continue: RContinue, Assign: RAssign,
            Seq: RSeq, If: RIf, For: RLoop}
PRIMARY_RULES = (RSkip, RBreak, RContinue, RAssign, RSeq, RIf, RLoop, RConseq)

_ROLES = {RSeq: ("left", "right"), RIf: ("then", "else"), RLoop: ("body", "incr"),
          RConseq: ("child",)}


def subtrees(t):
    tt = type(t)
    if tt is RSeq:
        return (t.left, t.right)
    if tt is RIf:
        return (t.then, t.els)
    if tt is RLoop:
        return (t.body, t.incr)
    if tt is RConseq:
        return (t.child,)
    return ()


def node_count(t) -> int:
    return 1 + sum(node_count(s) for s in subtrees(t))


def _rule_name(t):
    return {RSkip: "skip", RBreak: "break", RContinue: "continue", RAssign: "assign",
            RSeq: "seq", RIf: "if", RLoop: "loop", RConseq: "conseq"}[type(t)]


# ---------------------------------------------------------------------------
# conclusions


def _compose(t, kids, path):
    """Conclusion of node t given its children's conclusions."""
    tt = type(t)
    if tt is RSkip:
        return Triple(t.pre, lang.SKIP, t.pre, FALSE, FALSE)
    if tt is RBreak:
        return Triple(t.pre, lang.BREAK, FALSE, t.pre, FALSE)
    if tt is RContinue:
        return Triple(t.pre, lang.CONTINUE, FALSE, FALSE, t.pre)
    if tt is RAssign:
        pre = with_defined(subst(t.post, t.name, t.expr), t.expr)
        return Triple(pre, Assign(t.name, t.expr), t.post, FALSE, FALSE)
    if tt is RSeq:
        l, r = kids
        if l.post != t.mid:
            raise MalformedNode("left premise does not end in the intermediate assertion", path)
        if r.pre != t.mid:
            raise MalformedNode("right premise does not start from the intermediate assertion", path)
        if (l.post_brk, l.post_con) != (r.post_brk, r.post_con):
            raise MalformedNode("premises disagree on control-flow postconditions", path)
        return Triple(l.pre, Seq(l.cmd, r.cmd), r.post, r.post_brk, r.post_con)
    if tt is RIf:
        a, b = kids
        ct, cf = cond_true(t.cond), cond_false(t.cond)
        if not (isinstance(a.pre, And) and a.pre.right == ct):
            raise MalformedNode("then premise must have precondition P /\\ [e] true", path)
        if not (isinstance(b.pre, And) and b.pre.right == cf):
            raise MalformedNode("else premise must have precondition P /\\ [e] = 0", path)
        if a.pre.left != b.pre.left:
            raise MalformedNode("branch preconditions disagree on P", path)
        if a.posts != b.posts:
            raise MalformedNode("branch postconditions disagree", path)
        return Triple(with_defined(a.pre.left, t.cond), If(t.cond, a.cmd, b.cmd), *a.posts)
    if tt is RLoop:
        b, c = kids
        if b.pre != t.inv:
            raise MalformedNode("body premise must start from the loop invariant", path)
        if b.post != t.inv_incr or b.post_con != t.inv_incr:
            raise MalformedNode("body must end (normally and by continue) in the increment invariant",
                                path)
        if c.pre != t.inv_incr:
            raise MalformedNode("increment premise must start from the increment invariant", path)
        if c.post != t.inv:
            raise MalformedNode("increment must re-establish the loop invariant", path)
        if c.post_brk != b.post_brk:
            raise MalformedNode("body and increment disagree on the break postcondition", path)
        if c.post_con != FALSE:
            raise MalformedNode("increment continue postcondition must be false", path)
        return Triple(t.inv, For(b.cmd, c.cmd), b.post_brk, FALSE, FALSE)
    if tt is RConseq:
        (k,) = kids
        return Triple(t.pre, k.cmd, t.post, t.post_brk, t.post_con)
    raise MalformedNode(f"unknown node {t!r}", path)


def _conclusion(t, path):
    c = getattr(t, "_concl", None)
    if c is not None:
        return c
    roles = _ROLES.get(type(t), ())
    kids = [_conclusion(s, f"{path}.{r}") for s, r in zip(subtrees(t), roles)]
    c = _compose(t, kids, path)
    object.__setattr__(t, "_concl", c)
    return c


def conclusion(t: ProofTree) -> Triple:
    """The triple proved by t; MalformedNode if the premises do not compose."""
    return _conclusion(t, "root")


def pre_of(t):
    return conclusion(t).pre


# ---------------------------------------------------------------------------
# checking


@dataclass
class Failure:
    path: str
    obligation: str
    counterexample: object = None

    def __str__(self):
        s = f"{self.path}: {self.obligation}"
        if self.counterexample is not None:
            s += f"; counterexample {self.counterexample}"
        return s


@dataclass
class CheckReport:
    ok: bool
    failures: list = field(default_factory=list)
    triple: Triple | None = None
    obligations: int = 0

    def __str__(self):
        if self.ok:
            return f"ok ({self.obligations} entailments checked)"
        return "\n".join(str(f) for f in self.failures)


@functools.lru_cache(maxsize=50000)
def _entails_cached(p, q, fp, cap):
    return entails(p, q, fp, cap)


def trivially_entails(p, q):
    return p == q or p == FALSE or q == TRUE


def check(t: ProofTree, fp: Footprint, cap=lang.DEFAULT_CAP) -> CheckReport:
    """Compose every node and discharge every consequence side condition."""
    failures = []
    count = [0]
    fvars = set(fp.vars)

    def footprint_ok(assertions, cmd, path):
        extra = set()
        for a in assertions:
            extra |= prog_vars(a)
        if cmd is not None:
            extra |= lang.command_vars(cmd)
        extra -= fvars
        if extra:
            failures.append(Failure(path, f"variables {sorted(extra)} are outside the footprint"))
            return False
        return True

    def go(node, path):
        roles = _ROLES.get(type(node), ())
        kids = [go(s, f"{path}.{r}") for s, r in zip(subtrees(node), roles)]
        if any(k is None for k in kids):
            return None
        try:
            concl = _conclusion(node, path)
        except MalformedNode as exc:
            failures.append(Failure(exc.path, exc.reason))
            return None
        if not footprint_ok([concl.pre, *concl.posts], concl.cmd if not kids else None, path):
            return None
        if type(node) is RConseq:
            k = kids[0]
            pairs = [("pre", concl.pre, k.pre), ("post", k.post, concl.post),
                     ("break post", k.post_brk, concl.post_brk),
                     ("continue post", k.post_con, concl.post_con)]
            for label, p, q in pairs:
                if trivially_entails(p, q):
                    continue
                count[0] += 1
                v = _entails_cached(p, q, fp, cap)
                if not v.ok:
                    cex = v.state if not v.env else (v.state, dict(v.env))
                    failures.append(Failure(path, f"{label}: {pretty_assertion(p)} |- "
                                                  f"{pretty_assertion(q)}", cex))
        return concl

    triple = go(t, "root")
    return CheckReport(not failures, failures, triple, count[0])


def rule_counts(t) -> dict:
    out = {}
    stack = [t]
    while stack:
        n = stack.pop()
        k = _rule_name(n)
        out[k] = out.get(k, 0) + 1
        stack.extend(subtrees(n))
    return out


# ---------------------------------------------------------------------------
# certificate text


def _br(a):
    return "{" + pretty_assertion(a) + "}"


def _bre(e):
    return "{" + pretty_expr(e) + "}"


def print_tree(t: ProofTree, indent: int = 0) -> str:
    pad = "  " * indent
    tt = type(t)
    if tt is RSkip:
        return f"{pad}(skip {_br(t.pre)})"
    if tt is RBreak:
        return f"{pad}(break {_br(t.pre)})"
    if tt is RContinue:
        return f"{pad}(continue {_br(t.pre)})"
    if tt is RAssign:
        return f"{pad}(assign {t.name} {_bre(t.expr)} {_br(t.post)})"
    if tt is RSeq:
        head = f"{pad}(seq {_br(t.mid)}"
    elif tt is RIf:
        head = f"{pad}(if {_bre(t.cond)}"
    elif tt is RLoop:
        head = f"{pad}(loop {_br(t.inv)} {_br(t.inv_incr)}"
    elif tt is RConseq:
        head = f"{pad}(conseq {_br(t.pre)} {_br(t.post)} {_br(t.post_brk)} {_br(t.post_con)}"
    else:
        raise TypeError(f"not a proof tree: {t!r}")
    body = "\n".join(print_tree(s, indent + 1) for s in subtrees(t))
    return f"{head}\n{body})"


class TreeParser:
    def __init__(self, ts: TokenStream):
        self.ts = ts

    def braced_assertion(self):
        self.ts.expect("{")
        a = parse_assertion_stream(self.ts)
        self.ts.expect("}")
        return a

    def braced_expr(self):
        self.ts.expect("{")
        e = parse_expr_stream(self.ts)
        self.ts.expect("}")
        return e

    def tree(self):
        ts = self.ts
        ts.expect("(")
        tok = ts.next()
        kind = tok.text
        if kind == "skip":
            node = RSkip(self.braced_assertion())
        elif kind == "break":
            node = RBreak(self.braced_assertion())
        elif kind == "continue":
            node = RContinue(self.braced_assertion())
        elif kind == "assign":
            name = ts.ident("assigned variable")
            e = self.braced_expr()
            node = RAssign(name, e, self.braced_assertion())
        elif kind == "seq":
            mid = self.braced_assertion()
            node = RSeq(mid, self.tree(), self.tree())
        elif kind == "if":
            e = self.braced_expr()
            node = RIf(e, self.tree(), self.tree())
        elif kind == "loop":
            p = self.braced_assertion()
            i = self.braced_assertion()
            node = RLoop(p, i, self.tree(), self.tree())
        elif kind == "conseq":
            qs = [self.braced_assertion() for _ in range(4)]
            node = RConseq(self.tree(), *qs)
        else:
            raise ParseError(f"unknown proof node {kind!r}", tok.line, tok.col)
        ts.expect(")")
        return node


def parse_tree(text: str) -> ProofTree:
    ts = TokenStream(text)
    t = TreeParser(ts).tree()
    ts.expect_eof()
    return t


@dataclass(frozen=True)
class Certificate:
    tree: ProofTree
    footprint: Footprint
    source_hash: str = "none"

    @property
    def triple(self):
        return conclusion(self.tree)

    def check(self, cap=lang.DEFAULT_CAP):
        return check(self.tree, self.footprint, cap)


def source_hash(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def print_certificate(cert: Certificate) -> str:
    fp = cert.footprint
    return (f"(certificate\n  (footprint ({' '.join(fp.vars)}) {fp.modulus})\n"
            f"  (source {cert.source_hash})\n{print_tree(cert.tree, 1)})\n")


_HEADER = re.compile(r"\s*\(certificate\s+\(footprint\s+\(([^()]*)\)\s+(\d+)\)\s+"
                     r"\(source\s+([0-9a-f]+|none)\)")


def parse_certificate(text: str) -> Certificate:
    m = _HEADER.match(text)
    if not m:
        raise ParseError("expected (certificate (footprint (vars) M) (source hash) tree)")
    names = tuple(m.group(1).split())
    try:
        fp = Footprint(names, int(m.group(2)))
    except ValueError as exc:
        line = text.count("\n", 0, m.start(1)) + 1
        raise ParseError(f"bad footprint: {exc}", line, 1) from None
    rest = text[m.end():]
    # keep line numbers meaningful for errors in the tree part
    offset_lines = text.count("\n", 0, m.end())
    ts = TokenStream("\n" * offset_lines + rest)
    tree = TreeParser(ts).tree()
    ts.expect(")")
    ts.expect_eof()
    return Certificate(tree, fp, m.group(3))


__all__ = [
    "Triple", "ProofTree", "RSkip", "RBreak", "RContinue", "RAssign", "RSeq", "RIf", "RLoop",
    "RConseq", "RULE_FOR", "PRIMARY_RULES", "conclusion", "check", "CheckReport", "Failure",
    "print_tree", "parse_tree", "Certificate", "print_certificate", "parse_certificate",
    "source_hash", "subtrees", "node_count", "rule_counts"
]
