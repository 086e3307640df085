"""Forward symbolic execution over annotated programs, emitting proof certificates.

The executor walks the program from a precondition, building a proof tree
with the primary rules as it goes.  Every entailment it cannot settle
syntactically becomes a verification condition (VC); once all VCs hold the
tree checks.  Preprocessing rewrites the program (sequence reassociation,
if-seq, loop-nocontinue) before execution, and the resulting proof is
carried back to the original program with the extended-rule transformers.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from . import lang
from .assertions import (FALSE, TRUE, And, Cmp, Exists, LVar, Prog, all_lvars, cond_false,
                         cond_true, conj, conjuncts, disj, entails, expr_to_term, fresh_name,
                         parse_assertion, parse_assertion_stream, pretty_assertion,
                         prog_vars, subst_pvar, term_pvars, with_defined)
from .errors import AnnotationMissing, CapExceeded, ParseError, ShapeError
from .extended import (conseq, if_seq, inv_if, inv_loop, inv_seq, loop_nocontinue,
                       merge_disj, regroup, seq_assoc_inv)
from .lang import (SKIP, Assign, Break, Command, CommandParser, Continue, Footprint, For, If,
                   Seq, Skip, TokenStream, expr_vars, has_toplevel_continue)
from .proof import (Certificate, RAssign, RBreak, RContinue, RIf, RLoop, RSeq, RSkip, check,
                    conclusion, source_hash)
from .smallstep import Posts
from .verdict import Verdict


# ---------------------------------------------------------------------------
# annotated commands


@dataclass(frozen=True)
class ForAnn(Command):
    body: Command
    incr: Command
    inv: object = None        # holds before each body run
    incr_inv: object = None   # holds before each increment run


@dataclass(frozen=True)
class MidAssert(Command):
    assertion: object


class AnnotatedParser(CommandParser):
    """Command grammar plus ``assert A`` and ``for {inv: A} {incr_inv: B} (;; c2) c1``."""

    def extra_atom(self):
        ts = self.ts
        if ts.accept("assert"):
            return MidAssert(parse_assertion_stream(ts))
        raise ts.error("expected a command")

    def loop(self):
        ts = self.ts
        ts.expect("for")
        notes = {}
        while ts.at("{"):
            ts.next()
            key = ts.peek()
            name = ts.ident("annotation name")
            if name not in ("inv", "incr_inv"):
                raise ParseError(f"unknown loop annotation {name!r}", key.line, key.col)
            if name in notes:
                raise ParseError(f"duplicate loop annotation {name!r}", key.line, key.col)
            ts.expect(":")
            notes[name] = parse_assertion_stream(ts)
            ts.expect("}")
        incr = self.loop_header()
        body = self.atom()
        return ForAnn(body, incr, notes.get("inv"), notes.get("incr_inv"))


def parse_annotated(text: str) -> Command:
    return AnnotatedParser(TokenStream(text)).parse()


def erase(c: Command) -> Command:
    """Drop annotations: asserts become skip, annotated loops plain loops."""
    t = type(c)
    if t is MidAssert:
        return SKIP
    if t is ForAnn:
        return For(erase(c.body), erase(c.incr))
    if t is Seq:
        return Seq(erase(c.first), erase(c.second))
    if t is If:
        return If(c.cond, erase(c.then), erase(c.els))
    if t is For:
        return For(erase(c.body), erase(c.incr))
    return c


def pretty_annotated(c: Command) -> str:
    t = type(c)

    def atom(x):
        s = pretty_annotated(x)
        return f"({s})" if type(x) is Seq else s

    if t is MidAssert:
        return f"assert {pretty_assertion(c.assertion)}"
    if t is ForAnn:
        notes = ""
        if c.inv is not None:
            notes += f" {{inv: {pretty_assertion(c.inv)}}}"
        if c.incr_inv is not None:
            notes += f" {{incr_inv: {pretty_assertion(c.incr_inv)}}}"
        return f"for{notes} (;; {pretty_annotated(c.incr)}) {atom(c.body)}"
    if t is Seq:
        return f"{atom(c.first)} ;; {pretty_annotated(c.second)}"
    if t is If:
        return f"if {lang.pretty_expr(c.cond)} then {atom(c.then)} else {atom(c.els)}"
    return lang.pretty(c)


def annotation_vars(c) -> set:
    """Program variables used by the command and its annotations."""
    t = type(c)
    if t is MidAssert:
        return prog_vars(c.assertion)
    if t is ForAnn:
        out = annotation_vars(c.body) | annotation_vars(c.incr)
        for a in (c.inv, c.incr_inv):
            if a is not None:
                out |= prog_vars(a)
        return out
    if t is Seq:
        return annotation_vars(c.first) | annotation_vars(c.second)
    if t is If:
        return expr_vars(c.cond) | annotation_vars(c.then) | annotation_vars(c.els)
    return lang.command_vars(c)


# ---------------------------------------------------------------------------
# symbolic execution


@dataclass(frozen=True)
class VC:
    lhs: object
    rhs: object
    origin: str
    kind: str = "goal"   # 'safety' for definedness side conditions

    def __str__(self):
        return f"{self.origin}: {pretty_assertion(self.lhs)} |- {pretty_assertion(self.rhs)}"


def _trivial(p, q):
    return p == q or p == FALSE or q == TRUE


def _strip_exists(p):
    names = []
    while type(p) is Exists:
        names.append(p.var)
        p = p.body
    return names, p


def _wrap_exists(names, body):
    for v in reversed(names):
        body = Exists(v, body)
    return body


def forward_assign(pre, x, e):
    """Strongest postcondition of x = e (for states where e is defined)."""
    if pre == FALSE:
        return FALSE
    new = Cmp("=", Prog(lang.Var(x)), Prog(e))
    names, body = _strip_exists(pre)
    parts = conjuncts(body) if body != TRUE else []
    if x not in prog_vars(pre) and x not in expr_vars(e):
        return _wrap_exists(names, conj(*parts, new))
    # an existing conjunct [x] = t pins the old value, so no quantifier is needed
    for i, a in enumerate(parts):
        if (type(a) is Cmp and a.rel == "=" and a.left == Prog(lang.Var(x))
                and x not in term_pvars(a.right)):
            old = a.right
            rest = [subst_pvar(b, x, old) for j, b in enumerate(parts) if j != i]
            eq = Cmp("=", Prog(lang.Var(x)), expr_to_term(e, x, old))
            return _wrap_exists(names, conj(*rest, eq))
    v = fresh_name("v", all_lvars(pre))
    eq = Cmp("=", Prog(lang.Var(x)), expr_to_term(e, x, LVar(v)))
    return Exists(v, conj(subst_pvar(pre, x, LVar(v)), eq))


class SymExec:
    def __init__(self, fp):
        self.fp = fp
        self.vcs = []

    def vc(self, lhs, rhs, origin, kind="goal"):
        if not _trivial(lhs, rhs):
            self.vcs.append(VC(lhs, rhs, origin, kind))

    def run(self, c, pre, path="root"):
        """Returns (tree, Posts); the tree's precondition is exactly ``pre``."""
        t = type(c)
        if t is Skip:
            return RSkip(pre), Posts(pre, FALSE, FALSE)
        if t is Break:
            return RBreak(pre), Posts(FALSE, pre, FALSE)
        if t is Continue:
            return RContinue(pre), Posts(FALSE, FALSE, pre)
        if t is MidAssert:
            self.vc(pre, c.assertion, f"{path}:assert")
            a = c.assertion
            return conseq(RSkip(a), pre=pre), Posts(a, FALSE, FALSE)
        if t is Assign:
            post = forward_assign(pre, c.name, c.expr)
            node = RAssign(c.name, c.expr, post)
            self.vc(pre, conclusion(node).pre, f"{path}:assign", "safety")
            return conseq(node, pre=pre), Posts(post, FALSE, FALSE)
        if t is Seq:
            left, p1 = self.run(c.first, pre, f"{path}.left")
            right, p2 = self.run(c.second, p1.normal, f"{path}.right")
            rb, rc = disj(p1.brk, p2.brk), disj(p1.con, p2.con)
            left = conseq(left, post_brk=rb, post_con=rc)
            right = conseq(right, post_brk=rb, post_con=rc)
            return RSeq(p1.normal, left, right), Posts(p2.normal, rb, rc)
        if t is If:
            ct, cf = cond_true(c.cond), cond_false(c.cond)
            a, pa = self.run(c.then, And(pre, ct), f"{path}.then")
            b, pb = self.run(c.els, And(pre, cf), f"{path}.else")
            posts = Posts(disj(pa.normal, pb.normal), disj(pa.brk, pb.brk), disj(pa.con, pb.con))
            q = (posts.normal, posts.brk, posts.con)
            node = RIf(c.cond, conseq(a, None, *q), conseq(b, None, *q))
            self.vc(pre, with_defined(pre, c.cond), f"{path}:if", "safety")
            return conseq(node, pre=pre), posts
        if t is ForAnn:
            if c.inv is None:
                return self.loop_mid(c, pre, path)
            return self.loop(c, pre, path)
        if t is For:
            raise AnnotationMissing(f"{path}: loop has no invariant annotation")
        raise ShapeError(f"cannot execute {c!r}")

    def loop(self, c, pre, path):
        inv = c.inv
        self.vc(pre, inv, f"{path}:loop entry")
        body, pb = self.run(c.body, inv, f"{path}.body")
        if c.incr_inv is None:
            ii = disj(pb.normal, pb.con)
        else:
            ii = c.incr_inv
            self.vc(pb.normal, ii, f"{path}:body post")
            self.vc(pb.con, ii, f"{path}:body continue post")
        incr, pi = self.run(c.incr, ii, f"{path}.incr")
        self.vc(pi.normal, inv, f"{path}:increment post")
        self.vc(pi.con, FALSE, f"{path}:increment continue")
        q = disj(pb.brk, pi.brk)
        body = conseq(body, inv, ii, q, ii)
        incr = conseq(incr, ii, inv, q, FALSE)
        return conseq(RLoop(inv, ii, body, incr), pre=pre), Posts(q, FALSE, FALSE)

    def loop_mid(self, c, pre, path):
        """Loop whose body is c1 ;; assert A ;; c2 and has no invariant.

        Executes c1 from the entry state and c2 ;; incr ;; c1 from A, then
        rebuilds the loop proof with invariants pre \\/ I1 and I2 obtained by
        sequence inversion, the way a hand proof reorders the loop.
        """
        items = _spine(c.body)
        marks = [i for i, x in enumerate(items) if type(x) is MidAssert]
        if not marks:
            raise AnnotationMissing(f"{path}: loop has no invariant annotation")
        i = marks[0]
        if i == 0 or i == len(items) - 1:
            raise AnnotationMissing(f"{path}: a body assert needs commands on both sides "
                                    "when the loop has no invariant")
        a = items[i].assertion
        c1, c2 = lang.seq(*items[:i]), lang.seq(*items[i + 1:])
        t1, p1 = self.run(c1, pre, f"{path}.body.head")
        t2, p2 = self.run(Seq(c2, Seq(c.incr, c1)), a, f"{path}.body.rotated")
        for p, lbl in ((p1.normal, "head post"), (p2.normal, "rotated post")):
            self.vc(p, a, f"{path}:{lbl}")
        for p, lbl in ((p1.con, "head continue"), (p2.con, "rotated continue")):
            self.vc(p, FALSE, f"{path}:{lbl}")
        q = disj(p1.brk, p2.brk)
        t1 = conseq(t1, pre, a, q, FALSE)
        t2 = conseq(t2, a, a, q, FALSE)
        s = inv_seq(t2)                 # {A} c2 {I2}   {I2} incr ;; c1 {A}
        s2 = inv_seq(s.right)           # {I2} incr {I1}   {I1} c1 {A}
        i1, i2 = s2.mid, s.mid
        head = merge_disj(t1, s2.right)
        skip = conseq(RSkip(a), post_brk=q)
        body = RSeq(a, head, RSeq(a, skip, s.left))
        body = conseq(body, post_con=i2)
        body = regroup(body, erase(c.body))
        incr = conseq(s2.left, post=disj(pre, i1))
        loop = RLoop(disj(pre, i1), i2, body, incr)
        return conseq(loop, pre=pre), Posts(q, FALSE, FALSE)


def _spine(c):
    if type(c) is Seq:
        return _spine(c.first) + _spine(c.second)
    return [c]


def symexec(ac, pre, fp):
    """Returns (tree, Posts, vcs) for the annotated command from ``pre``."""
    ex = SymExec(fp)
    tree, posts = ex.run(ac, pre)
    return tree, posts, ex.vcs


# ---------------------------------------------------------------------------
# preprocessing


@dataclass
class Plan:
    ops: tuple = ()
    kids: tuple = ()

    @property
    def changed(self):
        return bool(self.ops) or any(k.changed for k in self.kids)

    def all_ops(self):
        out = list(self.ops)
        for k in self.kids:
            out += k.all_ops()
        return out


def _abrupt(c):
    t = type(c)
    if t in (Break, Continue):
        return True
    if t is Seq:
        return _abrupt(c.first) or _abrupt(c.second)
    if t is If:
        return _abrupt(c.then) or _abrupt(c.els)
    return False


def _want_if_seq(c, flag):
    if flag is False:
        return False
    if flag:
        return True
    return _abrupt(c.first.then) or _abrupt(c.first.els)


def _want_loop_nc(c, flag):
    if flag is False or c.inv is None:
        return False
    if type(c.incr) is Skip or _has_continue(c.body) or _has_continue(c.incr):
        return False
    if flag:
        return True
    return c.incr_inv is None


def _has_continue(c):
    return has_toplevel_continue(erase(c))


def prepare(c, if_seq_flag=None, loop_nc_flag=None):
    """Rewrite an annotated command; returns (command, Plan)."""
    ops = []
    while type(c) is Seq and type(c.first) is Seq:
        c = Seq(c.first.first, Seq(c.first.second, c.second))
        ops.append("assoc")
    if type(c) is Seq and type(c.first) is If and _want_if_seq(c, if_seq_flag):
        f = c.first
        c = If(f.cond, Seq(f.then, c.second), Seq(f.els, c.second))
        ops.append("if_seq")
    elif type(c) is ForAnn and _want_loop_nc(c, loop_nc_flag):
        c = ForAnn(Seq(c.body, c.incr), SKIP, c.inv, None)
        ops.append("loop_nc")
    kids = ()
    t = type(c)
    if t is Seq:
        a, pa = prepare(c.first, if_seq_flag, loop_nc_flag)
        b, pb = prepare(c.second, if_seq_flag, loop_nc_flag)
        c, kids = Seq(a, b), (pa, pb)
    elif t is If:
        a, pa = prepare(c.then, if_seq_flag, loop_nc_flag)
        b, pb = prepare(c.els, if_seq_flag, loop_nc_flag)
        c, kids = If(c.cond, a, b), (pa, pb)
    elif t is ForAnn:
        a, pa = prepare(c.body, if_seq_flag, loop_nc_flag)
        b, pb = prepare(c.incr, if_seq_flag, loop_nc_flag)
        c, kids = ForAnn(a, b, c.inv, c.incr_inv), (pa, pb)
    return c, Plan(tuple(ops), kids)


_UNDO = {"assoc": seq_assoc_inv, "if_seq": if_seq, "loop_nc": loop_nocontinue}


def restore(tree, plan):
    """Carry a proof of the prepared command back to the original one."""
    if not plan.changed:
        return tree
    if plan.kids:
        concl = conclusion(tree)
        cmd = concl.cmd
        k0, k1 = plan.kids
        if type(cmd) is Seq:
            s = inv_seq(tree)
            tree = RSeq(s.mid, restore(s.left, k0), restore(s.right, k1))
        elif type(cmd) is If:
            a, b = inv_if(tree)
            tree = conseq(RIf(cmd.cond, restore(a, k0), restore(b, k1)), pre=concl.pre)
        elif type(cmd) is For:
            ls = inv_loop(tree)
            loop = RLoop(ls.i1, ls.i2, restore(ls.body, k0), restore(ls.incr, k1))
            tree = conseq(loop, concl.pre, *concl.posts)
    for op in reversed(plan.ops):
        tree = _UNDO[op](tree)
    return tree


# ---------------------------------------------------------------------------
# discharge


@dataclass
class VCResult:
    vc: VC
    verdict: Verdict

    def __str__(self):
        return f"{self.vc}  => {self.verdict}"


@dataclass
class DischargeReport:
    results: list = field(default_factory=list)

    @property
    def ok(self):
        return all(r.verdict.ok for r in self.results)

    @property
    def failures(self):
        return [r for r in self.results if not r.verdict.ok]


def discharge(vcs, fp, cap=lang.DEFAULT_CAP) -> DischargeReport:
    return DischargeReport([VCResult(v, entails(v.lhs, v.rhs, fp, cap)) for v in vcs])


# ---------------------------------------------------------------------------
# spec files and the end-to-end pipeline


@dataclass
class Spec:
    pre: object = TRUE
    post: object = TRUE
    brk: object = FALSE
    con: object = FALSE
    vars: tuple | None = None
    modulus: int | None = None
    program: str | None = None


_SPEC_KEYS = ("vars", "modulus", "pre", "post", "brk", "con", "program")
_KEY_RE = re.compile(r"^[ \t]*(" + "|".join(_SPEC_KEYS) + r")[ \t]*:", re.M)


def parse_spec(text: str) -> Spec:
    """Spec file: ``key: value`` entries; a value runs until the next key line."""
    matches = list(_KEY_RE.finditer(text))
    head = text[:matches[0].start()] if matches else text
    if re.sub(r"#[^\n]*", "", head).strip():
        line = 1
        raise ParseError("expected a spec entry such as 'pre:'", line, 1)
    spec = Spec()
    seen = set()
    for i, m in enumerate(matches):
        key = m.group(1)
        line = text.count("\n", 0, m.start()) + 1
        if key in seen:
            raise ParseError(f"duplicate spec entry {key!r}", line, 1)
        seen.add(key)
        end = matches[i + 1].start() if i + 1 < len(matches) else len(text)
        # pad with newlines so parse errors report file line numbers
        value = "\n" * (line - 1) + " " * (m.end() - m.start()) + text[m.end():end]
        if key == "program":
            spec.program = value
        elif key == "vars":
            names = re.sub(r"#[^\n]*", "", text[m.end():end]).replace(",", " ").split()
            for n in names:
                if not re.fullmatch(r"[A-Za-z_][A-Za-z_0-9']*", n):
                    raise ParseError(f"bad variable name {n!r}", line, 1)
            spec.vars = tuple(names)
        elif key == "modulus":
            s = re.sub(r"#[^\n]*", "", text[m.end():end]).strip()
            if not s.isdigit():
                raise ParseError(f"modulus must be a number, got {s!r}", line, 1)
            spec.modulus = int(s)
        else:
            setattr(spec, key, parse_assertion(value))
    return spec


def spec_footprint(spec: Spec, cmd=None, fp=None) -> Footprint:
    if fp is not None:
        return fp
    names = spec.vars
    if not names:
        used = set()
        for a in (spec.pre, spec.post, spec.brk, spec.con):
            used |= prog_vars(a)
        if cmd is not None:
            used |= annotation_vars(cmd)
        names = tuple(sorted(used)) or ("x",)
    return Footprint(names, spec.modulus or lang.DEFAULT_MODULUS)


@dataclass
class VerifyResult:
    ok: bool
    certificate: Certificate | None = None
    vcs: list = field(default_factory=list)
    results: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    transforms: list = field(default_factory=list)
    footprint: Footprint | None = None

    @property
    def residual_goals(self):
        """VCs other than definedness side conditions."""
        return [v for v in self.vcs if v.kind != "safety"]

    @property
    def failures(self):
        return [r for r in self.results if not r.verdict.ok]


def verify(ac, spec: Spec, fp, if_seq=None, loop_nocontinue=None, cap=lang.DEFAULT_CAP,
           source=None) -> VerifyResult:
    """Verify an annotated command against a spec on a fixed footprint."""
    extra = annotation_vars(ac)
    for a in (spec.pre, spec.post, spec.brk, spec.con):
        extra |= prog_vars(a)
    extra -= set(fp.vars)
    if extra:
        return VerifyResult(False, errors=[f"variables {sorted(extra)} are outside the footprint"],
                            footprint=fp)
    prepared, plan = prepare(ac, if_seq, loop_nocontinue)
    try:
        tree, posts, vcs = symexec(prepared, spec.pre, fp)
    except (AnnotationMissing, ShapeError) as exc:
        return VerifyResult(False, errors=[str(exc)], footprint=fp)
    ex = SymExec(fp)
    ex.vc(posts.normal, spec.post, "root:postcondition")
    ex.vc(posts.brk, spec.brk, "root:break postcondition")
    ex.vc(posts.con, spec.con, "root:continue postcondition")
    vcs = vcs + ex.vcs
    tree = conseq(tree, spec.pre, spec.post, spec.brk, spec.con)
    report = discharge(vcs, fp, cap)
    result = VerifyResult(report.ok, vcs=vcs, results=report.results,
                          transforms=plan.all_ops(), footprint=fp)
    if not report.ok:
        return result
    tree = restore(tree, plan)
    rep = check(tree, fp, cap)
    if not rep.ok:
        result.ok = False
        result.errors = [f"internal: emitted proof does not check: {rep}"]
        return result
    plain = erase(ac)
    if conclusion(tree).cmd != plain:
        result.ok = False
        result.errors = ["internal: proof is about a different program"]
        return result
    src = source if source is not None else lang.pretty(plain)
    result.certificate = Certificate(tree, fp, source_hash(src))
    return result


def verify_file(program_text, spec_text, fp=None, if_seq=None, loop_nocontinue=None,
                cap=lang.DEFAULT_CAP) -> VerifyResult:
    """Parse, preprocess, execute, discharge and emit a checked certificate.

    ``program_text`` may be None when the spec has a ``program:`` entry.
    Parse errors propagate as ParseError; everything else is reported in
    the result.
    """
    spec = parse_spec(spec_text)
    text = program_text if program_text is not None else spec.program
    if text is None:
        raise ParseError("no program given and the spec has no 'program:' entry")
    ac = parse_annotated(text)
    fp = spec_footprint(spec, ac, fp)
    if fp.size > cap:
        raise CapExceeded(f"{fp.size} states exceed the enumeration cap {cap}")
    return verify(ac, spec, fp, if_seq, loop_nocontinue, cap, source=text)


__all__ = [
    "ForAnn", "MidAssert", "AnnotatedParser", "parse_annotated", "erase", "pretty_annotated",
    "VC", "forward_assign", "symexec", "prepare", "restore", "Plan", "discharge",
    "DischargeReport", "VCResult", "Spec", "parse_spec", "spec_footprint", "VerifyResult",
    "verify", "verify_file", "Certificate",
]
