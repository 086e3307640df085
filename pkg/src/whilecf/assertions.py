"""Assertions over program states, with logic variables and finite-domain entailment.

Terms mirror expressions but may mention logic variables.  An atom whose
term cannot be evaluated (zero divisor) is false.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import lang
from .errors import CapExceeded, EvalError, ParseError
from .lang import (Const, Expr, Footprint, State, TokenStream, Unary, Var,
                   enumerate_states, expr_vars, subst_expr)
from .verdict import Verdict

# ---------------------------------------------------------------------------
# terms

# infix term operators; everything else prints in function style
INFIX_TERM_OPS = ("+", "-", "*", "/", "%")
FUNC_NAMES = {"neg": "neg", "not": "not", "==": "eq", "!=": "ne", "<": "lt", "<=": "le",
              ">": "gt", ">=": "ge", "and": "and", "or": "or"}
FUNC_OPS = {v: k for k, v in FUNC_NAMES.items()}
FUNC_ARITY = {"neg": 1, "not": 1}


class ATerm:
    __slots__ = ()


@dataclass(frozen=True)
class LVar(ATerm):
    name: str


@dataclass(frozen=True)
class Lit(ATerm):
    value: int


@dataclass(frozen=True)
class Prog(ATerm):
    expr: Expr


@dataclass(frozen=True)
class Arith(ATerm):
    op: str
    args: tuple


# ---------------------------------------------------------------------------
# formulas


class Assertion:
    __slots__ = ()

    def __and__(self, other):
        return And(self, other)

    def __or__(self, other):
        return Or(self, other)

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True)
class TrueA(Assertion):
    pass


@dataclass(frozen=True)
class FalseA(Assertion):
    pass


@dataclass(frozen=True)
class Cmp(Assertion):
    rel: str  # '=', '<=', '<'
    left: ATerm
    right: ATerm


@dataclass(frozen=True)
class Not(Assertion):
    arg: Assertion


@dataclass(frozen=True)
class And(Assertion):
    left: Assertion
    right: Assertion


@dataclass(frozen=True)
class Or(Assertion):
    left: Assertion
    right: Assertion


@dataclass(frozen=True)
class Implies(Assertion):
    left: Assertion
    right: Assertion


@dataclass(frozen=True)
class Forall(Assertion):
    var: str
    body: Assertion


@dataclass(frozen=True)
class Exists(Assertion):
    var: str
    body: Assertion


TRUE = TrueA()
FALSE = FalseA()
RELS = ("=", "<=", "<")


# ---------------------------------------------------------------------------
# smart constructors used by rules and transformers


def conj(*ps):
    """Left-nested conjunction, dropping true conjuncts."""
    out = None
    for p in ps:
        if p == TRUE:
            continue
        if p == FALSE:
            return FALSE
        out = p if out is None else And(out, p)
    return TRUE if out is None else out


def disj(a, b):
    """Disjunction that drops false operands and collapses a \\/ a."""
    if a == FALSE:
        return b
    if b == FALSE:
        return a
    if a == b:
        return a
    return Or(a, b)


def disj_all(ps):
    out = FALSE
    for p in ps:
        out = disj(out, p)
    return out


def prog_eq(e, v):
    return Cmp("=", Prog(e), v if isinstance(v, ATerm) else Lit(v))


def cond_true(e: Expr) -> Assertion:
    """[e] is nonzero, as a strict atom (false when e errors)."""
    return Cmp("<", Lit(0), Prog(e))


def cond_false(e: Expr) -> Assertion:
    return Cmp("=", Prog(e), Lit(0))


def defined(e: Expr) -> Assertion:
    """Holds exactly where e evaluates without error."""
    return Cmp("=", Prog(e), Prog(e))


def conjuncts(p):
    if isinstance(p, And):
        return conjuncts(p.left) + conjuncts(p.right)
    return [p]


def with_defined(p: Assertion, e: Expr) -> Assertion:
    """p, strengthened by definedness of e when e may fail."""
    if not lang.expr_may_fail(e):
        return p
    d = defined(e)
    if d in conjuncts(p):
        return p
    return conj(p, d)


# ---------------------------------------------------------------------------
# free variables and substitution


def term_lvars(t) -> set:
    tt = type(t)
    if tt is LVar:
        return {t.name}
    if tt is Arith:
        out = set()
        for a in t.args:
            out |= term_lvars(a)
        return out
    return set()


def free_lvars(p) -> set:
    t = type(p)
    if t is Cmp:
        return term_lvars(p.left) | term_lvars(p.right)
    if t is Not:
        return free_lvars(p.arg)
    if t in (And, Or, Implies):
        return free_lvars(p.left) | free_lvars(p.right)
    if t in (Forall, Exists):
        return free_lvars(p.body) - {p.var}
    return set()


def all_lvars(p) -> set:
    """Free and bound logic variable names."""
    t = type(p)
    if t is Cmp:
        return term_lvars(p.left) | term_lvars(p.right)
    if t is Not:
        return all_lvars(p.arg)
    if t in (And, Or, Implies):
        return all_lvars(p.left) | all_lvars(p.right)
    if t in (Forall, Exists):
        return all_lvars(p.body) | {p.var}
    return set()


def term_pvars(t) -> set:
    tt = type(t)
    if tt is Prog:
        return expr_vars(t.expr)
    if tt is Arith:
        out = set()
        for a in t.args:
            out |= term_pvars(a)
        return out
    return set()


def prog_vars(p) -> set:
    t = type(p)
    if t is Cmp:
        return term_pvars(p.left) | term_pvars(p.right)
    if t is Not:
        return prog_vars(p.arg)
    if t in (And, Or, Implies):
        return prog_vars(p.left) | prog_vars(p.right)
    if t in (Forall, Exists):
        return prog_vars(p.body)
    return set()


def map_terms(p, f):
    """Rebuild p with every atom's terms passed through f."""
    t = type(p)
    if t is Cmp:
        return Cmp(p.rel, f(p.left), f(p.right))
    if t is Not:
        return Not(map_terms(p.arg, f))
    if t in (And, Or, Implies):
        return t(map_terms(p.left, f), map_terms(p.right, f))
    if t in (Forall, Exists):
        return t(p.var, map_terms(p.body, f))
    return p


def _subst_term(t, x, e):
    tt = type(t)
    if tt is Prog:
        return Prog(subst_expr(t.expr, x, e))
    if tt is Arith:
        return Arith(t.op, tuple(_subst_term(a, x, e) for a in t.args))
    return t


def subst(p: Assertion, x: str, e: Expr) -> Assertion:
    """Replace program variable x by expression e inside every [.] of p."""
    return map_terms(p, lambda t: _subst_term(t, x, e))


def expr_to_term(e: Expr, x: str, replacement: ATerm) -> ATerm:
    """Term denoting e with program variable x read as ``replacement``."""
    if x not in expr_vars(e):
        return Prog(e)
    t = type(e)
    if t is Var:
        return replacement
    if t is Unary:
        return Arith(e.op, (expr_to_term(e.arg, x, replacement),))
    return Arith(e.op, (expr_to_term(e.left, x, replacement),
                        expr_to_term(e.right, x, replacement)))


def _pvar_to_term(t, x, r):
    tt = type(t)
    if tt is Prog:
        return expr_to_term(t.expr, x, r)
    if tt is Arith:
        return Arith(t.op, tuple(_pvar_to_term(a, x, r) for a in t.args))
    return t


def subst_pvar(p: Assertion, x: str, r: ATerm) -> Assertion:
    """Replace program variable x by the term r (e.g. a logic variable)."""
    return map_terms(p, lambda t: _pvar_to_term(t, x, r))


def _inst_term(t, v, r):
    tt = type(t)
    if tt is LVar:
        return r if t.name == v else t
    if tt is Arith:
        return Arith(t.op, tuple(_inst_term(a, v, r) for a in t.args))
    return t


def fresh_name(base, avoid):
    if base not in avoid:
        return base
    for i in itertools.count(1):
        cand = f"{base}{i}"
        if cand not in avoid:
            return cand


def inst(p: Assertion, v: str, r: ATerm) -> Assertion:
    """Capture-avoiding substitution of logic variable v by term r."""
    t = type(p)
    if t is Cmp:
        return Cmp(p.rel, _inst_term(p.left, v, r), _inst_term(p.right, v, r))
    if t is Not:
        return Not(inst(p.arg, v, r))
    if t in (And, Or, Implies):
        return t(inst(p.left, v, r), inst(p.right, v, r))
    if t in (Forall, Exists):
        if p.var == v:
            return p
        rv = term_lvars(r)
        if p.var in rv:
            nv = fresh_name(p.var, rv | all_lvars(p.body) | {v})
            body = inst(p.body, p.var, LVar(nv))
            return t(nv, inst(body, v, r))
        return t(p.var, inst(p.body, v, r))
    return p


# ---------------------------------------------------------------------------
# semantics (compiled to closures, cached per footprint)

_FAIL = object()


def _compile_expr(e, idx, m):
    t = type(e)
    if t is Var:
        i = idx[e.name]
        return lambda vals, env: vals[i]
    if t is Const:
        c = e.value % m
        return lambda vals, env: c
    if t is Unary:
        f = _compile_expr(e.arg, idx, m)
        op = e.op
        if op == "neg":
            return lambda vals, env: (-f(vals, env)) % m
        return lambda vals, env: int(f(vals, env) == 0)
    return _compile_bin(e.op, _compile_expr(e.left, idx, m), _compile_expr(e.right, idx, m), m)


def _compile_bin(op, f, g, m):
    if op == "+":
        return lambda vals, env: (f(vals, env) + g(vals, env)) % m
    if op == "-":
        return lambda vals, env: (f(vals, env) - g(vals, env)) % m
    if op == "*":
        return lambda vals, env: (f(vals, env) * g(vals, env)) % m

    def h(vals, env):
        return lang.apply_op(op, f(vals, env), g(vals, env), m)
    return h


def _compile_term(t, idx, m):
    tt = type(t)
    if tt is LVar:
        name = t.name
        return lambda vals, env: env[name]
    if tt is Lit:
        c = t.value % m
        return lambda vals, env: c
    if tt is Prog:
        return _compile_expr(t.expr, idx, m)
    fs = [_compile_term(a, idx, m) for a in t.args]
    if len(fs) == 1:
        f = fs[0]
        op = t.op
        return lambda vals, env: lang.apply_unary(op, f(vals, env), m)
    return _compile_bin(t.op, fs[0], fs[1], m)


def _compile(p, idx, m):
    t = type(p)
    if t is TrueA:
        return lambda vals, env: True
    if t is FalseA:
        return lambda vals, env: False
    if t is Cmp:
        f = _compile_term(p.left, idx, m)
        g = _compile_term(p.right, idx, m)
        rel = p.rel

        def atom(vals, env):
            try:
                a = f(vals, env)
                b = g(vals, env)
            except EvalError:
                return False
            if rel == "=":
                return a == b
            if rel == "<=":
                return a <= b
            return a < b
        return atom
    if t is Not:
        f = _compile(p.arg, idx, m)
        return lambda vals, env: not f(vals, env)
    if t is And:
        f, g = _compile(p.left, idx, m), _compile(p.right, idx, m)
        return lambda vals, env: f(vals, env) and g(vals, env)
    if t is Or:
        f, g = _compile(p.left, idx, m), _compile(p.right, idx, m)
        return lambda vals, env: f(vals, env) or g(vals, env)
    if t is Implies:
        f, g = _compile(p.left, idx, m), _compile(p.right, idx, m)
        return lambda vals, env: (not f(vals, env)) or g(vals, env)
    if t in (Forall, Exists):
        body = _compile(p.body, idx, m)
        v = p.var
        want_all = t is Forall
        rng = range(m)

        def quant(vals, env):
            saved = env.get(v, _FAIL)
            try:
                for d in rng:
                    env[v] = d
                    r = body(vals, env)
                    if want_all and not r:
                        return False
                    if not want_all and r:
                        return True
                return want_all
            finally:
                if saved is _FAIL:
                    del env[v]
                else:
                    env[v] = saved
        return quant
    raise TypeError(f"not an assertion: {p!r}")


_CACHE: dict = {}
_CACHE_LIMIT = 20000


def compile_assertion(p: Assertion, fp: Footprint):
    """Closure (vals, env) -> bool for p over fp; env is a mutable dict."""
    key = (p, fp.vars, fp.modulus)
    f = _CACHE.get(key)
    if f is None:
        missing = prog_vars(p) - set(fp.vars)
        if missing:
            raise KeyError(f"assertion mentions variables outside the footprint: {sorted(missing)}")
        f = _compile(p, fp.index, fp.modulus)
        if len(_CACHE) > _CACHE_LIMIT:
            _CACHE.clear()
        _CACHE[key] = f
    return f


def satisfies(st: State, env, p: Assertion) -> bool:
    missing = free_lvars(p) - set(env or {})
    if missing:
        raise KeyError(f"unbound logic variables: {sorted(missing)}")
    return compile_assertion(p, st.fp)(st.vals, dict(env or {}))


def eval_term(t: ATerm, st: State, env=None):
    """Value of a term, or None when it errors."""
    try:
        return _compile_term(t, st.fp.index, st.fp.modulus)(st.vals, dict(env or {}))
    except EvalError:
        return None


def envs_for(names, fp: Footprint):
    names = sorted(names)
    for vals in itertools.product(range(fp.modulus), repeat=len(names)):
        yield dict(zip(names, vals))


def check_budget(fp, n_lvars, cap=lang.DEFAULT_CAP):
    total = fp.size * fp.modulus ** n_lvars
    if total > cap:
        raise CapExceeded(f"{total} (state, environment) pairs exceed the cap {cap}")


def entails(p: Assertion, q: Assertion, fp: Footprint, cap=lang.DEFAULT_CAP) -> Verdict:
    """Finite-domain check of p |- q; free logic variables are universal."""
    if p == FALSE or q == TRUE or p == q:
        return Verdict.holds()
    names = sorted(free_lvars(p) | free_lvars(q))
    check_budget(fp, len(names), cap)
    fp_ = compile_assertion(p, fp)
    fq = compile_assertion(q, fp)
    envs = list(envs_for(names, fp))
    for st in enumerate_states(fp, cap):
        vals = st.vals
        for env in envs:
            if fp_(vals, env) and not fq(vals, env):
                return Verdict.counterexample(st, env)
    return Verdict.holds()


def models(p: Assertion, fp: Footprint, env=None, cap=lang.DEFAULT_CAP):
    """States satisfying p under env (free logic vars must be bound)."""
    f = compile_assertion(p, fp)
    env = dict(env or {})
    return [st for st in enumerate_states(fp, cap) if f(st.vals, env)]


def state_formula(st: State) -> Assertion:
    return conj(*[prog_eq(Var(v), Lit(val)) for v, val in zip(st.fp.vars, st.vals)])


def states_formula(states) -> Assertion:
    """Disjunctive description of an explicit state set (false when empty)."""
    return disj_all(state_formula(s) for s in sorted(set(states), key=lambda s: s.vals))


# ---------------------------------------------------------------------------
# parsing


class AssertionParser:
    def __init__(self, ts: TokenStream):
        self.ts = ts

    def parse(self):
        p = self.assertion()
        self.ts.expect_eof()
        return p

    def assertion(self):
        ts = self.ts
        if ts.at("exists") or ts.at("forall"):
            q = ts.next().text
            names = [ts.ident("logic variable")]
            while ts.peek().kind == "ident" and not ts.at("."):
                names.append(ts.ident("logic variable"))
            ts.expect(".")
            body = self.assertion()
            ctor = Exists if q == "exists" else Forall
            for n in reversed(names):
                body = ctor(n, body)
            return body
        return self.implication()

    def implication(self):
        left = self.disjunction()
        if self.ts.accept("->"):
            return Implies(left, self.assertion())
        return left

    def disjunction(self):
        p = self.conjunction()
        while self.ts.accept("\\/"):
            p = Or(p, self.conjunction())
        return p

    def conjunction(self):
        p = self.unary()
        while self.ts.accept("/\\"):
            p = And(p, self.unary())
        return p

    def unary(self):
        ts = self.ts
        if ts.accept("~"):
            return Not(self.unary())
        if ts.at("exists") or ts.at("forall"):
            return self.assertion()
        if ts.accept("true"):
            return TRUE
        if ts.accept("false"):
            return FALSE
        if ts.at("("):
            save = ts.i
            try:
                return self.comparison()
            except ParseError:
                ts.i = save
            ts.next()
            p = self.assertion()
            ts.expect(")")
            return p
        return self.comparison()

    def comparison(self):
        ts = self.ts
        left = self.term()
        t = ts.peek()
        if t.kind == "sym" and t.text in ("=", "<=", "<", "!=", ">=", ">"):
            ts.next()
            right = self.term()
            if t.text in RELS:
                return Cmp(t.text, left, right)
            if t.text == "!=":
                return Not(Cmp("=", left, right))
            if t.text == ">=":
                return Cmp("<=", right, left)
            return Cmp("<", right, left)
        raise ts.error("expected a relation (=, <=, <)")

    def term(self):
        t = self.product()
        while self.ts.peek().kind == "sym" and self.ts.peek().text in ("+", "-"):
            op = self.ts.next().text
            t = Arith(op, (t, self.product()))
        return t

    def product(self):
        t = self.term_atom()
        while self.ts.peek().kind == "sym" and self.ts.peek().text in ("*", "/", "%"):
            op = self.ts.next().text
            t = Arith(op, (t, self.term_atom()))
        return t

    def term_atom(self):
        ts = self.ts
        tok = ts.peek()
        if tok.kind == "num":
            ts.next()
            return Lit(int(tok.text))
        if ts.accept("["):
            e = lang.parse_expr_stream(ts)
            ts.expect("]")
            return Prog(e)
        if ts.accept("("):
            t = self.term()
            ts.expect(")")
            return t
        if tok.kind == "ident" and tok.text in FUNC_OPS and ts.at("(", 1):
            name = ts.next().text
            ts.expect("(")
            args = [self.term()]
            while ts.accept(","):
                args.append(self.term())
            ts.expect(")")
            op = FUNC_OPS[name]
            if len(args) != FUNC_ARITY.get(op, 2):
                raise ParseError(f"{name} expects {FUNC_ARITY.get(op, 2)} arguments", tok.line, tok.col)
            return Arith(op, tuple(args))
        if tok.kind == "ident" and tok.text not in lang.KEYWORDS:
            ts.next()
            return LVar(tok.text)
        raise ts.error("expected a term")


def parse_assertion(text: str) -> Assertion:
    return AssertionParser(TokenStream(text)).parse()


def parse_assertion_stream(ts: TokenStream) -> Assertion:
    return AssertionParser(ts).assertion()


# ---------------------------------------------------------------------------
# printing

_TERM_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "%": 2}


def pretty_term(t, ctx=0) -> str:
    tt = type(t)
    if tt is LVar:
        return t.name
    if tt is Lit:
        return str(t.value)
    if tt is Prog:
        return "[" + lang.pretty_expr(t.expr) + "]"
    if t.op in _TERM_PREC:
        p = _TERM_PREC[t.op]
        s = f"{pretty_term(t.args[0], p)} {t.op} {pretty_term(t.args[1], p + 1)}"
        return "(" + s + ")" if p < ctx else s
    return FUNC_NAMES[t.op] + "(" + ", ".join(pretty_term(a) for a in t.args) + ")"


def _prec(p):
    t = type(p)
    if t in (Forall, Exists):
        return 0
    if t is Implies:
        return 1
    if t is Or:
        return 2
    if t is And:
        return 3
    return 5


def pretty_assertion(p: Assertion, ctx: int = 0) -> str:
    t = type(p)
    if t is TrueA:
        s = "true"
    elif t is FalseA:
        s = "false"
    elif t is Cmp:
        s = f"{pretty_term(p.left)} {p.rel} {pretty_term(p.right)}"
    elif t is Not:
        s = "~" + pretty_assertion(p.arg, 5)
    elif t is And:
        s = f"{pretty_assertion(p.left, 3)} /\\ {pretty_assertion(p.right, 4)}"
    elif t is Or:
        s = f"{pretty_assertion(p.left, 2)} \\/ {pretty_assertion(p.right, 3)}"
    elif t is Implies:
        s = f"{pretty_assertion(p.left, 2)} -> {pretty_assertion(p.right, 1)}"
    elif t in (Forall, Exists):
        q = "forall" if t is Forall else "exists"
        s = f"{q} {p.var}. {pretty_assertion(p.body, 0)}"
    else:
        raise TypeError(f"not an assertion: {p!r}")
    # quantifiers extend to the right, so they are bracketed whenever nested
    if _prec(p) < ctx or (_prec(p) == 0 and ctx > 0):
        return "(" + s + ")"
    return s
