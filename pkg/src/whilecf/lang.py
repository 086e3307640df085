"""While-CF syntax, states, expression evaluation and random programs.

Values are residues modulo a footprint-wide modulus M.  Division and
modulus by zero are the only run-time errors.
"""
from __future__ import annotations

import enum
import itertools
import random
import re
from dataclasses import dataclass, field

from .errors import CapExceeded, EvalError, ParseError

DEFAULT_MODULUS = 8
DEFAULT_CAP = 2_000_000


# ---------------------------------------------------------------------------
# footprint and states


@dataclass(frozen=True)
class Footprint:
    vars: tuple
    modulus: int = DEFAULT_MODULUS
    index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        vs = tuple(self.vars)
        object.__setattr__(self, "vars", vs)
        if not vs:
            raise ValueError("footprint needs at least one variable")
        if len(set(vs)) != len(vs):
            raise ValueError(f"duplicate variables in footprint: {vs}")
        if int(self.modulus) < 2:
            raise ValueError("modulus must be at least 2")
        object.__setattr__(self, "index", {v: i for i, v in enumerate(vs)})

    def state(self, values=None, **kw) -> "State":
        """Build a state; unspecified variables default to 0."""
        d = dict(values or {}, **kw)
        unknown = set(d) - set(self.vars)
        if unknown:
            raise KeyError(f"not in footprint: {sorted(unknown)}")
        return State(self, tuple(int(d.get(v, 0)) % self.modulus for v in self.vars))

    @property
    def size(self):
        return self.modulus ** len(self.vars)


class State:
    """Immutable total map from footprint variables to residues."""

    __slots__ = ("fp", "vals", "_h")

    def __init__(self, fp: Footprint, vals):
        self.fp = fp
        self.vals = tuple(vals)
        self._h = None

    def __getitem__(self, name):
        return self.vals[self.fp.index[name]]

    def get(self, name, default=None):
        i = self.fp.index.get(name)
        return default if i is None else self.vals[i]

    def set(self, name, value) -> "State":
        i = self.fp.index[name]
        vals = list(self.vals)
        vals[i] = value % self.fp.modulus
        return State(self.fp, vals)

    def as_dict(self):
        return dict(zip(self.fp.vars, self.vals))

    def __eq__(self, other):
        return (isinstance(other, State) and self.vals == other.vals
                and self.fp.vars == other.fp.vars)

    def __hash__(self):
        if self._h is None:
            self._h = hash((self.fp.vars, self.vals))
        return self._h

    def __repr__(self):
        return "{" + ", ".join(f"{k}:{v}" for k, v in zip(self.fp.vars, self.vals)) + "}"


def enumerate_states(fp: Footprint, cap: int = DEFAULT_CAP):
    """All M^|vars| states in lexicographic order."""
    if fp.size > cap:
        raise CapExceeded(f"{fp.size} states exceed the enumeration cap {cap}")
    return [State(fp, vals) for vals in itertools.product(range(fp.modulus), repeat=len(fp.vars))]


class ExitKind(enum.Enum):
    NORMAL = "Normal"
    BRK = "Brk"
    CON = "Con"

    def __repr__(self):
        return self.value

    __str__ = __repr__


# ---------------------------------------------------------------------------
# abstract syntax

UNARY_OPS = ("neg", "not")
ARITH_OPS = ("+", "-", "*", "/", "%")
CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")
LOGIC_OPS = ("and", "or")
BINARY_OPS = ARITH_OPS + CMP_OPS + LOGIC_OPS


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    value: int


@dataclass(frozen=True)
class Var(Expr):
    name: str


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    arg: Expr


@dataclass(frozen=True)
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


class Command:
    __slots__ = ()


@dataclass(frozen=True)
class Skip(Command):
    pass


@dataclass(frozen=True)
class Break(Command):
    pass


@dataclass(frozen=True)
class Continue(Command):
    pass


@dataclass(frozen=True)
class Assign(Command):
    name: str
    expr: Expr


@dataclass(frozen=True)
class Seq(Command):
    first: Command
    second: Command


@dataclass(frozen=True)
class If(Command):
    cond: Expr
    then: Command
    els: Command


@dataclass(frozen=True)
class For(Command):
    body: Command
    incr: Command


SKIP = Skip()
BREAK = Break()
CONTINUE = Continue()


def seq(*cmds):
    """Right-nested sequence of the given commands (skip when empty)."""
    if not cmds:
        return SKIP
    out = cmds[-1]
    for c in reversed(cmds[:-1]):
        out = Seq(c, out)
    return out


# ---------------------------------------------------------------------------
# evaluation


def apply_op(op, a, b, m):
    """Apply a binary operator to residues; raises EvalError on zero divisors."""
    if op == "+":
        return (a + b) % m
    if op == "-":
        return (a - b) % m
    if op == "*":
        return (a * b) % m
    if op == "/":
        if b == 0:
            raise EvalError("division by zero")
        return a // b
    if op == "%":
        if b == 0:
            raise EvalError("modulus by zero")
        return a % b
    if op == "==":
        return int(a == b)
    if op == "!=":
        return int(a != b)
    if op == "<":
        return int(a < b)
    if op == "<=":
        return int(a <= b)
    if op == ">":
        return int(a > b)
    if op == ">=":
        return int(a >= b)
    if op == "and":
        return int(a != 0 and b != 0)
    if op == "or":
        return int(a != 0 or b != 0)
    raise ValueError(f"unknown operator {op!r}")


def apply_unary(op, a, m):
    if op == "neg":
        return (-a) % m
    if op == "not":
        return int(a == 0)
    raise ValueError(f"unknown operator {op!r}")


def eval_expr(e: Expr, st: State) -> int:
    m = st.fp.modulus
    t = type(e)
    if t is Var:
        return st[e.name]
    if t is Const:
        return e.value % m
    if t is Binary:
        # both operands are always evaluated, so errors never hide behind and/or
        a = eval_expr(e.left, st)
        b = eval_expr(e.right, st)
        return apply_op(e.op, a, b, m)
    if t is Unary:
        return apply_unary(e.op, eval_expr(e.arg, st), m)
    raise TypeError(f"not an expression: {e!r}")


def try_eval(e, st):
    """eval_expr, but None instead of EvalError."""
    try:
        return eval_expr(e, st)
    except EvalError:
        return None


def expr_vars(e: Expr) -> set:
    t = type(e)
    if t is Var:
        return {e.name}
    if t is Const:
        return set()
    if t is Unary:
        return expr_vars(e.arg)
    return expr_vars(e.left) | expr_vars(e.right)


def expr_may_fail(e: Expr) -> bool:
    """True unless every divisor in e is a nonzero constant."""
    t = type(e)
    if t in (Var, Const):
        return False
    if t is Unary:
        return expr_may_fail(e.arg)
    if e.op in ("/", "%"):
        r = e.right
        if not (type(r) is Const and r.value != 0):
            return True
    return expr_may_fail(e.left) or expr_may_fail(e.right)


def subst_expr(e: Expr, x: str, r: Expr) -> Expr:
    t = type(e)
    if t is Var:
        return r if e.name == x else e
    if t is Const:
        return e
    if t is Unary:
        return Unary(e.op, subst_expr(e.arg, x, r))
    return Binary(e.op, subst_expr(e.left, x, r), subst_expr(e.right, x, r))


# ---------------------------------------------------------------------------
# syntactic queries


def has_toplevel_continue(c: Command) -> bool:
    """Is there a continue in c that no loop inside c encloses?"""
    t = type(c)
    if t is Continue:
        return True
    if t is Seq:
        return has_toplevel_continue(c.first) or has_toplevel_continue(c.second)
    if t is If:
        return has_toplevel_continue(c.then) or has_toplevel_continue(c.els)
    return False


def command_size(c: Command) -> int:
    t = type(c)
    if t is Seq:
        return 1 + command_size(c.first) + command_size(c.second)
    if t is If:
        return 1 + command_size(c.then) + command_size(c.els)
    if t is For:
        return 1 + command_size(c.body) + command_size(c.incr)
    return 1


def command_vars(c: Command) -> set:
    t = type(c)
    if t is Assign:
        return {c.name} | expr_vars(c.expr)
    if t is Seq:
        return command_vars(c.first) | command_vars(c.second)
    if t is If:
        return expr_vars(c.cond) | command_vars(c.then) | command_vars(c.els)
    if t is For:
        return command_vars(c.body) | command_vars(c.incr)
    return set()


def children(c: Command):
    t = type(c)
    if t is Seq:
        return (c.first, c.second)
    if t is If:
        return (c.then, c.els)
    if t is For:
        return (c.body, c.incr)
    return ()


def subcommands(c: Command):
    """Pre-order traversal of all command nodes."""
    yield c
    for ch in children(c):
        yield from subcommands(ch)


def constructor_name(c: Command) -> str:
    return type(c).__name__


# ---------------------------------------------------------------------------
# lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\#[^\n]*)
  | (?P<num>\d+)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9']*)
  | (?P<sym>;;|/\\|\\/|->|==|!=|<=|>=|[<>=+\-*/%()\[\]{}.:~,])
""", re.VERBOSE)

KEYWORDS = {"skip", "break", "continue", "if", "then", "else", "for",
            "and", "or", "not", "assert", "true", "false", "exists", "forall"}


@dataclass
class Token:
    kind: str  # 'num' | 'ident' | 'sym' | 'eof'
    text: str
    pos: int
    line: int
    col: int


def tokenize(text: str):
    toks = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        s = m.group()
        if kind != "ws":
            toks.append(Token(kind, s, pos, line, pos - line_start + 1))
        nl = s.count("\n")
        if nl:
            line += nl
            line_start = pos + s.rindex("\n") + 1
        pos = m.end()
    toks.append(Token("eof", "", n, line, n - line_start + 1))
    return toks


class TokenStream:
    """Shared cursor for the recursive-descent parsers."""

    def __init__(self, text_or_tokens, text=None):
        if isinstance(text_or_tokens, str):
            self.text = text_or_tokens
            self.toks = tokenize(text_or_tokens)
        else:
            self.text = text
            self.toks = text_or_tokens
        self.i = 0

    def peek(self, k=0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text, k=0):
        t = self.peek(k)
        return t.kind in ("sym", "ident") and t.text == text

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        return ParseError(f"{msg}, found {found}", tok.line, tok.col)

    def expect(self, text):
        if not self.at(text):
            raise self.error(f"expected {text!r}")
        return self.next()

    def accept(self, text):
        if self.at(text):
            return self.next()
        return None

    def ident(self, what="identifier"):
        t = self.peek()
        if t.kind != "ident" or t.text in KEYWORDS:
            raise self.error(f"expected {what}")
        return self.next().text

    def expect_eof(self):
        if self.peek().kind != "eof":
            raise self.error("unexpected trailing input")


# ---------------------------------------------------------------------------
# expression parsing / printing

_REL_SYMS = {"==", "!=", "<", "<=", ">", ">="}
PREC = {"or": 1, "and": 2, "not": 3, "==": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
        "+": 5, "-": 5, "*": 6, "/": 6, "%": 6, "neg": 7}


def parse_expr_stream(ts: TokenStream) -> Expr:
    return _p_or(ts)


def _p_or(ts):
    e = _p_and(ts)
    while ts.at("or"):
        ts.next()
        e = Binary("or", e, _p_and(ts))
    return e


def _p_and(ts):
    e = _p_not(ts)
    while ts.at("and"):
        ts.next()
        e = Binary("and", e, _p_not(ts))
    return e


def _p_not(ts):
    if ts.at("not"):
        ts.next()
        return Unary("not", _p_not(ts))
    return _p_cmp(ts)


def _p_cmp(ts):
    e = _p_add(ts)
    t = ts.peek()
    if t.kind == "sym" and t.text in _REL_SYMS:
        ts.next()
        e = Binary(t.text, e, _p_add(ts))
        t2 = ts.peek()
        if t2.kind == "sym" and t2.text in _REL_SYMS:
            raise ts.error("comparisons do not chain; add parentheses")
    return e


def _p_add(ts):
    e = _p_mul(ts)
    while ts.peek().kind == "sym" and ts.peek().text in ("+", "-"):
        op = ts.next().text
        e = Binary(op, e, _p_mul(ts))
    return e


def _p_mul(ts):
    e = _p_unary(ts)
    while ts.peek().kind == "sym" and ts.peek().text in ("*", "/", "%"):
        op = ts.next().text
        e = Binary(op, e, _p_unary(ts))
    return e


def _p_unary(ts):
    if ts.at("-"):
        ts.next()
        return Unary("neg", _p_unary(ts))
    t = ts.peek()
    if t.kind == "num":
        ts.next()
        return Const(int(t.text))
    if t.kind == "ident" and t.text not in KEYWORDS:
        ts.next()
        return Var(t.text)
    if ts.at("("):
        ts.next()
        e = _p_or(ts)
        ts.expect(")")
        return e
    raise ts.error("expected an expression")


def parse_expr(text: str) -> Expr:
    ts = TokenStream(text)
    e = parse_expr_stream(ts)
    ts.expect_eof()
    return e


def expr_prec(e):
    t = type(e)
    if t is Binary:
        return PREC[e.op]
    if t is Unary:
        return PREC[e.op]
    return 9


def pretty_expr(e: Expr, ctx: int = 0) -> str:
    t = type(e)
    if t is Const:
        s = str(e.value)
    elif t is Var:
        s = e.name
    elif t is Unary:
        p = PREC[e.op]
        inner = pretty_expr(e.arg, p)
        s = ("-" + inner) if e.op == "neg" else ("not " + inner)
    else:
        p = PREC[e.op]
        if p == 4:
            s = f"{pretty_expr(e.left, p + 1)} {e.op} {pretty_expr(e.right, p + 1)}"
        else:
            s = f"{pretty_expr(e.left, p)} {e.op} {pretty_expr(e.right, p + 1)}"
    if expr_prec(e) < ctx:
        return "(" + s + ")"
    return s


# ---------------------------------------------------------------------------
# command parsing / printing


class CommandParser:
    """Recursive-descent parser for the command grammar.

    ``;;`` binds loosest and is right-associative; if-branches and loop
    bodies are single atoms, so sequences there need parentheses.
    """

    def __init__(self, ts: TokenStream):
        self.ts = ts

    def parse(self):
        c = self.seq()
        self.ts.expect_eof()
        return c

    def seq(self):
        c = self.atom()
        if self.ts.accept(";;"):
            return self.make_seq(c, self.seq())
        return c

    def make_seq(self, a, b):
        return Seq(a, b)

    def atom(self):
        ts = self.ts
        t = ts.peek()
        if ts.at("skip"):
            ts.next()
            return SKIP
        if ts.at("break"):
            ts.next()
            return BREAK
        if ts.at("continue"):
            ts.next()
            return CONTINUE
        if ts.at("if"):
            ts.next()
            cond = parse_expr_stream(ts)
            ts.expect("then")
            a = self.atom()
            ts.expect("else")
            b = self.atom()
            return If(cond, a, b)
        if ts.at("for"):
            return self.loop()
        if ts.at("("):
            ts.next()
            c = self.seq()
            ts.expect(")")
            return c
        if t.kind == "ident" and t.text not in KEYWORDS:
            name = ts.next().text
            ts.expect("=")
            return Assign(name, parse_expr_stream(ts))
        return self.extra_atom()

    def extra_atom(self):
        raise self.ts.error("expected a command")

    def loop_header(self):
        self.ts.expect("(")
        self.ts.expect(";;")
        incr = self.seq()
        self.ts.expect(")")
        return incr

    def loop(self):
        self.ts.expect("for")
        incr = self.loop_header()
        body = self.atom()
        return For(body, incr)


def parse_command(text: str) -> Command:
    return CommandParser(TokenStream(text)).parse()


def _atom_str(c, printer):
    s = printer(c)
    return "(" + s + ")" if isinstance(c, Seq) else s


def pretty(c: Command) -> str:
    t = type(c)
    if t is Skip:
        return "skip"
    if t is Break:
        return "break"
    if t is Continue:
        return "continue"
    if t is Assign:
        return f"{c.name} = {pretty_expr(c.expr)}"
    if t is Seq:
        return f"{_atom_str(c.first, pretty)} ;; {pretty(c.second)}"
    if t is If:
        return (f"if {pretty_expr(c.cond)} then {_atom_str(c.then, pretty)}"
                f" else {_atom_str(c.els, pretty)}")
    if t is For:
        return f"for(;; {pretty(c.incr)}) {_atom_str(c.body, pretty)}"
    raise TypeError(f"not a command: {c!r}")


# ---------------------------------------------------------------------------
# random programs


@dataclass
class GenOptions:
    allow_break: bool = True
    allow_continue: bool = True
    allow_loops: bool = True
    allow_division: bool = True
    expr_depth: int = 2
    leaf_prob: float = 0.15


def _gen_expr(rng, fp, depth, opts, cond=False):
    if depth <= 0 or rng.random() < 0.35:
        if rng.random() < 0.6:
            return Var(rng.choice(fp.vars))
        return Const(rng.randrange(fp.modulus))
    if cond and rng.random() < 0.7:
        op = rng.choice(CMP_OPS)
    else:
        ops = ["+", "-", "*", "+", "-"] + list(CMP_OPS[:3]) + ["and", "or"]
        if opts.allow_division:
            ops += ["/", "%"]
        op = rng.choice(ops)
    if rng.random() < 0.08:
        return Unary(rng.choice(UNARY_OPS), _gen_expr(rng, fp, depth - 1, opts))
    return Binary(op, _gen_expr(rng, fp, depth - 1, opts), _gen_expr(rng, fp, depth - 1, opts))


def gen_expr(rng, fp, depth=2, opts=None, cond=False):
    return _gen_expr(rng, fp, depth, opts or GenOptions(), cond)


def _gen_leaf(rng, fp, opts):
    kinds = ["skip", "assign", "assign", "assign"]
    if opts.allow_break:
        kinds.append("break")
    if opts.allow_continue:
        kinds.append("continue")
    k = rng.choice(kinds)
    if k == "skip":
        return SKIP
    if k == "break":
        return BREAK
    if k == "continue":
        return CONTINUE
    return Assign(rng.choice(fp.vars), _gen_expr(rng, fp, opts.expr_depth, opts))


def _gen_cmd(rng, budget, fp, opts):
    if budget < 3 or rng.random() < opts.leaf_prob:
        return _gen_leaf(rng, fp, opts)
    kinds = ["seq", "seq", "if"]
    if opts.allow_loops:
        kinds.append("for")
    k = rng.choice(kinds)
    rest = budget - 1
    left = rng.randint(1, rest - 1)
    right = rng.randint(1, rest - left)
    if k == "seq":
        return Seq(_gen_cmd(rng, left, fp, opts), _gen_cmd(rng, right, fp, opts))
    if k == "if":
        cond = _gen_expr(rng, fp, opts.expr_depth, opts, cond=True)
        return If(cond, _gen_cmd(rng, left, fp, opts), _gen_cmd(rng, right, fp, opts))
    return For(_gen_cmd(rng, left, fp, opts), _gen_cmd(rng, right, fp, opts))


def gen_random_command(seed, size: int, fp: Footprint, opts: GenOptions | None = None) -> Command:
    """Deterministic random command with at most ``size`` command nodes."""
    if size < 1:
        raise ValueError("size must be >= 1")
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    return _gen_cmd(rng, size, fp, opts or GenOptions())
