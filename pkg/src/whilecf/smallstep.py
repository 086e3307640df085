"""Continuation-stack machine, step-indexed WP and guard/continuation validity."""
from __future__ import annotations

from dataclasses import dataclass

from . import lang
from .assertions import (FALSE, TRUE, compile_assertion, envs_for, free_lvars, check_budget,
                         models)
from .bigstep import DIVERGES_OUTCOME, ERR, OOF, Outcome, TERMINATED, check_triple_by
from .errors import CapExceeded, EvalError
from .lang import (Assign, Binary, Break, Const, Continue, ExitKind, For, If, Seq, Skip, State,
                   Var, enumerate_states, eval_expr)
from .verdict import Verdict

N, B, C = ExitKind.NORMAL, ExitKind.BRK, ExitKind.CON


class Frame:
    __slots__ = ()


@dataclass(frozen=True)
class KSeq(Frame):
    cmd: lang.Command


@dataclass(frozen=True)
class KLoop1(Frame):
    body: lang.Command
    incr: lang.Command


@dataclass(frozen=True)
class KLoop2(Frame):
    body: lang.Command
    incr: lang.Command


@dataclass(frozen=True)
class Config:
    cmd: lang.Command
    cont: tuple
    state: State

    def __iter__(self):
        return iter((self.cmd, self.cont, self.state))


@dataclass(frozen=True)
class Posts:
    normal: object = TRUE
    brk: object = FALSE
    con: object = FALSE

    def for_exit(self, ek):
        return self.normal if ek is N else self.brk if ek is B else self.con


@dataclass(frozen=True)
class Next:
    config: Config


@dataclass(frozen=True)
class Terminal:
    exit: ExitKind
    state: State


@dataclass(frozen=True)
class StuckError:
    pass


STUCK = StuckError()
_TERMINAL_EXIT = {Skip: N, Break: B, Continue: C}

# internal step results: (cmd, cont, state) | exit kind | None (stuck)


def _step(c, k, st):
    t = type(c)
    if t is Seq:
        return (c.first, (KSeq(c.second),) + k, st)
    if t is Assign:
        try:
            v = eval_expr(c.expr, st)
        except EvalError:
            return None
        return (lang.SKIP, k, st.set(c.name, v))
    if t is If:
        try:
            v = eval_expr(c.cond, st)
        except EvalError:
            return None
        return (c.then if v else c.els, k, st)
    if t is For:
        return (Seq(c.body, lang.CONTINUE), (KLoop1(c.body, c.incr),) + k, st)
    # skip / break / continue: consult the top frame
    if not k:
        return _TERMINAL_EXIT[t]
    f = k[0]
    ft = type(f)
    rest = k[1:]
    if t is Skip:
        if ft is KSeq:
            return (f.cmd, rest, st)
        if ft is KLoop1:
            return (f.incr, (KLoop2(f.body, f.incr),) + rest, st)
        return (Seq(f.body, lang.CONTINUE), (KLoop1(f.body, f.incr),) + rest, st)
    if t is Break:
        if ft is KSeq:
            return (c, rest, st)
        return (lang.SKIP, rest, st)
    if t is Continue:
        if ft is KSeq:
            return (c, rest, st)
        if ft is KLoop1:
            return (f.incr, (KLoop2(f.body, f.incr),) + rest, st)
        return None
    raise TypeError(f"not a command: {c!r}")


def step(cfg: Config):
    r = _step(cfg.cmd, cfg.cont, cfg.state)
    if r is None:
        return STUCK
    if type(r) is ExitKind:
        return Terminal(r, cfg.state)
    return Next(Config(*r))


def is_terminal(c, k):
    return not k and type(c) in _TERMINAL_EXIT


def run_small(cfg: Config, fuel: int = 10000) -> Outcome:
    """Iterate step at most ``fuel`` times."""
    if fuel < 1:
        raise ValueError("fuel must be >= 1")
    c, k, st = cfg
    for _ in range(fuel):
        r = _step(c, k, st)
        if r is None:
            return ERR
        if type(r) is ExitKind:
            return Outcome(TERMINATED, r, st)
        c, k, st = r
    return OOF


def eval_small(c, st, fuel=10000):
    return run_small(Config(c, (), st), fuel)


def trace_small(cfg: Config, fuel: int = 10000):
    """Configurations visited (including the first) and the final outcome."""
    out = [cfg]
    c, k, st = cfg
    for _ in range(fuel):
        r = _step(c, k, st)
        if r is None:
            return out, ERR
        if type(r) is ExitKind:
            return out, Outcome(TERMINATED, r, st)
        c, k, st = r
        out.append(Config(c, k, st))
    return out, OOF


# ---------------------------------------------------------------------------
# exact runs (cycle detection over the finite configuration space)

EXACT_TERMINAL, EXACT_STUCK, EXACT_DIVERGES, EXACT_FUEL = "terminal", "stuck", "diverges", "fuel"


def run_exact(c, k, st, fuel=10000):
    """Run to a terminal or stuck configuration, or prove divergence.

    Returns (kind, exit, state).  Divergence is detected with Brent's cycle
    finder; reachable configurations are finite because continuations only
    hold subterms of the program.
    """
    power = lam = 1
    saved = (c, k, st)
    for _ in range(fuel):
        r = _step(c, k, st)
        if r is None:
            return (EXACT_STUCK, None, st)
        if type(r) is ExitKind:
            return (EXACT_TERMINAL, r, st)
        c, k, st = r
        if r == saved:
            return (EXACT_DIVERGES, None, st)
        if power == lam:
            saved = r
            power *= 2
            lam = 0
        lam += 1
    return (EXACT_FUEL, None, st)


# ---------------------------------------------------------------------------
# step-indexed weakest precondition and safety


def wp_indexed(st: State, c, k, posts: Posts, n: int, env=None) -> bool:
    env = dict(env or {})
    for _ in range(n):
        r = _step(c, k, st)
        if r is None:
            return False
        if type(r) is ExitKind:
            post = compile_assertion(posts.for_exit(r), st.fp)
            return post(st.vals, env)
        c, k, st = r
    return True


def safe_indexed(c, k, st: State, n: int) -> bool:
    for _ in range(n):
        r = _step(c, k, st)
        if r is None:
            return False
        if type(r) is ExitKind:
            return True
        c, k, st = r
    return True


def valid_wp(t, fp, fuel: int = 10000, cap=lang.DEFAULT_CAP) -> Verdict:
    """Every P-state is in WP(c, empty) with the triple's posts.

    Holds/CounterExample agree with wp_indexed at index ``fuel``; runs that
    neither finish nor provably cycle within ``fuel`` steps make the verdict
    Inconclusive.
    """
    def outcome(c, st, f):
        kind, ek, st2 = run_exact(c, (), st, f)
        if kind == EXACT_TERMINAL:
            return Outcome(TERMINATED, ek, st2)
        if kind == EXACT_STUCK:
            return ERR
        if kind == EXACT_DIVERGES:
            return DIVERGES_OUTCOME
        return OOF
    return check_triple_by(t, fp, outcome, fuel, cap)


def _guard_states(p, fp, env, cap):
    if env is not None:
        return models(p, fp, env, cap)
    names = sorted(free_lvars(p))
    check_budget(fp, len(names), cap)
    f = compile_assertion(p, fp)
    envs = list(envs_for(names, fp))
    return [st for st in enumerate_states(fp, cap) if any(f(st.vals, j) for j in envs)]


def guards(p, c, k, fp, fuel: int = 10000, env=None, cap=lang.DEFAULT_CAP) -> Verdict:
    """Every state satisfying p runs (c, k) without getting stuck."""
    k = tuple(k)
    pending = []
    for st in _guard_states(p, fp, env, cap):
        kind, _, _ = run_exact(c, k, st, fuel)
        if kind == EXACT_STUCK:
            return Verdict.counterexample(st, env, "configuration gets stuck")
        if kind == EXACT_FUEL:
            pending.append(st)
    if pending:
        return Verdict.inconclusive(pending)
    return Verdict.holds()


def valid_cont(t, fp, fuel: int = 10000, family=None, cap=lang.DEFAULT_CAP,
               probes: bool = True) -> Verdict:
    """Continuation-based validity, quantifying only over ``family``.

    With ``probes`` the family is extended, per logic environment, by the
    three probe continuations of t, so every post violation that big-step
    validity finds is also found here.
    """
    if family is None:
        family = [()]
    names = set()
    for a in (t.pre, t.post, t.post_brk, t.post_con):
        names |= free_lvars(a)
    check_budget(fp, len(names), cap)
    pending = []
    for env in envs_for(names, fp):
        extra = probe_continuations(t, fp, env) if probes else []
        for k in list(family) + extra:
            k = tuple(k)
            prem = [guards(t.post, lang.SKIP, k, fp, fuel, env, cap),
                    guards(t.post_brk, lang.BREAK, k, fp, fuel, env, cap),
                    guards(t.post_con, lang.CONTINUE, k, fp, fuel, env, cap)]
            if any(v.refuted for v in prem):
                continue
            concl = guards(t.pre, t.cmd, k, fp, fuel, env, cap)
            if concl.refuted and all(v.ok for v in prem):
                concl.detail = f"under continuation {pretty_cont(k)}"
                return concl
            if concl.refuted:
                pending.append(concl.state)
            elif not concl.ok:
                pending.extend(concl.pending)
    if pending:
        return Verdict.inconclusive(pending, "bounded continuation family")
    n = len(family) + (3 if probes else 0)
    return Verdict.holds(bounded=True, detail=f"bounded: {n} continuations")


# ---------------------------------------------------------------------------
# continuation families


def _cont_leaves(fp):
    out = [lang.SKIP, lang.BREAK, lang.CONTINUE]
    for x in fp.vars:
        out.append(lang.Assign(x, Binary("/", Const(1), Var(x))))
    return out


def frame_commands(fp, size):
    """Commands allowed inside generated frames, grouped by node count."""
    leaves = _cont_leaves(fp)
    by_size = {1: list(leaves)}
    for s in range(3, size + 1, 2):
        by_size[s] = [Seq(a, b) for a in leaves for b in by_size[s - 2]]
    return by_size


def frames_by_weight(fp, size):
    cmds = frame_commands(fp, size)
    out = {w: [] for w in range(1, size + 1)}
    for s, cs in cmds.items():
        out[s].extend(KSeq(c) for c in cs)
    for s1, cs1 in cmds.items():
        for s2, cs2 in cmds.items():
            w = s1 + s2 - 1
            if w > size:
                continue
            for ctor in (KLoop1, KLoop2):
                out[w].extend(ctor(a, b) for a in cs1 for b in cs2)
    return out


def enumerate_continuations(fp, depth: int = 2, size: int = 3, cap: int = 200_000):
    """Empty continuation plus every stack of at most ``depth`` frames whose
    total weight is at most ``size``.

    Frame commands are built from skip, break, continue and ``x = 1 / x``
    (which fails exactly when x is 0) joined by ``;;``.  A KSeq frame weighs
    its command's node count, a loop frame the node count of both commands
    minus one, so KLoop1(skip, skip) weighs 1.
    """
    fw = frames_by_weight(fp, size) if size >= 1 else {}
    family = [()]
    if depth <= 0 or size <= 0:
        return family

    def stacks(d, budget):
        if d == 0:
            yield ()
            return
        for w in range(1, budget + 1):
            for f in fw.get(w, ()):
                for rest in stacks(d - 1, budget - w):
                    yield (f,) + rest

    for d in range(1, depth + 1):
        for s in stacks(d, size):
            family.append(s)
            if len(family) > cap:
                raise CapExceeded(f"continuation family exceeds {cap}")
    return family


def count_continuations(fp, depth, size):
    """Closed-form size of enumerate_continuations(fp, depth, size)."""
    nl = 3 + len(fp.vars)
    ncmd = {s: nl ** ((s + 1) // 2) for s in range(1, size + 1, 2)}
    weights = {w: 0 for w in range(1, size + 1)}
    for s, n in ncmd.items():
        weights[s] += n
    for s1, n1 in ncmd.items():
        for s2, n2 in ncmd.items():
            w = s1 + s2 - 1
            if w <= size:
                weights[w] += 2 * n1 * n2
    if depth <= 0 or size <= 0:
        return 1
    # stacks[d][b] = number of stacks with exactly d frames and weight exactly b
    total = 1
    ways = {0: 1}
    for _ in range(depth):
        nxt = {}
        for b, n in ways.items():
            for w, fn in weights.items():
                if b + w <= size and fn:
                    nxt[b + w] = nxt.get(b + w, 0) + n * fn
        total += sum(nxt.values())
        ways = nxt
    return total


def membership_expr(states, fp):
    """Expression that is 1 exactly on the given states."""
    states = set(states)
    if not states:
        return Const(0)
    if len(states) == fp.size:
        return Const(1)
    disj = None
    for st in sorted(states, key=lambda s: s.vals):
        c = None
        for x, v in zip(fp.vars, st.vals):
            atom = Binary("==", Var(x), Const(v))
            c = atom if c is None else Binary("and", c, atom)
        disj = c if disj is None else Binary("or", disj, c)
    return disj


def crash_unless(states, fp):
    """Command that is skip on the given states and fails elsewhere."""
    x = fp.vars[0]
    return If(membership_expr(states, fp), lang.SKIP, lang.Assign(x, Binary("/", Const(1), Const(0))))


def probe_continuations(t, fp, env=None):
    """Three continuations that turn a violated post of t into a stuck run.

    The normal probe checks Q, the break probe checks R_brk behind a loop
    frame, and the continue probe checks R_con from the increment slot.
    """
    q = crash_unless(models(t.post, fp, env), fp)
    rb = crash_unless(models(t.post_brk, fp, env), fp)
    rc = crash_unless(models(t.post_con, fp, env), fp)
    return [
        (KSeq(q),),
        (KLoop1(lang.SKIP, lang.SKIP), KSeq(rb)),
        (KSeq(lang.BREAK), KLoop1(lang.SKIP, rc)),
    ]


# ---------------------------------------------------------------------------
# continue analysis on configurations


def escaping_continue(c, k) -> bool:
    """Could a continue in (c, k) reach the bottom of k?

    Only continues below the last loop frame (or anywhere, when there is no
    loop frame) can escape.
    """
    last_loop = -1
    for i, f in enumerate(k):
        if type(f) is not KSeq:
            last_loop = i
    if last_loop == -1 and lang.has_toplevel_continue(c):
        return True
    for i in range(last_loop + 1, len(k)):
        f = k[i]
        if lang.has_toplevel_continue(f.cmd):
            return True
    return False


def pretty_frame(f):
    if type(f) is KSeq:
        return f"KSeq({lang.pretty(f.cmd)})"
    name = type(f).__name__
    return f"{name}({lang.pretty(f.body)}, {lang.pretty(f.incr)})"


def pretty_cont(k):
    if not k:
        return "ε"
    return " . ".join(pretty_frame(f) for f in k)


def pretty_config(cfg):
    """Accepts a Config or a (cmd, cont[, state]) tuple."""
    c, k, *rest = tuple(cfg)
    s = f"({lang.pretty(c)} | {pretty_cont(k)}"
    if rest and rest[0] is not None:
        s += f" | {rest[0]!r}"
    return s + ")"
