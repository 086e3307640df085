"""Fuel-bounded big-step evaluation and big-step validity / refinement."""
from __future__ import annotations

from dataclasses import dataclass

from . import lang
from .assertions import compile_assertion, envs_for, free_lvars, check_budget
from .errors import EvalError
from .lang import (Assign, Break, Continue, ExitKind, For, If, Seq, Skip, State,
                   enumerate_states, eval_expr)
from .verdict import Verdict

TERMINATED = "Terminated"
ERROR = "Error"
OUT_OF_FUEL = "OutOfFuel"


@dataclass(frozen=True)
class Outcome:
    kind: str
    exit: ExitKind | None = None
    state: State | None = None

    def __str__(self):
        if self.kind == TERMINATED:
            return f"Terminated {self.exit.value} {self.state!r}"
        return self.kind

    @property
    def terminated(self):
        return self.kind == TERMINATED


ERR = Outcome(ERROR)
OOF = Outcome(OUT_OF_FUEL)
# only produced by the exact small-step runner: the run provably never ends
DIVERGES_OUTCOME = Outcome("Diverges")
N, B, C = ExitKind.NORMAL, ExitKind.BRK, ExitKind.CON


def _big(c, st, fuel):
    if fuel <= 0:
        return OOF
    t = type(c)
    if t is Skip:
        return Outcome(TERMINATED, N, st)
    if t is Assign:
        try:
            v = eval_expr(c.expr, st)
        except EvalError:
            return ERR
        return Outcome(TERMINATED, N, st.set(c.name, v))
    if t is Seq:
        r = _big(c.first, st, fuel - 1)
        if r.kind == TERMINATED and r.exit is N:
            return _big(c.second, r.state, fuel - 1)
        return r
    if t is If:
        try:
            v = eval_expr(c.cond, st)
        except EvalError:
            return ERR
        return _big(c.then if v else c.els, st, fuel - 1)
    if t is Break:
        return Outcome(TERMINATED, B, st)
    if t is Continue:
        return Outcome(TERMINATED, C, st)
    if t is For:
        # iteration k needs a derivation of depth k+1 for the loop rule
        k = 0
        while True:
            f = fuel - 1 - k
            if f <= 0:
                return OOF
            r = _big(c.body, st, f)
            if r.kind != TERMINATED:
                return r
            if r.exit is B:
                return Outcome(TERMINATED, N, r.state)
            r2 = _big(c.incr, r.state, f)
            if r2.kind != TERMINATED:
                return r2
            if r2.exit is B:
                return Outcome(TERMINATED, N, r2.state)
            if r2.exit is C:
                return ERR
            st = r2.state
            k += 1
    raise TypeError(f"not a command: {c!r}")


def eval_big(c, st: State, fuel: int = 10000) -> Outcome:
    if fuel < 1:
        raise ValueError("fuel must be >= 1")
    return _big(c, st, fuel)


def _posts_of(t):
    return {N: t.post, B: t.post_brk, C: t.post_con}


def check_triple_by(t, fp, outcome_of, fuel, cap=lang.DEFAULT_CAP) -> Verdict:
    """Shared driver: partial-correctness validity given an outcome function."""
    assertions = [t.pre, t.post, t.post_brk, t.post_con]
    names = set()
    for a in assertions:
        names |= free_lvars(a)
    check_budget(fp, len(names), cap)
    envs = list(envs_for(names, fp))
    pre = compile_assertion(t.pre, fp)
    posts = {k: compile_assertion(a, fp) for k, a in _posts_of(t).items()}
    pending = []
    for st in enumerate_states(fp, cap):
        live = [j for j in envs if pre(st.vals, j)]
        if not live:
            continue
        o = outcome_of(t.cmd, st, fuel)
        if o is DIVERGES_OUTCOME:
            continue
        if o.kind == OUT_OF_FUEL:
            pending.append(st)
            continue
        if o.kind == ERROR:
            return Verdict.counterexample(st, live[0], "execution errors")
        post = posts[o.exit]
        for j in live:
            if not post(o.state.vals, j):
                return Verdict.counterexample(
                    st, j, f"terminates {o.exit.value} in {o.state!r} violating the postcondition")
    if pending:
        return Verdict.inconclusive(pending)
    return Verdict.holds()


def valid_big(t, fp, fuel: int = 10000, cap=lang.DEFAULT_CAP) -> Verdict:
    return check_triple_by(t, fp, eval_big, fuel, cap)


def refines_by(c1, c2, fp, outcome_of, fuel, cap=lang.DEFAULT_CAP) -> Verdict:
    pending = []
    for st in enumerate_states(fp, cap):
        o1 = outcome_of(c1, st, fuel)
        if o1.kind == OUT_OF_FUEL:
            pending.append(st)
            continue
        o2 = outcome_of(c2, st, fuel)
        if o2.kind == OUT_OF_FUEL:
            pending.append(st)
            continue
        if o1 != o2:
            return Verdict.counterexample(st, detail=f"left {o1}, right {o2}")
    if pending:
        return Verdict.inconclusive(pending)
    return Verdict.holds()


def refines_big(c1, c2, fp, fuel: int = 10000, cap=lang.DEFAULT_CAP) -> Verdict:
    """c1 refines c2: every terminal outcome and every error of c1 is one of c2."""
    return refines_by(c1, c2, fp, eval_big, fuel, cap)
