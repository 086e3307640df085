"""Simulation relations between small-step configurations, and refinement.

A relation is a finite table of (lhs, rhs) pairs of (command, continuation).
The lhs is the source program, the rhs the target that simulates it.
Tables are built by closure from an initial pair: each source step is
matched by the first bounded run of target steps that lands, with the same
state, on a configuration allowed by a schema predicate.  The check itself
never looks at the schema.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import lang
from .assertions import compile_assertion
from .errors import CapExceeded, SideConditionError
from .lang import CONTINUE, SKIP, ExitKind, For, If, Seq, enumerate_states
from .smallstep import (EXACT_DIVERGES, EXACT_STUCK, EXACT_TERMINAL, KLoop1, KLoop2,
                        KSeq, Posts, _step, escaping_continue, guards, pretty_cont, run_exact)
from .verdict import Verdict

TERMINATION, PRESERVATION, ERROR = "Termination", "Preservation", "Error"
DEAD = For(SKIP, SKIP)


@dataclass(frozen=True)
class ProgPair:
    lhs: tuple   # (command, continuation)
    rhs: tuple

    def __str__(self):
        return f"{_cfg(self.lhs)} ~ {_cfg(self.rhs)}"


def _cfg(pc):
    return f"({lang.pretty(pc[0])} | {pretty_cont(pc[1])})"


@dataclass(frozen=True)
class RelationTable:
    pairs: frozenset
    match_bound: int = 8

    def __post_init__(self):
        if self.match_bound < 1:
            raise ValueError("match_bound must be >= 1")
        object.__setattr__(self, "pairs", frozenset(self.pairs))

    def __contains__(self, pair):
        return pair in self.pairs

    def __len__(self):
        return len(self.pairs)

    def replace(self, old, new):
        return RelationTable((self.pairs - {old}) | {new}, self.match_bound)

    def dump(self) -> str:
        return "\n".join(sorted(str(p) for p in self.pairs))


@dataclass
class Violation:
    pair: ProgPair
    state: object
    clause: str
    trace: list = field(default_factory=list)

    def __str__(self):
        return f"{self.clause} fails for {self.pair} at {self.state!r}"


@dataclass
class SimReport:
    ok: bool
    violations: list = field(default_factory=list)
    # (pair, lhs successor) -> rhs steps used for the first successful match
    match_steps: dict = field(default_factory=dict)


def identity_relation(configs, fp=None, match_bound=8):
    """Pairs each configuration with itself; with a footprint, closed under steps."""
    init = [ProgPair(c, c) for c in configs]
    if fp is None:
        return RelationTable(frozenset(init), match_bound)
    return build_closure(init, lambda a, b: a == b, fp, match_bound)


def _is_terminal(c, k):
    return not k and type(c) in (lang.Skip, lang.Break, lang.Continue)


_EXIT = {lang.Skip: ExitKind.NORMAL, lang.Break: ExitKind.BRK, lang.Continue: ExitKind.CON}


def _target_runs(c, k, st, bound):
    """Configurations reached by the target in 0..bound steps: [(j, c, k, st)]."""
    out = [(0, c, k, st)]
    for j in range(1, bound + 1):
        r = _step(c, k, st)
        if r is None or type(r) is ExitKind:
            break
        c, k, st = r
        out.append((j, c, k, st))
    return out


def _terminates_same(c, k, st, ek, bound, fuel, guard_mode):
    """Target reaches (ek, st) within ``bound`` steps without touching the state;
    in guard mode, a state-preserving cycle also counts."""
    seen = set()
    limit = fuel if guard_mode else bound
    for _ in range(limit + 1):
        if _is_terminal(c, k):
            return _EXIT[type(c)] is ek
        if guard_mode:
            if (c, k) in seen:
                return True
            seen.add((c, k))
        r = _step(c, k, st)
        if r is None or type(r) is ExitKind:
            return False
        c, k, st2 = r
        if st2 != st:
            return False
    return False


def _reaches_stuck(c, k, st, fuel):
    kind, _, _ = run_exact(c, k, st, fuel)
    return kind == EXACT_STUCK


def check_simulation(rel: RelationTable, fp, fuel: int = 10000, guard_mode: bool = False,
                     cap=lang.DEFAULT_CAP) -> SimReport:
    """The three clauses of a simulation, for every pair and every state."""
    states = enumerate_states(fp, cap)
    if len(rel) * len(states) > cap:
        raise CapExceeded(f"{len(rel)} pairs x {len(states)} states exceed the cap {cap}")
    violations = []
    steps = {}
    for pair in sorted(rel.pairs, key=str):
        (c1, k1), (c2, k2) = pair.lhs, pair.rhs
        for st in states:
            if _is_terminal(c1, k1):
                ek = _EXIT[type(c1)]
                if not _terminates_same(c2, k2, st, ek, rel.match_bound, fuel, guard_mode):
                    violations.append(Violation(pair, st, TERMINATION))
                continue
            r = _step(c1, k1, st)
            if r is None:
                if not _reaches_stuck(c2, k2, st, fuel):
                    violations.append(Violation(pair, st, ERROR))
                continue
            if type(r) is ExitKind:  # unreachable: terminal handled above
                continue
            n1, nk1, nst = r
            found = None
            runs = _target_runs(c2, k2, st, rel.match_bound)
            for j, c, k, s in runs:
                if s == nst and ProgPair((n1, nk1), (c, k)) in rel.pairs:
                    found = j
                    break
            if found is None:
                trace = [(j, _cfg((c, k)), s) for j, c, k, s in runs]
                violations.append(Violation(pair, st, PRESERVATION, trace))
            else:
                steps.setdefault((pair, (n1, nk1)), found)
    return SimReport(not violations, violations, steps)


# ---------------------------------------------------------------------------
# building tables by closure


def build_closure(initial, schema, fp, match_bound=8, max_pairs=20000, cap=lang.DEFAULT_CAP):
    """Smallest table containing ``initial`` that the matching search closes.

    For each pair, state and source step, the first target configuration (in
    step order) with the right state that ``schema`` accepts is related.
    """
    states = enumerate_states(fp, cap)
    pairs = set(initial)
    work = list(initial)
    while work:
        pair = work.pop()
        (c1, k1), (c2, k2) = pair.lhs, pair.rhs
        if _is_terminal(c1, k1):
            continue
        for st in states:
            r = _step(c1, k1, st)
            if r is None or type(r) is ExitKind:
                continue
            n1, nk1, nst = r
            for _, c, k, s in _target_runs(c2, k2, st, match_bound):
                if s == nst and schema((n1, nk1), (c, k)):
                    new = ProgPair((n1, nk1), (c, k))
                    if new not in pairs:
                        if len(pairs) >= max_pairs:
                            raise CapExceeded(f"relation closure exceeds {max_pairs} pairs")
                        pairs.add(new)
                        work.append(new)
                    break
    return RelationTable(frozenset(pairs), match_bound)


def _split_match(kl, kr, left_mid, right_mid):
    """All kappa0 with kl = kappa0 + left_mid + kappa and kr = kappa0 + right_mid + kappa."""
    out = []
    nl, nr = len(left_mid), len(right_mid)
    for i in range(len(kl) - nl + 1):
        if kl[i:i + nl] != left_mid or kr[:i] != kl[:i]:
            continue
        if kr[i:i + nr] == right_mid and kr[i + nr:] == kl[i + nl:]:
            out.append(kl[:i])
    return out


def ifseq_programs(e, c1, c2, c3):
    return Seq(If(e, c1, c2), c3), If(e, Seq(c1, c3), Seq(c2, c3))


def ifseq_schema(e, c1, c2, c3):
    lhs, rhs = ifseq_programs(e, c1, c2, c3)
    cond = If(e, c1, c2)

    def schema(left, right):
        if left == right:
            return True
        (a, ka), (b, kb) = left, right
        if b != rhs:
            return False
        if a == lhs and ka == kb:
            return True
        return a == cond and ka[:1] == (KSeq(c3),) and ka[1:] == kb
    return schema


def build_rel_ifseq(e, c1, c2, c3, fp, match_bound=8, max_pairs=20000, cap=lang.DEFAULT_CAP):
    lhs, rhs = ifseq_programs(e, c1, c2, c3)
    init = ProgPair((lhs, ()), (rhs, ()))
    return build_closure([init], ifseq_schema(e, c1, c2, c3), fp, match_bound, max_pairs, cap)


def loop_nocontinue_programs(c1, c2):
    return For(c1, c2), For(Seq(c1, c2), SKIP)


def loop_nocontinue_schema(c1, c2):
    """Pairs of the loop-nocontinue relation, plus identity and (break, L1.k) ~ (break, T1.k)."""
    l1, l2 = KLoop1(c1, c2), KLoop2(c1, c2)
    fused = Seq(c1, c2)
    t1, t2 = KLoop1(fused, SKIP), KLoop2(fused, SKIP)
    ks_con, ks_c2 = KSeq(CONTINUE), KSeq(c2)
    src, tgt = loop_nocontinue_programs(c1, c2)

    def schema(left, right):
        if left == right:
            return True
        (a, ka), (b, kb) = left, right
        if a == src and b == tgt and ka == kb:
            return True
        if (a == Seq(c1, CONTINUE) and b == c1 and ka[:1] == (l1,)
                and kb[:3] == (ks_c2, ks_con, t1) and ka[1:] == kb[3:]):
            return True
        if a == b:
            for k0 in _split_match(ka, kb, (ks_con, l1), (ks_c2, ks_con, t1)):
                if not escaping_continue(a, k0):
                    return True
            for k0 in _split_match(ka, kb, (l2,), (ks_con, t1)):
                if not escaping_continue(a, k0):
                    return True
            if type(a) in (lang.Skip, lang.Break) and ka[:1] == (l2,) and kb[:1] == (t2,) \
                    and ka[1:] == kb[1:]:
                return True
            if type(a) is lang.Break and ka[:1] == (l1,) and kb[:1] == (t1,) and ka[1:] == kb[1:]:
                return True
        if (a == CONTINUE and ka[:1] == (l1,) and b == c2
                and kb[:2] == (ks_con, t1) and ka[1:] == kb[2:]):
            return True
        return False
    return schema


def build_rel_loop_nocontinue(c1, c2, fp, match_bound=8, max_pairs=20000, cap=lang.DEFAULT_CAP):
    if lang.has_toplevel_continue(c1) or lang.has_toplevel_continue(c2):
        raise SideConditionError("loop body and increment must not contain a top-level continue")
    src, tgt = loop_nocontinue_programs(c1, c2)
    init = ProgPair((src, ()), (tgt, ()))
    return build_closure([init], loop_nocontinue_schema(c1, c2), fp, match_bound, max_pairs, cap)


def build_rel_dead(k0, fp, commands=(SKIP, lang.BREAK, CONTINUE), match_bound=8,
                   max_pairs=20000, cap=lang.DEFAULT_CAP):
    """(c, dead . k0) ~ (c, k0): the dead-loop prefix behaves like k0 on break and
    continue and spins forever on normal exit.  Valid in guard mode only."""
    k0 = tuple(k0)
    n = len(k0)

    def schema(left, right):
        if left == right:
            return True
        (_, ka), (b, kb) = left, right
        return kb == k0 and type(b) is lang.Skip and ka[len(ka) - n:] == k0

    init = [ProgPair((c, (KSeq(DEAD),) + k0), (c, k0)) for c in commands]
    return build_closure(init, schema, fp, match_bound, max_pairs, cap)


def mutate(rel: RelationTable, rng, fp=None, fuel: int = 2000):
    """Replace one pair's target by a terminal configuration (break, skip or continue).

    With a footprint, semantically equivalent mutants are avoided where
    possible: the new target must disagree with the exact outcome of the
    pair's source on some state, so no simulation can contain the mutated
    pair.  When every source diverges everywhere, the mutant only breaks the
    table's closure.  Returns (table, victim).
    """
    pairs = sorted(rel.pairs, key=str)
    rng.shuffle(pairs)
    fallback = None
    for victim in pairs:
        for tgt in (lang.BREAK, SKIP, CONTINUE):
            bogus = ProgPair(victim.lhs, (tgt, ()))
            if bogus == victim:
                continue
            if fp is None or _distinguishes(victim.lhs, _EXIT[type(tgt)], fp, fuel):
                return rel.replace(victim, bogus), victim
            fallback = fallback or (rel.replace(victim, bogus), victim)
    return fallback


def _distinguishes(src, ek, fp, fuel):
    c, k = src
    for st in enumerate_states(fp):
        o = _exact(c, k, st, fuel)
        if o[0] == "error" or (o[0] == "terminal" and (o[1], o[2]) != (ek, st)):
            return True
    return False


# ---------------------------------------------------------------------------
# refinement and the lifting lemmas


def _exact(c, k, st, fuel):
    kind, ek, out = run_exact(c, tuple(k), st, fuel)
    if kind == EXACT_TERMINAL:
        return ("terminal", ek, out)
    if kind == EXACT_STUCK:
        return ("error", None, None)   # every stuck configuration counts as the one error
    if kind == EXACT_DIVERGES:
        return ("diverges", None, None)
    return ("fuel", None, None)


def refines_small(c1, c2, fp, fuel: int = 10000, cap=lang.DEFAULT_CAP) -> Verdict:
    """c1 refines c2: every terminal outcome (or error) of c1 from a state is one of c2."""
    pending = []
    for st in enumerate_states(fp, cap):
        o1 = _exact(c1, (), st, fuel)
        if o1[0] == "diverges":
            continue
        if o1[0] == "fuel":
            pending.append(st)
            continue
        o2 = _exact(c2, (), st, fuel)
        if o2[0] == "fuel":
            pending.append(st)
            continue
        if o1 != o2:
            return Verdict.counterexample(st, detail=f"left {_fmt(o1)}, right {_fmt(o2)}")
    if pending:
        return Verdict.inconclusive(pending)
    return Verdict.holds()


def _fmt(o):
    if o[0] == "terminal":
        return f"Terminated {o[1].value} {o[2]!r}"
    return o[0]


def wp_holds(c, k, st, posts: Posts, fuel, env=None):
    """Exact weakest precondition membership: True, False or None (fuel ran out)."""
    kind, ek, out = run_exact(c, tuple(k), st, fuel)
    if kind == EXACT_TERMINAL:
        return compile_assertion(posts.for_exit(ek), st.fp)(out.vals, dict(env or {}))
    if kind == EXACT_STUCK:
        return False
    if kind == EXACT_DIVERGES:
        return True
    return None


def lemma_wp_sim_check(rel: RelationTable, posts: Posts, fp, fuel: int = 10000,
                       cap=lang.DEFAULT_CAP) -> Verdict:
    """For each pair, target in WP implies source in WP, state by state."""
    pending = []
    for pair in sorted(rel.pairs, key=str):
        (c2, k2), (c1, k1) = pair.lhs, pair.rhs
        for st in enumerate_states(fp, cap):
            tgt = wp_holds(c1, k1, st, posts, fuel)
            if tgt is None:
                pending.append(st)
                continue
            if not tgt:
                continue
            src = wp_holds(c2, k2, st, posts, fuel)
            if src is None:
                pending.append(st)
            elif not src:
                return Verdict.counterexample(st, detail=f"pair {pair}")
    if pending:
        return Verdict.inconclusive(pending)
    return Verdict.holds()


def lemma_guard_sim_check(rel: RelationTable, pre, fp, fuel: int = 10000,
                          cap=lang.DEFAULT_CAP) -> Verdict:
    """For each pair, pre guards the target implies pre guards the source."""
    pending = []
    for pair in sorted(rel.pairs, key=str):
        (c2, k2), (c1, k1) = pair.lhs, pair.rhs
        g1 = guards(pre, c1, k1, fp, fuel, cap=cap)
        if not g1.ok:
            if not g1.conclusive:
                pending.extend(g1.pending)
            continue
        g2 = guards(pre, c2, k2, fp, fuel, cap=cap)
        if g2.refuted:
            return Verdict.counterexample(g2.state, detail=f"pair {pair}")
        if not g2.conclusive:
            pending.extend(g2.pending)
    if pending:
        return Verdict.inconclusive(pending)
    return Verdict.holds()


__all__ = [
    "ProgPair", "RelationTable", "SimReport", "Violation", "check_simulation", "build_closure",
    "build_rel_ifseq", "build_rel_loop_nocontinue", "build_rel_dead", "identity_relation",
    "mutate", "refines_small", "lemma_wp_sim_check", "lemma_guard_sim_check", "wp_holds",
    "ifseq_programs", "loop_nocontinue_programs", "DEAD", "TERMINATION", "PRESERVATION", "ERROR",
]
