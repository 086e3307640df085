"""Three-way results returned by every oracle."""
from __future__ import annotations

from dataclasses import dataclass, field

HOLDS = "Holds"
COUNTEREXAMPLE = "CounterExample"
INCONCLUSIVE = "Inconclusive"


@dataclass
class Verdict:
    status: str
    state: object = None          # replayable initial state for counterexamples
    env: dict = field(default_factory=dict)
    pending: list = field(default_factory=list)   # states whose runs ran out of fuel
    detail: str = ""
    bounded: bool = False         # Holds only relative to a finite continuation family

    @classmethod
    def holds(cls, **kw):
        return cls(HOLDS, **kw)

    @classmethod
    def counterexample(cls, state, env=None, detail=""):
        return cls(COUNTEREXAMPLE, state=state, env=dict(env or {}), detail=detail)

    @classmethod
    def inconclusive(cls, pending, detail=""):
        return cls(INCONCLUSIVE, pending=list(pending), detail=detail)

    @property
    def ok(self):
        return self.status == HOLDS

    @property
    def refuted(self):
        return self.status == COUNTEREXAMPLE

    @property
    def conclusive(self):
        return self.status != INCONCLUSIVE

    def __str__(self):
        if self.status == HOLDS:
            return "Holds (bounded)" if self.bounded else "Holds"
        if self.status == COUNTEREXAMPLE:
            s = f"CounterExample {self.state!r}"
            if self.env:
                s += " with " + ", ".join(f"{k}={v}" for k, v in sorted(self.env.items()))
            if self.detail:
                s += f": {self.detail}"
            return s
        return f"Inconclusive ({len(self.pending)} states ran out of fuel)"


def combine(verdicts):
    """First counterexample wins; otherwise Inconclusive if any was; else Holds."""
    pending = []
    inconclusive = False
    for v in verdicts:
        if v.refuted:
            return v
        if v.status == INCONCLUSIVE:
            inconclusive = True
            pending.extend(v.pending)
    return Verdict.inconclusive(pending) if inconclusive else Verdict.holds()
