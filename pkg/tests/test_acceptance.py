"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

The lines are repeated at the end of the pytest run.  Run directly with
``python tests/test_acceptance.py``.
"""
import os
import sys
import time

import pytest

from whilecf import fuzz
from whilecf.assertions import Exists, parse_assertion
from whilecf.bigstep import valid_big
from whilecf.fuzz import RULE_NAMES, TRANSFORMERS
from whilecf.lang import Footprint, parse_command
from whilecf.proof import check, parse_certificate, print_certificate
from whilecf.verify import parse_annotated, parse_spec, verify, verify_file

PROGRAMS = os.path.join(os.path.dirname(__file__), "..", "programs")
SEED = 0
RESULTS = []   # shown in the terminal summary by conftest


def report(n, title, ok, detail=""):
    line = f"criterion {n} {'PASS' if ok else 'FAIL'}: {title}" + (f" ({detail})" if detail else "")
    RESULTS.append(line)
    print(line)
    return ok


def suite_line(r):
    return str(r) + (f"; first: {r.violations[0]}" if r.violations else "")


def test_1_semantics_agreement():
    t = time.perf_counter()
    r = fuzz.suite_semantics(1000, SEED, Footprint(("x", "y", "z"), 4), size=12)
    dt = time.perf_counter() - t
    ok = r.ok and r.checked == 1000 * 64 and dt < 60
    assert report(1, "big-step and small-step agree", ok, f"{suite_line(r)}; {dt:.1f}s"), r.violations


def test_2_oracle_equivalence():
    r = fuzz.suite_oracles(200, SEED)
    ok = r.ok and r.checked + r.inconclusive == 200
    assert report(2, "valid_big and valid_wp agree", ok, suite_line(r)), r.violations


def test_3_primary_rule_soundness():
    r = fuzz.suite_rules(100, SEED)
    ok = r.ok and all(r.counts.get(k) == 100 for k in RULE_NAMES)
    assert report(3, "primary rules are locally sound", ok, suite_line(r)), r.violations


def test_4_checker_soundness():
    r = fuzz.suite_certificates(100, SEED)
    ok = r.ok and r.checked == 100
    assert report(4, "emitted certificates re-check and are never refuted", ok,
                  suite_line(r)), r.violations


def test_5_extended_rules():
    r = fuzz.suite_transformers(50, SEED)
    ok = r.ok and all(r.counts.get(k, 0) >= 50 for k in TRANSFORMERS) and len(TRANSFORMERS) == 11
    assert report(5, "transformers give exact, checking, valid conclusions", ok,
                  suite_line(r)), r.violations


def test_6_refinements():
    r = fuzz.suite_refinements(100, SEED)
    # big-step cannot tell divergence from fuel exhaustion, so some runs stay inconclusive
    ok = r.ok and r.checked == 400 and all(v == 100 for v in r.counts.values())
    assert report(6, "if-seq and loop-nocontinue refinements", ok, suite_line(r)), r.violations


def test_7_simulation():
    r = fuzz.suite_simulation(20, SEED, choices=10)
    ok = r.ok and r.counts.get("if_seq") == 20 and r.counts.get("loop_nocontinue") == 20
    assert report(7, "simulation tables, lifting lemmas and mutation detection", ok,
                  suite_line(r)), r.violations


def _read(name):
    with open(os.path.join(PROGRAMS, name)) as f:
        return f.read()


def _worked_examples():
    problems = []
    # straight-line division: one terminal entailment with the existential kept
    spec = parse_spec(_read("divide.spec"))
    spec.post = parse_assertion("exists n. [z] = n /\\ [x] = n * m /\\ [y] = m")
    fp = Footprint(("x", "y", "z"), 8)
    r = verify(parse_annotated("z = x / y ;; skip"), spec, fp)
    goals = r.residual_goals
    if not (len(goals) == 1 and isinstance(goals[0].lhs, Exists)
            and goals[0].rhs == spec.post and "[z] = [x / y] |-" in str(goals[0])):
        problems.append(f"division: goals {[str(g) for g in goals]}")
    # divide loop: two residual goals after preprocessing
    r = verify_file(None, _read("divide_loop.spec"))
    if not (r.ok and r.transforms == ["loop_nc", "if_seq"] and len(r.residual_goals) == 2):
        problems.append(f"divide loop: ok={r.ok} transforms={r.transforms} "
                        f"goals={len(r.residual_goals)}")
    elif r.certificate.triple.cmd != parse_command(
            "for(;; x = z / y) if x > 1 then break else z = x / y"):
        problems.append("divide loop: certificate is about another program")
    # mid-body assertion: certificate round-trips and checks
    r = verify_file(None, _read("midassert.spec"))
    if not r.ok:
        problems.append(f"mid-assert: {r.errors} {[str(f) for f in r.failures]}")
    else:
        cert = parse_certificate(print_certificate(r.certificate))
        if not (check(cert.tree, cert.footprint).ok
                and valid_big(cert.triple, cert.footprint).ok):
            problems.append("mid-assert: certificate does not re-check")
    return problems


def test_8_worked_examples():
    problems = _worked_examples()
    assert report(8, "worked examples (division, divide loop, mid-assert)", not problems,
                  "; ".join(problems)), problems


def test_9_big_step_theorems():
    r = fuzz.suite_theorems(200, SEED)
    ok = r.ok and r.checked == 400
    assert report(9, "big-step if-seq and nocontinue theorems", ok, suite_line(r)), r.violations


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
