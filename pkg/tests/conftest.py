import sys

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from whilecf.lang import Footprint, gen_random_command

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FP3 = Footprint(("x", "y", "z"), 8)
FP2 = Footprint(("x", "y"), 4)


def commands(fp=FP2, max_size=8, opts=None):
    """Generated commands, driven by hypothesis-chosen seeds."""
    return st.builds(lambda seed, size: gen_random_command(seed, size, fp, opts),
                     st.integers(0, 2**32), st.integers(1, max_size))


def states(fp=FP2):
    return st.lists(st.integers(0, fp.modulus - 1), min_size=len(fp.vars),
                    max_size=len(fp.vars)).map(lambda vs: fp.state(dict(zip(fp.vars, vs))))


@pytest.fixture
def fp3():
    return FP3


@pytest.fixture
def fp2():
    return FP2


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
