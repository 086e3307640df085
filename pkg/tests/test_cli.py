import io
import os
import subprocess
import sys

import pytest

from whilecf.cli import main, parse_state
from whilecf.errors import ParseError
from whilecf.lang import Footprint

PROGRAMS = os.path.join(os.path.dirname(__file__), "..", "programs")


def prog(name):
    return os.path.join(PROGRAMS, name)


def run(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def test_run_small_and_big_agree():
    code, small = run("run", prog("loop.wcf"))
    assert code == 0
    code, big = run("run", prog("loop.wcf"), "--semantics", "big")
    assert code == 0 and small == big


def test_run_skip_output():
    code, out = run("run", prog("skip.wcf"), "--vars", "x,y,z")
    assert code == 0 and out.strip() == "Terminated Normal {x:0, y:0, z:0}"


def test_run_division_by_zero_is_error():
    code, out = run("run", prog("divzero.wcf"), "--state", "x=3")
    assert code == 0 and out.strip() == "Error"
    code, out = run("run", prog("divzero.wcf"), "--state", "x=3,y=2", "--semantics", "big")
    assert "z:1" in out


def test_run_trace(tmp_path):
    f = tmp_path / "p.wcf"
    f.write_text("skip ;; skip")
    code, out = run("run", str(f), "--trace")
    lines = out.strip().splitlines()
    assert code == 0 and len(lines) == 4 and "ε" in lines[-2]


def test_run_out_of_fuel(tmp_path):
    f = tmp_path / "p.wcf"
    f.write_text("for (;; skip) skip")
    code, out = run("--fuel", "50", "run", str(f))
    assert code == 0 and out.strip() == "OutOfFuel"


def test_verify_then_check(tmp_path):
    cert = tmp_path / "c.cert"
    code, out = run("verify", "--spec", prog("counter.spec"), "-o", str(cert))
    assert code == 0 and "certificate written" in out
    code, out = run("check", str(cert))
    assert code == 0 and out.startswith("ok: {true}")


def test_verify_failure_exit_one():
    code, out = run("verify", "--spec", prog("wrong.spec"))
    assert code == 1 and "CounterExample" in out


def test_verify_divide_loop_reports_preprocessing():
    code, out = run("verify", "--spec", prog("divide_loop.spec"), "-o", os.devnull)
    assert code == 0 and "preprocessing: loop_nc, if_seq" in out
    assert "(2 goals" in out


def test_corrupted_certificate(tmp_path):
    cert = tmp_path / "c.cert"
    assert run("verify", "--spec", prog("counter.spec"), "-o", str(cert))[0] == 0
    text = cert.read_text()
    assert "[i] <= 3" in text
    cert.write_text(text.replace("[i] <= 3", "[i] <= 2", 1))
    code, out = run("check", str(cert))
    assert code == 1 and "FAIL root" in out


def test_check_wrong_footprint(tmp_path):
    cert = tmp_path / "c.cert"
    assert run("verify", "--spec", prog("counter.spec"), "-o", str(cert))[0] == 0
    code, out = run("check", str(cert), "--vars", "x")
    assert code == 1 and "FAIL" in out


def test_check_garbage_is_parse_error(tmp_path):
    f = tmp_path / "bad.cert"
    f.write_text("(certificate oops")
    assert run("check", str(f))[0] == 2


@pytest.mark.parametrize("emb", ["big", "wp", "cont"])
def test_oracle_embeddings(emb):
    code, out = run("oracle", prog("counter.spec"), "--embedding", emb)
    assert code == 0 and "Holds" in out
    if emb == "cont":
        assert "bounded: only" in out and "family [ε" in out


def test_oracle_refutes_wrong():
    code, out = run("oracle", prog("wrong.spec"))
    assert code == 1 and "CounterExample" in out


def test_fuzz_command():
    code, out = run("fuzz", "--suite", "theorems", "--count", "3", "--seed", "2")
    assert code == 0 and out.startswith("theorems: ")


def test_usage_errors():
    assert run()[0] == 2
    assert run("run")[0] == 2
    assert run("fuzz", "--suite", "nope")[0] == 2
    assert run("run", "/no/such/file")[0] == 2
    assert run("--fuel", "0", "run", prog("skip.wcf"))[0] == 2


def test_parse_error_exit_two(tmp_path):
    f = tmp_path / "p.wcf"
    f.write_text("x = = 1")
    assert run("run", str(f))[0] == 2


def test_cap_exceeded_exit_three():
    assert run("--cap", "10", "oracle", prog("counter.spec"), "--vars", "i,j,k")[0] == 3


def test_parse_state():
    fp = Footprint(("x", "y"), 4)
    assert parse_state("x=1,y=6", fp).vals == (1, 2)
    with pytest.raises(ParseError):
        parse_state("x", fp)
    with pytest.raises(ParseError):
        parse_state("w=1", fp)


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "whilecf", "run", prog("skip.wcf")],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.startswith("Terminated Normal")
