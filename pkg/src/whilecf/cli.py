"""Command-line entry point: run, verify, check, oracle and fuzz."""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import fuzz, lang
from .bigstep import eval_big, valid_big
from .errors import CapExceeded, ParseError, WhileCFError
from .lang import DEFAULT_CAP, DEFAULT_MODULUS, Footprint
from .proof import Triple, check, parse_certificate, print_certificate
from .smallstep import (Config, enumerate_continuations, pretty_cont, pretty_config, trace_small,
                        valid_cont, valid_wp)
from .verify import erase, parse_annotated, parse_spec, spec_footprint, verify_file

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_CAP = 0, 1, 2, 3
DEFAULT_FUEL = 10000
DEFAULT_VARS = ("x", "y", "z")


@dataclass
class RunConfig:
    footprint: Footprint | None = None
    fuel: int = DEFAULT_FUEL
    modulus: int = DEFAULT_MODULUS
    seed: int = 0
    cap: int = DEFAULT_CAP
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.fuel < 1 or self.cap < 1:
            raise ValueError("fuel and caps must be positive")


def _read(path):
    return Path(path).read_text()


def _footprint(args, used=()):
    names = tuple(args.vars.split(",")) if getattr(args, "vars", None) else None
    if names is None:
        names = tuple(sorted(used)) or DEFAULT_VARS
    return Footprint(names, args.modulus or DEFAULT_MODULUS)


def parse_state(text, fp):
    vals = {}
    for part in filter(None, (text or "").split(",")):
        name, sep, val = part.partition("=")
        if not sep:
            raise ParseError(f"expected name=value in state, got {part!r}")
        try:
            vals[name.strip()] = int(val)
        except ValueError:
            raise ParseError(f"not an integer: {val!r}") from None
    try:
        return fp.state(vals)
    except KeyError as exc:
        raise ParseError(str(exc.args[0])) from None


def cmd_run(args, out):
    c = erase(parse_annotated(_read(args.file)))
    fp = _footprint(args, lang.command_vars(c))
    st = parse_state(args.state, fp)
    if args.semantics == "big":
        print(eval_big(c, st, args.fuel), file=out)
        return EXIT_OK
    trace, o = trace_small(Config(c, (), st), args.fuel)
    if args.trace:
        for i, cfg in enumerate(trace):
            print(f"{i:4d}  {pretty_config(cfg)}", file=out)
    print(o, file=out)
    return EXIT_OK


def cmd_verify(args, out):
    program = _read(args.program) if args.program else None
    spec_text = _read(args.spec)
    fp = _footprint(args) if args.vars else None
    r = verify_file(program, spec_text, fp, args.if_seq, args.loop_nocontinue, args.cap)
    if r.transforms:
        print("preprocessing: " + ", ".join(r.transforms), file=out)
    for e in r.errors:
        print(f"error: {e}", file=out)
    for res in r.failures:
        print(f"failed: {res}", file=out)
    goals = r.residual_goals
    print(f"{len(r.vcs)} verification conditions ({len(goals)} goals, "
          f"{len(r.vcs) - len(goals)} definedness)", file=out)
    if not r.ok:
        return EXIT_FAIL
    text = print_certificate(r.certificate)
    if args.out:
        Path(args.out).write_text(text)
        print(f"certificate written to {args.out}", file=out)
    else:
        out.write(text)
    print(f"proved {r.certificate.triple}", file=out)
    return EXIT_OK


def cmd_check(args, out):
    cert = parse_certificate(_read(args.certificate))
    fp = cert.footprint
    if args.vars or args.modulus:
        fp = Footprint(tuple(args.vars.split(",")) if args.vars else fp.vars,
                       args.modulus or fp.modulus)
    if fp.size > args.cap:
        raise CapExceeded(f"{fp.size} states exceed the enumeration cap {args.cap}")
    rep = check(cert.tree, fp, args.cap)
    if not rep.ok:
        for f in rep.failures:
            print(f"FAIL {f}", file=out)
        return EXIT_FAIL
    print(f"ok: {rep.triple}", file=out)
    print(f"({rep.obligations} entailments checked on {fp.size} states)", file=out)
    return EXIT_OK


def cmd_oracle(args, out):
    spec = parse_spec(_read(args.spec))
    if spec.program is None:
        raise ParseError("the spec needs a 'program:' entry")
    c = erase(parse_annotated(spec.program))
    fp = spec_footprint(spec, c, _footprint(args) if args.vars else None)
    if fp.size > args.cap:
        raise CapExceeded(f"{fp.size} states exceed the enumeration cap {args.cap}")
    t = Triple(spec.pre, c, spec.post, spec.brk, spec.con)
    print(f"triple: {t}", file=out)
    if args.embedding == "big":
        v = valid_big(t, fp, args.fuel, args.cap)
    elif args.embedding == "wp":
        v = valid_wp(t, fp, args.fuel, args.cap)
    else:
        family = enumerate_continuations(fp, args.depth, args.size)
        shown = ", ".join(pretty_cont(k) for k in family[:5])
        more = f", ... ({len(family)} in total)" if len(family) > 5 else ""
        print(f"bounded: only {len(family)} continuations checked "
              f"(depth {args.depth}, size {args.size}); family [{shown}{more}]", file=out)
        v = valid_cont(t, fp, args.fuel, family, args.cap)
    print(v, file=out)
    return EXIT_OK if v.ok else EXIT_FAIL


def cmd_fuzz(args, out):
    names = list(fuzz.SUITES) if args.suite == "all" else [args.suite]
    bad = False
    for name in names:
        r = fuzz.run_suite(name, args.count, args.seed)
        print(r, file=out)
        for v in r.violations:
            print(f"  reproducer: {v}", file=out)
        bad = bad or not r.ok
    return EXIT_FAIL if bad else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="whilecf",
                                description="While-CF semantics, oracles and proof checking")
    p.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="state enumeration cap")
    sub = p.add_subparsers(dest="command", required=True)

    def fp_opts(sp):
        sp.add_argument("--vars", help="comma-separated footprint variables")
        sp.add_argument("--modulus", type=int, default=None)

    r = sub.add_parser("run", help="run a program from one state")
    r.add_argument("file")
    r.add_argument("--semantics", choices=("big", "small"), default="small")
    r.add_argument("--state", default="", help="e.g. x=1,y=2 (others are 0)")
    r.add_argument("--trace", action="store_true", help="print small-step configurations")
    fp_opts(r)
    r.set_defaults(func=cmd_run)

    v = sub.add_parser("verify", help="verify an annotated program and emit a certificate")
    v.add_argument("program", nargs="?", help="program file (optional if the spec has one)")
    v.add_argument("--spec", required=True)
    v.add_argument("--out", "-o", help="certificate file")
    v.add_argument("--if-seq", dest="if_seq", action=argparse.BooleanOptionalAction, default=None)
    v.add_argument("--loop-nocontinue", dest="loop_nocontinue",
                   action=argparse.BooleanOptionalAction, default=None)
    fp_opts(v)
    v.set_defaults(func=cmd_verify)

    c = sub.add_parser("check", help="re-check a certificate")
    c.add_argument("certificate")
    fp_opts(c)
    c.set_defaults(func=cmd_check)

    o = sub.add_parser("oracle", help="decide a spec's triple with one of the validity oracles")
    o.add_argument("spec")
    o.add_argument("--embedding", choices=("big", "wp", "cont"), default="wp")
    o.add_argument("--depth", type=int, default=2)
    o.add_argument("--size", type=int, default=3)
    fp_opts(o)
    o.set_defaults(func=cmd_oracle)

    f = sub.add_parser("fuzz", help="run a seeded property suite")
    f.add_argument("--suite", choices=(*fuzz.SUITES, "all"), default="semantics")
    f.add_argument("--count", type=int, default=None)
    f.add_argument("--seed", type=int, default=0)
    f.set_defaults(func=cmd_fuzz)
    return p


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        RunConfig(fuel=args.fuel, cap=args.cap)
        return args.func(args, out)
    except CapExceeded as exc:
        print(f"cap exceeded: {exc}", file=sys.stderr)
        return EXIT_CAP
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except WhileCFError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


__all__ = ["main", "build_parser", "RunConfig", "parse_state"]
