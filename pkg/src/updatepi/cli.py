"""Command-line explorer.

Exit codes: 0 success, 1 usage error, 2 parse or scope error,
3 correspondence counterexample found.
"""
from __future__ import annotations

import argparse
import os
import shlex
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .congruence import canonical
from .engine import Configuration, Engine, EngineError, First, Flags, Random, StepRecord, subterm_at
from .enumerate import FRAGMENTS, FULL, closed_terms
from .lts import FlagMismatch, correspondence_check, transitions, tau_closure
from .syntax import ParseError, parse, print_term
from .trace import TraceError, export_trace, replay
from .update import NothingToRecover

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_COUNTEREXAMPLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class Session:
    initial: Configuration
    flags: Flags = Flags()
    seed: Optional[int] = None
    engine: Engine = field(init=False)
    current: Configuration = field(init=False)

    def __post_init__(self):
        self.engine = Engine(self.flags)
        self.current = self.initial

    @property
    def trace(self) -> list[StepRecord]:
        return self.engine.trace

    @classmethod
    def load(cls, text: str, file: str = "<input>", flags: Flags = Flags(), seed: Optional[int] = None) -> "Session":
        return cls(Configuration.of(parse(text, file)), flags, seed)


def _state_str(c: Configuration) -> str:
    return str(c.state)


def cmd_steps(session: Session) -> str:
    steps = session.engine.enumerate_steps(session.current)
    if not steps:
        return "no redexes"
    return "\n".join(f"[{i}] {s.describe()}" for i, s in enumerate(steps))


def cmd_fire(session: Session, index: int) -> str:
    steps = session.engine.enumerate_steps(session.current)
    if not 0 <= index < len(steps):
        raise UsageError(f"redex index {index} out of range (0..{len(steps) - 1})" if steps else "no redexes")
    session.current = session.engine.apply_step(session.current, steps[index])
    return f"{steps[index].rule}: {print_term(session.current.term)}\nstate: {_state_str(session.current)}"


def cmd_blocks(session: Session) -> str:
    paths = session.engine.blocked_positions(session.current)
    if not paths:
        return "no blocked processes"
    canon = canonical(session.current.term)
    return "\n".join(
        f"[{i}] at {'.'.join(map(str, p)) or 'root'}: {print_term(subterm_at(canon, p))}" for i, p in enumerate(paths)
    )


def cmd_recover(session: Session, block_index: int) -> str:
    paths = session.engine.blocked_positions(session.current)
    if not 0 <= block_index < len(paths):
        raise NothingToRecover(f"nothing to recover: no blocked process number {block_index}")
    session.current = session.engine.recover_block(session.current, paths[block_index])
    return f"Recover: {print_term(session.current.term)}\nstate: {_state_str(session.current)}"


def cmd_check(bound: int, flags: Flags = Flags(), lts_flags: Optional[Flags] = None, alphabet: str = "full", depth: int = 3):
    """Run the correspondence check; returns the list of reports."""
    if alphabet == "fragments":
        sets = [(a.label, closed_terms(bound, a)) for a in FRAGMENTS]
    elif alphabet == "full":
        sets = [("full", closed_terms(bound, FULL))]
    else:
        match = [a for a in FRAGMENTS if a.label == alphabet]
        if not match:
            raise UsageError(f"unknown alphabet {alphabet!r}")
        sets = [(alphabet, closed_terms(bound, match[0]))]
    return [(label, correspondence_check(bound, flags, lts_flags, terms=terms, depth=depth)) for label, terms in sets]


# -- argument handling -------------------------------------------------------------


def _flags(args) -> Flags:
    return Flags(allow_blocked_steps=args.allow_blocked_steps, seq_both=args.seq_both)


def _seed(args) -> int:
    env = os.environ.get("UPDATEPI_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"UPDATEPI_SEED must be an integer, got {env!r}") from None
    return args.seed


def _load(args) -> Session:
    path = Path(args.file)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    return Session.load(text, str(path), _flags(args), getattr(args, "seed", None))


def _policy(args):
    return Random(_seed(args)) if args.policy == "random" else First()


def _run_reduce(args, out) -> int:
    s = _load(args)
    s.current, taken = s.engine.run(s.current, args.fuel, _policy(args))
    for step in taken:
        print(step.describe(), file=out)
    print(print_term(s.current.term), file=out)
    print(f"state: {_state_str(s.current)}", file=out)
    return EXIT_OK


def _run_steps(args, out) -> int:
    print(cmd_steps(_load(args)), file=out)
    return EXIT_OK


def _run_fire(args, out) -> int:
    s = _load(args)
    for i in args.index or []:
        print(cmd_fire(s, i), file=out)
    for b in args.recover or []:
        print(cmd_recover(s, b), file=out)
    if args.trace:
        Path(args.trace).write_bytes(export_trace(s.trace, s.initial.term, s.flags))
    return EXIT_OK


def _run_lts(args, out) -> int:
    s = _load(args)
    flags = s.flags
    term = canonical(s.initial.term)
    for t in sorted(transitions(term, flags), key=lambda t: (str(t.label), str(t.target))):
        print(f"--{t.label}--> {print_term(t.target)}", file=out)
    reach = tau_closure(term, args.depth, flags)
    print(f"silent closure at depth {args.depth}: {len(reach)} terms", file=out)
    for q in sorted(reach, key=str):
        print(f"  {print_term(q)}", file=out)
    return EXIT_OK


def _run_check(args, out) -> int:
    flags = _flags(args)
    lts_flags = Flags(
        allow_blocked_steps=args.allow_blocked_steps if args.lts_allow_blocked_steps is None else args.lts_allow_blocked_steps,
        seq_both=args.seq_both if args.lts_seq_both is None else args.lts_seq_both,
    )
    reports = cmd_check(args.bound, flags, lts_flags, args.alphabet, args.depth)
    bad = 0
    for label, r in reports:
        print(f"[{label}] {r.summary()}", file=out)
        for ce in r.counterexamples[:10]:
            print(f"  {ce}", file=out)
        bad += len(r.counterexamples)
    return EXIT_COUNTEREXAMPLE if bad else EXIT_OK


def _run_normalize(args, out) -> int:
    s = _load(args)
    print(print_term(canonical(s.initial.term)), file=out)
    return EXIT_OK


def _run_export(args, out) -> int:
    s = _load(args)
    s.current, _ = s.engine.run(s.current, args.fuel, _policy(args))
    data = export_trace(s.trace, s.initial.term, s.flags)
    Path(args.trace).write_bytes(data)
    print(f"wrote {len(s.trace)} steps to {args.trace}", file=out)
    return EXIT_OK


def _run_replay(args, out) -> int:
    try:
        data = Path(args.trace).read_bytes()
    except OSError as e:
        raise UsageError(f"cannot read {args.trace}: {e.strerror}") from None
    c, steps = replay(data)
    print(f"replayed {len(steps)} steps", file=out)
    print(print_term(c.term), file=out)
    print(f"state: {_state_str(c)}", file=out)
    return EXIT_OK


REPL_HELP = """commands:
  steps            list redexes
  fire N           fire redex N
  blocks           list blocked processes
  recover N        roll back the failed update behind blocked process N
  term | state     show the current term or state
  export FILE      write the trace so far
  help | quit"""


def repl(session: Session, lines, out) -> int:
    print(print_term(session.current.term), file=out)
    for line in lines:
        words = shlex.split(line)
        if not words:
            continue
        cmd, rest = words[0], words[1:]
        try:
            if cmd in ("quit", "exit"):
                break
            elif cmd == "steps":
                print(cmd_steps(session), file=out)
            elif cmd == "fire" and len(rest) == 1:
                print(cmd_fire(session, int(rest[0])), file=out)
            elif cmd == "blocks":
                print(cmd_blocks(session), file=out)
            elif cmd == "recover" and len(rest) == 1:
                print(cmd_recover(session, int(rest[0])), file=out)
            elif cmd == "term":
                print(print_term(session.current.term), file=out)
            elif cmd == "state":
                print(_state_str(session.current), file=out)
            elif cmd == "export" and len(rest) == 1:
                Path(rest[0]).write_bytes(export_trace(session.trace, session.initial.term, session.flags))
                print(f"wrote {len(session.trace)} steps", file=out)
            else:
                print(REPL_HELP, file=out)
        except (UsageError, NothingToRecover, EngineError, ValueError, OSError) as e:
            print(f"error: {e}", file=out)
    return EXIT_OK


def _run_repl(args, out) -> int:
    return repl(_load(args), sys.stdin, out)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--allow-blocked-steps", action="store_true", help="let blocked processes reduce internally")
    common.add_argument("--seq-both", action="store_true", help="let later sequence elements step with the first")

    p = _Parser(prog="updatepi", description="Explore update-pi terms step by step and compare reductions with transitions.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cmd(name, func, help, file=True):
        sp = sub.add_parser(name, parents=[common], help=help)
        if file:
            sp.add_argument("file", help=".upi source file")
        sp.set_defaults(func=func)
        return sp

    def scheduling(sp):
        sp.add_argument("--fuel", type=int, default=100)
        sp.add_argument("--policy", choices=("first", "random"), default="first")
        sp.add_argument("--seed", type=int, default=0, help="random policy seed (UPDATEPI_SEED overrides)")

    scheduling(cmd("reduce", _run_reduce, "run a schedule until no redex or fuel is spent"))
    cmd("steps", _run_steps, "list the enabled redexes")
    sp = cmd("fire", _run_fire, "fire redexes by index, then recover blocks by index")
    sp.add_argument("--index", type=int, action="append", help="redex index (repeatable, applied in order)")
    sp.add_argument("--recover", type=int, action="append", help="blocked process index to roll back")
    sp.add_argument("--trace", help="write the resulting trace here")
    sp = cmd("lts", _run_lts, "print transitions and the silent closure")
    sp.add_argument("--depth", type=int, default=2)
    sp = cmd("check", _run_check, "compare reductions with silent transitions on generated terms", file=False)
    sp.add_argument("--bound", type=int, default=4)
    sp.add_argument("--depth", type=int, default=3)
    sp.add_argument("--alphabet", default="full", help="full, fragments, or one fragment name")
    for flag in ("--lts-allow-blocked-steps", "--lts-seq-both"):
        sp.add_argument(flag, type=lambda v: v.lower() in ("1", "true", "yes"), default=None, help=argparse.SUPPRESS)
    cmd("normalize", _run_normalize, "print the canonical form")
    sp = cmd("export", _run_export, "run a schedule and write its trace")
    sp.add_argument("--trace", required=True)
    scheduling(sp)
    sp = cmd("replay", _run_replay, "replay a trace document", file=False)
    sp.add_argument("trace")
    cmd("repl", _run_repl, "interactive stepper on stdin")
    return p


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "bound", 0) < 0 or getattr(args, "fuel", 0) < 0:
            raise UsageError("bounds and fuel must be nonnegative")
        return args.func(args, out)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FlagMismatch as e:
        print(f"refusing to compare: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (NothingToRecover, EngineError, TraceError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main_exit() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
