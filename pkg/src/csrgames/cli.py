"""``csr`` command line tool.

Exit codes: 0 equilibrium found or verified, 1 no equilibrium (or the given
placement is not one), 2 unknown (search budget or iteration limit hit),
64 usage error, 65 malformed input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from . import digraph, fractional, gadgets, hierarchy, oracle, undirected
from .errors import (
    BudgetExceeded,
    CSRError,
    MalformedInput,
    NotUltrametric,
    SearchBudgetExceeded,
)
from .model import Instance, is_equilibrium, split_capacities

__all__ = ["main", "dispatch", "auto_select", "RunReport", "EXIT_OK", "EXIT_NONE",
           "EXIT_UNKNOWN", "EXIT_USAGE", "EXIT_DATA"]

EXIT_OK, EXIT_NONE, EXIT_UNKNOWN, EXIT_USAGE, EXIT_DATA = 0, 1, 2, 64, 65

ALGORITHMS = ("hierarchical", "potential", "two-object", "twobin", "bruteforce", "auto")
NP_WARNING = "warning: no polynomial method applies; equilibrium existence is NP-complete in general, using exhaustive search"


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(message)


@dataclass
class RunReport:
    algorithm: str
    instance_digest: str
    status: str  # Equilibrium | NoEquilibrium | Unknown
    steps: int
    seconds: float

    def line(self) -> str:
        return (f"alg={self.algorithm} instance={self.instance_digest} status={self.status} "
                f"steps={self.steps} time={self.seconds:.3f}s")


def _digest(path: str) -> str:
    return hashlib.sha1(Path(path).read_bytes()).hexdigest()[:12]


def auto_select(inst: Instance) -> tuple:
    """Pick the most specific method for ``inst``; returns ``(name, warning)``."""
    if inst.network == "tree" or (inst.costs is not None and hierarchy.is_ultrametric(inst.costs)):
        return "hierarchical", None
    if inst.symmetric and inst.m == 2 and inst.utility != "oracle":
        return "two-object", None
    if inst.utility == "binary" and inst.m == 2:
        return "twobin", None
    if inst.symmetric and inst.utility == "binary":
        return "potential", None
    return "bruteforce", NP_WARNING


# I/O helpers --------------------------------------------------------------

def _load(path: str) -> Instance:
    from .io import load_instance
    try:
        return load_instance(path)
    except OSError as exc:
        raise MalformedInput(f"cannot read {path}: {exc.strerror}") from None


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _placement_json(inst: Instance, P) -> str:
    from .io import placement_to_dict
    return json.dumps(placement_to_dict(inst, P), indent=2) + "\n"


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from None


def _default_start(inst: Instance) -> tuple:
    """Each free node stores its first interesting object (object 0 if none)."""
    P = []
    for i in range(inst.n):
        if inst.pinned[i] is not None:
            P.append(inst.pinned[i])
        else:
            pick = sorted(inst.interests[i])[: inst.capacities[i]] if inst.interests else []
            P.append(frozenset(pick or [0]))
    return tuple(P)


# subcommands ----------------------------------------------------------------

def _run_solver(alg: str, inst: Instance, args) -> tuple:
    """Returns ``(placement or None, steps)``."""
    trace = (lambda line: print(line, file=sys.stderr)) if args.trace else None
    if alg == "hierarchical":
        run = hierarchy.run_hierarchical(inst, trace)
        return run.placement, run.steps
    if alg == "two-object":
        run = undirected.run_two_object(inst, trace)
        return run.placement, run.deviations
    if alg == "twobin":
        return digraph.solve_2bin(inst), 0
    if alg == "potential":
        unit, fmap = split_capacities(inst)
        P, log = undirected.dynamics_binary(unit, _default_start(unit), _schedule(args))
        if trace:
            for rec in log:
                trace(rec.line(unit.objects))
        return fmap(P), len(log)
    if alg == "bruteforce":
        return oracle.find_equilibrium(inst, args.budget), 0
    raise _Usage(f"unknown algorithm {alg!r}")


def _schedule(args) -> str:
    sched = getattr(args, "schedule", "round-robin")
    if sched == "random":
        return f"random:{args.seed}"
    return sched


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    alg = args.alg
    if alg == "auto":
        alg, warning = auto_select(inst)
        if warning:
            print(warning, file=sys.stderr)
    start = time.perf_counter()
    try:
        P, steps = _run_solver(alg, inst, args)
    except NotUltrametric as exc:
        print(f"error: not hierarchical: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (BudgetExceeded, SearchBudgetExceeded) as exc:
        report = RunReport(alg, _digest(args.instance), "Unknown", 0, time.perf_counter() - start)
        print(f"{exc}\n{report.line()}", file=sys.stderr)
        return EXIT_UNKNOWN
    except ValueError as exc:
        print(f"error: {alg} does not apply: {exc}", file=sys.stderr)
        return EXIT_DATA
    elapsed = time.perf_counter() - start
    if P is None:
        print(RunReport(alg, _digest(args.instance), "NoEquilibrium", steps, elapsed).line(), file=sys.stderr)
        return EXIT_NONE
    verdict = is_equilibrium(inst, P)
    if not verdict:
        print(f"internal error: {alg} returned a placement where node {inst.names[verdict.witness]} deviates",
              file=sys.stderr)
        return EXIT_UNKNOWN
    _emit(_placement_json(inst, P), args.output)
    print(RunReport(alg, _digest(args.instance), "Equilibrium", steps, elapsed).line(), file=sys.stderr)
    return EXIT_OK


def cmd_dynamics(args) -> int:
    from .io import load_placement
    inst = _load(args.instance)
    P0 = load_placement(inst, args.start)
    try:
        P, log = undirected.dynamics_binary(inst, P0, _schedule(args), args.max_steps)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except RuntimeError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_UNKNOWN
    for rec in log:
        print(rec.line(inst.objects))
    if args.output:
        _emit(_placement_json(inst, P), args.output)
    return EXIT_OK if is_equilibrium(inst, P) else EXIT_UNKNOWN


def cmd_verify(args) -> int:
    from .io import load_placement
    inst = _load(args.instance)
    P = load_placement(inst, args.placement)
    verdict = is_equilibrium(inst, P)
    if verdict:
        print("EQUILIBRIUM")
        return EXIT_OK
    dev = [inst.objects[a] for a in sorted(verdict.deviation)]
    print(f"NOT AN EQUILIBRIUM: node {inst.names[verdict.witness]} prefers {dev}")
    return EXIT_NONE


def cmd_bruteforce(args) -> int:
    inst = _load(args.instance)
    try:
        if args.all:
            found = oracle.enumerate_equilibria(inst, args.budget)
        else:
            first = oracle.find_equilibrium(inst, args.budget)
            found = [] if first is None else [first]
    except BudgetExceeded as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_UNKNOWN
    from .io import placement_to_dict
    payload = [placement_to_dict(inst, P) for P in found]
    _emit(json.dumps(payload if args.all else (payload[0] if payload else None), indent=2) + "\n", args.output)
    return EXIT_OK if found else EXIT_NONE


def cmd_gadget(args) -> int:
    from .io import dump_instance
    try:
        text = Path(args.formula).read_text(encoding="utf-8")
    except OSError as exc:
        raise MalformedInput(f"cannot read {args.formula}: {exc.strerror}") from None
    phi = gadgets.parse_dimacs(text)
    kwargs = {"pin_s": args.pin_s}
    if args.which == "I1":
        kwargs["weights"] = args.i1_weights
    inst = gadgets.GADGETS[args.which](phi, **kwargs)
    _emit(dump_instance(inst), args.output)
    return EXIT_OK


def cmd_evencycle(args) -> int:
    try:
        g = digraph.Digraph.parse(Path(args.digraph).read_text(encoding="utf-8"))
    except OSError as exc:
        raise MalformedInput(f"cannot read {args.digraph}: {exc.strerror}") from None
    except ValueError as exc:
        raise MalformedInput(str(exc)) from None
    try:
        cycle = digraph.find_even_cycle(g, args.budget)
    except SearchBudgetExceeded as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_UNKNOWN
    if cycle is None:
        print("NONE")
        return EXIT_NONE
    print(" ".join(map(str, cycle)))
    return EXIT_OK


def cmd_fsolve(args) -> int:
    from .io import fplacement_to_dict, load_placement
    inst = _load(args.instance)
    if inst.utility != "sum":
        print("error: fractional solving needs sum utilities (weights)", file=sys.stderr)
        return EXIT_DATA
    if args.start:
        P0 = fractional.from_integral(inst, load_placement(inst, args.start))
    else:
        unit_start = tuple(
            inst.pinned[i] if inst.pinned[i] is not None else
            frozenset(sorted(range(inst.m), key=lambda a: (-inst.weights[i][a], a))[: inst.capacities[i]])
            for i in range(inst.n)
        )
        P0 = fractional.from_integral(inst, unit_start)
    result = fractional.iterated_fractional_br(inst, P0, args.max_iters, args.eps)
    if result is None:
        print(f"no {args.eps}-equilibrium reached within {args.max_iters} sweeps", file=sys.stderr)
        return EXIT_UNKNOWN
    _emit(json.dumps(fplacement_to_dict(inst, result), indent=2) + "\n", args.output)
    return EXIT_OK


# parser -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="csr", description="Equilibria of capacitated selfish replication games.")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized schedules")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("solve", help="compute an equilibrium")
    s.add_argument("instance")
    s.add_argument("--alg", choices=ALGORITHMS, default="auto")
    s.add_argument("--trace", action="store_true", help="print one line per algorithm step to stderr")
    s.add_argument("--schedule", default="round-robin", help="schedule for --alg potential")
    s.add_argument("--budget", type=int, default=oracle.DEFAULT_BUDGET)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("dynamics", help="run better-response dynamics from a placement")
    s.add_argument("instance")
    s.add_argument("start")
    s.add_argument("--schedule", default="round-robin", help="round-robin, random or random:<seed>")
    s.add_argument("--max-steps", type=int, default=10**6)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_dynamics)

    s = sub.add_parser("verify", help="check whether a placement is an equilibrium")
    s.add_argument("instance")
    s.add_argument("placement")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("bruteforce", help="exhaustive equilibrium search")
    s.add_argument("instance")
    s.add_argument("--all", action="store_true", help="list every equilibrium")
    s.add_argument("--budget", type=int, default=oracle.DEFAULT_BUDGET)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_bruteforce)

    s = sub.add_parser("gadget", help="build a reduction instance from a 3-CNF formula")
    s.add_argument("formula")
    s.add_argument("--which", choices=sorted(gadgets.GADGETS), required=True)
    s.add_argument("--pin-s", choices=("alpha", "beta", "gamma"), help="freeze node S on an object")
    s.add_argument("--i1-weights", choices=("lemma", "stated"), default="lemma")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_gadget)

    s = sub.add_parser("evencycle", help="find an even directed cycle")
    s.add_argument("digraph")
    s.add_argument("--budget", type=int, default=digraph.DEFAULT_CYCLE_BUDGET)
    s.set_defaults(func=cmd_evencycle)

    s = sub.add_parser("fsolve", help="iterated best responses in the fractional game")
    s.add_argument("instance")
    s.add_argument("--eps", type=_fraction, default=Fraction(0))
    s.add_argument("--max-iters", type=int, default=1000)
    s.add_argument("--start", help="integral start placement (default: heaviest objects)")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_fsolve)
    return p


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _Usage("a subcommand is required")
        if getattr(args, "pin_s", None) == "gamma" and args.which == "I1":
            raise _Usage("I1 has no object gamma")
        return args.func(args)
    except _Usage as exc:
        parser.print_usage(sys.stderr)
        print(f"csr: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MalformedInput as exc:
        print(f"csr: malformed input: {exc}", file=sys.stderr)
        return EXIT_DATA
    except CSRError as exc:
        print(f"csr: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
