"""Command line: ``slearner features|learn|decompose|verify <file.hl>``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import Config
from .heaplang import HeapLangError, parse
from .learner import report as learner_report
from .speclang.printer import print_formula
from .verifier.learning import learn_point, point_catalog, snapshots_at
from .verifier.obligations import decompose, emit_obligation, frame_elide
from .verifier.pipeline import prepare, verify
from .verifier.points import describe_point

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_LIMIT = 3


class UsageError(Exception):
    pass


def _grid(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slearner", description="Learn separation-logic invariants "
                                     "at call sites and verify heap programs by bounded checking.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "features": "print the feature catalog at every learning point",
        "learn": "learn and print the invariant at every learning point",
        "decompose": "learn invariants and write one obligation file per triple",
        "verify": "run the full pipeline and check every obligation",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        p.add_argument("file", help="heap-language source file (.hl)")
        p.add_argument("--seed", type=int, required=name != "features",
                       help="seed for random test generation" + (" (required)" if name != "features" else ""))
        p.add_argument("--deref-bound", type=int, default=1, help="longest field path in features (default 1)")
        p.add_argument("--tests", type=int, default=10, help="number of random tests (default 10)")
        p.add_argument("--grid", type=_grid, default=None,
                       help="use every combination of these integer inputs instead of random tests, e.g. 0,1,2")
        p.add_argument("--int-range", type=int, default=5, help="random integer inputs lie in [-B, B] (default 5)")
        p.add_argument("--max-nodes", type=int, default=5, help="bounded checking: records per state (default 5)")
        p.add_argument("--num-bound", type=int, default=8, help="bounded checking: integers in [-B, B] (default 8)")
        p.add_argument("--mutation-rounds", type=int, default=10, help="mutation rounds per point (default 10)")
        p.add_argument("--mutants-per-round", type=int, default=500, help="mutants per round (default 500)")
        p.add_argument("--relearn-budget", type=int, default=3, help="counterexample relearn rounds (default 3)")
        p.add_argument("--emit", choices=("report", "csv", "sl"), default="report", help="output format")
        p.add_argument("--out", default=None, help="directory for emitted files (decompose, verify --emit sl)")
        p.add_argument("--json", default=None, help="verify: also write the machine-readable summary here")
    return parser


def config_from(args: argparse.Namespace) -> Config:
    try:
        return Config(
            seed=args.seed if args.seed is not None else 0,
            deref_bound=args.deref_bound,
            tests=args.tests,
            grid=args.grid,
            int_range=args.int_range,
            max_nodes=args.max_nodes,
            num_bound=args.num_bound,
            mutation_rounds=args.mutation_rounds,
            mutants_per_round=args.mutants_per_round,
            relearn_budget=args.relearn_budget,
            emit=args.emit,
        )
    except ValueError as exc:
        raise UsageError(str(exc))


def load(path: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}")
    try:
        return parse(text)
    except HeapLangError as exc:
        raise UsageError(f"{path}: {exc}")


def cmd_features(args, config: Config, out) -> int:
    program = load(args.file)
    prog, lay, _ = prepare(program, config)
    for p in lay.points:
        if not p.learned:
            continue
        cat = point_catalog(prog, p)
        if config.emit == "csv":
            out.write(",".join(cat.displays()) + "\n")
            continue
        rel = ", ".join(".".join(path) for path, _ in p.relevant)
        out.write(f"point {p.id} [{describe_point(prog, p)}] relevant: {rel}\n")
        out.write(cat.listing() + "\n")
    return EXIT_OK


def cmd_learn(args, config: Config, out) -> int:
    program = load(args.file)
    prog, lay, tests = prepare(program, config)
    status = EXIT_OK
    for p in lay.points:
        if not p.learned:
            continue
        r = learn_point(prog, p, snapshots_at(p, tests), config)
        if config.emit == "csv":
            m = r.refined.matrix if r.refined else r.initial
            out.write(f"# point {p.id}\n{m.to_csv()}")
            continue
        out.write(f"point {p.id} [{describe_point(prog, p)}]\n")
        out.write("initial matrix:\n" + r.initial.to_csv())
        if r.refined is not None:
            out.write(f"after {r.refined.rounds} mutation round(s): {r.refined.matrix.n_rows} rows\n")
            out.write(r.refined.matrix.to_csv())
            out.write(learner_report(r.refined.matrix, r.refined.chosen, r.refined.regions,
                                     r.catalog.displays()) + "\n")
        if r.error is not None:
            out.write(f"error: {r.error}\n")
            status = EXIT_LIMIT
            continue
        out.write(f"learned: {print_formula(r.raw)}\n")
        out.write(f"invariant: {print_formula(r.formula)}\n")
        if r.dead:
            out.write("warning: invariant unsatisfiable within bounds (dead code suspect)\n")
    return status


def _write_obligations(obs, outdir: Path, stem: str) -> list[Path]:
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for ob in obs:
        path = outdir / f"{stem}.ob{ob.index}.sl.txt"
        path.write_text(emit_obligation(ob))
        paths.append(path)
    return paths


def cmd_decompose(args, config: Config, out) -> int:
    program = load(args.file)
    prog, lay, tests = prepare(program, config)
    invariants = {}
    for p in lay.points:
        if p.learned:
            r = learn_point(prog, p, snapshots_at(p, tests), config)
            if r.error is not None:
                sys.stderr.write(f"error: {r.error}\n")
                return EXIT_LIMIT
            invariants[p.id] = r.formula
    obs, _ = decompose(prog, lay, invariants)
    obs = [frame_elide(ob, prog) for ob in obs]
    outdir = Path(args.out or ".")
    for path in _write_obligations(obs, outdir, Path(args.file).stem):
        out.write(f"wrote {path}\n")
    for ob in obs:
        out.write(f"{ob.index}. {ob.triple()}\n")
    return EXIT_OK


def cmd_verify(args, config: Config, out) -> int:
    program = load(args.file)
    report = verify(program, config, args.file)
    out.write(report.text())
    if args.json:
        Path(args.json).write_text(report.json() + "\n")
    if config.emit == "sl":
        _write_obligations(report.obligations, Path(args.out or "."), Path(args.file).stem)
    return EXIT_OK if report.verified else EXIT_FAIL


COMMANDS = {"features": cmd_features, "learn": cmd_learn, "decompose": cmd_decompose, "verify": cmd_verify}


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from(args)
        return COMMANDS[args.command](args, config, out)
    except UsageError as exc:
        sys.stderr.write(f"slearner: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
