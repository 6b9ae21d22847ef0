"""Command-line benchmark runner.

    gencumul solve mesp a.dzn b.dzn --time-limit 30s --first-solution
    gencumul generate mesp --n 400 --seed 1 --out mesp400.dzn
    gencumul check smic inst.dzn --solution sol.json
    gencumul fuzz --seed 0 --trials 1000 --out cex.dzn
    gencumul replay cex.dzn

Reports are JSON lines (or CSV with ``--csv``). The exit code is 0 unless
some instance could not be read or solved; timeouts are not errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from pathlib import Path
from typing import Optional

from .dzn import ParseError
from .instances import PARSERS, generate_mesp, parse_instance
from .models import BUILDERS, SolutionError, check_solution
from .oracle import Counterexample, differential_test

LOG = logging.getLogger(__name__)

CSV_COLUMNS = ("problem", "instance", "status", "objective", "nodes", "backtracks", "elapsedMillis")
RULE_CHOICES = ("auto", "all", "forbid-only")

_DURATION = re.compile(r"^\s*(\d+(?:\.\d*)?)\s*(ms|s|m|h)?\s*$")
_UNIT = {"ms": 0.001, "s": 1.0, "m": 60.0, "h": 3600.0, None: 1.0}


def parse_duration(text: str) -> float:
    """``"2000s"``, ``"500ms"``, ``"2m"`` or a bare number of seconds."""
    m = _DURATION.match(text)
    if m is None:
        raise argparse.ArgumentTypeError(f"invalid duration {text!r}")
    return float(m.group(1)) * _UNIT[m.group(2)]


def run_one(problem: str, path: str, time_limit: Optional[float], first: bool, rules: str, emit_solution: bool) -> dict:
    """Parse, build, search; always returns a record, with ``error`` on failure."""
    record = {
        "problem": problem,
        "instancePath": path,
        "status": "error",
        "objective": None,
        "nodes": 0,
        "backtracks": 0,
        "elapsedMillis": 0,
        "timeLimitMillis": None if time_limit is None else round(time_limit * 1000),
        "propagatorConfig": {"rules": rules, "resources": []},
    }
    try:
        text = Path(path).read_bytes()
        inst = parse_instance(problem, text)
        model = BUILDERS[problem](inst, rules=rules)
        record["propagatorConfig"]["resources"] = [asdict(f) for f in model.rule_flags()]
        stats, sol = model.solve(time_limit=time_limit, first_solution=first or None)
    except (OSError, ValueError) as exc:
        record["error"] = f"{type(exc).__name__}: {exc}"
        return record
    record.update(
        status=stats.status,
        objective=stats.best_objective if stats.status in ("optimal", "feasible") else None,
        nodes=stats.nodes,
        backtracks=stats.backtracks,
        elapsedMillis=round(stats.elapsed * 1000, 3),
    )
    if emit_solution:
        record["solution"] = sol
    return record


def _run_packed(args):
    return run_one(*args)


def cmd_solve(args) -> int:
    jobs = [(args.problem, p, args.time_limit, args.first_solution, args.rules, args.emit_solution) for p in args.paths]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            records = pool.map(_run_packed, jobs)
            return _emit(records, args)
    return _emit(map(_run_packed, jobs), args)


def _emit(records, args) -> int:
    out = sys.stdout
    writer = None
    if args.csv:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
    errors = 0
    for rec in records:
        if "error" in rec:
            errors += 1
            LOG.error("%s: %s", rec["instancePath"], rec["error"])
        if writer is not None:
            row = dict(rec, instance=rec["instancePath"])
            writer.writerow(["" if row[c] is None else row[c] for c in CSV_COLUMNS])
        else:
            out.write(json.dumps(rec) + "\n")
        out.flush()
    return 1 if errors else 0


def cmd_generate(args) -> int:
    if args.n < 1:
        LOG.error("--n must be >= 1")
        return 2
    text = generate_mesp(args.n, args.seed).to_text()
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).write_text(text)
    return 0


def _load_solution(path: str) -> dict:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict) and isinstance(data.get("solution"), dict):
        # a report line written with --emit-solution
        data = data["solution"]
    if not isinstance(data, dict):
        raise SolutionError("solution file must hold a JSON object")
    return data


def cmd_check(args) -> int:
    record = {"problem": args.problem, "instancePath": args.path, "solutionPath": args.solution}
    try:
        inst = parse_instance(args.problem, Path(args.path).read_bytes())
        sol = _load_solution(args.solution)
        violations, objective = check_solution(args.problem, inst, sol)
    except (OSError, ValueError) as exc:
        record.update(valid=False, error=f"{type(exc).__name__}: {exc}")
        print(json.dumps(record))
        return 1
    record.update(valid=not violations, objective=objective, violations=violations)
    claimed = sol.get("objective")
    if claimed is not None and claimed != objective:
        record["valid"] = False
        record["violations"].append(f"reported objective {claimed} differs from recomputed {objective}")
    print(json.dumps(record))
    return 0 if record["valid"] else 1


def cmd_fuzz(args) -> int:
    cex, stats = differential_test(args.seed, args.trials)
    print(json.dumps({"seed": args.seed, **stats, "counterexample": cex is not None}))
    if cex is None:
        return 0
    text = cex.to_text()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 1


def cmd_replay(args) -> int:
    try:
        cex = Counterexample.from_text(Path(args.path).read_bytes())
    except (OSError, ParseError) as exc:
        LOG.error("%s", exc)
        return 2
    again = cex.replay()
    print(json.dumps({"path": args.path, "reproduced": again is not None, "property": again.prop if again else None}))
    return 1 if again is not None else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gencumul", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve instances and report statistics")
    p.add_argument("problem", choices=sorted(PARSERS))
    p.add_argument("paths", nargs="+")
    p.add_argument("--time-limit", type=parse_duration, default=None, metavar="DUR")
    p.add_argument("--first-solution", action="store_true", help="stop at the first solution")
    p.add_argument("--csv", action="store_true")
    p.add_argument("--rules", choices=RULE_CHOICES, default="auto")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--emit-solution", action="store_true", help="include the solution in JSON records")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("generate", help="write a random instance")
    p.add_argument("problem", choices=["mesp"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("check", help="verify a solution against an instance")
    p.add_argument("problem", choices=sorted(PARSERS))
    p.add_argument("path")
    p.add_argument("--solution", required=True)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("fuzz", help="random soundness trials against the brute-force oracle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--out", default=None, help="where to write a counterexample")
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("replay", help="re-run a saved counterexample")
    p.add_argument("path")
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
