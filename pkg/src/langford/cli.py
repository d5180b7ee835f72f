"""Experiment front end.

Subcommands: solve one instance/variant, sweep a grid into a CSV, render a
markdown report from a sweep CSV, run the brute-force enumerator, and
export a DIMACS encoding. Batch outputs only; exit codes: 0 done, 1 usage
or input error, 2 timeout.
"""

from __future__ import annotations

import argparse
import csv
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .engine import solve_all
from .heuristics import HeuristicKind
from .models import Instance, VariantConfig, build_model
from .oracle import enumerate_bruteforce
from .satgen import encode, write_dimacs

CSV_FIELDS = [
    "k",
    "n",
    "model",
    "branch",
    "sym",
    "cons",
    "heuristic",
    "solutions",
    "nodes",
    "failures",
    "time_ms",
    "timed_out",
]

TRIVIAL_NODE_BOUND = 5

DEFAULT_SWEEP_VARIANTS = [
    {"model": "positional", "sym": "p", "heuristic": "domoverwdeg"},
    {"model": "channelled", "branch": "d", "sym": "d", "cons": "both", "heuristic": "static"},
    {"model": "channelled", "branch": "d", "sym": "d", "cons": "p", "heuristic": "static"},
    {"model": "channelled", "branch": "d", "sym": "p", "cons": "both", "heuristic": "static"},
    {"model": "channelled", "branch": "d", "sym": "p", "cons": "p", "heuristic": "static"},
    {"model": "channelled", "branch": "d", "sym": "d", "cons": "both", "heuristic": "sdf"},
]


@dataclass
class RunRecord:
    """One CSV row of a solver run."""

    k: int
    n: int
    model: str
    branch: Optional[str]
    sym: str
    cons: Optional[str]
    heuristic: str
    solutions: int
    nodes: int
    failures: int
    time_ms: int
    timed_out: bool

    @property
    def label(self) -> str:
        return f"{self.k:02d}_{self.n:02d}"

    @property
    def trivial(self) -> bool:
        return self.nodes < TRIVIAL_NODE_BOUND

    def sort_key(self) -> tuple:
        return (
            self.k,
            self.n,
            self.model,
            self.branch or "",
            self.sym,
            self.cons or "",
            self.heuristic,
        )

    def to_csv(self) -> list[str]:
        return [
            str(self.k),
            str(self.n),
            self.model,
            self.branch or "",
            self.sym,
            self.cons or "",
            self.heuristic,
            str(self.solutions),
            str(self.nodes),
            str(self.failures),
            str(self.time_ms),
            "true" if self.timed_out else "false",
        ]

    @classmethod
    def from_csv(cls, row: Sequence[str]) -> "RunRecord":
        return cls(
            k=int(row[0]),
            n=int(row[1]),
            model=row[2],
            branch=row[3] or None,
            sym=row[4],
            cons=row[5] or None,
            heuristic=row[6],
            solutions=int(row[7]),
            nodes=int(row[8]),
            failures=int(row[9]),
            time_ms=int(row[10]),
            timed_out=row[11] == "true",
        )


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _variant_from_args(parser, args) -> VariantConfig:
    if args.model != "channelled" and (args.branch or args.cons):
        parser.error("--branch/--cons only apply to --model channelled")
    try:
        return VariantConfig(
            model=args.model,
            branch=args.branch if args.model == "channelled" else None,
            sym=args.sym if args.sym is not None else _default_sym(args.model),
            cons=(args.cons or "both") if args.model == "channelled" else None,
            heuristic=HeuristicKind(args.heuristic),
            implied=not getattr(args, "no_implied", False),
        )
    except ValueError as exc:
        parser.error(str(exc))


def _default_sym(model: str) -> str:
    return {"direct": "d", "positional": "p", "channelled": "d"}[model]


def _run_variant(task) -> RunRecord:
    k, n, variant, node_limit, time_limit = task
    config = VariantConfig(
        model=variant["model"],
        branch=variant.get("branch"),
        sym=variant.get("sym", "none"),
        cons=variant.get("cons"),
        heuristic=HeuristicKind(variant.get("heuristic", "static")),
        implied=variant.get("implied", True),
    )
    model = build_model(Instance(k, n), config)
    solutions, stats = solve_all(
        model, config.heuristic, node_limit=node_limit, time_limit=time_limit
    )
    return RunRecord(
        k=k,
        n=n,
        model=config.model,
        branch=config.branch,
        sym=config.sym,
        cons=config.cons,
        heuristic=config.heuristic.value,
        solutions=len(solutions),
        nodes=stats.nodes,
        failures=stats.failures,
        time_ms=stats.elapsed_ms,
        timed_out=stats.timed_out,
    )


def _write_csv(path: Path, records: list[RunRecord]) -> None:
    records = sorted(records, key=RunRecord.sort_key)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_FIELDS)
        for rec in records:
            writer.writerow(rec.to_csv())


def _read_csv(path: Path) -> list[RunRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_FIELDS:
            raise ValueError(f"{path}:1: bad header {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                records.append(RunRecord.from_csv(row))
            except (IndexError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: malformed row: {exc}") from exc
    return records


def cmd_solve(parser, args) -> int:
    config = _variant_from_args(parser, args)
    model = build_model(Instance(args.k, args.n), config)
    solutions, stats = solve_all(
        model,
        config.heuristic,
        node_limit=args.node_limit,
        time_limit=args.timeout,
    )
    record = RunRecord(
        k=args.k,
        n=args.n,
        model=config.model,
        branch=config.branch,
        sym=config.sym,
        cons=config.cons,
        heuristic=config.heuristic.value,
        solutions=len(solutions),
        nodes=stats.nodes,
        failures=stats.failures,
        time_ms=stats.elapsed_ms,
        timed_out=stats.timed_out,
    )
    print(
        f"{record.label} {config.label()}: solutions={record.solutions} "
        f"nodes={record.nodes} failures={record.failures} "
        f"time_ms={record.time_ms} timed_out={str(record.timed_out).lower()}"
    )
    if args.print_solutions:
        for sol in solutions:
            print(" ".join(map(str, model.sequence_of(sol))))
    if args.out:
        path = Path(args.out)
        fresh = not path.exists() or path.stat().st_size == 0
        with open(path, "a", newline="") as fh:
            writer = csv.writer(fh)
            if fresh:
                writer.writerow(CSV_FIELDS)
            writer.writerow(record.to_csv())
    return 2 if record.timed_out else 0


def _parse_variant_spec(parser, text: str) -> dict:
    variant: dict = {}
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        if "=" not in token:
            parser.error(f"bad variant token {token!r} (expected key=value)")
        key, value = token.split("=", 1)
        key = key.strip()
        value = value.strip()
        if key not in ("model", "branch", "sym", "cons", "heuristic", "implied"):
            parser.error(f"unknown variant key {key!r}")
        variant[key] = value == "true" if key == "implied" else value
    if "model" not in variant:
        parser.error(f"variant spec {text!r} needs model=...")
    return variant


def cmd_sweep(parser, args) -> int:
    if args.full:
        k_range = range(2, 7)
        n_range = range(2, 18)
    else:
        k_range = range(args.k_min, args.k_max + 1)
        n_range = range(args.n_min, args.n_max + 1)
    if args.variant:
        variants = [_parse_variant_spec(parser, spec) for spec in args.variant]
    else:
        variants = DEFAULT_SWEEP_VARIANTS

    out = Path(args.out)
    existing: dict[tuple, RunRecord] = {}
    if args.skip_existing and out.exists():
        try:
            for rec in _read_csv(out):
                existing[rec.sort_key()] = rec
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1

    tasks = []
    for k in k_range:
        for n in n_range:
            for variant in variants:
                try:
                    config = VariantConfig(
                        model=variant["model"],
                        branch=variant.get("branch"),
                        sym=variant.get("sym", "none"),
                        cons=variant.get("cons"),
                        heuristic=HeuristicKind(variant.get("heuristic", "static")),
                        implied=variant.get("implied", True),
                    )
                except ValueError:
                    continue  # invalid combo for this model kind
                key = (k, n, config.model, config.branch or "", config.sym,
                       config.cons or "", config.heuristic.value)
                if key in existing:
                    continue
                tasks.append((k, n, variant, args.node_limit, args.timeout))

    records = list(existing.values())
    if tasks:
        if args.jobs > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                records.extend(pool.map(_run_variant, tasks))
        else:
            records.extend(_run_variant(task) for task in tasks)
    try:
        _write_csv(out, records)
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {len(records)} rows to {out}")
    return 0


def _column_label(rec: RunRecord) -> str:
    if rec.model == "channelled":
        base = f"branch:{rec.branch.upper()} sym:{rec.sym.upper()} cons:{rec.cons.capitalize()}"
    else:
        base = f"{rec.model} sym:{rec.sym.upper()}"
    return f"{base} {rec.heuristic}"


def render_report(records: list[RunRecord]) -> str:
    """Markdown node-count table: instances as rows, variants as columns,
    row minima in bold, Mean and Sum footers over the non-trivial rows."""
    records = sorted(records, key=RunRecord.sort_key)
    columns: list[str] = []
    col_of: dict[str, int] = {}
    rows: dict[tuple[int, int], dict[int, RunRecord]] = {}
    for rec in records:
        label = _column_label(rec)
        if label not in col_of:
            col_of[label] = len(columns)
            columns.append(label)
        rows.setdefault((rec.k, rec.n), {})[col_of[label]] = rec

    lines = [
        f"Nodes are branching commits (assignments and value removals); an "
        f"instance row is trivial when some variant solved it in under "
        f"{TRIVIAL_NODE_BOUND} nodes. Mean/Sum cover non-trivial rows with a "
        f"complete, untimed-out set of entries.",
        "",
        "| Instance | " + " | ".join(columns) + " |",
        "|---" * (len(columns) + 1) + "|",
    ]
    sums = [0] * len(columns)
    aggregated = 0
    for (k, n), cells in sorted(rows.items()):
        present = [cells.get(i) for i in range(len(columns))]
        finished = [rec.nodes for rec in present if rec is not None and not rec.timed_out]
        min_nodes = min(finished) if finished else None
        rendered = []
        for rec in present:
            if rec is None:
                rendered.append("")
            elif rec.timed_out:
                rendered.append("t/o")
            elif rec.nodes == min_nodes:
                rendered.append(f"**{rec.nodes:,}**")
            else:
                rendered.append(f"{rec.nodes:,}")
        label = f"{k:02d}_{n:02d}"
        lines.append(f"| {label} | " + " | ".join(rendered) + " |")
        complete = all(rec is not None and not rec.timed_out for rec in present)
        trivial = min_nodes is not None and min_nodes < TRIVIAL_NODE_BOUND
        if complete and not trivial:
            aggregated += 1
            for i, rec in enumerate(present):
                sums[i] += rec.nodes
    if aggregated:
        means = [f"{round(total / aggregated):,}" for total in sums]
        lines.append("| Mean | " + " | ".join(means) + " |")
        lines.append("| Sum | " + " | ".join(f"{total:,}" for total in sums) + " |")
    return "\n".join(lines) + "\n"


def cmd_report(parser, args) -> int:
    try:
        records = _read_csv(Path(args.csv))
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = render_report(records)
    if args.out:
        Path(args.out).write_text(text)
    else:
        print(text, end="")
    return 0


def cmd_oracle(parser, args) -> int:
    try:
        arrangements = enumerate_bruteforce(args.k, args.n, args.sym)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(len(arrangements))
    if args.print_solutions:
        for arr in arrangements:
            print(" ".join(map(str, arr)))
    return 0


def cmd_export_dimacs(parser, args) -> int:
    config = _variant_from_args(parser, args)
    model = build_model(Instance(args.k, args.n), config)
    cnf = encode(model)
    try:
        write_dimacs(cnf, args.out)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {cnf.num_vars} vars, {len(cnf.clauses)} clauses to {args.out}")
    return 0


_FLAG_ONLY_KEYS = {"print-solutions", "skip-existing", "full", "no-implied"}


def _apply_config(argv: list[str]) -> list[str]:
    """Expand `--config FILE` (key=value lines mirroring long flag names)
    into flags appended after the explicit ones; explicit flags win."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    path = argv[at + 1]
    argv = argv[:at] + argv[at + 2 :]
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if flag in argv:
            continue
        if key.replace("_", "-") in _FLAG_ONLY_KEYS:
            if value.lower() in ("1", "true", "yes"):
                argv.append(flag)
        else:
            argv.extend([flag, value])
    return argv


def _add_variant_flags(sub) -> None:
    sub.add_argument("--k", type=int, required=True)
    sub.add_argument("--n", type=int, required=True)
    sub.add_argument("--model", choices=["direct", "positional", "channelled"], required=True)
    sub.add_argument("--branch", choices=["d", "p"])
    sub.add_argument("--sym", choices=["d", "p", "none"])
    sub.add_argument("--cons", choices=["both", "d", "p"])
    sub.add_argument(
        "--heuristic",
        choices=[h.value for h in HeuristicKind],
        default="static",
    )
    sub.add_argument("--no-implied", action="store_true",
                     help="drop the redundant per-number occurrence constraints")


def build_parser() -> _Parser:
    parser = _Parser(prog="langford", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one instance/variant")
    _add_variant_flags(p_solve)
    p_solve.add_argument("--timeout", type=float, help="wall-clock limit in seconds")
    p_solve.add_argument("--node-limit", type=int)
    p_solve.add_argument("--print-solutions", action="store_true")
    p_solve.add_argument("--out", help="CSV file to append the run row to")
    p_solve.add_argument("--config", help="key=value defaults file")
    p_solve.set_defaults(func=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="run a grid of instances and variants")
    p_sweep.add_argument("--k-min", type=int, default=2)
    p_sweep.add_argument("--k-max", type=int, default=4)
    p_sweep.add_argument("--n-min", type=int, default=2)
    p_sweep.add_argument("--n-max", type=int, default=10)
    p_sweep.add_argument("--full", action="store_true",
                         help="the full grid: k 2..6, n 2..17 (pair with a long --timeout)")
    p_sweep.add_argument("--variant", action="append",
                         help="model=...,branch=...,sym=...,cons=...,heuristic=... (repeatable)")
    p_sweep.add_argument("--timeout", type=float, default=60.0)
    p_sweep.add_argument("--node-limit", type=int)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--skip-existing", action="store_true")
    p_sweep.add_argument("--out", default="sweep.csv")
    p_sweep.add_argument("--config", help="key=value defaults file")
    p_sweep.set_defaults(func=cmd_sweep)

    p_report = sub.add_parser("report", help="render a sweep CSV as markdown")
    p_report.add_argument("csv")
    p_report.add_argument("--out")
    p_report.set_defaults(func=cmd_report)

    p_oracle = sub.add_parser("oracle", help="brute-force enumeration count")
    p_oracle.add_argument("--k", type=int, required=True)
    p_oracle.add_argument("--n", type=int, required=True)
    p_oracle.add_argument("--sym", choices=["none", "first-less-last"], default="none")
    p_oracle.add_argument("--print-solutions", action="store_true")
    p_oracle.set_defaults(func=cmd_oracle)

    p_dimacs = sub.add_parser("export-dimacs", help="write a DIMACS encoding")
    _add_variant_flags(p_dimacs)
    p_dimacs.add_argument("--out", required=True)
    p_dimacs.set_defaults(func=cmd_export_dimacs)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config(argv)
    except (OSError, ValueError, IndexError) as exc:
        print(f"error: bad config file: {exc}", file=sys.stderr)
        return 1
    args = parser.parse_args(argv)
    return args.func(parser, args)


if __name__ == "__main__":
    sys.exit(main())
