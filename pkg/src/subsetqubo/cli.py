"""Command-line interface and benchmark harness.

Exit codes: 0 on success, 2 when a solve finds nothing or a check finds
violations, 1 on usage or I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import anneal, audit, hopfield, oracle
from .errors import SubsetSumError
from .hopfield import DescentConfig, MultistartConfig, Solution, SolveReport
from .model import (GeneratorConfig, SubsetSumInstance, generate_samples, read_problem,
                    write_problem)
from .qubo import build_qubo, export_ising, qubo_to_ising, verify

BENCH_COLUMNS = ["n", "x_max", "k", "samples", "solved", "mean_restarts", "mean_time_s", "engine"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# -- benchmark ----------------------------------------------------------------

@dataclass
class BenchRow:
    n: int
    x_max: int
    k: int
    samples: int
    solved: int
    mean_restarts: float
    mean_time_s: float
    engine: str

    def as_csv_row(self) -> list:
        return [self.n, self.x_max, self.k, self.samples, self.solved,
                f"{self.mean_restarts:.6g}", f"{self.mean_time_s:.6g}", self.engine]


def solve_with(engine: str, inst: SubsetSumInstance, dcfg: DescentConfig,
               mcfg: MultistartConfig, ecfg: anneal.EvolveConfig) -> SolveReport:
    if engine == "hopfield":
        return hopfield.multistart(inst, dcfg, mcfg)
    if engine == "evolve":
        return anneal.evolve(inst, ecfg)
    return _exact_report(engine, inst, mcfg)


def _exact_report(engine: str, inst: SubsetSumInstance, mcfg: MultistartConfig) -> SolveReport:
    t0 = time.perf_counter()
    cap = mcfg.cap if mcfg.collect_all else 1
    if engine == "brute":
        masks = oracle.brute_force(inst, cap=cap).masks
    elif engine == "mitm":
        masks = oracle.meet_in_middle(inst, cap=cap).masks
    elif engine == "dp":
        feasible, witness = oracle.dp_decide(inst)
        masks = [witness] if feasible else []
    else:
        raise UsageError(f"unknown engine {engine!r}")
    sols = [Solution.from_mask(inst, z) for z in masks]
    return SolveReport(sols, 0, 0, len(sols), len(sols), time.perf_counter() - t0, engine, mcfg.seed)


def run_benchmark(grid: Sequence[GeneratorConfig], engine: str = "hopfield",
                  dcfg: DescentConfig = DescentConfig(),
                  mcfg: MultistartConfig = MultistartConfig(),
                  ecfg: anneal.EvolveConfig = anneal.EvolveConfig(),
                  timing: bool = True) -> list[BenchRow]:
    """Generate ``samples`` instances per configuration, solve each, aggregate.

    Means are taken over solved samples only.  For the evolutionary engine
    "restarts" are generations.
    """
    rows = []
    for cfg in grid:
        restarts, times = [], []
        for inst in generate_samples(cfg):
            rep = solve_with(engine, inst, dcfg, mcfg, ecfg)
            if rep.found and all(verify(inst, s.mask(inst.n)) for s in rep.solutions):
                restarts.append(rep.restarts_used)
                times.append(rep.wall_time)
        solved = len(restarts)
        rows.append(BenchRow(
            n=cfg.n, x_max=cfg.x_max, k=cfg.k, samples=cfg.samples, solved=solved,
            mean_restarts=sum(restarts) / solved if solved else 0.0,
            mean_time_s=(sum(times) / solved if solved else 0.0) if timing else 0.0,
            engine=engine,
        ))
    return rows


def bench_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_COLUMNS)
    for row in rows:
        w.writerow(row.as_csv_row())
    return buf.getvalue()


def read_grid(text: str) -> list[GeneratorConfig]:
    """A grid is a JSON array of ``{n, k, x_max[, x_min][, samples][, seed]}`` objects;
    ``x_min`` defaults to ``-x_max``."""
    doc = json.loads(text)
    if not isinstance(doc, list):
        raise UsageError("benchmark grid must be a JSON array")
    grid = []
    for entry in doc:
        grid.append(GeneratorConfig(
            n=entry["n"], k=entry["k"], x_min=entry.get("x_min", -entry["x_max"]),
            x_max=entry["x_max"], samples=entry.get("samples", 5), seed=entry.get("seed", 0)))
    return grid


# -- command handlers ---------------------------------------------------------

def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _configs(args) -> tuple[DescentConfig, MultistartConfig, anneal.EvolveConfig]:
    dcfg = DescentConfig(policy=args.policy)
    mcfg = MultistartConfig(max_restarts=args.max_restarts, batch=args.batch,
                            workers=args.workers, seed=args.seed,
                            time_limit=args.time_limit,
                            collect_all=getattr(args, "collect_all", False),
                            cap=getattr(args, "cap", 10))
    ecfg = anneal.EvolveConfig(population=args.population, generations=args.generations,
                               seed=args.seed)
    return dcfg, mcfg, ecfg


def cmd_generate(args) -> int:
    cfg = GeneratorConfig(n=args.n, k=args.k, x_min=args.xmin, x_max=args.xmax,
                          samples=args.samples, seed=args.seed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for i, inst in enumerate(generate_samples(cfg)):
        path = out_dir / f"problem_{i:03d}.json"
        path.write_text(write_problem(inst))
        written.append(str(path))
    sys.stdout.write(json.dumps({"written": written}, indent=2) + "\n")
    return 0


def cmd_solve(args) -> int:
    inst = read_problem(Path(args.problem).read_text())
    dcfg, mcfg, ecfg = _configs(args)
    if args.engine == "evolve":
        rep = anneal.evolve(inst, ecfg, fitness=args.fitness, frac_bits=args.frac_bits)
    else:
        rep = solve_with(args.engine, inst, dcfg, mcfg, ecfg)
    _emit(json.dumps(rep.to_dict(timing=not args.no_timing), indent=2) + "\n", args.out)
    return 0 if rep.found else 2


def _read_table(args) -> audit.Table:
    thousands = tuple(args.thousands) if args.thousands is not None else (",", " ")
    return audit.parse_table(Path(args.table).read_text(), decimal=args.decimal_sep,
                             thousands=thousands, decimals=args.decimals)


def cmd_audit(args) -> int:
    table = _read_table(args)
    dcfg, mcfg, ecfg = _configs(args)
    opts = audit.ExtractOptions(
        engine=args.engine, max_per_target=args.max_per_target,
        include_zero_targets=args.include_zero_targets,
        include_singletons=args.include_singletons,
        descent=dcfg, multistart=mcfg, evolve=ecfg, workers=args.workers or 1)
    structure = audit.extract_structure(table, args.scope, args.col, opts,
                                        source=f"{Path(args.table).name}")
    _emit(structure.to_json(), args.out)
    return 0


def cmd_check(args) -> int:
    structure = audit.SumStructure.from_json(Path(args.structure).read_text())
    report = audit.check_structure(structure, _read_table(args), args.col)
    _emit(report.to_json(), args.out)
    return 2 if report.violations else 0


def cmd_bench(args) -> int:
    grid = read_grid(Path(args.grid).read_text())
    dcfg, mcfg, ecfg = _configs(args)
    rows = run_benchmark(grid, args.engine, dcfg, mcfg, ecfg, timing=not args.no_timing)
    _emit(bench_csv(rows), args.out)
    return 0


def cmd_export_ising(args) -> int:
    inst = read_problem(Path(args.problem).read_text())
    ising = qubo_to_ising(build_qubo(inst))
    if args.quantize_bits is None:
        _emit(export_ising(ising), args.out)
        return 0
    q = anneal.quantize(ising, args.quantize_bits)
    doc = {
        "n": q.n,
        "frac_bits": q.frac_bits,
        "scale": str(q.scale),
        "linear": q.bias_values().tolist(),
        "quadratic": [[i, j, float(q.couplings[i, j] + q.couplings[j, i]) / (1 << q.frac_bits)]
                      for i in range(q.n) for j in range(i + 1, q.n)
                      if q.couplings[i, j] + q.couplings[j, i]],
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="subsetqubo", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def solver_opts(sp, restarts=10**6):
        sp.add_argument("--max-restarts", type=int, default=restarts)
        sp.add_argument("--batch", type=int, default=10**4)
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--time-limit", type=float, default=None)
        sp.add_argument("--policy", choices=hopfield.POLICIES, default="steepest")
        sp.add_argument("--population", type=int, default=128)
        sp.add_argument("--generations", type=int, default=10_000)

    def table_opts(sp):
        sp.add_argument("--table", required=True)
        sp.add_argument("--col", type=int, default=None)
        sp.add_argument("--decimal-sep", default=".")
        sp.add_argument("--thousands", action="append", default=None,
                        help="thousands separator to strip (repeatable)")
        sp.add_argument("--decimals", type=int, default=2)
        sp.add_argument("--out", default=None)

    g = sub.add_parser("generate", help="write artificial instances")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--xmin", type=int, required=True)
    g.add_argument("--xmax", type=int, required=True)
    g.add_argument("--samples", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-dir", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve one problem document")
    s.add_argument("--problem", required=True)
    s.add_argument("--engine", choices=["hopfield", "evolve", "brute", "dp", "mitm"],
                   default="hopfield")
    solver_opts(s)
    s.add_argument("--collect-all", action="store_true")
    s.add_argument("--cap", type=int, default=10)
    s.add_argument("--fitness", choices=["exact", "quantized"], default="exact")
    s.add_argument("--frac-bits", type=int, default=8)
    s.add_argument("--no-timing", action="store_true")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_solve)

    a = sub.add_parser("audit", help="extract the sum structure of a CSV table")
    table_opts(a)
    a.add_argument("--scope", choices=["column", "table"], default="column")
    a.add_argument("--engine", choices=audit.ENGINES, default="oracle-auto")
    a.add_argument("--max-per-target", type=int, default=10)
    a.add_argument("--include-zero-targets", action="store_true")
    a.add_argument("--include-singletons", action="store_true")
    solver_opts(a, restarts=10**5)
    a.set_defaults(func=cmd_audit)

    c = sub.add_parser("check", help="replay a sum structure against a table")
    c.add_argument("--structure", required=True)
    table_opts(c)
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("bench", help="run a benchmark grid and emit CSV")
    b.add_argument("--grid", required=True)
    b.add_argument("--engine", choices=["hopfield", "evolve"], default="hopfield")
    solver_opts(b)
    b.add_argument("--no-timing", action="store_true")
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_bench)

    e = sub.add_parser("export-ising", help="export the Ising model of a problem")
    e.add_argument("--problem", required=True)
    e.add_argument("--quantize-bits", type=int, default=None)
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_export_ising)
    return p


def run_cli(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (SubsetSumError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
