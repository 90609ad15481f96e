"""``subqubo`` command line: gen, solve, bench, fit."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .bench import BenchInstance, fit_scaling, read_records, records_to_csv, run_bench, summarize
from .driver import GROUPING_METHODS, LOCAL_SEARCHES, SUBSOLVERS, SolverConfig, solve
from .instances import gen_er, gen_regular, load_instance, load_raw, maxcut_to_qubo, save_instance
from .local_search import TabuConfig
from .qubo import QuboError
from .subsolver import QaoaConfig

log = logging.getLogger("subqubo")

KINDS = ("regular3", "er")


def int_list(text: str) -> list[int]:
    """``"10,12"`` or inclusive range ``"10:24:2"`` (step defaults to 1); parts may be mixed."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            bits = [int(b) for b in part.split(":")]
            if len(bits) not in (2, 3) or (len(bits) == 3 and bits[2] <= 0):
                raise argparse.ArgumentTypeError(f"bad range {part!r}")
            lo, hi = bits[0], bits[1]
            step = bits[2] if len(bits) == 3 else 1
            out.extend(range(lo, hi + 1, step))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return out


def str_list(choices):
    def parse(text: str) -> list[str]:
        vals = [v.strip() for v in text.split(",") if v.strip()]
        bad = [v for v in vals if v not in choices]
        if bad or not vals:
            raise argparse.ArgumentTypeError(f"invalid choice(s) {bad}; expected from {list(choices)}")
        return vals

    return parse


def generate(kind: str, n: int, index: int, seed: int, p: float, weights: str):
    rng_seed = [seed, index]
    if kind == "regular3":
        return gen_regular(n, 3, weights, rng_seed)
    return gen_er(n, p, weights, rng_seed)


def _add_solver_flags(ap: argparse.ArgumentParser, multi: bool) -> None:
    if multi:
        ap.add_argument("--method", type=str_list(GROUPING_METHODS), default=["cluster"],
                        help="comma-separated grouping methods")
        ap.add_argument("--d", type=int_list, required=True, help="sub-QUBO sizes, e.g. 10:24:2")
    else:
        ap.add_argument("--method", choices=GROUPING_METHODS, default="cluster")
        ap.add_argument("--d", type=int, required=True)
    ap.add_argument("--subsolver", choices=SUBSOLVERS, default="qaoa")
    ap.add_argument("--shots", type=int, default=1024)
    ap.add_argument("--qaoa-depth", type=int, default=1)
    ap.add_argument("--expectation", choices=("sampled", "exact"), default="sampled")
    ap.add_argument("--max-evals", type=int, default=100)
    ap.add_argument("--local-search", choices=LOCAL_SEARCHES, default="greedy")
    ap.add_argument("--tabu-iters", type=int, default=None)
    ap.add_argument("--tabu-tenure", type=int, default=None)
    ap.add_argument("--patience", type=int, default=3)
    ap.add_argument("--max-outer", type=int, default=100)
    ap.add_argument("--pool", type=int, default=20)
    ap.add_argument("--solver-seed", type=int, default=None)


def _solver_config(args, seed: int) -> SolverConfig:
    method = args.method[0] if isinstance(args.method, list) else args.method
    d = args.d[0] if isinstance(args.d, list) else args.d
    return SolverConfig(
        grouping_method=method,
        sub_size=d,
        subsolver=args.subsolver,
        qaoa=QaoaConfig(
            depth=args.qaoa_depth,
            shots=args.shots,
            max_evals=args.max_evals,
            expectation_mode=args.expectation,
        ),
        local_search=args.local_search,
        tabu=TabuConfig(iter_max=args.tabu_iters, n_tabu=args.tabu_tenure),
        patience=args.patience,
        max_outer_iters=args.max_outer,
        pool_capacity=args.pool,
        seed=seed,
    )


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="subqubo", description="Hybrid sub-QUBO solver and benchmark tools.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate Max-Cut instance files")
    g.add_argument("--kind", choices=KINDS, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--p", type=float, default=0.05, help="ER edge probability")
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--weights", choices=("unit", "uniform"), default="unit")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, required=True, help="output directory")

    s = sub.add_parser("solve", help="solve one instance file and print the result as JSON")
    s.add_argument("--in", dest="inp", type=Path, required=True)
    _add_solver_flags(s, multi=False)
    s.add_argument("--seed", type=int, default=0, help="solver seed (alias of --solver-seed)")
    s.add_argument("--out", type=Path, default=None)
    s.add_argument("--trace", type=Path, default=None, help="JSONL file of per-iteration events")
    s.add_argument("--dump-groups", type=Path, default=None, help="JSONL file of per-iteration groupings")

    b = sub.add_parser("bench", help="run a (instance x method x d) sweep")
    b.add_argument("--in", dest="inp", type=Path, nargs="*", default=None,
                   help="instance files or directories; otherwise instances are generated")
    b.add_argument("--kind", choices=KINDS, default="regular3")
    b.add_argument("--n", type=int_list, default=[100])
    b.add_argument("--p", type=float, default=0.05)
    b.add_argument("--count", type=int, default=10)
    b.add_argument("--weights", choices=("unit", "uniform"), default="unit")
    b.add_argument("--seed", type=int, default=0, help="instance seed")
    _add_solver_flags(b, multi=True)
    b.add_argument("--jobs", type=int, default=1)
    b.add_argument("--out", type=Path, required=True, help="JSONL output")
    b.add_argument("--csv", type=Path, default=None, help="optional CSV projection")

    f = sub.add_parser("fit", help="fit calls = a/(d/N) from bench output")
    f.add_argument("--in", dest="inp", type=Path, required=True)
    f.add_argument("--method", choices=GROUPING_METHODS, default=None)
    f.add_argument("--out", type=Path, default=None)
    return ap


def _write(text: str, path: Optional[Path]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text)


def cmd_gen(args) -> int:
    args.out.mkdir(parents=True, exist_ok=True)
    for i in range(args.count):
        graph = generate(args.kind, args.n, i, args.seed, args.p, args.weights)
        save_instance(graph, args.out / f"{args.kind}-n{args.n}-s{args.seed}-{i:04d}.json")
    log.info("wrote %d instances to %s", args.count, args.out)
    return 0


def cmd_solve(args) -> int:
    instance = load_instance(args.inp)
    seed = args.solver_seed if args.solver_seed is not None else args.seed
    config = _solver_config(args, seed)
    events: list[dict] = []
    result = solve(instance, config, instance_id=args.inp.stem, trace=events.append)
    if args.trace is not None:
        lines = [json.dumps({k: v for k, v in e.items() if k != "groups"}, sort_keys=True) for e in events]
        args.trace.write_text("".join(ln + "\n" for ln in lines))
    if args.dump_groups is not None:
        lines = [json.dumps({"iteration": e["iteration"], "groups": e["groups"]}) for e in events]
        args.dump_groups.write_text("".join(ln + "\n" for ln in lines))
    _write(json.dumps(result.to_dict(), sort_keys=True) + "\n", args.out)
    return 0


def _bench_instances(args) -> list[BenchInstance]:
    if args.inp:
        files: list[Path] = []
        for p in args.inp:
            files.extend(sorted(p.glob("*.json")) if p.is_dir() else [p])
        out = []
        for path in files:
            raw = load_raw(path)
            kind = "maxcut" if hasattr(raw, "edges") else "qubo"
            qubo = maxcut_to_qubo(raw) if kind == "maxcut" else raw
            out.append(BenchInstance(path.stem, kind, qubo))
        return out
    insts = []
    for n in args.n:
        for i in range(args.count):
            graph = generate(args.kind, n, i, args.seed, args.p, args.weights)
            insts.append(BenchInstance(f"{args.kind}-n{n}-s{args.seed}-{i:04d}", args.kind, maxcut_to_qubo(graph)))
    return insts


def cmd_bench(args) -> int:
    instances = _bench_instances(args)
    if not instances:
        raise QuboError("no instances to benchmark")
    base = _solver_config(args, args.solver_seed if args.solver_seed is not None else 0)
    records = []
    with args.out.open("w") as fh:
        for rec in run_bench(instances, args.method, args.d, base, jobs=args.jobs):
            fh.write(rec.to_json() + "\n")
            fh.flush()
            records.append(rec)
    if args.csv is not None:
        args.csv.write_text(records_to_csv(records))
    log.info("wrote %d records to %s", len(records), args.out)
    return 0


def cmd_fit(args) -> int:
    records = read_records(args.inp.read_text())
    methods = [args.method] if args.method else sorted({r.method for r in records})
    out = {"summary": summarize(r for r in records if r.method in methods), "fits": {}}
    for m in methods:
        out["fits"][m] = fit_scaling(r for r in records if r.method == m).to_dict()
    _write(json.dumps(out, sort_keys=True, indent=2) + "\n", args.out)
    return 0


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "bench": cmd_bench, "fit": cmd_fit}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except (QuboError, OSError) as exc:
        print(f"subqubo: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
