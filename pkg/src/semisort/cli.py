"""Benchmark and operations front end.

Subcommands: gen, sort, histogram, reduce, transpose, ngram, bench, grid,
stats. Benchmarks time the library call only (generation, copies and
verification excluded), run ``--reps`` times (default 4) and report the
median of the runs after the first; ``--verify`` replays the oracle on
the final output and drives the exit code. All reports are CSV, to
stdout or ``--out``.

Default tuning parameters honor the SEMISORT_* environment variables
(see ``semisort.params.ENV_OVERRIDES``); ``SEMISORT_THREADS`` sets the
default worker count.
"""

from __future__ import annotations

import argparse
import csv
import statistics
import sys
import time
from dataclasses import dataclass, field

from . import graphs, ngrams
from .adapters import adapter_for
from .aggregate import ReduceSpec, collect_reduce
from .core import Telemetry, semisort
from .datagen import DistributionSpec, compute_stats, generate
from .errors import SemisortError
from .oracle import multiset_equal, oracle_collect_reduce, validate_semisort
from .params import TuningParams
from .parallel import set_default_workers
from .records import RecordArray, read_records, write_records

SORT_ALGOS = ("eq", "lt", "int-eq", "int-lt")
BENCH_ALGOS = SORT_ALGOS + ("histogram", "collect-reduce")

BENCH_COLUMNS = [
    "algo", "dist", "param", "n", "key_bits", "threads", "seed",
    "median_seconds", "depth_max", "verified",
]
GRID_COLUMNS = BENCH_COLUMNS + ["normalized", "error"]


@dataclass
class BenchConfig:
    algo: str
    dist: str = "uniform"
    param: float = 1.0
    n: int = 0
    key_bits: int = 64
    input_path: str | None = None
    threads: int = 1
    reps: int = 4
    verify: bool = False
    seed: int = 1
    tuning: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.algo not in BENCH_ALGOS:
            raise SemisortError(f"unknown algo {self.algo!r}")
        if self.reps < 1 or self.threads < 1:
            raise SemisortError("reps and threads must be >= 1")


def _adapter_and_mode(algo: str, data: RecordArray):
    identity = algo.startswith("int-")
    mode = "lt" if algo.endswith("lt") else "eq"
    return adapter_for(data, identity=identity), mode


def _load_input(cfg: BenchConfig) -> RecordArray:
    if cfg.input_path:
        return read_records(cfg.input_path)
    spec = DistributionSpec(cfg.dist, cfg.param, cfg.n, cfg.key_bits, cfg.seed)
    return generate(spec)


def _median_after_first(times: list[float]) -> float:
    return times[0] if len(times) == 1 else statistics.median(times[1:])


def run_bench(cfg: BenchConfig, clock=time.perf_counter) -> dict:
    """Execute one benchmark cell and return its CSV row values."""
    base = _load_input(cfg)
    params = TuningParams.from_env(len(base), seed=cfg.seed, **cfg.tuning)
    adapter, mode = _adapter_and_mode(cfg.algo, base) \
        if cfg.algo in SORT_ALGOS else (adapter_for(base), "eq")

    times: list[float] = []
    telemetry = Telemetry()
    final = None
    result = None
    for _ in range(cfg.reps):
        telemetry = Telemetry()
        if cfg.algo in SORT_ALGOS:
            work = base.copy()
            start = clock()
            semisort(work, adapter, mode, params, workers=cfg.threads,
                     telemetry=telemetry)
            times.append(clock() - start)
            final = work
        else:
            spec = ReduceSpec.counting() if cfg.algo == "histogram" \
                else ReduceSpec.summing64()
            start = clock()
            result = collect_reduce(base, adapter, spec, params,
                                    workers=cfg.threads, telemetry=telemetry)
            times.append(clock() - start)

    verified = ""
    violation = None
    if cfg.verify:
        if cfg.algo in SORT_ALGOS:
            rep = validate_semisort(base, final, adapter)
            verified = rep.valid
            violation = rep.first_violation
        else:
            spec = ReduceSpec.counting() if cfg.algo == "histogram" \
                else ReduceSpec.summing64()
            verified = multiset_equal(result, oracle_collect_reduce(base, adapter, spec), adapter)
            if not verified:
                violation = (0, "aggregate mismatch against sequential fold")
    return {
        "violation_detail": violation,
        "algo": cfg.algo,
        "dist": "file" if cfg.input_path else cfg.dist,
        "param": cfg.input_path or _format_param(cfg.param),
        "n": len(base),
        "key_bits": base.key_width,
        "threads": cfg.threads,
        "seed": cfg.seed,
        "median_seconds": f"{_median_after_first(times):.6f}",
        "depth_max": telemetry.max_depth,
        "verified": str(verified).lower() if verified != "" else "",
    }


def _format_param(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(value)


def emit_grid(spec_path, reps: int, threads: int, seed: int) -> list[dict]:
    """One bench row per grid cell plus a normalized-to-fastest column.

    The grid file is CSV with header ``dist,param,n,algo``; ``#`` lines
    are skipped. Cells that fail carry their message in the ``error``
    column and do not stop the grid. Normalization groups rows by
    (dist, param, n).
    """
    cells = []
    with open(spec_path, "r", encoding="utf-8", newline="") as fh:
        rows = [row for row in csv.reader(fh)
                if row and not row[0].lstrip().startswith("#")]
    if not rows:
        return []
    header = [col.strip() for col in rows[0]]
    expected = ["dist", "param", "n", "algo"]
    if header != expected:
        raise SemisortError(f"grid header must be {','.join(expected)}")
    for row in rows[1:]:
        if len(row) != 4:
            raise SemisortError(f"malformed grid row: {row}")
        cells.append((row[0].strip(), row[1].strip(), row[2].strip(), row[3].strip()))

    out: list[dict] = []
    for dist, param, n_text, algo in cells:
        row = {col: "" for col in GRID_COLUMNS}
        row.update({"algo": algo, "dist": dist, "param": param, "n": n_text})
        try:
            cfg = BenchConfig(algo=algo, dist=dist, param=float(param),
                              n=int(n_text), threads=threads, reps=reps,
                              seed=seed)
            row.update(run_bench(cfg))
        except (SemisortError, ValueError) as exc:
            row["error"] = str(exc)
        out.append(row)

    groups: dict[tuple, list[dict]] = {}
    for row in out:
        groups.setdefault((row["dist"], row["param"], row["n"]), []).append(row)
    for rows_in_group in groups.values():
        timed = [float(r["median_seconds"]) for r in rows_in_group
                 if r["median_seconds"] != ""]
        if not timed:
            continue
        fastest = min(timed)
        for r in rows_in_group:
            if r["median_seconds"] != "":
                ratio = float(r["median_seconds"]) / fastest if fastest > 0 else 1.0
                r["normalized"] = f"{ratio:.3f}"
    return out


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _open_out(args):
    return open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout


def _write_rows(args, columns: list[str], rows: list[dict]) -> None:
    fh = _open_out(args)
    try:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({col: row.get(col, "") for col in columns})
    finally:
        if fh is not sys.stdout:
            fh.close()


def _dist_spec(args) -> DistributionSpec:
    return DistributionSpec(args.dist, args.param, args.n, args.key_bits, args.seed)


def _input_records(args) -> RecordArray:
    if getattr(args, "infile", None):
        return read_records(args.infile)
    if args.dist is None or args.param is None or args.n is None:
        raise SemisortError("provide --in FILE or --dist/--param/--n")
    return generate(_dist_spec(args))


def _cmd_gen(args) -> int:
    write_records(args.out, generate(_dist_spec(args)))
    return 0


def _cmd_sort(args) -> int:
    data = _input_records(args)
    adapter, mode = _adapter_and_mode(args.algo, data)
    params = TuningParams.from_env(len(data), seed=args.seed)
    snapshot = data.copy() if args.verify else None
    telemetry = Telemetry()
    semisort(data, adapter, mode, params, workers=args.threads, telemetry=telemetry)
    if args.out:
        write_records(args.out, data)
    status = 0
    if args.verify:
        report = validate_semisort(snapshot, data, adapter)
        if not report.valid:
            print(f"verification failed: {report.first_violation}", file=sys.stderr)
            status = 1
        else:
            print("verified=true", file=sys.stderr)
    print(f"n={len(data)} depth_max={telemetry.max_depth}", file=sys.stderr)
    return status


def _aggregate_cmd(args, spec: ReduceSpec) -> int:
    data = _input_records(args)
    adapter = adapter_for(data, identity=args.identity)
    params = TuningParams.from_env(len(data), seed=args.seed)
    result = collect_reduce(data, adapter, spec, params, workers=args.threads)
    fh = _open_out(args)
    try:
        result.write_csv(fh)
    finally:
        if fh is not sys.stdout:
            fh.close()
    if args.verify:
        if not multiset_equal(result, oracle_collect_reduce(data, adapter, spec), adapter):
            print("verification failed: aggregate mismatch", file=sys.stderr)
            return 1
        print("verified=true", file=sys.stderr)
    return 0


def _cmd_histogram(args) -> int:
    return _aggregate_cmd(args, ReduceSpec.counting())


def _cmd_reduce(args) -> int:
    spec = ReduceSpec.counting() if args.op == "count" else ReduceSpec.summing64()
    return _aggregate_cmd(args, spec)


def _cmd_transpose(args) -> int:
    graph = graphs.read_graph(args.infile)
    transposed = graphs.transpose(graph, workers=args.threads)
    if args.out:
        graphs.write_csr(args.out, transposed)
    status = 0
    if args.verify:
        # The transpose of a transpose must reproduce the (canonical) input.
        back = graphs.transpose(transposed, workers=args.threads)
        canonical = graphs.transpose(graphs.transpose(graph, workers=args.threads),
                                     workers=args.threads)
        if back != canonical:
            print("verification failed: involution mismatch", file=sys.stderr)
            status = 1
        else:
            print("verified=true", file=sys.stderr)
    print(f"n={transposed.num_vertices} m={transposed.num_edges}", file=sys.stderr)
    return status


def _cmd_ngram(args) -> int:
    with open(args.infile, "rb") as fh:
        text = fh.read()
    records = ngrams.build_ngrams(text, args.gram_size)
    adapter = ngrams.ngram_adapter(records)
    params = TuningParams.from_env(len(records), seed=args.seed)
    snapshot = records.copy() if args.verify else None
    semisort(records, adapter, "eq", params, workers=args.threads)
    fh = _open_out(args)
    try:
        writer = csv.writer(fh)
        writer.writerow(["key", "value"])
        arena = records.arena
        for i in range(len(records)):
            writer.writerow([
                ngrams.decode_view(arena, records.keys[i]),
                ngrams.decode_view(arena, records.values[i]),
            ])
    finally:
        if fh is not sys.stdout:
            fh.close()
    if args.verify:
        report = validate_semisort(snapshot, records, adapter)
        if not report.valid:
            print(f"verification failed: {report.first_violation}", file=sys.stderr)
            return 1
        print("verified=true", file=sys.stderr)
    return 0


def _cmd_bench(args) -> int:
    cfg = BenchConfig(
        algo=args.algo, dist=args.dist or "uniform",
        param=args.param if args.param is not None else 1.0,
        n=args.n or 0, key_bits=args.key_bits, input_path=args.infile,
        threads=args.threads, reps=args.reps, verify=args.verify,
        seed=args.seed,
    )
    row = run_bench(cfg)
    _write_rows(args, BENCH_COLUMNS, [row])
    if cfg.verify and row["verified"] != "true":
        print(f"verification failed: {row['violation_detail']}", file=sys.stderr)
        return 1
    return 0


def _cmd_grid(args) -> int:
    rows = emit_grid(args.spec, args.reps, args.threads, args.seed)
    _write_rows(args, GRID_COLUMNS, rows)
    return 0


def _cmd_stats(args) -> int:
    data = _input_records(args)
    stats = compute_stats(data, adapter_for(data))
    row = {
        "dist": "file" if getattr(args, "infile", None) else args.dist,
        "param": args.infile if getattr(args, "infile", None) else _format_param(args.param),
        "n": len(data),
        "key_bits": data.key_width,
        "seed": args.seed,
        "distinct_keys": stats.distinct_keys,
        "max_frequency": stats.max_frequency,
        "heavy_freq_ratio": f"{stats.heavy_freq_ratio:.6f}",
    }
    _write_rows(args, list(row.keys()), [row])
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_dist_args(parser, required=False, dist_default=None):
    parser.add_argument("--dist", choices=("uniform", "exponential", "zipfian"),
                        default=dist_default, help="synthetic distribution family")
    parser.add_argument("--param", type=float, default=None, required=required,
                        help="distribution parameter (mu, lambda or s)")
    parser.add_argument("--n", type=int, default=None, required=required,
                        help="record count")
    parser.add_argument("--key-bits", type=int, choices=(32, 64, 128),
                        default=64, dest="key_bits")


def _add_common(parser, with_input=True):
    if with_input:
        parser.add_argument("--in", dest="infile", default=None,
                            help="input record dump (else --dist/--param/--n)")
        _add_dist_args(parser)
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--verify", action="store_true",
                        help="check the result against the oracle")
    parser.add_argument("--out", default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="semisort",
        description="Parallel semisort, histogram and collect-reduce toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a workload record dump")
    _add_dist_args(p, required=True, dist_default="uniform")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("sort", help="semisort records in place")
    p.add_argument("--algo", choices=SORT_ALGOS, default="eq")
    _add_common(p)
    p.set_defaults(func=_cmd_sort)

    p = sub.add_parser("histogram", help="per-key counts")
    p.add_argument("--identity", action="store_true",
                   help="use identity hashing for integer keys")
    _add_common(p)
    p.set_defaults(func=_cmd_histogram)

    p = sub.add_parser("reduce", help="per-key collect-reduce")
    p.add_argument("--op", choices=("count", "sum"), default="sum")
    p.add_argument("--identity", action="store_true")
    _add_common(p)
    p.set_defaults(func=_cmd_reduce)

    p = sub.add_parser("transpose", help="transpose a directed graph")
    p.add_argument("--in", dest="infile", required=True,
                   help="edge list (u v per line) or binary .csr")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--out", default=None, help="binary CSR output path")
    p.set_defaults(func=_cmd_transpose)

    p = sub.add_parser("ngram", help="group n-grams of a text file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--gram-size", type=int, default=2, dest="gram_size")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--verify", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_ngram)

    p = sub.add_parser("bench", help="timed run, median of runs after the first")
    p.add_argument("--algo", choices=BENCH_ALGOS, required=True)
    p.add_argument("--reps", type=int, default=4)
    _add_common(p)
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("grid", help="run a benchmark grid from a spec file")
    p.add_argument("--spec", required=True, help="CSV with header dist,param,n,algo")
    p.add_argument("--reps", type=int, default=4)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("stats", help="exact workload statistics")
    p.add_argument("--in", dest="infile", default=None)
    _add_dist_args(p)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_stats)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", None):
        set_default_workers(args.threads)
    try:
        return args.func(args)
    except SemisortError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
