"""Command line front end: solve, derandomise, run experiments, self-check.

Machine-readable JSON goes to stdout; a small human table goes to stderr
unless --quiet.  Exit codes are stable: 0 solved or all checks passed,
1 error, 2 randomized budget exhausted, 3 exhaustive search infeasible,
4 exhaustive search exhausted without a solution.

Outputs are byte-identical across runs with the same flags; wall-clock
timings only ever land in the wall_ms CSV column, never on stdout.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .derand import (
    DEFAULT_TAPE_CAP,
    ExhaustedError,
    InfeasibleError,
    derand_solve,
    theoretical_budget,
)
from .graph_core import Digraph, build_rel
from .instance_io import (
    ExperimentRecord,
    append_results,
    gen_grid_ksat,
    gen_torus_nae,
    load_problem,
    save_problem,
)
from .landscape_lab import (
    count_delta_trees,
    enumerate_grounded_forests,
    q_poly,
    q_value_at_rho,
)
from .mta_runner import DEFAULT_MAX_STEPS, run
from .partitioner import singleton_partition, sparse_partition
from .rule_engine import MalformedProblemError, bad_set, satisfies
from .tape import RandomTape, symbols_consumed

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_BUDGET = 2
EXIT_INFEASIBLE = 3
EXIT_EXHAUSTED = 4


@dataclass(frozen=True)
class CliConfig:
    """Validated bag of options shared by the solver-style subcommands."""

    subcommand: str
    problem: str | None = None
    seed: int = 0
    big_r: int = 1
    delta: float = 1.0
    d: int | None = None
    max_steps: int = DEFAULT_MAX_STEPS
    m: int | None = None
    tape_cap: int = DEFAULT_TAPE_CAP
    out: str | None = None
    csv_path: str | None = None
    repeat: int = 0
    sizes: tuple[int, ...] = ()
    b: int = 2
    classic: bool = False
    check: bool = False
    quiet: bool = False

    def validate(self) -> None:
        if self.big_r < 1:
            raise ValueError("R must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max-steps must be >= 1")
        if self.repeat < 0:
            raise ValueError("repeat must be >= 0")
        if self.m is not None and self.m < 1:
            raise ValueError("m must be >= 1")
        if self.b < 2:
            raise ValueError("b must be >= 2")
        if any(s < 3 for s in self.sizes):
            raise ValueError("ladder sizes must be >= 3")


def _config(args: argparse.Namespace) -> CliConfig:
    cfg = CliConfig(
        subcommand=args.subcommand,
        problem=getattr(args, "problem", None),
        seed=getattr(args, "seed", 0),
        big_r=getattr(args, "R", 1),
        delta=getattr(args, "delta", 1.0),
        d=getattr(args, "d", None),
        max_steps=getattr(args, "max_steps", DEFAULT_MAX_STEPS),
        m=getattr(args, "m", None),
        tape_cap=getattr(args, "tape_cap", DEFAULT_TAPE_CAP),
        out=getattr(args, "out", None),
        csv_path=getattr(args, "csv", None),
        repeat=getattr(args, "repeat", 0),
        sizes=tuple(getattr(args, "sizes", ()) or ()),
        b=getattr(args, "b", 2),
        classic=getattr(args, "classic", False),
        check=getattr(args, "verify", False),
        quiet=getattr(args, "quiet", False),
    )
    cfg.validate()
    return cfg


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True))


def _table(rows: list[tuple[str, object]], quiet: bool) -> None:
    if quiet:
        return
    width = max((len(k) for k, _ in rows), default=0)
    for key, value in rows:
        print(f"  {key:<{width}}  {value}", file=sys.stderr)


def _partition_for(p, cfg: CliConfig):
    if cfg.classic:
        return singleton_partition(p.n)
    return sparse_partition(p.graph, 3 * cfg.big_r)


def _write_colouring(path: str, colouring: list[int]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"colouring": list(colouring)}, fh)
        fh.write("\n")


def _read_colouring(path: str) -> list[int]:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if isinstance(payload, dict):
        payload = payload.get("colouring")
    if not isinstance(payload, list) or not all(isinstance(v, int) for v in payload):
        raise ValueError(f"{path}: expected a JSON list of ints or {{'colouring': [...]}}")
    return payload


# ---------------------------------------------------------------------------
# solve


def cmd_solve(cfg: CliConfig) -> int:
    p = load_problem(cfg.problem)
    pi = _partition_for(p, cfg)
    tape = RandomTape(cfg.seed, p.b)
    trace = run(p, pi, tape, max_steps=cfg.max_steps)
    report = symbols_consumed(trace, pi)
    summary = {
        "status": trace.status,
        "rounds": trace.rounds,
        "max_h": max(trace.h) if trace.h else 0,
        "symbols": report.count,
        "bits": round(report.bits, 3),
    }
    _emit(summary)
    _table(
        [
            ("status", trace.status),
            ("parts", pi.num_parts),
            ("rounds", trace.rounds),
            ("max h", summary["max_h"]),
            ("symbols", report.count),
            ("bits", summary["bits"]),
        ],
        cfg.quiet,
    )
    if not trace.succeeded:
        return EXIT_BUDGET
    final = trace.final_colouring
    if cfg.check and not satisfies(p, final):
        print("error: run reported success but the colouring is violated", file=sys.stderr)
        return EXIT_ERROR
    if cfg.out:
        _write_colouring(cfg.out, final)
    return EXIT_OK


# ---------------------------------------------------------------------------
# solve-det


def cmd_solve_det(cfg: CliConfig) -> int:
    p = load_problem(cfg.problem)
    pi = _partition_for(p, cfg)
    budget = theoretical_budget(p, pi, cfg.delta, cfg.d, cfg.tape_cap)
    payload = {
        "k_log": round(budget.k_log, 6),
        "m_theoretical": budget.m,
        "num_tapes_theoretical": budget.num_tapes,
        "infeasible": budget.infeasible,
    }
    _table(
        [
            ("ln K", payload["k_log"]),
            ("theoretical m", budget.m),
            ("theoretical tapes", "unenumerable" if budget.num_tapes is None else budget.num_tapes),
            ("feasible under cap", not budget.infeasible),
        ],
        cfg.quiet,
    )
    if cfg.m is None:
        payload["status"] = "report_only"
        _emit(payload)
        return EXIT_OK

    attempts: list = []
    try:
        colouring = derand_solve(p, pi, cfg.m, cfg.tape_cap, attempts)
    except InfeasibleError as exc:
        payload["status"] = "infeasible"
        payload["error"] = str(exc)
        _emit(payload)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ExhaustedError as exc:
        payload["status"] = "exhausted"
        payload["error"] = str(exc)
        payload["tapes_tried"] = len(attempts)
        _emit(payload)
        _write_attempts(cfg.csv_path, attempts)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED

    winner = attempts[-1]
    payload.update(
        {
            "status": "solved",
            "m_used": cfg.m,
            "tape_index": winner.tape_index,
            "tapes_tried": len(attempts),
            "passes": winner.passes,
            "reevals": winner.reevals,
        }
    )
    _emit(payload)
    _table(
        [
            ("winning tape", winner.tape_index),
            ("tapes tried", len(attempts)),
            ("passes", winner.passes),
            ("rule evaluations", winner.reevals),
        ],
        cfg.quiet,
    )
    if cfg.out:
        _write_colouring(cfg.out, colouring)
    _write_attempts(cfg.csv_path, attempts)
    return EXIT_OK


def _write_attempts(path: str | None, attempts: list) -> None:
    if not path:
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tape_index", "outcome", "passes", "reevals"])
        for a in attempts:
            writer.writerow([a.tape_index, a.outcome, a.passes, a.reevals])


# ---------------------------------------------------------------------------
# stats


def _thread_budget() -> int:
    raw = os.environ.get("RESAMPLE_FORGE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _one_trial(side: int, seed: int, cfg: CliConfig) -> ExperimentRecord:
    p = gen_torus_nae(side, side, cfg.b)
    pi = _partition_for(p, cfg)
    tape = RandomTape(seed, p.b)
    t0 = time.perf_counter()
    trace = run(p, pi, tape, max_steps=cfg.max_steps)
    wall_ms = (time.perf_counter() - t0) * 1000.0
    report = symbols_consumed(trace, pi)
    return ExperimentRecord(
        instance=f"torus-{side}x{side}",
        n=p.n,
        seed=seed,
        parts=pi.num_parts,
        rounds=trace.rounds,
        max_h=max(trace.h) if trace.h else 0,
        symbols=report.count,
        bits=report.bits,
        wall_ms=wall_ms,
    )


def tail_table(max_h_values: list[int]) -> dict[int, float]:
    """Empirical Pr(max h >= m) for m = 1..max observed; nonincreasing in m."""
    total = len(max_h_values)
    if total == 0:
        return {}
    top = max(max_h_values)
    return {
        m: sum(1 for v in max_h_values if v >= m) / total
        for m in range(1, top + 1)
    }


def decay_ratio(tail: dict[int, float]) -> float | None:
    """Least-squares slope of log Pr over the nonzero support, as a ratio.

    A value of 0.5 means each extra unit of m halves the tail mass.  None when
    fewer than two support points exist.
    """
    points = [(m, math.log(p)) for m, p in sorted(tail.items()) if p > 0]
    if len(points) < 2:
        return None
    xs = [m for m, _ in points]
    ys = [y for _, y in points]
    mean_x = sum(xs) / len(xs)
    mean_y = sum(ys) / len(ys)
    denom = sum((x - mean_x) ** 2 for x in xs)
    if denom == 0:
        return None
    slope = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys)) / denom
    return math.exp(slope)


def cmd_stats(cfg: CliConfig) -> int:
    sizes = cfg.sizes or (8, 12)
    jobs = [(side, cfg.seed + i) for side in sizes for i in range(cfg.repeat)]
    threads = _thread_budget()
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda job: _one_trial(job[0], job[1], cfg), jobs))
    else:
        records = [_one_trial(side, seed, cfg) for side, seed in jobs]
    records.sort(key=lambda r: (r.n, r.instance, r.seed))
    if cfg.csv_path:
        append_results(cfg.csv_path, records)

    per_size: dict[str, dict] = {}
    for side in sorted(sizes):
        name = f"torus-{side}x{side}"
        batch = [r for r in records if r.instance == name]
        if not batch:
            continue
        per_size[name] = {
            "trials": len(batch),
            "n": batch[0].n,
            "parts": batch[0].parts,
            "mean_rounds": round(sum(r.rounds for r in batch) / len(batch), 6),
            "mean_max_h": round(sum(r.max_h for r in batch) / len(batch), 6),
            "mean_symbols": round(sum(r.symbols for r in batch) / len(batch), 6),
        }
    tail = tail_table([r.max_h for r in records])
    ratio = decay_ratio(tail)
    payload = {
        "per_size": per_size,
        "tail": {str(m): round(p, 6) for m, p in sorted(tail.items())},
        "decay_ratio": None if ratio is None else round(ratio, 6),
        "trials": len(records),
    }
    _emit(payload)
    rows: list[tuple[str, object]] = [
        (name, f"mean symbols {info['mean_symbols']}, mean max h {info['mean_max_h']}")
        for name, info in per_size.items()
    ]
    rows.append(("tail decay ratio", payload["decay_ratio"]))
    _table(rows, cfg.quiet)
    return EXIT_OK


# ---------------------------------------------------------------------------
# oracle


def _oracle_graphs() -> list[tuple[str, Digraph]]:
    return [
        ("loop1", Digraph.from_edges(1, [(0, 0)])),
        ("pair", Digraph.from_edges(2, [(0, 0), (0, 1), (1, 1)])),
        ("path3", Digraph.from_edges(3, [(0, 0), (1, 0), (1, 1), (2, 1), (2, 2)])),
        ("cycle3", Digraph.from_edges(3, [(0, 0), (0, 1), (1, 1), (1, 2), (2, 2), (2, 0)])),
    ]


def oracle_checks() -> list[dict]:
    """Counting-bound grid: every row is an exact enumeration vs a closed form."""
    rows: list[dict] = []
    for delta in range(1, 5):
        for i in range(0, 7):
            value = count_delta_trees(delta, i)
            bound = (math.e * delta) ** i
            rows.append(
                {
                    "check": "trees",
                    "delta": delta,
                    "i": i,
                    "value": value,
                    "bound": round(bound, 3),
                    "pass": value <= bound,
                }
            )
    for delta in range(2, 5):
        cap = delta / (delta - 1)
        for i in range(0, 9):
            q = q_value_at_rho(delta, i)
            rows.append(
                {
                    "check": "q_at_rho",
                    "delta": delta,
                    "i": i,
                    "value": round(float(q), 6),
                    "bound": round(cap, 6),
                    "pass": q <= cap,
                }
            )
    for delta in (2, 3):
        coeffs = q_poly(delta, 4)
        ok = all(
            coeffs[nn] == count_delta_trees(delta, nn)
            for nn in range(0, min(5, len(coeffs)))
        )
        rows.append(
            {
                "check": "q_prefix",
                "delta": delta,
                "i": 4,
                "value": coeffs[: min(5, len(coeffs))],
                "bound": "tree counts",
                "pass": ok,
            }
        )
    for name, g in _oracle_graphs():
        big = max(1, build_rel(g).maxdeg())
        for m in range(0, 4):
            value = enumerate_grounded_forests(g, m)
            bound = (m + 1) ** (g.n - 1) * (math.e * big) ** m
            rows.append(
                {
                    "check": "forests",
                    "graph": name,
                    "m": m,
                    "value": value,
                    "bound": round(bound, 3),
                    "pass": value <= bound,
                }
            )
    return rows


def _oracle_line(row: dict) -> str:
    if row["check"] == "trees":
        lhs = f"P_{row['i']}(delta={row['delta']}) = {row['value']}"
        rhs = f"(e*{row['delta']})^{row['i']} ~= {row['bound']}"
    elif row["check"] == "q_at_rho":
        lhs = f"Q_{row['i']}(rho; delta={row['delta']}) = {row['value']}"
        rhs = f"{row['bound']}"
    elif row["check"] == "q_prefix":
        lhs = f"Q_4 coefficients (delta={row['delta']}) = {row['value']}"
        rhs = "tree counts"
    else:
        lhs = f"forests({row['graph']}, m={row['m']}) = {row['value']}"
        rhs = f"(m+1)^(n-1)*(e*Delta)^m ~= {row['bound']}"
    verdict = "PASS" if row["pass"] else "FAIL"
    return f"{lhs} <= {rhs} : {verdict}"


def cmd_oracle(cfg: CliConfig) -> int:
    rows = oracle_checks()
    for row in rows:
        print(_oracle_line(row))
    all_pass = all(row["pass"] for row in rows)
    print(f"{sum(1 for r in rows if r['pass'])}/{len(rows)} bounds hold")
    if not cfg.quiet:
        print("all pass" if all_pass else "FAILURES PRESENT", file=sys.stderr)
    return EXIT_OK if all_pass else EXIT_ERROR


# ---------------------------------------------------------------------------
# gen / verify


def cmd_gen(args: argparse.Namespace) -> int:
    if args.kind == "torus":
        p = gen_torus_nae(args.w, args.h, args.b)
    else:
        p = gen_grid_ksat(
            args.w,
            args.h,
            args.k,
            args.radius,
            args.per_cell,
            args.seed,
            b=args.b,
        )
    save_problem(p, args.out)
    _emit({"path": args.out, "kind": args.kind, "n": p.n, "b": p.b, "metadata": p.metadata})
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    p = load_problem(args.problem)
    colouring = _read_colouring(args.colouring)
    if len(colouring) != p.n:
        raise ValueError(f"colouring has {len(colouring)} entries, problem has {p.n}")
    bad = bad_set(p, colouring)
    _emit({"satisfies": not bad, "violated": bad[:10], "violated_count": len(bad)})
    return EXIT_OK if not bad else EXIT_ERROR


# ---------------------------------------------------------------------------
# parser / dispatch


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--quiet", action="store_true", help="suppress the stderr table")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="resample-forge",
        description="shared-tape resampling solver and its verification oracles",
    )
    subs = parser.add_subparsers(dest="subcommand", required=True)

    s = subs.add_parser("solve", help="randomized shared-tape solve of a problem file")
    s.add_argument("problem", help="problem JSON path")
    s.add_argument("--seed", type=int, default=0, help="tape seed (default 0)")
    s.add_argument("--R", type=int, default=1, help="sparsity radius parameter (default 1)")
    s.add_argument("--classic", action="store_true", help="singleton partition (no sharing)")
    s.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS, dest="max_steps")
    s.add_argument("--out", help="write the satisfying colouring here on success")
    s.add_argument("--verify", action="store_true", help="re-check the output colouring")
    _add_common(s)

    s = subs.add_parser("solve-det", help="exhaustive finite-tape search")
    s.add_argument("problem")
    s.add_argument("--R", type=int, default=1)
    s.add_argument("--classic", action="store_true")
    s.add_argument("--delta", type=float, default=1.0, help="slack exponent (default 1)")
    s.add_argument("--d", type=int, default=None, help="degree bound override")
    s.add_argument("--m", type=int, default=None, help="tape rounds; omit to only report the budget")
    s.add_argument("--tape-cap", type=int, default=DEFAULT_TAPE_CAP, dest="tape_cap")
    s.add_argument("--out", help="write the colouring here on success")
    s.add_argument("--csv", help="write per-tape pass/reeval stats here")
    _add_common(s)

    s = subs.add_parser("stats", help="seeded trial ladder over torus instances")
    s.add_argument("--sizes", type=_int_list, default=(8, 12), help="comma list of torus sides")
    s.add_argument("--repeat", type=int, default=20, help="trials per size (default 20)")
    s.add_argument("--seed", type=int, default=0, help="base seed (default 0)")
    s.add_argument("--b", type=int, default=2, help="colour count (default 2)")
    s.add_argument("--R", type=int, default=1)
    s.add_argument("--classic", action="store_true")
    s.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS, dest="max_steps")
    s.add_argument("--csv", help="append experiment records here")
    _add_common(s)

    s = subs.add_parser("oracle", help="run the counting-bound self-checks")
    _add_common(s)

    s = subs.add_parser("gen", help="generate an instance file")
    s.add_argument("kind", choices=("torus", "ksat"))
    s.add_argument("--w", type=int, default=10)
    s.add_argument("--h", type=int, default=10)
    s.add_argument("--b", type=int, default=2)
    s.add_argument("--k", type=int, default=5, help="ksat: literals per clause")
    s.add_argument("--radius", type=int, default=2, help="ksat: clause scope radius")
    s.add_argument("--per-cell", type=int, default=1, dest="per_cell", help="ksat: clauses per cell")
    s.add_argument("--seed", type=int, default=0, help="ksat: generator seed")
    s.add_argument("--out", required=True, help="output problem JSON path")
    _add_common(s)

    s = subs.add_parser("verify", help="check a colouring file against a problem file")
    s.add_argument("problem")
    s.add_argument("colouring")
    _add_common(s)

    return parser


def _int_list(raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not a comma list of ints: {raw!r}") from exc


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.subcommand == "gen":
            return cmd_gen(args)
        if args.subcommand == "verify":
            return cmd_verify(args)
        cfg = _config(args)
        handler = {
            "solve": cmd_solve,
            "solve-det": cmd_solve_det,
            "stats": cmd_stats,
            "oracle": cmd_oracle,
        }[cfg.subcommand]
        return handler(cfg)
    except (OSError, ValueError, KeyError, MalformedProblemError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
