"""Benchmark generators, problem (de)serialisation, and experiment records.

The on-disk format is versioned JSON: edge list plus a per-vertex map of
forbidden colour tuples.  CNF import is provided for convenience (two colours,
one forbidden tuple per clause); richer rules exceed what CNF can express.
"""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from dataclasses import dataclass

from resample_forge.graph_core import Digraph, ball, check_subexp
from resample_forge.rule_engine import ColouringProblem, LocalRule, lll_margin
from resample_forge.tape import GAMMA, MASK64, mix64

SCHEMA_VERSION = 1

RESULTS_HEADER = ["instance", "n", "seed", "parts", "rounds", "max_h", "symbols", "bits", "wall_ms"]


CERT_SIZE_CAP = 400


def _annotate(p: ColouringProblem) -> ColouringProblem:
    """Stamp degree, dependency degree, margin, and a growth certificate.

    The certificate scan walks every ball up to radius 3R, so it is skipped
    beyond CERT_SIZE_CAP vertices (recorded as None, meaning "not computed").
    """
    d = max(1, p.graph.maxdeg())
    p.metadata["d"] = p.graph.maxdeg()
    p.metadata["Delta"] = p.rel().maxdeg()
    p.metadata["margin"] = lll_margin(p)
    cert = None
    if 0 < p.n <= CERT_SIZE_CAP:
        for big_r in range(1, 6):
            worst = max(
                math.log(len(ball(p.graph, x, 3 * big_r))) for x in range(p.n)
            )
            for eps in (0.5, 1.0, 2.0):
                if worst <= big_r * math.log1p(eps) + 1e-9:
                    cert = {"R": big_r, "eps": eps, "d": d}
                    assert check_subexp(p.graph, big_r, eps, d)
                    break
            if cert:
                break
    p.metadata["subexp"] = cert
    return p


# ---------------------------------------------------------------------------
# generators


def gen_torus_nae(w: int, h: int, b: int) -> ColouringProblem:
    """Torus of not-all-equal rules: each cell reads itself and 4 neighbours.

    Forbidden tuples are the b constant assignments, so the violation margin
    is exactly b^-4 per clause.
    """
    if w < 3 or h < 3:
        raise ValueError("torus needs both sides >= 3")
    if b < 2:
        raise ValueError("alphabet size must be >= 2")
    n = w * h

    def vid(i: int, j: int) -> int:
        return (i % h) * w + (j % w)

    edges = []
    for i in range(h):
        for j in range(w):
            x = vid(i, j)
            for (di, dj) in ((0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)):
                edges.append((x, vid(i + di, j + dj)))
    g = Digraph.from_edges(n, edges)
    constant = [[(c,) * 5 for c in range(b)] for _ in range(n)]
    p = ColouringProblem(
        g,
        b,
        LocalRule.from_lists(constant),
        metadata={"generator": "torus_nae", "w": w, "h": h, "b": b},
    )
    p.validate()
    return _annotate(p)


def gen_grid_ksat(
    w: int,
    h: int,
    k: int,
    clause_radius: int,
    clauses_per_cell: int,
    seed: int,
    b: int = 2,
) -> ColouringProblem:
    """Bipartite clauses-over-grid instance: k-ary rules on nearby grid cells.

    Variable vertices fill a plain w*h grid and carry no rules; each cell
    anchors clauses_per_cell clause vertices reading k distinct variables
    within Manhattan distance clause_radius, each forbidding one tuple drawn
    from a counter-based deterministic stream.
    """
    if w < 1 or h < 1:
        raise ValueError("grid must be nonempty")
    if k < 1:
        raise ValueError("k must be >= 1")
    if clause_radius < 1:
        raise ValueError("clause radius must be >= 1")
    if clauses_per_cell < 1:
        raise ValueError("need at least one clause per cell")
    if b < 2:
        raise ValueError("alphabet size must be >= 2")
    num_vars = w * h

    counter = 0

    def draw(bound: int) -> int:
        nonlocal counter
        counter += 1
        return mix64((seed + counter * GAMMA) & MASK64) % bound

    edges = []
    rows: list = [[] for _ in range(num_vars)]
    clause_id = num_vars
    for i in range(h):
        for j in range(w):
            nearby = [
                i2 * w + j2
                for i2 in range(h)
                for j2 in range(w)
                if abs(i2 - i) + abs(j2 - j) <= clause_radius
            ]
            if len(nearby) < k:
                raise ValueError(
                    f"cell ({i},{j}) sees {len(nearby)} variables within "
                    f"radius {clause_radius}, fewer than k={k}"
                )
            for _ in range(clauses_per_cell):
                pool = list(nearby)
                scope = []
                for _ in range(k):
                    scope.append(pool.pop(draw(len(pool))))
                scope.sort()
                for v in scope:
                    edges.append((clause_id, v))
                rows.append([tuple(draw(b) for _ in scope)])
                clause_id += 1
    g = Digraph.from_edges(clause_id, edges)
    p = ColouringProblem(
        g,
        b,
        LocalRule.from_lists(rows),
        metadata={
            "generator": "grid_ksat",
            "w": w,
            "h": h,
            "k": k,
            "clause_radius": clause_radius,
            "clauses_per_cell": clauses_per_cell,
            "seed": seed,
            "b": b,
            "num_variables": num_vars,
        },
    )
    p.validate()
    return _annotate(p)


# ---------------------------------------------------------------------------
# problem files


def save_problem(p: ColouringProblem, path: str) -> None:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "b": p.b,
        "num_vertices": p.n,
        "edges": [[x, y] for x, y in p.graph.edges()],
        "forbidden": {
            str(x): [list(t) for t in p.rule.forbidden[x]]
            for x in range(p.n)
            if p.rule.forbidden[x]
        },
        "metadata": p.metadata,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_problem(path: str) -> ColouringProblem:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    if not isinstance(payload, dict):
        raise ValueError("problem file must hold a JSON object")
    version = payload.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {version!r}")
    for field_name in ("b", "num_vertices", "edges", "forbidden"):
        if field_name not in payload:
            raise ValueError(f"missing field {field_name!r}")
    b = payload["b"]
    n = payload["num_vertices"]
    if not isinstance(b, int) or not isinstance(n, int):
        raise ValueError("fields 'b' and 'num_vertices' must be integers")
    edges = [tuple(e) for e in payload["edges"]]
    if any(len(e) != 2 for e in edges):
        raise ValueError("field 'edges' must hold [from, to] pairs")
    g = Digraph.from_edges(n, edges)
    rows: list = [[] for _ in range(n)]
    for key, tuples in payload["forbidden"].items():
        try:
            x = int(key)
        except ValueError as exc:
            raise ValueError(f"forbidden map key {key!r} is not a vertex id") from exc
        if not (0 <= x < n):
            raise ValueError(f"forbidden map names unknown vertex {x}")
        scope_len = len(g.out_adj[x])
        seen = set()
        cleaned = []
        for t in tuples:
            tup = tuple(t)
            if len(tup) != scope_len:
                raise ValueError(
                    f"vertex {x}: forbidden tuple {tup} has length {len(tup)}, "
                    f"scope needs {scope_len}"
                )
            if tup in seen:
                warnings.warn(f"vertex {x}: duplicate forbidden tuple {tup} dropped")
                continue
            seen.add(tup)
            cleaned.append(tup)
        rows[x] = cleaned
    p = ColouringProblem(g, b, LocalRule.from_lists(rows), metadata=dict(payload.get("metadata", {})))
    p.validate()
    return p


def load_dimacs(path: str) -> ColouringProblem:
    """CNF reader: variables then one vertex per clause, b=2, one forbidden tuple.

    A clause's forbidden tuple is the unique assignment of its scope that
    falsifies every literal.  Tautological clauses keep their edges but
    forbid nothing.
    """
    num_vars = None
    clauses = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("c"):
                continue
            if line.startswith("p"):
                parts = line.split()
                if len(parts) != 4 or parts[1] != "cnf":
                    raise ValueError(f"line {lineno}: malformed problem line")
                num_vars = int(parts[2])
                continue
            if num_vars is None:
                raise ValueError(f"line {lineno}: clause before problem line")
            lits = [int(tok) for tok in line.split()]
            if lits and lits[-1] == 0:
                lits = lits[:-1]
            if not lits:
                continue
            if any(lit == 0 or abs(lit) > num_vars for lit in lits):
                raise ValueError(f"line {lineno}: literal out of range")
            clauses.append(lits)
    if num_vars is None:
        raise ValueError("no problem line found")
    edges = []
    rows: list = [[] for _ in range(num_vars)]
    for idx, lits in enumerate(clauses):
        cid = num_vars + idx
        wanted: dict = {}
        tautology = False
        for lit in lits:
            v = abs(lit) - 1
            value = 0 if lit > 0 else 1  # the assignment falsifying this literal
            if wanted.get(v, value) != value:
                tautology = True
            wanted[v] = value
        scope = sorted(wanted)
        for v in scope:
            edges.append((cid, v))
        rows.append([] if tautology else [tuple(wanted[v] for v in scope)])
    g = Digraph.from_edges(num_vars + len(clauses), edges)
    p = ColouringProblem(
        g,
        2,
        LocalRule.from_lists(rows),
        metadata={"generator": "dimacs", "num_variables": num_vars, "source": os.path.basename(path)},
    )
    p.validate()
    return _annotate(p)


# ---------------------------------------------------------------------------
# experiment records


@dataclass
class ExperimentRecord:
    instance: str
    n: int
    seed: int
    parts: int
    rounds: int
    max_h: int
    symbols: int
    bits: float
    wall_ms: float

    def row(self) -> list:
        return [
            self.instance,
            self.n,
            self.seed,
            self.parts,
            self.rounds,
            self.max_h,
            self.symbols,
            round(self.bits, 3),
            round(self.wall_ms, 3),
        ]


def append_results(path: str, records: list) -> None:
    """Append rows to results.csv, writing the fixed header on first contact."""
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(RESULTS_HEADER)
        for rec in records:
            writer.writerow(rec.row())


def read_results(path: str) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != RESULTS_HEADER:
            raise ValueError(f"unexpected results header {header}")
        return [row for row in reader]
