"""The parallel resampling loop over a shared random tape.

Each round evaluates all rules, picks a greedy maximal independent subset of
the violated vertices in the dependency graph, and redraws every cell those
vertices read.  Cell x redraws from its part's tape stream at the per-cell
counter h(x), which counts samples taken at x so far (the initial fill
included), so a run is a pure function of (problem, partition, seed, order).
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

from resample_forge.graph_core import VertexOrder, greedy_mis
from resample_forge.rule_engine import ColouringProblem, res

STATUS_SUCCEEDED = "succeeded"
STATUS_BUDGET_EXHAUSTED = "budget_exhausted"

# traces keep every intermediate colouring up to this vertex count, and only
# a 2-deep ring buffer beyond it (counters and per-round snapshots are always kept)
FULL_HISTORY_LIMIT = 10_000

DEFAULT_MAX_STEPS = 100_000


@dataclass
class RunState:
    colouring: list[int]
    h: list[int]
    round: int


@dataclass
class RunTrace:
    """Everything a run leaves behind.

    colourings[i] is the colouring after round colouring_offset + i; in full
    history mode the offset is 0 and the list starts at the initial fill.
    resampled_sets[j] and viol_snapshots[j] describe round j: the cells redrawn
    going into the next colouring, and the violating local assignment of each
    resampled rule vertex at that moment.
    """

    status: str
    steps: int | None
    b: int
    num_parts: int
    colourings: list[list[int]]
    colouring_offset: int
    ib_sets: list[list[int]]
    resampled_sets: list[set[int]]
    viol_snapshots: list[dict[int, tuple[int, ...]]]
    bad_sizes: list[int]
    h: list[int]
    clause_evals: int

    @property
    def succeeded(self) -> bool:
        return self.status == STATUS_SUCCEEDED

    @property
    def rounds(self) -> int:
        return len(self.ib_sets)

    def colouring_at(self, i: int) -> list[int]:
        """The colouring after round i (i=0 is the initial fill)."""
        idx = i - self.colouring_offset
        if not (0 <= idx < len(self.colourings)):
            raise ValueError(f"colouring {i} not retained (offset {self.colouring_offset})")
        return self.colourings[idx]

    @property
    def final_colouring(self) -> list[int]:
        return self.colourings[-1]


def initial_colouring(p: ColouringProblem, pi, tape) -> RunState:
    """Fill every cell from its part's stream at counter 0."""
    f = [tape.symbol(pi.part_of[x], 0) for x in range(p.n)]
    return RunState(f, [1] * p.n, 0)


def _bad_list(p: ColouringProblem, f: list[int]) -> list[int]:
    sets = p.forbidden_sets()
    out = p.graph.out_adj
    return [x for x in p.active_clauses() if tuple(f[v] for v in out[x]) in sets[x]]


def _apply_round(p: ColouringProblem, pi, tape, state: RunState, bad, order: VertexOrder):
    """Resample the scopes of a greedy MIS of `bad`; returns (ib, viol, resampled)."""
    f = state.colouring
    ib = greedy_mis(p.rel(), bad, order)
    viol = {x: res(p, f, x) for x in ib}
    touched: set[int] = set()
    for x in ib:
        touched.update(p.graph.out_adj[x])
    resampled = sorted(touched)
    for v in resampled:
        f[v] = tape.symbol(pi.part_of[v], state.h[v])
        state.h[v] += 1
    state.round += 1
    return ib, viol, resampled


def step(p: ColouringProblem, pi, tape, state: RunState, order: VertexOrder | None = None) -> RunState:
    """Advance one round; a fixed point (nothing violated) is left untouched."""
    bad = _bad_list(p, state.colouring)
    if bad:
        _apply_round(p, pi, tape, state, bad, order or VertexOrder.identity(p.n))
    return state


def run(
    p: ColouringProblem,
    pi,
    tape,
    max_steps: int = DEFAULT_MAX_STEPS,
    order: VertexOrder | None = None,
    round_order=None,
    history: str = "auto",
) -> RunTrace:
    """Drive rounds until nothing is violated or the budget runs out.

    `round_order(j)` may supply a per-round scan order for the independent-set
    greedy (used by differential tests); otherwise `order` applies throughout.
    """
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")
    if history not in ("auto", "full", "window"):
        raise ValueError("history must be auto, full, or window")
    keep_full = history == "full" or (history == "auto" and p.n <= FULL_HISTORY_LIMIT)
    base_order = order or VertexOrder.identity(p.n)

    state = initial_colouring(p, pi, tape)
    colourings = [list(state.colouring)]
    offset = 0
    ib_sets: list[list[int]] = []
    resampled_sets: list[set[int]] = []
    viol_snapshots: list[dict[int, tuple[int, ...]]] = []
    bad_sizes: list[int] = []
    evals = 0
    num_active = len(p.active_clauses())

    status = None
    steps = None
    while True:
        j = state.round
        bad = _bad_list(p, state.colouring)
        evals += num_active
        bad_sizes.append(len(bad))
        if not bad:
            status = STATUS_SUCCEEDED
            steps = j + 1
            break
        if j >= max_steps:
            status = STATUS_BUDGET_EXHAUSTED
            break
        this_order = round_order(j) if round_order is not None else base_order
        ib, viol, resampled = _apply_round(p, pi, tape, state, bad, this_order)
        ib_sets.append(ib)
        resampled_sets.append(set(resampled))
        viol_snapshots.append(viol)
        colourings.append(list(state.colouring))
        if not keep_full and len(colourings) > 2:
            del colourings[0]
            offset += 1

    return RunTrace(
        status=status,
        steps=steps,
        b=p.b,
        num_parts=pi.num_parts,
        colourings=colourings,
        colouring_offset=offset,
        ib_sets=ib_sets,
        resampled_sets=resampled_sets,
        viol_snapshots=viol_snapshots,
        bad_sizes=bad_sizes,
        h=list(state.h),
        clause_evals=evals,
    )


def h_infinity(trace: RunTrace) -> list[int]:
    """Final per-cell sample counters; stable from the success round onward."""
    if not trace.succeeded:
        raise ValueError("h_infinity requires a successful run")
    return list(trace.h)


def trace_to_json(trace: RunTrace) -> str:
    payload = {
        "status": trace.status,
        "steps": trace.steps,
        "rounds": trace.rounds,
        "b": trace.b,
        "num_parts": trace.num_parts,
        "colouring_offset": trace.colouring_offset,
        "colourings": trace.colourings,
        "ib_sets": trace.ib_sets,
        "resampled_sets": [sorted(s) for s in trace.resampled_sets],
        "viol_snapshots": [
            {str(x): list(t) for x, t in snap.items()} for snap in trace.viol_snapshots
        ],
        "bad_sizes": trace.bad_sizes,
        "h": trace.h,
        "clause_evals": trace.clause_evals,
    }
    return json.dumps(payload, sort_keys=True, indent=1)


def trace_round_csv(trace: RunTrace) -> str:
    """Per-round summary: round, violated count, resampled rule count, cells redrawn."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["round", "bad", "ib", "cells_redrawn"])
    for j in range(trace.rounds):
        writer.writerow(
            [j, trace.bad_sizes[j], len(trace.ib_sets[j]), len(trace.resampled_sets[j])]
        )
    return buf.getvalue()
