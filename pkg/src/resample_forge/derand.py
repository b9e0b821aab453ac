"""Deterministic sequential solver: exhaustive finite-tape search.

The outer loop enumerates every finite tape of m symbols per part.  The inner
loop replays the parallel resampling process against one such tape, organised
as list passes so each round touches only clauses adjacent to the previous
round's damage.  A tape is abandoned the moment the process asks for a symbol
beyond index m-1; if some tape reaches an empty violation list, its colouring
is a verified solution.

The bound machinery (explicit_k, threshold_m) computes how large m must be
for success to be guaranteed.  Those values are astronomical outside toy
parameters, so the solver takes m directly and the planner merely reports the
guarantee alongside a feasibility verdict.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from resample_forge.graph_core import VertexOrder
from resample_forge.rule_engine import ColouringProblem, bad_set, is_violated, satisfies
from resample_forge.tape import FiniteTape, TapeDepleted

DEFAULT_TAPE_CAP = 2**24

SUCCESS = "success"
TAPE_EXHAUSTED = "tape_exhausted"


class InfeasibleError(RuntimeError):
    """The finite-tape space is too large to enumerate."""


class ExhaustedError(RuntimeError):
    """Every finite tape was tried and none produced a solution."""


# ---------------------------------------------------------------------------
# bound machinery


def _check_bound_args(b: int, delta: float, d: int, num_parts: int, big_delta: int) -> None:
    if b < 2:
        raise ValueError("alphabet size must be >= 2")
    if delta <= 0:
        raise ValueError("delta must be positive")
    if d < 1:
        raise ValueError("degree bound must be >= 1")
    if num_parts < 1:
        raise ValueError("need at least one part")
    if big_delta < 1:
        raise ValueError("dependency degree must be >= 1")


def explicit_k_log(b: int, delta: float, d: int, num_parts: int, big_delta: int) -> float:
    """Natural log of the constant governing the tape-length guarantee.

    K = d * (|pi|^d * 2^(b^d + 1) * b)^|pi| * |pi|! / (1 - (e*Delta)^-delta)^|pi|,
    evaluated in log space because the middle factor explodes immediately.
    """
    _check_bound_args(b, delta, d, num_parts, big_delta)
    decay = math.exp(-delta * (1.0 + math.log(big_delta)))
    inner = d * math.log(num_parts) + (b**d + 1) * math.log(2.0) + math.log(b)
    return (
        math.log(d)
        + num_parts * inner
        + math.lgamma(num_parts + 1)
        - num_parts * math.log1p(-decay)
    )


def explicit_k(b: int, delta: float, d: int, num_parts: int, big_delta: int) -> float:
    """Direct-evaluation form of the constant; raises when it leaves float range."""
    _check_bound_args(b, delta, d, num_parts, big_delta)
    decay = math.exp(-delta * (1.0 + math.log(big_delta)))
    numerator = d * (num_parts**d * 2 ** (b**d + 1) * b) ** num_parts * math.factorial(num_parts)
    try:
        return float(numerator) / (1.0 - decay) ** num_parts
    except OverflowError as exc:
        raise OverflowError("constant exceeds float range; use explicit_k_log") from exc


def threshold_m(k_log: float, num_parts: int, big_delta: int, delta: float) -> int:
    """Smallest tape length making the union bound kick in, never below 1.

    Scans for the first m with log K + |pi|*log(m+1) < delta*m*log(e*Delta);
    the left side is logarithmic and the right side linear, so the scan ends.
    """
    if num_parts < 1:
        raise ValueError("need at least one part")
    if big_delta < 1:
        raise ValueError("dependency degree must be >= 1")
    if delta <= 0:
        raise ValueError("delta must be positive")
    rate = delta * (1.0 + math.log(big_delta))
    m = 1
    while k_log + num_parts * math.log(m + 1) - rate * m >= 0:
        m += 1
        if m > 10**7:
            raise RuntimeError("threshold scan failed to converge")
    return m


@dataclass
class DerandBudget:
    """Guaranteed tape length and the size of the search it implies.

    num_tapes is None when b^(|pi|*m) is too large to even materialise as an
    integer; such budgets are always infeasible.
    """

    m: int
    k_log: float
    num_tapes: int | None
    infeasible: bool

    @property
    def k(self) -> float:
        try:
            return math.exp(self.k_log)
        except OverflowError:
            return math.inf


def theoretical_budget(
    p: ColouringProblem,
    pi,
    delta: float,
    d: int | None = None,
    tape_cap: int = DEFAULT_TAPE_CAP,
) -> DerandBudget:
    """Budget for a guaranteed solve, flagged infeasible when unenumerable."""
    if d is None:
        d = max(1, p.graph.maxdeg())
    big_delta = max(1, p.rel().maxdeg())
    k_log = explicit_k_log(p.b, delta, d, pi.num_parts, big_delta)
    m = threshold_m(k_log, pi.num_parts, big_delta, delta)
    if pi.num_parts * m * math.log2(p.b) > 10_000:
        return DerandBudget(m, k_log, None, True)
    num_tapes = p.b ** (pi.num_parts * m)
    return DerandBudget(m, k_log, num_tapes, num_tapes > tape_cap)


# ---------------------------------------------------------------------------
# inner loop


@dataclass
class PassState:
    """Colouring plus the two clause work-lists carried between passes.

    `currently` is exactly the violated set at the start of each pass (kept as
    a list because scan order is the resampling priority); `potentially` is
    the superset that the next rebuild must re-evaluate.
    """

    colouring: list
    h: list
    currently: list
    potentially: list
    reevals: int = 0
    passes: int = 0


def start_state(p: ColouringProblem, pi, tape) -> PassState:
    """Fill every cell from symbol 0 of its part and compute the initial lists."""
    colouring = [tape.symbol(pi.part_of[x], 0) for x in range(p.n)]
    currently = bad_set(p, colouring)
    rel_adj = p.rel().out_adj
    potentially = list(currently)
    seen = set(currently)
    for c in currently:
        for nb in rel_adj[c]:
            if nb not in seen:
                seen.add(nb)
                potentially.append(nb)
    return PassState(colouring, [1] * p.n, currently, potentially)


def internal_pass(p: ColouringProblem, pi, state: PassState, tape) -> list:
    """One list pass: resample a maximal independent slice of the violated set.

    Scanning `currently` in order, a clause is resampled unless a clause
    resampled earlier this pass shares a cell with it.  No violation check is
    needed during the scan: an entry with untouched cells is still violated.
    The rebuild then re-evaluates `potentially` (that work is what reevals
    counts) and prepares both lists for the next pass.
    """
    if not state.currently:
        return []
    rel_adj = p.rel().out_adj
    rel_sets = [set(a) for a in rel_adj]
    resampled: list = []
    shadow: set = set()
    for c in state.currently:
        if c in shadow:
            continue
        for v in p.graph.out_adj[c]:
            state.colouring[v] = tape.symbol(pi.part_of[v], state.h[v])
            state.h[v] += 1
        resampled.append(c)
        shadow |= rel_sets[c]
    new_currently = [c for c in state.potentially if is_violated(p, state.colouring, c)]
    state.reevals += len(state.potentially)
    new_potentially = list(new_currently)
    seen = set(new_currently)
    for c in new_currently:
        for nb in rel_adj[c]:
            if nb not in seen:
                seen.add(nb)
                new_potentially.append(nb)
    state.currently = new_currently
    state.potentially = new_potentially
    state.passes += 1
    return resampled


@dataclass
class TapeAttempt:
    """Everything observable about running the inner loop against one tape."""

    tape_index: int
    outcome: str
    passes: int
    reevals: int
    m: int
    n: int
    d_bound: int
    colouring: list | None = None
    currently_lists: list = field(default_factory=list)
    resampled_sets: list = field(default_factory=list)
    colourings: list = field(default_factory=list)


def run_finite_tape(
    p: ColouringProblem, pi, tape: FiniteTape, tape_index: int = -1, keep_history: bool = False
) -> TapeAttempt:
    """Drive passes until success or the tape runs out of symbols."""
    d_bound = max(1, p.graph.maxdeg())
    try:
        state = start_state(p, pi, tape)
    except TapeDepleted:
        return TapeAttempt(tape_index, TAPE_EXHAUSTED, 0, 0, tape.rounds, p.n, d_bound)
    history_cl = []
    history_cur = []
    history_rs = []
    while state.currently:
        if keep_history:
            history_cl.append(list(state.colouring))
            history_cur.append(list(state.currently))
        try:
            resampled = internal_pass(p, pi, state, tape)
        except TapeDepleted:
            return TapeAttempt(
                tape_index,
                TAPE_EXHAUSTED,
                state.passes,
                state.reevals,
                tape.rounds,
                p.n,
                d_bound,
                None,
                history_cur,
                history_rs,
                history_cl,
            )
        if keep_history:
            history_rs.append(resampled)
    if keep_history:
        history_cl.append(list(state.colouring))
    return TapeAttempt(
        tape_index,
        SUCCESS,
        state.passes,
        state.reevals,
        tape.rounds,
        p.n,
        d_bound,
        list(state.colouring),
        history_cur,
        history_rs,
        history_cl,
    )


def work_counter(attempt: TapeAttempt) -> int:
    """Post-initialisation clause re-evaluations, checked against d^4*m*n."""
    bound = attempt.d_bound**4 * attempt.m * attempt.n
    if attempt.reevals > bound:
        raise RuntimeError(
            f"re-evaluation count {attempt.reevals} exceeds d^4*m*n = {bound}"
        )
    return attempt.reevals


# ---------------------------------------------------------------------------
# outer loop


def decode_tape(index: int, num_parts: int, rounds: int, b: int) -> FiniteTape:
    """Tape number -> explicit symbol table; cell (part, t) is digit t*|pi|+part."""
    digits = []
    rest = index
    for _ in range(num_parts * rounds):
        rest, digit = divmod(rest, b)
        digits.append(digit)
    if rest:
        raise ValueError("tape index out of range")
    return FiniteTape(num_parts, rounds, b, digits)


def derand_solve(
    p: ColouringProblem,
    pi,
    m: int,
    tape_cap: int = DEFAULT_TAPE_CAP,
    attempts: list | None = None,
):
    """Try every m-round tape in numeric order; return the first solution found.

    Deterministic by construction.  Raises InfeasibleError when b^(|pi|*m)
    exceeds tape_cap, ExhaustedError when the whole space fails.  When a list
    is passed as `attempts`, a TapeAttempt per tried tape is appended to it.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if pi.num_parts * m * math.log2(p.b) > 10_000:
        raise InfeasibleError(
            f"b^({pi.num_parts}*{m}) tapes cannot be enumerated; lower m"
        )
    num_tapes = p.b ** (pi.num_parts * m)
    if num_tapes > tape_cap:
        raise InfeasibleError(
            f"{num_tapes} tapes exceed the cap of {tape_cap}; lower m or raise the cap"
        )
    for index in range(num_tapes):
        tape = decode_tape(index, pi.num_parts, m, p.b)
        attempt = run_finite_tape(p, pi, tape, index)
        work_counter(attempt)
        if attempts is not None:
            attempts.append(attempt)
        if attempt.outcome == SUCCESS:
            if not satisfies(p, attempt.colouring):
                raise RuntimeError("inner loop reported success on a violated colouring")
            return attempt.colouring
    raise ExhaustedError(f"all {num_tapes} tapes failed within {m} rounds")


def scan_order(p: ColouringProblem, currently: list) -> VertexOrder:
    """Priority order matching a pass's scan: list position first, the rest after."""
    return VertexOrder.from_priority(list(currently), p.n)
