"""Digraph plumbing: adjacency, dependency graph, balls, greedy MIS, growth checks.

Vertices are dense integers 0..n-1.  Out-neighbours of a vertex are the cells
it reads (its scope), in-neighbours are the vertices whose scope contains it.
Self-loops are allowed, at most one per vertex.  Distances are measured in the
underlying undirected graph.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field


@dataclass
class Digraph:
    """Simple digraph with dense integer vertices and sorted adjacency lists."""

    n: int
    out_adj: list[list[int]]
    in_adj: list[list[int]]
    _und_adj: list[list[int]] | None = field(default=None, repr=False, compare=False)

    @staticmethod
    def from_edges(n: int, edges) -> "Digraph":
        """Build a digraph from an iterable of (src, dst) pairs.

        Parallel edges collapse to one; vertex indices must lie in 0..n-1.
        """
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        out_sets: list[set[int]] = [set() for _ in range(n)]
        in_sets: list[set[int]] = [set() for _ in range(n)]
        for src, dst in edges:
            if not (0 <= src < n and 0 <= dst < n):
                raise ValueError(f"edge ({src}, {dst}) out of range for n={n}")
            out_sets[src].add(dst)
            in_sets[dst].add(src)
        return Digraph(n, [sorted(s) for s in out_sets], [sorted(s) for s in in_sets])

    def var(self, x: int) -> list[int]:
        """Out-neighbours of x: the cells x's rule reads."""
        return self.out_adj[x]

    def cl(self, x: int) -> list[int]:
        """In-neighbours of x: the vertices whose scope contains x."""
        return self.in_adj[x]

    def neighbourhood(self, x: int) -> set[int]:
        return set(self.out_adj[x]) | set(self.in_adj[x])

    def deg(self, x: int) -> int:
        # a self-loop contributes 1, via set semantics
        return len(self.neighbourhood(x))

    def maxdeg(self) -> int:
        if self.n == 0:
            return 0
        return max(self.deg(x) for x in range(self.n))

    def edges(self):
        for x in range(self.n):
            for y in self.out_adj[x]:
                yield (x, y)

    def num_edges(self) -> int:
        return sum(len(a) for a in self.out_adj)

    def und_adj(self) -> list[list[int]]:
        """Undirected adjacency (out+in, self-loops dropped), cached."""
        if self._und_adj is None:
            und = []
            for x in range(self.n):
                s = set(self.out_adj[x]) | set(self.in_adj[x])
                s.discard(x)
                und.append(sorted(s))
            self._und_adj = und
        return self._und_adj

    def validate(self) -> None:
        """Check adjacency lists are sorted, in range, duplicate-free, and mutually consistent."""
        if len(self.out_adj) != self.n or len(self.in_adj) != self.n:
            raise ValueError("adjacency list count does not match vertex count")
        for name, adj in (("out", self.out_adj), ("in", self.in_adj)):
            for x, lst in enumerate(adj):
                if lst != sorted(set(lst)):
                    raise ValueError(f"{name}-adjacency of vertex {x} is not sorted and duplicate-free")
                for y in lst:
                    if not (0 <= y < self.n):
                        raise ValueError(f"{name}-adjacency of vertex {x} mentions out-of-range vertex {y}")
        out_pairs = {(x, y) for x in range(self.n) for y in self.out_adj[x]}
        in_pairs = {(y, x) for x in range(self.n) for y in self.in_adj[x]}
        if out_pairs != in_pairs:
            raise ValueError("out- and in-adjacency disagree")


@dataclass(frozen=True)
class VertexOrder:
    """Total order on vertices given by rank; smaller rank scans first."""

    rank: tuple[int, ...]

    @staticmethod
    def identity(n: int) -> "VertexOrder":
        return VertexOrder(tuple(range(n)))

    @staticmethod
    def from_priority(priority: list[int], n: int) -> "VertexOrder":
        """Vertices listed in `priority` rank first (in list order), the rest follow by index."""
        rank = [0] * n
        seen = set()
        next_rank = 0
        for x in priority:
            if x not in seen:
                rank[x] = next_rank
                seen.add(x)
                next_rank += 1
        for x in range(n):
            if x not in seen:
                rank[x] = next_rank
                next_rank += 1
        return VertexOrder(tuple(rank))

    def key(self, x: int) -> int:
        return self.rank[x]


def build_rel(g: Digraph) -> Digraph:
    """Dependency graph: edge (x, y) iff the scopes of x and y intersect.

    Symmetric, with a self-loop at every vertex whose scope is nonempty.
    """
    adj: list[set[int]] = [set() for _ in range(g.n)]
    for v in range(g.n):
        readers = g.in_adj[v]  # every x with v in its scope
        for x in readers:
            for y in readers:
                adj[x].add(y)
    sorted_adj = [sorted(s) for s in adj]
    return Digraph(g.n, sorted_adj, [list(a) for a in sorted_adj])


def ball(g: Digraph, x: int, r: int) -> set[int]:
    """All vertices within undirected distance r of x (x included)."""
    if not (0 <= x < g.n):
        raise ValueError(f"vertex {x} out of range")
    if r < 0:
        raise ValueError("radius must be nonnegative")
    und = g.und_adj()
    seen = {x}
    frontier = deque([(x, 0)])
    while frontier:
        v, d = frontier.popleft()
        if d == r:
            continue
        for w in und[v]:
            if w not in seen:
                seen.add(w)
                frontier.append((w, d + 1))
    return seen


def power_graph(g: Digraph, r: int) -> Digraph:
    """Symmetric loopless digraph joining pairs at undirected distance 1..r."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    adj: list[list[int]] = []
    for x in range(g.n):
        near = ball(g, x, r)
        near.discard(x)
        adj.append(sorted(near))
    return Digraph(g.n, adj, [list(a) for a in adj])


def greedy_mis(g_sym: Digraph, candidates, order: VertexOrder) -> list[int]:
    """Greedy maximal independent subset of `candidates`, scanned by ascending rank.

    `g_sym` must be symmetric; self-loops are ignored for independence.
    Returns the chosen vertices sorted by vertex index.
    """
    chosen: set[int] = set()
    for x in sorted(candidates, key=order.key):
        if any(y != x and y in chosen for y in g_sym.out_adj[x]):
            continue
        chosen.add(x)
    return sorted(chosen)


def check_subexp(g: Digraph, big_r: int, eps: float, d: int) -> bool:
    """Degree and ball-growth check: maxdeg <= d and |ball(x, 3R)| <= (1+eps)^R for all x.

    The growth comparison runs in log space with a small slack toward acceptance,
    so e.g. |ball| = 16 against (1+1.0)^4 = 16 passes despite rounding.
    """
    if big_r < 1:
        raise ValueError("R must be >= 1")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if d < 0:
        raise ValueError("d must be nonnegative")
    if g.maxdeg() > d:
        return False
    limit_log = big_r * math.log1p(eps) + 1e-9
    for x in range(g.n):
        if math.log(len(ball(g, x, 3 * big_r))) > limit_log:
            return False
    return True
