"""Distance-sparse vertex partitions.

A partition is r-sparse when distinct same-part vertices sit at undirected
distance greater than 2r; equivalently, every radius-r ball sees pairwise
distinct parts.  Such partitions are exactly the proper colourings of the
distance-2r power graph, and are built here by greedy colouring.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from resample_forge.graph_core import Digraph, ball, power_graph


@dataclass(frozen=True)
class SparsePartition:
    """Vertex partition given by part_of; part indices are dense 0..num_parts-1."""

    num_parts: int
    part_of: tuple[int, ...]
    sparsity_r: int

    def members(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.num_parts)]
        for x, alpha in enumerate(self.part_of):
            out[alpha].append(x)
        return out

    def validate(self) -> None:
        if self.num_parts < 0:
            raise ValueError("negative part count")
        used = set(self.part_of)
        if used != set(range(self.num_parts)):
            raise ValueError("part indices are not dense 0..num_parts-1")


def singleton_partition(n: int) -> SparsePartition:
    """Every vertex its own part; r-sparse for every r."""
    return SparsePartition(n, tuple(range(n)), 0)


def sparse_partition(g: Digraph, r: int) -> SparsePartition:
    """Greedy colouring of the distance-2r power graph, scanning vertices by index.

    Each vertex takes the least colour unused among its already-coloured
    power-graph neighbours, so the colour set comes out dense.
    """
    if r < 1:
        raise ValueError("sparsity radius must be >= 1")
    padj = power_graph(g, 2 * r).out_adj
    colour = [-1] * g.n
    for x in range(g.n):
        taken = {colour[y] for y in padj[x] if colour[y] >= 0}
        c = 0
        while c in taken:
            c += 1
        colour[x] = c
    num_parts = max(colour) + 1 if g.n else 0
    return SparsePartition(num_parts, tuple(colour), r)


def is_r_sparse(g: Digraph, pi: SparsePartition, r: int) -> bool:
    """True iff every radius-r ball meets each part at most once."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    for x in range(g.n):
        seen: set[int] = set()
        for y in ball(g, x, r):
            alpha = pi.part_of[y]
            if alpha in seen:
                return False
            seen.add(alpha)
    return True


def is_pi_unique(pi: SparsePartition, subset) -> bool:
    """True iff the partition map is injective on `subset`."""
    seen: set[int] = set()
    for x in subset:
        alpha = pi.part_of[x]
        if alpha in seen:
            return False
        seen.add(alpha)
    return True
