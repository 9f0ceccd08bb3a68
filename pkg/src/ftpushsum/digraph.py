"""Directed communication topologies.

Edges are stored as ordered pairs ``(j, i)`` meaning "node i sends to node
j".  Self-loops are never stored: every update rule treats the self-link as
implicit, so storing it would double-count weights.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DiGraph:
    """Immutable digraph on nodes ``0..n-1``; safe to share across threads."""

    n: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"node count must be positive, got {self.n}")
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in self.edges))
        for j, i in self.edges:
            if not (0 <= j < self.n and 0 <= i < self.n):
                raise ValueError(f"edge ({j}, {i}) out of range for n={self.n}")
            if j == i:
                raise ValueError(f"self-loop ({j}, {i}) must stay implicit")


@dataclass(frozen=True)
class NeighborSets:
    """Per-node in/out neighborhoods and out-degrees of a digraph."""

    in_neighbors: tuple[frozenset[int], ...]
    out_neighbors: tuple[frozenset[int], ...]
    out_degree: tuple[int, ...]


def neighbor_sets(g: DiGraph) -> NeighborSets:
    ins: list[set[int]] = [set() for _ in range(g.n)]
    outs: list[set[int]] = [set() for _ in range(g.n)]
    for j, i in g.edges:  # i sends to j
        ins[j].add(i)
        outs[i].add(j)
    return NeighborSets(
        in_neighbors=tuple(frozenset(s) for s in ins),
        out_neighbors=tuple(frozenset(s) for s in outs),
        out_degree=tuple(len(s) for s in outs),
    )


def _reaches_all(n: int, adjacency: list[list[int]], start: int = 0) -> bool:
    seen = [False] * n
    seen[start] = True
    queue = deque([start])
    count = 1
    while queue:
        u = queue.popleft()
        for v in adjacency[u]:
            if not seen[v]:
                seen[v] = True
                count += 1
                queue.append(v)
    return count == n


def is_strongly_connected(g: DiGraph) -> bool:
    """True iff a directed path exists between every ordered node pair.

    Two traversals from node 0 suffice: one along edges, one against them.
    """
    forward: list[list[int]] = [[] for _ in range(g.n)]
    backward: list[list[int]] = [[] for _ in range(g.n)]
    for j, i in g.edges:
        forward[i].append(j)
        backward[j].append(i)
    return _reaches_all(g.n, forward) and _reaches_all(g.n, backward)


def random_strongly_connected(
    n: int,
    extra_edge_prob: float = 0.3,
    seed: int | np.random.Generator | None = None,
) -> DiGraph:
    """Random strongly connected digraph, deterministic per seed.

    Construction is a random Hamiltonian cycle plus independent extra
    edges, which guarantees strong connectivity without rejection
    sampling.
    """
    if n < 1:
        raise ValueError(f"node count must be positive, got {n}")
    if not 0.0 <= extra_edge_prob <= 1.0:
        raise ValueError(f"extra_edge_prob must be in [0, 1], got {extra_edge_prob}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    order = rng.permutation(n)
    edges: set[tuple[int, int]] = set()
    if n > 1:
        for k in range(n):
            src = int(order[k])
            dst = int(order[(k + 1) % n])
            edges.add((dst, src))
    for src in range(n):
        for dst in range(n):
            if src == dst:
                continue
            if rng.random() < extra_edge_prob:
                edges.add((dst, src))
    return DiGraph(n=n, edges=frozenset(edges))


def to_edge_list_text(g: DiGraph) -> str:
    """Serialize as edge-list text: first line ``n``, then one ``j i`` pair
    per line (meaning i sends to j)."""
    lines = [str(g.n)]
    lines.extend(f"{j} {i}" for j, i in sorted(g.edges))
    return "\n".join(lines) + "\n"


def from_edge_list_text(text: str) -> DiGraph:
    rows = [line.strip() for line in text.splitlines() if line.strip()]
    if not rows:
        raise ValueError("empty graph file")
    try:
        n = int(rows[0])
    except ValueError as exc:
        raise ValueError(f"first line must be the node count, got {rows[0]!r}") from exc
    edges = set()
    for line_no, row in enumerate(rows[1:], start=2):
        parts = row.split()
        if len(parts) != 2:
            raise ValueError(f"line {line_no}: expected 'j i', got {row!r}")
        j, i = int(parts[0]), int(parts[1])
        edges.add((j, i))
    return DiGraph(n=n, edges=frozenset(edges))
