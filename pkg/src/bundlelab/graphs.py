"""Finite d-regular multigraphs with oriented-edge structure.

Vertices are 0-indexed integers.  An oriented edge ``e`` runs from
``tails[e]`` to ``heads[e]``; the fixed-point-free involution
``reversal`` pairs each oriented edge with its reversal.  A self-loop
contributes two distinct oriented half-edges exchanged by ``reversal``,
so every vertex has exactly ``d`` outgoing oriented edges.

Nonbacktracking structure is defined at edge-id level: a step may not
be followed by its own reversal, but a loop traversed twice in the same
direction does not backtrack.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

__all__ = [
    "GraphError",
    "RegularGraph",
    "NbPath",
    "build_graph",
    "from_undirected",
    "petersen_graph",
    "cycle_graph",
    "bouquet_graph",
    "girth",
    "injectivity_radius",
    "bs_profile",
    "tree_closed_walks",
    "tree_first_returns",
    "enumerate_nb_paths",
    "enumerate_closed_walks",
    "spanning_tree",
    "graph_to_json",
    "graph_from_json",
]


class GraphError(ValueError):
    """Invalid graph data: non-regular, disconnected, or bad involution."""


@dataclass(frozen=True)
class RegularGraph:
    """A connected d-regular multigraph with oriented edges.

    Attributes
    ----------
    degree : int
        Common vertex degree d (loops count twice).
    vertex_count : int
        Number of vertices.
    heads, tails : ndarray of int
        Endpoints of each oriented edge, length 2m.
    reversal : ndarray of int
        Fixed-point-free involution pairing e with its reversal.
    out_edges : tuple of tuple of int
        For each vertex, the d oriented edges leaving it.
    vertex_transitive : bool
        Set by constructions known to be vertex-transitive (Cayley
        graphs); lets per-vertex quantities be computed once.
    """

    degree: int
    vertex_count: int
    heads: np.ndarray
    tails: np.ndarray
    reversal: np.ndarray
    out_edges: tuple[tuple[int, ...], ...]
    vertex_transitive: bool = False
    labels: tuple | None = field(default=None, compare=False)

    @property
    def oriented_edge_count(self) -> int:
        return len(self.heads)

    def in_edges(self, x: int) -> tuple[int, ...]:
        # edges into x are reversals of edges out of x
        return tuple(int(self.reversal[e]) for e in self.out_edges[x])

    def __repr__(self) -> str:  # pragma: no cover
        return (f"RegularGraph(d={self.degree}, vertices={self.vertex_count}, "
                f"oriented_edges={self.oriented_edge_count})")


def build_graph(d: int, oriented_edge_list, *, vertex_transitive: bool = False,
                labels=None) -> RegularGraph:
    """Validate an oriented edge list [(head, tail, edge_id, reversal_id), ...].

    Edge ids must be 0..2m-1.  Raises :class:`GraphError` naming the
    offending vertex or edge on any violation.
    """
    if d < 1:
        raise GraphError(f"degree must be positive, got {d}")
    n_edges = len(oriented_edge_list)
    heads = np.full(n_edges, -1, dtype=np.int64)
    tails = np.full(n_edges, -1, dtype=np.int64)
    rev = np.full(n_edges, -1, dtype=np.int64)
    for head, tail, eid, rid in oriented_edge_list:
        if not (0 <= eid < n_edges) or not (0 <= rid < n_edges):
            raise GraphError(f"edge id out of range: ({eid}, {rid})")
        if heads[eid] != -1:
            raise GraphError(f"duplicate edge id {eid}")
        heads[eid], tails[eid], rev[eid] = head, tail, rid
    if np.any(heads < 0):
        missing = int(np.argmin(heads))
        raise GraphError(f"missing edge id {missing}")
    for e in range(n_edges):
        r = int(rev[e])
        if r == e:
            raise GraphError(f"reversal involution has fixed point at edge {e}")
        if int(rev[r]) != e:
            raise GraphError(f"reversal not an involution at edge {e}")
        if heads[r] != tails[e] or tails[r] != heads[e]:
            raise GraphError(f"reversal of edge {e} does not swap endpoints")

    n_vertices = int(max(heads.max(), tails.max())) + 1
    out_lists: list[list[int]] = [[] for _ in range(n_vertices)]
    for e in range(n_edges):
        out_lists[int(tails[e])].append(e)
    for x, lst in enumerate(out_lists):
        if len(lst) != d:
            raise GraphError(f"vertex {x} has out-degree {len(lst)}, expected {d}")

    # connectivity
    seen = np.zeros(n_vertices, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        x = stack.pop()
        for e in out_lists[x]:
            y = int(heads[e])
            if not seen[y]:
                seen[y] = True
                stack.append(y)
    if not seen.all():
        bad = int(np.argmin(seen))
        raise GraphError(f"graph is disconnected (vertex {bad} unreachable)")

    return RegularGraph(
        degree=d,
        vertex_count=n_vertices,
        heads=heads,
        tails=tails,
        reversal=rev,
        out_edges=tuple(tuple(lst) for lst in out_lists),
        vertex_transitive=vertex_transitive,
        labels=tuple(labels) if labels is not None else None,
    )


def from_undirected(d: int, edges, **kwargs) -> RegularGraph:
    """Build from undirected edges [(u, v), ...]; loops given as (v, v).

    Edge i expands to oriented ids 2i (u -> v) and 2i+1 (v -> u).
    """
    oriented = []
    for i, (u, v) in enumerate(edges):
        oriented.append((v, u, 2 * i, 2 * i + 1))
        oriented.append((u, v, 2 * i + 1, 2 * i))
    return build_graph(d, oriented, **kwargs)


def petersen_graph() -> RegularGraph:
    outer = [(i, (i + 1) % 5) for i in range(5)]
    inner = [(5 + i, 5 + (i + 2) % 5) for i in range(5)]
    spokes = [(i, 5 + i) for i in range(5)]
    return from_undirected(3, outer + inner + spokes, vertex_transitive=True)


def cycle_graph(n: int) -> RegularGraph:
    if n < 3:
        raise GraphError("cycle needs at least 3 vertices")
    return from_undirected(2, [(i, (i + 1) % n) for i in range(n)],
                           vertex_transitive=True)


def bouquet_graph(loops: int) -> RegularGraph:
    """Single vertex with the given number of self-loops (d = 2*loops)."""
    if loops < 1:
        raise GraphError("bouquet needs at least one loop")
    return from_undirected(2 * loops, [(0, 0)] * loops, vertex_transitive=True)


@dataclass(frozen=True)
class NbPath:
    """Nonbacktracking path: edge ids in traversal order from ``start``.

    Length-0 paths are single vertices.  Consecutive edges are
    head-to-tail and never reversal pairs.
    """

    graph: RegularGraph
    start: int
    edges: tuple[int, ...]

    def __post_init__(self):
        g = self.graph
        prev = None
        v = self.start
        for e in self.edges:
            if int(g.tails[e]) != v:
                raise GraphError(f"edge {e} does not continue the path")
            if prev is not None and e == int(g.reversal[prev]):
                raise GraphError(f"edge {e} backtracks")
            v = int(g.heads[e])
            prev = e

    @property
    def length(self) -> int:
        return len(self.edges)

    @property
    def head(self) -> int:
        if not self.edges:
            return self.start
        return int(self.graph.heads[self.edges[-1]])

    @property
    def tail(self) -> int:
        return self.start


def enumerate_nb_paths(graph: RegularGraph, x: int, k: int) -> list[NbPath]:
    """All nonbacktracking paths of length k starting at x.

    Count is d(d-1)^(k-1) for k >= 1 and 1 for k = 0.
    """
    if k == 0:
        return [NbPath(graph, x, ())]
    rev = graph.reversal
    heads = graph.heads
    paths: list[tuple[int, ...]] = [(e,) for e in graph.out_edges[x]]
    for _ in range(k - 1):
        nxt = []
        for p in paths:
            last = p[-1]
            banned = int(rev[last])
            for e in graph.out_edges[int(heads[last])]:
                if e != banned:
                    nxt.append(p + (e,))
        paths = nxt
    return [NbPath(graph, x, p) for p in paths]


def enumerate_closed_walks(graph: RegularGraph, x: int, k: int,
                           budget: int = 10**7) -> list[tuple[int, ...]]:
    """All closed walks (backtracking allowed) of length k at x, as edge tuples.

    Refuses to run when d^k exceeds ``budget``.
    """
    if graph.degree ** k > budget:
        raise GraphError(f"walk budget exceeded: {graph.degree}^{k} > {budget}")
    if k == 0:
        return [()]
    heads = graph.heads
    walks = [((e,), int(heads[e])) for e in graph.out_edges[x]]
    for _ in range(k - 1):
        walks = [(w + (e,), int(heads[e]))
                 for w, v in walks for e in graph.out_edges[v]]
    return [w for w, v in walks if v == x]


def girth(graph: RegularGraph) -> int:
    """Length of the shortest closed nonbacktracking cycle.

    Loops give 1, parallel edges 2.  Breadth-first over oriented-edge
    states; a single base vertex suffices when the graph is flagged
    vertex-transitive.
    """
    if graph.degree <= 1:
        raise GraphError("girth undefined for d <= 1")
    heads, tails, rev = graph.heads, graph.tails, graph.reversal
    starts = [0] if graph.vertex_transitive else range(graph.vertex_count)
    best = None
    for x in starts:
        # dist[e] = shortest nb walk from x whose last edge is e
        dist = {}
        frontier = []
        for e in graph.out_edges[x]:
            dist[e] = 1
            frontier.append(e)
        depth = 1
        while frontier:
            if best is not None and depth >= best:
                break
            hit = [e for e in frontier if int(heads[e]) == x]
            if hit:
                best = depth if best is None else min(best, depth)
                break
            nxt = []
            for e in frontier:
                banned = int(rev[e])
                for f in graph.out_edges[int(heads[e])]:
                    if f != banned and f not in dist:
                        dist[f] = depth + 1
                        nxt.append(f)
            frontier = nxt
            depth += 1
        else:
            continue
    if best is None:
        raise GraphError("no cycle found (not a finite regular graph?)")
    return best


def injectivity_radius(graph: RegularGraph, x: int) -> int:
    """Largest r such that the tree ball of radius r injects into the graph at x.

    Computed by simultaneous nonbacktracking path expansion with
    endpoint-collision detection; the first radius producing a repeated
    endpoint, minus one.  Any cycle of length <= 2 through x forces 0.
    """
    seen = {x}
    frontier = [(x, -1)]  # (endpoint, incoming edge)
    r = 0
    while True:
        nxt = []
        for v, e_in in frontier:
            banned = int(graph.reversal[e_in]) if e_in >= 0 else -1
            for e in graph.out_edges[v]:
                if e == banned:
                    continue
                y = int(graph.heads[e])
                if y in seen:
                    return r
                nxt.append((y, e))
        endpoints = [y for y, _ in nxt]
        if len(set(endpoints)) < len(endpoints):
            return r
        seen.update(endpoints)
        frontier = nxt
        r += 1
        if not frontier:  # d == 1 edge case, cannot happen for valid d >= 2
            return r


def bs_profile(graph: RegularGraph, k_max: int) -> list[Fraction]:
    """Benjamini-Schramm profile: fraction of vertices with inj <= k, k = 0..k_max."""
    if graph.vertex_transitive:
        inj = injectivity_radius(graph, 0)
        injs = [inj] * graph.vertex_count
    else:
        injs = [injectivity_radius(graph, x) for x in range(graph.vertex_count)]
    n = graph.vertex_count
    return [Fraction(sum(1 for i in injs if i <= k), n) for k in range(k_max + 1)]


def tree_closed_walks(d: int, k: int) -> int:
    """Closed walks of length k at the root of the d-regular tree.

    Dyck-path weighted recursion: d up-choices at height 0, d-1 above.
    Exact big-integer arithmetic.
    """
    if d < 2:
        raise GraphError("tree walks need d >= 2")
    if k < 0:
        raise GraphError("negative length")
    heights = {0: 1}
    for _ in range(k):
        nxt: dict[int, int] = {}
        for h, c in heights.items():
            up = d if h == 0 else d - 1
            nxt[h + 1] = nxt.get(h + 1, 0) + c * up
            if h > 0:
                nxt[h - 1] = nxt.get(h - 1, 0) + c
        heights = nxt
    return heights.get(0, 0)


def tree_first_returns(d: int, k: int) -> int:
    """Walks of length 2k on the d-regular tree returning to the root
    for the first time at step 2k: (1/k) C(2(k-1), k-1) d (d-1)^(k-1)."""
    if k < 1:
        raise GraphError("first returns need k >= 1")
    return math.comb(2 * (k - 1), k - 1) * d * (d - 1) ** (k - 1) // k


def spanning_tree(graph: RegularGraph, root: int = 0) -> list[int]:
    """BFS spanning tree from root, as the list of tree edge ids oriented
    away from the root (parent -> child), deterministic in edge order."""
    seen = np.zeros(graph.vertex_count, dtype=bool)
    seen[root] = True
    tree_edges: list[int] = []
    frontier = [root]
    while frontier:
        nxt = []
        for x in frontier:
            for e in graph.out_edges[x]:
                y = int(graph.heads[e])
                if not seen[y]:
                    seen[y] = True
                    tree_edges.append(e)
                    nxt.append(y)
        frontier = nxt
    return tree_edges


def graph_to_json(graph: RegularGraph) -> dict:
    return {
        "d": graph.degree,
        "vertices": graph.vertex_count,
        "oriented_edges": [
            [int(graph.heads[e]), int(graph.tails[e]), e, int(graph.reversal[e])]
            for e in range(graph.oriented_edge_count)
        ],
        "vertex_transitive": graph.vertex_transitive,
        "labels": list(graph.labels) if graph.labels is not None else None,
    }


def graph_from_json(obj: dict) -> RegularGraph:
    labels = obj.get("labels")
    return build_graph(
        obj["d"], obj["oriented_edges"],
        vertex_transitive=obj.get("vertex_transitive", False),
        labels=tuple(tuple(l) if isinstance(l, list) else l for l in labels)
        if labels is not None else None,
    )


def save_graph(graph: RegularGraph, path) -> None:
    with open(path, "w") as fh:
        json.dump(graph_to_json(graph), fh, sort_keys=True)


def load_graph(path) -> RegularGraph:
    with open(path) as fh:
        return graph_from_json(json.load(fh))
