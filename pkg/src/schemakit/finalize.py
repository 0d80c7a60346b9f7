"""Global graph repair: cycle removal, transitive reduction, connectivity.

Temporal edges are scored pairwise, so the raw edge set can contain cycles.
We order the vertices with a greedy weighted feedback-arc-set heuristic
(strip sinks and sources, otherwise drop the vertex with the largest
out-minus-in weight), delete ordering-violating edges, and transitively
reduce each edge kind.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Optional, Sequence

from .graph import Edge, EdgeType, SchemaGraph

Arc = tuple[str, str]
WeightedArcs = Mapping[Arc, float]


class CycleError(Exception):
    def __init__(self, witness: Sequence[str]):
        super().__init__(f"cycle: {' -> '.join(witness)}")
        self.witness = list(witness)


def greedy_fas_ordering(nodes: Iterable[str], arcs: WeightedArcs) -> list[str]:
    """Vertex ordering minimizing (greedily) the weight of backward arcs.

    Repeatedly strips sink vertices to the tail and source vertices to the
    head; when neither exists, removes the vertex with the largest
    out-weight minus in-weight (recomputed after every removal, smallest
    vertex id on ties) to the head.
    """
    remaining = set(nodes)
    for u, v in arcs:
        if u not in remaining or v not in remaining:
            raise ValueError(f"arc ({u!r}, {v!r}) has an endpoint outside the vertex set")
    out_w: dict[str, float] = {n: 0.0 for n in remaining}
    in_w: dict[str, float] = {n: 0.0 for n in remaining}
    succ: dict[str, set[str]] = {n: set() for n in remaining}
    pred: dict[str, set[str]] = {n: set() for n in remaining}
    for (u, v), w in arcs.items():
        out_w[u] += w
        in_w[v] += w
        succ[u].add(v)
        pred[v].add(u)

    head: list[str] = []
    tail: list[str] = []

    def drop(v: str) -> None:
        for p in pred[v]:
            succ[p].discard(v)
            out_w[p] -= arcs[(p, v)]
        for s in succ[v]:
            pred[s].discard(v)
            in_w[s] -= arcs[(v, s)]
        remaining.discard(v)

    while remaining:
        progressed = True
        while progressed:
            progressed = False
            sinks = sorted(v for v in remaining if not succ[v])
            for v in sinks:
                drop(v)
                tail.insert(0, v)
                progressed = True
            sources = sorted(v for v in remaining if not pred[v] and succ[v])
            for v in sources:
                drop(v)
                head.append(v)
                progressed = True
        if not remaining:
            break
        v = max(sorted(remaining), key=lambda n: out_w[n] - in_w[n])
        drop(v)
        head.append(v)
    return head + tail


def remove_feedback_edges(
    arcs: WeightedArcs, ordering: Sequence[str]
) -> tuple[dict[Arc, float], dict[Arc, float]]:
    """Split arcs into (kept, removed) by an ordering; kept arcs form a DAG."""
    position = {v: i for i, v in enumerate(ordering)}
    if len(position) != len(ordering):
        raise ValueError("ordering contains repeated vertices")
    kept: dict[Arc, float] = {}
    removed: dict[Arc, float] = {}
    for (u, v), w in arcs.items():
        if u not in position or v not in position:
            raise ValueError(f"ordering does not cover arc ({u!r}, {v!r})")
        (kept if position[u] < position[v] else removed)[(u, v)] = w
    return kept, removed


def _reachable(succ: Mapping[str, set[str]], start: str) -> set[str]:
    seen: set[str] = set()
    frontier = [start]
    while frontier:
        cur = frontier.pop()
        for nxt in succ.get(cur, ()):
            if nxt not in seen:
                seen.add(nxt)
                frontier.append(nxt)
    return seen


def _topo_order(nodes: set[str], succ: Mapping[str, set[str]]) -> list[str]:
    indeg = {n: 0 for n in nodes}
    for u in nodes:
        for v in succ.get(u, ()):
            indeg[v] += 1
    ready = sorted(n for n in nodes if indeg[n] == 0)
    order = []
    while ready:
        n = ready.pop(0)
        order.append(n)
        for v in sorted(succ.get(n, ())):
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
    if len(order) != len(nodes):
        cyc = _some_cycle(nodes, succ)
        raise CycleError(cyc)
    return order


def _some_cycle(nodes: set[str], succ: Mapping[str, set[str]]) -> list[str]:
    color = {n: 0 for n in nodes}
    stack: list[str] = []

    def dfs(u: str) -> Optional[list[str]]:
        color[u] = 1
        stack.append(u)
        for v in sorted(succ.get(u, ())):
            if color[v] == 1:
                return stack[stack.index(v):] + [v]
            if color[v] == 0:
                got = dfs(v)
                if got:
                    return got
        stack.pop()
        color[u] = 2
        return None

    for n in sorted(nodes):
        if color[n] == 0:
            got = dfs(n)
            if got:
                return got
    return []


def transitive_reduce(nodes: Iterable[str], arcs: WeightedArcs) -> dict[Arc, float]:
    """Minimal arc set with the same reachability (unique for DAGs).

    Raises :class:`CycleError` naming a witness if the input is not acyclic.
    """
    node_set = set(nodes)
    succ: dict[str, set[str]] = {n: set() for n in node_set}
    for u, v in arcs:
        succ[u].add(v)
    _topo_order(node_set, succ)  # raises on cycles
    reduced: dict[Arc, float] = {}
    for (u, v), w in arcs.items():
        succ[u].discard(v)
        if v not in _reachable(succ, u):
            reduced[(u, v)] = w
        succ[u].add(v)
    return reduced


def components(nodes: Iterable[str], arcs: Iterable[Arc]) -> list[set[str]]:
    """Connected components of the undirected view."""
    parent = {n: n for n in nodes}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in arcs:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    groups: dict[str, set[str]] = {}
    for n in parent:
        groups.setdefault(find(n), set()).add(n)
    return list(groups.values())


def complete_connectivity(
    nodes: Iterable[str],
    arcs: WeightedArcs,
    candidates: Mapping[Arc, float],
) -> tuple[dict[Arc, float], bool]:
    """Add highest-weight candidate arcs until the undirected view connects.

    Candidate arcs that would create a directed cycle are skipped.  Returns
    the augmented arc map and a flag telling whether the result is
    connected (it may not be if candidates run out).
    """
    node_set = set(nodes)
    current = dict(arcs)
    pool = sorted(
        ((w, u, v) for (u, v), w in candidates.items() if (u, v) not in current),
        key=lambda wuv: (-wuv[0], wuv[1], wuv[2]),
    )
    for w, u, v in pool:
        comps = components(node_set, current.keys())
        if len(comps) <= 1:
            break
        comp_of = {n: i for i, c in enumerate(comps) for n in c}
        if comp_of[u] == comp_of[v]:
            continue
        succ: dict[str, set[str]] = {n: set() for n in node_set}
        for a, b in current:
            succ[a].add(b)
        if u in _reachable(succ, v):  # u -> v would close a cycle
            continue
        current[(u, v)] = w
    connected = len(components(node_set, current.keys())) <= 1
    return current, connected


# -- whole-schema finalization ---------------------------------------


def _subgraph_arcs(g: SchemaGraph, kind: EdgeType, nodes: set[str]) -> dict[Arc, float]:
    return {
        (e.src, e.dst): e.weight
        for e in g.edges_of_kind(kind)
        if e.src in nodes and e.dst in nodes
    }


def break_cycles(g: SchemaGraph, kind: EdgeType, nodes: set[str]) -> dict[Arc, float]:
    """Run greedy FAS ordering on a kind-restricted subgraph, drop backward arcs."""
    arcs = _subgraph_arcs(g, kind, nodes)
    ordering = greedy_fas_ordering(nodes, arcs)
    kept, removed = remove_feedback_edges(arcs, ordering)
    for u, v in removed:
        g.remove_edge(u, v, kind)
    return removed


def finalize_schema(g: SchemaGraph) -> SchemaGraph:
    """Repair a scored schema into a consistent one, in place.

    Per chapter (and once for the chapter events themselves): break temporal
    cycles; then break any hierarchical cycles, enforce a single
    hierarchical parent per event, and transitively reduce each edge kind.
    """
    groups: list[set[str]] = []
    chapter_ids = {e.id for e in g.chapter_events()}
    groups.append(chapter_ids)
    for cid in sorted(chapter_ids):
        groups.append({e.id for e in g.members(cid)})
    for nodes in groups:
        break_cycles(g, EdgeType.TEMPORAL, nodes)

    all_nodes = set(g.events)
    break_cycles(g, EdgeType.HIERARCHICAL, all_nodes)

    for kind in (EdgeType.TEMPORAL, EdgeType.HIERARCHICAL):
        arcs = _subgraph_arcs(g, kind, all_nodes)
        try:
            reduced = transitive_reduce(all_nodes, arcs)
        except CycleError:
            # cross-group temporal edges (gold data only) can still cycle
            break_cycles(g, kind, all_nodes)
            arcs = _subgraph_arcs(g, kind, all_nodes)
            reduced = transitive_reduce(all_nodes, arcs)
        for (u, v), w in arcs.items():
            if (u, v) not in reduced:
                g.remove_edge(u, v, kind)

    # single hierarchical parent: after reduction a surviving multi-parent
    # means genuinely competing parents; keep the heaviest in-edge
    incoming: dict[str, list[Edge]] = {}
    for e in g.edges_of_kind(EdgeType.HIERARCHICAL):
        incoming.setdefault(e.dst, []).append(e)
    for dst, edges in sorted(incoming.items()):
        if len(edges) > 1:
            edges.sort(key=lambda e: (-e.weight, e.src))
            for loser in edges[1:]:
                g.remove_edge(loser.src, loser.dst, EdgeType.HIERARCHICAL)

    # a pair must not carry both edge kinds; the scored kind (lighter-weight
    # provisional edges were already replaced) wins, preferring hierarchy
    for e in list(g.edges_of_kind(EdgeType.TEMPORAL)):
        if g.edge(e.src, e.dst, EdgeType.HIERARCHICAL) is not None:
            g.remove_edge(e.src, e.dst, EdgeType.TEMPORAL)
    return g
