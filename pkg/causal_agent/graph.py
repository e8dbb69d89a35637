"""Mixed causal graphs and the graph-theoretic predicates the tools rely on.

A ``CausalGraph`` holds directed edges (``a -> b``) and undirected edges (``a -- b``).
Fully directed graphs are DAGs; graphs with undirected edges are partially directed
graphs such as the CPDAG returned by the PC algorithm. Predicates that reason about
paths (d-separation, backdoor paths) only accept fully directed graphs; a mixed graph
is resolved by quantifying over its consistent DAG extensions.

The directed part is backed by a ``networkx.DiGraph`` and the undirected part by a
``networkx.Graph``; traversals (topological order, ancestry, simple paths,
d-separation) are delegated to networkx.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Iterable, Iterator

import networkx as nx

logger = logging.getLogger(__name__)

DEFAULT_EXTENSION_CAP = 1024


class GraphError(ValueError):
    """Raised for invalid graphs, unknown nodes or unsupported queries."""


def _pair(a: str, b: str) -> frozenset[str]:
    return frozenset((a, b))


def _digraph(nodes: Iterable[str], directed: Iterable[tuple[str, str]]) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(nodes)
    graph.add_edges_from(directed)
    return graph


@dataclass(frozen=True)
class CausalGraph:
    """Mixed graph over variable names.

    Attributes:
        nodes: Ordered variable names
        directed: Set of (source, target) pairs
        undirected: Set of unordered pairs
    """

    nodes: tuple[str, ...]
    directed: frozenset[tuple[str, str]] = frozenset()
    undirected: frozenset[frozenset[str]] = frozenset()

    def __post_init__(self):
        nodes = tuple(self.nodes)
        directed = frozenset((str(a), str(b)) for a, b in self.directed)
        undirected = frozenset(frozenset(pair) for pair in self.undirected)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "undirected", undirected)

        if len(set(nodes)) != len(nodes):
            raise GraphError("duplicate node names")
        known = set(nodes)
        for a, b in directed:
            if a == b:
                raise GraphError(f"self-loop on '{a}'")
            if a not in known or b not in known:
                raise GraphError(f"edge {a} -> {b} references an unknown node")
            if (b, a) in directed:
                raise GraphError(f"edge between '{a}' and '{b}' is directed both ways")
        for pair in undirected:
            if len(pair) != 2:
                raise GraphError(f"invalid undirected edge {sorted(pair)}")
            if not pair <= known:
                raise GraphError(f"edge {' -- '.join(sorted(pair))} references an unknown node")
            a, b = sorted(pair)
            if (a, b) in directed or (b, a) in directed:
                raise GraphError(f"pair '{a}', '{b}' is both directed and undirected")
        if not nx.is_directed_acyclic_graph(self.digraph):
            raise GraphError("directed part contains a cycle")

    @classmethod
    def from_edges(
        cls,
        nodes: Iterable[str],
        directed: Iterable[tuple[str, str]] = (),
        undirected: Iterable[tuple[str, str]] = (),
    ) -> "CausalGraph":
        return cls(tuple(nodes), frozenset(directed), frozenset(_pair(a, b) for a, b in undirected))

    @cached_property
    def digraph(self) -> nx.DiGraph:
        """Directed part as a networkx DiGraph over all nodes."""
        return _digraph(self.nodes, self.directed)

    @cached_property
    def undirected_graph(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(self.nodes)
        graph.add_edges_from(tuple(pair) for pair in self.undirected)
        return graph

    def check_node(self, name: str) -> str:
        if name not in self.digraph:
            raise GraphError(f"unknown node '{name}'")
        return name

    def parents(self, node: str) -> tuple[str, ...]:
        return tuple(sorted(self.digraph.predecessors(self.check_node(node))))

    def children(self, node: str) -> tuple[str, ...]:
        return tuple(sorted(self.digraph.successors(self.check_node(node))))

    def adjacent(self, a: str, b: str) -> bool:
        return (a, b) in self.directed or (b, a) in self.directed or _pair(a, b) in self.undirected

    def has_directed(self, a: str, b: str) -> bool:
        return (a, b) in self.directed

    def has_undirected(self, a: str, b: str) -> bool:
        return _pair(a, b) in self.undirected

    @property
    def is_fully_directed(self) -> bool:
        return not self.undirected

    def skeleton(self) -> frozenset[frozenset[str]]:
        return frozenset(_pair(a, b) for a, b in self.directed) | self.undirected

    def skeleton_graph(self) -> nx.Graph:
        """Skeleton as an undirected networkx Graph."""
        graph = self.undirected_graph.copy()
        graph.add_edges_from(self.directed)
        return graph

    def v_structures(self) -> frozenset[tuple[str, str, str]]:
        """All (a, k, b) with a -> k <- b, a < b and a, b non-adjacent."""
        found = set()
        for k in self.nodes:
            for a, b in combinations(self.parents(k), 2):
                if not self.adjacent(a, b):
                    found.add((a, k, b))
        return frozenset(found)

    def topological_order(self) -> tuple[str, ...]:
        """Topological order of the directed part, ties broken by node order."""
        rank = {node: i for i, node in enumerate(self.nodes)}
        return tuple(nx.lexicographical_topological_sort(self.digraph, key=rank.__getitem__))

    def sorted_edges(self) -> list[tuple[str, str, str]]:
        """Edges as (from, to, kind) sorted lexicographically; undirected pairs sorted."""
        edges = [(a, b, "directed") for a, b in self.directed]
        edges += [(*sorted(pair), "undirected") for pair in self.undirected]
        return sorted(edges)

    def describe(self) -> str:
        """Human-readable edge listing, e.g. 'A -> B, B -- C'."""
        if not self.directed and not self.undirected:
            return "no edges"
        parts = []
        for a, b, kind in self.sorted_edges():
            parts.append(f"{a} -> {b}" if kind == "directed" else f"{a} -- {b}")
        return ", ".join(parts)

    def to_dict(self) -> dict:
        return {
            "nodes": list(self.nodes),
            "edges": [{"from": a, "to": b, "kind": kind} for a, b, kind in self.sorted_edges()],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False)

    @classmethod
    def from_dict(cls, data: dict) -> "CausalGraph":
        try:
            nodes = tuple(data["nodes"])
            directed, undirected = [], []
            for edge in data["edges"]:
                kind = edge["kind"]
                if kind == "directed":
                    directed.append((edge["from"], edge["to"]))
                elif kind == "undirected":
                    undirected.append((edge["from"], edge["to"]))
                else:
                    raise GraphError(f"unknown edge kind '{kind}'")
        except (KeyError, TypeError) as e:
            raise GraphError(f"malformed graph document: {e}") from None
        return cls.from_edges(nodes, directed, undirected)

    @classmethod
    def from_json(cls, text: str) -> "CausalGraph":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise GraphError(f"malformed graph document: {e}") from None
        return cls.from_dict(data)

    def relabel(self, mapping: dict[str, str]) -> "CausalGraph":
        """Rename nodes; names missing from the mapping are kept."""
        def rename(node: str) -> str:
            return mapping.get(node, node)

        return CausalGraph(
            tuple(rename(n) for n in self.nodes),
            frozenset((rename(a), rename(b)) for a, b in self.directed),
            frozenset(frozenset(rename(n) for n in pair) for pair in self.undirected),
        )


@dataclass(frozen=True)
class BackdoorPath:
    """Path from x to y whose first edge points into x."""

    sequence: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "sequence", tuple(self.sequence))
        if len(self.sequence) < 3:
            raise GraphError("a backdoor path has at least 3 nodes")
        if len(set(self.sequence)) != len(self.sequence):
            raise GraphError("a backdoor path cannot repeat nodes")

    def render(self) -> str:
        return ", ".join(self.sequence)


@dataclass(frozen=True)
class DagExtensions:
    """Consistent DAG extensions of a mixed graph."""

    graphs: tuple[CausalGraph, ...]
    truncated: bool = False


def _require_dag(g: CausalGraph) -> None:
    if not g.is_fully_directed:
        raise GraphError("operation requires a fully directed graph; resolve undirected edges first")


def _check_query(g: CausalGraph, x: str, y: str, what: str) -> None:
    g.check_node(x)
    g.check_node(y)
    if x == y:
        raise GraphError(f"{what} need two distinct nodes")


def descendants(g: CausalGraph, node: str) -> frozenset[str]:
    """Nodes reachable from ``node`` by directed paths, excluding ``node``."""
    return frozenset(nx.descendants(g.digraph, g.check_node(node)))


def d_separated(g: CausalGraph, x: str, y: str, z: Iterable[str] = ()) -> bool:
    """Check whether z d-separates x and y in a DAG.

    Raises:
        GraphError: On unknown nodes, undirected edges, x == y or x/y in z
    """
    _require_dag(g)
    _check_query(g, x, y, "d-separation queries")
    z = {g.check_node(n) for n in z}
    if x in z or y in z:
        raise GraphError("query nodes cannot be in the conditioning set")
    return nx.is_d_separator(g.digraph, {x}, {y}, z)


def _collider_free(g: CausalGraph, path: list[str]) -> bool:
    return not any(
        g.has_directed(prev, node) and g.has_directed(nxt, node)
        for prev, node, nxt in zip(path, path[1:], path[2:])
    )


def find_backdoor_paths(g: CausalGraph, x: str, y: str) -> list[BackdoorPath]:
    """All collider-free simple paths from x to y whose first edge points into x.

    Paths are returned in lexicographic order of their node sequences.
    """
    _require_dag(g)
    _check_query(g, x, y, "backdoor paths")

    found = [
        tuple(path)
        for path in nx.all_simple_paths(g.skeleton_graph(), x, y)
        if len(path) >= 3 and g.has_directed(path[1], x) and _collider_free(g, path)
    ]
    return [BackdoorPath(seq) for seq in sorted(found)]


def find_confounding_paths(g: CausalGraph, x: str, y: str) -> list[BackdoorPath]:
    """Backdoor paths from x to y whose last edge also points into y.

    Such a path has arrowheads at both ends and no collider, so it runs through
    a common cause (x <- ... <- c -> ... -> y). The set is symmetric: reversing a
    path for (x, y) gives one for (y, x).
    """
    return [path for path in find_backdoor_paths(g, x, y) if g.has_directed(path.sequence[-2], y)]


def v_structure_colliders(g: CausalGraph, x: str, y: str) -> list[str]:
    """Common children k with x -> k and y -> k in the directed part, sorted."""
    _check_query(g, x, y, "collider queries")
    return sorted(set(g.children(x)) & set(g.children(y)))


class _Pdag:
    """Mutable edge-mark state used while orienting edges."""

    def __init__(self, g: CausalGraph):
        self.nodes = g.nodes
        self.arrows = g.digraph.copy()
        self.lines = g.undirected_graph.copy()

    def adjacent(self, a: str, b: str) -> bool:
        return self.arrows.has_edge(a, b) or self.arrows.has_edge(b, a) or self.lines.has_edge(a, b)

    def is_directed(self, a: str, b: str) -> bool:
        return self.arrows.has_edge(a, b)

    def neighbors(self, node: str) -> set[str]:
        return set(self.arrows.predecessors(node)) | set(self.arrows.successors(node)) | set(self.lines[node])

    def parents(self, node: str) -> list[str]:
        return sorted(self.arrows.predecessors(node))

    def undirected_pairs(self) -> list[tuple[str, str]]:
        return sorted(tuple(sorted(edge)) for edge in self.lines.edges)

    def orient(self, a: str, b: str) -> None:
        self.lines.remove_edge(a, b)
        self.arrows.add_edge(a, b)

    def forced(self, u: str, v: str) -> bool:
        """True if one of Meek's rules R1-R4 orients the undirected edge u -- v as u -> v."""
        adj_u = self.neighbors(u)
        # R1: w -> u -- v, w and v non-adjacent
        for w in self.arrows.predecessors(u):
            if w != v and not self.adjacent(w, v):
                return True
        # R2: u -> w -> v
        for w in self.arrows.successors(u):
            if self.is_directed(w, v):
                return True
        undirected_u = [w for w in self.lines[u] if w != v]
        # R3: u -- w1 -> v, u -- w2 -> v, w1 and w2 non-adjacent
        into_v = [w for w in undirected_u if self.is_directed(w, v)]
        for w1, w2 in combinations(into_v, 2):
            if not self.adjacent(w1, w2):
                return True
        # R4: u -- w1 -> w2 -> v, w1 and v non-adjacent, u adjacent to w2
        for w1 in undirected_u:
            if self.adjacent(w1, v):
                continue
            for w2 in self.arrows.successors(w1):
                if self.is_directed(w2, v) and w2 in adj_u:
                    return True
        return False

    def close(self, quiet: bool = False) -> None:
        """Apply Meek's rules to a fixpoint, never closing a directed cycle."""
        log = logger.debug if quiet else logger.warning
        changed = True
        while changed:
            changed = False
            for a, b in self.undirected_pairs():
                forward, backward = self.forced(a, b), self.forced(b, a)
                if forward and backward:
                    log("conflicting Meek orientations on %s -- %s, left undirected", a, b)
                    continue
                if forward or backward:
                    u, v = (a, b) if forward else (b, a)
                    if nx.has_path(self.arrows, v, u):
                        log("Meek orientation %s -> %s would close a cycle, skipped", u, v)
                        continue
                    self.orient(u, v)
                    changed = True
                    break

    def has_cycle(self) -> bool:
        return not nx.is_directed_acyclic_graph(self.arrows)

    def graph(self) -> CausalGraph:
        return CausalGraph(
            self.nodes,
            frozenset(self.arrows.edges),
            frozenset(frozenset(edge) for edge in self.lines.edges),
        )


def meek_closure(g: CausalGraph) -> CausalGraph:
    """Orient undirected edges implied by Meek's rules R1-R4 until nothing changes."""
    pdag = _Pdag(g)
    pdag.close()
    return pdag.graph()


def iter_dag_extensions(g: CausalGraph) -> Iterator[CausalGraph]:
    """Yield every acyclic full orientation of g that creates no new v-structure.

    Branches on the lexicographically first undirected edge and propagates forced
    orientations with Meek's rules between branches; every rule application is
    implied by acyclicity plus the no-new-v-structure constraint, so no extension
    is lost.
    """
    allowed = g.v_structures()
    skeleton = g.skeleton_graph()

    def consistent(pdag: _Pdag) -> bool:
        if pdag.has_cycle():
            return False
        for k in pdag.nodes:
            for a, b in combinations(pdag.parents(k), 2):
                if not skeleton.has_edge(a, b) and (a, k, b) not in allowed:
                    return False
        return True

    seen = set()

    def search(pdag: _Pdag) -> Iterator[CausalGraph]:
        pdag.close(quiet=True)
        if not consistent(pdag):
            return
        pairs = pdag.undirected_pairs()
        if not pairs:
            key = frozenset(pdag.arrows.edges)
            if key not in seen:
                seen.add(key)
                yield pdag.graph()
            return
        a, b = pairs[0]
        for u, v in ((a, b), (b, a)):
            branch = _Pdag(pdag.graph())
            branch.orient(u, v)
            yield from search(branch)

    yield from search(_Pdag(g))


def enumerate_dag_extensions(g: CausalGraph, cap: int = DEFAULT_EXTENSION_CAP) -> DagExtensions:
    """Consistent DAG extensions of g, up to ``cap``.

    Raises:
        GraphError: If cap < 1 or g has no consistent extension
    """
    if cap < 1:
        raise GraphError("extension cap must be at least 1")
    graphs = []
    truncated = False
    for extension in iter_dag_extensions(g):
        if len(graphs) == cap:
            truncated = True
            logger.info("extension enumeration truncated at %d graphs", cap)
            break
        graphs.append(extension)
    if not graphs:
        raise GraphError("graph has no consistent DAG extension")
    return DagExtensions(tuple(graphs), truncated)


def cpdag_of_dag(g: CausalGraph) -> CausalGraph:
    """CPDAG of a DAG: v-structure edges and Meek-implied edges directed, the rest undirected."""
    _require_dag(g)
    compelled = set()
    for a, k, b in g.v_structures():
        compelled.add((a, k))
        compelled.add((b, k))
    undirected = frozenset(_pair(a, b) for a, b in g.directed if (a, b) not in compelled)
    return meek_closure(CausalGraph(g.nodes, frozenset(compelled), undirected))


def structural_hamming_distance(a: CausalGraph, b: CausalGraph) -> int:
    """Edge insertions, deletions and re-orientations needed to turn a into b."""
    def mark(g: CausalGraph, u: str, v: str) -> str | None:
        if (u, v) in g.directed:
            return "->"
        if (v, u) in g.directed:
            return "<-"
        if _pair(u, v) in g.undirected:
            return "--"
        return None

    nodes = sorted(set(a.nodes) | set(b.nodes))
    distance = 0
    for u, v in combinations(nodes, 2):
        if mark(a, u, v) != mark(b, u, v):
            distance += 1
    return distance


__all__ = [
    "BackdoorPath",
    "CausalGraph",
    "DagExtensions",
    "GraphError",
    "cpdag_of_dag",
    "d_separated",
    "descendants",
    "enumerate_dag_extensions",
    "find_backdoor_paths",
    "find_confounding_paths",
    "iter_dag_extensions",
    "meek_closure",
    "structural_hamming_distance",
    "v_structure_colliders",
]
