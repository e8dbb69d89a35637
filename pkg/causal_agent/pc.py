"""PC algorithm: skeleton search, v-structure orientation and Meek propagation."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

from .ci_test import DEFAULT_ALPHA, CiTestError, fisher_z_test
from .graph import CausalGraph, GraphError, meek_closure
from .tabular import DataTable

logger = logging.getLogger(__name__)

# (x, y, conditioning) -> True when x and y are independent given conditioning
IndependenceOracle = Callable[[str, str, tuple[str, ...]], bool]


class PcError(ValueError):
    """Raised for invalid PC inputs."""


@dataclass
class SepSetMap:
    """Conditioning sets that removed each pair from the skeleton."""

    entries: dict[frozenset[str], tuple[str, ...]] = field(default_factory=dict)

    def record(self, a: str, b: str, conditioning: tuple[str, ...]) -> None:
        self.entries[frozenset((a, b))] = tuple(conditioning)

    def get(self, a: str, b: str) -> tuple[str, ...] | None:
        return self.entries.get(frozenset((a, b)))

    def __contains__(self, pair) -> bool:
        a, b = pair
        return frozenset((a, b)) in self.entries

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class PcResult:
    graph: CausalGraph
    sepsets: SepSetMap
    tests_run: int


def fisher_z_oracle(table: DataTable, alpha: float = DEFAULT_ALPHA) -> IndependenceOracle:
    """Independence oracle backed by Fisher-Z; tests that cannot run count as dependent."""
    def independent(x: str, y: str, z: tuple[str, ...]) -> bool:
        try:
            return fisher_z_test(table, x, y, z, alpha).independent
        except CiTestError as e:
            logger.debug("test %s _|_ %s | %s skipped (%s), kept as dependent", x, y, z, e)
            return False

    return independent


def pc_skeleton(
    variables: Sequence[str], independent: IndependenceOracle
) -> tuple[dict[str, set[str]], SepSetMap, int]:
    """Stable skeleton search.

    For each conditioning size, adjacencies are frozen at the start of the level;
    pairs are visited in variable order and candidate subsets in lexicographic
    order of variable positions. The first independence found removes the edge.

    Returns:
        (adjacency, sepsets, number of tests run)
    """
    position = {v: i for i, v in enumerate(variables)}
    adjacency = {v: {w for w in variables if w != v} for v in variables}
    sepsets = SepSetMap()
    tests = 0
    level = 0

    while any(len(adjacency[v]) - 1 >= level for v in variables):
        frozen = {v: sorted(adjacency[v], key=position.__getitem__) for v in variables}
        for x in variables:
            for y in frozen[x]:
                if y not in adjacency[x]:
                    continue
                candidates = [w for w in frozen[x] if w != y]
                if len(candidates) < level:
                    continue
                for subset in combinations(candidates, level):
                    tests += 1
                    if independent(x, y, subset):
                        adjacency[x].discard(y)
                        adjacency[y].discard(x)
                        sepsets.record(x, y, subset)
                        break
        level += 1

    return adjacency, sepsets, tests


def _orient(
    variables: Sequence[str], adjacency: dict[str, set[str]], sepsets: SepSetMap
) -> CausalGraph:
    demanded: set[tuple[str, str]] = set()
    for k in variables:
        for a, b in combinations(sorted(adjacency[k], key=list(variables).index), 2):
            if b in adjacency[a]:
                continue
            sepset = sepsets.get(a, b) or ()
            if k not in sepset:
                demanded.add((a, k))
                demanded.add((b, k))

    conflicts = {frozenset(edge) for edge in demanded if edge[::-1] in demanded}
    for pair in sorted(conflicts, key=sorted):
        logger.warning("conflicting v-structure orientations on %s, left undirected", " -- ".join(sorted(pair)))

    directed: set[tuple[str, str]] = set()
    for edge in sorted(demanded):
        if frozenset(edge) in conflicts:
            continue
        try:
            CausalGraph(tuple(variables), frozenset(directed | {edge}))
        except GraphError:
            logger.warning("v-structure orientation %s -> %s would close a cycle, skipped", *edge)
            continue
        directed.add(edge)

    undirected = set()
    for a in variables:
        for b in adjacency[a]:
            if (a, b) not in directed and (b, a) not in directed:
                undirected.add(frozenset((a, b)))

    return meek_closure(CausalGraph(tuple(variables), frozenset(directed), frozenset(undirected)))


def pc_search(variables: Sequence[str], independent: IndependenceOracle) -> PcResult:
    """PC with an arbitrary independence oracle."""
    variables = tuple(variables)
    adjacency, sepsets, tests = pc_skeleton(variables, independent)
    graph = _orient(variables, adjacency, sepsets)
    logger.debug("PC over %d variables ran %d tests", len(variables), tests)
    return PcResult(graph, sepsets, tests)


def run_pc(table: DataTable, alpha: float = DEFAULT_ALPHA) -> CausalGraph:
    """CPDAG over all table columns estimated with Fisher-Z tests."""
    return pc_search(table.columns, fisher_z_oracle(table, alpha)).graph


def run_pc_partial(table: DataTable, subset: Sequence[str], alpha: float = DEFAULT_ALPHA) -> CausalGraph:
    """PC on the projection of the table onto ``subset``; other columns are simply dropped.

    Raises:
        PcError: On an empty subset, duplicates or unknown names
    """
    if not subset:
        raise PcError("partial causal graph needs at least one variable")
    unknown = [name for name in subset if name not in table.columns]
    if unknown:
        raise PcError(f"unknown variables for table '{table.name}': {', '.join(unknown)}")
    if len(set(subset)) != len(subset):
        raise PcError("partial causal graph variables contain duplicates")
    ordered = [column for column in table.columns if column in set(subset)]
    return run_pc(table.select(ordered), alpha)
