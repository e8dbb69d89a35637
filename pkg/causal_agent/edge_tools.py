"""Edge-level determinations over a stored causal graph.

Each determination is three-valued. On a fully directed graph the answer comes
from the graph itself; undirected edges are resolved by evaluating every
consistent DAG extension: all extensions agree -> that answer, disagreement or a
truncated enumeration -> uncertain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable

from .graph import (
    DEFAULT_EXTENSION_CAP,
    BackdoorPath,
    CausalGraph,
    GraphError,
    find_confounding_paths,
    iter_dag_extensions,
    v_structure_colliders,
)


class Verdict(str, Enum):
    YES = "yes"
    NO = "no"
    UNCERTAIN = "uncertain"


@dataclass(frozen=True)
class EdgeVerdict:
    """Three-valued answer with supporting witnesses and an observation string."""

    verdict: Verdict
    witnesses: tuple = field(default_factory=tuple)
    narrative: str = ""

    def __post_init__(self):
        object.__setattr__(self, "witnesses", tuple(self.witnesses))
        if self.verdict is Verdict.YES and not self.witnesses:
            raise ValueError("a 'yes' verdict needs at least one witness")
        if self.verdict is Verdict.NO and self.witnesses:
            raise ValueError("a 'no' verdict carries no witnesses")


def _check_pair(g: CausalGraph, x: str, y: str) -> None:
    g.check_node(x)
    g.check_node(y)
    if x == y:
        raise GraphError("edge queries need two distinct variables")


def _over_extensions(
    g: CausalGraph, evaluate: Callable[[CausalGraph], object], cap: int
) -> tuple[list[object], bool]:
    """Evaluate every extension, stopping early once both empty and non-empty results appear.

    Returns:
        (results, settled) where settled is False when enumeration was cut short
        by the cap with all results still agreeing
    """
    results = []
    seen_hit = seen_miss = False
    for extension in iter_dag_extensions(g):
        if len(results) == cap:
            return results, False
        result = evaluate(extension)
        results.append(result)
        seen_hit |= bool(result)
        seen_miss |= not result
        if seen_hit and seen_miss:
            return results, True
    if not results:
        raise GraphError("graph has no consistent DAG extension")
    return results, True


def _intersection(groups: Iterable[Iterable]) -> list:
    groups = [set(group) for group in groups]
    common = set.intersection(*groups) if groups else set()
    return sorted(common)


def determine_direct_cause(g: CausalGraph, x: str, y: str, cap: int = DEFAULT_EXTENSION_CAP) -> EdgeVerdict:
    """Is there a directed edge x -> y?"""
    _check_pair(g, x, y)

    if g.has_directed(x, y):
        return EdgeVerdict(
            Verdict.YES, [f"{x} -> {y}"], f"There is a direct edge from {x} to {y}, so {x} is a cause of {y}"
        )
    if g.has_directed(y, x):
        return EdgeVerdict(
            Verdict.NO, [], f"There is a direct edge from {y} to {x}, so {x} is an effect of {y}, not a cause of it"
        )
    if not g.has_undirected(x, y):
        return EdgeVerdict(Verdict.NO, [], f"There is no direct edge linking {x} and {y}")

    results, settled = _over_extensions(g, lambda e: e.has_directed(x, y), cap)
    if settled and all(results):
        return EdgeVerdict(
            Verdict.YES,
            [f"{x} -> {y}"],
            f"The edge between {x} and {y} is oriented {x} -> {y} in every consistent graph, so {x} is a cause of {y}",
        )
    if settled and not any(results):
        return EdgeVerdict(
            Verdict.NO,
            [],
            f"The edge between {x} and {y} is oriented {y} -> {x} in every consistent graph, so {x} is an effect of {y}",
        )
    return EdgeVerdict(
        Verdict.UNCERTAIN,
        [],
        f"There is an undirected edge between {x} and {y}, so whether {x} is a cause of {y} is uncertain",
    )


def determine_collider(g: CausalGraph, x: str, y: str, cap: int = DEFAULT_EXTENSION_CAP) -> EdgeVerdict:
    """Do x and y share a common child (x -> k <- y)?"""
    _check_pair(g, x, y)

    if g.is_fully_directed:
        colliders = v_structure_colliders(g, x, y)
    else:
        results, settled = _over_extensions(g, lambda e: v_structure_colliders(e, x, y), cap)
        if not settled or (any(results) and not all(results)):
            return EdgeVerdict(
                Verdict.UNCERTAIN,
                [],
                f"It is uncertain whether there exists a collider of {x} and {y}, "
                f"it depends on the direction of undirected edges",
            )
        if not any(results):
            colliders = []
        else:
            colliders = _intersection(results) or list(results[0])

    if colliders:
        return EdgeVerdict(
            Verdict.YES, colliders, f"There exists at least one collider {colliders[0]} of {x} and {y}"
        )
    return EdgeVerdict(Verdict.NO, [], f"There don't exists collider of {x} and {y}")


def _shortest(paths: Iterable[BackdoorPath]) -> BackdoorPath:
    return min(paths, key=lambda p: (len(p.sequence), p.sequence))


def determine_confounder(g: CausalGraph, x: str, y: str, cap: int = DEFAULT_EXTENSION_CAP) -> EdgeVerdict:
    """Is there an unblocked backdoor path between x and y through a common cause?

    The path must point into both x and y (x <- ... -> y), so a chain x -> m -> y
    does not count.
    """
    _check_pair(g, x, y)

    def paths(extension: CausalGraph) -> list[BackdoorPath]:
        return find_confounding_paths(extension, x, y)

    if g.is_fully_directed:
        found = paths(g)
        witness = _shortest(found) if found else None
    else:
        results, settled = _over_extensions(g, paths, cap)
        if not settled or (any(results) and not all(results)):
            return EdgeVerdict(
                Verdict.UNCERTAIN,
                [],
                f"uncertain, whether there is an unblocked backdoor path between {x} and {y} "
                f"depends on the direction of undirected edges",
            )
        if not any(results):
            witness = None
        else:
            common = set.intersection(*(set(r) for r in results))
            witness = _shortest(common) if common else _shortest(results[0])

    if witness is None:
        return EdgeVerdict(
            Verdict.NO, [], f"no, There is no unblocked backdoor path between {x} and {y} so confounder does not exist"
        )
    return EdgeVerdict(
        Verdict.YES,
        [witness.sequence],
        f"yes, There is an unblocked backdoor path between {x} and {y} so confounder exists. "
        f"Backdoor path: {witness.render()}",
    )
