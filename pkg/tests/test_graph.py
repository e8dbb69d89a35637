"""Tests for mixed graphs, d-separation, backdoor paths and Markov equivalence."""

import itertools

import networkx as nx
import numpy as np
import pytest

from causal_agent.graph import (
    CausalGraph,
    GraphError,
    cpdag_of_dag,
    d_separated,
    descendants,
    enumerate_dag_extensions,
    find_backdoor_paths,
    find_confounding_paths,
    meek_closure,
    structural_hamming_distance,
    v_structure_colliders,
)
from causal_agent.scm import random_dag


def dag(nodes, edges):
    return CausalGraph.from_edges(nodes, edges)


def all_dags(nodes):
    """Every DAG over ``nodes``: each pair absent or oriented either way."""
    pairs = list(itertools.combinations(nodes, 2))
    for marks in itertools.product((0, 1, 2), repeat=len(pairs)):
        edges = [(a, b) if m == 1 else (b, a) for (a, b), m in zip(pairs, marks) if m]
        try:
            yield dag(nodes, edges)
        except GraphError:
            continue


def moral_separated(g, x, y, z):
    """d-separation via the moralized ancestral graph."""
    keep = {x, y, *z}
    frontier = list(keep)
    while frontier:
        node = frontier.pop()
        for parent in g.parents(node):
            if parent not in keep:
                keep.add(parent)
                frontier.append(parent)
    moral = nx.Graph()
    moral.add_nodes_from(keep)
    for node in keep:
        ps = [p for p in g.parents(node) if p in keep]
        moral.add_edges_from((p, node) for p in ps)
        moral.add_edges_from(itertools.combinations(ps, 2))
    moral.remove_nodes_from(z)
    return not nx.has_path(moral, x, y)


def test_rejects_cycles_and_unknown_nodes():
    with pytest.raises(GraphError, match="cycle"):
        dag("ABC", [("A", "B"), ("B", "C"), ("C", "A")])
    with pytest.raises(GraphError, match="unknown node"):
        dag("AB", [("A", "Z")])
    with pytest.raises(GraphError, match="both directed and undirected"):
        CausalGraph.from_edges("AB", [("A", "B")], [("A", "B")])


def test_json_round_trip_and_describe():
    g = CausalGraph.from_edges("ABC", [("A", "B")], [("B", "C")])
    assert CausalGraph.from_json(g.to_json()) == g
    assert g.describe() == "A -> B, B -- C"
    assert CausalGraph(("A",)).describe() == "no edges"


def test_relabel_keeps_structure():
    g = CausalGraph.from_edges(("V1", "V2", "V3"), [("V1", "V2")], [("V2", "V3")])
    renamed = g.relabel({"V1": "age", "V2": "weight"})
    assert renamed.nodes == ("age", "weight", "V3")
    assert renamed.has_directed("age", "weight")
    assert renamed.has_undirected("weight", "V3")


def test_d_separation_textbook_cases():
    chain = dag("ABC", [("A", "B"), ("B", "C")])
    collider = dag("ABC", [("A", "B"), ("C", "B")])
    assert not d_separated(chain, "A", "C")
    assert d_separated(chain, "A", "C", ["B"])
    assert d_separated(collider, "A", "C")
    assert not d_separated(collider, "A", "C", ["B"])


def test_d_separation_conditioning_on_descendant_of_collider():
    g = dag("ABCD", [("A", "B"), ("C", "B"), ("B", "D")])
    assert not d_separated(g, "A", "C", ["D"])


def test_d_separation_rejects_mixed_graphs_and_bad_queries():
    with pytest.raises(GraphError, match="fully directed"):
        d_separated(CausalGraph.from_edges("AB", [], [("A", "B")]), "A", "B")
    g = dag("AB", [("A", "B")])
    with pytest.raises(GraphError):
        d_separated(g, "A", "A")
    with pytest.raises(GraphError):
        d_separated(g, "A", "B", ["A"])


@pytest.mark.slow
@pytest.mark.parametrize("nodes", ["ABCD", "ABCDE"])
def test_d_separation_matches_moralization_on_all_small_dags(nodes):
    for g in all_dags(nodes):
        for x, y in itertools.combinations(nodes, 2):
            rest = [n for n in nodes if n not in (x, y)]
            for size in range(len(rest) + 1):
                for z in itertools.combinations(rest, size):
                    assert d_separated(g, x, y, z) == moral_separated(g, x, y, set(z)), (g.describe(), x, y, z)


def test_backdoor_paths():
    g = dag("XYZ", [("Z", "X"), ("Z", "Y"), ("X", "Y")])
    paths = find_backdoor_paths(g, "X", "Y")
    assert [p.render() for p in paths] == ["X, Z, Y"]
    assert find_backdoor_paths(dag("XYZ", [("X", "Y")]), "X", "Y") == []


def test_backdoor_paths_skip_colliders():
    g = dag("XYKW", [("W", "X"), ("W", "K"), ("Y", "K")])
    assert find_backdoor_paths(g, "X", "Y") == []


def test_confounding_paths_need_arrowheads_at_both_ends():
    g = dag("XYZM", [("Z", "X"), ("Z", "Y"), ("X", "M"), ("M", "Y")])
    assert [p.render() for p in find_confounding_paths(g, "X", "Y")] == ["X, Z, Y"]
    assert [p.render() for p in find_confounding_paths(g, "Y", "X")] == ["Y, Z, X"]
    # Y <- M <- X is a backdoor path into Y but ends with an edge out of X
    assert [p.render() for p in find_backdoor_paths(g, "Y", "X")] == ["Y, M, X", "Y, Z, X"]


def test_topological_order_breaks_ties_by_node_order():
    g = dag("DCBA", [("B", "A"), ("C", "A")])
    assert g.topological_order() == ("D", "C", "B", "A")
    assert dag("ABC", [("C", "A")]).topological_order() == ("B", "C", "A")


def test_colliders_and_descendants():
    g = dag("ABKL", [("A", "K"), ("B", "K"), ("K", "L")])
    assert v_structure_colliders(g, "A", "B") == ["K"]
    assert descendants(g, "A") == {"K", "L"}


def test_cpdag_of_chain_is_undirected():
    g = dag("ABC", [("A", "B"), ("B", "C")])
    cpdag = cpdag_of_dag(g)
    assert cpdag.directed == frozenset()
    assert cpdag.skeleton() == g.skeleton()


def test_cpdag_keeps_v_structure_and_meek_r1():
    g = dag("ABCD", [("A", "C"), ("B", "C"), ("C", "D")])
    cpdag = cpdag_of_dag(g)
    assert cpdag.directed == {("A", "C"), ("B", "C"), ("C", "D")}


def test_meek_closure_orients_r1():
    g = CausalGraph.from_edges("ABC", [("A", "B")], [("B", "C")])
    assert meek_closure(g).has_directed("B", "C")


def test_extensions_of_undirected_chain():
    g = CausalGraph.from_edges("ABC", [], [("A", "B"), ("B", "C")])
    extensions = enumerate_dag_extensions(g).graphs
    assert len(extensions) == 3
    assert all(e.v_structures() == frozenset() for e in extensions)


def test_extension_cap_truncates():
    g = CausalGraph.from_edges("ABCD", [], list(itertools.combinations("ABCD", 2)))
    result = enumerate_dag_extensions(g, cap=5)
    assert len(result.graphs) == 5
    assert result.truncated
    assert len(enumerate_dag_extensions(g).graphs) == 24


@pytest.mark.slow
def test_true_dag_is_among_extensions_of_its_cpdag():
    rng = np.random.default_rng(0)
    for trial in range(500):
        k = int(rng.integers(3, 8))
        edges = int(rng.integers(0, k * (k - 1) // 2 + 1))
        g = random_dag(k, edges, seed=trial)
        extensions = enumerate_dag_extensions(cpdag_of_dag(g)).graphs
        assert g in extensions
        for e in extensions:
            assert e.skeleton() == g.skeleton()
            assert e.v_structures() == g.v_structures()


def test_structural_hamming_distance():
    a = dag("ABC", [("A", "B"), ("B", "C")])
    b = CausalGraph.from_edges("ABC", [("B", "A")], [("A", "C")])
    assert structural_hamming_distance(a, a) == 0
    # A-B reversed, B-C missing, A-C extra
    assert structural_hamming_distance(a, b) == 3
