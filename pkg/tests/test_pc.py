"""Tests for the PC algorithm."""

import numpy as np
import pytest

from causal_agent.graph import CausalGraph, cpdag_of_dag, d_separated, structural_hamming_distance
from causal_agent.pc import PcError, pc_search, run_pc, run_pc_partial
from causal_agent.scm import random_dag, random_scm, sample_table


def dsep_oracle(g):
    return lambda x, y, z: d_separated(g, x, y, z)


@pytest.mark.parametrize(
    "edges",
    [
        [("A", "B"), ("B", "C")],
        [("A", "C"), ("B", "C")],
        [("A", "C"), ("B", "C"), ("C", "D")],
        [("A", "B"), ("A", "C"), ("B", "D"), ("C", "D")],
        [],
    ],
)
def test_perfect_oracle_recovers_cpdag(edges):
    nodes = "ABCD"
    g = CausalGraph.from_edges(nodes, edges)
    result = pc_search(tuple(nodes), dsep_oracle(g))
    assert result.graph == cpdag_of_dag(g)


def test_sepsets_are_recorded():
    g = CausalGraph.from_edges("ABC", [("A", "B"), ("B", "C")])
    result = pc_search(("A", "B", "C"), dsep_oracle(g))
    assert result.sepsets.get("A", "C") == ("B",)
    assert ("A", "B") not in result.sepsets
    assert result.tests_run > 0


@pytest.mark.slow
def test_perfect_oracle_on_random_dags():
    for seed in range(200):
        k = 3 + seed % 5
        g = random_dag(k, seed % (k * (k - 1) // 2 + 1), seed=seed)
        assert pc_search(g.nodes, dsep_oracle(g)).graph == cpdag_of_dag(g)


def test_run_pc_finds_strong_edges(smoking_data):
    graph = run_pc(smoking_data)
    assert graph.adjacent("smoking", "yellow fingers")
    assert graph.adjacent("smoking", "lung cancer")
    assert not graph.adjacent("yellow fingers", "lung cancer")
    assert graph.undirected == {frozenset(("smoking", "yellow fingers")), frozenset(("smoking", "lung cancer"))}


def test_run_pc_partial_uses_table_order(smoking_data):
    graph = run_pc_partial(smoking_data, ["lung cancer", "smoking"])
    assert graph.nodes == ("smoking", "lung cancer")
    assert graph.adjacent("smoking", "lung cancer")


def test_run_pc_partial_rejects_bad_subsets(smoking_data):
    with pytest.raises(PcError, match="at least one"):
        run_pc_partial(smoking_data, [])
    with pytest.raises(PcError, match="unknown"):
        run_pc_partial(smoking_data, ["smoking", "height"])
    with pytest.raises(PcError, match="duplicates"):
        run_pc_partial(smoking_data, ["smoking", "smoking"])


@pytest.mark.slow
def test_recovery_on_linear_gaussian_models():
    exact = 0
    distances = []
    runs = 0
    for k in range(3, 7):
        for seed in range(20):
            g = random_dag(k, int(np.random.default_rng(seed).integers(0, k * (k - 1) // 2 + 1)), seed=seed)
            scm = random_scm(g, seed + 1, family="linear")
            table = sample_table(scm, 5000, seed + 2)
            distance = structural_hamming_distance(run_pc(table), cpdag_of_dag(g))
            exact += distance == 0
            distances.append(distance)
            runs += 1
    assert exact / runs >= 0.70
    assert np.mean(distances) <= 1.0
