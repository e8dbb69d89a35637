"""Tests for the agent tools and their dispatch."""

import json

import numpy as np
import pytest

from causal_agent.graph import CausalGraph
from causal_agent.tabular import DataTable
from causal_agent.tools import (
    CALCULATE_CATE,
    CONDITION_INDEPENDENT_TEST,
    DEFAULT_TOOLS,
    DETERMINE_CONFOUNDER,
    GENERATE_CAUSAL,
    GraphMemory,
    TableStore,
    ToolContext,
    ToolInputError,
    dispatch_tool,
    find_tool,
    run_tool,
)


@pytest.fixture
def context(smoking_data):
    rng = np.random.default_rng(0)
    x = rng.standard_normal(1000)
    t = 0.5 * x + rng.standard_normal(1000)
    y = 2.0 * t + x + rng.standard_normal(1000)
    effect = DataTable("effect.csv", ("X", "T", "Y"), np.column_stack([x, t, y]))
    return ToolContext(GraphMemory(), TableStore({"data.csv": smoking_data, "effect.csv": effect}))


def test_tool_names_are_exact():
    assert [t.name for t in DEFAULT_TOOLS] == [
        "condition independent test",
        "Generate Causal",
        "Determine collider",
        "Determine confounder",
        "Determine edge directions",
        "calculate CATE",
    ]
    assert find_tool("  Generate Causal ") is not None
    assert find_tool("generate causal") is None


def test_graph_memory_names():
    memory = GraphMemory()
    graph = CausalGraph(("A",))
    assert memory.store("data", graph) == "data"
    assert memory.store("data", graph) == "data 2"
    assert memory.store("data", graph) == "data 3"
    assert memory.names() == ["data", "data 2", "data 3"]
    assert "data 2" in memory and len(memory) == 3


def test_table_store_lookup(smoking_data):
    store = TableStore({"data.csv": smoking_data})
    assert store.get("data.csv") is smoking_data
    assert store.get("data") is smoking_data
    assert store.get("/some/dir/data.csv") is smoking_data
    with pytest.raises(ToolInputError, match="Available files: data.csv"):
        store.get("other.csv")


def test_generate_causal_stores_graph(context):
    spec = find_tool(GENERATE_CAUSAL)
    raw = '{"filename": "data.csv", "analyse relationship": "True"}'
    assert dispatch_tool(spec, raw, context) == (
        "causal graph named 'data' is generate succeed! and have written to the memory."
    )
    assert dispatch_tool(spec, raw, context).startswith("causal graph named 'data 2'")
    assert context.memory.get("data").nodes == ("smoking", "yellow fingers", "lung cancer")


def test_generate_partial_graph(context):
    spec = find_tool(GENERATE_CAUSAL)
    raw = {"filename": "data.csv", "analyse_relationship": "False", "interesting_var": ["lung cancer", "smoking"]}
    dispatch_tool(spec, raw, context)
    assert context.memory.get("data").nodes == ("smoking", "lung cancer")


def test_marginal_independence_with_empty_condition(context):
    raw = json.dumps({"filename": "data.csv", "interesting var": ["smoking", "lung cancer"], "condition": []})
    outcome = run_tool(CONDITION_INDEPENDENT_TEST, raw, context)
    assert outcome.ok
    assert outcome.observation == "smoking and lung cancer is not independent under conditions:"


def test_edge_tool_needs_generated_graph(context):
    outcome = run_tool(DETERMINE_CONFOUNDER, '{"cg name": "data", "interesting var": ["smoking", "lung cancer"]}', context)
    assert not outcome.ok
    assert "Generate Causal" in outcome.observation
    assert "generate the causal graph first" in outcome.observation


def test_confounder_on_stored_graph(context):
    context.memory.store("fork", CausalGraph.from_edges("XYZ", [("Z", "X"), ("Z", "Y")]))
    outcome = run_tool(DETERMINE_CONFOUNDER, '{"cg name": "fork", "interesting var": ["X", "Y"]}', context)
    assert outcome.observation.endswith("Backdoor path: X, Z, Y")


def test_calculate_cate(context):
    raw = json.dumps({"filename": "effect.csv", "config": {"Y": ["Y"], "T": ["T"], "X": ["X"], "T0": 0, "T1": 1}})
    observation = run_tool(CALCULATE_CATE, raw, context).observation
    assert observation.startswith("ATE of T from 0.000 to 1.000 on Y is ")
    assert float(observation.rsplit(" ", 1)[1]) == pytest.approx(2.0, rel=0.1)


def test_calculate_cate_equal_contrast(context):
    raw = {"filename": "effect.csv", "config": {"y": ["Y"], "t": ["T"], "x": [], "t0": 1, "t1": 1}}
    assert run_tool(CALCULATE_CATE, raw, context).observation.endswith(" is 0.000")


@pytest.mark.parametrize(
    "name, raw, fragment",
    [
        ("Generate Causal", "not json", "not valid JSON"),
        ("Generate Causal", "[1, 2]", "must be a JSON object"),
        ("Generate Causal", "{}", "missing required input key"),
        ("Generate Causal", '{"filename": "nope.csv"}', "is not available"),
        ("condition independent test", '{"filename": "data.csv", "interesting var": ["smoking"]}', "exactly 2"),
        ("condition independent test", '{"filename": "data.csv", "interesting var": ["smoking", "height"]}',
         "not found in 'data.csv'"),
        ("calculate CATE", '{"filename": "effect.csv", "config": {"Y": ["Y", "X"], "T": ["T"], "T0": 0, "T1": 1}}',
         "exactly one variable"),
    ],
)
def test_failures_become_observations(context, name, raw, fragment):
    outcome = run_tool(name, raw, context)
    assert not outcome.ok
    assert outcome.observation.startswith("Error: ")
    assert fragment in outcome.observation


def test_unknown_tool_lists_valid_names(context):
    outcome = run_tool("Generate Graph", "{}", context)
    assert not outcome.ok
    assert outcome.observation.startswith("unknown tool 'Generate Graph'. Valid tool names are: ")
    assert "'Generate Causal'" in outcome.observation
