"""Tests for prompt rendering, step parsing and the ReAct session loop."""

import json
from pathlib import Path

import pytest

from causal_agent.agent import (
    FORMAT_REMINDER,
    SessionError,
    Step,
    StepParseError,
    Transcript,
    parse_model_step,
    run_session,
)
from causal_agent.backends import BackendError, ScriptedBackend
from causal_agent.prompts import icl_demo, render_prompt
from causal_agent.tools import DEFAULT_TOOLS, GraphMemory, TableStore

FIXTURES = Path(__file__).parent / "fixtures"
DEMO_TOOLS = [
    "Generate Causal",
    "Determine edge directions",
    "Determine collider",
    "Determine confounder",
    "condition independent test",
]


@pytest.fixture
def tables(smoking_data):
    return TableStore({"data.csv": smoking_data})


def test_zero_shot_prompt_skeleton():
    prompt = render_prompt("Is A a cause of B?", DEFAULT_TOOLS)
    assert prompt.startswith("Answer the following questions as best you can. You have access to the following tools:")
    assert "Action: the action to take, should be one of [condition independent test, Generate Causal," in prompt
    assert "##DEMO" not in prompt
    assert prompt.endswith("\n\nQuestion: Is A a cause of B?\nThought:")


def test_icl_prompt_contains_demo():
    prompt = render_prompt("q", DEFAULT_TOOLS, icl=True)
    assert icl_demo().rstrip("\n") in prompt
    assert 'Final Answer:{"answer":"uncertain"}' in prompt
    assert prompt.endswith("Question: q\nThought:")


def test_prompt_needs_tools():
    with pytest.raises(ValueError):
        render_prompt("q", [])


def test_scratchpad_grows_by_one_step():
    transcript = Transcript("q")
    before = render_prompt("q", DEFAULT_TOOLS, scratchpad=transcript)
    parsed = parse_model_step(' look first\nAction: Generate Causal\nAction Input: {"filename": "data.csv"}')
    transcript.add(Step(parsed.thought, parsed.action, parsed.action_input, "ok"))
    after = render_prompt("q", DEFAULT_TOOLS, scratchpad=transcript)
    assert after == before + (
        ' look first\nAction: Generate Causal\nAction Input: {"filename": "data.csv"}\nObservation: ok\nThought:'
    )


def test_parse_demo_action():
    parsed = parse_model_step(
        'Thought: check\nAction: Determine collider\nAction Input: {"cg name": "data", "interesting var": ["a", "b"]}'
    )
    assert parsed.action == "Determine collider"
    assert json.loads(parsed.action_input) == {"cg name": "data", "interesting var": ["a", "b"]}
    assert parsed.thought == "check"
    assert not parsed.is_final


def test_parse_truncates_after_json():
    parsed = parse_model_step('x\nAction: Generate Causal\nAction Input: {"filename": "d.csv"} trailing\nObservation: fake')
    assert parsed.action_input == '{"filename": "d.csv"}'


def test_parse_final_answer():
    parsed = parse_model_step(' I now know the final answer\nFinal Answer: {"answer":"uncertain"}')
    assert parsed.is_final
    assert parsed.final_answer == '{"answer":"uncertain"}'
    assert parsed.thought == "I now know the final answer"


def test_final_answer_before_action_wins():
    parsed = parse_model_step('Final Answer: {"answer":"no"}\nAction: Generate Causal\nAction Input: {}')
    assert parsed.final_answer == '{"answer":"no"}'


def test_parse_error_without_markers():
    with pytest.raises(StepParseError):
        parse_model_step("I think we should look at the data")


@pytest.mark.asyncio
async def test_demo_replay(tables):
    backend = ScriptedBackend.from_file(FIXTURES / "demo_replay.json")
    transcript = await run_session("demo question", tables, backend, icl=True)
    assert transcript.actions == DEMO_TOOLS
    assert transcript.final_answer == '{"answer":"uncertain"}'
    assert transcript.steps[0].observation == (
        "causal graph named 'data' is generate succeed! and have written to the memory."
    )
    assert transcript.steps[3].observation.startswith("uncertain, whether there is an unblocked backdoor path")
    assert all(step.ok for step in transcript.steps)


def test_demo_text_and_replay_spell_the_condition_differently():
    # see tests/fixtures/README.md
    assert '"condition":["somking"]' in icl_demo()
    replay = json.loads((FIXTURES / "demo_replay.json").read_text(encoding="utf-8"))
    assert '"condition":["smoking"]' in replay[4]
    assert "somking" not in "".join(replay)


@pytest.mark.asyncio
async def test_replay_is_deterministic(smoking_data):
    runs = []
    for _ in range(2):
        backend = ScriptedBackend.from_file(FIXTURES / "demo_replay.json")
        transcript = await run_session("q", TableStore({"data.csv": smoking_data}), backend)
        runs.append(transcript.to_jsonl())
    assert runs[0] == runs[1]


@pytest.mark.asyncio
async def test_unknown_tool_becomes_observation(tables):
    backend = ScriptedBackend([
        "try\nAction: Make Graph\nAction Input: {}",
        'done\nFinal Answer: {"answer":"no"}',
    ])
    transcript = await run_session("q", tables, backend)
    assert transcript.steps[0].observation.startswith("unknown tool 'Make Graph'")
    assert not transcript.steps[0].ok
    assert transcript.final_answer == '{"answer":"no"}'


@pytest.mark.asyncio
async def test_iteration_limit(tables):
    backend = ScriptedBackend(['a\nAction: Generate Causal\nAction Input: {"filename": "data.csv"}'] * 3)
    transcript = await run_session("q", tables, backend, max_iterations=1)
    assert len(transcript.steps) == 1
    assert transcript.final_answer is None
    assert backend.calls == 1


@pytest.mark.asyncio
async def test_unparseable_output_gets_format_reminder(tables):
    backend = ScriptedBackend(["just rambling", 'ok\nFinal Answer: {"answer":"yes"}'])
    transcript = await run_session("q", tables, backend)
    assert transcript.steps[0].action is None
    assert transcript.steps[0].observation == FORMAT_REMINDER
    assert transcript.final_answer == '{"answer":"yes"}'


@pytest.mark.asyncio
async def test_backend_failure_keeps_partial_transcript(tables):
    backend = ScriptedBackend(['a\nAction: Generate Causal\nAction Input: {"filename": "data.csv"}'])
    with pytest.raises(SessionError) as excinfo:
        await run_session("q", tables, backend)
    assert len(excinfo.value.transcript.steps) == 1
    assert isinstance(excinfo.value.__cause__, BackendError)


@pytest.mark.asyncio
async def test_sessions_do_not_share_memory(tables):
    first, second = GraphMemory(), GraphMemory()
    script = ['a\nAction: Generate Causal\nAction Input: {"filename": "data.csv"}', 'b\nFinal Answer: {"answer":"x"}']
    await run_session("q", tables, ScriptedBackend(script), memory=first)
    await run_session("q", tables, ScriptedBackend(script), memory=second)
    assert first.names() == ["data"]
    assert second.names() == ["data"]


def test_transcript_jsonl_round_trip():
    transcript = Transcript("q", [Step("t", "Generate Causal", "{}", "obs")])
    transcript.finish('{"answer":"yes"}', "done")
    copy = Transcript.from_jsonl(transcript.to_jsonl())
    assert copy == transcript
    with pytest.raises(ValueError):
        transcript.finish("again")
    with pytest.raises(ValueError):
        transcript.add(Step("t", None, "", "late"))
