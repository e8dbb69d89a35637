"""ReAct prompt rendering."""

from __future__ import annotations

from functools import cache
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

if TYPE_CHECKING:
    from .agent import Transcript
    from .tools import ToolSpec

ICL_DEMO_PATH = Path(__file__).parent / "data" / "icl_demo.txt"

PREFIX = "Answer the following questions as best you can. You have access to the following tools:"

FORMAT_INSTRUCTIONS = """Use the following format:

Question: the input question you must answer
Thought: you should always think about what to do
Action: the action to take, should be one of [{tool_names}]
Action Input: the input to the action
Observation: the result of the action
... (this Thought/Action/Action Input/Observation can repeat N times)
Thought: I now know the final answer
Final Answer: the final answer to the original input question"""

ICL_REQUIREMENT = "##Requirement:\nAnswer the following questions with examples:"


@cache
def icl_demo() -> str:
    """The one-shot demo transcript, exactly as checked in."""
    return ICL_DEMO_PATH.read_text(encoding="utf-8")


def render_scratchpad(transcript: "Transcript | None") -> str:
    """Steps so far, each closed by an observation and a fresh ``Thought:``."""
    if transcript is None:
        return ""
    parts = []
    for step in transcript.steps:
        if step.action is None:
            parts.append(f" {step.thought}\nObservation: {step.observation}\nThought:")
        else:
            parts.append(
                f" {step.thought}\nAction: {step.action}\nAction Input: {step.action_input}\n"
                f"Observation: {step.observation}\nThought:"
            )
    return "".join(parts)


def render_prompt(
    question: str,
    tools: Sequence["ToolSpec"],
    icl: bool = False,
    scratchpad: "Transcript | None" = None,
) -> str:
    """Full prompt for the next model call.

    Args:
        question: The user's question
        tools: Tools offered to the model (at least one)
        icl: Include the one-shot demo
        scratchpad: Transcript of the steps taken so far

    Returns:
        Prompt text ending with ``Thought:``
    """
    if not tools:
        raise ValueError("render_prompt needs at least one tool")
    descriptions = "\n\n".join(tool.description for tool in tools)
    names = ", ".join(tool.name for tool in tools)
    sections = [PREFIX, descriptions, FORMAT_INSTRUCTIONS.format(tool_names=names), "Begin!"]
    if icl:
        sections += [icl_demo().rstrip("\n"), ICL_REQUIREMENT]
    head = "\n\n".join(sections)
    return f"{head}\n\nQuestion: {question}\nThought:{render_scratchpad(scratchpad)}"
