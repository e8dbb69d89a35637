"""ReAct session loop: prompt, model step, tool call, observation, repeat."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .backends import BackendError, ChatBackend
from .ci_test import DEFAULT_ALPHA
from .prompts import render_prompt
from .tools import DEFAULT_TOOLS, GraphMemory, TableStore, ToolContext, ToolSpec, run_tool
from .utils import extract_json_object

logger = logging.getLogger(__name__)

DEFAULT_MAX_ITERATIONS = 10

FORMAT_REMINDER = (
    "Invalid Format: your output must contain either 'Action:' followed by 'Action Input:' "
    "or 'Final Answer:'."
)

_THOUGHT = re.compile(r"^\s*Thought\s*:\s*", re.IGNORECASE)
_ACTION = re.compile(r"Action\s*:[ \t]*(?P<name>[^\n]*)")
_ACTION_INPUT = re.compile(r"Action\s*Input\s*:\s*")
_FINAL = re.compile(r"Final\s*Answer\s*:\s*")
_OBSERVATION = re.compile(r"\n\s*Observation\s*:")


class StepParseError(ValueError):
    """Raised when a model output holds neither an action nor a final answer."""


class SessionError(RuntimeError):
    """Raised when the backend fails; carries the transcript built so far."""

    def __init__(self, message: str, transcript: "Transcript"):
        super().__init__(message)
        self.transcript = transcript


@dataclass(frozen=True)
class Step:
    thought: str
    action: str | None
    action_input: str
    observation: str
    ok: bool = True


@dataclass(frozen=True)
class ParsedStep:
    thought: str
    action: str | None = None
    action_input: str = ""
    final_answer: str | None = None

    @property
    def is_final(self) -> bool:
        return self.final_answer is not None


@dataclass
class Transcript:
    """Question, ordered steps and the final answer once given."""

    question: str
    steps: list[Step] = field(default_factory=list)
    final_answer: str | None = None
    final_thought: str = ""

    def add(self, step: Step) -> None:
        if self.final_answer is not None:
            raise ValueError("transcript is closed: a final answer was already given")
        self.steps.append(step)

    def finish(self, answer: str, thought: str = "") -> None:
        if self.final_answer is not None:
            raise ValueError("final answer already set")
        self.final_answer = answer
        self.final_thought = thought

    @property
    def actions(self) -> list[str]:
        return [step.action for step in self.steps if step.action is not None]

    def to_records(self) -> list[dict]:
        records = [{"type": "question", "question": self.question}]
        records += [{"type": "step", "index": i, **asdict(step)} for i, step in enumerate(self.steps)]
        records.append({"type": "final", "final_answer": self.final_answer, "thought": self.final_thought})
        return records

    def to_jsonl(self) -> str:
        return "".join(json.dumps(record, ensure_ascii=False) + "\n" for record in self.to_records())

    def write_jsonl(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_jsonl(), encoding="utf-8")
        return path

    @classmethod
    def from_jsonl(cls, text: str) -> "Transcript":
        transcript = None
        for line in text.splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            kind = record.pop("type")
            if kind == "question":
                transcript = cls(record["question"])
            elif kind == "step":
                record.pop("index")
                transcript.steps.append(Step(**record))
            elif kind == "final" and record["final_answer"] is not None:
                transcript.finish(record["final_answer"], record.get("thought", ""))
        if transcript is None:
            raise ValueError("transcript log has no question record")
        return transcript


def _clean_thought(text: str) -> str:
    return _THOUGHT.sub("", text).strip()


def _action_input(text: str) -> str:
    """JSON object at the start of ``text``, or the text up to a hallucinated observation."""
    try:
        _, consumed = extract_json_object(text)
        return consumed
    except ValueError:
        cut = _OBSERVATION.search(text)
        return (text[: cut.start()] if cut else text).strip()


def parse_model_step(text: str) -> ParsedStep:
    """Split a model output into thought + action + input, or thought + final answer.

    A ``Final Answer:`` that appears before any ``Action:`` wins; otherwise the
    first action is taken and anything after its JSON input is ignored.

    Raises:
        StepParseError: If the output holds neither
    """
    action = _ACTION.search(text)
    final = _FINAL.search(text)
    if final and (action is None or final.start() < action.start()):
        return ParsedStep(_clean_thought(text[: final.start()]), final_answer=text[final.end():].strip())
    if action is None:
        raise StepParseError("no 'Action:' or 'Final Answer:' found")

    name = action.group("name").strip()
    rest = text[action.end():]
    marker = _ACTION_INPUT.search(rest)
    if not name:
        raise StepParseError("'Action:' is empty")
    if marker is None:
        raise StepParseError(f"'Action: {name}' has no 'Action Input:'")
    return ParsedStep(_clean_thought(text[: action.start()]), name, _action_input(rest[marker.end():]))


async def run_session(
    question: str,
    tables: TableStore | Iterable[str | Path],
    backend: ChatBackend,
    tools: Sequence[ToolSpec] = DEFAULT_TOOLS,
    icl: bool = False,
    max_iterations: int = DEFAULT_MAX_ITERATIONS,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
    memory: GraphMemory | None = None,
) -> Transcript:
    """Run one ReAct session.

    Args:
        question: Question for the agent
        tables: Table store, or CSV paths to load into a fresh one
        backend: Model backend
        tools: Tools offered to the model
        icl: Use the one-shot demo prompt
        max_iterations: Maximum number of backend calls
        alpha: Significance level used by the independence and PC tools
        seed: Seed of the effect-estimation tool
        memory: Graph memory to use (a fresh one by default); the caller can
            inspect it after the session

    Returns:
        Transcript; ``final_answer`` stays None when the iteration limit is hit

    Raises:
        SessionError: If the backend fails after its retries
    """
    if max_iterations < 1:
        raise ValueError("max_iterations must be at least 1")
    store = tables if isinstance(tables, TableStore) else TableStore.from_paths(tables)
    context = ToolContext(memory if memory is not None else GraphMemory(), store, alpha, seed)
    transcript = Transcript(question)

    for iteration in range(max_iterations):
        prompt = render_prompt(question, tools, icl, transcript)
        try:
            text = await backend.complete(prompt, transcript)
        except BackendError as e:
            raise SessionError(f"backend failed at iteration {iteration + 1}: {e}", transcript) from e

        try:
            parsed = parse_model_step(text)
        except StepParseError as e:
            logger.info("unparseable model output at iteration %d: %s", iteration + 1, e)
            transcript.add(Step(_clean_thought(text), None, "", FORMAT_REMINDER, False))
            continue

        if parsed.is_final:
            transcript.finish(parsed.final_answer, parsed.thought)
            break

        outcome = run_tool(parsed.action, parsed.action_input, context, tools)
        transcript.add(Step(parsed.thought, parsed.action, parsed.action_input, outcome.observation, outcome.ok))
    else:
        logger.info("session stopped after %d iterations without a final answer", max_iterations)

    return transcript
