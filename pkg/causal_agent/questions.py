"""Question templates, domain keywords and question text assembly."""

from __future__ import annotations

import string
from dataclasses import dataclass
from enum import Enum
from functools import cache
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

DATA_DIR = Path(__file__).parent / "data"
DOMAINS = ("medical", "market")


class QuestionError(ValueError):
    """Raised when a template cannot be instantiated."""


class Category(str, Enum):
    IT = "IT"
    CIT = "CIT"
    MULTCIT = "MULTCIT"
    CAUSE = "CAUSE"
    COLLIDER = "COLLIDER"
    CONF = "CONF"
    TOTAL = "TOTAL"
    PARTIAL = "PARTIAL"
    ATE = "ATE"

    @property
    def level(self) -> str:
        return _LEVELS[self]

    @property
    def answers(self) -> tuple[str, ...]:
        """Allowed verdicts; empty for graph and effect categories."""
        if self.level == "variable":
            return ("yes", "no")
        if self.level == "edge":
            return ("yes", "no", "uncertain")
        return ()


_LEVELS = {
    Category.IT: "variable",
    Category.CIT: "variable",
    Category.MULTCIT: "variable",
    Category.CAUSE: "edge",
    Category.COLLIDER: "edge",
    Category.CONF: "edge",
    Category.TOTAL: "graph",
    Category.PARTIAL: "graph",
    Category.ATE: "effect",
}


def _fields(pattern: str) -> list[str]:
    return [name for _, name, _, _ in string.Formatter().parse(pattern) if name is not None]


def _slot_count(pattern: str) -> int:
    """Positional placeholders, or distinct named ones."""
    fields = _fields(pattern)
    return len(set(fields)) if any(fields) else len(fields)


@dataclass(frozen=True)
class QuestionTemplate:
    """A question pattern with ``{}`` (or named) placeholders.

    Templates with ``trailing=True`` end with a colon after which a comma-separated
    variable list is appended (conditions, or the variables of a partial graph).
    """

    category: Category
    pattern: str
    arity: int
    trailing: bool = False

    def __post_init__(self):
        slots = _slot_count(self.pattern)
        if slots != self.arity:
            raise QuestionError(f"template '{self.pattern}' has {slots} placeholders, declared arity {self.arity}")

    @property
    def named(self) -> bool:
        return any(_fields(self.pattern))


_PATTERNS: dict[Category, list[str]] = {
    Category.IT: [
        "whether {} and {} is independent.",
        "Is {} independent of {}?",
        "Are {} and {} statistically independent?",
        "Does the occurrence of {} independent on {}, or vice versa?",
        "Can we assert {} and {} are independent, or are they related?",
        "Can we consider {} and {} as independent events?",
        "Do {} and {} independent and don't have any influence on each other?",
        "Is there no statistically correlation between {} and {}?",
        "test whether Are {} and {} statistically unrelated or dependent?",
        "Test the independence of {} and {}.",
    ],
    Category.CIT: [
        "whether {} and {} is independent under condition {}?",
        "Is {} independent of {} given condition {}?",
        "Are {} and {} statistically independent given the condition {}?",
        "Does the independence of {} and {} hold true under condition {}?",
        "Can we consider {} and {} as conditionally independent with respect to {}?",
        "Is the independence between {} and {} maintained given the condition {}?",
        "Are {} and {} conditionally independent with the presence of condition {}?",
        "Can we assume that {} and {} are independent given the condition {}?",
        "Is the independence of {} and {} upheld in the presence of condition {}?",
        "Does the independence between {} and {} persist under the condition {}?",
    ],
    Category.MULTCIT: [
        "whether {} and {} is independent under conditions : ",
        "Determine the independence of {} and {} given the following conditions : ",
        "Examine if {} and {} are independent under the specified conditions : ",
        "Assess the independence between {} and {} with the provided conditions : ",
        "Investigate whether {} and {} exhibit independence given the outlined conditions : ",
        "Explore the independence of {} and {} under the given circumstances : ",
        "Ascertain if there is independence between {} and {} given the stated conditions : ",
        "Check for independence between {} and {} based on the conditions described : ",
        "Verify the independence status of {} and {} under the listed conditions : ",
        "Evaluate the independence of {} and {} under the mentioned conditions : ",
        "Examine whether {} and {} are independent, considering the provided conditions : ",
    ],
    Category.CAUSE: [
        "whether {} directly cause {}.",
        "Assess if {} has a direct causal impact on {}.",
        "Examine the direct causation relationship.if {} directly cause {}?",
        "Investigate whether {} directly influences {}.",
        "Evaluate if there exists the direct causal connection from {} to {}.",
        "Scrutinize if {} leads to a direct causation of {}.",
        "Determine whether {} is a direct cause of {}.",
        "Assess if there is the direct causal link of {} to {}.",
        "Verify if {} directly results in the causation of {}.",
    ],
    Category.COLLIDER: [
        "Whether there exists at least one collider (i.e., common effect) of {} and {}",
        "Determine if there is at least one common effect (collider) of both {} and {}.",
        "Assess the presence of a shared outcome, serving as a collider, for variables {} and {}.",
        "Examine the potential existence of a shared consequence as a collider for {} and {}.",
        "Evaluate if {} and {} share a common effect (collider).",
        "Analyze the presence of a common outcome serving as a collider for {} and {}.",
        "Verify if there exists a shared effect, acting as a collider, for both {} and {}.",
        "Explore whether a common consequence is a collider for variables {} and {}.",
        "Assess the existence of at least one common effect (collider) between {} and {}.",
    ],
    Category.CONF: [
        "There exists at least one confounder (i.e., common cause) of {} and {}.",
        "Confirm the presence of at least one common cause (confounder) influencing both {} and {}.",
        "Verify whether there exists a shared factor, acting as a confounder, for variables {} and {}.",
        "Examine the potential existence of a common cause (confounder) impacting both {} and {}.",
        "Assess if {} and {} share at least one confounding factor (common cause).",
        "Scrutinize the presence of a shared influencing factor, serving as a confounder, for {} and {}.",
        "Investigate whether there is at least one confounder affecting both {} and {}.",
        "Analyze the potential impact of a common cause (confounder) on variables {} and {}.",
        "Verify the presence of a shared influencing factor, acting as a confounder, for {} and {}.",
        "Explore whether a common factor is a confounder for variables {} and {}.",
        "Evaluate the existence of at least one confounder (common cause) between {} and {}.",
    ],
    Category.TOTAL: [
        "please generate causal graph of the input tabular data.",
        "Produce a causal graph representing the relationships within the given tabular data.",
        "Generate a directed graph that illustrates the causal connections inherent in the provided tabular dataset.",
        "Create a graphical model depicting the causality among variables in the input tabular data.",
        "Construct a causal diagram illustrating the interdependencies among the variables in the tabular dataset.",
        "Formulate a graph that visually represents the cause-and-effect relationships present in the input tabular information.",
        "Develop a graphical representation outlining the causal structure of the tabular data.",
        "Build a directed acyclic graph (DAG) that reflects the causal influences within the input tabular dataset.",
        "Establish a graphical model showcasing the causal links between variables derived from the tabular data.",
        "Design a causal graph that visually captures the cause-and-effect relationships inherent in the tabular information.",
        "Construct a directed graph that visually displays the causal pathways within the given tabular dataset.",
    ],
    Category.PARTIAL: [
        "Please generate a partial causal diagram for some of the following variables that interest me : ",
        "Generate a subset of a causal diagram for the variables of interest : ",
        "Create a partial graphical model illustrating causal relationships among selected variables : ",
        "Develop a restricted causal graph focusing on specific variables from the given set : ",
        "Formulate a partial directed acyclic graph (DAG) depicting causal connections for chosen variables : ",
        "Construct a limited causal diagram featuring only the variables of interest : ",
        "Produce a subsection of a graphical model, emphasizing the causal links within the selected variables : ",
        "Build a causal graph subset, emphasizing relationships among the variables you find intriguing : ",
        "Develop a focused causal diagram, highlighting causal connections for the specified variables : ",
        "Form a segment of a directed graph that visually represents causal relationships among chosen variables : ",
        "Create a restricted causal network, showcasing the partial causal influences among the variables of interest : ",
    ],
    Category.ATE: [
        "calculate the Average Treatment Effect (ATE) of a continuous treatment variable  {T} on an outcome "
        "variable {Y}, given that the treatment {T} changes from {T0} to {T1}.",
    ],
}

_TRAILING = {Category.MULTCIT, Category.PARTIAL}


def _build_templates() -> dict[Category, tuple[QuestionTemplate, ...]]:
    templates = {}
    for category, patterns in _PATTERNS.items():
        built = []
        for pattern in patterns:
            built.append(QuestionTemplate(category, pattern, _slot_count(pattern), category in _TRAILING))
        templates[category] = tuple(built)
    return templates


TEMPLATES = _build_templates()


def templates_for(category: Category | str) -> tuple[QuestionTemplate, ...]:
    return TEMPLATES[Category(category)]


@cache
def load_keywords(domain: str) -> tuple[str, ...]:
    """Keyword list of a domain (one keyword per line in ``data/<domain>_keywords.txt``)."""
    if domain not in DOMAINS:
        raise QuestionError(f"unknown domain '{domain}', expected one of {', '.join(DOMAINS)}")
    lines = (DATA_DIR / f"{domain}_keywords.txt").read_text(encoding="utf-8").splitlines()
    return tuple(line.strip() for line in lines if line.strip())


def draw_keywords(domain: str, count: int, rng: np.random.Generator) -> list[str]:
    """Draw ``count`` distinct keywords of a domain."""
    keywords = load_keywords(domain)
    if count > len(keywords):
        raise QuestionError(f"cannot draw {count} keywords from {len(keywords)} in '{domain}'")
    return [keywords[i] for i in rng.choice(len(keywords), size=count, replace=False)]


def instantiate_question(
    template: QuestionTemplate,
    variables: Sequence[str],
    keywords: Mapping[str, str] | None = None,
) -> str:
    """Fill a template. The result is exactly the filled pattern.

    Args:
        template: Template to fill
        variables: Values of the placeholders in order, followed by the trailing
            list for templates that end with a colon. ATE templates take
            ``[T, Y, T0, T1]``.
        keywords: Optional renaming applied to every variable name

    Raises:
        QuestionError: On an arity mismatch
    """
    names = [keywords.get(v, v) if keywords else v for v in variables]
    if template.trailing:
        if len(names) <= template.arity:
            raise QuestionError(f"{template.category.value} template needs at least one trailing variable")
    elif len(names) != template.arity:
        raise QuestionError(
            f"{template.category.value} template takes {template.arity} variables, got {len(names)}"
        )

    head, rest = names[: template.arity], names[template.arity :]
    if template.named:
        sentence = template.pattern.format(T=head[0], Y=head[1], T0=head[2], T1=head[3])
    else:
        sentence = template.pattern.format(*head)
    if template.trailing:
        sentence = sentence + ", ".join(rest)
    return sentence


_NUMBER_WORDS = ("one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten")

_SCENARIO_OPENERS = (
    "Consider {count} elements : {elements}.",
    "A study collects measurements of {count} elements : {elements}.",
    "The following {count} factors are recorded : {elements}.",
)

_SCENARIO_BODIES = (
    "Researchers are very interested in the relationship between these variables, "
    "and therefore, they have chosen to collect a set of data through experiments.",
    "Analysts want to understand how these quantities relate to each other, "
    "so they gathered observational records over a long period.",
    "A team of statisticians was asked to analyse these variables using the collected data.",
)


def scenario_paragraph(elements: Sequence[str], seed: int) -> str:
    """Deterministic scenario prose about the question elements, appended after the question."""
    rng = np.random.default_rng(seed)
    count = len(elements)
    opener = _SCENARIO_OPENERS[int(rng.integers(len(_SCENARIO_OPENERS)))]
    body = _SCENARIO_BODIES[int(rng.integers(len(_SCENARIO_BODIES)))]
    count_text = _NUMBER_WORDS[count - 1] if 1 <= count <= len(_NUMBER_WORDS) else str(count)
    return f"{opener.format(count=count_text, elements=', '.join(elements))} {body}"


SCENARIO_PROMPT = (
    "##Requirements: Suppose you are a statistician and need to perform causal analysis on data. "
    "You need to use your imagination to compile a reasonable scene description based on the following "
    'elements, for the question Q: " {question} ". The scenario description needs to be related '
    "to the problem. It is placed after the question Q, so do not repeat, rephrase or answer the question Q. "
    "Below are all the elements you need to use to describe the scenario (including those involved in the "
    "question Q). Elements don't exist in variables listed below are not allowed.\n"
    "##element:[{elements}]\n"
    "##Output:"
)


def scenario_prompt(question: str, elements: Sequence[str]) -> str:
    """Prompt asking a chat model for scenario prose to append after a question."""
    return SCENARIO_PROMPT.format(question=question, elements=", ".join(elements))


def format_instruction(category: Category | str) -> str:
    """Output format requirement appended to every question of a category."""
    category = Category(category)
    if category.level == "variable":
        return 'Answer "yes" or "no". The output is just formatted as a json string, such as {"answer":"yes"}.'
    if category.level == "edge":
        return (
            'Answer "yes", "no" or "uncertain". '
            'The output is just formatted as a json string, such as {"answer":"yes"}.'
        )
    if category.level == "graph":
        return (
            "Return the name of the generated causal graph. "
            'The output is just formatted as a json string, such as {"answer":"data"}.'
        )
    return 'Return the value of the ATE. The output is just formatted as a json string, such as {"answer":1.5}.'


def compose_question(body: str, file_name: str, category: Category | str) -> str:
    """Question text given to the agent: body, data file reference and format instruction."""
    return f"{body} csv data store in '{file_name}' . {format_instruction(category)}"
