"""Benchmark assembly, answer parsing, scoring and reports."""

from __future__ import annotations

import asyncio
import json
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, field_validator, model_validator

from .agent import SessionError, Transcript, run_session
from .backends import BackendConfig, ChatBackend, HttpChatBackend, OracleTask, build_backend
from .ci_test import DEFAULT_ALPHA
from .dml import DmlConfig, estimate_ate
from .edge_tools import determine_collider, determine_confounder, determine_direct_cause
from .graph import CausalGraph, descendants, structural_hamming_distance
from .questions import (
    DOMAINS,
    Category,
    compose_question,
    draw_keywords,
    instantiate_question,
    scenario_paragraph,
    scenario_prompt,
    templates_for,
)
from .scm import (
    MAX_NODES,
    MIN_NODES,
    TablePoolEntry,
    build_pool,
    interventional_contrast,
    oracle_cpdag,
    oracle_dsep_label,
    oracle_partial_cpdag,
    read_pool,
    write_pool,
)
from .tabular import DataTable
from .tools import GraphMemory, TableStore

logger = logging.getLogger(__name__)

DEFAULT_ATE_TOLERANCE = 0.05
BENCHMARK_NAME = "benchmark.json"
POOL_DIR = "pool"
EFFECT_POOL_DIR = "effect_pool"
ORACLE_ATE_DRAWS = 100_000

GroundTruth = Union[str, CausalGraph, float]


class BenchError(ValueError):
    """Raised for unsatisfiable plans and malformed benchmark files."""


class BenchPlan(BaseModel):
    """What to generate: categories, node counts, cell sizes and seeds."""

    categories: list[Category] = Field(default_factory=lambda: list(Category))
    node_counts: list[int] = Field(default_factory=lambda: list(range(MIN_NODES, MAX_NODES + 1)))
    per_cell: int = Field(20, ge=1)
    ate_per_count: int = Field(2, ge=0)
    pool_per_count: int = Field(10, ge=1)
    rows: int = Field(1000, ge=10)
    seed: int = 0
    alpha: float = Field(DEFAULT_ALPHA, gt=0.0, lt=1.0)
    allow_any_nodes: bool = False

    @field_validator("node_counts")
    @classmethod
    def _distinct(cls, value: list[int]) -> list[int]:
        if not value:
            raise ValueError("at least one node count is required")
        return sorted(set(value))

    @model_validator(mode="after")
    def _node_range(self) -> "BenchPlan":
        for k in self.node_counts:
            if k < 2 or (not self.allow_any_nodes and not MIN_NODES <= k <= MAX_NODES):
                raise ValueError(
                    f"node count {k} is outside {MIN_NODES}..{MAX_NODES} (pass allow_any_nodes to override)"
                )
        return self

    def cell_size(self, category: Category) -> int:
        return self.ate_per_count if category is Category.ATE else self.per_cell


@dataclass(frozen=True, eq=False)
class BenchItem:
    """One (table, question) pair with its ground truth.

    Attributes:
        id: Item identifier, also the stem of its data file name
        category: Question category
        node_count: Columns of the table
        pool_ref: CSV name of the pool entry the table comes from
        table: Pool table with columns renamed to domain keywords
        question: Full question text
        variables: Bound variable names (keyword names)
        conditions: Conditioning variables (independence questions)
        covariates: Adjustment covariates (ATE questions)
        t0: Reference treatment value (ATE questions)
        t1: Target treatment value (ATE questions)
        ground_truth: Verdict, graph or number
        domain: Keyword domain
        keywords: Pool column name -> keyword
        diagnostics: Extra reference values (for example the interventional ATE)
    """

    id: str
    category: Category
    node_count: int
    pool_ref: str
    table: DataTable = field(repr=False)
    question: str
    variables: tuple[str, ...]
    ground_truth: GroundTruth
    domain: str
    keywords: Mapping[str, str] = field(default_factory=dict, repr=False)
    conditions: tuple[str, ...] = ()
    covariates: tuple[str, ...] = ()
    t0: float = 0.0
    t1: float = 1.0
    diagnostics: Mapping[str, float] = field(default_factory=dict)

    @property
    def file_name(self) -> str:
        return f"{self.id}.csv"

    @property
    def answer_label(self) -> str:
        """Ground truth as a stratification label."""
        if isinstance(self.ground_truth, str):
            return self.ground_truth
        return "graph" if isinstance(self.ground_truth, CausalGraph) else "value"

    def oracle_task(self) -> OracleTask:
        return OracleTask(
            self.category.value,
            self.file_name,
            self.variables,
            self.conditions,
            self.covariates,
            self.t0,
            self.t1,
        )

    def to_record(self) -> dict:
        truth = self.ground_truth
        if isinstance(truth, CausalGraph):
            truth = truth.to_dict()
        return {
            "id": self.id,
            "category": self.category.value,
            "node_count": self.node_count,
            "pool_ref": self.pool_ref,
            "question": self.question,
            "variables": list(self.variables),
            "conditions": list(self.conditions),
            "covariates": list(self.covariates),
            "t0": self.t0,
            "t1": self.t1,
            "ground_truth": truth,
            "domain": self.domain,
            "keywords": dict(self.keywords),
            "diagnostics": dict(self.diagnostics),
        }


def _pick(rng: np.random.Generator, options: Sequence):
    return options[int(rng.integers(len(options)))]


def _distinct(rng: np.random.Generator, names: Sequence[str], count: int) -> list[str]:
    return [names[i] for i in rng.choice(len(names), size=count, replace=False)]


def _edge_pair(rng: np.random.Generator, entry: TablePoolEntry) -> list[str]:
    """Two variables, adjacent in the true DAG about half of the time."""
    edges = sorted(entry.scm.dag.directed)
    if edges and rng.random() < 0.5:
        pair = list(_pick(rng, edges))
        return pair if rng.random() < 0.5 else pair[::-1]
    return _distinct(rng, entry.table.columns, 2)


def _verdict_truth(category: Category, entry: TablePoolEntry, x: str, y: str) -> str:
    cpdag = oracle_cpdag(entry.scm)
    determine = {
        Category.CAUSE: determine_direct_cause,
        Category.COLLIDER: determine_collider,
        Category.CONF: determine_confounder,
    }[category]
    return determine(cpdag, x, y).verdict.value


def _make_item(
    category: Category,
    entry: TablePoolEntry,
    index: int,
    rng: np.random.Generator,
) -> BenchItem | None:
    k = entry.node_count
    columns = list(entry.table.columns)
    domain = _pick(rng, DOMAINS)
    keywords = dict(zip(columns, draw_keywords(domain, k, rng)))
    template = _pick(rng, templates_for(category))
    item_seed = int(rng.integers(0, 2**31 - 1))
    item_id = f"{category.value}-{k}-{index:03d}"
    conditions: list[str] = []
    covariates: list[str] = []
    t0, t1 = 0.0, 1.0
    diagnostics: dict[str, float] = {}

    if category in (Category.IT, Category.CIT, Category.MULTCIT):
        if category is Category.MULTCIT and k < 4:
            return None
        x, y = _distinct(rng, columns, 2)
        rest = [c for c in columns if c not in (x, y)]
        if category is Category.CIT:
            conditions = _distinct(rng, rest, 1)
        elif category is Category.MULTCIT:
            size = int(rng.integers(2, len(rest) + 1))
            conditions = sorted(_distinct(rng, rest, size), key=columns.index)
        variables = [x, y]
        truth: GroundTruth = "yes" if oracle_dsep_label(entry.scm, x, y, conditions) else "no"
        slots = [x, y, *conditions]
    elif category in (Category.CAUSE, Category.COLLIDER, Category.CONF):
        variables = _edge_pair(rng, entry)
        truth = _verdict_truth(category, entry, *variables)
        slots = variables
    elif category is Category.TOTAL:
        variables = []
        truth = oracle_cpdag(entry.scm)
        slots = []
    elif category is Category.PARTIAL:
        size = int(rng.integers(2, k))
        variables = sorted(_distinct(rng, columns, size), key=columns.index)
        truth = oracle_partial_cpdag(entry.scm, variables)
        slots = variables
    else:
        pairs = [(a, b) for a in columns for b in descendants(entry.scm.dag, a) if b != a]
        treatment, outcome = _pick(rng, sorted(pairs)) if pairs else _distinct(rng, columns, 2)
        covariates = list(entry.scm.dag.parents(treatment))
        column = entry.table.column(treatment)
        t0, t1 = (round(float(q), 2) for q in np.quantile(column, [0.25, 0.75]))
        if t0 == t1:
            t1 = t0 + 1.0
        variables = [treatment, outcome]
        renamed = entry.table.rename(keywords)
        estimate = estimate_ate(
            renamed,
            DmlConfig(keywords[outcome], keywords[treatment], tuple(keywords[c] for c in covariates), t0, t1),
        )
        truth = estimate.ate
        oracle, stderr = interventional_contrast(entry.scm, treatment, outcome, t0, t1, ORACLE_ATE_DRAWS, item_seed)
        diagnostics = {"interventional_ate": oracle, "interventional_se": stderr}
        slots = [treatment, outcome, f"{t0:g}", f"{t1:g}"]

    body = instantiate_question(template, slots, keywords)
    if category is Category.ATE:
        named = [keywords[c] for c in covariates]
        body += f" The covariates are: {', '.join(named)}." if named else " There are no covariates."
    file_name = f"{item_id}.csv"

    def rename(names: Iterable[str]) -> tuple[str, ...]:
        return tuple(keywords[n] for n in names)

    if isinstance(truth, CausalGraph):
        truth = truth.relabel(keywords)
    return BenchItem(
        id=item_id,
        category=category,
        node_count=k,
        pool_ref=entry.table.name,
        table=entry.table.rename(keywords, name=file_name),
        question=compose_question(body, file_name, category),
        variables=rename(variables),
        ground_truth=truth,
        domain=domain,
        keywords=keywords,
        conditions=rename(conditions),
        covariates=rename(covariates),
        t0=t0,
        t1=t1,
        diagnostics=diagnostics,
    )


def build_benchmark(
    pool: Sequence[TablePoolEntry],
    plan: BenchPlan,
    effect_pool: Sequence[TablePoolEntry] | None = None,
) -> list[BenchItem]:
    """Pair pool tables with instantiated questions and their ground truth.

    Items are generated category by category, node count by node count, from a
    single generator seeded with ``plan.seed``.

    Raises:
        BenchError: If a requested node count has no pool table
    """
    rng = np.random.default_rng(plan.seed)
    items = []
    for category in plan.categories:
        source = effect_pool if category is Category.ATE else pool
        if source is None:
            raise BenchError("ATE items need an effect pool")
        for k in plan.node_counts:
            candidates = [entry for entry in source if entry.node_count == k]
            if not candidates:
                raise BenchError(f"no pool table with {k} nodes for {category.value} items")
            count = plan.cell_size(category)
            skipped = 0
            for index in range(count):
                item = _make_item(category, _pick(rng, candidates), index, rng)
                if item is None:
                    skipped += 1
                    continue
                items.append(item)
            if skipped:
                logger.info("skipped %d %s items at %d nodes (too few variables)", skipped, category.value, k)
    return items


def generate_benchmark(plan: BenchPlan, out_dir: str | Path) -> list[BenchItem]:
    """Build the table pools and the benchmark, and write them under ``out_dir``."""
    out_dir = Path(out_dir)
    pool = build_pool(plan.node_counts, plan.pool_per_count, plan.seed, plan.rows,
                      allow_any_nodes=plan.allow_any_nodes)
    effect_pool = None
    if Category.ATE in plan.categories:
        effect_pool = build_pool(plan.node_counts, plan.pool_per_count, plan.seed + 1, plan.rows,
                                 family="linear", allow_any_nodes=plan.allow_any_nodes)
    items = build_benchmark(pool, plan, effect_pool)
    write_pool(pool, out_dir / POOL_DIR)
    if effect_pool is not None:
        write_pool(effect_pool, out_dir / EFFECT_POOL_DIR)
    write_benchmark(items, plan, out_dir / BENCHMARK_NAME)
    return items


def write_benchmark(items: Sequence[BenchItem], plan: BenchPlan, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document = {"plan": plan.model_dump(mode="json"), "items": [item.to_record() for item in items]}
    path.write_text(json.dumps(document, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def read_benchmark(path: str | Path) -> list[BenchItem]:
    """Load a benchmark manifest; tables are read from the pools next to it.

    Raises:
        BenchError: On a missing or malformed manifest or an unknown pool reference
    """
    path = Path(path)
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
        records = document["items"]
    except (OSError, ValueError, KeyError) as e:
        raise BenchError(f"cannot read benchmark manifest {path}: {e}") from e

    pools: dict[str, dict[str, TablePoolEntry]] = {}
    for directory in (POOL_DIR, EFFECT_POOL_DIR):
        if (path.parent / directory).is_dir():
            pools[directory] = {e.table.name: e for e in read_pool(path.parent / directory)}

    items = []
    for record in records:
        category = Category(record["category"])
        entries = pools.get(EFFECT_POOL_DIR if category is Category.ATE else POOL_DIR, {})
        entry = entries.get(record["pool_ref"])
        if entry is None:
            raise BenchError(f"item {record['id']} references unknown pool table {record['pool_ref']}")
        truth = record["ground_truth"]
        if isinstance(truth, dict):
            truth = CausalGraph.from_dict(truth)
        keywords = record["keywords"]
        items.append(
            BenchItem(
                id=record["id"],
                category=category,
                node_count=record["node_count"],
                pool_ref=record["pool_ref"],
                table=entry.table.rename(keywords, name=f"{record['id']}.csv"),
                question=record["question"],
                variables=tuple(record["variables"]),
                ground_truth=truth,
                domain=record["domain"],
                keywords=keywords,
                conditions=tuple(record["conditions"]),
                covariates=tuple(record["covariates"]),
                t0=record["t0"],
                t1=record["t1"],
                diagnostics=record.get("diagnostics", {}),
            )
        )
    return items


def _question_body(item: BenchItem) -> str:
    return item.question.split(" csv data store in ", 1)[0]


def _with_scenario(item: BenchItem, prose: str) -> BenchItem:
    body = f"{_question_body(item)} {prose}"
    return replace(item, question=compose_question(body, item.file_name, item.category))


def add_scenarios(items: Sequence[BenchItem], seed: int) -> list[BenchItem]:
    """Append a seeded template scenario paragraph after each question."""
    rng = np.random.default_rng(seed)
    embellished = []
    for item in items:
        paragraph = scenario_paragraph(list(item.keywords.values()), int(rng.integers(0, 2**31 - 1)))
        embellished.append(_with_scenario(item, paragraph))
    return embellished


async def narrate_items(items: Sequence[BenchItem], backend: ChatBackend) -> list[BenchItem]:
    """Append scenario prose written by a chat model after each question."""
    narrated = []
    for item in items:
        body = _question_body(item)
        prose = await backend.complete(scenario_prompt(body, list(item.keywords.values())), Transcript(body))
        narrated.append(_with_scenario(item, prose.strip()))
    return narrated


@dataclass(frozen=True)
class ParsedAnswer:
    value: GroundTruth | None
    violation: bool = False
    reason: str = ""


def parse_final_answer(text: str | None, category: Category | str) -> ParsedAnswer:
    """Strict reading of a final answer: a JSON object with an ``answer`` key.

    Verdicts are case-folded; graph categories expect a graph name, ATE a number.
    Anything else is a format violation.
    """
    category = Category(category)
    if text is None:
        return ParsedAnswer(None, True, "no final answer")
    try:
        document = json.loads(text.strip())
    except ValueError:
        return ParsedAnswer(None, True, "not a JSON object")
    if not isinstance(document, dict) or "answer" not in document:
        return ParsedAnswer(None, True, "missing 'answer' key")
    answer = document["answer"]

    if category.answers:
        if not isinstance(answer, str) or answer.strip().casefold() not in category.answers:
            return ParsedAnswer(None, True, f"answer must be one of {', '.join(category.answers)}")
        return ParsedAnswer(answer.strip().casefold())
    if category.level == "graph":
        if not isinstance(answer, str) or not answer.strip():
            return ParsedAnswer(None, True, "answer must be a graph name")
        return ParsedAnswer(answer.strip())
    if isinstance(answer, bool):
        return ParsedAnswer(None, True, "answer must be a number")
    try:
        value = float(answer)
    except (TypeError, ValueError):
        return ParsedAnswer(None, True, "answer must be a number")
    if not math.isfinite(value):
        return ParsedAnswer(None, True, "answer must be finite")
    return ParsedAnswer(value)


@dataclass
class ItemResult:
    """What one agent session produced for an item."""

    item_id: str
    final_answer: str | None
    graphs: Mapping[str, CausalGraph] = field(default_factory=dict)
    transcript: Transcript | None = None
    error: str | None = None


@dataclass
class Cell:
    total: int = 0
    correct: int = 0

    @property
    def accuracy(self) -> float:
        return self.correct / self.total if self.total else 0.0

    def add(self, correct: bool) -> None:
        self.total += 1
        self.correct += int(correct)


@dataclass
class Failure:
    item_id: str
    category: str
    reason: str


@dataclass
class BenchReport:
    """Accuracies per (category, node count) and per (category, answer, domain)."""

    cells: dict[tuple[str, int], Cell] = field(default_factory=lambda: defaultdict(Cell))
    strata: dict[tuple[str, str, str], Cell] = field(default_factory=lambda: defaultdict(Cell))
    failures: list[Failure] = field(default_factory=list)
    shd: dict[str, int] = field(default_factory=dict)
    format_violations: int = 0

    @property
    def total(self) -> int:
        return sum(cell.total for cell in self.cells.values())

    @property
    def correct(self) -> int:
        return sum(cell.correct for cell in self.cells.values())

    def category_cell(self, category: Category | str) -> Cell:
        category = Category(category).value
        merged = Cell()
        for (cat, _), cell in self.cells.items():
            if cat == category:
                merged.total += cell.total
                merged.correct += cell.correct
        return merged

    def level_accuracy(self, level: str) -> float:
        merged = Cell()
        for (cat, _), cell in self.cells.items():
            if Category(cat).level == level:
                merged.total += cell.total
                merged.correct += cell.correct
        return merged.accuracy

    def accuracy_frame(self) -> pd.DataFrame:
        """Node counts as rows, categories as columns, accuracy in percent, plus an average row."""
        if not self.cells:
            return pd.DataFrame()
        categories = [c.value for c in Category if any(cat == c.value for cat, _ in self.cells)]
        counts = sorted({k for _, k in self.cells})
        rows = {}
        for k in counts:
            rows[str(k)] = [
                round(100 * self.cells[(c, k)].accuracy, 1) if (c, k) in self.cells else None for c in categories
            ]
        rows["average"] = [round(100 * self.category_cell(c).accuracy, 1) for c in categories]
        return pd.DataFrame.from_dict(rows, orient="index", columns=categories)

    def strata_frame(self, by: Sequence[str] = ("answer", "domain")) -> pd.DataFrame:
        """Accuracy in percent per category, stratified by ground-truth answer and/or domain."""
        grouped: dict[tuple[str, str], Cell] = defaultdict(Cell)
        for (category, answer, domain), cell in self.strata.items():
            parts = []
            if "answer" in by:
                parts.append(answer)
            if "domain" in by:
                parts.append(domain)
            key = (category, "/".join(parts) or "all")
            grouped[key].total += cell.total
            grouped[key].correct += cell.correct
        records = [
            {"category": c, "stratum": s, "total": cell.total, "correct": cell.correct,
             "accuracy": round(100 * cell.accuracy, 1)}
            for (c, s), cell in sorted(grouped.items())
        ]
        return pd.DataFrame(records, columns=["category", "stratum", "total", "correct", "accuracy"])

    def write(self, out_dir: str | Path, stratify: Sequence[str] = ("answer", "domain")) -> list[Path]:
        """Write accuracy and strata tables as CSV and a Markdown summary."""
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        accuracy = self.accuracy_frame()
        strata = self.strata_frame(stratify)
        paths = [out_dir / "accuracy.csv", out_dir / "strata.csv", out_dir / "report.md"]
        accuracy.to_csv(paths[0], index_label="nodes", lineterminator="\n")
        strata.to_csv(paths[1], index=False, lineterminator="\n")
        paths[2].write_text(self.to_markdown(stratify), encoding="utf-8")
        if self.failures:
            failures = pd.DataFrame([vars(f) for f in self.failures], columns=["item_id", "category", "reason"])
            paths.append(out_dir / "failures.csv")
            failures.to_csv(paths[-1], index=False, lineterminator="\n")
        return paths

    def to_markdown(self, stratify: Sequence[str] = ("answer", "domain")) -> str:
        lines = [
            "# Benchmark report",
            "",
            f"Items: {self.total}, correct: {self.correct}, format violations: {self.format_violations}",
            "",
            "## Accuracy (%) by node count",
            "",
            _markdown_table(self.accuracy_frame(), index_label="nodes"),
        ]
        if stratify:
            lines += ["", f"## Accuracy (%) by {' and '.join(stratify)}", "",
                      _markdown_table(self.strata_frame(stratify))]
        if self.shd:
            mean = sum(self.shd.values()) / len(self.shd)
            lines += ["", f"Mean structural Hamming distance of returned graphs: {mean:.2f} over {len(self.shd)}"]
        return "\n".join(lines) + "\n"


def _markdown_table(frame: pd.DataFrame, index_label: str | None = None) -> str:
    if index_label is not None:
        frame = frame.reset_index(names=index_label)
    if frame.empty:
        return "(no items)"
    header = "| " + " | ".join(str(c) for c in frame.columns) + " |"
    rule = "|" + "|".join("---" for _ in frame.columns) + "|"
    body = [
        "| " + " | ".join("-" if v is None or (isinstance(v, float) and math.isnan(v)) else str(v) for v in row) + " |"
        for row in frame.itertuples(index=False)
    ]
    return "\n".join([header, rule, *body])


def _judge(item: BenchItem, result: ItemResult | None, tolerance: float, report: BenchReport) -> tuple[bool, str]:
    if result is None:
        return False, "no result"
    if result.error:
        return False, f"session error: {result.error}"
    parsed = parse_final_answer(result.final_answer, item.category)
    if parsed.violation:
        report.format_violations += 1
        return False, f"format violation: {parsed.reason}"

    truth = item.ground_truth
    if isinstance(truth, CausalGraph):
        graph = result.graphs.get(parsed.value)
        if graph is None:
            return False, f"graph '{parsed.value}' not found in memory"
        if set(graph.nodes) != set(truth.nodes):
            return False, "graph covers different variables"
        distance = structural_hamming_distance(graph, truth)
        report.shd[item.id] = distance
        return distance == 0, f"structural Hamming distance {distance}"
    if isinstance(truth, float):
        error = abs(parsed.value - truth)
        return error <= max(tolerance * abs(truth), 1e-9), f"|{parsed.value} - {truth}| = {error:.4g}"
    return parsed.value == truth, f"answered {parsed.value}, expected {truth}"


def score(
    items: Sequence[BenchItem],
    results: Iterable[ItemResult],
    tolerance: float = DEFAULT_ATE_TOLERANCE,
) -> BenchReport:
    """Score answers against ground truth; items without a result count as wrong."""
    by_id = {result.item_id: result for result in results}
    report = BenchReport()
    for item in sorted(items, key=lambda i: i.id):
        correct, reason = _judge(item, by_id.get(item.id), tolerance, report)
        report.cells[(item.category.value, item.node_count)].add(correct)
        report.strata[(item.category.value, item.answer_label, item.domain)].add(correct)
        if not correct:
            report.failures.append(Failure(item.id, item.category.value, reason))
    return report


def write_failure_transcripts(
    report: BenchReport, results: Iterable[ItemResult], directory: str | Path
) -> list[Path]:
    """Write the transcript of every failed item as ``<item id>.jsonl``."""
    failed = {failure.item_id for failure in report.failures}
    directory = Path(directory)
    paths = []
    for result in results:
        if result.item_id in failed and result.transcript is not None:
            paths.append(result.transcript.write_jsonl(directory / f"{result.item_id}.jsonl"))
    return paths


async def run_item(
    item: BenchItem,
    config: BackendConfig,
    alpha: float = DEFAULT_ALPHA,
    transcripts_dir: Path | None = None,
) -> ItemResult:
    """Run one isolated agent session on an item."""
    backend = build_backend(config, item.oracle_task())
    memory = GraphMemory()
    tables = TableStore({item.file_name: item.table})
    try:
        transcript = await run_session(
            item.question, tables, backend, icl=config.icl, max_iterations=config.max_iterations,
            alpha=alpha, memory=memory,
        )
        result = ItemResult(item.id, transcript.final_answer, dict(memory.items()), transcript)
    except SessionError as e:
        result = ItemResult(item.id, None, dict(memory.items()), e.transcript, str(e))
    finally:
        if isinstance(backend, HttpChatBackend):
            await backend.close()
    if transcripts_dir is not None and result.transcript is not None:
        result.transcript.write_jsonl(transcripts_dir / f"{item.id}.jsonl")
    return result


async def run_benchmark(
    items: Sequence[BenchItem],
    config: BackendConfig,
    jobs: int = 1,
    alpha: float = DEFAULT_ALPHA,
    transcripts_dir: str | Path | None = None,
) -> list[ItemResult]:
    """Run every item, at most ``jobs`` sessions at a time; results keep item order."""
    if jobs < 1:
        raise BenchError("jobs must be at least 1")
    semaphore = asyncio.Semaphore(jobs)
    directory = Path(transcripts_dir) if transcripts_dir is not None else None

    async def bounded(item: BenchItem) -> ItemResult:
        async with semaphore:
            result = await run_item(item, config, alpha, directory)
            logger.info("%s: %s", item.id, result.final_answer if result.error is None else result.error)
            return result

    return list(await asyncio.gather(*(bounded(item) for item in items)))
