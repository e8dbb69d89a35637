"""Tool registry the agent calls by name, with session-scoped graph memory and table access.

Every tool takes a JSON object and returns an observation string. Failures of any
kind are rendered as observations that tell the agent what to fix.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping

from .ci_test import DEFAULT_ALPHA, CiTestError, fisher_z_test
from .dml import DmlConfig, DmlError, estimate_ate
from .edge_tools import determine_collider, determine_confounder, determine_direct_cause
from .graph import CausalGraph, GraphError
from .pc import PcError, run_pc, run_pc_partial
from .tabular import DataTable, TableError, load_csv
from .utils import extract_json_object, format_number, normalize_key

logger = logging.getLogger(__name__)

GENERATE_CAUSAL = "Generate Causal"
DETERMINE_COLLIDER = "Determine collider"
DETERMINE_CONFOUNDER = "Determine confounder"
DETERMINE_EDGE_DIRECTIONS = "Determine edge directions"
CONDITION_INDEPENDENT_TEST = "condition independent test"
CALCULATE_CATE = "calculate CATE"


class ToolInputError(ValueError):
    """Raised by tool handlers; the message becomes the observation."""


class GraphMemory:
    """Named causal graphs produced during one session."""

    def __init__(self):
        self._graphs: dict[str, CausalGraph] = {}

    def allocate(self, base: str) -> str:
        """Unique name: ``base``, then ``base 2``, ``base 3``..."""
        base = base.strip() or "graph"
        if base not in self._graphs:
            return base
        counter = 2
        while f"{base} {counter}" in self._graphs:
            counter += 1
        return f"{base} {counter}"

    def store(self, base: str, graph: CausalGraph) -> str:
        name = self.allocate(base)
        self._graphs[name] = graph
        return name

    def get(self, name: str) -> CausalGraph | None:
        return self._graphs.get(name.strip())

    def names(self) -> list[str]:
        return list(self._graphs)

    def items(self) -> list[tuple[str, CausalGraph]]:
        return list(self._graphs.items())

    def __contains__(self, name: str) -> bool:
        return name.strip() in self._graphs

    def __len__(self) -> int:
        return len(self._graphs)


class TableStore:
    """Tables reachable by file name."""

    def __init__(self, tables: Mapping[str, DataTable] | None = None):
        self._tables: dict[str, DataTable] = dict(tables or {})

    @classmethod
    def from_paths(cls, paths: Iterable[str | Path]) -> "TableStore":
        store = cls()
        for path in paths:
            store.load(path)
        return store

    def add(self, table: DataTable, file_name: str | None = None) -> str:
        name = file_name or table.name
        self._tables[name] = table
        return name

    def load(self, path: str | Path) -> str:
        table = load_csv(path)
        return self.add(table, Path(path).name)

    def get(self, file_name: str) -> DataTable:
        """Find a table by exact name, base name, or name without the .csv suffix.

        Raises:
            ToolInputError: If no table matches
        """
        file_name = str(file_name).strip()
        for candidate in (file_name, Path(file_name).name, f"{file_name}.csv"):
            if candidate in self._tables:
                return self._tables[candidate]
        available = ", ".join(sorted(self._tables)) or "none"
        raise ToolInputError(f"file '{file_name}' is not available. Available files: {available}")

    def names(self) -> list[str]:
        return list(self._tables)


@dataclass
class ToolContext:
    """What a tool handler can reach."""

    memory: GraphMemory
    tables: TableStore
    alpha: float = DEFAULT_ALPHA
    seed: int = 0


Handler = Callable[[dict, ToolContext], str]


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str
    handler: Handler = field(repr=False)
    required: tuple[str, ...] = ()


@dataclass(frozen=True)
class ToolOutcome:
    observation: str
    ok: bool


def _variables(args: dict, key: str = "interesting var", count: int | None = None) -> list[str]:
    value = args.get(key, [])
    if isinstance(value, str):
        value = [value] if value.strip() else []
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ToolInputError(f'"{key}" must be a list of variable names')
    value = [v.strip() for v in value]
    if count is not None and len(value) != count:
        raise ToolInputError(f'"{key}" must contain exactly {count} variable names, got {len(value)}')
    return value


def _flag(value) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("true", "yes", "1")


def _check_columns(table: DataTable, names: Iterable[str]) -> None:
    unknown = [name for name in names if name not in table.columns]
    if unknown:
        raise ToolInputError(
            f"variable(s) {', '.join(repr(n) for n in unknown)} not found in '{table.name}'. "
            f"Available variables: {', '.join(table.columns)}"
        )


def _graph(args: dict, context: ToolContext) -> CausalGraph:
    name = str(args.get("cg name", "")).strip()
    graph = context.memory.get(name) if name else None
    if graph is None:
        known = ", ".join(context.memory.names()) or "none"
        raise ToolInputError(
            f"causal graph '{name}' does not exist in memory (known graphs: {known}). "
            f"Please use the '{GENERATE_CAUSAL}' tool to generate the causal graph first."
        )
    return graph


def independence_test(args: dict, context: ToolContext) -> str:
    table = context.tables.get(args["filename"])
    x, y = _variables(args, count=2)
    conditions = _variables(args, "condition")
    _check_columns(table, [x, y, *conditions])
    return fisher_z_test(table, x, y, conditions, context.alpha).observation()


def generate_causal(args: dict, context: ToolContext) -> str:
    file_name = str(args["filename"])
    table = context.tables.get(file_name)
    subset = _variables(args)
    analyse = _flag(args.get("analyse relationship", "True" if not subset else "False"))
    base = Path(file_name.strip()).stem
    if subset and not analyse:
        _check_columns(table, subset)
        graph = run_pc_partial(table, subset, context.alpha)
    else:
        graph = run_pc(table, context.alpha)
    name = context.memory.store(base, graph)
    return f"causal graph named '{name}' is generate succeed! and have written to the memory."


def edge_directions(args: dict, context: ToolContext) -> str:
    graph = _graph(args, context)
    x, y = _variables(args, count=2)
    return determine_direct_cause(graph, x, y).narrative


def collider(args: dict, context: ToolContext) -> str:
    graph = _graph(args, context)
    x, y = _variables(args, count=2)
    return determine_collider(graph, x, y).narrative


def confounder(args: dict, context: ToolContext) -> str:
    graph = _graph(args, context)
    x, y = _variables(args, count=2)
    return determine_confounder(graph, x, y).narrative


def _single(config: dict, key: str) -> str:
    value = config.get(key)
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, list) or len(value) != 1 or not isinstance(value[0], str):
        raise ToolInputError(f'config "{key}" must be a list with exactly one variable name')
    return value[0].strip()


def _number(config: dict, key: str) -> float:
    try:
        return float(config[key])
    except KeyError:
        raise ToolInputError(f'config "{key}" is required') from None
    except (TypeError, ValueError):
        raise ToolInputError(f'config "{key}" must be a number, got {config[key]!r}') from None


def calculate_cate(args: dict, context: ToolContext) -> str:
    table = context.tables.get(args["filename"])
    config = args.get("config")
    if not isinstance(config, dict):
        raise ToolInputError('"config" must be an object with keys Y, T, X, T0, T1')
    config = {str(k).strip().upper(): v for k, v in config.items()}
    outcome = _single(config, "Y")
    treatment = _single(config, "T")
    covariates = _variables(config, "X")
    t0, t1 = _number(config, "T0"), _number(config, "T1")
    _check_columns(table, [outcome, treatment, *covariates])
    estimate = estimate_ate(
        table, DmlConfig(outcome, treatment, tuple(covariates), t0, t1, seed=context.seed)
    )
    return (
        f"ATE of {treatment} from {format_number(t0)} to {format_number(t1)} "
        f"on {outcome} is {format_number(estimate.ate)}"
    )


INDEPENDENCE_DESCRIPTION = (
    "condition independent test: Useful for when you need to test the *** independent or d-separate *** "
    "of variable A and variable B condition on variable C. input should be a json with the format below \n"
    '{"filename":...,"interesting var":[...],"condition":[...]}\n'
    "interesting var is a list of variables the user interested in. For example, if the user wants to test "
    'independent(d-separate) between X and Y conditions on Z, W,Q, interesting var is ["X","Y"], '
    'condition is ["Z","W","Q"]. condition is [] if no condition is provided'
)

GENERATE_DESCRIPTION = (
    "Generate Causal: Useful for when you need to generate causal graph (or partial causal graph). "
    "input should be a json with the format below \n"
    '{"filename":...,"analyse relationship":...,"interesting var":[...](Optional)}\n'
    ".if you want to analyze relationship between variables( such as cause-effect, coufounder , Collider), "
    'analyse relationship = "True" and please generate complete causal graph and  interesting var is [](which '
    "means causal graph contain all variables).if we only need to generate **partial causal graph** (for "
    "example, generate a partial causal graph for some variables), interesting var is used and it's values "
    'are list of variables appear in causal graph and analyse relationship is "False".Further more, if needed, '
    "you can analyse variables relationship in causal graph generated by this tool through these tools: "
    "Determine collider,Determine confounder,Determine edge direction"
)

COLLIDER_DESCRIPTION = (
    "Determine collider: you should first generate causal graph and then use this tool. Useful When we are "
    "interested in whether there is a collider between two variables(ie common effect), we use this tool and "
    'the input is {"cg name":...,"interesting var":[...]}, where interesting var is what Variable we want to '
    "test, cg name is the name of causal generated by 'Generate Causal'.The output of the tool is yes or no "
    "or uncertainty and may be the variable name of the collider. Make sure the causal graph has been "
    "generated before using this tool"
)

CONFOUNDER_DESCRIPTION = (
    "Determine confounder: you should first generate causal graph and then use this tool. Useful When we are "
    "interested in whether there is a cofounder (ie common cause) between two variables, we use this tool and "
    'the input is {"cg name":...,"interesting var":[...]}, where interesting var is what Variable we want to '
    "test, cg name is the name of causal generated by 'Generate Causal'.The output of the tool is yes or no "
    "or uncertainty and the backdoor path that may lead to the existence of the cofounder. Make sure the "
    "causal graph has been generated before using this tool"
)

EDGE_DESCRIPTION = (
    "Determine edge directions: you should first generate causal graph and then use this tool.Useful when we "
    "are interested in whether there is a direct edge between two variables and the direction of the edge "
    "(such as determining whether A directly leads to B)., we use this tool and the input is "
    '{"cg name"=...,"interesting var"=[...]}, where interesting var is what Variable we want to test, cg name '
    "is the name of causal generated by 'Generate Causal'.The output of the tool is the relationship of two "
    "variables (ie A cause B). Make sure the causal graph has been generated before using this tool"
)

CATE_DESCRIPTION = (
    "calculate CATE: Useful for when you need to calculate (conditional) average treatment effect (ATE or "
    "CATE, etc. in math function is E(Y(T=T1)-Y(T=T0) | X=x) and means if we use treatment, what uplift we "
    "will get from treatment).This tool use double machine learn algorithm to calculate ate. input is  a json "
    'with format {"filename":...,config: {Y:[...],T:[...],X:[...],T0:...,T1:...} }. Y are names of outcome, '
    "T are names of treatment, X are names of covariate affect both T and Y (i.e. confounder). T1 and T0 are "
    "two different values of T that need to be calculated in ATE. you should extract each name from the "
    "description."
)

DEFAULT_TOOLS: tuple[ToolSpec, ...] = (
    ToolSpec(CONDITION_INDEPENDENT_TEST, INDEPENDENCE_DESCRIPTION, independence_test, ("filename", "interesting var")),
    ToolSpec(GENERATE_CAUSAL, GENERATE_DESCRIPTION, generate_causal, ("filename",)),
    ToolSpec(DETERMINE_COLLIDER, COLLIDER_DESCRIPTION, collider, ("cg name", "interesting var")),
    ToolSpec(DETERMINE_CONFOUNDER, CONFOUNDER_DESCRIPTION, confounder, ("cg name", "interesting var")),
    ToolSpec(DETERMINE_EDGE_DIRECTIONS, EDGE_DESCRIPTION, edge_directions, ("cg name", "interesting var")),
    ToolSpec(CALCULATE_CATE, CATE_DESCRIPTION, calculate_cate, ("filename", "config")),
)


def find_tool(name: str, tools: Iterable[ToolSpec] = DEFAULT_TOOLS) -> ToolSpec | None:
    """Exact-after-trim lookup."""
    name = name.strip()
    for spec in tools:
        if spec.name == name:
            return spec
    return None


def _parse_arguments(raw: str | dict) -> dict:
    if isinstance(raw, dict):
        args = raw
    else:
        try:
            args, _ = extract_json_object(raw)
        except ValueError:
            raise ToolInputError(f"Action Input is not valid JSON: {raw.strip()!r}") from None
    if not isinstance(args, dict):
        raise ToolInputError("Action Input must be a JSON object")
    return {normalize_key(str(k)): v for k, v in args.items()}


def execute_tool(spec: ToolSpec, raw_input: str | dict, context: ToolContext) -> ToolOutcome:
    """Run one tool; never raises."""
    try:
        args = _parse_arguments(raw_input)
        missing = [key for key in spec.required if key not in args]
        if missing:
            raise ToolInputError(f"missing required input key(s) for '{spec.name}': {', '.join(missing)}")
        return ToolOutcome(spec.handler(args, context), True)
    except (ToolInputError, TableError, GraphError, CiTestError, PcError, DmlError) as e:
        logger.info("tool '%s' failed: %s", spec.name, e)
        return ToolOutcome(f"Error: {e}", False)
    except Exception as e:
        logger.exception("tool '%s' crashed", spec.name)
        return ToolOutcome(f"Error: tool '{spec.name}' failed unexpectedly ({type(e).__name__}: {e})", False)


def run_tool(
    name: str, raw_input: str | dict, context: ToolContext, tools: Iterable[ToolSpec] = DEFAULT_TOOLS
) -> ToolOutcome:
    """Resolve a tool by name and dispatch it; unknown names list the valid ones."""
    tools = tuple(tools)
    spec = find_tool(name, tools)
    if spec is None:
        valid = ", ".join(f"'{t.name}'" for t in tools)
        return ToolOutcome(f"unknown tool '{name.strip()}'. Valid tool names are: {valid}", False)
    return execute_tool(spec, raw_input, context)


def dispatch_tool(spec: ToolSpec, raw_input: str | dict, context: ToolContext) -> str:
    """Observation text of one tool call."""
    return execute_tool(spec, raw_input, context).observation
