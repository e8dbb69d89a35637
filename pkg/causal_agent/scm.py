"""Synthetic structural causal models and ground-truth oracles.

Every node follows ``x = f(parents) + sigma * eps`` with standard normal ``eps``.
Two mechanism families are available:

* ``tanh`` (default): ``f(p) = sum_j a_j * tanh(b_j * p_j + c_j) + d * tanh(sum_j p_j)``
  with ``a_j, b_j, d`` drawn uniformly from ``[0.5, 1.5]`` with a random sign and
  ``c_j`` uniform in ``[-0.5, 0.5]``. Nonlinear in every argument.
* ``linear``: ``f(p) = sum_j w_j * p_j`` with ``w_j`` drawn like ``a_j``. Used for
  effect-level items, where the linear treatment assumption of the DML tool holds.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph import CausalGraph, GraphError, cpdag_of_dag, d_separated, descendants
from .pc import pc_search
from .tabular import DataTable, load_csv, write_csv

logger = logging.getLogger(__name__)

MIN_NODES = 3
MAX_NODES = 10
DEFAULT_SIGMA = 0.5
DEFAULT_ROWS = 1000
MIN_MC_DRAWS = 100_000
FAMILIES = ("tanh", "linear")
MANIFEST_NAME = "manifest.json"


class ScmError(ValueError):
    """Raised for invalid generator parameters or oracle queries."""


def _signed_uniform(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.uniform(0.5, 1.5, size) * rng.choice((-1.0, 1.0), size)


@dataclass(frozen=True, eq=False)
class Mechanism:
    """Structural function of one node given its parents (in ``parents`` order)."""

    parents: tuple[str, ...]
    family: str
    a: np.ndarray
    b: np.ndarray = field(default_factory=lambda: np.empty(0))
    c: np.ndarray = field(default_factory=lambda: np.empty(0))
    d: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ScmError(f"unknown mechanism family '{self.family}'")
        if len(self.a) != len(self.parents):
            raise ScmError("mechanism arity does not match the parent count")

    @classmethod
    def draw(cls, parents: Sequence[str], family: str, rng: np.random.Generator) -> "Mechanism":
        k = len(parents)
        if family == "linear":
            return cls(tuple(parents), family, _signed_uniform(rng, k))
        a = _signed_uniform(rng, k)
        b = _signed_uniform(rng, k)
        c = rng.uniform(-0.5, 0.5, k)
        d = float(_signed_uniform(rng, 1)[0])
        return cls(tuple(parents), family, a, b, c, d)

    def __call__(self, inputs: np.ndarray) -> np.ndarray:
        """Evaluate on an (n, k) array of parent values."""
        if inputs.shape[1] == 0:
            return np.zeros(inputs.shape[0])
        if self.family == "linear":
            return inputs @ self.a
        return np.tanh(inputs * self.b + self.c) @ self.a + self.d * np.tanh(inputs.sum(axis=1))


@dataclass(frozen=True, eq=False)
class Scm:
    """Structural causal model over a DAG.

    Attributes:
        dag: Fully directed graph
        mechanisms: Node -> structural function of its parents
        noise_sigma: Node -> noise standard deviation
        seed: Seed the mechanisms were drawn with
        family: Mechanism family name
    """

    dag: CausalGraph
    mechanisms: Mapping[str, Mechanism]
    noise_sigma: Mapping[str, float]
    seed: int
    family: str = "tanh"

    def __post_init__(self):
        if not self.dag.is_fully_directed:
            raise ScmError("an SCM needs a fully directed graph")
        for node in self.dag.nodes:
            mechanism = self.mechanisms.get(node)
            if mechanism is None:
                raise ScmError(f"node '{node}' has no mechanism")
            if tuple(mechanism.parents) != self.dag.parents(node):
                raise ScmError(f"mechanism of '{node}' does not read its parents")
            if not self.noise_sigma.get(node, 0.0) > 0.0:
                raise ScmError(f"noise sigma of '{node}' must be positive")

    @property
    def nodes(self) -> tuple[str, ...]:
        return self.dag.nodes

    def simulate(
        self, n_rows: int, seed: int, interventions: Mapping[str, float] | None = None
    ) -> np.ndarray:
        """Sample an (n_rows, k) array, columns in node order.

        The noise matrix depends only on ``seed`` and the shape, so runs with and
        without interventions share their noise draws.
        """
        if n_rows < 1:
            raise ScmError(f"n_rows must be at least 1, got {n_rows}")
        interventions = dict(interventions or {})
        position = {node: i for i, node in enumerate(self.nodes)}
        noise = np.random.default_rng(seed).standard_normal((n_rows, len(self.nodes)))
        values = np.full((n_rows, len(self.nodes)), np.nan)
        for node in self.dag.topological_order():
            j = position[node]
            if node in interventions:
                values[:, j] = interventions[node]
                continue
            mechanism = self.mechanisms[node]
            inputs = values[:, [position[p] for p in mechanism.parents]]
            values[:, j] = mechanism(inputs) + self.noise_sigma[node] * noise[:, j]
        return values


def random_dag(
    node_count: int,
    edge_count: int,
    seed: int,
    names: Sequence[str] | None = None,
    allow_any_nodes: bool = False,
) -> CausalGraph:
    """Random DAG: a random topological order, then ``edge_count`` order-respecting pairs.

    Raises:
        ScmError: If node_count is outside 3..10 (unless allow_any_nodes) or
            edge_count is outside [0, C(node_count, 2)]
    """
    if allow_any_nodes:
        if node_count < 1:
            raise ScmError(f"node_count must be positive, got {node_count}")
    elif not MIN_NODES <= node_count <= MAX_NODES:
        raise ScmError(f"node_count must be in {MIN_NODES}..{MAX_NODES}, got {node_count}")
    max_edges = node_count * (node_count - 1) // 2
    if not 0 <= edge_count <= max_edges:
        raise ScmError(f"edge_count must be in 0..{max_edges} for {node_count} nodes, got {edge_count}")

    nodes = tuple(names) if names is not None else tuple(f"V{i}" for i in range(1, node_count + 1))
    if len(nodes) != node_count:
        raise ScmError(f"expected {node_count} names, got {len(nodes)}")

    rng = np.random.default_rng(seed)
    order = rng.permutation(node_count)
    pairs = [(order[i], order[j]) for i in range(node_count) for j in range(i + 1, node_count)]
    chosen = rng.choice(len(pairs), size=edge_count, replace=False) if edge_count else []
    edges = {(nodes[pairs[k][0]], nodes[pairs[k][1]]) for k in chosen}
    return CausalGraph(nodes, frozenset(edges))


def random_scm(
    dag: CausalGraph, seed: int, family: str = "tanh", sigma: float = DEFAULT_SIGMA
) -> Scm:
    """Draw mechanisms for every node of ``dag`` (node order, deterministic in ``seed``)."""
    if family not in FAMILIES:
        raise ScmError(f"unknown mechanism family '{family}', expected one of {', '.join(FAMILIES)}")
    if not sigma > 0:
        raise ScmError(f"sigma must be positive, got {sigma}")
    rng = np.random.default_rng(seed)
    mechanisms = {node: Mechanism.draw(dag.parents(node), family, rng) for node in dag.nodes}
    return Scm(dag, mechanisms, {node: float(sigma) for node in dag.nodes}, seed, family)


def sample_table(
    scm: Scm, n_rows: int = DEFAULT_ROWS, seed: int = 0, name: str = "data", names: Sequence[str] | None = None
) -> DataTable:
    """Observational sample of ``scm`` as a table; columns follow the DAG node order."""
    values = scm.simulate(n_rows, seed)
    columns = tuple(names) if names is not None else scm.nodes
    if len(columns) != len(scm.nodes):
        raise ScmError(f"expected {len(scm.nodes)} column names, got {len(columns)}")
    return DataTable(name, columns, values)


def oracle_dsep_label(scm: Scm, x: str, y: str, z: Iterable[str] = ()) -> bool:
    """True when x and y are d-separated by z in the true DAG."""
    return d_separated(scm.dag, x, y, tuple(z))


def oracle_cpdag(scm: Scm) -> CausalGraph:
    return cpdag_of_dag(scm.dag)


def oracle_partial_cpdag(scm: Scm, subset: Iterable[str]) -> CausalGraph:
    """Graph PC would return on the marginal over ``subset`` with a perfect independence oracle."""
    wanted = set(subset)
    for name in wanted:
        scm.dag.check_node(name)
    variables = [node for node in scm.nodes if node in wanted]
    if not variables:
        raise ScmError("partial graph needs at least one variable")
    return pc_search(variables, lambda x, y, z: d_separated(scm.dag, x, y, z)).graph


def interventional_contrast(
    scm: Scm, treatment: str, outcome: str, t0: float, t1: float, mc_draws: int = MIN_MC_DRAWS, seed: int = 0
) -> tuple[float, float]:
    """Monte-Carlo ``E[Y | do(T=t1)] - E[Y | do(T=t0)]`` with common random numbers.

    Returns:
        (estimate, standard error)
    """
    try:
        scm.dag.check_node(treatment)
        scm.dag.check_node(outcome)
    except GraphError as e:
        raise ScmError(str(e)) from None
    if treatment == outcome:
        raise ScmError("treatment and outcome must be different variables")
    if mc_draws < MIN_MC_DRAWS:
        raise ScmError(f"mc_draws must be at least {MIN_MC_DRAWS}, got {mc_draws}")
    if t0 == t1:
        return 0.0, 0.0

    j = scm.nodes.index(outcome)
    high = scm.simulate(mc_draws, seed, {treatment: t1})[:, j]
    low = scm.simulate(mc_draws, seed, {treatment: t0})[:, j]
    diff = high - low
    return float(diff.mean()), float(diff.std(ddof=1) / math.sqrt(mc_draws))


def oracle_interventional_ate(
    scm: Scm, treatment: str, outcome: str, t0: float, t1: float, mc_draws: int = MIN_MC_DRAWS, seed: int = 0
) -> float:
    """Interventional ATE; exactly 0 when t0 == t1 or the outcome is not a descendant."""
    estimate, _ = interventional_contrast(scm, treatment, outcome, t0, t1, mc_draws, seed)
    if outcome not in descendants(scm.dag, treatment):
        logger.debug("%s is not a descendant of %s, Monte-Carlo estimate %.3g", outcome, treatment, estimate)
    return estimate


@dataclass(frozen=True, eq=False)
class TablePoolEntry:
    """One generated table with the model that produced it."""

    table: DataTable
    scm: Scm
    node_count: int
    edge_count: int
    seed: int
    n_rows: int

    def __post_init__(self):
        if self.table.columns != self.scm.nodes:
            raise ScmError("table columns must equal the DAG nodes")
        if self.edge_count != len(self.scm.dag.directed):
            raise ScmError("edge_count does not match the DAG")

    @property
    def sigma(self) -> float:
        return next(iter(self.scm.noise_sigma.values()))


def generate_entry(
    node_count: int,
    edge_count: int,
    seed: int,
    n_rows: int = DEFAULT_ROWS,
    family: str = "tanh",
    sigma: float = DEFAULT_SIGMA,
    name: str | None = None,
    allow_any_nodes: bool = False,
) -> TablePoolEntry:
    """DAG, mechanisms and sample, all derived from one seed."""
    dag = random_dag(node_count, edge_count, seed, allow_any_nodes=allow_any_nodes)
    scm = random_scm(dag, seed + 1, family, sigma)
    table = sample_table(scm, n_rows, seed + 2, name=name or f"pool_{seed}")
    return TablePoolEntry(table, scm, node_count, edge_count, seed, n_rows)


def build_pool(
    node_counts: Iterable[int],
    per_count: int,
    seed: int,
    n_rows: int = DEFAULT_ROWS,
    family: str = "tanh",
    sigma: float = DEFAULT_SIGMA,
    allow_any_nodes: bool = False,
) -> list[TablePoolEntry]:
    """``per_count`` entries for each node count, edge counts uniform in [0, C(k, 2)]."""
    if per_count < 1:
        raise ScmError(f"per_count must be positive, got {per_count}")
    rng = np.random.default_rng(seed)
    entries = []
    for node_count in node_counts:
        max_edges = node_count * (node_count - 1) // 2
        for _ in range(per_count):
            edge_count = int(rng.integers(0, max_edges + 1))
            entry_seed = int(rng.integers(0, 2**31 - 3))
            name = f"pool_{len(entries):04d}.csv"
            entries.append(
                generate_entry(node_count, edge_count, entry_seed, n_rows, family, sigma, name, allow_any_nodes)
            )
    logger.info("built a pool of %d tables", len(entries))
    return entries


def write_pool(entries: Sequence[TablePoolEntry], directory: str | Path) -> Path:
    """Write one CSV per entry plus ``manifest.json``; returns the manifest path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    records = []
    for entry in entries:
        csv_path = write_csv(entry.table, directory / entry.table.name)
        records.append(
            {
                "csv": csv_path.name,
                "nodes": list(entry.scm.nodes),
                "edges": [list(edge) for edge in sorted(entry.scm.dag.directed)],
                "seed": entry.seed,
                "n_rows": entry.n_rows,
                "sigma": entry.sigma,
                "family": entry.scm.family,
            }
        )
    manifest = directory / MANIFEST_NAME
    manifest.write_text(json.dumps({"entries": records}, indent=2) + "\n", encoding="utf-8")
    return manifest


def read_pool(directory: str | Path) -> list[TablePoolEntry]:
    """Load a pool written by ``write_pool``; models are regenerated from the recorded seeds.

    Raises:
        ScmError: If the manifest is missing or its DAG disagrees with the regenerated one
    """
    directory = Path(directory)
    manifest = directory / MANIFEST_NAME
    if not manifest.is_file():
        raise ScmError(f"no {MANIFEST_NAME} in {directory}")
    entries = []
    for record in json.loads(manifest.read_text(encoding="utf-8"))["entries"]:
        nodes = record["nodes"]
        dag = CausalGraph(tuple(nodes), frozenset(tuple(edge) for edge in record["edges"]))
        regenerated = random_dag(len(nodes), len(dag.directed), record["seed"], names=nodes, allow_any_nodes=True)
        if regenerated != dag:
            raise ScmError(f"manifest DAG for {record['csv']} does not match its seed")
        scm = random_scm(dag, record["seed"] + 1, record["family"], record["sigma"])
        table = load_csv(directory / record["csv"])
        entries.append(TablePoolEntry(table, scm, len(nodes), len(dag.directed), record["seed"], record["n_rows"]))
    return entries
