"""CLI for the causal agent toolkit."""

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import NoReturn

from pydantic import ValidationError

from . import bench
from .agent import SessionError, run_session
from .backends import BackendConfig, BackendError, HttpChatBackend, build_backend
from .ci_test import DEFAULT_ALPHA
from .questions import Category
from .scm import ScmError
from .tabular import TableError
from .tools import GraphMemory, TableStore, ToolContext, run_tool

logger = logging.getLogger(__name__)

EXIT_USAGE = 1
EXIT_RUNTIME = 2


class UsageError(Exception):
    """Invalid flags or arguments."""


class CliParser(argparse.ArgumentParser):
    """Argument parser that reports errors as JSON on stderr."""

    def error(self, message: str) -> NoReturn:
        _fail("Invalid arguments", message, EXIT_USAGE)


def _fail(error: str, details: str, code: int) -> NoReturn:
    print(json.dumps({"error": error, "details": details}), file=sys.stderr)
    sys.exit(code)


def parse_nodes(text: str) -> list[int]:
    """'3-10' or '3,4,5' -> node counts."""
    counts: list[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if "-" in part:
                low, high = (int(v) for v in part.split("-", 1))
                counts.extend(range(low, high + 1))
            elif part:
                counts.append(int(part))
    except ValueError:
        raise UsageError(f"cannot read node counts from '{text}'") from None
    if not counts:
        raise UsageError("no node counts given")
    return counts


def parse_categories(text: str) -> list[Category]:
    try:
        return [Category(part.strip().upper()) for part in text.split(",") if part.strip()]
    except ValueError as e:
        valid = ", ".join(c.value for c in Category)
        raise UsageError(f"{e}; valid categories: {valid}") from None


def _add_backend_flags(parser: argparse.ArgumentParser, modes: tuple[str, ...]) -> None:
    parser.add_argument("--backend", choices=modes, default=modes[0], help="Model backend")
    parser.add_argument("--replay", type=Path, help="Replay file for the scripted backend")
    parser.add_argument("--model", help="Chat model (default: $CAUSAL_AGENT_MODEL)")
    parser.add_argument("--base-url", help="Chat endpoint (default: $CAUSAL_AGENT_BASE_URL)")
    parser.add_argument("--temperature", type=float, help="Sampling temperature (default: 0.5)")
    parser.add_argument("--max-iterations", type=int, help="ReAct iteration limit (default: 10)")
    parser.add_argument("--icl", action="store_true", help="Use the one-shot demo prompt")


def _backend_config(args) -> BackendConfig:
    if args.backend == "scripted" and args.replay is None:
        raise UsageError("--backend scripted needs --replay")
    return BackendConfig.from_env(
        mode=args.backend,
        replay=args.replay,
        model=args.model,
        base_url=args.base_url,
        temperature=args.temperature,
        max_iterations=args.max_iterations,
        icl=args.icl,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = CliParser(
        prog="causal-agent",
        description="Causal Agent CLI",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Generate table pools and a benchmark
  causal-agent generate --seed 7 --nodes 3-6 --out out

  # Run one tool directly
  causal-agent tool "condition independent test" \\
      '{"filename": "data.csv", "interesting var": ["A", "B"], "condition": []}' --table data.csv

  # Ask a question about a table
  causal-agent ask "Is A a cause of B? csv data store in 'data.csv' ." data.csv

  # Run the benchmark with the oracle policy
  causal-agent bench --manifest out/benchmark.json --backend oracle --jobs 4
        """,
    )
    parser.add_argument("--log-level", default="warning", help="Log level (default: warning)")
    subparsers = parser.add_subparsers(dest="command", help="Available commands", parser_class=CliParser)

    generate = subparsers.add_parser("generate", help="Generate table pools and a benchmark manifest")
    generate.add_argument("--seed", type=int, default=0, help="Seed of every random draw")
    generate.add_argument("--rows", type=int, default=1000, help="Rows per table")
    generate.add_argument("--nodes", default="3-10", help="Node counts, e.g. 3-10 or 3,5,7")
    generate.add_argument("--categories", help="Comma-separated categories (default: all)")
    generate.add_argument("--per-cell", type=int, default=20, help="Items per (category, node count)")
    generate.add_argument("--ate-per-count", type=int, default=2, help="ATE items per node count")
    generate.add_argument("--pool-per-count", type=int, default=10, help="Pool tables per node count")
    generate.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="Significance level")
    generate.add_argument("--allow-any-nodes", action="store_true", help="Allow node counts outside 3-10")
    generate.add_argument("--scenario-backend", choices=["none", "template", "http"], default="none",
                          help="Append scenario prose after each question: seeded template sentences or the chat backend")
    generate.add_argument("--out", type=Path, default=Path("out"), help="Output directory")

    tool = subparsers.add_parser("tool", help="Run one tool and print its observation")
    tool.add_argument("name", help="Tool name, e.g. 'Generate Causal'")
    tool.add_argument("input", help="Action input as a JSON object")
    tool.add_argument("--table", action="append", default=[], help="CSV file the tool can read (repeatable)")
    tool.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="Significance level")
    tool.add_argument("--seed", type=int, default=0, help="Seed of the effect estimator")

    ask = subparsers.add_parser("ask", help="Answer one question with the agent")
    ask.add_argument("question", help="Question text")
    ask.add_argument("tables", nargs="+", help="CSV files the agent can read")
    ask.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="Significance level")
    ask.add_argument("--transcript", type=Path, default=Path("transcript.jsonl"), help="Transcript log path")
    _add_backend_flags(ask, ("http", "scripted"))

    run = subparsers.add_parser("bench", help="Run a benchmark and write its report")
    run.add_argument("--manifest", type=Path, default=Path("out") / bench.BENCHMARK_NAME, help="Benchmark manifest")
    run.add_argument("--categories", help="Only run these categories")
    run.add_argument("--nodes", help="Only run these node counts")
    run.add_argument("--jobs", type=int, default=1, help="Concurrent sessions")
    run.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="Significance level")
    run.add_argument("--tolerance", type=float, default=bench.DEFAULT_ATE_TOLERANCE,
                     help="Relative ATE tolerance (default: 0.05)")
    run.add_argument("--stratify", default="answer,domain", help="Strata of the report: answer, domain")
    run.add_argument("--out", type=Path, default=Path("out") / "report", help="Report directory")
    _add_backend_flags(run, ("oracle", "http", "scripted"))
    return parser


def cmd_generate(args) -> dict:
    plan = bench.BenchPlan(
        categories=parse_categories(args.categories) if args.categories else list(Category),
        node_counts=parse_nodes(args.nodes),
        per_cell=args.per_cell,
        ate_per_count=args.ate_per_count,
        pool_per_count=args.pool_per_count,
        rows=args.rows,
        seed=args.seed,
        alpha=args.alpha,
        allow_any_nodes=args.allow_any_nodes,
    )
    logger.info("generating %s", plan)
    items = bench.generate_benchmark(plan, args.out)
    manifest = args.out / bench.BENCHMARK_NAME
    if args.scenario_backend == "template":
        items = bench.add_scenarios(items, plan.seed)
    elif args.scenario_backend == "http":
        items = asyncio.run(_narrate(items))
    if args.scenario_backend != "none":
        bench.write_benchmark(items, plan, manifest)

    counts: dict[str, int] = {}
    for item in items:
        counts[item.category.value] = counts.get(item.category.value, 0) + 1
    return {"manifest": str(manifest), "items": len(items), "per_category": counts}


async def _narrate(items):
    async with HttpChatBackend(BackendConfig.from_env()) as backend:
        return await bench.narrate_items(items, backend)


def cmd_tool(args) -> tuple[str, bool]:
    tables = TableStore.from_paths(args.table)
    context = ToolContext(GraphMemory(), tables, args.alpha, args.seed)
    outcome = run_tool(args.name, args.input, context)
    return outcome.observation, outcome.ok


async def cmd_ask(args) -> dict:
    config = _backend_config(args)
    tables = TableStore.from_paths(args.tables)
    backend = build_backend(config)
    try:
        transcript = await run_session(
            args.question, tables, backend, icl=config.icl,
            max_iterations=config.max_iterations, alpha=args.alpha,
        )
    except SessionError as e:
        e.transcript.write_jsonl(args.transcript)
        raise
    finally:
        if isinstance(backend, HttpChatBackend):
            await backend.close()
    path = transcript.write_jsonl(args.transcript)
    return {"final_answer": transcript.final_answer, "steps": len(transcript.steps), "transcript": str(path)}


async def cmd_bench(args) -> dict:
    config = _backend_config(args)
    stratify = [s.strip() for s in args.stratify.split(",") if s.strip()]
    unknown = set(stratify) - {"answer", "domain"}
    if unknown:
        raise UsageError(f"cannot stratify by {', '.join(sorted(unknown))}; use answer and/or domain")

    items = bench.read_benchmark(args.manifest)
    if args.categories:
        wanted = set(parse_categories(args.categories))
        items = [item for item in items if item.category in wanted]
    if args.nodes:
        counts = set(parse_nodes(args.nodes))
        items = [item for item in items if item.node_count in counts]

    logger.info("running %d items with the %s backend", len(items), config.mode)
    results = await bench.run_benchmark(items, config, jobs=args.jobs, alpha=args.alpha)
    report = bench.score(items, results, args.tolerance)
    paths = report.write(args.out, stratify)
    bench.write_failure_transcripts(report, results, args.out / "transcripts")
    return {
        "items": report.total,
        "correct": report.correct,
        "format_violations": report.format_violations,
        "report": [str(p) for p in paths],
    }


def sync_main():
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args()

    if not args.command:
        parser.print_help()
        sys.exit(EXIT_USAGE)

    logging.basicConfig(
        level=args.log_level.upper(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        if args.command == "generate":
            print(json.dumps(cmd_generate(args)))

        elif args.command == "tool":
            observation, ok = cmd_tool(args)
            print(observation)
            if not ok:
                sys.exit(EXIT_RUNTIME)

        elif args.command == "ask":
            result = asyncio.run(cmd_ask(args))
            print(json.dumps(result))

        elif args.command == "bench":
            print(json.dumps(asyncio.run(cmd_bench(args))))

    except (UsageError, ValidationError) as e:
        _fail("Invalid arguments", str(e), EXIT_USAGE)
    except TableError as e:
        _fail("Cannot load table", str(e), EXIT_USAGE)
    except SessionError as e:
        _fail("Agent session failed", str(e), EXIT_RUNTIME)
    except (BackendError, bench.BenchError, ScmError, OSError) as e:
        _fail(type(e).__name__, str(e), EXIT_RUNTIME)


if __name__ == "__main__":
    sync_main()
