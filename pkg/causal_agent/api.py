"""FastAPI service for causal agent sessions and direct tool calls."""

from pathlib import Path
from typing import Optional, Union

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .backends import BackendConfig
from .ci_test import DEFAULT_ALPHA
from .session_manager import SessionManager
from .tabular import TableError
from .tools import DEFAULT_TOOLS, GraphMemory, TableStore, ToolContext, execute_tool, find_tool

# Get package version
try:
    from importlib.metadata import version
    VERSION = version("causal-agent")
except Exception:
    # Fallback to reading from pyproject.toml if not installed
    try:
        pyproject_path = Path(__file__).parent.parent / "pyproject.toml"
        with open(pyproject_path, "r") as f:
            for line in f:
                if line.startswith("version = "):
                    VERSION = line.split("=")[1].strip().strip('"')
                    break
            else:
                VERSION = "unknown"
    except Exception:
        VERSION = "unknown"

app = FastAPI(title="Causal Agent API")

session_manager = SessionManager()


class CreateSessionRequest(BaseModel):
    """Request model for creating a session."""

    question: str = Field(min_length=1)
    tables: list[str]
    backend: Optional[BackendConfig] = None
    alpha: float = Field(DEFAULT_ALPHA, gt=0.0, lt=1.0)


class ToolCallRequest(BaseModel):
    """Request model for calling one tool outside an agent session."""

    input: Union[dict, str]
    tables: list[str] = []
    alpha: float = Field(DEFAULT_ALPHA, gt=0.0, lt=1.0)
    seed: int = 0


def _session_or_404(session_id: str):
    session = session_manager.get_session(session_id)
    if not session:
        raise HTTPException(status_code=404, detail="Session not found")
    return session


@app.post("/sessions")
async def create_session(request: CreateSessionRequest) -> JSONResponse:
    """Create a session and run the agent on its question.

    Args:
        request: Session creation request

    Returns:
        JSON response with session_id, final answer and steps

    Raises:
        HTTPException: If a table cannot be loaded or the backend mode is not servable
    """
    if request.backend is not None and request.backend.mode == "oracle":
        raise HTTPException(status_code=400, detail="the oracle backend only runs benchmark items")
    try:
        session_id = session_manager.create_session(
            question=request.question,
            table_paths=request.tables,
            config=request.backend,
        )
    except TableError as e:
        raise HTTPException(status_code=400, detail=str(e))

    session = session_manager.get_session(session_id)
    await session.run(alpha=request.alpha)
    return JSONResponse(session.summary())


@app.get("/sessions")
async def list_sessions() -> JSONResponse:
    """List all sessions.

    Returns:
        JSON response with list of session IDs
    """
    return JSONResponse({"sessions": session_manager.list_sessions()})


@app.get("/sessions/{session_id}")
async def get_session_info(session_id: str) -> JSONResponse:
    """Get session information.

    Raises:
        HTTPException: If session not found
    """
    return JSONResponse(_session_or_404(session_id).summary())


@app.delete("/sessions/{session_id}")
async def delete_session(session_id: str) -> JSONResponse:
    """Delete a session.

    Raises:
        HTTPException: If session not found
    """
    if not session_manager.delete_session(session_id):
        raise HTTPException(status_code=404, detail="Session not found")
    return JSONResponse({"status": "deleted"})


@app.get("/sessions/{session_id}/graphs/{name}")
async def get_graph(session_id: str, name: str) -> JSONResponse:
    """Get a graph stored in a session's memory.

    Raises:
        HTTPException: If the session or the graph is not found
    """
    session = _session_or_404(session_id)
    graph = session.memory.get(name)
    if graph is None:
        raise HTTPException(status_code=404, detail=f"Graph '{name}' not found")
    return JSONResponse({"name": name, "graph": graph.to_dict(), "description": graph.describe()})


@app.post("/tools/{name}")
async def call_tool(name: str, request: ToolCallRequest) -> JSONResponse:
    """Run one tool against the given tables with a throwaway graph memory.

    Tool failures are reported with ``ok: false``, like observations in a session.

    Raises:
        HTTPException: If the tool is unknown or a table cannot be loaded
    """
    spec = find_tool(name)
    if spec is None:
        valid = [tool.name for tool in DEFAULT_TOOLS]
        raise HTTPException(status_code=404, detail={"message": f"Unknown tool '{name}'", "tools": valid})
    try:
        tables = TableStore.from_paths(request.tables)
    except TableError as e:
        raise HTTPException(status_code=400, detail=str(e))

    context = ToolContext(GraphMemory(), tables, request.alpha, request.seed)
    outcome = execute_tool(spec, request.input, context)
    return JSONResponse({
        "observation": outcome.observation,
        "ok": outcome.ok,
        "graphs": {n: g.to_dict() for n, g in context.memory.items()},
    })


@app.get("/tools")
async def list_tools() -> JSONResponse:
    """List tool names and descriptions."""
    return JSONResponse({"tools": [{"name": t.name, "description": t.description} for t in DEFAULT_TOOLS]})


@app.get("/health")
async def health_check() -> JSONResponse:
    """Health check endpoint.

    Returns:
        JSON response with health status
    """
    return JSONResponse({"status": "healthy"})


@app.get("/version")
async def get_version() -> JSONResponse:
    """Get application version.

    Returns:
        JSON response with version string
    """
    return JSONResponse({"version": VERSION})
