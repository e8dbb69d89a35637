"""Unit tests for the FastAPI service."""

from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from causal_agent.api import app, session_manager

REPLAY = Path(__file__).parent / "fixtures" / "demo_replay.json"


@pytest.fixture
def client():
    """Create test client."""
    return TestClient(app)


@pytest.fixture(autouse=True)
def cleanup_sessions():
    """Clean up sessions after each test."""
    yield
    for session_id in list(session_manager.sessions.keys()):
        session_manager.delete_session(session_id)


@pytest.fixture
def session(client, smoking_csv):
    response = client.post(
        "/sessions",
        json={
            "question": "Is there a confounder between yellow fingers and lung cancer?",
            "tables": [str(smoking_csv)],
            "backend": {"mode": "scripted", "replay": str(REPLAY)},
        },
    )
    assert response.status_code == 200
    return response.json()


def test_health_check(client):
    """Test health check endpoint."""
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "healthy"}


def test_version(client):
    response = client.get("/version")
    assert response.status_code == 200
    assert "version" in response.json()


def test_create_session_runs_agent(session):
    """Test creating a session with a scripted backend."""
    assert len(session["session_id"]) > 0
    assert session["status"] == "answered"
    assert session["final_answer"] == '{"answer":"uncertain"}'
    assert session["graphs"] == ["data"]
    assert session["tables"] == ["data.csv"]
    assert [step["action"] for step in session["steps"]] == [
        "Generate Causal",
        "Determine edge directions",
        "Determine collider",
        "Determine confounder",
        "condition independent test",
    ]


def test_list_and_get_session(client, session):
    """Test listing sessions and getting session information."""
    response = client.get("/sessions")
    assert response.status_code == 200
    assert session["session_id"] in response.json()["sessions"]

    response = client.get(f"/sessions/{session['session_id']}")
    assert response.status_code == 200
    assert response.json() == session


def test_get_graph(client, session):
    response = client.get(f"/sessions/{session['session_id']}/graphs/data")
    assert response.status_code == 200
    data = response.json()
    assert data["name"] == "data"
    assert set(data["graph"]["nodes"]) == {"smoking", "yellow fingers", "lung cancer"}

    response = client.get(f"/sessions/{session['session_id']}/graphs/missing")
    assert response.status_code == 404


def test_delete_session(client, session):
    """Test deleting a session."""
    response = client.delete(f"/sessions/{session['session_id']}")
    assert response.status_code == 200
    assert client.get(f"/sessions/{session['session_id']}").status_code == 404


def test_get_nonexistent_session(client):
    """Test getting info for nonexistent session."""
    assert client.get("/sessions/nonexistent").status_code == 404
    assert client.delete("/sessions/nonexistent").status_code == 404


def test_create_session_with_missing_table(client, tmp_path):
    response = client.post(
        "/sessions",
        json={"question": "q", "tables": [str(tmp_path / "nope.csv")], "backend": {"mode": "scripted", "replay": str(REPLAY)}},
    )
    assert response.status_code == 400


def test_failed_backend_marks_session(client, smoking_csv, tmp_path):
    replay = tmp_path / "short.json"
    replay.write_text('["x\\nAction: Generate Causal\\nAction Input: {\\"filename\\": \\"data.csv\\"}"]')
    response = client.post(
        "/sessions",
        json={"question": "q", "tables": [str(smoking_csv)], "backend": {"mode": "scripted", "replay": str(replay)}},
    )
    assert response.status_code == 200
    data = response.json()
    assert data["status"] == "failed"
    assert data["final_answer"] is None
    assert len(data["steps"]) == 1
    assert "exhausted" in data["error"]


def test_list_tools(client):
    response = client.get("/tools")
    names = [tool["name"] for tool in response.json()["tools"]]
    assert names[:2] == ["condition independent test", "Generate Causal"]
    assert "calculate CATE" in names


def test_call_tool(client, smoking_csv):
    response = client.post(
        "/tools/condition independent test",
        json={
            "input": {"filename": "data.csv", "interesting var": ["yellow fingers", "lung cancer"], "condition": ["smoking"]},
            "tables": [str(smoking_csv)],
        },
    )
    assert response.status_code == 200
    data = response.json()
    assert data["ok"] is True
    assert data["observation"] == "yellow fingers and lung cancer is independent under conditions: smoking"


def test_call_tool_returns_generated_graph(client, smoking_csv):
    response = client.post(
        "/tools/Generate Causal",
        json={"input": '{"filename": "data.csv"}', "tables": [str(smoking_csv)]},
    )
    data = response.json()
    assert data["ok"] is True
    assert list(data["graphs"]) == ["data"]


def test_call_tool_errors(client, smoking_csv):
    assert client.post("/tools/Make Graph", json={"input": {}}).status_code == 404
    response = client.post("/tools/Generate Causal", json={"input": {"filename": "other.csv"}, "tables": [str(smoking_csv)]})
    assert response.status_code == 200
    assert response.json()["ok"] is False
    assert response.json()["observation"].startswith("Error: ")


def test_oracle_backend_is_rejected(client, smoking_csv):
    response = client.post(
        "/sessions", json={"question": "q", "tables": [str(smoking_csv)], "backend": {"mode": "oracle"}}
    )
    assert response.status_code == 400
