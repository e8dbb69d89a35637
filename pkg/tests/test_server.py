"""Tests for the server entry point."""

import logging
from unittest.mock import patch

import pytest

from causal_agent.server import main


@pytest.fixture(autouse=True)
def no_credentials(monkeypatch):
    monkeypatch.delenv("CAUSAL_AGENT_API_KEY", raising=False)
    monkeypatch.delenv("OPENAI_API_KEY", raising=False)


def test_main_passes_host_port_and_log_level_to_uvicorn(caplog):
    argv = ["causal-agent-server", "--host", "0.0.0.0", "--port", "9001", "--log-level", "info"]
    with patch("sys.argv", argv), patch("causal_agent.server.uvicorn.run") as run:
        with caplog.at_level(logging.INFO, logger="causal_agent.server"):
            main()

    run.assert_called_once_with("causal_agent.api:app", host="0.0.0.0", port=9001, log_level="info")
    assert "no chat API key" in caplog.text


def test_main_rejects_unknown_log_level():
    with patch("sys.argv", ["causal-agent-server", "--log-level", "loud"]), \
            patch("causal_agent.server.uvicorn.run") as run:
        with pytest.raises(SystemExit) as excinfo:
            main()
    assert excinfo.value.code == 2
    run.assert_not_called()
