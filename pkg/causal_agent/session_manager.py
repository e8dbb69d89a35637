"""Agent session manager."""

import asyncio
import uuid
from pathlib import Path
from typing import Dict, Iterable, Optional

from .agent import SessionError, Transcript, run_session
from .backends import BackendConfig, ChatBackend, HttpChatBackend, build_backend
from .ci_test import DEFAULT_ALPHA
from .tools import GraphMemory, TableStore


class AgentSession:
    """One question answered against its own tables and graph memory."""

    def __init__(self, session_id: str, question: str, tables: TableStore, config: BackendConfig):
        """Initialize agent session.

        Args:
            session_id: Unique session identifier
            question: Question for the agent
            tables: Tables the session's tools can read
            config: Backend settings
        """
        self.session_id = session_id
        self.question = question
        self.tables = tables
        self.config = config
        self.memory = GraphMemory()
        self.transcript: Optional[Transcript] = None
        self.error: Optional[str] = None
        self.lock = asyncio.Lock()

    @property
    def status(self) -> str:
        if self.error is not None:
            return "failed"
        if self.transcript is None:
            return "pending"
        return "answered" if self.transcript.final_answer is not None else "exhausted"

    async def run(self, backend: Optional[ChatBackend] = None, alpha: float = DEFAULT_ALPHA) -> Transcript:
        """Run the ReAct loop once; later calls return the stored transcript.

        Args:
            backend: Backend override (built from the config when omitted)
            alpha: Significance level of the independence and PC tools

        Returns:
            The session transcript (partial when the backend failed)
        """
        async with self.lock:
            if self.transcript is not None:
                return self.transcript
            owned = backend is None
            backend = backend or build_backend(self.config)
            try:
                self.transcript = await run_session(
                    self.question,
                    self.tables,
                    backend,
                    icl=self.config.icl,
                    max_iterations=self.config.max_iterations,
                    alpha=alpha,
                    memory=self.memory,
                )
            except SessionError as e:
                self.error = str(e)
                self.transcript = e.transcript
            finally:
                if owned and isinstance(backend, HttpChatBackend):
                    await backend.close()
            return self.transcript

    def summary(self) -> dict:
        transcript = self.transcript
        return {
            "session_id": self.session_id,
            "question": self.question,
            "status": self.status,
            "tables": self.tables.names(),
            "graphs": self.memory.names(),
            "final_answer": transcript.final_answer if transcript else None,
            "steps": transcript.to_records()[1:-1] if transcript else [],
            "error": self.error,
        }


class SessionManager:
    """Manages multiple agent sessions."""

    def __init__(self):
        """Initialize session manager."""
        self.sessions: Dict[str, AgentSession] = {}

    def create_session(
        self,
        question: str,
        table_paths: Iterable[str | Path],
        config: Optional[BackendConfig] = None,
    ) -> str:
        """Create a new agent session.

        Args:
            question: Question for the agent
            table_paths: CSV files the session can read
            config: Backend settings (environment defaults when omitted)

        Returns:
            Session ID

        Raises:
            TableError: If a table cannot be loaded
        """
        session_id = str(uuid.uuid4())
        tables = TableStore.from_paths(table_paths)
        self.sessions[session_id] = AgentSession(session_id, question, tables, config or BackendConfig.from_env())
        return session_id

    def get_session(self, session_id: str) -> Optional[AgentSession]:
        """Get an agent session by ID.

        Args:
            session_id: Session identifier

        Returns:
            AgentSession or None if not found
        """
        return self.sessions.get(session_id)

    def delete_session(self, session_id: str) -> bool:
        """Delete an agent session.

        Args:
            session_id: Session identifier

        Returns:
            True if session was deleted, False if not found
        """
        return self.sessions.pop(session_id, None) is not None

    def list_sessions(self) -> list[str]:
        """List all session IDs.

        Returns:
            List of session IDs
        """
        return list(self.sessions.keys())
