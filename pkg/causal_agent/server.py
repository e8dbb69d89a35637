"""Server entry point for the causal agent service."""

import argparse
import logging
import sys

import uvicorn

from .backends import BackendConfig

logger = logging.getLogger(__name__)

LOG_LEVELS = ("debug", "info", "warning", "error")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Causal Agent Server")
    parser.add_argument("--host", default="127.0.0.1", help="Host to bind to (default: 127.0.0.1 for security)")
    parser.add_argument("--port", type=int, default=8000, help="Port to bind to")
    parser.add_argument("--log-level", choices=LOG_LEVELS, default="warning",
                        help="Log level of the causal_agent loggers and uvicorn (default: warning)")
    return parser


def main():
    """Run the FastAPI server."""
    args = build_parser().parse_args()

    logging.basicConfig(
        level=args.log_level.upper(),
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    config = BackendConfig.from_env()
    if config.api_key is None:
        logger.warning("no chat API key in the environment; sessions must use the scripted backend")
    logger.info("chat backend %s at %s", config.model, config.base_url)
    print(f"Causal agent API on http://{args.host}:{args.port} (docs at /docs)", file=sys.stderr)

    uvicorn.run(
        "causal_agent.api:app",
        host=args.host,
        port=args.port,
        log_level=args.log_level,
    )


if __name__ == "__main__":
    main()
