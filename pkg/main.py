"""Main entry point for the causal agent server (development only)."""

from causal_agent.server import main

if __name__ == "__main__":
    main()
