"""Causal agent: tool-augmented causal analysis of tabular data."""

__version__ = "0.1.0"
