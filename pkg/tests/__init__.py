"""Tests for the causal agent."""
