"""Utility functions for model output and observation text."""

import json
import re

import numpy as np

_decoder = json.JSONDecoder()


def format_number(value: float, digits: int = 4) -> str:
    """Render a number with ``digits`` significant digits; zero renders as ``0.000``.

    Args:
        value: Number to render
        digits: Significant digits

    Returns:
        Positional (non-scientific) text
    """
    if value == 0:
        return "0.000"
    return np.format_float_positional(float(value), precision=digits, unique=False, fractional=False, trim="k").rstrip(".")


def extract_json_object(text: str) -> tuple[object, str]:
    """Decode the first JSON value in ``text``, ignoring whatever follows it.

    Args:
        text: Text starting (after optional whitespace and code fences) with JSON

    Returns:
        (decoded value, the exact JSON text consumed)

    Raises:
        ValueError: If no JSON value starts the text
    """
    stripped = strip_code_fence(text).lstrip()
    value, end = _decoder.raw_decode(stripped)
    return value, stripped[:end]


def strip_code_fence(text: str) -> str:
    """Remove a leading markdown code fence such as ```json."""
    return re.sub(r"^\s*```[a-zA-Z]*\s*", "", text)


def normalize_key(key: str) -> str:
    """Canonical form of a tool argument key: 'interesting_var' -> 'interesting var'."""
    key = re.sub(r"[\s_]+", " ", key.strip().lower())
    return key.replace("analyze", "analyse")
