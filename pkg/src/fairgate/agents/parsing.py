"""Tolerant JSON extraction from LLM output.

Models wrap JSON in Markdown fences and prose despite instructions, so
parsing tries, in order: fenced code blocks, the whole stripped text,
then the first complete JSON value found by scanning for ``{`` or ``[``.
"""

from __future__ import annotations

import json
import re
from typing import Any

_FENCE_RE = re.compile(r"```(?:[a-zA-Z0-9_-]*)?\s*\n(.*?)```", re.DOTALL)


def extract_json(text: str) -> Any | None:
    """Return the first complete JSON value in ``text``, or None."""
    if text is None:
        return None
    stripped = text.strip()
    if not stripped:
        return None

    for block in _FENCE_RE.findall(stripped):
        value = _parse_whole(block.strip())
        if value is not None:
            return value

    value = _parse_whole(stripped)
    if value is not None:
        return value

    return _scan_for_value(stripped)


def _parse_whole(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return None


def _scan_for_value(text: str):
    decoder = json.JSONDecoder()
    for pos, char in enumerate(text):
        if char not in "{[":
            continue
        try:
            value, _ = decoder.raw_decode(text, pos)
        except json.JSONDecodeError:
            continue
        return value
    return None
