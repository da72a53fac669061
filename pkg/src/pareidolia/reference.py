"""Packaged neutral reference face."""
from __future__ import annotations

from importlib import resources

from .formats import parse_reference


def load_default_reference():
    path = resources.files("pareidolia.data") / "reference_landmarks.json"
    return parse_reference(path.read_text(encoding="utf-8"))
