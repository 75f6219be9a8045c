"""Collects one verdict line per acceptance criterion for the terminal summary."""
from __future__ import annotations

from typing import List

LINES: List[str] = []


def record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}: {title} ({detail})"
    LINES.append(line)
    print(line)
