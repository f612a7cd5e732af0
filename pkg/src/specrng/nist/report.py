"""Rendering suite results as JSON, a plain table, or the legacy checkmark layout."""

from __future__ import annotations

import json
from typing import Sequence

from .suite import DISPLAY_NAMES, TestResult, Verdict

NOT_APPLICABLE_SENTINEL = "-1.000000"


def to_json(results: Sequence[TestResult]) -> str:
    return json.dumps([r.to_dict() for r in results], indent=2)


def to_text(results: Sequence[TestResult]) -> str:
    width = max(len(DISPLAY_NAMES[r.kind]) for r in results)
    lines = [f"{'Test':<{width}}  {'Verdict':<13}  p-value(s)", "-" * (width + 40)]
    for r in results:
        if r.p_values is None:
            shown = r.detail.get("reason") or r.detail.get("error", "")
        elif len(r.p_values) == 1:
            shown = f"{r.p_values[0]:.6f}"
        else:
            shown = f"min {min(r.p_values):.6f} of {len(r.p_values)}"
        lines.append(f"{DISPLAY_NAMES[r.kind]:<{width}}  {r.verdict.value:<13}  {shown}")
    return "\n".join(lines)


def to_paper_compat(results: Sequence[TestResult]) -> str:
    """Checkmark/cross plus one p-value per row; inapplicable rows print -1.000000."""
    width = max(len(DISPLAY_NAMES[r.kind]) for r in results)
    lines = []
    for r in results:
        mark = "✓" if r.verdict is Verdict.Pass else "✗"
        value = NOT_APPLICABLE_SENTINEL if r.p_values is None else f"{r.p_value:.6f}"
        lines.append(f"{DISPLAY_NAMES[r.kind]:>{width}}  {mark}  {value:>10}")
    return "\n".join(lines)


RENDERERS = {"json": to_json, "text": to_text, "paper-compat": to_paper_compat}
