"""Check a recorded chat trace against an expanded context.

Roles-only mode compares message count and positionwise roles. Content mode
additionally requires every environment-bound slot value to occur as a
substring of its message, in slot order; symbolic slots impose no
constraint (the language abstracts their wording).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .diagnostics import EMPTY_SPAN, Diagnostic, error
from .expansion import ExpandedPrompt

ROLE_FROM_API = {"system": "S", "user": "U", "assistant": "A", "tool": "T"}
ROLE_TO_API = {v: k for k, v in ROLE_FROM_API.items()}


@dataclass(frozen=True)
class Trace:
    messages: tuple[tuple[str, str], ...]  # (role letter, content)

    def roles(self) -> list[str]:
        return [r for r, _ in self.messages]


@dataclass(frozen=True)
class Mismatch:
    position: int  # 1-based message position
    expected: str
    observed: str

    def to_json(self) -> dict:
        return {"position": self.position, "expected": self.expected,
                "observed": self.observed}


@dataclass(frozen=True)
class ConformanceReport:
    verdict: str  # pass | fail
    mode: str     # roles-only | content
    mismatches: tuple[Mismatch, ...] = ()

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "mode": self.mode,
                "mismatches": [m.to_json() for m in self.mismatches]}

    def to_text(self) -> str:
        if self.passed:
            return f"pass ({self.mode})\n"
        lines = [f"fail ({self.mode}): {len(self.mismatches)} mismatch(es)"]
        for m in self.mismatches:
            lines.append(f"  message {m.position}: expected {m.expected}, "
                         f"observed {m.observed}")
        return "\n".join(lines) + "\n"


def load_trace(text: str, *, jsonl: bool = False,
               file: str = "<trace>") -> tuple[Trace | None, list[Diagnostic]]:
    """Parse a chat-API message array (or JSON-lines with jsonl=True)."""
    diags: list[Diagnostic] = []
    try:
        if jsonl:
            data = [json.loads(line) for line in text.splitlines() if line.strip()]
        else:
            data = json.loads(text)
    except json.JSONDecodeError as e:
        diags.append(error("C-BAD-TRACE", f"malformed trace JSON: {e}", EMPTY_SPAN, file))
        return None, diags
    if not isinstance(data, list):
        diags.append(error("C-BAD-TRACE", "trace must be a JSON array of messages",
                           EMPTY_SPAN, file))
        return None, diags
    messages: list[tuple[str, str]] = []
    for i, entry in enumerate(data):
        if not isinstance(entry, dict) or not isinstance(entry.get("role"), str) \
                or not isinstance(entry.get("content"), str):
            diags.append(error("C-BAD-TRACE",
                               f"message {i} needs string 'role' and 'content' fields",
                               EMPTY_SPAN, file))
            return None, diags
        role = ROLE_FROM_API.get(entry["role"])
        if role is None:
            diags.append(error("C-BAD-TRACE",
                               f"message {i} has unknown role {entry['role']!r}",
                               EMPTY_SPAN, file))
            return None, diags
        messages.append((role, entry["content"]))
    return Trace(tuple(messages)), diags


def check_trace(expanded: ExpandedPrompt, trace: Trace, mode: str = "roles-only",
                *, completion: bool = False,
                normalize_ws: bool = False) -> ConformanceReport:
    """Structural comparison; failures are report entries, never exceptions.

    completion=True lets a single-message N-format expansion match a trace
    message of any role.
    """
    mismatches: list[Mismatch] = []
    expected = expanded.messages
    observed = trace.messages
    if len(expected) != len(observed):
        mismatches.append(Mismatch(
            0, f"{len(expected)} message(s)", f"{len(observed)} message(s)"))
    for pos, (exp, obs) in enumerate(zip(expected, observed), start=1):
        obs_role, obs_content = obs
        if exp.role == "N":
            if not completion:
                mismatches.append(Mismatch(pos, "role N (completion mode required)",
                                           f"role {obs_role}"))
        elif exp.role != obs_role:
            mismatches.append(Mismatch(pos, f"role {exp.role}", f"role {obs_role}"))
            continue
        if mode == "content":
            mismatches.extend(_check_content(pos, exp, obs_content, normalize_ws))
    verdict = "pass" if not mismatches else "fail"
    return ConformanceReport(verdict, mode, tuple(mismatches))


def _check_content(pos: int, message, content: str,
                   normalize_ws: bool) -> list[Mismatch]:
    out: list[Mismatch] = []
    if normalize_ws:
        content = _collapse_ws(content)
    search_from = 0
    for slot in message.slots:
        if not slot.bound or not slot.text:
            continue
        needle = _collapse_ws(slot.text) if normalize_ws else slot.text
        at = content.find(needle, search_from)
        if at < 0:
            excerpt = content[max(0, search_from):search_from + 40]
            out.append(Mismatch(pos, f"slot value {needle!r} (in order)",
                                f"not found after offset {search_from}: {excerpt!r}..."))
            continue
        # overlapping values may match, but only at distinct offsets
        search_from = at + 1
    return out


def _collapse_ws(text: str) -> str:
    return re.sub(r"\s+", " ", text)


def synthesize_trace(expanded: ExpandedPrompt) -> Trace:
    """Trace a faithful system would have sent: roles plus the concatenated
    bound slot values. Passes both modes by construction."""
    messages = []
    for m in expanded.messages:
        role = m.role if m.role != "N" else "S"
        content = "\n".join(s.text for s in m.slots if s.bound and s.text)
        messages.append((role, content))
    return Trace(tuple(messages))


def trace_to_api_json(trace: Trace) -> str:
    return json.dumps(
        [{"role": ROLE_TO_API[r], "content": c} for r, c in trace.messages],
        ensure_ascii=False)
