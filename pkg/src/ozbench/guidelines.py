"""Rule-driven decision support for the DM wizard.

Classifies each participant utterance as executable, needing
clarification, or out of capability, and drafts the DM's outbound
messages. Drafts are suggestions only; a human clicks send.

Rules live in an external JSON file so the guideline set can be refined
without touching code. Rules are ordered, first match wins, and every
file must end with a catch-all clarify rule so classification is total.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from ozbench import commands
from ozbench.protocol import Channel, MessageKind

EXECUTABLE = "executable"
CLARIFY = "clarify"
REJECT = "reject"

_ACTIONS = ("translate", "clarify", "reject")

_MOTION_VERB_RE = re.compile(r"\b(move|go|drive|turn|rotate)\b")
_NUMERAL_RE = re.compile(r"\b\d+(\.\d+)?\b")
_NUMBER_WORD_RE = re.compile(
    r"\b(" + "|".join(sorted(commands.NUMBER_WORDS)) + r")\b"
)
_SLOT_RE = re.compile(r"\{(\w+)\}")
_PUNCT_RE = re.compile(r"[.,!?;:]")


@dataclass(frozen=True)
class Rule:
    id: str
    pattern: re.Pattern
    action: str  # translate | clarify | reject
    template: str
    guard: Optional[str] = None


@dataclass(frozen=True)
class Disposition:
    kind: str  # executable | clarify | reject
    text: str  # canonical command text, or the response draft
    rule_id: str


@dataclass(frozen=True)
class Draft:
    channel: Channel
    kind: MessageKind
    text: str


class RulesError(ValueError):
    def __init__(self, code: str, detail: str = ""):
        self.code = code
        self.detail = detail
        super().__init__(f"{code}{': ' + detail if detail else ''}")


def normalize(utterance: str) -> str:
    """Lowercase, drop punctuation, collapse whitespace."""
    return " ".join(_PUNCT_RE.sub(" ", utterance.lower()).split())


def _has_motion_verb(lowered: str) -> bool:
    return _MOTION_VERB_RE.search(lowered) is not None


def _lacks_magnitude(lowered: str) -> bool:
    return _NUMERAL_RE.search(lowered) is None and _NUMBER_WORD_RE.search(lowered) is None


def _parses_as_ccl(lowered: str) -> bool:
    try:
        commands.parse(normalize(lowered))
        return True
    except commands.CommandParseError:
        return False


_GUARDS: dict[str, Callable[[str], bool]] = {
    "has_motion_verb": _has_motion_verb,
    "lacks_magnitude": _lacks_magnitude,
    "parses_as_ccl": _parses_as_ccl,
}


def load_rules(path: str | Path) -> list[Rule]:
    """Load and validate an ordered ruleset."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise RulesError("file_not_found", str(path)) from None
    except OSError as exc:
        raise RulesError("unreadable", f"{path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RulesError("bad_json", str(exc)) from None
    if not isinstance(doc, dict) or not isinstance(doc.get("rules"), list) or not doc["rules"]:
        raise RulesError("bad_schema", "expected {\"rules\": [...]} with at least one rule")

    rules: list[Rule] = []
    for i, entry in enumerate(doc["rules"]):
        if not isinstance(entry, dict):
            raise RulesError("bad_schema", f"rule {i} is not an object")
        rule_id = entry.get("id")
        if not isinstance(rule_id, str) or not rule_id:
            raise RulesError("bad_schema", f"rule {i} has no id")
        raw_pattern = entry.get("pattern")
        if not isinstance(raw_pattern, str):
            raise RulesError("bad_pattern", rule_id)
        try:
            pattern = re.compile(raw_pattern)
        except re.error:
            raise RulesError("bad_pattern", rule_id) from None
        action = entry.get("action")
        if action not in _ACTIONS:
            raise RulesError("unknown_action", f"{rule_id}: {action!r}")
        guard = entry.get("guard")
        if guard is not None and guard not in _GUARDS:
            raise RulesError("unknown_guard", f"{rule_id}: {guard!r}")
        template = entry.get("template")
        if not isinstance(template, str):
            raise RulesError("bad_schema", f"{rule_id} has no template")
        rules.append(Rule(id=rule_id, pattern=pattern, action=action, template=template, guard=guard))

    last = rules[-1]
    if (
        last.action != "clarify"
        or last.guard is not None
        or last.pattern.search("") is None
        or last.pattern.search("arbitrary probe 42") is None
    ):
        raise RulesError("missing_catch_all", "last rule must be an unconditional clarify")
    return rules


def _fill(template: str, lowered: str, match: re.Match) -> str:
    groups = match.groupdict()

    def lookup(m: re.Match) -> str:
        name = m.group(1)
        if name == "ccl":
            return normalize(lowered)
        value = groups.get(name)
        return value if value is not None else m.group(0)

    return _SLOT_RE.sub(lookup, template)


def classify(rules: list[Rule], utterance: str) -> Disposition:
    """First matching rule (pattern and guard) decides.

    A translate rule yields Executable only when its candidate command
    text actually parses; otherwise the search continues, so everything
    the engine marks executable is guaranteed well-formed for the RN.
    """
    lowered = utterance.lower()
    for rule in rules:
        match = rule.pattern.search(lowered)
        if match is None:
            continue
        if rule.guard is not None and not _GUARDS[rule.guard](lowered):
            continue
        if rule.action == "translate":
            candidate = _fill(rule.template, lowered, match)
            try:
                command = commands.parse(candidate)
            except commands.CommandParseError:
                continue
            return Disposition(EXECUTABLE, commands.format(command), rule.id)
        text = _fill(rule.template, lowered, match)
        kind = CLARIFY if rule.action == "clarify" else REJECT
        return Disposition(kind, text, rule.id)
    # load_rules guarantees a catch-all, so this is unreachable
    raise RulesError("missing_catch_all", "no rule matched")


def _acknowledgment(command: commands.Command) -> str:
    if isinstance(command, commands.Move):
        verb = "forward" if command.direction == commands.FORWARD else "back"
        return f"Moving {verb} {commands.format_number(command.distance)} m."
    if isinstance(command, commands.Turn):
        return f"Turning {command.direction} {commands.format_number(command.angle)} deg."
    if isinstance(command, commands.Stop):
        return "Stopping."
    return "Sending you an image."


def suggest(disposition: Disposition) -> list[Draft]:
    """Pre-filled outbound drafts for the DM console. Never auto-sent."""
    if disposition.kind == EXECUTABLE:
        command = commands.parse(disposition.text)
        return [
            Draft(Channel.DM_RN_CHAT, MessageKind.COMMAND, disposition.text),
            Draft(Channel.DM_P_CHAT, MessageKind.CHAT, _acknowledgment(command)),
        ]
    return [Draft(Channel.DM_P_CHAT, MessageKind.CHAT, disposition.text)]
