"""The constrained command language the DM issues to the RN.

Grammar (one command per message, case-insensitive):

    command  := move | turn | stop | image
    move     := MOVEVERB dir-lin number unit
    turn     := TURNVERB dir-rot number ("degrees"|"deg")
    stop     := "stop" | "halt"
    image    := "send" ("image"|"picture"|"photo")
    MOVEVERB := "move"|"go"|"drive"   TURNVERB := "turn"|"rotate"
    dir-lin  := "forward"|"ahead"|"back"|"backward"|"backwards"
    dir-rot  := "left"|"right"
    unit     := "feet"|"foot"|"ft"|"meters"|"meter"|"m"
    number   := decimal numeral | number word (one..twenty)

Internal units are meters and degrees. Synonyms are accepted on input but
format() emits a single canonical form, so logs stay uniform.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from ozbench.protocol import CAPTURE, HALT, ROTATE, TRANSLATE, MotionPrimitive

FORWARD = "forward"
BACK = "back"
LEFT = "left"
RIGHT = "right"

FEET_TO_METERS = 0.3048


@dataclass(frozen=True)
class Move:
    direction: str  # forward | back
    distance: float  # meters, > 0


@dataclass(frozen=True)
class Turn:
    direction: str  # left | right
    angle: float  # degrees, (0, 360]


@dataclass(frozen=True)
class Stop:
    pass


@dataclass(frozen=True)
class SendImage:
    pass


Command = Union[Move, Turn, Stop, SendImage]


class CommandParseError(ValueError):
    """Typed parse failure with the offending span and an expected form."""

    def __init__(self, code: str, span: tuple[int, int], expected: str):
        self.code = code
        self.span = span
        self.expected = expected
        super().__init__(f"{code} at {span[0]}..{span[1]}, expected {expected}")


_MOVE_VERBS = frozenset({"move", "go", "drive"})
_TURN_VERBS = frozenset({"turn", "rotate"})
_STOP_WORDS = frozenset({"stop", "halt"})
_IMAGE_WORDS = frozenset({"image", "picture", "photo"})

_LIN_DIRS = {
    "forward": FORWARD,
    "ahead": FORWARD,
    "back": BACK,
    "backward": BACK,
    "backwards": BACK,
}
_ROT_DIRS = frozenset({LEFT, RIGHT})

_LIN_UNITS = {
    "feet": FEET_TO_METERS,
    "foot": FEET_TO_METERS,
    "ft": FEET_TO_METERS,
    "meters": 1.0,
    "meter": 1.0,
    "m": 1.0,
}
_DEG_UNITS = frozenset({"degrees", "deg"})

NUMBER_WORDS = {
    "one": 1.0, "two": 2.0, "three": 3.0, "four": 4.0, "five": 5.0,
    "six": 6.0, "seven": 7.0, "eight": 8.0, "nine": 9.0, "ten": 10.0,
    "eleven": 11.0, "twelve": 12.0, "thirteen": 13.0, "fourteen": 14.0,
    "fifteen": 15.0, "sixteen": 16.0, "seventeen": 17.0, "eighteen": 18.0,
    "nineteen": 19.0, "twenty": 20.0,
}

_NUMERAL_RE = re.compile(r"^\d+(\.\d+)?$")
_TOKEN_RE = re.compile(r"\S+")


def _tokenize(text: str) -> list[tuple[str, int, int]]:
    return [(m.group(0).lower(), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def _parse_number(token: str) -> float | None:
    if token in NUMBER_WORDS:
        return NUMBER_WORDS[token]
    if _NUMERAL_RE.match(token):
        return float(token)
    return None


def parse(text: str) -> Command:
    """Parse one command. Raises CommandParseError on anything else.

    Total over strings: any input either yields a Command or a typed error.
    """
    tokens = _tokenize(text)
    end = len(text)

    if not tokens:
        raise CommandParseError(
            "unknown_verb", (0, 0), "move | turn | stop | send image"
        )

    word, start, stop_ = tokens[0]

    if word in _STOP_WORDS:
        _require_end(tokens, 1, end)
        return Stop()

    if word == "send":
        if len(tokens) < 2 or tokens[1][0] not in _IMAGE_WORDS:
            span = (tokens[1][1], tokens[1][2]) if len(tokens) > 1 else (stop_, stop_)
            raise CommandParseError("unknown_verb", span, "send image | send picture | send photo")
        _require_end(tokens, 2, end)
        return SendImage()

    if word in _MOVE_VERBS:
        if len(tokens) < 2 or tokens[1][0] not in _LIN_DIRS:
            span = (tokens[1][1], tokens[1][2]) if len(tokens) > 1 else (stop_, stop_)
            raise CommandParseError(
                "unknown_verb", span, "forward | ahead | back | backward | backwards"
            )
        direction = _LIN_DIRS[tokens[1][0]]
        if len(tokens) < 3:
            raise CommandParseError("missing_magnitude", (end, end), "<number> <unit>")
        value = _parse_number(tokens[2][0])
        if value is None or value <= 0:
            raise CommandParseError(
                "bad_number", (tokens[2][1], tokens[2][2]), "a positive number"
            )
        if len(tokens) < 4 or tokens[3][0] not in _LIN_UNITS:
            span = (tokens[3][1], tokens[3][2]) if len(tokens) > 3 else (end, end)
            raise CommandParseError("missing_unit", span, "feet | ft | meters | m")
        # scale via integer-valued factors so 5 feet is exactly 1.524 m
        factor = _LIN_UNITS[tokens[3][0]]
        meters = value if factor == 1.0 else value * 3048.0 / 10000.0
        _require_end(tokens, 4, end)
        return Move(direction, meters)

    if word in _TURN_VERBS:
        if len(tokens) < 2 or tokens[1][0] not in _ROT_DIRS:
            span = (tokens[1][1], tokens[1][2]) if len(tokens) > 1 else (stop_, stop_)
            raise CommandParseError("unknown_verb", span, "left | right")
        direction = tokens[1][0]
        if len(tokens) < 3:
            raise CommandParseError("missing_magnitude", (end, end), "<number> degrees")
        value = _parse_number(tokens[2][0])
        if value is None or value <= 0 or value > 360:
            raise CommandParseError(
                "bad_number", (tokens[2][1], tokens[2][2]), "an angle in (0, 360]"
            )
        if len(tokens) < 4 or tokens[3][0] not in _DEG_UNITS:
            span = (tokens[3][1], tokens[3][2]) if len(tokens) > 3 else (end, end)
            raise CommandParseError("missing_unit", span, "degrees | deg")
        _require_end(tokens, 4, end)
        return Turn(direction, value)

    raise CommandParseError(
        "unknown_verb", (start, stop_), "move | turn | stop | send image"
    )


def _require_end(tokens: list[tuple[str, int, int]], used: int, end: int) -> None:
    if len(tokens) > used:
        raise CommandParseError(
            "trailing_input", (tokens[used][1], end), "end of command"
        )


def format_number(value: float) -> str:
    """At most 3 decimals, trailing zeros trimmed: 2.0 -> '2', 1.524 -> '1.524'.

    Positive magnitudes below the 3-decimal floor render as 0.001 rather
    than an unparseable 0 (canonical text must stay inside the grammar).
    """
    text = f"{value:.3f}".rstrip("0").rstrip(".")
    if text in ("", "0") and value > 0:
        return "0.001"
    return text if text else "0"


def format(command: Command) -> str:  # noqa: A001 - canonical name for the op
    """Canonical text form, unique per command value."""
    if isinstance(command, Move):
        return f"move {command.direction} {format_number(command.distance)} m"
    if isinstance(command, Turn):
        return f"turn {command.direction} {format_number(command.angle)} deg"
    if isinstance(command, Stop):
        return "stop"
    if isinstance(command, SendImage):
        return "send image"
    raise TypeError(f"not a command: {command!r}")


def compile(command: Command) -> MotionPrimitive:  # noqa: A001
    """Lower a command to the simulator's motion vocabulary.

    Counterclockwise rotation is positive, so a left turn rotates by +angle
    and a right turn by -angle; backing up is a negative translate.
    """
    if isinstance(command, Move):
        sign = 1.0 if command.direction == FORWARD else -1.0
        return MotionPrimitive(TRANSLATE, sign * command.distance)
    if isinstance(command, Turn):
        sign = 1.0 if command.direction == LEFT else -1.0
        return MotionPrimitive(ROTATE, sign * command.angle)
    if isinstance(command, Stop):
        return MotionPrimitive(HALT)
    if isinstance(command, SendImage):
        return MotionPrimitive(CAPTURE)
    raise TypeError(f"not a command: {command!r}")
