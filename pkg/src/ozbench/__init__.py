"""Two-wizard human-robot dialogue experimentation platform.

A session server routes typed messages between a participant, a dialogue
manager (DM) console, a robot navigator (RN) console, and a deterministic
2D robot simulator, while recording every event to an append-only log that
can be replayed bit-for-bit.
"""

__version__ = "0.1.0"

from ozbench.protocol import (
    Channel,
    Envelope,
    MessageKind,
    Role,
    decode,
    encode,
    validate_route,
)

__all__ = [
    "Channel",
    "Envelope",
    "MessageKind",
    "Role",
    "decode",
    "encode",
    "validate_route",
]
