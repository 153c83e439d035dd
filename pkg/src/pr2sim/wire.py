"""Length-prefixed JSON wire protocol and canonical byte serialization.

Frame layout: 4-byte big-endian unsigned payload length, then a UTF-8 JSON
object {"type": ..., "seq": ..., "body": {...}}.  The decoder is strict:
unknown fields, wrong types and bad framing each raise a distinct error.

Observation digests are 64-bit FNV-1a over the canonical serialization
defined in canonical_observation_bytes (documented bit-exactly in
docs/protocol.md).
"""

from __future__ import annotations

import base64
import json
import struct

import numpy as np

SCHEMA_VERSION = "pr2sim/1"

FNV_OFFSET = 0xcbf29ce484222325
FNV_PRIME = 0x100000001b3
_MASK = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes, h: int = FNV_OFFSET) -> int:
    for b in data:
        h = ((h ^ b) * FNV_PRIME) & _MASK
    return h


class FramingError(ValueError):
    """Length prefix inconsistent with the available bytes."""


class JsonError(ValueError):
    """Payload is not valid UTF-8 JSON."""


class SchemaError(ValueError):
    """Well-formed JSON violating the message schema."""


MESSAGE_TYPES = ("hello", "obs", "act", "reset", "result", "bye", "error")

_BODY_FIELDS = {
    "hello": {"task_id", "robot", "camera", "binary_frames", "schema"},
    "obs": {"agent", "cam", "language_instruction", "pick", "tick", "extras"},
    "act": {"arms", "legs", "pick", "release", "tick"},
    "reset": set(),
    "result": {"score"},
    "bye": set(),
    "error": {"message"},
}
_GROUP_FIELDS = {"ctrl_mode", "joint_values", "stiffness", "dampings"}


def encode_message(msg: dict) -> bytes:
    _validate(msg)
    payload = json.dumps(msg, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return struct.pack(">I", len(payload)) + payload


def decode_message(frame: bytes) -> dict:
    """Decode one complete frame; raises on trailing or missing bytes."""
    if len(frame) < 4:
        raise FramingError(f"frame shorter than length prefix ({len(frame)} bytes)")
    (n,) = struct.unpack(">I", frame[:4])
    if len(frame) - 4 != n:
        raise FramingError(f"length prefix {n} but payload has {len(frame) - 4} bytes")
    try:
        msg = json.loads(frame[4:].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise JsonError(str(exc)) from exc
    _validate(msg)
    return msg


def _validate(msg) -> None:
    if not isinstance(msg, dict):
        raise SchemaError("message is not a JSON object")
    extra = set(msg) - {"type", "seq", "body"}
    if extra:
        raise SchemaError(f"unknown top-level fields {sorted(extra)}")
    for req in ("type", "seq", "body"):
        if req not in msg:
            raise SchemaError(f"missing field {req!r}")
    if msg["type"] not in MESSAGE_TYPES:
        raise SchemaError(f"unknown message type {msg['type']!r}")
    if not isinstance(msg["seq"], int) or msg["seq"] < 0:
        raise SchemaError("seq must be a non-negative integer")
    body = msg["body"]
    if not isinstance(body, dict):
        raise SchemaError("body must be an object")
    allowed = _BODY_FIELDS[msg["type"]]
    extra = set(body) - allowed
    if extra:
        raise SchemaError(f"unknown {msg['type']} body fields {sorted(extra)}")
    if msg["type"] == "act":
        for group in ("arms", "legs"):
            if group not in body:
                raise SchemaError(f"act body missing {group!r}")
            g = body[group]
            if not isinstance(g, dict):
                raise SchemaError(f"{group} must be an object")
            bad = set(g) - _GROUP_FIELDS
            if bad:
                raise SchemaError(f"unknown {group} fields {sorted(bad)}")
            if g.get("ctrl_mode") not in ("position", "velocity", "effort"):
                raise SchemaError(f"{group}.ctrl_mode invalid")
        if body.get("pick") not in (None, "left_hand", "right_hand"):
            raise SchemaError("act.pick invalid")
        if not isinstance(body.get("release", False), bool):
            raise SchemaError("act.release must be a boolean")


# ---------------------------------------------------------------------------
# array <-> json helpers

def pack_f64(arr) -> str:
    return base64.b64encode(np.asarray(arr, dtype="<f8").tobytes()).decode("ascii")


def unpack_f64(s: str, shape=None) -> np.ndarray:
    arr = np.frombuffer(base64.b64decode(s.encode("ascii")), dtype="<f8").copy()
    return arr.reshape(shape) if shape is not None else arr


def pack_u8(arr) -> str:
    return base64.b64encode(np.asarray(arr, dtype=np.uint8).tobytes()).decode("ascii")


def unpack_u8(s: str, shape=None) -> np.ndarray:
    arr = np.frombuffer(base64.b64decode(s.encode("ascii")), dtype=np.uint8).copy()
    return arr.reshape(shape) if shape is not None else arr


def floats(arr) -> list:
    return [float(x) for x in np.asarray(arr, dtype=float).ravel()]


# ---------------------------------------------------------------------------
# socket framing

MAX_FRAME = 64 * 1024 * 1024


def read_frame(sock) -> bytes | None:
    """Read one frame from a socket; None on orderly shutdown at a boundary."""
    head = _read_exact(sock, 4, at_boundary=True)
    if head is None:
        return None
    (n,) = struct.unpack(">I", head)
    if n > MAX_FRAME:
        raise FramingError(f"frame of {n} bytes exceeds limit")
    if n == 0:
        return head
    payload = _read_exact(sock, n, at_boundary=False)
    return head + payload


def _read_exact(sock, n: int, at_boundary: bool) -> bytes | None:
    buf = b""
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            if at_boundary and not buf:
                return None
            raise FramingError("connection closed mid-frame")
        buf += chunk
    return buf
