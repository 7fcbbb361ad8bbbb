"""Newline-delimited JSON wire protocol shared by the edge and cloud services
and the conveyor simulator. One compact JSON document per line, UTF-8, with a
mandatory version field; images travel as base64-encoded PNG payloads.

Message types and fields are enumerated in docs/protocol.md.
"""

from __future__ import annotations

import base64
import binascii
import json
import threading
from dataclasses import dataclass

from ..errors import ImageFormatError, ProtocolError
from ..imaging import RgbImage, image_from_png_bytes, image_to_png_bytes

PROTOCOL_VERSION = 1

DETECT_REQUEST = "DetectRequest"
DETECT_RESPONSE = "DetectResponse"
GRADE_EVENT = "GradeEvent"
SWITCH_COMMAND = "SwitchCommand"
ERROR = "Error"
CONTROL_COMMAND = "ControlCommand"

KNOWN_TYPES = frozenset({
    DETECT_REQUEST, DETECT_RESPONSE, GRADE_EVENT, SWITCH_COMMAND, ERROR, CONTROL_COMMAND,
})

DEFAULT_MAX_PAYLOAD = 8 * 1024 * 1024


@dataclass(frozen=True)
class WireMessage:
    type: str
    id: str | None
    payload: dict
    v: int = PROTOCOL_VERSION


def encode_message(msg_type: str, msg_id: str | None, payload: dict) -> bytes:
    doc = {"v": PROTOCOL_VERSION, "type": msg_type, "id": msg_id, "payload": payload}
    return json.dumps(doc, separators=(",", ":")).encode("utf-8") + b"\n"


def decode_message(line: bytes) -> WireMessage:
    try:
        doc = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError("bad payload: not a JSON line") from exc
    if not isinstance(doc, dict):
        raise ProtocolError("bad payload: expected a JSON object")
    if doc.get("v") != PROTOCOL_VERSION:
        raise ProtocolError(f"unsupported protocol version {doc.get('v')!r}")
    msg_type = doc.get("type")
    if not isinstance(msg_type, str):
        raise ProtocolError("bad payload: missing message type")
    msg_id = doc.get("id")
    if msg_id is not None and not isinstance(msg_id, str):
        raise ProtocolError("bad payload: id must be a string")
    payload = doc.get("payload")
    if not isinstance(payload, dict):
        raise ProtocolError("bad payload: payload must be an object")
    return WireMessage(type=msg_type, id=msg_id, payload=payload, v=PROTOCOL_VERSION)


def encode_image(img: RgbImage) -> str:
    return base64.b64encode(image_to_png_bytes(img)).decode("ascii")


def decode_image(data) -> RgbImage:
    if not isinstance(data, str):
        raise ProtocolError("bad payload: image must be a base64 string")
    try:
        raw = base64.b64decode(data, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise ProtocolError("bad payload: invalid base64 image") from exc
    try:
        return image_from_png_bytes(raw)
    except ImageFormatError as exc:
        raise ProtocolError("bad payload: corrupt PNG image") from exc


class MessageStream:
    """Framed reader/writer over a connected socket. Reads enforce the payload
    limit; writes are serialized so control relays and responses can share a
    connection across threads."""

    def __init__(self, sock, max_payload: int = DEFAULT_MAX_PAYLOAD):
        self._sock = sock
        self._rfile = sock.makefile("rb")
        self._wlock = threading.Lock()
        self.max_payload = max_payload

    def read(self) -> WireMessage | None:
        """Next message, or None at EOF. Raises ProtocolError for oversized or
        malformed lines (the stream stays readable afterwards)."""
        line = self._rfile.readline(self.max_payload + 1)
        if not line:
            return None
        if len(line) > self.max_payload and not line.endswith(b"\n"):
            # Drain the rest of the oversized line to stay in sync.
            while True:
                chunk = self._rfile.readline(self.max_payload)
                if not chunk or chunk.endswith(b"\n"):
                    break
            raise ProtocolError(f"oversized message (> {self.max_payload} bytes)")
        return decode_message(line.rstrip(b"\n"))

    def write(self, msg_type: str, msg_id: str | None, payload: dict) -> int:
        return self.write_raw(encode_message(msg_type, msg_id, payload))

    def write_raw(self, data: bytes) -> int:
        with self._wlock:
            self._sock.sendall(data)
        return len(data)

    def close(self) -> None:
        try:
            self._rfile.close()
        except OSError:
            pass
        try:
            self._sock.close()
        except OSError:
            pass
