"""Binary frames for the TCP transport.

Frame layout (header fields big-endian)::

    u32 length      bytes following this field
    u8  opcode      pattern or management verb
    u8  kind        request/answer/update/event/ack/control
    u64 correlation
    u16 name length, UTF-8 type name
    payload         canonical encoding of the comm object

Payload fields follow declaration order. bool is one byte, int64 and
float64 are little-endian fixed width; strings, bytes and lists carry a
little-endian u32 length or item count; nested objects are inlined.
"""
from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

from ..errors import TypeMismatch
from ..model.core import list_item_type
from .commobject import CommObject, conform

_HEAD = struct.Struct(">BBQH")
_LEN = struct.Struct(">I")
_U32 = struct.Struct("<I")
_I64 = struct.Struct("<q")
_F64 = struct.Struct("<d")

MAX_FRAME = 16 * 1024 * 1024


class Opcode(enum.IntEnum):
    SEND = 1
    QUERY = 2
    PUSH_NEWEST = 3
    PUSH_TIMED = 4
    EVENT = 5
    STATE = 6
    WIRING = 7
    PARAM = 8


class Kind(enum.IntEnum):
    REQUEST = 1
    ANSWER = 2
    UPDATE = 3
    EVENT = 4
    ACK = 5
    CONTROL = 6


OPCODE_OF_PATTERN = {
    "send": Opcode.SEND,
    "query": Opcode.QUERY,
    "pushnewest": Opcode.PUSH_NEWEST,
    "pushtimed": Opcode.PUSH_TIMED,
    "event": Opcode.EVENT,
}


class CodecError(ValueError):
    pass


@dataclass(frozen=True)
class Frame:
    opcode: int
    kind: int
    correlation: int
    type_name: str
    payload: bytes = b""


def encode_frame(frame: Frame) -> bytes:
    name = frame.type_name.encode("utf-8")
    body = _HEAD.pack(frame.opcode, frame.kind, frame.correlation, len(name)) + name + frame.payload
    return _LEN.pack(len(body)) + body


def decode_frame(data: bytes) -> Frame:
    """Decode one complete frame (including its length field)."""
    if len(data) < _LEN.size:
        raise CodecError("truncated frame length")
    (length,) = _LEN.unpack_from(data)
    if len(data) != _LEN.size + length:
        raise CodecError(f"frame length {length} does not match {len(data) - _LEN.size} bytes")
    return _decode_body(data[_LEN.size:])


def _decode_body(body: bytes) -> Frame:
    if len(body) < _HEAD.size:
        raise CodecError("truncated frame header")
    opcode, kind, corr, nlen = _HEAD.unpack_from(body)
    end = _HEAD.size + nlen
    if len(body) < end:
        raise CodecError("truncated type name")
    try:
        name = body[_HEAD.size:end].decode("utf-8")
    except UnicodeDecodeError as exc:
        raise CodecError(f"type name is not UTF-8: {exc}") from None
    return Frame(opcode, kind, corr, name, bytes(body[end:]))


def _recv_exact(sock, n):
    chunks = []
    while n:
        chunk = sock.recv(n)
        if not chunk:
            return None
        chunks.append(chunk)
        n -= len(chunk)
    return b"".join(chunks)


def read_frame(sock):
    """Next frame from a socket, or None at end of stream."""
    head = _recv_exact(sock, _LEN.size)
    if head is None:
        return None
    (length,) = _LEN.unpack(head)
    if length > MAX_FRAME:
        raise CodecError(f"frame of {length} bytes exceeds limit")
    body = _recv_exact(sock, length)
    if body is None:
        return None
    return _decode_body(body)


# -- payloads ---------------------------------------------------------------


def _enc(value, type_expr, types, out):
    item = list_item_type(type_expr)
    if item is not None:
        out += _U32.pack(len(value))
        for v in value:
            _enc(v, item, types, out)
    elif type_expr == "bool":
        out.append(1 if value else 0)
    elif type_expr == "int64":
        out += _I64.pack(value)
    elif type_expr == "float64":
        out += _F64.pack(float(value))
    elif type_expr == "string":
        raw = value.encode("utf-8")
        out += _U32.pack(len(raw)) + raw
    elif type_expr == "bytes":
        out += _U32.pack(len(value)) + bytes(value)
    else:
        t = types[type_expr]
        for fname, ftype in t.fields:
            _enc(value[fname], ftype, types, out)


def encode_payload(obj: CommObject, types, type_name=None) -> bytes:
    """Encode a conforming comm object; raises TypeMismatch otherwise."""
    type_name = type_name or obj.type_name
    conform(obj, types, type_name)
    out = bytearray()
    _enc(obj, type_name, types, out)
    return bytes(out)


class _Reader:
    def __init__(self, data):
        self.data = memoryview(data)
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise CodecError("truncated payload")
        chunk = self.data[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, st):
        return st.unpack(self.take(st.size))[0]


def _dec(r, type_expr, types):
    item = list_item_type(type_expr)
    if item is not None:
        return [_dec(r, item, types) for _ in range(r.unpack(_U32))]
    if type_expr == "bool":
        b = r.take(1)[0]
        if b > 1:
            raise CodecError(f"bad bool byte {b}")
        return b == 1
    if type_expr == "int64":
        return r.unpack(_I64)
    if type_expr == "float64":
        return r.unpack(_F64)
    if type_expr == "string":
        try:
            return bytes(r.take(r.unpack(_U32))).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CodecError(f"string is not UTF-8: {exc}") from None
    if type_expr == "bytes":
        return bytes(r.take(r.unpack(_U32)))
    t = types.get(type_expr)
    if t is None:
        raise TypeMismatch(f"unknown communication object {type_expr!r}")
    return CommObject(type_expr, {fname: _dec(r, ftype, types) for fname, ftype in t.fields})


def decode_payload(data: bytes, type_name: str, types) -> CommObject:
    r = _Reader(data)
    obj = _dec(r, type_name, types)
    if r.pos != len(r.data):
        raise CodecError(f"{len(r.data) - r.pos} trailing payload bytes")
    return obj


def encode_strings(*values) -> bytes:
    """Payload of a control frame: a sequence of length-prefixed strings."""
    out = bytearray()
    for v in values:
        raw = v.encode("utf-8")
        out += _U32.pack(len(raw)) + raw
    return bytes(out)


def decode_strings(data: bytes):
    r = _Reader(data)
    out = []
    while r.pos < len(r.data):
        out.append(bytes(r.take(r.unpack(_U32))).decode("utf-8"))
    return out
