"""Canonical serialization shared by certificates, messages and transcripts.

Every field is a byte string prefixed by its big-endian 32-bit length;
fields appear in declaration order. Decoding is strict: a truncated field
or trailing bytes are errors, never silently ignored.
"""

import struct
from collections.abc import Sequence

_LENGTH = struct.Struct(">I")
_DOUBLE = struct.Struct(">d")


class EncodingError(ValueError):
    pass


def encode_fields(fields: Sequence[bytes]) -> bytes:
    out = bytearray()
    for field in fields:
        out += _LENGTH.pack(len(field))
        out += field
    return bytes(out)


def decode_fields(data: bytes, expected: int | None = None) -> list[bytes]:
    fields: list[bytes] = []
    offset = 0
    while offset < len(data):
        if offset + _LENGTH.size > len(data):
            raise EncodingError(f"truncated length prefix at offset {offset}")
        (length,) = _LENGTH.unpack_from(data, offset)
        offset += _LENGTH.size
        if offset + length > len(data):
            raise EncodingError(
                f"field of {length} bytes overruns buffer at offset {offset}"
            )
        fields.append(bytes(data[offset : offset + length]))
        offset += length
    if expected is not None and len(fields) != expected:
        raise EncodingError(f"expected {expected} fields, got {len(fields)}")
    return fields


def encode_int(value: int, size: int = 8) -> bytes:
    try:
        return value.to_bytes(size, "big", signed=False)
    except OverflowError as exc:
        raise EncodingError(f"{value} does not fit in {size} bytes") from exc


def decode_int(data: bytes, size: int = 8) -> int:
    if len(data) != size:
        raise EncodingError(f"integer field must be {size} bytes, got {len(data)}")
    return int.from_bytes(data, "big", signed=False)


def encode_float(value: float) -> bytes:
    return _DOUBLE.pack(value)


def decode_float(data: bytes) -> float:
    if len(data) != _DOUBLE.size:
        raise EncodingError(f"float field must be 8 bytes, got {len(data)}")
    return _DOUBLE.unpack(data)[0]


def encode_str(value: str) -> bytes:
    return value.encode("utf-8")


def decode_str(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise EncodingError("invalid utf-8 in string field") from exc
