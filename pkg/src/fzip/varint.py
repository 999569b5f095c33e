"""LEB128 unsigned varints.

All variable-length integers in archives, rank streams, model blobs and
protocol frames use this encoding. Values are limited to 64 bits; overlong
or truncated encodings raise CorruptStreamError so corrupt inputs are never
silently misread.
"""

from .errors import CorruptStreamError

_MAX_SHIFT = 63


def encode_uvarint(value: int) -> bytes:
    if value < 0:
        raise ValueError("varint value must be non-negative")
    out = bytearray()
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return bytes(out)


def append_uvarint(buf: bytearray, value: int) -> None:
    if value < 0:
        raise ValueError("varint value must be non-negative")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            buf.append(byte | 0x80)
        else:
            buf.append(byte)
            return


def read_uvarint(data, offset: int = 0) -> tuple[int, int]:
    """Decode one varint from ``data`` at ``offset``; return (value, next offset)."""
    result = 0
    shift = 0
    n = len(data)
    while True:
        if offset >= n:
            raise CorruptStreamError("truncated varint")
        byte = data[offset]
        offset += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, offset
        shift += 7
        if shift > _MAX_SHIFT:
            raise CorruptStreamError("varint exceeds 64 bits")


def read_uvarint_stream(read_byte) -> int:
    """Decode one varint from a ``read_byte() -> int`` callback."""
    result = 0
    shift = 0
    while True:
        byte = read_byte()
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result
        shift += 7
        if shift > _MAX_SHIFT:
            raise CorruptStreamError("varint exceeds 64 bits")
