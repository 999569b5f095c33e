"""Self-describing archive container (.fz files).

Normative byte layout, all integers little-endian, strings u16 length +
UTF-8 bytes:

    magic               4 bytes  "FZIP"
    version             u8       (currently 1)
    mode                u8       0 = rank, 1 = ac
    context_mode        u8       0 = dynamic, 1 = sliding
    window              u32
    tokenizer_id        string
    predictor_id        string
    predictor_fingerprint  8 bytes
    n_tokens            u64
    original_len        u64
    secondary_id        string
    model_blob_len      u32
    payload_len         u64
    model_blob          model_blob_len bytes
    payload             payload_len bytes
    crc32               u32 over every preceding byte

The CRC is the standard reflected-0xEDB88320 CRC-32 (zlib.crc32). Every
parameter needed for exact decompression is in the header; the model blob
carries the memorized predictor state and is counted in reported ratios.
"""

import struct
import zlib
from dataclasses import dataclass

from .errors import (
    CorruptArchiveError,
    NotAnArchiveError,
    UnsupportedVersionError,
)

MAGIC = b"FZIP"
VERSION = 1
MODE_RANK = 0
MODE_AC = 1
CONTEXT_DYNAMIC = 0
CONTEXT_SLIDING = 1
FILE_EXTENSION = ".fz"


@dataclass
class ArchiveHeader:
    mode: int
    context_mode: int
    window: int
    tokenizer_id: str
    predictor_id: str
    predictor_fingerprint: bytes
    n_tokens: int
    original_len: int
    secondary_id: str
    model_blob_len: int
    payload_len: int


def _pack_string(out: bytearray, s: str) -> None:
    raw = s.encode("utf-8")
    if len(raw) > 0xFFFF:
        raise ValueError("string field too long")
    out.extend(struct.pack("<H", len(raw)))
    out.extend(raw)


def write_archive(header: ArchiveHeader, model_blob: bytes, payload: bytes) -> bytes:
    """Serialize header + blobs and append the trailing CRC32."""
    if header.model_blob_len != len(model_blob):
        raise ValueError("model_blob_len does not match blob")
    if header.payload_len != len(payload):
        raise ValueError("payload_len does not match payload")
    if header.mode not in (MODE_RANK, MODE_AC):
        raise ValueError("mode must be 0 (rank) or 1 (ac)")
    if header.context_mode not in (CONTEXT_DYNAMIC, CONTEXT_SLIDING):
        raise ValueError("context_mode must be 0 (dynamic) or 1 (sliding)")
    if header.window < 1:
        raise ValueError("window must be >= 1")
    if len(header.predictor_fingerprint) != 8:
        raise ValueError("fingerprint must be 8 bytes")
    out = bytearray()
    out.extend(MAGIC)
    out.append(VERSION)
    out.append(header.mode)
    out.append(header.context_mode)
    out.extend(struct.pack("<I", header.window))
    _pack_string(out, header.tokenizer_id)
    _pack_string(out, header.predictor_id)
    out.extend(header.predictor_fingerprint)
    out.extend(struct.pack("<Q", header.n_tokens))
    out.extend(struct.pack("<Q", header.original_len))
    _pack_string(out, header.secondary_id)
    out.extend(struct.pack("<I", header.model_blob_len))
    out.extend(struct.pack("<Q", header.payload_len))
    out.extend(model_blob)
    out.extend(payload)
    out.extend(struct.pack("<I", zlib.crc32(out)))
    return bytes(out)


class _Reader:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptArchiveError("archive truncated")
        chunk = self.data[self.pos: self.pos + n]
        self.pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def string(self) -> str:
        n = struct.unpack("<H", self.take(2))[0]
        raw = self.take(n)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CorruptArchiveError("undecodable string field") from exc


def read_archive(data: bytes) -> tuple[ArchiveHeader, bytes, bytes]:
    """Validate magic, version, CRC and lengths; return (header, blob, payload)."""
    if len(data) < 4 or data[:4] != MAGIC:
        raise NotAnArchiveError("missing FZIP magic")
    if len(data) < 5:
        raise CorruptArchiveError("archive truncated")
    if data[4] != VERSION:
        raise UnsupportedVersionError(f"archive version {data[4]} not supported")
    if len(data) < 9:
        raise CorruptArchiveError("archive truncated")
    stored_crc = struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(data[:-4]) != stored_crc:
        raise CorruptArchiveError("CRC mismatch")
    r = _Reader(data[:-4])
    r.take(5)  # magic + version, already validated
    mode = r.u8()
    context_mode = r.u8()
    window = r.u32()
    tokenizer_id = r.string()
    predictor_id = r.string()
    fingerprint = r.take(8)
    n_tokens = r.u64()
    original_len = r.u64()
    secondary_id = r.string()
    model_blob_len = r.u32()
    payload_len = r.u64()
    if mode not in (MODE_RANK, MODE_AC):
        raise CorruptArchiveError(f"invalid mode byte {mode}")
    if context_mode not in (CONTEXT_DYNAMIC, CONTEXT_SLIDING):
        raise CorruptArchiveError(f"invalid context mode byte {context_mode}")
    if window < 1:
        raise CorruptArchiveError("invalid window")
    model_blob = r.take(model_blob_len)
    payload = r.take(payload_len)
    if r.pos != len(r.data):
        raise CorruptArchiveError("trailing bytes after payload")
    header = ArchiveHeader(
        mode=mode,
        context_mode=context_mode,
        window=window,
        tokenizer_id=tokenizer_id,
        predictor_id=predictor_id,
        predictor_fingerprint=fingerprint,
        n_tokens=n_tokens,
        original_len=original_len,
        secondary_id=secondary_id,
        model_blob_len=model_blob_len,
        payload_len=payload_len,
    )
    return header, model_blob, payload
