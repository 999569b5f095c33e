"""Rank-stream serialization and second-stage compression.

Rank streams serialize as concatenated LEB128 varints. The built-in codec
("builtin-mrl") then chains move-to-front over the byte alphabet, run-length
encoding of zero runs with a two-symbol run alphabet (runs spell their
length in bijective base 2), and order-0 adaptive range coding. That stack
needs no external tools and exploits exactly the structure memorized rank
streams have: long runs of rank 0 and a heavily skewed residue.

For parity experiments against real second-stage compressors, "extcmd"
codecs pipe bytes through an external command pair (stdin -> stdout, exit 0
on success); archives record only the command ids.
"""

import shlex
import subprocess

from .entropy_coder import AdaptiveModel, RangeDecoder, RangeEncoder
from .errors import ConfigurationError, CorruptStreamError, ExternalToolError
from .varint import append_uvarint, read_uvarint

SECONDARY_NONE = "none"
SECONDARY_BUILTIN = "builtin-mrl"
EXTCMD_PREFIX = "extcmd:"

_RUNA = 0
_RUNB = 1
_ALPHABET = 257  # RUNA, RUNB, then MTF codes 1..255 shifted by one
_EXT_TIMEOUT = 600.0


def serialize_ranks(ranks) -> bytes:
    """Concatenated unsigned varints; inverse needs the rank count."""
    out = bytearray()
    for r in ranks.ranks if hasattr(ranks, "ranks") else ranks:
        append_uvarint(out, r)
    return bytes(out)


def deserialize_ranks(data: bytes, n_ranks: int) -> list[int]:
    out = []
    pos = 0
    for _ in range(n_ranks):
        r, pos = read_uvarint(data, pos)
        out.append(r)
    if pos != len(data):
        raise CorruptStreamError("trailing bytes after rank stream")
    return out


def compress_builtin(data: bytes) -> bytes:
    """MTF -> zero-run RLE -> adaptive order-0 range coding."""
    table = bytearray(range(256))
    symbols = []
    run = 0
    for b in data:
        i = table.index(b)
        if i == 0:
            run += 1
            continue
        if run:
            _append_run(symbols, run)
            run = 0
        del table[i]
        table.insert(0, b)
        symbols.append(i + 1)
    if run:
        _append_run(symbols, run)

    enc = RangeEncoder()
    model = AdaptiveModel(_ALPHABET)
    for s in symbols:
        lo, hi = model.bounds(s)
        enc.encode(lo, hi, model.total)
        model.update(s)
    return enc.finish()


def decompress_builtin(data: bytes, out_len: int) -> bytes:
    """Exact inverse of compress_builtin given the original length."""
    out = bytearray()
    if out_len == 0:
        return bytes(out)
    dec = RangeDecoder(data)
    model = AdaptiveModel(_ALPHABET)
    table = bytearray(range(256))
    run_shift = 0
    while len(out) < out_len:
        target = dec.decode_target(model.total)
        sym, lo, hi = model.find(target)
        dec.decode_update(lo, hi)
        model.update(sym)
        if sym <= _RUNB:
            count = (sym + 1) << run_shift
            run_shift += 1
            if len(out) + count > out_len:
                raise CorruptStreamError("run overflow in secondary stream")
            out.extend(table[0:1] * count)
        else:
            run_shift = 0
            i = sym - 1
            b = table[i]
            del table[i]
            table.insert(0, b)
            out.append(b)
    if len(out) != out_len:
        raise CorruptStreamError("run overflow in secondary stream")
    return bytes(out)


def _append_run(symbols, run):
    # run length in bijective base 2 over {RUNA=1, RUNB=2}, least digit first
    while run:
        run -= 1
        symbols.append(run & 1)
        run >>= 1


# -- external command codecs --------------------------------------------------


def parse_extcmd(codec_id: str) -> tuple[str, str]:
    spec = codec_id[len(EXTCMD_PREFIX):]
    if "|" not in spec:
        raise ConfigurationError(
            "extcmd codec id must be 'extcmd:<compress cmd>|<decompress cmd>'")
    comp, dec = spec.split("|", 1)
    if not comp.strip() or not dec.strip():
        raise ConfigurationError("extcmd codec id has an empty command")
    return comp.strip(), dec.strip()


def run_external(cmd: str, data: bytes, timeout: float = _EXT_TIMEOUT) -> bytes:
    """Pipe data through a shell-less external command."""
    argv = shlex.split(cmd)
    if not argv:
        raise ConfigurationError("empty external command")
    try:
        proc = subprocess.run(argv, input=data, stdout=subprocess.PIPE,
                              stderr=subprocess.PIPE, timeout=timeout)
    except FileNotFoundError as exc:
        raise ExternalToolError(f"external command not found: {argv[0]}") from exc
    except subprocess.TimeoutExpired as exc:
        raise ExternalToolError(f"external command timed out: {cmd}") from exc
    if proc.returncode != 0:
        detail = proc.stderr.decode("utf-8", "replace").strip()
        raise ExternalToolError(
            f"external command failed (exit {proc.returncode}): {cmd}: {detail}")
    return proc.stdout


def compress_external(cmd: str, data: bytes, timeout: float = _EXT_TIMEOUT) -> bytes:
    return run_external(cmd, data, timeout)


def decompress_external(cmd: str, data: bytes, timeout: float = _EXT_TIMEOUT) -> bytes:
    return run_external(cmd, data, timeout)


# -- dispatch used by the pipeline --------------------------------------------


def compress(data: bytes, codec_id: str) -> bytes:
    """Apply a secondary codec; builtin output is prefixed with the raw length."""
    if codec_id == SECONDARY_NONE:
        return data
    if codec_id == SECONDARY_BUILTIN:
        out = bytearray()
        append_uvarint(out, len(data))
        out.extend(compress_builtin(data))
        return bytes(out)
    if codec_id.startswith(EXTCMD_PREFIX):
        comp, _ = parse_extcmd(codec_id)
        return compress_external(comp, data)
    raise ConfigurationError(f"unknown secondary codec {codec_id!r}")


def decompress(data: bytes, codec_id: str) -> bytes:
    if codec_id == SECONDARY_NONE:
        return data
    if codec_id == SECONDARY_BUILTIN:
        raw_len, pos = read_uvarint(data, 0)
        return decompress_builtin(data[pos:], raw_len)
    if codec_id.startswith(EXTCMD_PREFIX):
        _, dec = parse_extcmd(codec_id)
        return decompress_external(dec, data)
    raise ConfigurationError(f"unknown secondary codec {codec_id!r}")
