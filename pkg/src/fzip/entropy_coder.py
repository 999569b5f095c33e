"""Byte-oriented integer range coder and the arithmetic-coded token payload.

The coder is the classic carry-propagating configuration: 32-bit range
register, 64-bit low register, renormalization emits one byte whenever the
range drops below 2^24, and a 5-byte flush ends every stream. Probabilities
arrive as integer counts on a total of at most 2^16, so encoder and decoder
share exact arithmetic and the bitstream is identical across platforms.

Token payloads ("ac" mode) code each token under the predictor's quantized
distribution for that token's context. In dynamic context mode every chunk
is an independently flushed coder segment with a varint length prefix, which
keeps chunk-parallel encoding and decoding byte-identical to the sequential
result; sliding mode is a single sequential segment.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import CorruptStreamError
from .rank_codec import DYNAMIC, ContextPolicy, as_backend, chunk_map, chunk_spans
from .tokenizer import TokenSequence
from .varint import append_uvarint, read_uvarint

TOP = 1 << 24
RANGE_INIT = 0xFFFFFFFF
MAX_TOTAL = 1 << 16
FLUSH_BYTES = 5


class RangeEncoder:
    """Single-use encoder; call encode() per symbol, then finish() once."""

    def __init__(self):
        self.low = 0
        self.range_ = RANGE_INIT
        self.cache = 0
        self.cache_size = 1
        self.out = bytearray()

    def encode(self, cum_low: int, cum_high: int, total: int) -> None:
        """Narrow the interval to [cum_low, cum_high) / total."""
        r = self.range_ // total
        self.low += r * cum_low
        self.range_ = r * (cum_high - cum_low)
        while self.range_ < TOP:
            self._shift_low()
            self.range_ <<= 8

    def _shift_low(self) -> None:
        low = self.low
        if low < 0xFF000000 or low > 0xFFFFFFFF:
            carry = low >> 32
            out = self.out
            out.append((self.cache + carry) & 0xFF)
            if self.cache_size > 1:
                out.extend(((0xFF + carry) & 0xFF,) * (self.cache_size - 1))
            self.cache = (low >> 24) & 0xFF
            self.cache_size = 0
        self.cache_size += 1
        self.low = (low & 0x00FFFFFF) << 8

    def finish(self) -> bytes:
        for _ in range(FLUSH_BYTES):
            self._shift_low()
        return bytes(self.out)


class RangeDecoder:
    """Mirror of RangeEncoder; consumes exactly the bytes the encoder emitted."""

    def __init__(self, data):
        self._data = data
        self._pos = 0
        self._next_byte()  # leading byte is the encoder's initial cache
        code = 0
        for _ in range(4):
            code = (code << 8) | self._next_byte()
        self.code = code
        self.range_ = RANGE_INIT
        self._r = 0

    def _next_byte(self) -> int:
        if self._pos >= len(self._data):
            raise CorruptStreamError("range coder input exhausted")
        b = self._data[self._pos]
        self._pos += 1
        return b

    def decode_target(self, total: int) -> int:
        """Return the cumulative-count bucket the code point falls in."""
        self._r = self.range_ // total
        target = self.code // self._r
        if target >= total:
            raise CorruptStreamError("code point outside all symbol intervals")
        return target

    def decode_update(self, cum_low: int, cum_high: int) -> None:
        """Commit the symbol whose interval is [cum_low, cum_high)."""
        r = self._r
        self.code -= r * cum_low
        self.range_ = r * (cum_high - cum_low)
        while self.range_ < TOP:
            self.code = (self.code << 8) | self._next_byte()
            self.range_ <<= 8

    def bytes_consumed(self) -> int:
        return self._pos


class AdaptiveModel:
    """Order-0 adaptive counts over a small alphabet.

    Counts start at 1, grow by a fixed increment per coded symbol, and are
    halved (floor 1) when the total reaches 2^16, keeping the total inside
    coder precision. The increment of 16 keeps the incompressible-input
    expansion under 2 percent while still tracking skewed rank streams.
    Cumulative sums live in a Fenwick tree so per-symbol work is O(log n).
    """

    INCREMENT = 16

    def __init__(self, alphabet_size: int):
        self.n = alphabet_size
        self.counts = [1] * alphabet_size
        self.total = alphabet_size
        self._log = max(1, (alphabet_size - 1).bit_length())
        self._rebuild()

    def _rebuild(self):
        tree = [0] * (self.n + 1)
        for i, c in enumerate(self.counts):
            j = i + 1
            while j <= self.n:
                tree[j] += c
                j += j & -j
        self.tree = tree

    def bounds(self, symbol: int):
        lo = 0
        i = symbol  # prefix sum of counts[:symbol]
        tree = self.tree
        while i > 0:
            lo += tree[i]
            i -= i & -i
        return lo, lo + self.counts[symbol]

    def find(self, target: int):
        """Symbol whose cumulative interval contains target, with its bounds."""
        if target >= self.total:
            raise CorruptStreamError("target outside adaptive model range")
        pos = 0
        rem = target
        tree = self.tree
        for shift in range(self._log, -1, -1):
            nxt = pos + (1 << shift)
            if nxt <= self.n and tree[nxt] <= rem:
                rem -= tree[nxt]
                pos = nxt
        lo = target - rem
        return pos, lo, lo + self.counts[pos]

    def update(self, symbol: int) -> None:
        self.counts[symbol] += self.INCREMENT
        self.total += self.INCREMENT
        i = symbol + 1
        tree = self.tree
        while i <= self.n:
            tree[i] += self.INCREMENT
            i += i & -i
        if self.total >= MAX_TOTAL:
            counts = self.counts
            total = 0
            for i, c in enumerate(counts):
                c = (c + 1) >> 1
                counts[i] = c
                total += c
            self.total = total
            self._rebuild()


@dataclass(frozen=True)
class CodedBitstream:
    """Arithmetic-coded payload plus the symbol count needed to stop decoding."""

    data: bytes
    n_symbols: int


def ac_encode(tokens, predictor, policy: ContextPolicy, workers: int = 1) -> CodedBitstream:
    """Range-code tokens under per-context distributions.

    Payload layout: varint segment count, then per segment a varint byte
    length and the segment's coder bytes. Dynamic mode has one segment per
    chunk; sliding mode has a single segment.
    """
    backend = as_backend(predictor)
    toks = tokens.tokens if isinstance(tokens, TokenSequence) else list(tokens)
    n = len(toks)
    W = policy.window
    if policy.mode == DYNAMIC:
        spans = chunk_spans(n, W)
        if backend.is_remote:
            segments = [_encode_segment_remote(toks, s, e, backend) for s, e in spans]
        else:
            state = backend.state

            def encode_chunk(span):
                s, e = span
                return _encode_segment_local(toks, s, e, state.querier())

            segments = chunk_map(spans, encode_chunk, workers)
    elif n == 0:
        segments = []
    elif backend.is_remote:
        segments = [_encode_segment_remote(toks, 0, n, backend, window=W)]
    else:
        state = backend.state
        segments = [_encode_segment_local(toks, 0, n, state.querier(maxlen=min(state.k, W)))]

    payload = bytearray()
    append_uvarint(payload, len(segments))
    for seg in segments:
        append_uvarint(payload, len(seg))
        payload.extend(seg)
    return CodedBitstream(bytes(payload), n)


def ac_decode(stream, predictor, policy: ContextPolicy, n_tokens: int,
              workers: int = 1) -> TokenSequence:
    """Exact inverse of ac_encode for the same (predictor, policy)."""
    backend = as_backend(predictor)
    data = stream.data if isinstance(stream, CodedBitstream) else stream
    W = policy.window
    expected = len(chunk_spans(n_tokens, W)) if policy.mode == DYNAMIC else (1 if n_tokens else 0)
    n_segments, pos = read_uvarint(data, 0)
    if n_segments != expected:
        raise CorruptStreamError(f"payload has {n_segments} segments, expected {expected}")
    segments = []
    for _ in range(n_segments):
        seg_len, pos = read_uvarint(data, pos)
        if pos + seg_len > len(data):
            raise CorruptStreamError("truncated coder segment")
        segments.append(data[pos: pos + seg_len])
        pos += seg_len
    if pos != len(data):
        raise CorruptStreamError("trailing bytes after coder segments")

    V = backend.vocab_size
    if policy.mode == DYNAMIC:
        spans = chunk_spans(n_tokens, W)
        if backend.is_remote:
            toks = _decode_segments_remote(segments, spans, backend)
        else:
            state = backend.state

            def decode_chunk(args):
                (s, e), seg = args
                return _decode_segment_local(seg, e - s, state.querier())

            parts = chunk_map(list(zip(spans, segments)), decode_chunk, workers)
            toks = [t for part in parts for t in part]
        return TokenSequence(toks, V)
    if n_tokens == 0:
        return TokenSequence([], V)
    if backend.is_remote:
        return TokenSequence(_decode_sliding_remote(segments[0], n_tokens, backend, W), V)
    state = backend.state
    toks = _decode_segment_local(segments[0], n_tokens,
                                 state.querier(maxlen=min(state.k, W)))
    return TokenSequence(toks, V)


def cost_bits(tokens, predictor, policy: ContextPolicy) -> float:
    """Ideal code length: sum of -log2(q[t] / total) over the token stream."""
    backend = as_backend(predictor)
    toks = tokens.tokens if isinstance(tokens, TokenSequence) else list(tokens)
    bits = 0.0
    for cum, t in _iter_bounds(toks, backend, policy):
        bits -= math.log2((int(cum[t + 1]) - int(cum[t])) / MAX_TOTAL)
    return bits


def _iter_bounds(toks, backend, policy):
    W = policy.window
    if backend.is_remote:
        if policy.mode == DYNAMIC:
            contexts = [toks[s:j] for s, e in chunk_spans(len(toks), W) for j in range(s, e)]
        else:
            contexts = [toks[max(0, j - W): j] for j in range(len(toks))]
        for cum, t in zip(backend.dist_cums(contexts), toks):
            yield cum, t
        return
    state = backend.state
    if policy.mode == DYNAMIC:
        for s, e in chunk_spans(len(toks), W):
            q = state.querier()
            for j in range(s, e):
                yield q.entry().cum(), toks[j]
                q.push(toks[j])
    else:
        q = state.querier(maxlen=min(state.k, W))
        for t in toks:
            yield q.entry().cum(), t
            q.push(t)


# -- segment coding ----------------------------------------------------------


def _encode_segment_local(toks, start, end, querier):
    enc = RangeEncoder()
    for j in range(start, end):
        cum = querier.entry().cum()
        t = toks[j]
        enc.encode(int(cum[t]), int(cum[t + 1]), MAX_TOTAL)
        querier.push(t)
    return enc.finish()


def _decode_segment_local(data, n, querier):
    out = []
    dec = RangeDecoder(data)
    for _ in range(n):
        entry = querier.entry()
        target = dec.decode_target(MAX_TOTAL)
        t, lo, hi = entry.locate(target)
        dec.decode_update(lo, hi)
        out.append(t)
        querier.push(t)
    if dec.bytes_consumed() != len(data):
        raise CorruptStreamError("coder segment has trailing bytes")
    return out


def _encode_segment_remote(toks, start, end, backend, window=None):
    if window is None:  # dynamic: contexts start at the chunk boundary
        contexts = [toks[start:j] for j in range(start, end)]
    else:
        contexts = [toks[max(0, j - window): j] for j in range(start, end)]
    cums = backend.dist_cums(contexts)
    enc = RangeEncoder()
    for cum, j in zip(cums, range(start, end)):
        t = toks[j]
        enc.encode(int(cum[t]), int(cum[t + 1]), MAX_TOTAL)
    return enc.finish()


def _decode_segments_remote(segments, spans, backend):
    decoders = [RangeDecoder(seg) for seg in segments]
    chunks = [[] for _ in spans]
    width = max((e - s) for s, e in spans) if spans else 0
    for i in range(width):
        live = [ci for ci, (s, e) in enumerate(spans) if s + i < e]
        if not live:
            break
        cums = backend.dist_cums([chunks[ci] for ci in live])
        for ci, cum in zip(live, cums):
            dec = decoders[ci]
            target = dec.decode_target(MAX_TOTAL)
            t = int(np.searchsorted(cum, target, side="right")) - 1
            dec.decode_update(int(cum[t]), int(cum[t + 1]))
            chunks[ci].append(t)
    for dec, seg in zip(decoders, segments):
        if dec.bytes_consumed() != len(seg):
            raise CorruptStreamError("coder segment has trailing bytes")
    return [t for chunk in chunks for t in chunk]


def _decode_sliding_remote(segment, n_tokens, backend, window):
    out = []
    dec = RangeDecoder(segment)
    for j in range(n_tokens):
        cum = backend.dist_cums([out[max(0, j - window): j]])[0]
        target = dec.decode_target(MAX_TOTAL)
        t = int(np.searchsorted(cum, target, side="right")) - 1
        dec.decode_update(int(cum[t]), int(cum[t + 1]))
        out.append(t)
    if dec.bytes_consumed() != len(segment):
        raise CorruptStreamError("coder segment has trailing bytes")
    return out
