"""Built-in deterministic predictor: an order-k interpolated context model.

Memorization ("fitting") counts every (context, next token) occurrence up to
order k over the corpus being compressed, the same data the coder will see.
Prediction interpolates the empirical distribution of each context suffix
with the next-shorter order:

    P_o(t) = (count_o(t) + P_(o-1)(t)) / (n_o + 1),   P_(-1)(t) = 1 / V

computed in exact integer arithmetic (a single common denominator), then
quantized once to counts summing to exactly 65536 with a floor of one count
per token, by largest remainder with ties broken by ascending token id. The
whole chain is integer-only, so identical (state, context) pairs produce
bit-identical distributions on every platform, a hard requirement for
lossless decoding.

States are frozen after fitting: compression and decompression only read
them, which is what makes chunk-parallel coding deterministic.
"""

import functools
import hashlib
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, CorruptStreamError
from .varint import append_uvarint, read_uvarint

QUANT_TOTAL = 1 << 16
DEFAULT_ORDER = 3
BUILTIN_ID_PREFIX = "builtin-ctx"
DEFAULT_PREDICTOR_ID = "builtin-ctx3"
_ENTRY_CACHE_SIZE = 1 << 17
_MODEL_VERSION = 1


@dataclass(frozen=True)
class Distribution:
    """Quantized next-token distribution: positive counts summing to 65536."""

    counts: np.ndarray
    total: int = QUANT_TOTAL


class _Node:
    """Observed next-token counts under one context."""

    __slots__ = ("tokens", "counts", "total", "_pairs")

    def __init__(self, tokens, counts, total):
        self.tokens = tokens
        self.counts = counts
        self.total = total
        self._pairs = None

    def pairs(self):
        # plain-int pairs, cached: exact bigint math is faster off numpy scalars
        if self._pairs is None:
            self._pairs = list(zip(self.tokens.tolist(), self.counts.tolist()))
        return self._pairs


class _DistEntry:
    """Cacheable per-context query result: counts, ranking, inverse, cumulative."""

    __slots__ = ("q", "ranking", "rank_inv", "_cum")

    def __init__(self, q):
        self.q = q
        order = np.argsort(-q.astype(np.int32), kind="stable")
        self.ranking = order.astype(np.uint16)
        inv = np.empty(len(q), dtype=np.uint16)
        inv[order] = np.arange(len(q), dtype=np.uint16)
        self.rank_inv = inv
        self._cum = None

    def cum(self):
        if self._cum is None:
            cum = np.zeros(len(self.q) + 1, dtype=np.uint32)
            np.cumsum(self.q, out=cum[1:])
            self._cum = cum
        return self._cum

    def locate(self, target):
        """Map a cumulative-count target to (token, cum_low, cum_high)."""
        cum = self.cum()
        idx = int(np.searchsorted(cum, target, side="right")) - 1
        return idx, int(cum[idx]), int(cum[idx + 1])


class ModelState:
    """Frozen predictor parameters: per-order context tables plus metadata."""

    def __init__(self, k, vocab_size, tables, fitted, epochs_requested=1, empty_corpus=False):
        if vocab_size < 2 or vocab_size > QUANT_TOTAL:
            raise ConfigurationError("built-in model supports 2 <= V <= 65536")
        if k < 0:
            raise ConfigurationError("model order must be >= 0")
        self.k = k
        self.vocab_size = vocab_size
        self.tables = tables
        self.fitted = fitted
        self.epochs_requested = epochs_requested
        self.empty_corpus = empty_corpus
        self._entry_cached = functools.lru_cache(maxsize=_ENTRY_CACHE_SIZE)(self._compute_entry)

    # -- queries ---------------------------------------------------------

    def entry_for(self, suffix):
        """Cached distribution entry for a context suffix (last <= k tokens)."""
        if self.k == 0:
            key = ()
        else:
            key = suffix[-self.k:] if len(suffix) > self.k else suffix
        # canonical key: drop absent high orders so equivalent contexts share
        # one cache slot (an unseen order contributes nothing to the mix)
        for length in range(len(key), 0, -1):
            sub = key[len(key) - length:]
            if sub in self.tables[length]:
                return self._entry_cached(sub)
        return self._entry_cached(())

    def _compute_entry(self, key):
        V = self.vocab_size
        weights = {}  # token -> exact integer numerator; others share `base`
        base = 1
        den = V
        for length in range(0, len(key) + 1):
            node = self.tables[length].get(key[len(key) - length:])
            if node is None:
                continue
            for t, c in node.pairs():
                weights[t] = c * den + weights.get(t, base)
            den *= node.total + 1
        return _DistEntry(_quantize(weights, base, den, V))

    def querier(self, seed=(), maxlen=None):
        return SuffixQuerier(self, seed, maxlen)

    # -- serialization ---------------------------------------------------

    def serialize(self) -> bytes:
        """Normative adapter-blob layout: version, k, V, then per-order tables."""
        out = bytearray([_MODEL_VERSION])
        append_uvarint(out, self.k)
        append_uvarint(out, self.vocab_size)
        for table in self.tables:
            append_uvarint(out, len(table))
            for key in sorted(table):
                node = table[key]
                for t in key:
                    append_uvarint(out, t)
                append_uvarint(out, len(node.tokens))
                for t, c in node.pairs():
                    append_uvarint(out, t)
                    append_uvarint(out, c)
        return bytes(out)

    def fingerprint(self) -> bytes:
        return hashlib.sha256(self.serialize()).digest()[:8]


class SuffixQuerier:
    """Rolling suffix window over one stream position; one per chunk/worker.

    Keeps the last min(k, maxlen) tokens; maxlen caps the context when the
    policy window is smaller than the model order.
    """

    __slots__ = ("state", "maxlen", "buf")

    def __init__(self, state, seed=(), maxlen=None):
        self.state = state
        self.maxlen = state.k if maxlen is None else min(maxlen, state.k)
        self.buf = list(seed)[-self.maxlen:] if self.maxlen else []

    def reset(self, seed=()):
        self.buf = list(seed)[-self.maxlen:] if self.maxlen else []

    def push(self, token):
        buf = self.buf
        buf.append(token)
        if len(buf) > self.maxlen:
            del buf[0]

    def entry(self):
        return self.state.entry_for(tuple(self.buf))


def _quantize(weights, base, den, V):
    """Largest-remainder quantization to QUANT_TOTAL with floor 1 per token.

    One count is reserved per token, and the remaining QUANT_TOTAL - V counts
    are split proportionally to the exact weights; leftover units go to the
    largest remainders (ties: ascending token id). `weights` holds exact
    numerators for the support; every other token has numerator `base`.
    """
    units = QUANT_TOTAL - V
    m = len(weights)
    base_floor, base_rem = divmod(base * units, den)
    q = np.full(V, base_floor + 1, dtype=np.uint16)
    assigned = base_floor * (V - m)
    sup = []
    for t, w in weights.items():
        fl, rem = divmod(w * units, den)
        q[t] = fl + 1
        assigned += fl
        sup.append((rem, t))
    leftover = units - assigned
    if leftover:
        sup.sort(key=lambda item: (-item[0], item[1]))
        # support tokens with remainder above the shared base remainder win first
        i = 0
        while i < len(sup) and leftover and sup[i][0] > base_rem:
            q[sup[i][1]] += 1
            leftover -= 1
            i += 1
        if leftover:
            # tie zone: base tokens and any support token at the same remainder,
            # ordered by token id
            tied = {t for rem, t in sup[i:] if rem == base_rem}
            in_support = set(weights)
            for t in range(V):
                if not leftover:
                    break
                if t in tied or t not in in_support:
                    q[t] += 1
                    leftover -= 1
            i += len(tied)
        while leftover and i < len(sup):
            q[sup[i][1]] += 1
            leftover -= 1
            i += 1
    return q


# -- fitting ----------------------------------------------------------------


def fit(corpus, epochs: int = 1, k: int = DEFAULT_ORDER, vocab_size=None,
        prune_min_total=None, prune_min_count=None):
    """Memorize a corpus: count every (context, next-token) pair up to order k.

    Counts are normalized by construction (one pass counts each occurrence
    once), so `epochs` is recorded for external-predictor parity but cannot
    change the built-in model's predictions.

    Pruning keeps the stored adapter blob proportionate to the coding gain
    it buys (the blob is counted in the reported ratio): `prune_min_total`
    maps order -> minimum context total, `prune_min_count` maps order ->
    minimum per-pair count. Pruned contexts fall back to the next-shorter
    order exactly as unseen ones do. Order 0 is never pruned; defaults
    prune nothing.

    An empty corpus yields the unfitted uniform state with a warning flag.
    """
    if epochs < 1:
        raise ConfigurationError("epochs must be >= 1")
    tokens = corpus.tokens if hasattr(corpus, "tokens") else corpus
    V = vocab_size or getattr(corpus, "vocab_size", None)
    if V is None:
        raise ConfigurationError("vocab_size required when fitting a raw token list")
    if len(tokens) == 0:
        return ModelState(k, V, _empty_tables(k), fitted=False,
                          epochs_requested=epochs, empty_corpus=True)
    if min(tokens) < 0 or max(tokens) >= V:
        raise ConfigurationError("corpus token outside vocabulary")
    if V <= 256 and k <= 7:
        tables = _count_tables_packed(tokens, k, V)
    else:
        tables = _count_tables_generic(tokens, k)
    for order in range(1, k + 1):
        min_total = (prune_min_total or {}).get(order, 0)
        min_count = (prune_min_count or {}).get(order, 0)
        if min_total <= 1 and min_count <= 1:
            continue
        table = tables[order]
        for key in list(table):
            node = table[key]
            if node.total < min_total:
                del table[key]
                continue
            if min_count > 1:
                keep = node.counts >= min_count
                if not keep.all():
                    if not keep.any():
                        del table[key]
                        continue
                    table[key] = _Node(node.tokens[keep], node.counts[keep],
                                       int(node.counts[keep].sum()))
    return ModelState(k, V, tables, fitted=True, epochs_requested=epochs)


def _empty_tables(k):
    return [dict() for _ in range(k + 1)]


def _count_tables_packed(tokens, k, V):
    """Vectorized n-gram counting for byte-sized vocabularies."""
    arr = np.asarray(tokens, dtype=np.uint64)
    n = len(arr)
    tables = _empty_tables(k)
    toks0, cnts0 = np.unique(arr, return_counts=True)
    tables[0][()] = _Node(toks0.astype(np.uint16), cnts0.astype(np.int64), n)
    for order in range(1, k + 1):
        if n <= order:
            break
        keys = np.zeros(n - order, dtype=np.uint64)
        for j in range(order):
            keys = (keys << np.uint64(8)) | arr[j: n - order + j]
        keys = (keys << np.uint64(8)) | arr[order:]
        uniq, cnts = np.unique(keys, return_counts=True)
        ctxs = uniq >> np.uint64(8)
        nexts = (uniq & np.uint64(0xFF)).astype(np.uint16)
        cnts = cnts.astype(np.int64)
        bounds = np.flatnonzero(np.diff(ctxs)) + 1
        starts = np.concatenate(([0], bounds, [len(uniq)]))
        table = tables[order]
        shifts = [8 * (order - 1 - j) for j in range(order)]
        for gi in range(len(starts) - 1):
            s, e = int(starts[gi]), int(starts[gi + 1])
            if s == e:
                continue
            packed = int(ctxs[s])
            key = tuple((packed >> sh) & 0xFF for sh in shifts)
            table[key] = _Node(nexts[s:e], cnts[s:e], int(cnts[s:e].sum()))
    return tables


def _count_tables_generic(tokens, k):
    tables = _empty_tables(k)
    counters = [dict() for _ in range(k + 1)]
    n = len(tokens)
    for order in range(k + 1):
        counter = counters[order]
        for i in range(order, n):
            key = tuple(tokens[i - order: i])
            per_ctx = counter.get(key)
            if per_ctx is None:
                per_ctx = counter[key] = {}
            t = tokens[i]
            per_ctx[t] = per_ctx.get(t, 0) + 1
    for order, counter in enumerate(counters):
        for key, per_ctx in counter.items():
            toks = np.array(sorted(per_ctx), dtype=np.uint16)
            cnts = np.array([per_ctx[int(t)] for t in toks], dtype=np.int64)
            tables[order][key] = _Node(toks, cnts, int(cnts.sum()))
    return tables


# -- spec operations ---------------------------------------------------------


def distribution(state: ModelState, context) -> Distribution:
    """Quantized distribution for a context (deterministic, uniform if unfitted)."""
    _check_context(state, context)
    return Distribution(state.entry_for(tuple(context)).q.copy())


def ranking(state: ModelState, context):
    """Tokens by quantized count descending, ties by ascending id."""
    _check_context(state, context)
    return state.entry_for(tuple(context)).ranking.tolist()


def rank_of(state: ModelState, context, token: int) -> int:
    if not 0 <= token < state.vocab_size:
        raise ValueError(f"token {token} outside vocabulary")
    _check_context(state, context)
    return int(state.entry_for(tuple(context)).rank_inv[token])


def token_at(state: ModelState, context, rank: int) -> int:
    if not 0 <= rank < state.vocab_size:
        raise CorruptStreamError(f"rank {rank} outside vocabulary")
    _check_context(state, context)
    return int(state.entry_for(tuple(context)).ranking[rank])


def _check_context(state, context):
    for t in context:
        if not 0 <= t < state.vocab_size:
            raise ValueError(f"context token {t} outside vocabulary")


# -- model blob --------------------------------------------------------------


def deserialize(blob: bytes) -> ModelState:
    """Inverse of ModelState.serialize()."""
    if not blob:
        raise CorruptStreamError("empty model blob")
    if blob[0] != _MODEL_VERSION:
        raise CorruptStreamError(f"unknown model blob version {blob[0]}")
    pos = 1
    k, pos = read_uvarint(blob, pos)
    V, pos = read_uvarint(blob, pos)
    if not 2 <= V <= QUANT_TOTAL or k > 64:
        raise CorruptStreamError("implausible model header")
    tables = _empty_tables(k)
    fitted = False
    for order in range(k + 1):
        n_entries, pos = read_uvarint(blob, pos)
        table = tables[order]
        for _ in range(n_entries):
            key = []
            for _ in range(order):
                t, pos = read_uvarint(blob, pos)
                key.append(t)
            n_pairs, pos = read_uvarint(blob, pos)
            toks = np.empty(n_pairs, dtype=np.uint16)
            cnts = np.empty(n_pairs, dtype=np.int64)
            for i in range(n_pairs):
                t, pos = read_uvarint(blob, pos)
                c, pos = read_uvarint(blob, pos)
                if t >= V or c <= 0:
                    raise CorruptStreamError("invalid model table entry")
                toks[i] = t
                cnts[i] = c
            table[tuple(key)] = _Node(toks, cnts, int(cnts.sum()))
            fitted = True
    if pos != len(blob):
        raise CorruptStreamError("trailing bytes after model blob")
    return ModelState(k, V, tables, fitted=fitted)


def parse_builtin_id(predictor_id: str) -> int:
    """Order k from a 'builtin-ctx<k>' predictor id."""
    if not predictor_id.startswith(BUILTIN_ID_PREFIX):
        raise ConfigurationError(f"not a built-in predictor id: {predictor_id!r}")
    try:
        k = int(predictor_id[len(BUILTIN_ID_PREFIX):])
    except ValueError:
        raise ConfigurationError(f"bad built-in predictor id: {predictor_id!r}") from None
    if not 0 <= k <= 16:
        raise ConfigurationError("built-in predictor order must be in [0, 16]")
    return k
