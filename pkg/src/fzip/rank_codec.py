"""Token/rank transform under the two context policies.

Dynamic mode splits the stream into window-sized chunks; the i-th token of a
chunk is predicted from the i-1 tokens before it in that chunk, so chunks
are mutually independent and can be coded in parallel in any order with
byte-identical results. Sliding mode predicts every token from the window of
tokens immediately preceding it across chunk boundaries, which reproduces
the sequential baseline; it cannot be parallelized.

Both directions work against either a local ModelState or a remote predictor
backend. Remote decoding in dynamic mode batches position-by-position across
all chunks (the i-th token of every chunk in one request), which is what
makes chunked decode practical over the wire.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from .errors import ConfigurationError, CorruptStreamError
from .predictor import ModelState
from .tokenizer import TokenSequence

DYNAMIC = "dynamic"
SLIDING = "sliding"
DEFAULT_WINDOW = 512


@dataclass(frozen=True)
class ContextPolicy:
    mode: str = DYNAMIC
    window: int = DEFAULT_WINDOW

    def __post_init__(self):
        if self.mode not in (DYNAMIC, SLIDING):
            raise ConfigurationError(f"unknown context mode {self.mode!r}")
        if self.window < 1:
            raise ConfigurationError("context window must be >= 1")


@dataclass(frozen=True)
class RankStream:
    ranks: list[int] = field(default_factory=list)

    def __len__(self):
        return len(self.ranks)


class BuiltinBackend:
    """Adapter exposing a frozen ModelState through the codec-facing interface."""

    is_remote = False

    def __init__(self, state: ModelState):
        self.state = state
        self.vocab_size = state.vocab_size


def as_backend(predictor):
    if isinstance(predictor, ModelState):
        return BuiltinBackend(predictor)
    if hasattr(predictor, "is_remote"):
        return predictor
    raise ConfigurationError(f"not a predictor: {predictor!r}")


def chunk_spans(n_tokens: int, window: int):
    """[start, end) spans of each chunk; the final chunk may be partial."""
    return [(s, min(s + window, n_tokens)) for s in range(0, n_tokens, window)]


def chunk_map(spans, worker_fn, workers):
    """Run worker_fn over chunk spans, merging results in chunk index order."""
    if workers <= 1 or len(spans) <= 1:
        return [worker_fn(span) for span in spans]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker_fn, spans))


def encode_ranks(tokens, predictor, policy: ContextPolicy, workers: int = 1) -> RankStream:
    """ranks[j] = rank of tokens[j] under its policy context."""
    backend = as_backend(predictor)
    toks = tokens.tokens if isinstance(tokens, TokenSequence) else list(tokens)
    W = policy.window
    if backend.is_remote:
        if policy.mode == DYNAMIC:
            items = [(toks[s:j], toks[j]) for s, e in chunk_spans(len(toks), W)
                     for j in range(s, e)]
        else:
            items = [(toks[max(0, j - W): j], toks[j]) for j in range(len(toks))]
        return RankStream(backend.ranks(items))

    state = backend.state
    if policy.mode == DYNAMIC:
        def encode_chunk(span):
            s, e = span
            q = state.querier()
            out = []
            for j in range(s, e):
                t = toks[j]
                out.append(int(q.entry().rank_inv[t]))
                q.push(t)
            return out
        parts = chunk_map(chunk_spans(len(toks), W), encode_chunk, workers)
        return RankStream([r for part in parts for r in part])

    q = state.querier(maxlen=min(state.k, W))
    out = []
    for t in toks:
        out.append(int(q.entry().rank_inv[t]))
        q.push(t)
    return RankStream(out)


def decode_ranks(ranks, predictor, policy: ContextPolicy, n_tokens: int,
                 workers: int = 1) -> TokenSequence:
    """Exact inverse of encode_ranks; contexts rebuilt from decoded tokens."""
    backend = as_backend(predictor)
    rs = ranks.ranks if isinstance(ranks, RankStream) else list(ranks)
    if len(rs) != n_tokens:
        raise CorruptStreamError(f"rank stream has {len(rs)} entries, expected {n_tokens}")
    V = backend.vocab_size
    for r in rs:
        if not 0 <= r < V:
            raise CorruptStreamError(f"rank {r} outside vocabulary")
    W = policy.window

    if backend.is_remote:
        toks = _decode_ranks_remote(rs, backend, policy, n_tokens)
        return TokenSequence(toks, V)

    state = backend.state
    if policy.mode == DYNAMIC:
        def decode_chunk(span):
            s, e = span
            q = state.querier()
            out = []
            for j in range(s, e):
                t = int(q.entry().ranking[rs[j]])
                out.append(t)
                q.push(t)
            return out
        parts = chunk_map(chunk_spans(n_tokens, W), decode_chunk, workers)
        return TokenSequence([t for part in parts for t in part], V)

    q = state.querier(maxlen=min(state.k, W))
    out = []
    for r in rs:
        t = int(q.entry().ranking[r])
        out.append(t)
        q.push(t)
    return TokenSequence(out, V)


def _decode_ranks_remote(rs, backend, policy, n_tokens):
    W = policy.window
    if policy.mode == DYNAMIC:
        spans = chunk_spans(n_tokens, W)
        chunks = [[] for _ in spans]
        for i in range(W):
            live = [(ci, s + i) for ci, (s, e) in enumerate(spans) if s + i < e]
            if not live:
                break
            items = [(chunks[ci], rs[j]) for ci, j in live]
            found = backend.tokens_at(items)
            for (ci, _), t in zip(live, found):
                chunks[ci].append(t)
        return [t for chunk in chunks for t in chunk]
    out = []
    for j in range(n_tokens):
        t = backend.tokens_at([(out[max(0, j - W): j], rs[j])])[0]
        out.append(t)
    return out
