import random
from fractions import Fraction

import numpy as np
import pytest

from fzip import predictor, tokenizer
from fzip.errors import ConfigurationError, CorruptStreamError
from fzip.predictor import (
    QUANT_TOTAL,
    ModelState,
    deserialize,
    distribution,
    fit,
    parse_builtin_id,
    rank_of,
    ranking,
    token_at,
)


def seq(tokens, V=256):
    return tokenizer.TokenSequence(list(tokens), V)


def reference_distribution(state, context):
    """Independent oracle: Fraction interpolation + its own largest-remainder."""
    V = state.vocab_size
    probs = [Fraction(1, V)] * V
    ctx = list(context)[-state.k:] if state.k else []
    for order in range(0, len(ctx) + 1):
        node = state.tables[order].get(tuple(ctx[len(ctx) - order:]))
        if node is None:
            continue
        counts = dict(zip(node.tokens.tolist(), node.counts.tolist()))
        n = node.total
        probs = [Fraction(counts.get(t, 0) + probs[t], n + 1) for t in range(V)]
    units = QUANT_TOTAL - V
    scaled = [p * units for p in probs]
    floors = [int(s) for s in scaled]
    remainders = [s - f for s, f in zip(scaled, floors)]
    leftover = units - sum(floors)
    order = sorted(range(V), key=lambda t: (-remainders[t], t))
    q = [f + 1 for f in floors]
    for t in order[:leftover]:
        q[t] += 1
    return q


# -- fit ------------------------------------------------------------------------


def test_fit_hand_counted_tables():
    st = fit(seq([1, 2, 1, 2, 1]), k=1)
    root = st.tables[0][()]
    assert dict(zip(root.tokens.tolist(), root.counts.tolist())) == {1: 3, 2: 2}
    assert root.total == 5
    n1 = st.tables[1][(1,)]
    assert dict(zip(n1.tokens.tolist(), n1.counts.tolist())) == {2: 2}
    n2 = st.tables[1][(2,)]
    assert dict(zip(n2.tokens.tolist(), n2.counts.tolist())) == {1: 2}


def test_fit_single_token():
    st = fit(seq([5]), k=3)
    root = st.tables[0][()]
    assert dict(zip(root.tokens.tolist(), root.counts.tolist())) == {5: 1}
    for order in range(1, 4):
        assert st.tables[order] == {}


def test_fit_epochs_do_not_change_predictions():
    corpus = seq([random.Random(0).randrange(8) for _ in range(500)])
    st1 = fit(corpus, epochs=1)
    st4 = fit(corpus, epochs=4)
    rng = random.Random(1)
    for _ in range(50):
        ctx = [rng.randrange(8) for _ in range(rng.randrange(5))]
        d1 = distribution(st1, ctx)
        d4 = distribution(st4, ctx)
        assert np.array_equal(d1.counts, d4.counts)
    assert st4.epochs_requested == 4


def test_fit_empty_corpus_warns():
    st = fit(seq([]), k=3)
    assert not st.fitted
    assert st.empty_corpus
    d = distribution(st, [])
    assert (d.counts == QUANT_TOTAL // 256).all()


def test_fit_rejects_bad_epochs_and_tokens():
    with pytest.raises(ConfigurationError):
        fit(seq([1]), epochs=0)
    with pytest.raises(ConfigurationError):
        fit(seq([300]))


def test_fit_matches_generic_counter():
    rng = random.Random(2)
    toks = [rng.randrange(6) for _ in range(400)]
    fast = fit(seq(toks), k=3)
    slow_tables = predictor._count_tables_generic(toks, 3)
    for order in range(4):
        assert set(fast.tables[order]) == set(slow_tables[order])
        for key, node in fast.tables[order].items():
            other = slow_tables[order][key]
            assert node.tokens.tolist() == other.tokens.tolist()
            assert node.counts.tolist() == other.counts.tolist()


def test_fit_pruning():
    # contexts: (1,)->{2:2, 3:1} total 3, (2,)->{1:2} total 2
    toks = [1, 2, 1, 2, 1, 3]
    st = fit(seq(toks), k=1, prune_min_total={1: 3})
    assert (1,) in st.tables[1]
    assert (2,) not in st.tables[1]
    st2 = fit(seq(toks), k=1, prune_min_total={1: 4})
    assert st2.tables[1] == {}
    st3 = fit(seq(toks), k=1, prune_min_count={1: 2})
    assert st3.tables[1][(1,)].tokens.tolist() == [2]  # count-1 pair for 3 dropped
    assert st3.tables[1][(1,)].total == 2


# -- distribution ----------------------------------------------------------------


def test_distribution_uniform_unfitted():
    st = ModelState(3, 256, [dict() for _ in range(4)], fitted=False)
    d = distribution(st, [10, 20])
    assert (d.counts == 256).all()
    assert int(d.counts.sum()) == QUANT_TOTAL


def test_distribution_fitted_strict_max():
    st = fit(seq([1, 2, 1, 2, 1]), k=1)
    d = distribution(st, [1])
    top = int(np.argmax(d.counts))
    assert top == 2
    second = int(np.sort(d.counts)[-2])
    assert int(d.counts[2]) > second  # strict maximum


def test_distribution_sums_to_total_random_states():
    rng = random.Random(3)
    for _ in range(100):
        n = rng.randrange(1, 300)
        toks = [rng.randrange(rng.choice([4, 64, 256])) for _ in range(n)]
        st = fit(seq(toks), k=rng.choice([0, 1, 2, 3]))
        ctx = [rng.randrange(256) for _ in range(rng.randrange(6))]
        d = distribution(st, ctx)
        assert int(d.counts.sum()) == QUANT_TOTAL
        assert int(d.counts.min()) >= 1


def test_distribution_matches_fraction_oracle():
    rng = random.Random(4)
    for trial in range(40):
        n = rng.randrange(1, 200)
        V = rng.choice([4, 16, 256])
        toks = [rng.randrange(V) for _ in range(n)]
        st = fit(seq(toks, V), k=rng.choice([1, 2, 3]))
        ctx = [rng.randrange(V) for _ in range(rng.randrange(5))]
        got = distribution(st, ctx).counts.tolist()
        want = reference_distribution(st, ctx)
        assert got == want, (trial, V, ctx)


def test_distribution_determinism():
    toks = [random.Random(5).randrange(256) for _ in range(1000)]
    st1 = fit(seq(toks), k=3)
    st2 = fit(seq(toks), k=3)
    ctx = toks[10:13]
    assert np.array_equal(distribution(st1, ctx).counts,
                          distribution(st2, ctx).counts)


def test_context_beyond_order_is_truncated():
    toks = [random.Random(6).randrange(16) for _ in range(500)]
    st = fit(seq(toks), k=2)
    long_ctx = toks[:40]
    assert np.array_equal(distribution(st, long_ctx).counts,
                          distribution(st, long_ctx[-2:]).counts)


# -- ranking and inverses ---------------------------------------------------------


def test_ranking_uniform_identity():
    st = ModelState(3, 256, [dict() for _ in range(4)], fitted=False)
    assert ranking(st, []) == list(range(256))
    assert rank_of(st, [], 42) == 42
    assert token_at(st, [], 42) == 42


def test_ranking_fitted_example():
    st = fit(seq([1, 2, 1, 2, 1]), k=1)
    r = ranking(st, [1])
    assert r[0] == 2
    assert rank_of(st, [1], 2) == 0
    assert sorted(r) == list(range(256))


def test_rank_token_inverse_property():
    rng = random.Random(7)
    toks = [rng.randrange(64) for _ in range(2000)]
    st = fit(seq(toks), k=3)
    for _ in range(10_000):
        ctx = [rng.randrange(64) for _ in range(rng.randrange(4))]
        t = rng.randrange(256)
        assert token_at(st, ctx, rank_of(st, ctx, t)) == t


def test_rank_errors():
    st = ModelState(1, 256, [dict(), dict()], fitted=False)
    with pytest.raises(CorruptStreamError):
        token_at(st, [], 256)
    with pytest.raises(ValueError):
        rank_of(st, [], 300)


def test_ties_break_by_token_id():
    # two tokens with identical counts: lower id first
    st = fit(seq([3, 9, 3, 9]), k=0)
    r = ranking(st, [])
    assert r.index(3) < r.index(9)


# -- memorization effect -----------------------------------------------------------


def test_memorization_increases_rank0_fraction(text_100kb):
    data, _ = text_100kb
    toks = tokenizer.encode(data[:20_000])
    fitted = fit(toks, k=3)
    unfitted = ModelState(3, 256, [dict() for _ in range(4)], fitted=False)

    def rank0_fraction(state):
        q = state.querier()
        hits = 0
        for i, t in enumerate(toks.tokens):
            if i % 512 == 0:
                q.reset()
            if int(q.entry().rank_inv[t]) == 0:
                hits += 1
            q.push(t)
        return hits / len(toks.tokens)

    assert rank0_fraction(fitted) >= rank0_fraction(unfitted)


# -- serialization -----------------------------------------------------------------


def test_serialize_round_trip():
    rng = random.Random(8)
    toks = [rng.randrange(256) for _ in range(3000)]
    st = fit(seq(toks), k=3)
    blob = st.serialize()
    back = deserialize(blob)
    assert back.k == st.k and back.vocab_size == st.vocab_size
    for order in range(4):
        assert set(back.tables[order]) == set(st.tables[order])
        for key in st.tables[order]:
            a, b = st.tables[order][key], back.tables[order][key]
            assert a.tokens.tolist() == b.tokens.tolist()
            assert a.counts.tolist() == b.counts.tolist()
    assert back.serialize() == blob
    assert back.fingerprint() == st.fingerprint()


def test_serialize_unfitted_is_minimal():
    st = ModelState(3, 256, [dict() for _ in range(4)], fitted=False)
    blob = st.serialize()
    back = deserialize(blob)
    assert not back.fitted
    assert back.k == 3


def test_deserialize_rejects_garbage():
    with pytest.raises(CorruptStreamError):
        deserialize(b"")
    with pytest.raises(CorruptStreamError):
        deserialize(b"\xff\x01\x02")
    st = fit(seq([1, 2, 3]), k=1)
    blob = st.serialize()
    with pytest.raises(CorruptStreamError):
        deserialize(blob + b"\x00")


def test_fingerprint_changes_with_model():
    a = fit(seq([1, 2, 3, 4]), k=2)
    b = fit(seq([1, 2, 3, 5]), k=2)
    assert a.fingerprint() != b.fingerprint()
    assert len(a.fingerprint()) == 8


# -- ids ---------------------------------------------------------------------------


def test_parse_builtin_id():
    assert parse_builtin_id("builtin-ctx3") == 3
    assert parse_builtin_id("builtin-ctx0") == 0
    with pytest.raises(ConfigurationError):
        parse_builtin_id("builtin-ctx")
    with pytest.raises(ConfigurationError):
        parse_builtin_id("ext:tcp:localhost:1")
    with pytest.raises(ConfigurationError):
        parse_builtin_id("builtin-ctx99")
