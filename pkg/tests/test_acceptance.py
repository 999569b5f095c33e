"""Acceptance suite: one test per exit criterion, at its stated tolerance.

Each test prints one PASS line on success (run with -s or -rA to see them);
a failed assertion is the criterion failing. Criteria defined on the real
benchmark corpus skip with an explanatory message when it is not on disk
(FZIP_ENWIK8; see README), and where a surrogate corpus is statistically
adequate the same check runs against it, labeled as such.
"""

import itertools
import math
import random

import numpy as np
import pytest

import fzip
from fzip import bench, entropy_coder, predictor, rank_codec, secondary_codec, tokenizer
from fzip.entropy_coder import MAX_TOTAL, ac_encode, cost_bits
from fzip.errors import FzipError
from fzip.pipeline import (
    CompressConfig,
    compress,
    compress_report,
    compressed_ranks,
    decompress,
)
from fzip.rank_codec import ContextPolicy, encode_ranks

from conftest import corpus_suite, make_corpus


def report(name, detail):
    print(f"ACCEPTANCE {name}: PASS ({detail})")


MATRIX = list(itertools.product(["rank", "ac"], ["dynamic", "sliding"],
                                [False, True], ["builtin-mrl", "none"]))


def test_criterion_losslessness_matrix(text_1mb):
    corpora = corpus_suite(200, max_size=1 << 16, seed=2024)
    checked = 0
    for data in corpora:
        for mode, ctx, mem, sec in MATRIX:
            cfg = CompressConfig(mode=mode, context_mode=ctx, memorize=mem,
                                 secondary_id=sec)
            blob = compress(data, cfg)
            assert decompress(blob) == data, (len(data), mode, ctx, mem, sec)
            checked += 1
    big, corpus_name = text_1mb
    for mode, ctx, mem, sec in MATRIX:
        cfg = CompressConfig(mode=mode, context_mode=ctx, memorize=mem,
                             secondary_id=sec)
        blob = compress(big, cfg)
        assert decompress(blob) == big, (corpus_name, mode, ctx, mem, sec)
        checked += 1
    report("losslessness-matrix",
           f"{checked} compress/decompress cycles exact, incl. 1MB {corpus_name}")


def test_criterion_baseline_ratios(enwik8):
    data = enwik8[: 10 * 10**6]
    rows = {r["method"]: r for r in bench.bench_table1(
        data, ["bzip2", "gzip", "zlib"], corpus="enwik8[0:10MB]")}
    expected = {"bzip2": 0.2374, "gzip": 0.3238, "zlib": 0.3251}
    for method, want in expected.items():
        assert rows[method]["status"] == "ok", f"{method} unavailable"
        got = float(rows[method]["ratio"])
        assert abs(got - want) <= 0.015, (method, got, want)
    report("baseline-ratios", ", ".join(
        f"{m}={float(rows[m]['ratio']):.4f}" for m in expected))


def test_criterion_batched_equals_sequential():
    corpora = corpus_suite(50, max_size=1 << 14, seed=77)
    for i, data in enumerate(corpora):
        mode = "rank" if i % 2 == 0 else "ac"
        archives = {}
        outputs = {}
        for workers in (1, 2, 8):
            cfg = CompressConfig(mode=mode, context_mode="dynamic", window=256,
                                 memorize=bool(i % 3), workers=workers)
            blob = compress(data, cfg)
            archives[workers] = blob
            outputs[workers] = decompress(blob, workers=workers)
        assert archives[1] == archives[2] == archives[8], i
        assert outputs[1] == outputs[2] == outputs[8] == data, i
    report("batched-equals-sequential", "50 corpora x workers {1,2,8} byte-identical")


def test_criterion_rank_ac_ordering(text_1mb):
    data, corpus_name = text_1mb
    rank_blob = compress(data, CompressConfig(mode="rank", memorize=True))
    ac_blob = compress(data, CompressConfig(mode="ac", memorize=True))
    assert len(ac_blob) <= len(rank_blob), (len(ac_blob), len(rank_blob))
    report("rank-ac-ordering",
           f"{corpus_name}: ac={len(ac_blob)} <= rank={len(rank_blob)}")


def test_criterion_memorization_benefit(text_1mb):
    data, corpus_name = text_1mb
    mem_ranks = compressed_ranks(data, CompressConfig(memorize=True))
    nomem_ranks = compressed_ranks(data, CompressConfig(memorize=False))
    mem_r0 = sum(1 for r in mem_ranks if r == 0) / len(mem_ranks)
    nomem_r0 = sum(1 for r in nomem_ranks if r == 0) / len(nomem_ranks)
    assert mem_r0 > nomem_r0, (mem_r0, nomem_r0)
    mem_payload = len(secondary_codec.serialize_ranks(mem_ranks))
    nomem_payload = len(secondary_codec.serialize_ranks(nomem_ranks))
    assert mem_payload < nomem_payload, (mem_payload, nomem_payload)
    report("memorization-benefit",
           f"{corpus_name}: rank0 {nomem_r0:.4f}->{mem_r0:.4f}, "
           f"pre-secondary payload {nomem_payload}->{mem_payload}")


def test_criterion_coder_near_optimality():
    rng = np.random.default_rng(55)
    policy = ContextPolicy("dynamic", 128)
    for trial in range(100):
        data = make_corpus(rng, int(rng.integers(0, 4096)))
        toks = tokenizer.encode(data)
        st = (predictor.fit(toks, k=2) if len(toks)
              else predictor.ModelState(2, 256, [dict() for _ in range(3)], fitted=False))
        coded = ac_encode(toks, st, policy)
        chunks = max(1, math.ceil(len(toks) / policy.window)) if len(toks) else 1
        bound_bits = cost_bits(toks, st, policy) + 64 * chunks
        assert len(coded.data) * 8 <= bound_bits + 8, trial

    expansions = []
    for seed in (1, 2, 3):
        blob = bytes(np.random.default_rng(seed).integers(0, 256, 10_000, dtype=np.uint8))
        comp = secondary_codec.compress_builtin(blob)
        assert len(comp) <= 1.02 * len(blob) + 16, (seed, len(comp))
        expansions.append(len(comp) / len(blob))
    report("coder-near-optimality",
           f"100 AC corpora within bound; order-0 expansion max {max(expansions):.4f}")


def test_criterion_bounded_divergence(text_100kb):
    data, corpus_name = text_100kb
    toks = tokenizer.encode(data)
    st = predictor.fit(toks, k=3)  # order-3 built-in predictor, exact tables
    W = 512
    dyn = encode_ranks(toks, st, ContextPolicy("dynamic", W)).ranks
    sli = encode_ranks(toks, st, ContextPolicy("sliding", W)).ranks
    diffs = [j for j, (a, b) in enumerate(zip(dyn, sli)) if a != b]
    assert all(j % W < 3 for j in diffs), diffs[:10]
    report("bounded-divergence",
           f"{corpus_name} 100KB: {len(diffs)} diffs, all at chunk offsets < 3")


def test_criterion_ratio_beats_gzip_class(text_1mb):
    data, corpus_name = text_1mb
    blob, rep = compress_report(data, CompressConfig(mode="rank", memorize=True,
                                                     secondary_id="builtin-mrl"))
    assert decompress(blob) == data
    measured = len(blob) / len(data)
    if corpus_name != "enwik8":
        pytest.skip(f"criterion is defined on enwik8[0:1MB]; surrogate measures "
                    f"{measured:.4f} against the 0.33 bar (not asserted)")
    assert measured < 0.33, measured
    report("ratio-beats-gzip-class", f"total ratio {measured:.4f} < 0.33")


def test_criterion_corruption_safety():
    rng = random.Random(90)
    archives = []
    for mode, mem, sec in (("rank", True, "builtin-mrl"), ("ac", True, "none"),
                           ("rank", False, "none"), ("ac", False, "builtin-mrl")):
        data = make_corpus(np.random.default_rng(len(archives)), 3000)
        cfg = CompressConfig(mode=mode, memorize=mem, secondary_id=sec, window=256)
        archives.append((data, compress(data, cfg)))
    cases = 0
    for data, blob in archives:
        for _ in range(1500):  # single-byte flips
            pos = rng.randrange(len(blob))
            mutated = bytearray(blob)
            mutated[pos] ^= rng.randrange(1, 256)
            with pytest.raises(FzipError):
                decompress(bytes(mutated))
            cases += 1
        for _ in range(1000):  # truncations
            cut = rng.randrange(len(blob))
            with pytest.raises(FzipError):
                decompress(blob[:cut])
            cases += 1
    assert cases == 10_000
    report("corruption-safety", f"{cases} fuzz cases all raised categorized errors")
