import math
import random
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fzip import secondary_codec
from fzip.errors import ConfigurationError, CorruptStreamError, ExternalToolError
from fzip.rank_codec import RankStream
from fzip.secondary_codec import (
    compress,
    compress_builtin,
    compress_external,
    decompress,
    decompress_builtin,
    deserialize_ranks,
    parse_extcmd,
    serialize_ranks,
)


def test_serialize_examples():
    assert serialize_ranks(RankStream([0, 0, 0])) == b"\x00\x00\x00"
    assert serialize_ranks(RankStream([300])) == b"\xac\x02"
    assert serialize_ranks(RankStream([])) == b""


def test_deserialize_examples():
    assert deserialize_ranks(b"\x00\x00\x00", 3) == [0, 0, 0]
    assert deserialize_ranks(b"\xac\x02", 1) == [300]
    with pytest.raises(CorruptStreamError):
        deserialize_ranks(b"\x00\x00", 3)
    with pytest.raises(CorruptStreamError):
        deserialize_ranks(b"\x00\x00", 1)  # trailing bytes


def test_rank_round_trip_many():
    rng = random.Random(20)
    for _ in range(200):
        ranks = [rng.randrange(1 << rng.choice([4, 8, 14])) for _ in range(rng.randrange(300))]
        data = serialize_ranks(RankStream(ranks))
        assert deserialize_ranks(data, len(ranks)) == ranks


def test_builtin_repetitive():
    data = b"\x41" * 10_000
    comp = compress_builtin(data)
    assert len(comp) < 64
    assert decompress_builtin(comp, len(data)) == data


def test_builtin_empty():
    comp = compress_builtin(b"")
    assert decompress_builtin(comp, 0) == b""


def test_builtin_incompressible_guard():
    rng = random.Random(21)
    data = bytes(rng.randrange(256) for _ in range(10_000))
    comp = compress_builtin(data)
    assert len(comp) <= 1.02 * len(data) + 16
    assert decompress_builtin(comp, len(data)) == data


@settings(max_examples=60, deadline=None)
@given(st.binary(max_size=4096))
def test_builtin_round_trip_property(data):
    assert decompress_builtin(compress_builtin(data), len(data)) == data


def test_builtin_zero_run_alphabet():
    # long zero runs must land well below one bit per input byte
    data = b"\x00" * 50_000
    comp = compress_builtin(data)
    assert len(comp) * 8 < len(data) * 0.02


def test_rank_skew_under_two_bits():
    # memorized rank streams: zero-heavy with a tight, clustered tail
    rng = random.Random(22)
    ranks = []
    while len(ranks) < 50_000:
        ranks.extend([0] * rng.randrange(2, 30))
        ranks.append(rng.choice([1, 1, 1, 2, 2, 3]))
    ranks = ranks[:50_000]
    assert sum(1 for r in ranks if r == 0) / len(ranks) >= 0.6
    data = serialize_ranks(RankStream(ranks))
    comp = compress_builtin(data)
    bits_per_rank = len(comp) * 8 / len(ranks)
    assert bits_per_rank < 2.0


def test_builtin_corrupt_stream_errors():
    data = compress_builtin(b"hello world, hello world")
    for cut in (0, 3, len(data) - 1):
        with pytest.raises(CorruptStreamError):
            decompress_builtin(data[:cut], 24)


def test_extcmd_parse():
    comp, dec = parse_extcmd("extcmd:bzip2 -c|bzip2 -dc")
    assert comp == "bzip2 -c"
    assert dec == "bzip2 -dc"
    with pytest.raises(ConfigurationError):
        parse_extcmd("extcmd:only-one-command")
    with pytest.raises(ConfigurationError):
        parse_extcmd("extcmd:|x")


def test_extcmd_identity():
    data = b"pass through unchanged"
    assert compress_external("cat", data) == data


def test_extcmd_round_trip_with_python():
    codec = (f"extcmd:{sys.executable} -c \"import sys,zlib;"
             "sys.stdout.buffer.write(zlib.compress(sys.stdin.buffer.read()))\""
             f"|{sys.executable} -c \"import sys,zlib;"
             "sys.stdout.buffer.write(zlib.decompress(sys.stdin.buffer.read()))\"")
    data = b"abcabcabc" * 100
    comp = compress(data, codec)
    assert decompress(comp, codec) == data
    assert len(comp) < len(data)


def test_extcmd_missing_binary():
    with pytest.raises(ExternalToolError):
        compress_external("definitely-not-a-real-binary-xyz", b"data")


def test_extcmd_failing_command():
    with pytest.raises(ExternalToolError):
        compress_external(f"{sys.executable} -c \"import sys; sys.exit(3)\"", b"data")


def test_dispatch_none():
    assert compress(b"abc", "none") == b"abc"
    assert decompress(b"abc", "none") == b"abc"


def test_dispatch_unknown():
    with pytest.raises(ConfigurationError):
        compress(b"", "zpaq")


def test_dispatch_builtin_prefixes_length():
    data = b"xyz" * 100
    comp = compress(data, "builtin-mrl")
    assert decompress(comp, "builtin-mrl") == data
