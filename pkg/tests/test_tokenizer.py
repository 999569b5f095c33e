import pytest
from hypothesis import given
from hypothesis import strategies as st

from fzip import tokenizer
from fzip.errors import ConfigurationError, CorruptStreamError


def test_byte_identity():
    seq = tokenizer.encode(b"abc")
    assert seq.tokens == [97, 98, 99]
    assert seq.vocab_size == 256


def test_empty():
    seq = tokenizer.encode(b"")
    assert seq.tokens == []
    assert tokenizer.decode(seq) == b""


def test_decode_examples():
    assert tokenizer.decode(tokenizer.TokenSequence([97, 98, 99])) == b"abc"


@given(st.binary(max_size=2048))
def test_round_trip_property(data):
    assert tokenizer.decode(tokenizer.encode(data)) == data


def test_tokens_equal_bytes():
    data = bytes(range(256))
    seq = tokenizer.encode(data)
    assert all(t == b for t, b in zip(seq.tokens, data))


def test_unknown_tokenizer():
    with pytest.raises(ConfigurationError):
        tokenizer.encode(b"x", "no-such-tokenizer")
    with pytest.raises(ConfigurationError):
        tokenizer.decode(tokenizer.TokenSequence([1]), "no-such-tokenizer")


def test_out_of_range_token_is_corrupt():
    with pytest.raises(CorruptStreamError):
        tokenizer.decode(tokenizer.TokenSequence([300], vocab_size=512))


def test_vocab_size_validation():
    with pytest.raises(ConfigurationError):
        tokenizer.TokenSequence([], vocab_size=1)
