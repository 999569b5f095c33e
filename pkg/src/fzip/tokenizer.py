"""Byte-level tokenization and the tokenizer registry.

The built-in "byte" tokenizer maps every input byte to its own token id
(vocabulary size 256), which keeps desk-scale round trips bit-exact without
any vocabulary to store. Subword tokenizers live behind the external
predictor protocol; they are addressed by the tokenizer id negotiated in the
HELLO handshake and used through a PredictorSession.
"""

from dataclasses import dataclass, field

from .errors import ConfigurationError, CorruptStreamError

BYTE_TOKENIZER_ID = "byte"
BYTE_VOCAB = 256


@dataclass(frozen=True)
class TokenSequence:
    """A corpus as integer token ids in [0, vocab_size)."""

    tokens: list[int] = field(default_factory=list)
    vocab_size: int = BYTE_VOCAB

    def __post_init__(self):
        if self.vocab_size < 2:
            raise ConfigurationError("vocab_size must be at least 2")

    def __len__(self):
        return len(self.tokens)


def encode(data: bytes, tokenizer_id: str = BYTE_TOKENIZER_ID, session=None) -> TokenSequence:
    """Tokenize raw bytes.

    ``session`` is a protocol.PredictorSession and is required for any id
    other than "byte"; the id must match what the session negotiated.
    """
    if tokenizer_id == BYTE_TOKENIZER_ID:
        return TokenSequence(list(data), BYTE_VOCAB)
    if session is None:
        raise ConfigurationError(f"unknown tokenizer id {tokenizer_id!r} (no predictor session)")
    if session.tokenizer_id != tokenizer_id:
        raise ConfigurationError(
            f"session tokenizer is {session.tokenizer_id!r}, archive wants {tokenizer_id!r}"
        )
    return TokenSequence(session.tokenize(data), session.vocab_size)


def decode(seq: TokenSequence, tokenizer_id: str = BYTE_TOKENIZER_ID, session=None) -> bytes:
    """Inverse of encode for the same tokenizer id."""
    if tokenizer_id == BYTE_TOKENIZER_ID:
        for t in seq.tokens:
            if not 0 <= t < BYTE_VOCAB:
                raise CorruptStreamError(f"token id {t} outside byte vocabulary")
        return bytes(seq.tokens)
    if session is None:
        raise ConfigurationError(f"unknown tokenizer id {tokenizer_id!r} (no predictor session)")
    if session.tokenizer_id != tokenizer_id:
        raise ConfigurationError(
            f"session tokenizer is {session.tokenizer_id!r}, archive wants {tokenizer_id!r}"
        )
    return session.detokenize(seq.tokens)
