"""Lossless predictive text compression toolkit.

Pipeline: memorize a predictor on the data being compressed, transform
tokens into model ranks (or arithmetic-code them directly against the
model's distributions), squeeze the result with a secondary codec, and bind
everything needed for exact reconstruction into a self-describing archive.
A deterministic built-in context model makes the whole chain verifiable on a
laptop; LLM-backed predictors plug in over a small wire protocol.
"""

from .archive import ArchiveHeader, read_archive, write_archive
from .entropy_coder import CodedBitstream, RangeDecoder, RangeEncoder, ac_decode, ac_encode
from .errors import (
    ConfigurationError,
    CorruptArchiveError,
    CorruptStreamError,
    ExternalToolError,
    FzipError,
    ModelMismatchError,
    NotAnArchiveError,
    RemotePredictorError,
    TransportError,
    UndefinedRatioError,
    UnsupportedVersionError,
)
from .pipeline import (
    CompressConfig,
    compress,
    compress_file,
    compress_report,
    decompress,
    decompress_file,
    decompress_report,
    ratio,
)
from .predictor import (
    Distribution,
    ModelState,
    distribution,
    fit,
    rank_of,
    ranking,
    token_at,
)
from .rank_codec import ContextPolicy, RankStream, decode_ranks, encode_ranks
from .secondary_codec import (
    compress_builtin,
    decompress_builtin,
    deserialize_ranks,
    serialize_ranks,
)
from .tokenizer import TokenSequence, decode, encode

__version__ = "0.1.0"

__all__ = [
    "ArchiveHeader",
    "CodedBitstream",
    "CompressConfig",
    "ConfigurationError",
    "ContextPolicy",
    "CorruptArchiveError",
    "CorruptStreamError",
    "Distribution",
    "ExternalToolError",
    "FzipError",
    "ModelMismatchError",
    "ModelState",
    "NotAnArchiveError",
    "RangeDecoder",
    "RangeEncoder",
    "RankStream",
    "RemotePredictorError",
    "TokenSequence",
    "TransportError",
    "UndefinedRatioError",
    "UnsupportedVersionError",
    "ac_decode",
    "ac_encode",
    "compress",
    "compress_builtin",
    "compress_file",
    "compress_report",
    "decode",
    "decode_ranks",
    "decompress",
    "decompress_builtin",
    "decompress_file",
    "decompress_report",
    "deserialize_ranks",
    "distribution",
    "encode",
    "encode_ranks",
    "fit",
    "rank_of",
    "ranking",
    "ratio",
    "read_archive",
    "serialize_ranks",
    "token_at",
    "write_archive",
]
