"""Frozen wire-protocol conformance frames.

These byte strings are the normative encodings of one example of every
frame kind. Any implementation of either side of the predictor protocol
(this package's client, the in-repo mock, external services) must produce
and accept exactly these bytes for the corresponding inputs; the values are
frozen so format drift fails loudly. See tests/test_protocol.py for the
inputs each frame encodes.
"""

GOLDEN_FRAMES = {
    "hello_request": "0100000000",
    "hello_response": "1c00000000000100000400627974650b006d6f636b2d6563686f2f3140000000",
    "ranks_request": "180000000302030100000002000000030000000700000000ff000000",
    "ranks_response": "090000000307000000ff000000",
    "tokens_at_request": "0b0000000401010900000000000000",
    "tokens_at_response": "05000000042a000000",
    "dists_request": "0c000000050202050000000600000000",
    "tokenize_request": "03000000016869",
    "tokenize_response": "09000000016800000069000000",
    "detokenize_request": "09000000026800000069000000",
    "detokenize_response": "03000000026869",
    "memorize_request": "0b00000006636f7270757304000000",
    "memorize_response": "10000000060900616461707465722d31424c4f42",
    "load_adapter_request": "0900000006424c4f42ffffffff",
    "error": "07000000ff0400626f6f6d",
}


def frame_bytes(name: str) -> bytes:
    return bytes.fromhex(GOLDEN_FRAMES[name])
