"""In-repo protocol test double: a uniform "echo" predictor.

Implements every protocol opcode over the byte tokenizer with uniform
probabilities, so the rank of a token is the token id itself and decoding a
rank returns it unchanged. Pipelines wired through it round-trip any input,
which makes it the integration fixture for the wire protocol without a real
model. Run as a child-process predictor with:

    python -m fzip.mock_predictor        (stdio transport, "cmd:" addresses)

or embed MockPredictorServer in tests for a TCP endpoint.
"""

import socket
import struct
import sys
import threading

import numpy as np

from . import protocol
from .errors import FzipError

VOCAB = 256
VERSION = "mock-echo/1"


class EchoPredictorHandler:
    """Stateless frame handler; one instance per connection."""

    def __init__(self, max_batch: int = 64):
        self.max_batch = max_batch

    def handle(self, opcode: int, body: bytes) -> tuple[int, bytes]:
        try:
            return opcode, self._dispatch(opcode, body)
        except FzipError as exc:
            return protocol.OP_ERROR, protocol.build_error(str(exc))
        except Exception as exc:  # malformed body and similar
            return protocol.OP_ERROR, protocol.build_error(f"{type(exc).__name__}: {exc}")

    def _dispatch(self, opcode: int, body: bytes) -> bytes:
        if opcode == protocol.OP_HELLO:
            return protocol.build_hello_response(VOCAB, "byte", VERSION, self.max_batch)
        if opcode == protocol.OP_TOKENIZE:
            return protocol.build_u32_array(list(body))
        if opcode == protocol.OP_DETOKENIZE:
            ids = protocol.parse_u32_array(body)
            if any(t >= VOCAB for t in ids):
                raise ValueError("token id outside byte vocabulary")
            return bytes(ids)
        if opcode == protocol.OP_RANKS:
            items = protocol.parse_items(body)
            self._check_batch(len(items))
            return protocol.build_u32_array([target for _, target in items])
        if opcode == protocol.OP_TOKENS_AT:
            items = protocol.parse_items(body)
            self._check_batch(len(items))
            if any(rank >= VOCAB for _, rank in items):
                raise ValueError("rank outside vocabulary")
            return protocol.build_u32_array([rank for _, rank in items])
        if opcode == protocol.OP_DISTS:
            contexts = protocol.parse_contexts(body)
            self._check_batch(len(contexts))
            uniform = np.full(VOCAB, protocol.DIST_TOTAL // VOCAB, dtype="<u2")
            return uniform.tobytes() * len(contexts)
        if opcode == protocol.OP_MEMORIZE:
            protocol.parse_memorize_request(body)
            # training and adapter loading are both no-ops for a uniform predictor
            return protocol.build_memorize_response("echo", b"")
        raise ValueError(f"unknown opcode {opcode}")

    def _check_batch(self, n: int) -> None:
        if n > self.max_batch:
            raise ValueError(f"batch of {n} exceeds max_batch {self.max_batch}")


def serve_connection(handler, recv_exact, send) -> None:
    """Frame loop shared by the TCP and stdio entry points."""
    while True:
        header = recv_exact(5)
        if header is None:
            return
        length, opcode = struct.unpack("<IB", header)
        body = recv_exact(length - 1) if length > 1 else b""
        if body is None:
            return
        resp_op, resp_body = handler.handle(opcode, body)
        send(protocol.pack_frame(resp_op, resp_body))


class MockPredictorServer:
    """Threaded TCP echo predictor bound to 127.0.0.1; use as a context manager."""

    def __init__(self, max_batch: int = 64):
        self.max_batch = max_batch
        self._sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        self._sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        self._sock.bind(("127.0.0.1", 0))
        self._sock.listen(16)
        self.port = self._sock.getsockname()[1]
        self.address = f"tcp:127.0.0.1:{self.port}"
        self._closing = False
        self._thread = threading.Thread(target=self._accept_loop, daemon=True)
        self._thread.start()

    def _accept_loop(self):
        while not self._closing:
            try:
                conn, _ = self._sock.accept()
            except OSError:
                return
            threading.Thread(target=self._serve, args=(conn,), daemon=True).start()

    def _serve(self, conn):
        handler = EchoPredictorHandler(self.max_batch)

        def recv_exact(n):
            chunks = []
            while n:
                try:
                    chunk = conn.recv(n)
                except OSError:
                    return None
                if not chunk:
                    return None
                chunks.append(chunk)
                n -= len(chunk)
            return b"".join(chunks)

        try:
            serve_connection(handler, recv_exact, conn.sendall)
        finally:
            conn.close()

    def close(self):
        self._closing = True
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def main() -> int:
    handler = EchoPredictorHandler()
    stdin = sys.stdin.buffer
    stdout = sys.stdout.buffer

    def recv_exact(n):
        data = stdin.read(n)
        return data if data and len(data) == n else None

    def send(data):
        stdout.write(data)
        stdout.flush()

    serve_connection(handler, recv_exact, send)
    return 0


if __name__ == "__main__":
    sys.exit(main())
