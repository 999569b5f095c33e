"""Client side of the batched external-predictor wire protocol.

Any process can act as tokenizer + predictor by speaking this protocol over
a byte stream (TCP, unix socket, or the stdio of a spawned child). Frames
are u32 little-endian length (opcode byte + body), then the opcode byte,
then the body. One request is in flight per session; parallelism comes from
opening more sessions.

Opcodes:
    HELLO(0)       -> vocab_size u32, tokenizer_id str, version str, max_batch u32
    TOKENIZE(1)    raw bytes -> token ids u32[]
    DETOKENIZE(2)  token ids u32[] -> raw bytes
    RANKS(3)       items (context + target token) -> u32 rank per item
    TOKENS_AT(4)   items (context + rank) -> u32 token per item
    DISTS(5)       contexts -> per item V u16 counts summing to 65536
    MEMORIZE(6)    corpus bytes + epochs u32 -> adapter id str + adapter blob
    ERROR(255)     message str

Strings are u16 length + UTF-8. Batched requests carry a varint item count;
responses are positionally aligned. Distributions cross the wire already
quantized to the 65536 grid so both sides share exact integers. Sending
MEMORIZE with epochs == LOAD_ADAPTER_EPOCHS re-installs a previously
returned adapter blob (the corpus field carries the blob); this is how
decompression restores the memorized state recorded in an archive.
"""

import shlex
import socket
import struct
import subprocess
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import (
    ConfigurationError,
    ModelMismatchError,
    RemotePredictorError,
    TransportError,
)
from .varint import append_uvarint, read_uvarint

OP_HELLO = 0
OP_TOKENIZE = 1
OP_DETOKENIZE = 2
OP_RANKS = 3
OP_TOKENS_AT = 4
OP_DISTS = 5
OP_MEMORIZE = 6
OP_ERROR = 255

LOAD_ADAPTER_EPOCHS = 0xFFFFFFFF
DIST_TOTAL = 1 << 16
_MAX_FRAME = 1 << 30
EXT_ID_PREFIX = "ext:"


# -- frame and body codecs (shared by client, servers, and tests) -------------


def pack_frame(opcode: int, body: bytes) -> bytes:
    return struct.pack("<IB", 1 + len(body), opcode) + body


def pack_string(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<H", len(raw)) + raw


def unpack_string(body: bytes, pos: int) -> tuple[str, int]:
    if pos + 2 > len(body):
        raise TransportError("truncated string field")
    n = struct.unpack_from("<H", body, pos)[0]
    pos += 2
    if pos + n > len(body):
        raise TransportError("truncated string field")
    return body[pos: pos + n].decode("utf-8"), pos + n


def build_hello_response(vocab_size, tokenizer_id, version, max_batch) -> bytes:
    return (struct.pack("<I", vocab_size) + pack_string(tokenizer_id)
            + pack_string(version) + struct.pack("<I", max_batch))


def parse_hello_response(body: bytes):
    vocab_size = struct.unpack_from("<I", body, 0)[0]
    tokenizer_id, pos = unpack_string(body, 4)
    version, pos = unpack_string(body, pos)
    max_batch = struct.unpack_from("<I", body, pos)[0]
    return vocab_size, tokenizer_id, version, max_batch


def build_items(items) -> bytes:
    """RANKS/TOKENS_AT request body: (context, value) pairs."""
    out = bytearray()
    append_uvarint(out, len(items))
    for context, value in items:
        append_uvarint(out, len(context))
        out.extend(np.asarray(context, dtype="<u4").tobytes())
        out.extend(struct.pack("<I", value))
    return bytes(out)


def parse_items(body: bytes):
    n, pos = read_uvarint(body, 0)
    items = []
    for _ in range(n):
        ctx_len, pos = read_uvarint(body, pos)
        ctx = np.frombuffer(body, dtype="<u4", count=ctx_len, offset=pos).tolist()
        pos += 4 * ctx_len
        value = struct.unpack_from("<I", body, pos)[0]
        pos += 4
        items.append((ctx, value))
    return items


def build_contexts(contexts) -> bytes:
    """DISTS request body."""
    out = bytearray()
    append_uvarint(out, len(contexts))
    for context in contexts:
        append_uvarint(out, len(context))
        out.extend(np.asarray(context, dtype="<u4").tobytes())
    return bytes(out)


def parse_contexts(body: bytes):
    n, pos = read_uvarint(body, 0)
    contexts = []
    for _ in range(n):
        ctx_len, pos = read_uvarint(body, pos)
        ctx = np.frombuffer(body, dtype="<u4", count=ctx_len, offset=pos).tolist()
        pos += 4 * ctx_len
        contexts.append(ctx)
    return contexts


def build_u32_array(values) -> bytes:
    return np.asarray(values, dtype="<u4").tobytes()


def parse_u32_array(body: bytes) -> list[int]:
    if len(body) % 4:
        raise TransportError("u32 array body not a multiple of 4")
    return np.frombuffer(body, dtype="<u4").tolist()


def build_memorize_request(corpus: bytes, epochs: int) -> bytes:
    return corpus + struct.pack("<I", epochs)


def parse_memorize_request(body: bytes) -> tuple[bytes, int]:
    if len(body) < 4:
        raise TransportError("memorize request too short")
    return body[:-4], struct.unpack("<I", body[-4:])[0]


def build_memorize_response(adapter_id: str, blob: bytes) -> bytes:
    return pack_string(adapter_id) + blob


def parse_memorize_response(body: bytes) -> tuple[str, bytes]:
    adapter_id, pos = unpack_string(body, 0)
    return adapter_id, body[pos:]


def build_error(message: str) -> bytes:
    return pack_string(message)


def parse_error(body: bytes) -> str:
    return unpack_string(body, 0)[0]


# -- transports ----------------------------------------------------------------


class _SocketTransport:
    def __init__(self, sock):
        self.sock = sock

    def send(self, data: bytes) -> None:
        try:
            self.sock.sendall(data)
        except OSError as exc:
            raise TransportError(f"send failed: {exc}") from exc

    def recv_exact(self, n: int) -> bytes:
        chunks = []
        while n:
            try:
                chunk = self.sock.recv(n)
            except socket.timeout as exc:
                raise TransportError("predictor timed out") from exc
            except OSError as exc:
                raise TransportError(f"recv failed: {exc}") from exc
            if not chunk:
                raise TransportError("predictor closed the connection")
            chunks.append(chunk)
            n -= len(chunk)
        return b"".join(chunks)

    def close(self) -> None:
        try:
            self.sock.close()
        except OSError:
            pass


class _ProcessTransport:
    def __init__(self, argv):
        try:
            self.proc = subprocess.Popen(argv, stdin=subprocess.PIPE,
                                         stdout=subprocess.PIPE)
        except OSError as exc:
            raise TransportError(f"cannot spawn predictor: {exc}") from exc

    def send(self, data: bytes) -> None:
        try:
            self.proc.stdin.write(data)
            self.proc.stdin.flush()
        except (OSError, ValueError) as exc:
            raise TransportError(f"send failed: {exc}") from exc

    def recv_exact(self, n: int) -> bytes:
        data = self.proc.stdout.read(n)
        if data is None or len(data) != n:
            raise TransportError("predictor process closed its output")
        return data

    def close(self) -> None:
        try:
            self.proc.stdin.close()
            self.proc.terminate()
            self.proc.wait(timeout=5)
        except (OSError, subprocess.TimeoutExpired, ValueError):
            pass


def _open_transport(address: str, timeout: float):
    if address.startswith("tcp:"):
        _, host, port = address.split(":", 2)
        try:
            sock = socket.create_connection((host, int(port)), timeout=timeout)
        except OSError as exc:
            raise TransportError(f"cannot connect to {address}: {exc}") from exc
        return _SocketTransport(sock)
    if address.startswith("unix:"):
        path = address[len("unix:"):]
        sock = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
        sock.settimeout(timeout)
        try:
            sock.connect(path)
        except OSError as exc:
            raise TransportError(f"cannot connect to {address}: {exc}") from exc
        return _SocketTransport(sock)
    if address.startswith("cmd:"):
        return _ProcessTransport(shlex.split(address[len("cmd:"):]))
    raise ConfigurationError(f"unknown predictor address {address!r}")


# -- session -------------------------------------------------------------------


class PredictorSession:
    """One connection to an external predictor; strict request/response."""

    def __init__(self, transport):
        self._transport = transport
        body = self._call(OP_HELLO, b"")
        self.vocab_size, self.tokenizer_id, self.version, self.max_batch = (
            parse_hello_response(body))
        if self.vocab_size < 2 or self.max_batch < 1:
            raise RemotePredictorError("nonsensical HELLO response")

    @classmethod
    def connect(cls, address: str, timeout: float = 30.0) -> "PredictorSession":
        return cls(_open_transport(address, timeout))

    def close(self) -> None:
        self._transport.close()

    def _call(self, opcode: int, body: bytes) -> bytes:
        self._transport.send(pack_frame(opcode, body))
        header = self._transport.recv_exact(5)
        length, resp_op = struct.unpack("<IB", header)
        if length < 1 or length > _MAX_FRAME:
            raise TransportError(f"implausible frame length {length}")
        resp_body = self._transport.recv_exact(length - 1)
        if resp_op == OP_ERROR:
            raise RemotePredictorError(parse_error(resp_body))
        if resp_op != opcode:
            raise TransportError(f"response opcode {resp_op} for request {opcode}")
        return resp_body

    def tokenize(self, data: bytes) -> list[int]:
        return parse_u32_array(self._call(OP_TOKENIZE, bytes(data)))

    def detokenize(self, tokens) -> bytes:
        return self._call(OP_DETOKENIZE, build_u32_array(tokens))

    def _batched(self, opcode, items, build, parse):
        results = []
        for start in range(0, len(items), self.max_batch):
            part = items[start: start + self.max_batch]
            results.extend(parse(self._call(opcode, build(part))))
        return results

    def ranks(self, items) -> list[int]:
        """items: (context, target token) pairs -> rank per item."""
        return self._batched(OP_RANKS, items, build_items, parse_u32_array)

    def tokens_at(self, items) -> list[int]:
        """items: (context, rank) pairs -> token per item."""
        return self._batched(OP_TOKENS_AT, items, build_items, parse_u32_array)

    def dists(self, contexts) -> list[np.ndarray]:
        """Per context, V u16 quantized counts summing to 65536."""
        V = self.vocab_size

        def parse(body):
            if len(body) % (2 * V):
                raise RemotePredictorError("DISTS response length mismatch")
            arr = np.frombuffer(body, dtype="<u2").reshape(-1, V)
            return list(arr)

        return self._batched(OP_DISTS, contexts, build_contexts, parse)

    def memorize(self, corpus: bytes, epochs: int) -> tuple[str, bytes]:
        body = self._call(OP_MEMORIZE, build_memorize_request(corpus, epochs))
        return parse_memorize_response(body)

    def load_adapter(self, blob: bytes) -> str:
        adapter_id, _ = parse_memorize_response(
            self._call(OP_MEMORIZE, build_memorize_request(blob, LOAD_ADAPTER_EPOCHS)))
        return adapter_id


class RemoteBackend:
    """Codec-facing adapter over one session per worker."""

    is_remote = True

    def __init__(self, sessions):
        if not sessions:
            raise ConfigurationError("remote backend needs at least one session")
        self.sessions = sessions
        first = sessions[0]
        self.vocab_size = first.vocab_size
        self.tokenizer_id = first.tokenizer_id
        self.version = first.version
        for s in sessions[1:]:
            if (s.vocab_size, s.version) != (first.vocab_size, first.version):
                raise ModelMismatchError("predictor sessions disagree on model identity")

    @classmethod
    def connect(cls, address: str, workers: int = 1, timeout: float = 30.0):
        return cls([PredictorSession.connect(address, timeout)
                    for _ in range(max(1, workers))])

    def close(self) -> None:
        for s in self.sessions:
            s.close()

    def _scatter(self, items, call):
        if len(self.sessions) == 1 or len(items) <= 1:
            return call(self.sessions[0], items)
        n = len(self.sessions)
        shard = (len(items) + n - 1) // n
        parts = [items[i: i + shard] for i in range(0, len(items), shard)]
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            results = list(pool.map(lambda args: call(*args), zip(self.sessions, parts)))
        return [x for part in results for x in part]

    def ranks(self, items):
        return self._scatter(items, lambda s, part: s.ranks(part))

    def tokens_at(self, items):
        return self._scatter(items, lambda s, part: s.tokens_at(part))

    def dist_cums(self, contexts):
        counts = self._scatter(contexts, lambda s, part: s.dists(part))
        cums = []
        for q in counts:
            cum = np.zeros(len(q) + 1, dtype=np.uint32)
            np.cumsum(q, out=cum[1:])
            if cum[-1] != DIST_TOTAL:
                raise RemotePredictorError("distribution does not sum to 65536")
            cums.append(cum)
        return cums

    def memorize(self, corpus: bytes, epochs: int) -> tuple[str, bytes]:
        adapter_id, blob = self.sessions[0].memorize(corpus, epochs)
        # every worker session must predict with the same memorized state
        for s in self.sessions[1:]:
            s.load_adapter(blob)
        return adapter_id, blob

    def load_adapter(self, blob: bytes) -> None:
        for s in self.sessions:
            s.load_adapter(blob)

    def tokenize(self, data: bytes) -> list[int]:
        return self.sessions[0].tokenize(data)

    def detokenize(self, tokens) -> bytes:
        return self.sessions[0].detokenize(tokens)
