"""Protocol server: exposes a PredictorModel over TCP, unix socket, or stdio.

Implements every opcode of the fzip predictor protocol. One model instance
is shared by all connections and requests are serialized through a lock, so
the memorized-adapter state is consistent for every session of one
compression or decompression run (the client loads the adapter on each of
its worker sessions). Responses to malformed or failing requests are ERROR
frames, never closed connections.

    fzip-service --model toy:0 --listen tcp:127.0.0.1:9000
    fzip-service --model toy:0 --listen stdio   # for "cmd:" addresses
"""

import argparse
import socket
import struct
import sys
import threading

from fzip import protocol

from .model import PredictorModel


class PredictorService:
    def __init__(self, model: PredictorModel, max_batch: int = 32):
        self.model = model
        self.max_batch = max_batch
        self._lock = threading.Lock()

    def handle(self, opcode: int, body: bytes) -> tuple[int, bytes]:
        try:
            with self._lock:
                return opcode, self._dispatch(opcode, body)
        except Exception as exc:
            return protocol.OP_ERROR, protocol.build_error(
                f"{type(exc).__name__}: {exc}")

    def _dispatch(self, opcode: int, body: bytes) -> bytes:
        model = self.model
        if opcode == protocol.OP_HELLO:
            return protocol.build_hello_response(
                model.vocab_size, model.tokenizer_id, model.version, self.max_batch)
        if opcode == protocol.OP_TOKENIZE:
            return protocol.build_u32_array(model.tokenize(body))
        if opcode == protocol.OP_DETOKENIZE:
            return model.detokenize(protocol.parse_u32_array(body))
        if opcode == protocol.OP_RANKS:
            items = protocol.parse_items(body)
            self._check_batch(len(items))
            return protocol.build_u32_array(model.ranks(items))
        if opcode == protocol.OP_TOKENS_AT:
            items = protocol.parse_items(body)
            self._check_batch(len(items))
            return protocol.build_u32_array(model.tokens_at(items))
        if opcode == protocol.OP_DISTS:
            contexts = protocol.parse_contexts(body)
            self._check_batch(len(contexts))
            return b"".join(q.tobytes() for q in model.dists(contexts))
        if opcode == protocol.OP_MEMORIZE:
            corpus, epochs = protocol.parse_memorize_request(body)
            if epochs == protocol.LOAD_ADAPTER_EPOCHS:
                adapter_id = model.load_adapter(corpus)
                return protocol.build_memorize_response(adapter_id, b"")
            adapter_id, blob = model.memorize(corpus, epochs)
            return protocol.build_memorize_response(adapter_id, blob)
        raise ValueError(f"unknown opcode {opcode}")

    def _check_batch(self, n: int) -> None:
        if n > self.max_batch:
            raise ValueError(f"batch of {n} exceeds max_batch {self.max_batch}")

    # -- transports -----------------------------------------------------------

    def serve_frames(self, recv_exact, send) -> None:
        while True:
            header = recv_exact(5)
            if header is None:
                return
            length, opcode = struct.unpack("<IB", header)
            body = recv_exact(length - 1) if length > 1 else b""
            if body is None:
                return
            resp_op, resp_body = self.handle(opcode, body)
            send(protocol.pack_frame(resp_op, resp_body))

    def serve_stdio(self) -> None:
        stdin = sys.stdin.buffer
        stdout = sys.stdout.buffer

        def recv_exact(n):
            data = stdin.read(n)
            return data if data and len(data) == n else None

        def send(data):
            stdout.write(data)
            stdout.flush()

        self.serve_frames(recv_exact, send)

    def serve_socket(self, sock) -> None:
        while True:
            try:
                conn, _ = sock.accept()
            except OSError:
                return
            threading.Thread(target=self._serve_conn, args=(conn,), daemon=True).start()

    def _serve_conn(self, conn) -> None:
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
            self.serve_frames(recv_exact, conn.sendall)
        finally:
            conn.close()


def _bind(listen: str):
    if listen.startswith("tcp:"):
        _, host, port = listen.split(":", 2)
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((host, int(port)))
        sock.listen(16)
        return sock
    if listen.startswith("unix:"):
        sock = socket.socket(socket.AF_UNIX, socket.SOCK_STREAM)
        sock.bind(listen[len("unix:"):])
        sock.listen(16)
        return sock
    raise ValueError(f"unknown listen address {listen!r}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fzip-service", description=__doc__)
    parser.add_argument("--model", default="toy:0",
                        help="'toy[:seed]' or a local Hugging Face model id")
    parser.add_argument("--precision", type=int, choices=[4, 8, 16, 32], default=32)
    parser.add_argument("--max-batch", type=int, default=32)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--listen", default="stdio",
                        help="stdio, tcp:HOST:PORT, or unix:PATH")
    args = parser.parse_args(argv)

    model = PredictorModel(args.model, precision=args.precision, seed=args.seed)
    service = PredictorService(model, max_batch=args.max_batch)
    if args.listen == "stdio":
        service.serve_stdio()
        return 0
    sock = _bind(args.listen)
    print(f"fzip-service {model.version} listening on {args.listen}", file=sys.stderr)
    try:
        service.serve_socket(sock)
    except KeyboardInterrupt:
        pass
    finally:
        sock.close()
    return 0


if __name__ == "__main__":
    sys.exit(main())
