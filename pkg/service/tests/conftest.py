import os
import socket
import threading

import pytest

from fzip_service.model import PredictorModel
from fzip_service.server import PredictorService


@pytest.fixture(scope="session")
def toy_model():
    return PredictorModel("toy:0", precision=32, seed=0)


@pytest.fixture(scope="session")
def service(toy_model):
    return PredictorService(toy_model, max_batch=32)


@pytest.fixture()
def live_server(service):
    """The service listening on a loopback port, torn down after the test."""
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind(("127.0.0.1", 0))
    sock.listen(16)
    port = sock.getsockname()[1]
    thread = threading.Thread(target=service.serve_socket, args=(sock,), daemon=True)
    thread.start()
    yield f"tcp:127.0.0.1:{port}"
    sock.close()


@pytest.fixture(scope="session")
def enwik8_1mb():
    path = os.environ.get("FZIP_ENWIK8")
    if not path or not os.path.exists(path):
        pytest.skip("enwik8 not available; set FZIP_ENWIK8")
    with open(path, "rb") as f:
        return f.read(1 << 20)
