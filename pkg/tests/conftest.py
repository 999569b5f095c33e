"""Shared fixtures: benchmark corpus discovery and randomized corpora.

The real benchmark corpus (enwik8) is never vendored; point FZIP_ENWIK8 at
a local copy (see `fzip fetch-corpus`) to run the published-ratio tests.
Everything else runs against deterministic synthetic corpora.
"""

import os

import numpy as np
import pytest

from fzip import sample_text

ENWIK8_ENV = "FZIP_ENWIK8"


def _enwik8_path():
    path = os.environ.get(ENWIK8_ENV)
    if path and os.path.exists(path):
        return path
    default = os.path.join(os.path.dirname(__file__), "data", "enwik8")
    if os.path.exists(default):
        return default
    return None


@pytest.fixture(scope="session")
def enwik8():
    """First 10MB of enwik8, or skip when the corpus is not on disk."""
    path = _enwik8_path()
    if path is None:
        pytest.skip(f"enwik8 not available; set {ENWIK8_ENV} (see README)")
    with open(path, "rb") as f:
        return f.read(10 * 10**6)


@pytest.fixture(scope="session")
def text_1mb():
    """enwik8[0:1MB] when available, else the deterministic wiki-like sample."""
    path = _enwik8_path()
    if path is not None:
        with open(path, "rb") as f:
            return f.read(1 << 20), "enwik8"
    return sample_text.generate(1 << 20, seed=7), "surrogate"


@pytest.fixture(scope="session")
def text_100kb(text_1mb):
    data, name = text_1mb
    return data[:100_000], name


def make_corpus(rng: np.random.Generator, size: int) -> bytes:
    """One randomized corpus with one of several entropy profiles."""
    kind = rng.integers(0, 5)
    if size == 0:
        return b""
    if kind == 0:  # uniform random, incompressible
        return rng.integers(0, 256, size=size, dtype=np.uint8).tobytes()
    if kind == 1:  # few symbols, highly skewed
        n_sym = int(rng.integers(2, 6))
        syms = rng.integers(0, 256, size=n_sym)
        p = rng.dirichlet(np.ones(n_sym) * 0.4)
        return rng.choice(syms, size=size, p=p).astype(np.uint8).tobytes()
    if kind == 2:  # repeated motif with noise
        motif = rng.integers(0, 256, size=int(rng.integers(2, 40)), dtype=np.uint8)
        reps = np.tile(motif, size // len(motif) + 1)[:size].copy()
        flips = rng.random(size) < 0.02
        reps[flips] = rng.integers(0, 256, size=int(flips.sum()), dtype=np.uint8)
        return reps.tobytes()
    if kind == 3:  # text-like
        return sample_text.generate(size, seed=int(rng.integers(0, 2**31)))
    return bytes(np.arange(size, dtype=np.uint64).astype(np.uint8))  # ramp


def corpus_suite(n: int, max_size: int = 1 << 16, seed: int = 1234) -> list[bytes]:
    """n corpora with log-spread sizes in [0, max_size] and varied entropy."""
    rng = np.random.default_rng(seed)
    sizes = [0, 1, 2, 3]
    while len(sizes) < n:
        sizes.append(int(np.exp(rng.uniform(0, np.log(max_size)))))
    return [make_corpus(rng, s) for s in sizes[:n]]
