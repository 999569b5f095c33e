"""Deterministic wiki-style English sample text.

Benchmarks and acceptance checks that only need "natural language with
markup" statistics (trend and inequality checks, not published absolute
ratios) fall back to this generator when the real benchmark corpus is not
on disk. Output is UTF-8 text structured like a MediaWiki XML export:
pages with titles, ids, timestamps, headings, link brackets and running
prose built from a fixed vocabulary with Zipf-like weights, plus a sprinkle
of accented words so multi-byte characters appear as they do in real dumps.

The stream is fully determined by (n_bytes, seed).
"""

import numpy as np

_COMMON = (
    "the of and to in a is that was for it on as with by at from this be "
    "are or an were which have has had not but all one their its they more "
    "also can other when there first into after time two over new only "
    "years most some may such no between city state war world during "
    "history people used called known part many made national under work "
    "system group number early several american government area found "
    "century music team season film later including series through life "
    "school university both place name however village district north "
    "south family population company based game member public following "
    "french british german county played record band album while against "
    "church house league development major great small different established"
).split()

_TOPIC = (
    "battle treaty empire province railway compiler theorem lattice "
    "synthesis archive protocol compression entropy corpus predictor "
    "window context tokens builder miller harbor garden temple castle "
    "library festival orchestra glacier meadow canyon harvest voyage "
    "merchant scholar dynasty parliament republic frontier expedition "
    "observatory laboratory manuscript translation commentary settlement"
).split()

_ACCENTED = "café Zürich née régime École Brontë".split()

_PUNCT_PERIOD = 0.16
_PUNCT_COMMA = 0.12


def _clean(words):
    return [w for w in words if w.isascii() and w.isalpha()]


def generate(n_bytes: int, seed: int = 0) -> bytes:
    """Deterministic wiki-like sample of exactly n_bytes bytes."""
    if n_bytes <= 0:
        return b""
    rng = np.random.default_rng(np.random.PCG64(seed))
    common = _clean(_COMMON)
    topic = _clean(_TOPIC)
    vocab = np.array(common + topic)
    ranks = np.arange(1, len(vocab) + 1, dtype=np.float64)
    weights = 1.0 / ranks  # Zipf-ish: common words were listed first
    weights /= weights.sum()

    parts = []
    size = 0
    page_id = 1000 + (seed % 997)
    while size < n_bytes:
        title = " ".join(w.capitalize() for w in rng.choice(topic, size=2))
        year = int(rng.integers(1100, 2024))
        month = int(rng.integers(1, 13))
        day = int(rng.integers(1, 29))
        head = (f"  <page>\n    <title>{title}</title>\n    <id>{page_id}</id>\n"
                f"    <timestamp>{year:04d}-{month:02d}-{day:02d}T"
                f"{int(rng.integers(0, 24)):02d}:{int(rng.integers(0, 60)):02d}:00Z"
                f"</timestamp>\n    <text>\n")
        parts.append(head)
        size += len(head)
        page_id += int(rng.integers(1, 50))
        for _ in range(int(rng.integers(2, 6))):  # sections per page
            if rng.random() < 0.6:
                heading = f"== {' '.join(rng.choice(topic, size=2)).capitalize()} ==\n"
                parts.append(heading)
                size += len(heading)
            n_words = int(rng.integers(60, 180))
            words = rng.choice(vocab, size=n_words, p=weights).tolist()
            draws = rng.random(n_words)
            out = []
            for w, d in zip(words, draws):
                if d < 0.003:
                    out.append(_ACCENTED[int(d * 10000) % len(_ACCENTED)])
                elif d < 0.03:
                    out.append(f"[[{w}]]")
                elif d < 0.05:
                    out.append(f"'''{w}'''")
                else:
                    out.append(w)
                if d > 1.0 - _PUNCT_PERIOD - _PUNCT_COMMA:
                    out[-1] += "." if d > 1.0 - _PUNCT_PERIOD else ","
            text = " ".join(out) + "\n\n"
            parts.append(text)
            size += len(text)
        tail = "    </text>\n  </page>\n"
        parts.append(tail)
        size += len(tail)
    return "".join(parts).encode("utf-8")[:n_bytes]
