"""Online memorization: fit the predictor on the data being compressed.

Memorization makes the corpus's own continuations the most probable ones,
which drives ranks toward zero. The fitted tables ship inside the archive,
so the ratio reported here always pays for them; this demo shows when that
overhead amortizes (it does not at a few kilobytes, it does at a megabyte).

Run:  python demos/03_memorization.py
"""

import fzip
from fzip import sample_text
from fzip.pipeline import CompressConfig, compressed_ranks, rank_zero_fraction

corpus = sample_text.generate(1 << 20, seed=3)

print("rank-0 fraction (how often the model's top guess is the next token):")
for size in (20_000, 100_000, len(corpus)):
    data = corpus[:size]
    memorized = rank_zero_fraction(data, CompressConfig(memorize=True))
    baseline = rank_zero_fraction(data, CompressConfig(memorize=False))
    print(f"  {size:>9} bytes: memorized {memorized:.3f} vs offline {baseline:.3f}")

print("\ntotal archive (payload + model blob) by corpus size:")
print(f"{'bytes':>9}  {'memorized':>10} {'model':>8} {'offline':>10}  verdict")
for size in (2_000, 20_000, 100_000, 500_000, len(corpus)):
    data = corpus[:size]
    mem_blob, mem_report = fzip.compress_report(data, CompressConfig(memorize=True))
    plain_blob, _ = fzip.compress_report(data, CompressConfig(memorize=False))
    verdict = "pays off" if len(mem_blob) <= len(plain_blob) else "too small"
    print(f"{size:>9}  {len(mem_blob):>10} {mem_report.model_blob_len:>8} "
          f"{len(plain_blob):>10}  {verdict}")

# The rank histogram shows where the savings come from.
ranks = compressed_ranks(corpus[:200_000], CompressConfig(memorize=True))
hist = {}
for r in ranks:
    hist[r] = hist.get(r, 0) + 1
top = sorted(hist.items())[:6]
print("\nrank histogram (memorized, first 200KB):")
for rank, count in top:
    bar = "#" * int(60 * count / len(ranks))
    print(f"  rank {rank}: {count / len(ranks):6.1%} {bar}")
