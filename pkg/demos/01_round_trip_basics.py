"""Round-trip basics: compress bytes, look inside the archive, restore them.

Run:  python demos/01_round_trip_basics.py
"""

import fzip
from fzip import sample_text
from fzip.archive import read_archive

# A deterministic wiki-like corpus stands in for real text.
data = sample_text.generate(200_000, seed=1)
print(f"corpus: {len(data)} bytes, starts with:\n{data[:120].decode()!r}\n")

# Defaults: rank transform, dynamic 512-token chunks, built-in order-3
# predictor, built-in secondary codec. Memorization fits the predictor on
# this exact corpus and ships the fitted tables inside the archive.
config = fzip.CompressConfig(mode="rank", context_mode="dynamic", memorize=True)
archive, report = fzip.compress_report(data, config)

print(f"archive: {len(archive)} bytes  ratio {report.ratio:.4f}")
print(f"model blob inside: {report.model_blob_len} bytes")
for stage, ms in report.wall_ms.items():
    print(f"  {stage:>10}: {ms:8.1f} ms")

# The archive is self-describing: every knob needed to decode it is in the
# header, protected by a trailing CRC32.
header, model_blob, payload = read_archive(archive)
print(f"\nheader: mode={header.mode} context={header.context_mode} "
      f"window={header.window} predictor={header.predictor_id!r}")
print(f"fingerprint: {header.predictor_fingerprint.hex()}")

restored = fzip.decompress(archive)
assert restored == data
print("\nround trip exact:", restored == data)

# Without memorization the same pipeline still works; the predictor stays
# uniform, so ranks equal tokens and only the secondary stage compresses.
plain, plain_report = fzip.compress_report(data, fzip.CompressConfig(memorize=False))
print(f"without memorization: ratio {plain_report.ratio:.4f} "
      f"(memorization saved {(plain_report.ratio - report.ratio) * 100:.1f} points)")
