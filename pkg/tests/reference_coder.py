"""Independent big-integer arithmetic-coding reference.

Encodes a sequence of (cum_low, cum_high, total) steps with unbounded
integers and no byte-window bookkeeping: the exact low value is built with
plain integer arithmetic (each renormalization just scales it up), so carry
propagation falls out of ordinary addition. The stream is that number
big-endian: one leading carry byte, one byte per renormalization, and the
final 32-bit window. This is the transparent construction the production
range coder must match byte for byte; it generates and checks the frozen
golden vectors.
"""

TOP = 1 << 24
RANGE_INIT = 0xFFFFFFFF


def reference_encode(steps) -> bytes:
    low = 0
    range_ = RANGE_INIT
    renorms = 0
    for cum_low, cum_high, total in steps:
        r = range_ // total
        low += r * cum_low
        range_ = r * (cum_high - cum_low)
        while range_ < TOP:
            low <<= 8
            range_ <<= 8
            renorms += 1
    return low.to_bytes(renorms + 5, "big")
