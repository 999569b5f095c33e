"""Low-rank adapters with a deterministic binary serialization.

Adapters add scale * (x @ A @ B) to the output of selected linear layers
(both nn.Linear and transformers' Conv1D follow the x-by-weight
convention). Training touches only A and B, so the memorized delta for a
corpus is a few kilobytes regardless of the base model, and the blob format
is raw little-endian float32 so identical training runs produce identical
bytes.
"""

import struct

import numpy as np
import torch
from torch import nn

BLOB_MAGIC = b"LORA"
BLOB_VERSION = 1


class LowRankAdapter(nn.Module):
    def __init__(self, in_features, out_features, rank=8, scale=1.0):
        super().__init__()
        self.a = nn.Parameter(torch.zeros(in_features, rank))
        self.b = nn.Parameter(torch.zeros(rank, out_features))
        self.scale = scale

    def reset(self, generator):
        # A gets small random values, B stays zero: identity at initialization
        with torch.no_grad():
            self.a.copy_(torch.randn(self.a.shape, generator=generator) * 0.01)
            self.b.zero_()

    def delta(self, x):
        return (x @ self.a @ self.b) * self.scale


def _linear_shape(module):
    if isinstance(module, nn.Linear):
        return module.in_features, module.out_features
    weight = getattr(module, "weight", None)
    if weight is not None and weight.dim() == 2:  # transformers Conv1D: (in, out)
        return weight.shape[0], weight.shape[1]
    return None


class AdapterSet:
    """Adapters attached to every matching submodule of a base model."""

    def __init__(self, model, target_suffixes=("c_attn", "c_proj", "c_fc"),
                 rank=8, scale=1.0, seed=0):
        self.adapters = {}
        self._handles = []
        generator = torch.Generator().manual_seed(seed)
        for name, module in sorted(model.named_modules()):
            if not name or not name.rsplit(".", 1)[-1] in target_suffixes:
                continue
            shape = _linear_shape(module)
            if shape is None:
                continue
            adapter = LowRankAdapter(*shape, rank=rank, scale=scale)
            adapter.reset(generator)
            self.adapters[name] = adapter
            self._handles.append(module.register_forward_hook(self._hook(adapter)))
        if not self.adapters:
            raise ValueError("no adapter target layers found in model")

    @staticmethod
    def _hook(adapter):
        def hook(module, inputs, output):
            return output + adapter.delta(inputs[0])
        return hook

    def parameters(self):
        for adapter in self.adapters.values():
            yield adapter.a
            yield adapter.b

    def remove(self):
        for handle in self._handles:
            handle.remove()
        self._handles = []

    # -- deterministic blob ----------------------------------------------

    def serialize(self) -> bytes:
        out = bytearray(BLOB_MAGIC)
        out.append(BLOB_VERSION)
        out.extend(struct.pack("<I", len(self.adapters)))
        for name in sorted(self.adapters):
            adapter = self.adapters[name]
            raw = name.encode("utf-8")
            out.extend(struct.pack("<H", len(raw)))
            out.extend(raw)
            a = adapter.a.detach().numpy().astype("<f4")
            b = adapter.b.detach().numpy().astype("<f4")
            out.extend(struct.pack("<III", a.shape[0], a.shape[1], b.shape[1]))
            out.extend(a.tobytes())
            out.extend(b.tobytes())
        return bytes(out)

    def load(self, blob: bytes) -> None:
        if blob[:4] != BLOB_MAGIC or blob[4] != BLOB_VERSION:
            raise ValueError("not an adapter blob")
        pos = 5
        count = struct.unpack_from("<I", blob, pos)[0]
        pos += 4
        seen = set()
        for _ in range(count):
            n = struct.unpack_from("<H", blob, pos)[0]
            pos += 2
            name = blob[pos: pos + n].decode("utf-8")
            pos += n
            d_in, rank, d_out = struct.unpack_from("<III", blob, pos)
            pos += 12
            a = np.frombuffer(blob, dtype="<f4", count=d_in * rank, offset=pos)
            pos += 4 * d_in * rank
            b = np.frombuffer(blob, dtype="<f4", count=rank * d_out, offset=pos)
            pos += 4 * rank * d_out
            adapter = self.adapters.get(name)
            if adapter is None:
                raise ValueError(f"adapter blob names unknown layer {name!r}")
            if adapter.a.shape[0] != d_in or adapter.b.shape[1] != d_out:
                raise ValueError(f"adapter blob shape mismatch for {name!r}")
            with torch.no_grad():
                new_a = torch.from_numpy(a.reshape(d_in, rank).copy())
                new_b = torch.from_numpy(b.reshape(rank, d_out).copy())
                if adapter.a.shape[1] != rank:
                    adapter.a = nn.Parameter(new_a)
                    adapter.b = nn.Parameter(new_b)
                else:
                    adapter.a.copy_(new_a)
                    adapter.b.copy_(new_b)
            seen.add(name)
        if seen != set(self.adapters):
            raise ValueError("adapter blob does not cover all target layers")

    def reset_identity(self, seed=0):
        generator = torch.Generator().manual_seed(seed)
        for name in sorted(self.adapters):
            self.adapters[name].reset(generator)
