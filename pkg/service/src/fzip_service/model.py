"""Causal-LM wrapper: deterministic ranks, quantized distributions, memorization.

Rankings order the vocabulary by descending probability with ties broken by
ascending token id, matching the built-in predictor's total order, and
distributions are quantized server-side to integer counts summing to 65536
with a floor of one count per token, so both coder sides share exact
integers. Determinism scope: fixed seeds, CPU or deterministic kernels, and
greedy ordering make identical requests yield identical responses across
runs on the same platform; archives made with this service are bound to the
(model id, precision, adapter) triple recorded in its version string.

Two model flavors:
  * "toy[:seed]"  - a small randomly initialized byte-vocabulary
    transformer; weights are derived from the seed, so conformance tests
    and demos run without any downloads.
  * anything else - a Hugging Face model id loaded from the local cache
    with its own (byte-faithful) tokenizer.
"""

import hashlib

import numpy as np
import torch

QUANT_TOTAL = 1 << 16
MAX_EPOCHS = 4096


def _quantize_probs(probs: np.ndarray) -> np.ndarray:
    """Largest-remainder quantization to QUANT_TOTAL with floor 1 per token."""
    V = len(probs)
    units = QUANT_TOTAL - V
    scaled = probs * units
    floors = np.floor(scaled)
    remainders = scaled - floors
    leftover = units - int(floors.sum())
    q = floors.astype(np.uint32) + 1
    if leftover > 0:
        order = np.lexsort((np.arange(V), -remainders))
        q[order[:leftover]] += 1
    return q


class PredictorModel:
    def __init__(self, model_id: str = "toy", precision: int = 32, seed: int = 0,
                 adapter_rank: int = 8):
        if precision not in (4, 8, 16, 32):
            raise ValueError("precision must be one of 4, 8, 16, 32")
        self.model_id = model_id
        self.precision = precision
        self.seed = seed
        torch.manual_seed(seed)
        if model_id.startswith("toy"):
            self._build_toy(model_id)
        else:
            self._load_pretrained(model_id, precision)
        self.model.eval()
        from .lora import AdapterSet
        self.adapters = AdapterSet(self.model, rank=adapter_rank, seed=seed)
        self.adapter_id = "base"
        self.max_context = int(getattr(self.model.config, "n_positions", 1024)) - 1
        self._empty_cache = None

    # -- construction -------------------------------------------------------

    def _build_toy(self, model_id: str):
        from transformers import GPT2Config, GPT2LMHeadModel

        toy_seed = int(model_id.split(":", 1)[1]) if ":" in model_id else 0
        torch.manual_seed(toy_seed)
        config = GPT2Config(vocab_size=256, n_positions=512, n_embd=64,
                            n_layer=2, n_head=2,
                            bos_token_id=None, eos_token_id=None)
        self.model = GPT2LMHeadModel(config)
        self.vocab_size = 256
        self.tokenizer = None
        self.tokenizer_id = "byte"

    def _load_pretrained(self, model_id: str, precision: int):
        from transformers import AutoModelForCausalLM, AutoTokenizer

        dtype = {32: torch.float32, 16: torch.float16}.get(precision)
        if dtype is None:
            raise ValueError(
                "4/8-bit loading needs a quantization backend; this build "
                "supports precision 16 and 32")
        self.tokenizer = AutoTokenizer.from_pretrained(model_id)
        self.model = AutoModelForCausalLM.from_pretrained(model_id, torch_dtype=dtype)
        self.vocab_size = int(self.model.config.vocab_size)
        self.tokenizer_id = f"hf:{model_id}"

    @property
    def version(self) -> str:
        # identifies the fixed (offline) system; the memorized adapter travels
        # in the archive blob, not in the version string
        return f"fzip-service/{self.model_id}/p{self.precision}/seed{self.seed}"

    # -- tokenization ---------------------------------------------------------

    def tokenize(self, data: bytes) -> list[int]:
        if self.tokenizer is None:
            return list(data)
        return self.tokenizer.encode(data.decode("utf-8", "surrogateescape"))

    def detokenize(self, ids) -> bytes:
        if self.tokenizer is None:
            return bytes(ids)
        text = self.tokenizer.decode(ids, skip_special_tokens=False)
        return text.encode("utf-8", "surrogateescape")

    # -- inference --------------------------------------------------------------

    @torch.no_grad()
    def _batched_logits(self, contexts) -> np.ndarray:
        """Final-position logits for each context; empty contexts allowed."""
        results = np.empty((len(contexts), self.vocab_size), dtype=np.float64)
        todo = []
        for i, ctx in enumerate(contexts):
            if len(ctx) == 0:
                results[i] = self._empty_context_logits()
            else:
                todo.append(i)
        for start in range(0, len(todo), 64):
            group = todo[start: start + 64]
            ctxs = [list(contexts[i])[-self.max_context:] for i in group]
            width = max(len(c) for c in ctxs)
            input_ids = torch.zeros((len(group), width), dtype=torch.long)
            mask = torch.zeros((len(group), width), dtype=torch.long)
            for row, ctx in enumerate(ctxs):
                input_ids[row, width - len(ctx):] = torch.tensor(ctx)
                mask[row, width - len(ctx):] = 1
            position_ids = mask.cumsum(dim=1) - 1
            position_ids.clamp_(min=0)
            logits = self.model(input_ids=input_ids, attention_mask=mask,
                                position_ids=position_ids).logits[:, -1, :]
            results[np.array(group)] = logits.float().numpy().astype(np.float64)
        return results

    @torch.no_grad()
    def _empty_context_logits(self) -> np.ndarray:
        """Unconditional next-token preference for the zero-length context."""
        if self._empty_cache is not None and self._empty_cache[0] == self.adapter_id:
            return self._empty_cache[1]
        bos = getattr(self.model.config, "bos_token_id", None)
        if self.tokenizer is not None and self.tokenizer.bos_token_id is not None:
            bos = self.tokenizer.bos_token_id
        if bos is not None and 0 <= bos < self.vocab_size:
            logits = self.model(input_ids=torch.tensor([[bos]])).logits[0, -1]
        else:
            # byte-vocabulary toy models have no BOS; use the bare head output
            hidden = torch.zeros((1, 1, self.model.config.n_embd))
            logits = self.model.lm_head(self.model.transformer.ln_f(hidden))[0, -1]
        row = logits.float().numpy().astype(np.float64)
        self._empty_cache = (self.adapter_id, row)
        return row

    def _orderings(self, logits: np.ndarray) -> np.ndarray:
        # descending probability, ties by ascending token id
        V = logits.shape[1]
        ids = np.arange(V)
        return np.stack([np.lexsort((ids, -row)) for row in logits])

    def ranks(self, items) -> list[int]:
        contexts = [ctx for ctx, _ in items]
        orderings = self._orderings(self._batched_logits(contexts))
        out = []
        for (_, target), order in zip(items, orderings):
            if not 0 <= target < self.vocab_size:
                raise ValueError(f"token {target} outside vocabulary")
            inverse = np.empty_like(order)
            inverse[order] = np.arange(len(order))
            out.append(int(inverse[target]))
        return out

    def tokens_at(self, items) -> list[int]:
        contexts = [ctx for ctx, _ in items]
        orderings = self._orderings(self._batched_logits(contexts))
        out = []
        for (_, rank), order in zip(items, orderings):
            if not 0 <= rank < self.vocab_size:
                raise ValueError(f"rank {rank} outside vocabulary")
            out.append(int(order[rank]))
        return out

    def dists(self, contexts) -> list[np.ndarray]:
        logits = self._batched_logits(contexts)
        out = []
        for row in logits:
            shifted = row - row.max()
            probs = np.exp(shifted)
            probs /= probs.sum()
            out.append(_quantize_probs(probs).astype("<u2"))
        return out

    # -- memorization --------------------------------------------------------------

    def memorize(self, corpus: bytes, epochs: int) -> tuple[str, bytes]:
        """Train the low-rank adapters on the corpus; returns (id, blob)."""
        if epochs > MAX_EPOCHS:
            raise ValueError(f"epochs {epochs} exceeds limit {MAX_EPOCHS}")
        self.adapters.reset_identity(self.seed)
        self._empty_cache = None
        if epochs == 0 or not corpus:
            self.adapter_id = "base"
            return self.adapter_id, self.adapters.serialize()
        tokens = self.tokenize(corpus)
        window = min(self.max_context, 256)
        torch.manual_seed(self.seed)
        optimizer = torch.optim.AdamW(self.adapters.parameters(), lr=1e-3)
        self.model.train()
        try:
            for _ in range(epochs):
                for start in range(0, max(1, len(tokens) - 1), window):
                    chunk = tokens[start: start + window + 1]
                    if len(chunk) < 2:
                        continue
                    ids = torch.tensor([chunk], dtype=torch.long)
                    loss = self.model(input_ids=ids, labels=ids).loss
                    optimizer.zero_grad()
                    loss.backward()
                    optimizer.step()
        finally:
            self.model.eval()
        digest = hashlib.sha256(corpus).hexdigest()[:12]
        self.adapter_id = f"mem-{digest}-e{epochs}"
        self._empty_cache = None
        return self.adapter_id, self.adapters.serialize()

    def load_adapter(self, blob: bytes) -> str:
        self.adapters.load(blob)
        self.adapter_id = "loaded"
        self._empty_cache = None
        return self.adapter_id
