"""Reference predictor-protocol server backed by a causal language model.

Wraps a pretrained (or deterministic toy) transformer behind the fzip wire
protocol: tokenization, batched next-token rank and distribution queries,
and parameter-efficient memorization via low-rank adapters trained on the
corpus being compressed.
"""

from .model import PredictorModel
from .server import PredictorService, main

__all__ = ["PredictorModel", "PredictorService", "main"]
__version__ = "0.1.0"
