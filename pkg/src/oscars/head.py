"""Trainable projection head: x -> W2 @ relu(W1 @ x + b1) + b2.

Maps raw input embeddings (dimension D) through a hidden layer (H) to the
retrieval space (E). Weights start uniform in [-1/sqrt(fan_in),
+1/sqrt(fan_in)], biases at zero. No output normalization here: training
distances are plain Euclidean, and unit-normalization happens only at index
time where cosine similarity takes over.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

DEFAULT_HIDDEN = 256
DEFAULT_OUT = 128


@dataclass
class ProjectionHead:
    W1: np.ndarray  # (H, D)
    b1: np.ndarray  # (H,)
    W2: np.ndarray  # (E, H)
    b2: np.ndarray  # (E,)

    def __post_init__(self):
        for name in ("W1", "b1", "W2", "b2"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"head parameter {name} contains non-finite values")
            setattr(self, name, arr)
        if self.W1.shape[0] != self.b1.shape[0] or self.W2.shape[1] != self.W1.shape[0]:
            raise ValidationError("inconsistent head parameter shapes")
        if self.W2.shape[0] != self.b2.shape[0]:
            raise ValidationError("inconsistent head parameter shapes")

    @property
    def d_in(self) -> int:
        return self.W1.shape[1]

    @property
    def d_hidden(self) -> int:
        return self.W1.shape[0]

    @property
    def d_out(self) -> int:
        return self.W2.shape[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.d_in,):
            raise ValidationError(f"expected input of length {self.d_in}, got shape {x.shape}")
        hidden = np.maximum(self.W1 @ x + self.b1, 0.0)
        return self.W2 @ hidden + self.b2

    def forward_many(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.d_in:
            raise ValidationError(f"expected (n, {self.d_in}) inputs, got shape {X.shape}")
        hidden = np.maximum(X @ self.W1.T + self.b1, 0.0)
        return hidden @ self.W2.T + self.b2

    def copy(self) -> "ProjectionHead":
        return ProjectionHead(self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy())

    def param_blocks(self) -> dict[str, np.ndarray]:
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}


def init_head(
    d_in: int,
    d_hidden: int = DEFAULT_HIDDEN,
    d_out: int = DEFAULT_OUT,
    seed: int = 0,
) -> ProjectionHead:
    """Seeded uniform initialization, scale-stable in each layer's fan-in."""
    if min(d_in, d_hidden, d_out) < 1:
        raise ValidationError("head dimensions must be >= 1")
    rng = np.random.default_rng(seed)
    s1 = 1.0 / np.sqrt(d_in)
    s2 = 1.0 / np.sqrt(d_hidden)
    return ProjectionHead(
        W1=rng.uniform(-s1, s1, size=(d_hidden, d_in)),
        b1=np.zeros(d_hidden),
        W2=rng.uniform(-s2, s2, size=(d_out, d_hidden)),
        b2=np.zeros(d_out),
    )
