"""Weighted dual-hinge quadruplet loss and its hand-derived gradients.

With embeddings (e_a, e_p, e_ni, e_nn) and d(u, v) = ||u - v||_2:

    L = lam     * max(d(a, p)  - d(a, ni) + margin_intra, 0)
      + (1-lam) * max(d(a, ni) - d(a, nn) + margin_inter, 0)

The first hinge pulls same-bin positives closer than other-bin samples of
the same class (intra-class ordering); the second keeps same-class samples
closer than samples of other classes (inter-class ordering). lam balances
the two.

Subgradient conventions, chosen once for determinism: a hinge contributes
zero gradient when its argument is <= 0, the gradient of d(u, v) is taken
as zero when d = 0, and the ramp derivative is zero at the kink.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .head import ProjectionHead


@dataclass
class LossConfig:
    lam: float = 0.05
    margin_intra: float = 1.0
    margin_inter: float = 2.0

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValidationError(f"lam must be in [0, 1], got {self.lam}")
        if self.margin_intra <= 0 or self.margin_inter <= 0:
            raise ValidationError("margins must be > 0")


def quadruplet_loss(e_a, e_p, e_ni, e_nn, cfg: LossConfig = LossConfig()) -> float:
    e_a, e_p, e_ni, e_nn = (np.asarray(v, dtype=np.float64) for v in (e_a, e_p, e_ni, e_nn))
    if not e_a.shape == e_p.shape == e_ni.shape == e_nn.shape:
        raise ValidationError("embeddings must share one shape")
    d_ap = float(np.linalg.norm(e_a - e_p))
    d_ani = float(np.linalg.norm(e_a - e_ni))
    d_ann = float(np.linalg.norm(e_a - e_nn))
    h1 = max(d_ap - d_ani + cfg.margin_intra, 0.0)
    h2 = max(d_ani - d_ann + cfg.margin_inter, 0.0)
    return cfg.lam * h1 + (1.0 - cfg.lam) * h2


@dataclass
class HeadGradients:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray

    @staticmethod
    def zeros_like(head: ProjectionHead) -> "HeadGradients":
        return HeadGradients(
            np.zeros_like(head.W1),
            np.zeros_like(head.b1),
            np.zeros_like(head.W2),
            np.zeros_like(head.b2),
        )

    def add_(self, other: "HeadGradients") -> None:
        self.W1 += other.W1
        self.b1 += other.b1
        self.W2 += other.W2
        self.b2 += other.b2

    def scale_(self, factor: float) -> None:
        self.W1 *= factor
        self.b1 *= factor
        self.W2 *= factor
        self.b2 *= factor


def _unit(diff: np.ndarray, dist: float) -> np.ndarray:
    # d = 0 convention: the distance term contributes no gradient
    return diff / dist if dist > 0.0 else np.zeros_like(diff)


def loss_gradients(
    head: ProjectionHead, x_a, x_p, x_ni, x_nn, cfg: LossConfig = LossConfig()
) -> tuple[float, HeadGradients]:
    """Loss value and exact parameter gradients of quadruplet_loss composed
    with the head's forward map, accumulated over all four inputs."""
    xs = [np.asarray(x, dtype=np.float64) for x in (x_a, x_p, x_ni, x_nn)]
    z1s = [head.W1 @ x + head.b1 for x in xs]
    a1s = [np.maximum(z1, 0.0) for z1 in z1s]
    embs = [head.W2 @ a1 + head.b2 for a1 in a1s]
    e_a, e_p, e_ni, e_nn = embs

    d_ap = float(np.linalg.norm(e_a - e_p))
    d_ani = float(np.linalg.norm(e_a - e_ni))
    d_ann = float(np.linalg.norm(e_a - e_nn))
    h1_arg = d_ap - d_ani + cfg.margin_intra
    h2_arg = d_ani - d_ann + cfg.margin_inter
    loss = cfg.lam * max(h1_arg, 0.0) + (1.0 - cfg.lam) * max(h2_arg, 0.0)

    # dL/d(distance); hinge contributes only when strictly active
    act1 = 1.0 if h1_arg > 0.0 else 0.0
    act2 = 1.0 if h2_arg > 0.0 else 0.0
    c_ap = cfg.lam * act1
    c_ani = -cfg.lam * act1 + (1.0 - cfg.lam) * act2
    c_ann = -(1.0 - cfg.lam) * act2

    u_ap = _unit(e_a - e_p, d_ap)
    u_ani = _unit(e_a - e_ni, d_ani)
    u_ann = _unit(e_a - e_nn, d_ann)

    upstream = [
        c_ap * u_ap + c_ani * u_ani + c_ann * u_ann,  # d L / d e_a
        -c_ap * u_ap,
        -c_ani * u_ani,
        -c_ann * u_ann,
    ]

    grads = HeadGradients.zeros_like(head)
    for x, z1, a1, g in zip(xs, z1s, a1s, upstream):
        grads.W2 += np.outer(g, a1)
        grads.b2 += g
        dz1 = (head.W2.T @ g) * (z1 > 0.0)
        grads.W1 += np.outer(dz1, x)
        grads.b1 += dz1
    return loss, grads
