"""Seeded Gaussian-mixture store generator.

Each class gets a center and `modes` sub-mode offsets around it. The
internal split samples only sub-mode 0, so kNN anomaly scores measured
against it spread the other sub-modes into distinct score ranges — the
structure the binning and sampling stages are built to exploit. The
external and query splits cycle through all sub-modes.

Two sub-mode layouts are supported. "scatter" draws an independent random
offset per sub-mode, so sub-modes separate in direction as well as score:
plain cosine retrieval already keeps them apart. "radial" stacks the
sub-modes along a single per-class axis at growing distances, the shape of
a condition worsening along one direction: every sub-mode shares the class
axis, so cosine retrieval alone cannot tell a mild record from a severe
one, while the anomaly scores separate them cleanly. mode_tilt bends that
line into an arc by pushing each sub-mode slightly off-axis; the tilt is
what lets a trained head pull the severity levels apart in angle (a
perfectly straight line offers nothing for a cosine-based ranking to
grab onto, however the distances are reshaped).

Generation is a single pass over one seeded generator, so a config maps to
exactly one store.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import EmbeddingRecord, Store
from .errors import ValidationError


@dataclass
class SynthConfig:
    classes: int = 3
    modes: int = 3
    dimension: int = 32
    internal_per_class: int = 30
    external_per_class: int = 60
    query_per_class: int = 20
    class_separation: float = 10.0
    mode_separation: float = 3.0
    noise: float = 0.3
    multilabel_rate: float = 0.0  # chance an external/query record gains a second label
    mode_style: str = "scatter"  # "scatter": random offsets; "radial": stacked along one axis
    mode_tilt: float = 0.5  # radial only: off-axis push per sub-mode, in mode_separation units
    seed: int = 0

    def __post_init__(self):
        if self.classes < 1:
            raise ValidationError(f"classes must be >= 1, got {self.classes}")
        if self.modes < 1:
            raise ValidationError(f"modes must be >= 1, got {self.modes}")
        if self.dimension < 1:
            raise ValidationError(f"dimension must be >= 1, got {self.dimension}")
        for name in ("internal_per_class", "external_per_class", "query_per_class"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        if not 0.0 <= self.multilabel_rate <= 1.0:
            raise ValidationError(f"multilabel_rate must be in [0, 1], got {self.multilabel_rate}")
        if self.noise < 0:
            raise ValidationError(f"noise must be >= 0, got {self.noise}")
        if self.mode_style not in ("scatter", "radial"):
            raise ValidationError(
                f"mode_style must be 'scatter' or 'radial', got {self.mode_style!r}"
            )
        if self.mode_tilt < 0:
            raise ValidationError(f"mode_tilt must be >= 0, got {self.mode_tilt}")
        if self.mode_style == "radial" and self.dimension < 2:
            raise ValidationError("mode_style 'radial' needs dimension >= 2")


def class_names(config: SynthConfig) -> list[str]:
    return [f"class{c:02d}" for c in range(config.classes)]


def generate(config: SynthConfig) -> Store:
    rng = np.random.default_rng(config.seed)
    names = class_names(config)
    dim = config.dimension
    centers = config.class_separation * rng.standard_normal((config.classes, dim))
    if config.mode_style == "radial":
        axes = rng.standard_normal((config.classes, dim))
        axes /= np.linalg.norm(axes, axis=1, keepdims=True)
        lateral = rng.standard_normal((config.classes, config.modes, dim))
        lateral -= np.einsum("cmd,cd->cm", lateral, axes)[..., None] * axes[:, None, :]
        lateral /= np.linalg.norm(lateral, axis=2, keepdims=True)
        steps = config.mode_separation * (1.0 + np.arange(config.modes, dtype=float))
        offsets = (
            steps[None, :, None] * axes[:, None, :]
            + (config.mode_tilt * config.mode_separation) * lateral
        )
    else:
        offsets = config.mode_separation * rng.standard_normal(
            (config.classes, config.modes, dim)
        )

    def sample(ci: int, mi: int) -> np.ndarray:
        return centers[ci] + offsets[ci, mi] + config.noise * rng.standard_normal(dim)

    def maybe_extra_label(ci: int) -> list[str]:
        labels = [names[ci]]
        if config.classes > 1 and config.multilabel_rate > 0.0:
            if rng.random() < config.multilabel_rate:
                other = int(rng.integers(config.classes - 1))
                if other >= ci:
                    other += 1
                labels.append(names[other])
        return labels

    records: list[EmbeddingRecord] = []
    for ci in range(config.classes):
        for i in range(config.internal_per_class):
            records.append(
                EmbeddingRecord(
                    id=f"{names[ci]}-int-{i:04d}",
                    vector=sample(ci, 0),
                    labels=[names[ci]],
                    split="internal",
                )
            )
        for i in range(config.external_per_class):
            records.append(
                EmbeddingRecord(
                    id=f"{names[ci]}-ext-{i:04d}",
                    vector=sample(ci, i % config.modes),
                    labels=maybe_extra_label(ci),
                    split="external",
                )
            )
        for i in range(config.query_per_class):
            records.append(
                EmbeddingRecord(
                    id=f"{names[ci]}-qry-{i:04d}",
                    vector=sample(ci, i % config.modes),
                    labels=maybe_extra_label(ci),
                    split="query",
                )
            )
    return Store(records, vocabulary=names)
