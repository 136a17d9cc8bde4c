"""Per-class anomaly scoring of external samples against a clean internal set.

The scorer is a k-nearest-neighbor mean-distance detector over embedding
vectors: the anomaly score of a sample for class c is the mean Euclidean
distance from its vector to its k nearest internal reference vectors of
class c. Any monotone outlier score works downstream, and precomputed
scores carried by the input records are accepted as an alternative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import EmbeddingRecord, Store
from .errors import DataError, ValidationError


@dataclass
class AnomalyScorer:
    """Frozen per-class reference sets plus the neighbor count k."""

    references: dict[str, np.ndarray]  # class -> (n_c, D) float64
    k: int

    def classes(self) -> list[str]:
        return sorted(self.references)


def fit_scorer(internal_records: list[EmbeddingRecord], k: int = 5) -> AnomalyScorer:
    """Group internal vectors by class; a multi-label record contributes its
    vector to every class it carries. Errors if any class has fewer than k
    reference samples."""
    if k < 1:
        raise ValidationError(f"k must be >= 1, got {k}")
    if not internal_records:
        raise DataError("no internal records to fit the scorer on")
    grouped: dict[str, list[np.ndarray]] = {}
    for rec in internal_records:
        for name in rec.labels:
            grouped.setdefault(name, []).append(rec.vector)
    refs: dict[str, np.ndarray] = {}
    for name in sorted(grouped):
        vecs = grouped[name]
        if len(vecs) < k:
            raise DataError(
                f"class {name!r} has {len(vecs)} internal samples, fewer than k={k}"
            )
        refs[name] = np.ascontiguousarray(np.stack(vecs), dtype=np.float64)
    return AnomalyScorer(references=refs, k=k)


def score(scorer: AnomalyScorer, record: EmbeddingRecord, class_name: str) -> float:
    """Mean Euclidean distance from the record's vector to its k nearest
    reference vectors of class_name. Deterministic and >= 0."""
    return score_vector(scorer, record.vector, class_name)


def score_vector(scorer: AnomalyScorer, vector: np.ndarray, class_name: str) -> float:
    refs = scorer.references.get(class_name)
    if refs is None:
        raise DataError(f"unknown class {class_name!r}: no internal reference set")
    diffs = refs - np.asarray(vector, dtype=np.float64)
    dists = np.sqrt(np.einsum("ij,ij->i", diffs, diffs))
    k = scorer.k
    if k >= dists.size:
        nearest = np.sort(dists)
    else:
        nearest = np.sort(np.partition(dists, k - 1)[:k])
    # fixed ascending order keeps the mean bit-reproducible
    return float(np.sum(nearest[:k]) / k)


def score_record_map(scorer: AnomalyScorer, record: EmbeddingRecord) -> dict[str, float]:
    """Anomaly score of one record under each of its own classes."""
    return {name: score(scorer, record, name) for name in record.sorted_labels()}


def score_records(scorer: AnomalyScorer, records: list[EmbeddingRecord]) -> dict[str, dict[str, float]]:
    """Per-class score maps for a batch of records, keyed by record id."""
    return {rec.id: score_record_map(scorer, rec) for rec in records}


def fit_scorer_from_store(store: Store, k: int = 5) -> AnomalyScorer:
    internal = store.split_records("internal")
    if not internal:
        raise DataError("store has no internal-split records to fit on")
    return fit_scorer(internal, k)


def sigmoid_scale(value: float) -> float:
    """Squash a finite score into (0, 1); strictly monotone increasing."""
    if not math.isfinite(value):
        raise ValidationError(f"sigmoid_scale requires a finite score, got {value!r}")
    if value >= 0:
        return 1.0 / (1.0 + math.exp(-value))
    # exp(value) form avoids overflow for large negative inputs
    e = math.exp(value)
    return e / (1.0 + e)
