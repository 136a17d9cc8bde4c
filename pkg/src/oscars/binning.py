"""Anomaly-score binning: exact 1-D k-means plus elbow selection of B.

Clusters of 1-D data are contiguous intervals, so the globally optimal
partition (minimum within-cluster SSE) is computable by dynamic programming
over the sorted values. The DP runs on distinct values weighted by their
multiplicities, with divide-and-conquer argmin search; runs of duplicates
are never split and the result carries no initialization randomness, unlike
Lloyd-style iteration.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from .anomaly import AnomalyScorer, score_vector
from .data import EmbeddingRecord
from .errors import ValidationError
from .util import parallel_map

DEFAULT_B = 5  # operating default when elbow selection is disabled
DEFAULT_B_MAX = 10


@dataclass
class BinModel:
    """Per-class 1-D clustering of anomaly scores.

    boundaries[i] is the midpoint between the last score of bin i and the
    first score of bin i+1; assigning by boundaries reproduces the
    DP-optimal partition.
    """

    class_name: str
    B: int
    boundaries: list[float]  # length B-1, strictly ascending
    centroids: list[float]  # length B, ascending
    sse: float

    def assign(self, value: float) -> int:
        return int(np.searchsorted(np.asarray(self.boundaries), value, side="left"))


def _check_scores(scores) -> np.ndarray:
    arr = np.asarray(scores, dtype=np.float64).ravel()
    if arr.size == 0:
        raise ValidationError("scores must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("scores must be finite")
    return arr


def _optimal_splits(values: np.ndarray, weights: np.ndarray, B: int) -> list[int]:
    """Start indices (into the distinct-value array) of the B optimal
    clusters, found by DP with divide-and-conquer argmin search. Ties go to
    the smallest split index."""
    m = values.size
    W = np.concatenate(([0.0], np.cumsum(weights)))
    S = np.concatenate(([0.0], np.cumsum(weights * values)))
    Q = np.concatenate(([0.0], np.cumsum(weights * values * values)))

    def interval_cost(i: int, j: int) -> float:
        # weighted SSE of the distinct-value interval [i, j] around its mean
        w = W[j + 1] - W[i]
        s = S[j + 1] - S[i]
        return (Q[j + 1] - Q[i]) - (s * s) / w

    prev = np.array([interval_cost(0, i) for i in range(m)])
    args: list[np.ndarray] = []
    for b in range(2, B + 1):
        cur = np.full(m, np.inf)
        arg = np.full(m, -1, dtype=np.int64)

        def solve(lo: int, hi: int, jlo: int, jhi: int):
            if lo > hi:
                return
            mid = (lo + hi) // 2
            best, best_j = np.inf, -1
            for j in range(jlo, min(jhi, mid) + 1):
                c = prev[j - 1] + interval_cost(j, mid)
                if c < best:
                    best, best_j = c, j
            cur[mid], arg[mid] = best, best_j
            solve(lo, mid - 1, jlo, best_j)
            solve(mid + 1, hi, best_j, jhi)

        solve(b - 1, m - 1, b - 1, m - 1)
        args.append(arg)
        prev = cur

    splits = [0] * B
    end = m - 1
    for b in range(B, 1, -1):
        j = int(args[b - 2][end])
        splits[b - 1] = j
        end = j - 1
    return splits


def _fit_1d(scores, B: int, class_name: str = "") -> tuple[BinModel, np.ndarray]:
    """Fit the optimal B-bin partition; also returns the bin id of every
    input score in input order."""
    arr = _check_scores(scores)
    values, counts = np.unique(arr, return_counts=True)
    m = values.size
    if not 1 <= B <= m:
        raise ValidationError(f"B={B} must be in [1, {m}] (number of distinct scores)")
    if B == 1:
        splits = [0]
    else:
        splits = _optimal_splits(values, counts.astype(np.float64), B)

    # bin id per distinct value, then per input score
    value_bin = np.zeros(m, dtype=np.int64)
    for b, start in enumerate(splits):
        value_bin[start:] = b
    assignments = value_bin[np.searchsorted(values, arr)]

    # canonical per-cluster statistics on the sorted scores, accumulated
    # left to right so independent reimplementations agree bitwise
    sorted_arr = np.sort(arr)
    edges = [int(np.sum(counts[:s])) for s in splits] + [arr.size]
    centroids: list[float] = []
    sse = 0.0
    for b in range(B):
        chunk = sorted_arr[edges[b] : edges[b + 1]]
        mean = float(np.mean(chunk))
        centroids.append(mean)
        sse += float(np.sum((chunk - mean) ** 2))
    boundaries = [
        float(values[splits[b] - 1] + (values[splits[b]] - values[splits[b] - 1]) / 2.0)
        for b in range(1, B)
    ]
    model = BinModel(class_name=class_name, B=B, boundaries=boundaries, centroids=centroids, sse=sse)
    return model, assignments


def kmeans_1d(scores, B: int, class_name: str = "") -> BinModel:
    """Globally optimal 1-D k-means partition of the scores into B bins."""
    return _fit_1d(scores, B, class_name)[0]


def elbow_select_B(scores, b_max: int = DEFAULT_B_MAX) -> int:
    """Pick B in [2, b_max] at the knee of the SSE curve: the B maximizing
    the discrete second difference SSE(B-1) - 2*SSE(B) + SSE(B+1), ties
    broken toward smaller B. b_max is clamped (with a warning) when there
    are fewer distinct scores."""
    if b_max < 2:
        raise ValidationError(f"b_max must be >= 2, got {b_max}")
    arr = _check_scores(scores)
    m = np.unique(arr).size
    if m < 2:
        warnings.warn(f"only {m} distinct score(s); returning B=1")
        return 1
    eff = min(b_max, m)
    if eff < b_max:
        warnings.warn(f"only {m} distinct scores; clamping B_max from {b_max} to {eff}")
    if eff == 2:
        return 2
    top = min(eff + 1, m)
    sse = {b: kmeans_1d(arr, b).sse for b in range(1, top + 1)}
    return knee_of_sse_curve(sse, b_hi=min(eff, top - 1))


def knee_of_sse_curve(sse: dict[int, float], b_hi: int) -> int:
    """The B in [2, b_hi] maximizing SSE(B-1) - 2*SSE(B) + SSE(B+1); exact
    ties go to the smaller B. sse must cover 1..b_hi+1."""
    best_b, best_d2 = None, -np.inf
    for b in range(2, b_hi + 1):
        d2 = sse[b - 1] - 2.0 * sse[b] + sse[b + 1]
        if d2 > best_d2:
            best_b, best_d2 = b, d2
    return int(best_b)


@dataclass
class BinAssignments:
    """Per-class bin models plus the per-record (class -> score, class ->
    bin) maps. Multi-label records carry one entry per class; the sampler
    consumes these maps rather than the records' primary bin_id."""

    models: dict[str, BinModel]
    scores: dict[str, dict[str, float]]  # record id -> class -> anomaly score
    bins: dict[str, dict[str, int]]  # record id -> class -> bin id

    def score_of(self, record_id: str, class_name: str) -> float:
        return self.scores[record_id][class_name]

    def bin_of(self, record_id: str, class_name: str) -> int:
        return self.bins[record_id][class_name]


def assign_bins(
    records: list[EmbeddingRecord],
    scorer: AnomalyScorer,
    bins: int | str = "auto",
    *,
    vocabulary: list[str] | None = None,
    b_max: int = DEFAULT_B_MAX,
) -> tuple[list[EmbeddingRecord], BinAssignments]:
    """Score every external record per class and split each class into bins.

    bins is either a fixed integer B (clamped per class to the number of
    distinct scores, with a warning) or "auto" for elbow selection. Each
    record's primary anomaly_score/bin_id come from its first
    vocabulary-ordered class; the full per-class maps are returned
    alongside. Classes are processed independently and merged in vocabulary
    order.
    """
    if not records:
        raise ValidationError("no records to bin")
    for rec in records:
        if rec.split != "external":
            raise ValidationError(f"record {rec.id!r}: assign_bins expects external-split records")
    if isinstance(bins, str) and bins != "auto":
        raise ValidationError(f"bins must be an integer or 'auto', got {bins!r}")
    if isinstance(bins, int) and bins < 1:
        raise ValidationError(f"bins must be >= 1, got {bins}")
    if vocabulary is None:
        vocabulary = sorted(set().union(*(rec.labels for rec in records)))

    def fit_class(class_name: str):
        members = [rec for rec in records if class_name in rec.labels]
        if not members:
            return class_name, None, []
        class_scores = np.array(
            [score_vector(scorer, rec.vector, class_name) for rec in members]
        )
        m = np.unique(class_scores).size
        if bins == "auto":
            b = elbow_select_B(class_scores, min(b_max, m)) if m >= 2 else 1
        else:
            b = min(bins, m)
            if b < bins:
                warnings.warn(
                    f"class {class_name!r}: only {m} distinct scores; clamping B from {bins} to {b}"
                )
        model, assignment = _fit_1d(class_scores, b, class_name)
        per_member = [
            (rec.id, float(s), int(a)) for rec, s, a in zip(members, class_scores, assignment)
        ]
        return class_name, model, per_member

    results = parallel_map(fit_class, vocabulary)

    models: dict[str, BinModel] = {}
    score_maps: dict[str, dict[str, float]] = {rec.id: {} for rec in records}
    bin_maps: dict[str, dict[str, int]] = {rec.id: {} for rec in records}
    for class_name, model, per_member in results:
        if model is None:
            continue
        models[class_name] = model
        for rec_id, s, b in per_member:
            score_maps[rec_id][class_name] = s
            bin_maps[rec_id][class_name] = b

    vocab_pos = {name: i for i, name in enumerate(vocabulary)}
    updated: list[EmbeddingRecord] = []
    for rec in records:
        primary = min(rec.labels, key=lambda name: vocab_pos[name])
        updated.append(
            dataclasses.replace(
                rec,
                anomaly_score=score_maps[rec.id][primary],
                bin_id=bin_maps[rec.id][primary],
            )
        )
    return updated, BinAssignments(models=models, scores=score_maps, bins=bin_maps)


# ---------------------------------------------------------------------------
# Scores/bins text format: one line per (record, class) pair


def save_scores(
    assignments: BinAssignments,
    path,
    *,
    record_order: list[str] | None = None,
    vocabulary: list[str] | None = None,
) -> None:
    """Emit `id,class,anomaly_score,bin_id` lines (scores at 9 significant
    digits), ordered by record then by class in vocabulary order."""
    ids = record_order if record_order is not None else sorted(assignments.scores)
    lines = []
    for rec_id in ids:
        per_class = assignments.scores.get(rec_id, {})
        names = sorted(per_class, key=(lambda n: vocabulary.index(n)) if vocabulary else None)
        for name in names:
            s = per_class[name]
            b = assignments.bins[rec_id][name]
            lines.append(f"{rec_id},{name},{s:.9g},{b}")
    from .util import atomic_write_text

    atomic_write_text(path, "\n".join(lines) + "\n")


def load_scores(path) -> BinAssignments:
    """Read the scores/bins text file back; bin models are not recoverable
    from it, so `models` is empty."""
    scores: dict[str, dict[str, float]] = {}
    bin_maps: dict[str, dict[str, int]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 4:
                raise ValidationError(f"{path}: line {lineno}: expected id,class,score,bin")
            rec_id, class_name, score_s, bin_s = parts
            try:
                s, b = float(score_s), int(bin_s)
            except ValueError:
                raise ValidationError(f"{path}: line {lineno}: bad score or bin value") from None
            scores.setdefault(rec_id, {})[class_name] = s
            bin_maps.setdefault(rec_id, {})[class_name] = b
    if not scores:
        raise ValidationError(f"empty scores file: {path}")
    return BinAssignments(models={}, scores=scores, bins=bin_maps)
