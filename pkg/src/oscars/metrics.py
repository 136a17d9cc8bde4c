"""Retrieval metrics: recall, precision and anomaly-score sensitivity at K.

Relevance comes in two modes. Strict relevance requires the retrieved
record's label set to equal the query's label set exactly; loose relevance
requires at least one shared label. Recall defaults to strict and precision
to loose, so the two numbers stay distinguishable on multi-label data; both
accept either mode.

Sensitivity is the mean absolute difference between the query's transformed
anomaly score and each relevant hit's, where multi-label pairs take the
minimum difference across their shared classes. Queries with no relevant
hits carry no sensitivity value and are excluded from the aggregate mean.

All means are plain left-to-right float sums in query order, so repeated
runs (and independent reimplementations that sum in the same order) agree
bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

from .anomaly import sigmoid_scale
from .data import EmbeddingRecord
from .errors import DataError, ValidationError
from .retrieval import RankedResult, RetrievalIndex
from .util import atomic_write_text, parallel_map

DEFAULT_KS = (1, 5, 10, 50, 100)

TRANSFORMS = {
    "identity": lambda value: float(value),
    "sigmoid": sigmoid_scale,
}


def _transform_fn(name_or_fn):
    if callable(name_or_fn):
        return name_or_fn
    fn = TRANSFORMS.get(name_or_fn)
    if fn is None:
        raise ValidationError(
            f"unknown score transform {name_or_fn!r}; expected one of {sorted(TRANSFORMS)}"
        )
    return fn


def _is_relevant(mode: str, query_labels: frozenset[str], item_labels: frozenset[str]) -> bool:
    if mode == "strict":
        return query_labels == item_labels
    if mode == "loose":
        return bool(query_labels & item_labels)
    raise ValidationError(f"unknown relevance mode {mode!r}; expected 'strict' or 'loose'")


def recall_at_k(
    result: RankedResult,
    query: EmbeddingRecord,
    index: RetrievalIndex,
    relevance: str = "strict",
) -> float:
    """N_R / K over the result as returned (K is the result's length)."""
    if not result.hits:
        return 0.0
    n_r = sum(1 for h in result.hits if _is_relevant(relevance, query.labels, index.labels_of(h.id)))
    return n_r / len(result.hits)


def precision_at_k(
    result: RankedResult,
    query: EmbeddingRecord,
    index: RetrievalIndex,
    relevance: str = "loose",
) -> float:
    """Fraction of hits sharing relevance with the query; loose by default."""
    return recall_at_k(result, query, index, relevance=relevance)


def sensitivity_at_k(
    result: RankedResult,
    query: EmbeddingRecord,
    index: RetrievalIndex,
    query_scores: dict[str, float],
    score_transform="sigmoid",
    relevance: str = "loose",
) -> float | None:
    """Mean |transformed score difference| over the relevant hits only;
    None when no hit is relevant. Multi-label pairs take the minimum
    difference across shared classes."""
    transform = _transform_fn(score_transform)
    diffs: list[float] = []
    for hit in result.hits:
        item_labels = index.labels_of(hit.id)
        if not _is_relevant(relevance, query.labels, item_labels):
            continue
        shared = sorted(query.labels & item_labels)
        item_scores = index.scores.get(hit.id, {})
        best = None
        for cls in shared:
            if cls not in query_scores:
                raise DataError(f"query {query.id}: no anomaly score for class {cls}")
            if cls not in item_scores:
                raise DataError(f"record {hit.id}: no anomaly score for class {cls}")
            diff = abs(transform(query_scores[cls]) - transform(item_scores[cls]))
            if best is None or diff < best:
                best = diff
        diffs.append(best)
    if not diffs:
        return None
    return sum(diffs) / len(diffs)


@dataclass(frozen=True)
class QueryMetrics:
    query_id: str
    k: int
    n_relevant_strict: int
    n_relevant_loose: int
    recall: float
    precision: float
    sensitivity: float | None


@dataclass
class MetricsReport:
    ks: list[int]
    n_queries: int
    per_query: dict[int, list[QueryMetrics]]  # requested k -> one row per query
    recall: dict[int, float]  # requested k -> mean over queries
    precision: dict[int, float]
    sensitivity: dict[int, float | None]  # None when no query had a relevant hit

    def to_dict(self) -> dict:
        return {
            "n_queries": self.n_queries,
            "per_k": [
                {
                    "k": k,
                    "recall": self.recall[k],
                    "precision": self.precision[k],
                    "sensitivity": self.sensitivity[k],
                }
                for k in self.ks
            ],
            "per_query": [
                {
                    "query_id": row.query_id,
                    "k": row.k,
                    "recall": row.recall,
                    "precision": row.precision,
                    "sensitivity": row.sensitivity,
                    "n_relevant_strict": row.n_relevant_strict,
                    "n_relevant_loose": row.n_relevant_loose,
                }
                for k in self.ks
                for row in self.per_query[k]
            ],
        }


def evaluate(
    index: RetrievalIndex,
    queries: list[EmbeddingRecord],
    query_scores: dict[str, dict[str, float]],
    ks=DEFAULT_KS,
    *,
    score_transform="sigmoid",
    recall_relevance: str = "strict",
    precision_relevance: str = "loose",
    sensitivity_relevance: str = "loose",
) -> MetricsReport:
    """Rank every query once at the deepest K, then score each requested K
    against that ranking's prefix. Queries whose id happens to be in the
    index are ranked with self-exclusion.

    query_scores maps query id -> class -> raw anomaly score (needed for the
    sensitivity terms; missing scores on relevant hits are an error).
    """
    ks = sorted({int(k) for k in ks})
    if not ks:
        raise ValidationError("empty K list")
    if ks[0] < 1:
        raise ValidationError(f"K values must be >= 1, got {ks[0]}")
    if not queries:
        raise ValidationError("no queries to evaluate")
    transform = _transform_fn(score_transform)
    k_max = max(ks)

    def one(query: EmbeddingRecord) -> list[QueryMetrics]:
        if query.id in index:
            depth = min(k_max, len(index) - 1)
            if depth < 1:
                raise DataError(f"index has no records besides query {query.id}")
            ranked = index.query_id(query.id, depth)
        else:
            ranked = index.query_vector(query.vector, min(k_max, len(index)), query_id=query.id)
        hit_labels = [index.labels_of(h.id) for h in ranked.hits]
        q_scores = query_scores.get(query.id, {})
        rows = []
        for k in ks:
            top = ranked.hits[:k]
            labels = hit_labels[: len(top)]
            kk = len(top)
            n_strict = sum(1 for lb in labels if _is_relevant("strict", query.labels, lb))
            n_loose = sum(1 for lb in labels if _is_relevant("loose", query.labels, lb))
            if kk == 0:
                rec = prec = 0.0
            else:
                n_rec = sum(
                    1 for lb in labels if _is_relevant(recall_relevance, query.labels, lb)
                )
                n_prec = sum(
                    1 for lb in labels if _is_relevant(precision_relevance, query.labels, lb)
                )
                rec = n_rec / kk
                prec = n_prec / kk
            prefix = RankedResult(query_id=ranked.query_id, hits=top)
            sens = sensitivity_at_k(
                prefix, query, index, q_scores, transform, sensitivity_relevance
            )
            rows.append(
                QueryMetrics(
                    query_id=query.id,
                    k=k,
                    n_relevant_strict=n_strict,
                    n_relevant_loose=n_loose,
                    recall=rec,
                    precision=prec,
                    sensitivity=sens,
                )
            )
        return rows

    per_query_rows = parallel_map(one, queries)

    per_query: dict[int, list[QueryMetrics]] = {k: [] for k in ks}
    for rows in per_query_rows:
        for row in rows:
            per_query[row.k].append(row)

    recall_mean: dict[int, float] = {}
    precision_mean: dict[int, float] = {}
    sensitivity_mean: dict[int, float | None] = {}
    for k in ks:
        rows = per_query[k]
        recall_mean[k] = sum(r.recall for r in rows) / len(rows)
        precision_mean[k] = sum(r.precision for r in rows) / len(rows)
        present = [r.sensitivity for r in rows if r.sensitivity is not None]
        sensitivity_mean[k] = sum(present) / len(present) if present else None
    return MetricsReport(
        ks=ks,
        n_queries=len(queries),
        per_query=per_query,
        recall=recall_mean,
        precision=precision_mean,
        sensitivity=sensitivity_mean,
    )


def render_report(report: MetricsReport) -> str:
    """Structured text: per-K means, then the per-query table."""
    lines = [f"n_queries\t{report.n_queries}"]
    lines.append("k\trecall\tprecision\tsensitivity")
    for k in report.ks:
        sens = report.sensitivity[k]
        sens_txt = "absent" if sens is None else f"{sens:.17g}"
        lines.append(f"{k}\t{report.recall[k]:.17g}\t{report.precision[k]:.17g}\t{sens_txt}")
    lines.append("")
    lines.append(
        "query_id\tk\trecall\tprecision\tsensitivity\tn_relevant_strict\tn_relevant_loose"
    )
    for k in report.ks:
        for row in report.per_query[k]:
            sens = "absent" if row.sensitivity is None else f"{row.sensitivity:.17g}"
            lines.append(
                f"{row.query_id}\t{row.k}\t{row.recall:.17g}\t{row.precision:.17g}"
                f"\t{sens}\t{row.n_relevant_strict}\t{row.n_relevant_loose}"
            )
    return "\n".join(lines) + "\n"


def save_report(report: MetricsReport, path) -> None:
    atomic_write_text(path, render_report(report))
