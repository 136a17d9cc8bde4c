"""Cosine retrieval over head-projected embeddings.

The index keeps every corpus vector projected through the trained head and
scaled to unit norm, so similarity is a single dot product. Rankings break
similarity ties by ascending record id, which makes result order
reproducible across runs and platforms.
"""

from __future__ import annotations

import io
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .binning import BinAssignments
from .data import Store, _pack_str, _Reader
from .errors import DataError, NumericError, ValidationError
from .head import ProjectionHead
from .loss import LossConfig
from .util import atomic_write_bytes, atomic_write_text, checksum64

INDEX_MAGIC = b"OSCI"
INDEX_VERSION = 1


@dataclass(frozen=True)
class Hit:
    id: str
    similarity: float


@dataclass(frozen=True)
class RankedResult:
    """Descending-similarity ranking for one query; `clamped` records that
    the requested depth exceeded the corpus and the full ranking came back."""

    query_id: str | None
    hits: tuple[Hit, ...]
    clamped: bool = False

    def __len__(self) -> int:
        return len(self.hits)

    def ids(self) -> list[str]:
        return [h.id for h in self.hits]


class RetrievalIndex:
    """Searchable corpus: ids, unit-norm projected vectors, labels, and the
    anomaly scores / bins the corpus records were assigned."""

    def __init__(
        self,
        ids: list[str],
        matrix: np.ndarray,
        labels: list[frozenset[str]],
        scores: dict[str, dict[str, float]],
        bins: dict[str, dict[str, int]],
        head: ProjectionHead,
        loss_cfg: LossConfig,
        vocabulary: list[str],
    ):
        if matrix.ndim != 2 or matrix.shape[0] != len(ids) or len(labels) != len(ids):
            raise ValidationError("index arrays disagree on record count")
        self.ids = list(ids)
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.labels = list(labels)
        self.scores = scores
        self.bins = bins
        self.head = head
        self.loss_cfg = loss_cfg
        self.vocabulary = list(vocabulary)
        self._row_of = {rid: i for i, rid in enumerate(self.ids)}
        self._ids_arr = np.array(self.ids)

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, rid: str) -> bool:
        return rid in self._row_of

    def labels_of(self, rid: str) -> frozenset[str]:
        row = self._row_of.get(rid)
        if row is None:
            raise DataError(f"id not in index: {rid}")
        return self.labels[row]

    def project(self, vector) -> np.ndarray:
        """Head projection scaled to unit norm (the space queries live in)."""
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self.head.d_in,):
            raise ValidationError(
                f"query vector has dimension {vector.shape}, index expects ({self.head.d_in},)"
            )
        z = self.head.forward(vector)
        norm = float(np.linalg.norm(z))
        if norm == 0.0:
            raise NumericError("projected query vector has zero norm")
        return z / norm

    def query_vector(self, vector, k: int, query_id: str | None = None) -> RankedResult:
        return self._rank(self.project(vector), k, exclude_row=None, query_id=query_id)

    def query_id(self, rid: str, k: int) -> RankedResult:
        """Query with an indexed record's own projection; the record itself
        never appears among its results."""
        row = self._row_of.get(rid)
        if row is None:
            raise DataError(f"id not in index: {rid}")
        return self._rank(self.matrix[row], k, exclude_row=row, query_id=rid)

    def _rank(
        self, unit: np.ndarray, k: int, exclude_row: int | None, query_id: str | None
    ) -> RankedResult:
        if k < 1:
            raise ValidationError(f"k must be >= 1, got {k}")
        available = len(self.ids) - (0 if exclude_row is None else 1)
        clamped = k > available
        if clamped:
            warnings.warn(
                f"k={k} exceeds the {available} available records; returning all of them",
                stacklevel=3,
            )
            k = available
        sims = self.matrix @ unit
        ids_arr = self._ids_arr
        if exclude_row is not None:
            keep = np.ones(len(sims), dtype=bool)
            keep[exclude_row] = False
            sims = sims[keep]
            ids_arr = ids_arr[keep]
        order = np.lexsort((ids_arr, -sims))[:k]
        hits = tuple(Hit(id=str(ids_arr[i]), similarity=float(sims[i])) for i in order)
        return RankedResult(query_id=query_id, hits=hits, clamped=clamped)


def build_index(
    store: Store,
    head: ProjectionHead,
    assignments: BinAssignments,
    loss_cfg: LossConfig,
    split: str = "external",
) -> RetrievalIndex:
    """Project every record of the given split and assemble the index.

    A corpus record whose projection collapses to the zero vector cannot be
    ranked by cosine similarity, so that aborts the build.
    """
    records = store.split_records(split)
    if not records:
        raise DataError(f"no records in split {split!r} to index")
    if store.dimension != head.d_in:
        raise ValidationError(
            f"store dimension {store.dimension} does not match head input {head.d_in}"
        )
    ids = [rec.id for rec in records]
    raw = head.forward_many(np.stack([rec.vector for rec in records]))
    norms = np.linalg.norm(raw, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise NumericError(f"projected vector has zero norm for record {ids[int(zero[0])]}")
    matrix = raw / norms[:, None]
    labels = [rec.labels for rec in records]
    scores = {rid: dict(assignments.scores.get(rid, {})) for rid in ids}
    bins = {rid: dict(assignments.bins.get(rid, {})) for rid in ids}
    return RetrievalIndex(ids, matrix, labels, scores, bins, head, loss_cfg, store.vocabulary)


def save_ranked_results(results: list[RankedResult], path) -> None:
    """One `query_id,rank,item_id,similarity` line per hit, 1-based ranks."""
    lines = []
    for result in results:
        qid = result.query_id if result.query_id is not None else ""
        for rank, hit in enumerate(result.hits, start=1):
            lines.append(f"{qid},{rank},{hit.id},{hit.similarity:.17g}")
    atomic_write_text(path, "\n".join(lines) + ("\n" if lines else ""))


# ---------------------------------------------------------------------------
# Index file: head + corpus rows in one checksummed binary


def save_index(index: RetrievalIndex, path) -> None:
    out = io.BytesIO()
    out.write(INDEX_MAGIC)
    head = index.head
    out.write(
        struct.pack("<IIII", INDEX_VERSION, head.d_in, head.d_hidden, head.d_out)
    )
    cfg = index.loss_cfg
    out.write(struct.pack("<ddd", cfg.lam, cfg.margin_intra, cfg.margin_inter))
    for block in (head.W1, head.b1, head.W2, head.b2):
        out.write(np.ascontiguousarray(block, dtype="<f8").tobytes())
    out.write(struct.pack("<I", len(index.vocabulary)))
    for name in index.vocabulary:
        _pack_str(out, name)
    class_index = {name: i for i, name in enumerate(index.vocabulary)}
    out.write(struct.pack("<Q", len(index.ids)))
    for row, rid in enumerate(index.ids):
        _pack_str(out, rid)
        idxs = sorted(class_index[name] for name in index.labels[row])
        out.write(struct.pack("<I", len(idxs)))
        out.write(struct.pack(f"<{len(idxs)}I", *idxs))
        entries = sorted(index.scores.get(rid, {}))
        out.write(struct.pack("<I", len(entries)))
        for cls in entries:
            out.write(
                struct.pack(
                    "<IdI",
                    class_index[cls],
                    index.scores[rid][cls],
                    index.bins.get(rid, {}).get(cls, 0),
                )
            )
        out.write(np.ascontiguousarray(index.matrix[row], dtype="<f8").tobytes())
    body = out.getvalue()
    atomic_write_bytes(path, body + checksum64(body))


def load_index(path) -> RetrievalIndex:
    path = Path(path)
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8 + len(INDEX_MAGIC) or checksum64(raw[:-8]) != raw[-8:]:
        raise DataError(f"{path}: index checksum mismatch")
    rd = _Reader(raw[:-8], path)
    if rd.read(4) != INDEX_MAGIC:
        raise DataError(f"{path}: bad magic, not an index file")
    version, d_in, d_hidden, d_out = rd.unpack("<IIII")
    if version != INDEX_VERSION:
        raise DataError(f"{path}: unsupported index version {version}")
    lam, m_intra, m_inter = rd.unpack("<ddd")

    def take(shape):
        n = int(np.prod(shape))
        return np.frombuffer(rd.read(8 * n), dtype="<f8").reshape(shape).copy()

    head = ProjectionHead(
        W1=take((d_hidden, d_in)),
        b1=take((d_hidden,)),
        W2=take((d_out, d_hidden)),
        b2=take((d_out,)),
    )
    (n_vocab,) = rd.unpack("<I")
    vocabulary = [rd.read_str() for _ in range(n_vocab)]
    (count,) = rd.unpack("<Q")
    ids: list[str] = []
    labels: list[frozenset[str]] = []
    scores: dict[str, dict[str, float]] = {}
    bins: dict[str, dict[str, int]] = {}
    rows = np.empty((count, d_out), dtype=np.float64)
    for row in range(count):
        rid = rd.read_str()
        (n_labels,) = rd.unpack("<I")
        idxs = rd.unpack(f"<{n_labels}I")
        labels.append(frozenset(vocabulary[i] for i in idxs))
        (n_entries,) = rd.unpack("<I")
        rec_scores: dict[str, float] = {}
        rec_bins: dict[str, int] = {}
        for _ in range(n_entries):
            cls_idx, score, bin_id = rd.unpack("<IdI")
            rec_scores[vocabulary[cls_idx]] = score
            rec_bins[vocabulary[cls_idx]] = bin_id
        scores[rid] = rec_scores
        bins[rid] = rec_bins
        rows[row] = np.frombuffer(rd.read(8 * d_out), dtype="<f8")
        ids.append(rid)
    if rd.pos != len(rd.data):
        raise DataError(f"{path}: trailing bytes after last record")
    loss_cfg = LossConfig(lam=lam, margin_intra=m_intra, margin_inter=m_inter)
    return RetrievalIndex(ids, rows, labels, scores, bins, head, loss_cfg, vocabulary)
