"""Data model and interchange formats for embedding stores.

Two formats are supported:

* line-delimited JSON text (one record per line) for interop with feature
  extractors living in other ecosystems, and
* a compact binary store (magic ``OSC1``, little-endian, 32-bit float
  vectors) for fast reloads.

Vectors are held at 64-bit in memory; the binary format quantizes them to
32-bit on save and loading returns exactly the stored 32-bit values, so
save -> load -> save is byte-identical.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, ValidationError
from .util import checksum64, checksum64_hex

STORE_MAGIC = b"OSC1"
STORE_VERSION = 1

SPLITS = ("internal", "external", "query")
DEFAULT_SPLIT = "external"


@dataclass
class EmbeddingRecord:
    """One sample: id, embedding vector, label set, split tag and the
    optional anomaly annotations filled in by the binning stage."""

    id: str
    vector: np.ndarray  # float64, read-only
    labels: frozenset[str]
    split: str = DEFAULT_SPLIT
    anomaly_score: float | None = None
    bin_id: int | None = None

    def __post_init__(self):
        vec = np.asarray(self.vector, dtype=np.float64)
        if vec.ndim != 1:
            raise ValidationError(f"record {self.id!r}: vector must be one-dimensional")
        vec.setflags(write=False)
        self.vector = vec
        self.labels = frozenset(self.labels)
        if self.anomaly_score is not None:
            self.anomaly_score = float(self.anomaly_score)
        if self.bin_id is not None:
            self.bin_id = int(self.bin_id)
        validate_record(self)

    def __eq__(self, other):
        if not isinstance(other, EmbeddingRecord):
            return NotImplemented
        return (
            self.id == other.id
            and np.array_equal(self.vector, other.vector)
            and self.labels == other.labels
            and self.split == other.split
            and self.anomaly_score == other.anomaly_score
            and self.bin_id == other.bin_id
        )

    def sorted_labels(self) -> list[str]:
        return sorted(self.labels)


def validate_record(rec: EmbeddingRecord) -> None:
    if not rec.id:
        raise ValidationError("record id must be a non-empty string")
    if not rec.labels:
        raise ValidationError(f"record {rec.id!r}: empty label set")
    if rec.split not in SPLITS:
        raise ValidationError(f"record {rec.id!r}: unknown split {rec.split!r}")
    if rec.vector.size < 1:
        raise ValidationError(f"record {rec.id!r}: empty vector")
    if not np.all(np.isfinite(rec.vector)):
        raise ValidationError(f"record {rec.id!r}: non-finite value in vector")
    if rec.anomaly_score is not None and not np.isfinite(rec.anomaly_score):
        raise ValidationError(f"record {rec.id!r}: non-finite anomaly score")
    if rec.bin_id is not None:
        if rec.anomaly_score is None:
            raise ValidationError(f"record {rec.id!r}: bin_id present without anomaly_score")
        if rec.bin_id < 0:
            raise ValidationError(f"record {rec.id!r}: negative bin_id")


@dataclass(frozen=True)
class DatasetManifest:
    dimension: int
    class_vocabulary: tuple[str, ...]
    record_count: int
    checksum: str  # 16 hex chars, 64-bit content hash of the store body

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "class_vocabulary": list(self.class_vocabulary),
            "record_count": self.record_count,
            "checksum": self.checksum,
        }


class Store:
    """An immutable collection of records sharing one dimension and one
    class vocabulary. Any number of readers may share a loaded store."""

    def __init__(self, records: list[EmbeddingRecord], vocabulary: list[str] | None = None):
        if not records:
            raise ValidationError("store must contain at least one record")
        self.records = list(records)
        dim = self.records[0].vector.size
        seen: set[str] = set()
        classes: set[str] = set()
        for i, rec in enumerate(self.records):
            if rec.vector.size != dim:
                raise ValidationError(
                    f"record {rec.id!r}: dimension {rec.vector.size} != {dim} of first record"
                )
            if rec.id in seen:
                raise ValidationError(f"duplicate id {rec.id!r}")
            seen.add(rec.id)
            classes |= rec.labels
        if vocabulary is None:
            vocabulary = sorted(classes)
        else:
            unknown = classes - set(vocabulary)
            if unknown:
                raise ValidationError(f"labels outside declared vocabulary: {sorted(unknown)}")
        self.vocabulary = list(vocabulary)
        self.dimension = dim
        self.by_id = {rec.id: rec for rec in self.records}

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def get(self, record_id: str) -> EmbeddingRecord:
        try:
            return self.by_id[record_id]
        except KeyError:
            raise DataError(f"unresolvable record id {record_id!r}") from None

    def split_records(self, split: str) -> list[EmbeddingRecord]:
        return [r for r in self.records if r.split == split]

    def primary_class(self, rec: EmbeddingRecord) -> str:
        """First class of the record in vocabulary order."""
        for name in self.vocabulary:
            if name in rec.labels:
                return name
        raise DataError(f"record {rec.id!r} has no label in the vocabulary")

    def manifest(self) -> DatasetManifest:
        body = _store_body_bytes(self)
        return DatasetManifest(
            dimension=self.dimension,
            class_vocabulary=tuple(self.vocabulary),
            record_count=len(self.records),
            checksum=checksum64_hex(body),
        )


def filter_by_class(store: Store, class_name: str) -> list[EmbeddingRecord]:
    """Records whose label set contains class_name (multi-label records
    appear in every matching slice)."""
    if class_name not in store.vocabulary:
        raise DataError(f"unknown class {class_name!r}")
    return [rec for rec in store.records if class_name in rec.labels]


# ---------------------------------------------------------------------------
# JSON-lines interchange format


def record_to_json_dict(rec: EmbeddingRecord) -> dict:
    out: dict = {
        "id": rec.id,
        "labels": rec.sorted_labels(),
        "vector": [float(v) for v in rec.vector],
    }
    if rec.split != DEFAULT_SPLIT:
        out["split"] = rec.split
    if rec.anomaly_score is not None:
        out["anomaly_score"] = float(rec.anomaly_score)
    if rec.bin_id is not None:
        out["bin_id"] = int(rec.bin_id)
    return out


def _record_from_json_dict(obj: dict, lineno: int) -> EmbeddingRecord:
    for key in ("id", "labels", "vector"):
        if key not in obj:
            raise ValidationError(f"line {lineno}: missing field {key!r}")
    if not isinstance(obj["id"], str) or not obj["id"]:
        raise ValidationError(f"line {lineno}: id must be a non-empty string")
    labels = obj["labels"]
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise ValidationError(f"line {lineno}: labels must be an array of strings")
    try:
        return EmbeddingRecord(
            id=obj["id"],
            vector=np.asarray(obj["vector"], dtype=np.float64),
            labels=frozenset(labels),
            split=obj.get("split", DEFAULT_SPLIT),
            anomaly_score=obj.get("anomaly_score"),
            bin_id=obj.get("bin_id"),
        )
    except ValidationError as exc:
        raise ValidationError(f"line {lineno}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"line {lineno}: {exc}") from None


def load_jsonl(path: str | Path) -> Store:
    """Parse and validate a line-delimited text store.

    Dimension is inferred from the first record; every later mismatch is
    reported with its line number.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    records: list[EmbeddingRecord] = []
    seen: set[str] = set()
    dim: int | None = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"line {lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise ValidationError(f"line {lineno}: expected an object")
            rec = _record_from_json_dict(obj, lineno)
            if dim is None:
                dim = rec.vector.size
            elif rec.vector.size != dim:
                raise ValidationError(
                    f"line {lineno}: dimension mismatch (got {rec.vector.size}, expected {dim})"
                )
            if rec.id in seen:
                raise ValidationError(f"line {lineno}: duplicate id {rec.id!r}")
            seen.add(rec.id)
            records.append(rec)
    if not records:
        raise ValidationError(f"empty input: {path}")
    return Store(records)


def save_jsonl(store: Store, path: str | Path) -> None:
    lines = [json.dumps(record_to_json_dict(rec), separators=(",", ":")) for rec in store.records]
    from .util import atomic_write_text

    atomic_write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# Binary store (magic OSC1, little-endian, f32 vectors, 64-bit checksum trailer)

_SPLIT_CODE = {name: i for i, name in enumerate(SPLITS)}


def _pack_str(out: io.BytesIO, text: str) -> None:
    raw = text.encode("utf-8")
    out.write(struct.pack("<I", len(raw)))
    out.write(raw)


def _store_body_bytes(store: Store) -> bytes:
    out = io.BytesIO()
    out.write(STORE_MAGIC)
    out.write(struct.pack("<IIQ", STORE_VERSION, store.dimension, len(store.records)))
    out.write(struct.pack("<I", len(store.vocabulary)))
    for name in store.vocabulary:
        _pack_str(out, name)
    class_index = {name: i for i, name in enumerate(store.vocabulary)}
    for rec in store.records:
        _pack_str(out, rec.id)
        flags = (1 if rec.anomaly_score is not None else 0) | (2 if rec.bin_id is not None else 0)
        out.write(struct.pack("<BB", _SPLIT_CODE[rec.split], flags))
        idxs = sorted(class_index[name] for name in rec.labels)
        out.write(struct.pack("<I", len(idxs)))
        out.write(struct.pack(f"<{len(idxs)}I", *idxs))
        if rec.anomaly_score is not None:
            out.write(struct.pack("<d", rec.anomaly_score))
        if rec.bin_id is not None:
            out.write(struct.pack("<I", rec.bin_id))
        out.write(np.ascontiguousarray(rec.vector, dtype="<f4").tobytes())
    return out.getvalue()


def save_store(store: Store, path: str | Path) -> DatasetManifest:
    """Write the binary store; returns its manifest. Writers are exclusive:
    the target file is replaced as a whole."""
    body = _store_body_bytes(store)
    from .util import atomic_write_bytes

    atomic_write_bytes(path, body + checksum64(body))
    return DatasetManifest(
        dimension=store.dimension,
        class_vocabulary=tuple(store.vocabulary),
        record_count=len(store.records),
        checksum=checksum64_hex(body),
    )


class _Reader:
    def __init__(self, data: bytes, path: Path):
        self.data = data
        self.pos = 0
        self.path = path

    def read(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise DataError(f"{self.path}: truncated store")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.read(struct.calcsize(fmt)))

    def read_str(self) -> str:
        (n,) = self.unpack("<I")
        return self.read(n).decode("utf-8")


def load_store(path: str | Path) -> Store:
    """Load a binary store, verifying the checksum trailer. The returned
    vectors are exactly the stored 32-bit values (upcast to 64-bit)."""
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise DataError(f"unreadable store {path}: {exc}") from None
    if len(raw) < 8 + len(STORE_MAGIC):
        raise DataError(f"{path}: too short to be a store")
    body, trailer = raw[:-8], raw[-8:]
    if checksum64(body) != trailer:
        raise DataError(f"{path}: checksum mismatch (file corrupted?)")
    rd = _Reader(body, path)
    if rd.read(4) != STORE_MAGIC:
        raise DataError(f"{path}: bad magic, not an OSC1 store")
    version, dim, count = rd.unpack("<IIQ")
    if version != STORE_VERSION:
        raise DataError(f"{path}: unsupported store version {version}")
    (n_vocab,) = rd.unpack("<I")
    vocab = [rd.read_str() for _ in range(n_vocab)]
    records: list[EmbeddingRecord] = []
    for _ in range(count):
        rec_id = rd.read_str()
        split_code, flags = rd.unpack("<BB")
        (n_labels,) = rd.unpack("<I")
        idxs = rd.unpack(f"<{n_labels}I")
        score = rd.unpack("<d")[0] if flags & 1 else None
        bin_id = rd.unpack("<I")[0] if flags & 2 else None
        vec = np.frombuffer(rd.read(4 * dim), dtype="<f4").astype(np.float64)
        records.append(
            EmbeddingRecord(
                id=rec_id,
                vector=vec,
                labels=frozenset(vocab[i] for i in idxs),
                split=SPLITS[split_code],
                anomaly_score=score,
                bin_id=bin_id,
            )
        )
    return Store(records, vocabulary=vocab)
