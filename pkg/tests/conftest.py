import numpy as np
import pytest

from oscars.data import EmbeddingRecord, Store


def make_record(rid, vector, labels, split="external", **kw):
    return EmbeddingRecord(
        id=rid, vector=np.asarray(vector, dtype=np.float64), labels=frozenset(labels), split=split, **kw
    )


def tiny_store():
    """Two classes, all three splits, 2-dim vectors with obvious geometry."""
    records = [
        make_record("int-a0", [0.0, 0.0], ["A"], split="internal"),
        make_record("int-a1", [0.1, 0.0], ["A"], split="internal"),
        make_record("int-b0", [10.0, 10.0], ["B"], split="internal"),
        make_record("int-b1", [10.1, 10.0], ["B"], split="internal"),
        make_record("ext-a0", [0.2, 0.1], ["A"]),
        make_record("ext-a1", [0.3, 0.0], ["A"]),
        make_record("ext-a2", [3.0, 0.0], ["A"]),
        make_record("ext-a3", [3.1, 0.1], ["A"]),
        make_record("ext-b0", [10.2, 10.1], ["B"]),
        make_record("ext-b1", [10.3, 10.0], ["B"]),
        make_record("ext-b2", [13.0, 10.0], ["B"]),
        make_record("ext-b3", [13.1, 10.1], ["B"]),
        make_record("qry-a0", [0.25, 0.05], ["A"], split="query"),
        make_record("qry-b0", [10.25, 10.05], ["B"], split="query"),
    ]
    return Store(records)


@pytest.fixture
def store():
    return tiny_store()


def random_store(rng, n=40, dim=8, classes=("A", "B", "C"), multilabel_rate=0.0, splits=("external",)):
    """Unstructured random store for property tests."""
    records = []
    for i in range(n):
        labels = [classes[int(rng.integers(len(classes)))]]
        if multilabel_rate and rng.random() < multilabel_rate:
            extra = classes[int(rng.integers(len(classes)))]
            if extra not in labels:
                labels.append(extra)
        records.append(
            make_record(
                f"r{i:04d}",
                rng.standard_normal(dim),
                labels,
                split=splits[i % len(splits)],
            )
        )
    return Store(records)
