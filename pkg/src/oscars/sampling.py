"""Quadruplet construction from a binned store.

Each training tuple is (anchor, positive, intra-class negative, inter-class
negative): the positive shares a class and the anchor's bin in that class,
the intra-class negative shares a class but sits in a different bin, and the
inter-class negative shares no label at all. Sampling is deterministic under
(store, seed): every anchor gets its own substream seeded by
seed XOR hash(anchor_id), so anchors may be processed in any order or in
parallel without changing the output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .binning import BinAssignments
from .data import EmbeddingRecord, Store
from .errors import DataError, ValidationError
from .util import atomic_write_text, stable_hash64

_MASK64 = (1 << 64) - 1

ANCHOR_SETS = ("all_external", "class_balanced")


@dataclass(frozen=True)
class Quadruplet:
    anchor_id: str
    positive_id: str
    intra_negative_id: str
    inter_negative_id: str

    def ids(self) -> tuple[str, str, str, str]:
        return (self.anchor_id, self.positive_id, self.intra_negative_id, self.inter_negative_id)


@dataclass
class SamplerConfig:
    seed: int = 0
    quadruplets_per_anchor: int = 1
    anchor_set: str = "all_external"

    def __post_init__(self):
        if self.quadruplets_per_anchor < 1:
            raise ValidationError("quadruplets_per_anchor must be >= 1")
        if self.anchor_set not in ANCHOR_SETS:
            raise ValidationError(f"anchor_set must be one of {ANCHOR_SETS}")


@dataclass
class SampleReport:
    anchors_total: int = 0
    emitted: int = 0
    anchors_skipped: int = 0
    skipped_ids: list[str] = field(default_factory=list)


def _anchor_rng(seed: int, anchor_id: str) -> np.random.Generator:
    return np.random.default_rng((seed ^ stable_hash64(anchor_id)) & _MASK64)


def sample_quadruplets(
    store: Store, assignments: BinAssignments, config: SamplerConfig
) -> tuple[list[Quadruplet], SampleReport]:
    """One quadruplet per anchor per quadruplets_per_anchor.

    The shared class of a tuple is drawn uniformly among the anchor's
    labels; classes without a full candidate set are fallen back over in
    seeded random order, so an anchor is skipped only when no class of its
    admits a valid tuple (single-bin classes, or no label-disjoint record).
    """
    pool = [rec for rec in store.records if rec.split == "external" and assignments.bins.get(rec.id)]
    if not pool:
        raise DataError("store has no binned external records")
    classes = sorted(set().union(*(rec.labels for rec in pool)))
    if len(classes) < 2:
        raise DataError(f"need at least 2 classes to sample inter-class negatives, got {len(classes)}")

    # candidate indexes, all in store record order for determinism
    by_class: dict[str, list[EmbeddingRecord]] = {c: [] for c in classes}
    by_class_bin: dict[tuple[str, int], list[EmbeddingRecord]] = {}
    for rec in pool:
        for c in rec.labels:
            by_class[c].append(rec)
            by_class_bin.setdefault((c, assignments.bin_of(rec.id, c)), []).append(rec)

    anchors: list[tuple[EmbeddingRecord, str | None]] = []
    if config.anchor_set == "all_external":
        anchors = [(rec, None) for rec in pool]
    else:
        m = min(len(by_class[c]) for c in classes)
        for c in classes:
            members = by_class[c]
            rng_c = np.random.default_rng((config.seed ^ stable_hash64("balance:" + c)) & _MASK64)
            chosen = sorted(rng_c.choice(len(members), size=m, replace=False))
            anchors.extend((members[i], c) for i in chosen)

    quads: list[Quadruplet] = []
    report = SampleReport(anchors_total=len(anchors))
    for anchor, forced_class in anchors:
        rng = _anchor_rng(config.seed, anchor.id)
        a_bins = assignments.bins[anchor.id]
        anchor_labels = sorted(anchor.labels)
        emitted_any = False
        for _ in range(config.quadruplets_per_anchor):
            if forced_class is not None:
                order = [forced_class]
            else:
                order = [anchor_labels[i] for i in rng.permutation(len(anchor_labels))]
            tup = None
            for c in order:
                pos = [r for r in by_class_bin.get((c, a_bins[c]), []) if r.id != anchor.id]
                if not pos:
                    continue
                intra = [r for r in by_class[c] if assignments.bin_of(r.id, c) != a_bins[c]]
                if not intra:
                    continue
                inter = [r for r in pool if not (r.labels & anchor.labels)]
                if not inter:
                    continue
                tup = Quadruplet(
                    anchor_id=anchor.id,
                    positive_id=pos[int(rng.integers(len(pos)))].id,
                    intra_negative_id=intra[int(rng.integers(len(intra)))].id,
                    inter_negative_id=inter[int(rng.integers(len(inter)))].id,
                )
                break
            if tup is not None:
                quads.append(tup)
                emitted_any = True
        if not emitted_any:
            report.anchors_skipped += 1
            report.skipped_ids.append(anchor.id)
    report.emitted = len(quads)
    return quads, report


@dataclass(frozen=True)
class Violation:
    index: int
    quadruplet: Quadruplet
    reason: str


def validate_quadruplets(
    store: Store, assignments: BinAssignments, quadruplets: list[Quadruplet]
) -> list[Violation]:
    """Check every tuple against the quadruplet constraints; sampler output
    yields an empty report. Shared-class constraints are existential: some
    shared class must have matching (positive) or differing (intra
    negative) bins."""
    violations: list[Violation] = []
    for i, quad in enumerate(quadruplets):
        a = store.get(quad.anchor_id)
        p = store.get(quad.positive_id)
        ni = store.get(quad.intra_negative_id)
        nn = store.get(quad.inter_negative_id)
        for rec in (a, p, ni):
            if not assignments.bins.get(rec.id):
                raise DataError(f"record {rec.id!r} has no bin assignment")

        if len({a.id, p.id, ni.id, nn.id}) < 4:
            violations.append(Violation(i, quad, "duplicate ids in tuple"))

        a_bins, p_bins, ni_bins = (assignments.bins[r.id] for r in (a, p, ni))

        shared_p = a.labels & p.labels
        if not shared_p:
            violations.append(Violation(i, quad, "positive shares no class with anchor"))
        elif not any(
            c in p_bins and c in a_bins and p_bins[c] == a_bins[c] for c in shared_p
        ):
            violations.append(Violation(i, quad, "positive bin mismatch"))

        shared_ni = a.labels & ni.labels
        if not shared_ni:
            violations.append(Violation(i, quad, "intra negative shares no class with anchor"))
        elif not any(
            c in ni_bins and c in a_bins and ni_bins[c] != a_bins[c] for c in shared_ni
        ):
            violations.append(Violation(i, quad, "intra negative bin matches anchor"))

        if a.labels & nn.labels:
            violations.append(Violation(i, quad, "inter negative shares class"))
    return violations


# ---------------------------------------------------------------------------
# Quadruplet file: one tuple per line


def save_quadruplets(quadruplets: list[Quadruplet], path) -> None:
    lines = [",".join(q.ids()) for q in quadruplets]
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_quadruplets(path) -> list[Quadruplet]:
    quads: list[Quadruplet] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 4:
                raise ValidationError(f"{path}: line {lineno}: expected 4 comma-separated ids")
            quads.append(Quadruplet(*parts))
    return quads
