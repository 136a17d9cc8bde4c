"""End-to-end orchestration: score -> bin -> sample -> train -> index -> evaluate.

`run_pipeline` is the in-memory equivalent of chaining the CLI subcommands
on one store, and `sweep_lambda` repeats it across intra-loss weights to
expose the sensitivity/precision trade-off.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .anomaly import fit_scorer_from_store, score_records
from .binning import BinAssignments, assign_bins
from .data import Store
from .errors import DataError
from .head import DEFAULT_HIDDEN, DEFAULT_OUT, ProjectionHead
from .loss import LossConfig
from .metrics import DEFAULT_KS, MetricsReport, evaluate
from .retrieval import RetrievalIndex, build_index
from .sampling import Quadruplet, SampleReport, SamplerConfig, sample_quadruplets
from .train import TrainConfig, train
from .util import stable_hash64

_MASK64 = (1 << 64) - 1


@dataclass
class PipelineConfig:
    knn_k: int = 5
    bins: int | str = 5  # per-class bin count, or "auto" for elbow selection
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    loss: LossConfig = field(default_factory=LossConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    head_seed: int = 0
    d_hidden: int = DEFAULT_HIDDEN
    d_out: int = DEFAULT_OUT
    ks: tuple = DEFAULT_KS
    score_transform: str = "sigmoid"
    resample_each_epoch: bool = False


@dataclass
class PipelineResult:
    store: Store  # input store with scores/bins filled on external records
    assignments: BinAssignments
    quadruplets: list[Quadruplet]
    sample_report: SampleReport
    head: ProjectionHead
    history: list[float]
    index: RetrievalIndex
    report: MetricsReport


def run_pipeline(store: Store, cfg: PipelineConfig) -> PipelineResult:
    """Run the whole experiment on one store. The store needs all three
    splits: internal (anomaly references), external (training corpus) and
    query (held-out evaluation)."""
    if not store.split_records("query"):
        raise DataError("store has no query-split records to evaluate on")
    scorer = fit_scorer_from_store(store, k=cfg.knn_k)
    external = store.split_records("external")
    updated, assignments = assign_bins(
        external, scorer, cfg.bins, vocabulary=store.vocabulary
    )
    by_id = {rec.id: rec for rec in updated}
    binned_store = Store(
        [by_id.get(rec.id, rec) for rec in store.records], vocabulary=store.vocabulary
    )

    quadruplets, sample_report = sample_quadruplets(binned_store, assignments, cfg.sampler)

    resample_fn = None
    if cfg.resample_each_epoch:

        def resample_fn(epoch: int) -> list[Quadruplet]:
            seed = (cfg.sampler.seed ^ stable_hash64(f"epoch:{epoch}")) & _MASK64
            epoch_cfg = dataclasses.replace(cfg.sampler, seed=seed)
            quads, _ = sample_quadruplets(binned_store, assignments, epoch_cfg)
            return quads

    result = train(
        binned_store,
        quadruplets,
        cfg.head_seed,
        cfg.loss,
        cfg.train,
        d_hidden=cfg.d_hidden,
        d_out=cfg.d_out,
        resample_fn=resample_fn,
    )
    index = build_index(binned_store, result.head, assignments, cfg.loss)
    queries = binned_store.split_records("query")
    query_scores = score_records(scorer, queries)
    report = evaluate(
        index, queries, query_scores, cfg.ks, score_transform=cfg.score_transform
    )
    return PipelineResult(
        store=binned_store,
        assignments=assignments,
        quadruplets=quadruplets,
        sample_report=sample_report,
        head=result.head,
        history=result.history,
        index=index,
        report=report,
    )


@dataclass
class SweepRow:
    lam: float
    seed_offset: int
    report: MetricsReport


def sweep_lambda(
    store: Store, lambdas, cfg: PipelineConfig, repeats: int = 1
) -> list[SweepRow]:
    """Train and evaluate once per (lambda, seed offset) pair. Offsets shift
    the sampler, shuffle and init seeds together so repeats differ while
    lambda comparisons at the same offset stay seed-matched."""
    rows: list[SweepRow] = []
    for lam in lambdas:
        loss = dataclasses.replace(cfg.loss, lam=float(lam))
        for r in range(repeats):
            run_cfg = dataclasses.replace(
                cfg,
                loss=loss,
                sampler=dataclasses.replace(cfg.sampler, seed=(cfg.sampler.seed + r) & _MASK64),
                train=dataclasses.replace(cfg.train, seed=cfg.train.seed + r),
                head_seed=cfg.head_seed + r,
            )
            rows.append(
                SweepRow(
                    lam=float(lam),
                    seed_offset=r,
                    report=run_pipeline(store, run_cfg).report,
                )
            )
    return rows


def sweep_means(rows: list[SweepRow]) -> dict[float, dict[int, dict[str, float | None]]]:
    """lambda -> k -> {recall, precision, sensitivity} averaged over repeats
    (sensitivity averages the runs where it exists; None if none do)."""
    out: dict[float, dict[int, dict[str, float | None]]] = {}
    lams = []
    for row in rows:
        if row.lam not in lams:
            lams.append(row.lam)
    for lam in lams:
        group = [row.report for row in rows if row.lam == lam]
        per_k: dict[int, dict[str, float | None]] = {}
        for k in group[0].ks:
            recalls = [rep.recall[k] for rep in group]
            precisions = [rep.precision[k] for rep in group]
            sens = [rep.sensitivity[k] for rep in group if rep.sensitivity[k] is not None]
            per_k[k] = {
                "recall": sum(recalls) / len(recalls),
                "precision": sum(precisions) / len(precisions),
                "sensitivity": sum(sens) / len(sens) if sens else None,
            }
        out[lam] = per_k
    return out


def render_sweep(rows: list[SweepRow]) -> str:
    """Tab-separated lambda -> per-K metric table, repeats averaged."""
    means = sweep_means(rows)
    lines = ["lambda\tk\trecall\tprecision\tsensitivity"]
    for lam, per_k in means.items():
        for k, values in per_k.items():
            sens = values["sensitivity"]
            sens_txt = "absent" if sens is None else f"{sens:.17g}"
            lines.append(
                f"{lam!r}\t{k}\t{values['recall']:.17g}\t{values['precision']:.17g}\t{sens_txt}"
            )
    return "\n".join(lines) + "\n"
