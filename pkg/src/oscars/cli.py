"""Pipeline subcommands: synth, ingest, bin, sample, train, index, query,
eval, sweep-lambda.

Each stage reads and writes inspectable artifacts (binary store, scores
text, quadruplet text, checkpoint, index, report), so runs can be resumed
or partially redone. Every command that writes an output also drops a
`run_manifest.json` next to it recording the resolved configuration and
input checksums; `--timestamp-free` omits wall-clock fields so reruns are
byte-identical.

Exit codes: 0 success, 2 validation failure, 3 data failure, 4 numeric
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .anomaly import fit_scorer_from_store, score_records
from .binning import assign_bins, load_scores, save_scores
from .data import load_jsonl, load_store, save_store
from .errors import DataError, NumericError, ValidationError
from .head import DEFAULT_HIDDEN, DEFAULT_OUT
from .loss import LossConfig
from .metrics import evaluate, render_report, save_report
from .pipeline import PipelineConfig, render_sweep, sweep_lambda
from .retrieval import build_index, load_index, save_index, save_ranked_results
from .sampling import SamplerConfig, load_quadruplets, sample_quadruplets, save_quadruplets
from .synth import SynthConfig, generate
from .train import TrainConfig, load_head, save_head, save_history, train
from .util import atomic_write_text, file_checksum_hex


def _write_manifest(args, command: str, inputs: list, outputs: list, started: float) -> None:
    if not outputs:
        return
    config = {
        key: value
        for key, value in sorted(vars(args).items())
        if key not in ("func", "command") and not callable(value)
    }
    manifest = {
        "tool": "oscars",
        "version": __version__,
        "command": command,
        "config": config,
        "input_checksums": {str(p): file_checksum_hex(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
    }
    if not args.timestamp_free:
        manifest["duration_seconds"] = round(time.monotonic() - started, 6)
        manifest["completed_at"] = datetime.now(timezone.utc).isoformat()
    path = Path(outputs[0]).resolve().parent / "run_manifest.json"
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _parse_bins(text: str):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise ValidationError(f"--bins expects an integer or 'auto', got {text!r}") from None


def _parse_ks(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"--ks expects comma-separated integers, got {text!r}") from None


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ValidationError(f"{flag} expects comma-separated numbers, got {text!r}") from None


def cmd_synth(args, started: float) -> None:
    cfg = SynthConfig(
        classes=args.classes,
        modes=args.modes,
        dimension=args.dim,
        internal_per_class=args.internal,
        external_per_class=args.external,
        query_per_class=args.query,
        class_separation=args.class_sep,
        mode_separation=args.mode_sep,
        noise=args.noise,
        multilabel_rate=args.multilabel,
        mode_style=args.mode_style,
        mode_tilt=args.mode_tilt,
        seed=args.seed,
    )
    store = generate(cfg)
    manifest = save_store(store, args.out)
    print(f"records\t{manifest.record_count}")
    print(f"dimension\t{manifest.dimension}")
    print(f"classes\t{','.join(manifest.class_vocabulary)}")
    print(f"checksum\t{manifest.checksum}")
    _write_manifest(args, "synth", [], [args.out], started)


def cmd_ingest(args, started: float) -> None:
    if args.format != "jsonl":
        raise ValidationError(f"unsupported input format {args.format!r}")
    store = load_jsonl(args.input)
    manifest = save_store(store, args.output)
    print(f"records\t{manifest.record_count}")
    print(f"dimension\t{manifest.dimension}")
    print(f"classes\t{','.join(manifest.class_vocabulary)}")
    print(f"checksum\t{manifest.checksum}")
    _write_manifest(args, "ingest", [args.input], [args.output], started)


def cmd_bin(args, started: float) -> None:
    store = load_store(args.store)
    internal_path = args.internal_store if args.internal_store else args.store
    internal_store = store if internal_path == args.store else load_store(internal_path)
    scorer = fit_scorer_from_store(internal_store, k=args.k)
    external = store.split_records("external")
    if not external:
        raise DataError(f"{args.store}: no external-split records to bin")
    _, assignments = assign_bins(
        external, scorer, _parse_bins(args.bins), vocabulary=store.vocabulary
    )
    save_scores(
        assignments,
        args.out,
        record_order=[rec.id for rec in external],
        vocabulary=store.vocabulary,
    )
    for name in store.vocabulary:
        model = assignments.models.get(name)
        if model is not None:
            print(f"class\t{name}\tbins\t{model.B}")
    inputs = [args.store] + ([internal_path] if internal_path != args.store else [])
    _write_manifest(args, "bin", inputs, [args.out], started)


def cmd_sample(args, started: float) -> None:
    store = load_store(args.store)
    assignments = load_scores(args.scores)
    config = SamplerConfig(
        seed=args.seed,
        quadruplets_per_anchor=args.per_anchor,
        anchor_set=args.anchor_set,
    )
    quadruplets, report = sample_quadruplets(store, assignments, config)
    save_quadruplets(quadruplets, args.out)
    print(f"anchors\t{report.anchors_total}")
    print(f"emitted\t{report.emitted}")
    print(f"skipped\t{report.anchors_skipped}")
    _write_manifest(args, "sample", [args.store, args.scores], [args.out], started)


def cmd_train(args, started: float) -> None:
    store = load_store(args.store)
    quadruplets = load_quadruplets(args.quadruplets)
    loss_cfg = LossConfig(
        lam=args.lam, margin_intra=args.margin_intra, margin_inter=args.margin_inter
    )
    train_cfg = TrainConfig(
        learning_rate=args.lr,
        epochs=args.epochs,
        batch_size=args.batch_size,
        seed=args.seed,
        momentum=args.momentum,
    )
    result = train(
        store,
        quadruplets,
        args.head_seed,
        loss_cfg,
        train_cfg,
        d_hidden=args.hidden,
        d_out=args.out_dim,
    )
    save_head(result.head, loss_cfg, args.out)
    outputs = [args.out]
    if args.history:
        save_history(result.history, args.history)
        outputs.append(args.history)
    print(f"epochs\t{len(result.history)}")
    print(f"first_epoch_loss\t{result.history[0]:.17g}")
    print(f"final_epoch_loss\t{result.history[-1]:.17g}")
    _write_manifest(args, "train", [args.store, args.quadruplets], outputs, started)


def cmd_index(args, started: float) -> None:
    store = load_store(args.store)
    head, loss_cfg = load_head(args.checkpoint)
    assignments = load_scores(args.scores)
    index = build_index(store, head, assignments, loss_cfg)
    save_index(index, args.out)
    print(f"indexed\t{len(index)}")
    print(f"output_dim\t{head.d_out}")
    _write_manifest(args, "index", [args.store, args.checkpoint, args.scores], [args.out], started)


def cmd_query(args, started: float) -> None:
    index = load_index(args.index)
    if args.id is not None:
        result = index.query_id(args.id, args.k)
    else:
        vector = np.array(_parse_floats(args.vector, "--vector"), dtype=np.float64)
        result = index.query_vector(vector, args.k, query_id="query")
    for rank, hit in enumerate(result.hits, start=1):
        print(f"{rank}\t{hit.id}\t{hit.similarity:.9g}")
    if args.out:
        save_ranked_results([result], args.out)
        _write_manifest(args, "query", [args.index], [args.out], started)


def cmd_eval(args, started: float) -> None:
    index = load_index(args.index)
    query_store = load_store(args.queries)
    queries = query_store.split_records("query")
    if not queries:
        raise DataError(f"{args.queries}: no query-split records to evaluate")
    internal_path = args.internal_store if args.internal_store else args.queries
    internal_store = query_store if internal_path == args.queries else load_store(internal_path)
    scorer = fit_scorer_from_store(internal_store, k=args.k)
    query_scores = score_records(scorer, queries)
    report = evaluate(
        index,
        queries,
        query_scores,
        _parse_ks(args.ks),
        score_transform=args.transform,
    )
    save_report(report, args.out)
    outputs = [args.out]
    if args.json:
        atomic_write_text(args.json, json.dumps(report.to_dict(), indent=2) + "\n")
        outputs.append(args.json)
    print(render_report(report).split("\n\n")[0])
    inputs = [args.index, args.queries] + (
        [internal_path] if internal_path != args.queries else []
    )
    _write_manifest(args, "eval", inputs, outputs, started)


def cmd_sweep_lambda(args, started: float) -> None:
    store = load_store(args.store)
    lambdas = []
    for lam in _parse_floats(args.lambdas, "--lambdas"):
        if lam in lambdas:
            warnings.warn(f"duplicate lambda {lam:g} dropped")
        else:
            lambdas.append(lam)
    if not lambdas:
        raise ValidationError("--lambdas lists no values")
    cfg = PipelineConfig(
        knn_k=args.k,
        bins=_parse_bins(args.bins),
        sampler=SamplerConfig(
            seed=args.seed,
            quadruplets_per_anchor=args.per_anchor,
            anchor_set=args.anchor_set,
        ),
        loss=LossConfig(margin_intra=args.margin_intra, margin_inter=args.margin_inter),
        train=TrainConfig(
            learning_rate=args.lr,
            epochs=args.epochs,
            batch_size=args.batch_size,
            seed=args.seed,
            momentum=args.momentum,
        ),
        head_seed=args.head_seed,
        d_hidden=args.hidden,
        d_out=args.out_dim,
        ks=tuple(_parse_ks(args.ks)),
        score_transform=args.transform,
        resample_each_epoch=args.resample_each_epoch,
    )
    rows = sweep_lambda(store, lambdas, cfg, repeats=args.repeat)
    table = render_sweep(rows)
    atomic_write_text(args.out, table)
    print(table, end="")
    _write_manifest(args, "sweep-lambda", [args.store], [args.out], started)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="oscars",
        description="Outlier-sensitive embedding retrieval pipeline.",
    )
    parser.add_argument("--version", action="version", version=f"oscars {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--timestamp-free",
        action="store_true",
        help="omit wall-clock fields from the run manifest (byte-identical reruns)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a seeded Gaussian-mixture store")
    p.add_argument("--out", required=True)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--modes", type=int, default=3)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--internal", type=int, default=30, help="internal records per class")
    p.add_argument("--external", type=int, default=60, help="external records per class")
    p.add_argument("--query", type=int, default=20, help="query records per class")
    p.add_argument("--class-sep", type=float, default=10.0)
    p.add_argument("--mode-sep", type=float, default=3.0)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--multilabel", type=float, default=0.0)
    p.add_argument(
        "--mode-style",
        choices=["scatter", "radial"],
        default="scatter",
        help="sub-mode layout: independent offsets, or severity tiers along one axis",
    )
    p.add_argument(
        "--mode-tilt",
        type=float,
        default=0.5,
        help="radial only: off-axis push per sub-mode, in --mode-sep units",
    )
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", parents=[common], help="convert a JSONL embedding file to a store")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["jsonl"], default="jsonl")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("bin", parents=[common], help="score anomalies and split classes into bins")
    p.add_argument("--store", required=True)
    p.add_argument("--internal-store", default=None, help="store providing internal references (defaults to --store)")
    p.add_argument("--k", type=int, default=5, help="kNN neighbor count for anomaly scoring")
    p.add_argument("--bins", default="auto", help="bins per class: integer or 'auto'")
    p.add_argument("--out", required=True, help="scores/bins text file")
    p.set_defaults(func=cmd_bin)

    p = sub.add_parser("sample", parents=[common], help="sample training quadruplets")
    p.add_argument("--store", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-anchor", type=int, default=1)
    p.add_argument("--anchor-set", choices=["all_external", "class_balanced"], default="all_external")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("train", parents=[common], help="train the projection head")
    p.add_argument("--store", required=True)
    p.add_argument("--quadruplets", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=0.05)
    p.add_argument("--margin-intra", type=float, default=1.0)
    p.add_argument("--margin-inter", type=float, default=2.0)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--momentum", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--head-seed", type=int, default=0)
    p.add_argument("--hidden", type=int, default=DEFAULT_HIDDEN)
    p.add_argument("--out-dim", type=int, default=DEFAULT_OUT)
    p.add_argument("--out", required=True, help="checkpoint file")
    p.add_argument("--history", default=None, help="optional loss-history text file")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("index", parents=[common], help="build the retrieval index")
    p.add_argument("--store", required=True)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("query", parents=[common], help="rank the index against one query")
    p.add_argument("--index", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--id", default=None, help="query by indexed record id (self-excluded)")
    group.add_argument("--vector", default=None, help="comma-separated raw embedding values")
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--out", default=None, help="optional ranked-results file")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", parents=[common], help="evaluate retrieval metrics on the query split")
    p.add_argument("--index", required=True)
    p.add_argument("--queries", required=True, help="store providing query-split records")
    p.add_argument("--internal-store", default=None, help="store providing internal references (defaults to --queries)")
    p.add_argument("--k", type=int, default=5, help="kNN neighbor count for query anomaly scoring")
    p.add_argument("--ks", default="1,5,10,50,100")
    p.add_argument("--transform", choices=["identity", "sigmoid"], default="sigmoid")
    p.add_argument("--out", required=True, help="metrics report text file")
    p.add_argument("--json", default=None, help="optional JSON copy of the report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "sweep-lambda", parents=[common], help="train/evaluate across intra-loss weights"
    )
    p.add_argument("--store", required=True)
    p.add_argument("--lambdas", required=True, help="comma-separated weights in [0, 1]")
    p.add_argument("--repeat", type=int, default=1)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--bins", default="5")
    p.add_argument("--per-anchor", type=int, default=1)
    p.add_argument("--anchor-set", choices=["all_external", "class_balanced"], default="all_external")
    p.add_argument("--margin-intra", type=float, default=1.0)
    p.add_argument("--margin-inter", type=float, default=2.0)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--momentum", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--head-seed", type=int, default=0)
    p.add_argument("--hidden", type=int, default=DEFAULT_HIDDEN)
    p.add_argument("--out-dim", type=int, default=DEFAULT_OUT)
    p.add_argument("--ks", default="1,5,10,50,100")
    p.add_argument("--transform", choices=["identity", "sigmoid"], default="sigmoid")
    p.add_argument("--resample-each-epoch", action="store_true")
    p.add_argument("--out", required=True, help="sweep table text file")
    p.set_defaults(func=cmd_sweep_lambda)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    warnings.simplefilter("always")
    started = time.monotonic()
    try:
        args.func(args, started)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
