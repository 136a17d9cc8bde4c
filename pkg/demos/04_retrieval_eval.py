"""Cosine retrieval over projected embeddings, scored at several depths.

The index stores every corpus record's head projection scaled to unit
norm, so ranking is one matrix-vector product plus an exhaustive sort
(ties broken by ascending id). Queries either come from outside (rank the
whole corpus) or are corpus members themselves (self-excluded). The report
aggregates, per cutoff K: strict-match recall, loose (shared-label)
precision, and score sensitivity — the mean |anomaly score difference|
between the query and its relevant hits, the number this whole package
exists to push down.

Run: python3 demos/04_retrieval_eval.py
"""

from oscars import (
    PipelineConfig,
    LossConfig,
    SamplerConfig,
    SynthConfig,
    TrainConfig,
    generate,
    render_report,
    run_pipeline,
)

store = generate(
    SynthConfig(
        classes=3,
        modes=3,
        dimension=24,
        internal_per_class=20,
        external_per_class=45,
        query_per_class=12,
        mode_style="radial",
        mode_tilt=0.6,
        seed=3,
    )
)

cfg = PipelineConfig(
    knn_k=5,
    bins=3,
    sampler=SamplerConfig(seed=0, quadruplets_per_anchor=3),
    loss=LossConfig(lam=0.05),
    train=TrainConfig(learning_rate=0.1, epochs=40, batch_size=64, seed=0),
    head_seed=0,
    d_hidden=48,
    d_out=24,
    ks=(1, 5, 10),
    score_transform="identity",
)
result = run_pipeline(store, cfg)
index = result.index

print(f"== Index: {len(index)} records, {index.matrix.shape[1]}-dim unit rows ==")

qid = index.ids[0]
print(f"\n== Top-5 for corpus record {qid} (self-excluded) ==")
for rank, hit in enumerate(index.query_id(qid, 5).hits, start=1):
    labels = ",".join(sorted(index.labels_of(hit.id)))
    print(f"  {rank}. {hit.id:22s} sim {hit.similarity:.4f}  [{labels}]")

query = store.split_records("query")[0]
print(f"\n== Top-5 for held-out query {query.id} ==")
for rank, hit in enumerate(index.query_vector(query.vector, 5).hits, start=1):
    labels = ",".join(sorted(index.labels_of(hit.id)))
    print(f"  {rank}. {hit.id:22s} sim {hit.similarity:.4f}  [{labels}]")

print("\n== Evaluation over all held-out queries ==")
summary = render_report(result.report).split("\n\n")[0]
print(summary)
print("\n(render_report also emits one row per query and cutoff; save_report")
print("writes the whole thing to disk.)")
