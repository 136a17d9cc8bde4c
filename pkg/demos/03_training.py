"""Training the projection head on quadruplets, with checkpoints.

The head is a two-layer perceptron (relu hidden layer) trained by plain
seeded SGD on the weighted double-hinge quadruplet loss

    L = lam * max(d(a,p) - d(a,n_intra) + m_intra, 0)
      + (1 - lam) * max(d(a,n_intra) - d(a,n_inter) + m_inter, 0)

with exact hand-derived gradients (no autograd). Everything is
deterministic given the seeds, and checkpoints round-trip losslessly.

Run: python3 demos/03_training.py
"""

import pathlib
import tempfile

import numpy as np

from oscars import (
    LossConfig,
    SamplerConfig,
    Store,
    SynthConfig,
    TrainConfig,
    assign_bins,
    fit_scorer_from_store,
    generate,
    load_head,
    sample_quadruplets,
    save_head,
    train,
)

store = generate(
    SynthConfig(
        classes=3,
        modes=3,
        dimension=16,
        internal_per_class=15,
        external_per_class=30,
        query_per_class=0,
        mode_style="radial",
        mode_tilt=0.6,
        seed=2,
    )
)
scorer = fit_scorer_from_store(store, k=5)
updated, assignments = assign_bins(
    store.split_records("external"), scorer, bins=3, vocabulary=store.vocabulary
)
binned = Store(store.split_records("internal") + updated, vocabulary=store.vocabulary)
quads, _ = sample_quadruplets(binned, assignments, SamplerConfig(seed=0, quadruplets_per_anchor=3))

loss_cfg = LossConfig(lam=0.05)
train_cfg = TrainConfig(learning_rate=0.1, epochs=25, batch_size=32, seed=0)

print(f"== SGD over {len(quads)} quadruplets ==")
result = train(binned, quads, 0, loss_cfg, train_cfg, d_hidden=32, d_out=16)
for i in range(0, len(result.history), 5):
    print(f"  epoch {i:3d}: mean loss {result.history[i]:.5f}")
print(f"  final:    mean loss {result.history[-1]:.5f}")

print("\n== Determinism ==")
again = train(binned, quads, 0, loss_cfg, train_cfg, d_hidden=32, d_out=16)
identical = all(
    np.array_equal(getattr(result.head, n), getattr(again.head, n))
    for n in ("W1", "b1", "W2", "b2")
) and result.history == again.history
print(f"second run with the same seeds is bit-identical: {identical}")

print("\n== Checkpoint round trip ==")
with tempfile.TemporaryDirectory() as tmp:
    path = pathlib.Path(tmp) / "head.osch"
    save_head(result.head, loss_cfg, path)
    loaded_head, loaded_loss = load_head(path)
    lossless = all(
        np.array_equal(getattr(result.head, n), getattr(loaded_head, n))
        for n in ("W1", "b1", "W2", "b2")
    )
    print(f"file: {path.name}, {path.stat().st_size} bytes "
          f"(magic + shape header + loss config + raw float64 blocks + checksum)")
    print(f"reload is lossless: {lossless}; stored lambda = {loaded_loss.lam}")
