"""Synthetic store generator: counts, splits, determinism, and the
mode-structure the later stages rely on."""

import numpy as np
import pytest

from oscars import SynthConfig, ValidationError, class_names, generate


class TestSynthConfig:
    def test_defaults(self):
        cfg = SynthConfig()
        assert (cfg.classes, cfg.modes, cfg.dimension) == (3, 3, 32)
        assert (cfg.internal_per_class, cfg.external_per_class, cfg.query_per_class) == (30, 60, 20)

    def test_validation(self):
        with pytest.raises(ValidationError, match="classes must be >= 1"):
            SynthConfig(classes=0)
        with pytest.raises(ValidationError, match="modes must be >= 1"):
            SynthConfig(modes=0)
        with pytest.raises(ValidationError, match="dimension must be >= 1"):
            SynthConfig(dimension=0)
        with pytest.raises(ValidationError, match="external_per_class must be >= 0"):
            SynthConfig(external_per_class=-1)
        with pytest.raises(ValidationError, match=r"multilabel_rate must be in \[0, 1\]"):
            SynthConfig(multilabel_rate=1.5)
        with pytest.raises(ValidationError, match="noise must be >= 0"):
            SynthConfig(noise=-0.1)
        with pytest.raises(ValidationError, match="mode_style must be 'scatter' or 'radial'"):
            SynthConfig(mode_style="spiral")
        with pytest.raises(ValidationError, match="mode_tilt must be >= 0"):
            SynthConfig(mode_tilt=-0.5)
        with pytest.raises(ValidationError, match="'radial' needs dimension >= 2"):
            SynthConfig(mode_style="radial", dimension=1)

    def test_class_names(self):
        assert class_names(SynthConfig(classes=2)) == ["class00", "class01"]


class TestGenerate:
    def test_counts_and_splits(self):
        cfg = SynthConfig(classes=2, internal_per_class=5, external_per_class=8, query_per_class=3, dimension=6)
        store = generate(cfg)
        assert len(store.records) == 2 * (5 + 8 + 3)
        assert len(store.split_records("internal")) == 10
        assert len(store.split_records("external")) == 16
        assert len(store.split_records("query")) == 6
        assert store.dimension == 6
        assert store.vocabulary == ["class00", "class01"]

    def test_id_scheme(self):
        store = generate(SynthConfig(classes=1, internal_per_class=1, external_per_class=1, query_per_class=1, dimension=3))
        assert sorted(r.id for r in store.records) == [
            "class00-ext-0000",
            "class00-int-0000",
            "class00-qry-0000",
        ]

    def test_internal_records_are_single_label_own_class(self):
        store = generate(SynthConfig(classes=3, multilabel_rate=0.9, dimension=4, internal_per_class=4, external_per_class=4, query_per_class=2))
        for rec in store.split_records("internal"):
            assert len(rec.labels) == 1
            assert rec.id.startswith(next(iter(rec.labels)))

    def test_multilabel_rate_adds_second_labels(self):
        cfg = SynthConfig(classes=3, multilabel_rate=0.5, dimension=4, internal_per_class=2, external_per_class=40, query_per_class=10, seed=1)
        store = generate(cfg)
        outer = [r for r in store.records if r.split != "internal"]
        multi = [r for r in outer if len(r.labels) == 2]
        assert 0 < len(multi) < len(outer)
        # the extra label is never the record's own class repeated
        for rec in multi:
            assert len(set(rec.labels)) == 2

    def test_deterministic_per_seed(self):
        a = generate(SynthConfig(seed=5, dimension=8, internal_per_class=3, external_per_class=6, query_per_class=2))
        b = generate(SynthConfig(seed=5, dimension=8, internal_per_class=3, external_per_class=6, query_per_class=2))
        c = generate(SynthConfig(seed=6, dimension=8, internal_per_class=3, external_per_class=6, query_per_class=2))
        for ra, rb in zip(a.records, b.records):
            assert ra.id == rb.id and np.array_equal(ra.vector, rb.vector) and ra.labels == rb.labels
        assert any(not np.array_equal(ra.vector, rc.vector) for ra, rc in zip(a.records, c.records))

    def test_classes_are_geometrically_separated(self):
        store = generate(SynthConfig(classes=3, dimension=16, noise=0.2, seed=0))
        by_class = {}
        for rec in store.split_records("external"):
            by_class.setdefault(next(iter(rec.labels)), []).append(rec.vector)
        cents = {c: np.mean(v, axis=0) for c, v in by_class.items()}
        names = sorted(cents)
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                gap = np.linalg.norm(cents[a] - cents[b])
                spread = max(
                    np.mean([np.linalg.norm(v - cents[c]) for v in by_class[c]]) for c in (a, b)
                )
                assert gap > 2 * spread

    def test_mode_tilt_is_inert_for_scatter_layout(self):
        base = dict(classes=2, dimension=8, internal_per_class=3, external_per_class=6, query_per_class=2, seed=3)
        a = generate(SynthConfig(**base, mode_tilt=0.0))
        b = generate(SynthConfig(**base, mode_tilt=5.0))
        for ra, rb in zip(a.records, b.records):
            assert np.array_equal(ra.vector, rb.vector)

    def test_internal_split_samples_only_first_mode(self):
        # internal vectors cluster tighter than externals, which cycle modes
        cfg = SynthConfig(classes=1, modes=3, dimension=12, noise=0.1, seed=2)
        store = generate(cfg)
        internal = np.stack([r.vector for r in store.split_records("internal")])
        external = np.stack([r.vector for r in store.split_records("external")])
        int_spread = np.linalg.norm(internal - internal.mean(axis=0), axis=1).mean()
        ext_spread = np.linalg.norm(external - external.mean(axis=0), axis=1).mean()
        assert ext_spread > 3 * int_spread


def radial_store(**overrides):
    base = dict(
        classes=3, modes=3, dimension=32, internal_per_class=20,
        external_per_class=60, query_per_class=9, class_separation=0.0,
        mode_separation=3.0, noise=0.2, mode_style="radial", seed=0,
    )
    base.update(overrides)
    return generate(SynthConfig(**base)), SynthConfig(**base)


def tier_groups(store, class_name, modes):
    """External vectors of one class grouped by sub-mode (records cycle modes)."""
    recs = [r for r in store.split_records("external") if class_name in r.labels]
    recs.sort(key=lambda r: r.id)
    return [np.stack([r.vector for i, r in enumerate(recs) if i % modes == m]) for m in range(modes)]


class TestRadialLayout:
    def test_tiers_sit_at_growing_distances(self):
        store, cfg = radial_store(mode_tilt=0.0)
        for name in store.vocabulary:
            tiers = tier_groups(store, name, cfg.modes)
            radii = [np.linalg.norm(t.mean(axis=0)) for t in tiers]
            for m, r in enumerate(radii):
                assert abs(r - cfg.mode_separation * (m + 1)) < 0.5

    def test_tiers_share_one_axis_when_untilted(self):
        store, cfg = radial_store(mode_tilt=0.0)
        for name in store.vocabulary:
            tiers = tier_groups(store, name, cfg.modes)
            dirs = [t.mean(axis=0) / np.linalg.norm(t.mean(axis=0)) for t in tiers]
            for i in range(len(dirs)):
                for j in range(i + 1, len(dirs)):
                    assert float(dirs[i] @ dirs[j]) > 0.99

    def test_tilt_bends_the_line_into_an_arc(self):
        store, cfg = radial_store(mode_tilt=0.8)
        worst = 1.0
        for name in store.vocabulary:
            tiers = tier_groups(store, name, cfg.modes)
            dirs = [t.mean(axis=0) / np.linalg.norm(t.mean(axis=0)) for t in tiers]
            for i in range(len(dirs)):
                for j in range(i + 1, len(dirs)):
                    worst = min(worst, float(dirs[i] @ dirs[j]))
        # tilted tiers still point the same broad way, but measurably apart
        assert 0.5 < worst < 0.99

    def test_classes_point_in_unrelated_directions(self):
        store, cfg = radial_store(mode_tilt=0.5)
        cents = {}
        for name in store.vocabulary:
            recs = [r for r in store.split_records("external") if name in r.labels]
            c = np.mean([r.vector for r in recs], axis=0)
            cents[name] = c / np.linalg.norm(c)
        names = store.vocabulary
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                assert abs(float(cents[a] @ cents[b])) < 0.5

    def test_internal_split_sits_on_the_first_tier(self):
        store, cfg = radial_store(mode_tilt=0.5)
        for name in store.vocabulary:
            internal = np.mean(
                [r.vector for r in store.split_records("internal") if name in r.labels], axis=0
            )
            tier0 = tier_groups(store, name, cfg.modes)[0].mean(axis=0)
            assert np.linalg.norm(internal - tier0) < 0.5
