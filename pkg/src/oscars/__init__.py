"""Outlier-sensitive retrieval over embedding vectors.

The pipeline scores each record's per-class anomaly, splits classes into
anomaly bins with exact 1-D k-means, samples quadruplets that pair an
anchor with a same-bin positive, a different-bin intra-class negative and a
label-disjoint inter-class negative, trains a projection head on the
weighted double-hinge loss, and serves cosine retrieval whose rankings are
scored for recall, precision and anomaly-score sensitivity at K.
"""

__version__ = "0.1.0"

from .anomaly import (
    AnomalyScorer,
    fit_scorer,
    fit_scorer_from_store,
    score,
    score_record_map,
    score_records,
    score_vector,
    sigmoid_scale,
)
from .binning import (
    BinAssignments,
    BinModel,
    assign_bins,
    elbow_select_B,
    kmeans_1d,
    load_scores,
    save_scores,
)
from .data import (
    DatasetManifest,
    EmbeddingRecord,
    Store,
    filter_by_class,
    load_jsonl,
    load_store,
    save_jsonl,
    save_store,
    validate_record,
)
from .errors import DataError, NumericError, OscarsError, ValidationError
from .head import DEFAULT_HIDDEN, DEFAULT_OUT, ProjectionHead, init_head
from .loss import HeadGradients, LossConfig, loss_gradients, quadruplet_loss
from .metrics import (
    DEFAULT_KS,
    MetricsReport,
    QueryMetrics,
    evaluate,
    precision_at_k,
    recall_at_k,
    render_report,
    save_report,
    sensitivity_at_k,
)
from .pipeline import (
    PipelineConfig,
    PipelineResult,
    SweepRow,
    render_sweep,
    run_pipeline,
    sweep_lambda,
    sweep_means,
)
from .retrieval import (
    Hit,
    RankedResult,
    RetrievalIndex,
    build_index,
    load_index,
    save_index,
    save_ranked_results,
)
from .sampling import (
    Quadruplet,
    SampleReport,
    SamplerConfig,
    Violation,
    load_quadruplets,
    sample_quadruplets,
    save_quadruplets,
    validate_quadruplets,
)
from .synth import SynthConfig, class_names, generate
from .train import (
    TrainConfig,
    TrainResult,
    load_head,
    load_history,
    save_head,
    save_history,
    train,
)

__all__ = [name for name in dir() if not name.startswith("_")]
