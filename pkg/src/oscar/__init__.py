"""OSCAR: object-status-driven recipe progress tracking."""

from .alignment import FrameScores, average_over_frames, fuse, score_frame, similarity
from .harness import (
    AccuracyReport,
    AnnotatedSession,
    ProtocolConfig,
    TrialResult,
    aggregate,
    evaluate,
    load_corpus,
    run_step_trial,
    step_accuracy,
)
from .providers import (
    CachedProvider,
    EmbeddingCache,
    EmbeddingProvider,
    EmbeddingVector,
    MockProvider,
    OracleProvider,
    RemoteProvider,
)
from .recipe import (
    Ingredient,
    ObjectStatus,
    Recipe,
    StepStatusMap,
    extract_object_statuses,
    normalize_recipe,
)
from .sampling import (
    FrameRef,
    SegmentWindow,
    StepClip,
    derive_rng,
    sample_frame,
    segment_step,
    select_sharpest_adjacent,
    sharpness_score,
)
from .simulate import NoiseConfig, SyntheticSession, generate_corpus, generate_session, sweep, write_corpus
from .tracker import (
    PredictionLogEntry,
    ProgressSnapshot,
    SessionState,
    admissible_steps,
    predict,
    progress_snapshot,
    query,
    replay,
    update_state,
)

__version__ = "0.1.0"
