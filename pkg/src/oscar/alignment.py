"""Frame-to-step similarity scoring and step/status score fusion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyBatch,
    LengthMismatch,
    ProviderUnavailable,
    ZeroVector,
)
from .providers import EmbeddingProvider, EmbeddingVector
from .recipe import Recipe, StepStatusMap
from .sampling import FrameRef

StatusReduce = Literal["max", "mean"]


@dataclass(eq=False)
class FrameScores:
    """Per-frame similarity vectors: one entry per recipe step, all length N."""

    frame: FrameRef
    step_scores: np.ndarray
    status_scores: np.ndarray
    fused_scores: np.ndarray

    def __post_init__(self):
        self.step_scores = np.asarray(self.step_scores, dtype=np.float64)
        self.status_scores = np.asarray(self.status_scores, dtype=np.float64)
        self.fused_scores = np.asarray(self.fused_scores, dtype=np.float64)
        lengths = {v.shape for v in (self.step_scores, self.status_scores, self.fused_scores)}
        if len(lengths) != 1:
            raise LengthMismatch(f"score vectors disagree on length: {lengths}")
        for v in (self.step_scores, self.status_scores, self.fused_scores):
            if not np.all(np.isfinite(v)):
                raise ValueError("scores must be finite")


def similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """Cosine similarity in [-1, 1]."""
    if a.dimension != b.dimension:
        raise DimensionMismatch(f"dimensions differ: {a.dimension} vs {b.dimension}")
    norm_a = np.linalg.norm(a.values)
    norm_b = np.linalg.norm(b.values)
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVector("cosine similarity is undefined for a zero vector")
    value = float(np.dot(a.values, b.values) / (norm_a * norm_b))
    return float(np.clip(value, -1.0, 1.0))


def fuse(step_scores: Sequence[float], status_scores: Sequence[float], w: float = 0.5) -> np.ndarray:
    """Elementwise w*step + (1-w)*status; w=0.5 is the plain average."""
    if not 0.0 <= w <= 1.0:
        raise ValueError(f"fusion weight must lie in [0, 1], got {w}")
    step = np.asarray(step_scores, dtype=np.float64)
    status = np.asarray(status_scores, dtype=np.float64)
    if step.shape != status.shape:
        raise LengthMismatch(f"cannot fuse vectors of shapes {step.shape} and {status.shape}")
    return w * step + (1.0 - w) * status


def score_frame(
    frame: FrameRef,
    recipe: Recipe,
    statuses: StepStatusMap,
    provider: EmbeddingProvider,
    w: float = 0.5,
    status_reduce: StatusReduce = "max",
) -> FrameScores:
    """Score one frame against every step text and every step's status phrases.

    A step's status score is the max (or mean, by config) over its phrases;
    steps with no statuses fall back to their step-text score so fusion never
    injects zeros.
    """
    step_texts = list(recipe.steps)
    phrase_lists = [statuses.phrases(i) for i in range(1, recipe.n_steps + 1)]
    flat_phrases = [p for phrases in phrase_lists for p in phrases]

    try:
        raw_steps = provider.score_texts(frame, step_texts)
        if raw_steps is not None:
            step_scores = np.asarray(raw_steps, dtype=np.float64)
            flat_scores = (
                np.asarray(provider.score_texts(frame, flat_phrases), dtype=np.float64)
                if flat_phrases
                else np.empty(0)
            )
        else:
            image_emb = provider.embed_image(frame)
            text_embs = provider.embed_text(step_texts + flat_phrases)
            step_scores = np.asarray(
                [similarity(image_emb, emb) for emb in text_embs[: len(step_texts)]]
            )
            flat_scores = np.asarray(
                [similarity(image_emb, emb) for emb in text_embs[len(step_texts):]]
            )
    except ProviderUnavailable:
        raise
    except Exception as exc:
        raise ProviderUnavailable(
            f"provider {provider.model_id} failed on frame {frame.session_id}#{frame.index}: {exc}"
        ) from exc

    reduce = np.max if status_reduce == "max" else np.mean
    status_scores = np.empty(recipe.n_steps, dtype=np.float64)
    offset = 0
    for i, phrases in enumerate(phrase_lists):
        if phrases:
            status_scores[i] = reduce(flat_scores[offset : offset + len(phrases)])
            offset += len(phrases)
        else:
            status_scores[i] = step_scores[i]

    return FrameScores(
        frame=frame,
        step_scores=step_scores,
        status_scores=status_scores,
        fused_scores=fuse(step_scores, status_scores, w),
    )


def average_over_frames(batch: Iterable[FrameScores], use: Literal["fused", "step"] = "fused") -> np.ndarray:
    """Elementwise mean of fused (OSCAR mode) or step-text (baseline) vectors."""
    vectors = [fs.fused_scores if use == "fused" else fs.step_scores for fs in batch]
    if not vectors:
        raise EmptyBatch("cannot average an empty frame batch")
    lengths = {v.shape for v in vectors}
    if len(lengths) != 1:
        raise LengthMismatch(f"frame batch mixes score lengths: {lengths}")
    return np.mean(np.stack(vectors), axis=0)
