"""Accuracy protocol: 5 frames x 3 trials per step, 100%/0% marking, corpus aggregation."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Literal, Sequence

import numpy as np

from .alignment import average_over_frames, score_frame
from .errors import EmptyCorpus, OscarError, WrongArity
from .providers import EmbeddingProvider, OracleProvider
from .recipe import Recipe, StepStatusMap
from .sampling import (
    FrameRef,
    StepClip,
    derive_rng,
    load_grayscale,
    sample_frame,
    segment_step,
    select_sharpest_adjacent,
)
from .tracker import Mode, PredictionLogEntry, SessionState, predict, update_state

SdKind = Literal["population", "sample"]


@dataclass
class AnnotatedSession:
    """One video: frame manifest, step clips, recipe, and object statuses."""

    session_id: str
    frames: list[FrameRef]
    clips: list[StepClip]
    recipe: Recipe
    statuses: StepStatusMap
    oracle_scores: dict[str, dict[str, float]] | None = None

    def __post_init__(self):
        annotated = {c.step for c in self.clips}
        unknown = annotated - set(range(1, self.recipe.n_steps + 1))
        if unknown:
            raise ValueError(f"annotations reference steps {sorted(unknown)} beyond the recipe")


@dataclass(frozen=True)
class TrialResult:
    video: str
    step: int
    trial: int
    mode: Mode
    predicted: int
    correct: bool

    def __post_init__(self):
        if self.trial not in (1, 2, 3):
            raise ValueError("trial number must be 1..3")


@dataclass(frozen=True)
class ProtocolConfig:
    """Knobs of the evaluation protocol; defaults follow the published procedure."""

    segments: int = 5
    trials: int = 3
    fusion_weight: float = 0.5
    status_reduce: Literal["max", "mean"] = "max"
    blur_radius: int = 2
    debounce: int = 1
    sd_kind: SdKind = "population"


@dataclass
class AccuracyReport:
    modes: tuple[Mode, ...]
    per_video: dict[str, dict[str, float]]
    per_step: dict[str, dict[int, dict[str, float]]]
    corpus_mean: dict[str, float]
    corpus_sd: dict[str, float]
    delta: float | None
    sd_kind: SdKind


@dataclass
class EvalRun:
    trials: list[TrialResult]
    report: AccuracyReport
    logs: dict[tuple[str, str, int], list[PredictionLogEntry]] = field(default_factory=dict)


def _tag(exc: Exception, video: str, step: int, trial: int) -> Exception:
    return type(exc)(f"[video {video}, step {step}, trial {trial}] {exc}")


def _sample_step_frames(
    session: AnnotatedSession,
    clip: StepClip,
    trial: int,
    seed: int,
    config: ProtocolConfig,
) -> list[FrameRef]:
    rng = derive_rng(seed, session.session_id, clip.step, trial)
    picks = []
    for window in segment_step(clip, config.segments):
        frame = sample_frame(window, session.frames, rng)
        if config.blur_radius > 0:
            frame = select_sharpest_adjacent(frame, session.frames, config.blur_radius, load_grayscale)
        picks.append(frame)
    return picks


def _score_step(
    session: AnnotatedSession,
    clip: StepClip,
    trial: int,
    provider: EmbeddingProvider,
    seed: int,
    config: ProtocolConfig,
) -> tuple[list[FrameRef], np.ndarray, np.ndarray]:
    """Sampled frames plus their averaged step-text and fused score vectors."""
    frames = _sample_step_frames(session, clip, trial, seed, config)
    batch = [
        score_frame(
            frame,
            session.recipe,
            session.statuses,
            provider,
            w=config.fusion_weight,
            status_reduce=config.status_reduce,
        )
        for frame in frames
    ]
    return frames, average_over_frames(batch, "step"), average_over_frames(batch, "fused")


def run_step_trial(
    session: AnnotatedSession,
    step: int,
    trial: int,
    mode: Mode,
    provider: EmbeddingProvider,
    seed: int,
    state: SessionState | None = None,
    config: ProtocolConfig = ProtocolConfig(),
) -> TrialResult:
    """One (video, step, trial) prediction; `state` carries OSCAR history across steps."""
    clip = next((c for c in session.clips if c.step == step), None)
    if clip is None:
        raise ValueError(f"step {step} is not annotated in session {session.session_id}")
    try:
        frames, avg_step, avg_fused = _score_step(session, clip, trial, provider, seed, config)
    except OscarError as exc:
        raise _tag(exc, session.session_id, step, trial) from exc
    if state is None:
        state = SessionState(recipe=session.recipe, debounce=config.debounce)
    scores = avg_fused if mode == "oscar" else avg_step
    entry = predict(scores, state, mode, frames=[f.path for f in frames])
    update_state(state, entry)
    return TrialResult(
        video=session.session_id,
        step=step,
        trial=trial,
        mode=mode,
        predicted=entry.predicted_step,
        correct=entry.predicted_step == step,
    )


def run_video(
    session: AnnotatedSession,
    provider: EmbeddingProvider,
    seed: int,
    modes: Sequence[Mode],
    config: ProtocolConfig = ProtocolConfig(),
    keep_logs: bool = False,
) -> tuple[list[TrialResult], dict[tuple[str, str, int], list[PredictionLogEntry]]]:
    """All trials for one video; both modes reuse the same sampled frames.

    Each trial resets the OSCAR state, then walks the steps in annotation
    order so the time-causal filter sees a realistic history.
    """
    clips = sorted(session.clips, key=lambda c: (c.start, c.step))
    results: list[TrialResult] = []
    logs: dict[tuple[str, str, int], list[PredictionLogEntry]] = {}
    for trial in range(1, config.trials + 1):
        scored = []
        for clip in clips:
            try:
                scored.append((clip, *_score_step(session, clip, trial, provider, seed, config)))
            except OscarError as exc:
                raise _tag(exc, session.session_id, clip.step, trial) from exc
        for mode in modes:
            state = SessionState(recipe=session.recipe, debounce=config.debounce)
            for clip, frames, avg_step, avg_fused in scored:
                scores = avg_fused if mode == "oscar" else avg_step
                entry = predict(scores, state, mode, frames=[f.path for f in frames])
                update_state(state, entry)
                results.append(
                    TrialResult(
                        video=session.session_id,
                        step=clip.step,
                        trial=trial,
                        mode=mode,
                        predicted=entry.predicted_step,
                        correct=entry.predicted_step == clip.step,
                    )
                )
            if keep_logs:
                logs[(session.session_id, mode, trial)] = list(state.history)
    return results, logs


def step_accuracy(trials: Sequence[TrialResult]) -> float:
    """Mean of {100 correct, 0 incorrect} over the three trials of one step."""
    if len(trials) != 3:
        raise WrongArity(f"step accuracy needs exactly 3 trials, got {len(trials)}")
    keys = {(t.video, t.step, t.mode) for t in trials}
    if len(keys) != 1:
        raise WrongArity(f"trials mix (video, step, mode): {sorted(keys)}")
    if sorted(t.trial for t in trials) != [1, 2, 3]:
        raise WrongArity("trials must be numbered 1, 2, 3")
    return float(sum(100.0 if t.correct else 0.0 for t in trials) / 3.0)


def aggregate(results: Sequence[TrialResult], sd_kind: SdKind = "population") -> AccuracyReport:
    """Per-video means over steps, then corpus mean/SD over video accuracies."""
    if not results:
        raise EmptyCorpus("no trial results to aggregate")
    modes = tuple(sorted({t.mode for t in results}, reverse=True))  # baseline before oscar
    modes = tuple(m for m in ("baseline", "oscar") if m in modes)

    by_video_step: dict[tuple[str, int, str], list[TrialResult]] = {}
    for t in results:
        by_video_step.setdefault((t.video, t.step, t.mode), []).append(t)

    per_step: dict[str, dict[int, dict[str, float]]] = {}
    for (video, step, mode), trials in sorted(by_video_step.items()):
        ordered = sorted(trials, key=lambda t: t.trial)
        per_step.setdefault(video, {}).setdefault(step, {})[mode] = step_accuracy(ordered)

    per_video: dict[str, dict[str, float]] = {}
    for video in sorted(per_step):
        per_video[video] = {}
        for mode in modes:
            step_values = [acc[mode] for acc in per_step[video].values() if mode in acc]
            per_video[video][mode] = float(np.mean(step_values))

    ddof = 0 if sd_kind == "population" else 1
    corpus_mean: dict[str, float] = {}
    corpus_sd: dict[str, float] = {}
    for mode in modes:
        values = np.asarray([per_video[v][mode] for v in sorted(per_video)])
        corpus_mean[mode] = float(np.mean(values))
        corpus_sd[mode] = float(np.std(values, ddof=ddof)) if len(values) > ddof else 0.0

    delta = None
    if "baseline" in modes and "oscar" in modes:
        delta = corpus_mean["oscar"] - corpus_mean["baseline"]
    return AccuracyReport(
        modes=modes,
        per_video=per_video,
        per_step=per_step,
        corpus_mean=corpus_mean,
        corpus_sd=corpus_sd,
        delta=delta,
        sd_kind=sd_kind,
    )


def evaluate(
    sessions: Sequence[AnnotatedSession],
    provider_for: Callable[[AnnotatedSession], EmbeddingProvider],
    seed: int,
    modes: Sequence[Mode] = ("baseline", "oscar"),
    config: ProtocolConfig = ProtocolConfig(),
    jobs: int = 1,
    keep_logs: bool = False,
) -> EvalRun:
    """Run the full protocol over a corpus; bit-identical for identical inputs."""
    if not sessions:
        raise EmptyCorpus("no sessions in corpus")

    def one(session: AnnotatedSession):
        return run_video(session, provider_for(session), seed, modes, config, keep_logs)

    outputs: dict[str, tuple[list[TrialResult], dict]] = {}
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for session, result in zip(sessions, pool.map(one, sessions)):
                outputs[session.session_id] = result
    else:
        for session in sessions:
            outputs[session.session_id] = one(session)

    trials: list[TrialResult] = []
    logs: dict[tuple[str, str, int], list[PredictionLogEntry]] = {}
    for session_id in sorted(outputs):
        video_trials, video_logs = outputs[session_id]
        trials.extend(video_trials)
        logs.update(video_logs)
    return EvalRun(trials=trials, report=aggregate(trials, config.sd_kind), logs=logs)


def oracle_provider_for(session: AnnotatedSession) -> OracleProvider:
    if session.oracle_scores is None:
        raise EmptyCorpus(f"session {session.session_id} carries no oracle score tables")
    return OracleProvider(session.oracle_scores)


def load_corpus(root: str | Path) -> list[AnnotatedSession]:
    """Read a corpus directory: corpus.json plus one subdirectory per session."""
    from . import schemas

    root = Path(root)
    index = schemas.read_document(root / "corpus.json")
    violations = schemas.validate(index, "corpus")
    if violations:
        raise EmptyCorpus(f"invalid corpus index: {violations[0]}")
    sessions = []
    for session_id in index["sessions"]:
        session_dir = root / session_id
        _, frames, clips = schemas.parse_manifest(schemas.read_document(session_dir / "manifest.json"))
        recipe = schemas.parse_recipe(schemas.read_document(session_dir / "recipe.json"))
        statuses = schemas.parse_status_map(schemas.read_document(session_dir / "statuses.json"))
        oracle_path = session_dir / "oracle_scores.json"
        oracle_scores = (
            schemas.parse_oracle_scores(schemas.read_document(oracle_path)) if oracle_path.exists() else None
        )
        sessions.append(
            AnnotatedSession(
                session_id=session_id,
                frames=frames,
                clips=clips,
                recipe=recipe,
                statuses=statuses,
                oracle_scores=oracle_scores,
            )
        )
    return sessions
