from __future__ import annotations

import numpy as np
import pytest

from oscar.harness import AnnotatedSession
from oscar.recipe import Ingredient, ObjectStatus, Recipe, StepStatusMap
from oscar.sampling import FrameRef, StepClip


def recipe_of(n_steps: int, title: str = "test dish", tag: str = "counter") -> Recipe:
    return Recipe(
        title=title,
        ingredients=tuple(Ingredient(name=f"ingredient {i}") for i in range(1, n_steps + 1)),
        steps=tuple(f"Handle ingredient {i} at the {tag}" for i in range(1, n_steps + 1)),
    )


def statuses_of(recipe: Recipe) -> StepStatusMap:
    return StepStatusMap(
        statuses={
            i: (ObjectStatus(verb="handling", noun=f"ingredient {i}"),)
            for i in range(1, recipe.n_steps + 1)
        }
    )


def session_of(
    session_id: str,
    n_steps: int,
    frames_per_step: int = 10,
    step_seconds: float = 10.0,
    oracle_scores: dict | None = None,
) -> AnnotatedSession:
    recipe = recipe_of(n_steps, tag=f"{session_id} station")
    frames = []
    clips = []
    index = 0
    for step in range(1, n_steps + 1):
        start = (step - 1) * step_seconds
        clips.append(StepClip(step=step, start=start, end=start + step_seconds))
        for k in range(frames_per_step):
            frames.append(
                FrameRef(
                    session_id=session_id,
                    index=index,
                    t=start + (k + 0.5) * step_seconds / frames_per_step,
                    path=f"frames/{session_id}/f{index:05d}.png",
                )
            )
            index += 1
    return AnnotatedSession(
        session_id=session_id,
        frames=frames,
        clips=clips,
        recipe=recipe,
        statuses=statuses_of(recipe),
        oracle_scores=oracle_scores,
    )


def oracle_tables_peaked(session: AnnotatedSession, truth_of=None) -> dict[str, dict[str, float]]:
    """Score tables where the ground-truth step's text and status peak at 0.9."""
    recipe, statuses = session.recipe, session.statuses
    queries = list(recipe.steps) + [p for i in range(1, recipe.n_steps + 1) for p in statuses.phrases(i)]
    clip_of = {c.step: c for c in session.clips}
    tables = {}
    for frame in session.frames:
        step = truth_of(frame) if truth_of else next(
            c.step for c in session.clips if clip_of[c.step].start <= frame.t < clip_of[c.step].end
        )
        truth_queries = {recipe.step_text(step), *statuses.phrases(step)}
        tables[frame.path] = {q: (0.9 if q in truth_queries else 0.1) for q in dict.fromkeys(queries)}
    return tables


def brute_force_report(trials):
    """Independent recomputation from raw trial results: plain loops, no numpy.

    Returns (per-step accuracy, per-video accuracy, corpus mean, population SD),
    each keyed by mode where applicable.
    """
    by_step: dict[tuple[str, int, str], list] = {}
    for t in trials:
        by_step.setdefault((t.video, t.step, t.mode), []).append(t)
    step_acc = {
        key: sum(100.0 if t.correct else 0.0 for t in group) / len(group)
        for key, group in by_step.items()
    }
    videos = sorted({video for video, _, _ in step_acc})
    modes = sorted({mode for _, _, mode in step_acc})
    per_video: dict[tuple[str, str], float] = {}
    for video in videos:
        for mode in modes:
            values = [acc for (v, _, m), acc in step_acc.items() if v == video and m == mode]
            per_video[(video, mode)] = sum(values) / len(values)
    corpus_mean = {m: sum(per_video[(v, m)] for v in videos) / len(videos) for m in modes}
    corpus_sd = {
        m: (sum((per_video[(v, m)] - corpus_mean[m]) ** 2 for v in videos) / len(videos)) ** 0.5
        for m in modes
    }
    return step_acc, per_video, corpus_mean, corpus_sd


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
