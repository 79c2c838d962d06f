"""Synthetic annotated sessions with oracle score tables and parameterized confounders."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import schemas
from .harness import AnnotatedSession, ProtocolConfig, evaluate, oracle_provider_for
from .recipe import Ingredient, ObjectStatus, Recipe, StepStatusMap
from .sampling import FrameRef, StepClip, derive_rng

# Score geometry of the oracle tables.  The truth query peaks at TEXT_PEAK,
# non-matching queries sit at FLOOR, and cluttered frames flatten step-text
# scores to FLAT for every step.
TEXT_PEAK = 0.9
FLOOR = 0.1
FLAT = 0.5

STEP_SECONDS = 10.0
DEFAULT_SESSIONS = 100
DEFAULT_STEPS = 8
DEFAULT_FRAMES_PER_STEP = 25


@dataclass(frozen=True)
class NoiseConfig:
    """Confounder knobs, each grounded in an observed failure mode.

    clutter        - chance a step is shot wide with every ingredient visible,
                     flattening its frames' step-text scores toward uniform
    repeat_steps   - number of steps whose text duplicates an earlier step
    lingering      - chance a frame still shows the previous step's prepared
                     ingredient, keeping that status salient
    status_signal  - strength of the true status peak, in [0, 1]
    jitter         - gaussian score noise sigma
    """

    clutter: float = 0.0
    repeat_steps: int = 0
    lingering: float = 0.0
    status_signal: float = 1.0
    jitter: float = 0.0

    def __post_init__(self):
        for name in ("clutter", "lingering", "status_signal"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.jitter < 0.0:
            raise ValueError("jitter must be >= 0")
        if self.repeat_steps < 0:
            raise ValueError("repeat-step count must be >= 0")

    def sort_key(self) -> tuple:
        return (self.clutter, self.repeat_steps, self.lingering, self.status_signal, self.jitter)


DEFAULT_MARGIN_NOISE = NoiseConfig(clutter=0.7, status_signal=0.9, jitter=0.05)


@dataclass
class SyntheticSession:
    session: AnnotatedSession
    truth: dict[str, int]  # frame path -> ground-truth step
    noise: NoiseConfig

    @property
    def oracle_scores(self) -> dict[str, dict[str, float]]:
        assert self.session.oracle_scores is not None
        return self.session.oracle_scores


def _synthetic_recipe(n_steps: int, repeat_steps: int) -> tuple[Recipe, StepStatusMap]:
    if repeat_steps and n_steps < 2 * repeat_steps:
        raise ValueError(f"{repeat_steps} repeated steps need at least {2 * repeat_steps} steps")
    texts = [f"Take ingredient {i} and work it into the dish at station {i}" for i in range(1, n_steps + 1)]
    statuses: dict[int, tuple[ObjectStatus, ...]] = {
        i: (
            ObjectStatus(verb="processing", noun=f"ingredient {i}"),
            ObjectStatus(verb="finishing", noun=f"ingredient {i}"),
        )
        for i in range(1, n_steps + 1)
    }
    # The last `repeat_steps` steps restate the first ones (duplicate text and
    # statuses), modeling recipes that repeat an earlier action verbatim.
    for k in range(1, repeat_steps + 1):
        source, target = k, n_steps - repeat_steps + k
        texts[target - 1] = texts[source - 1]
        statuses[target] = statuses[source]
    ingredients = tuple(Ingredient(name=f"ingredient {i}") for i in range(1, n_steps + 1))
    recipe = Recipe(title="synthetic session", ingredients=ingredients, steps=tuple(texts))
    return recipe, StepStatusMap(statuses=statuses)


def generate_session(
    n_steps: int,
    frames_per_step: int,
    noise: NoiseConfig,
    rng: np.random.Generator,
    session_id: str = "s000",
) -> SyntheticSession:
    """Manifest, recipe, status map, and an oracle score table realizing the noise."""
    if n_steps < 1:
        raise ValueError("need at least one step")
    if frames_per_step < 5:
        raise ValueError("need at least 5 frames per step (one per segment)")

    recipe, statuses = _synthetic_recipe(n_steps, noise.repeat_steps)
    queries = list(dict.fromkeys(list(recipe.steps) + [p for i in range(1, n_steps + 1) for p in statuses.phrases(i)]))

    frames: list[FrameRef] = []
    clips: list[StepClip] = []
    truth: dict[str, int] = {}
    # Camera clutter persists for a whole step's clip, like a fixed wide angle.
    cluttered = {step: bool(rng.random() < noise.clutter) for step in range(1, n_steps + 1)}
    step_width = STEP_SECONDS / frames_per_step

    index = 0
    tables: dict[str, dict[str, float]] = {}
    status_peak = FLOOR + noise.status_signal * (TEXT_PEAK - FLOOR)
    for step in range(1, n_steps + 1):
        start = (step - 1) * STEP_SECONDS
        clips.append(StepClip(step=step, start=start, end=start + STEP_SECONDS))
        step_text = recipe.step_text(step)
        phrases = set(statuses.phrases(step))
        previous_phrases = set(statuses.phrases(step - 1)) if step > 1 else set()
        for k in range(frames_per_step):
            path = f"frames/{session_id}/f{index:05d}.png"
            frame = FrameRef(session_id=session_id, index=index, t=start + (k + 0.5) * step_width, path=path)
            frames.append(frame)
            truth[path] = step
            lingering = step > 1 and bool(rng.random() < noise.lingering)
            table: dict[str, float] = {}
            for query in queries:
                if query == step_text:
                    base = FLAT if cluttered[step] else TEXT_PEAK
                elif query in recipe.steps:
                    base = FLAT if cluttered[step] else FLOOR
                elif query in phrases:
                    base = status_peak
                elif lingering and query in previous_phrases:
                    base = status_peak
                else:
                    base = FLOOR
                value = base + (noise.jitter * float(rng.standard_normal()) if noise.jitter > 0 else 0.0)
                table[query] = value
            tables[path] = table
            index += 1

    session = AnnotatedSession(
        session_id=session_id,
        frames=frames,
        clips=clips,
        recipe=recipe,
        statuses=statuses,
        oracle_scores=tables,
    )
    return SyntheticSession(session=session, truth=truth, noise=noise)


def generate_corpus(
    n_sessions: int = DEFAULT_SESSIONS,
    n_steps: int = DEFAULT_STEPS,
    frames_per_step: int = DEFAULT_FRAMES_PER_STEP,
    noise: NoiseConfig = NoiseConfig(),
    seed: int = 0,
) -> list[SyntheticSession]:
    """Reproducible corpus: one derived substream per session."""
    sessions = []
    for i in range(n_sessions):
        session_id = f"s{i:03d}"
        rng = derive_rng(seed, "session", session_id)
        sessions.append(generate_session(n_steps, frames_per_step, noise, rng, session_id))
    return sessions


def write_corpus(sessions: Sequence[SyntheticSession], root: str | Path) -> Path:
    """Emit a corpus directory consumable by the evaluation harness unchanged."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    ids = []
    for synthetic in sessions:
        session = synthetic.session
        session_dir = root / session.session_id
        session_dir.mkdir(parents=True, exist_ok=True)
        schemas.write_document(
            session_dir / "manifest.json",
            schemas.manifest_document(session.session_id, session.frames, session.clips),
        )
        schemas.write_document(session_dir / "recipe.json", schemas.recipe_document(session.recipe))
        schemas.write_document(session_dir / "statuses.json", schemas.status_map_document(session.statuses))
        schemas.write_document(
            session_dir / "oracle_scores.json",
            schemas.oracle_scores_document(session.session_id, synthetic.oracle_scores),
        )
        ids.append(session.session_id)
    schemas.write_document(root / "corpus.json", schemas.corpus_document(ids))
    return root


@dataclass(frozen=True)
class SweepRow:
    noise: NoiseConfig
    baseline: float
    oscar: float

    @property
    def delta(self) -> float:
        return self.oscar - self.baseline


def sweep(
    grid: Sequence[NoiseConfig],
    trials: int = 20,
    n_steps: int = DEFAULT_STEPS,
    frames_per_step: int = DEFAULT_FRAMES_PER_STEP,
    seed: int = 0,
    config: ProtocolConfig = ProtocolConfig(),
    jobs: int = 1,
) -> list[SweepRow]:
    """Harness accuracy per noise cell; `trials` sessions generated per cell.

    Cells share derived substreams (common random numbers), so identical
    seeds give identical tables and rows sort by the noise configuration.
    """
    if not grid:
        raise ValueError("sweep needs a non-empty noise grid")
    rows = []
    for noise in sorted(set(grid), key=lambda n: n.sort_key()):
        corpus = generate_corpus(trials, n_steps, frames_per_step, noise, seed)
        run = evaluate(
            [s.session for s in corpus],
            oracle_provider_for,
            seed=seed,
            modes=("baseline", "oscar"),
            config=config,
            jobs=jobs,
        )
        rows.append(
            SweepRow(
                noise=noise,
                baseline=run.report.corpus_mean["baseline"],
                oscar=run.report.corpus_mean["oscar"],
            )
        )
    return rows
