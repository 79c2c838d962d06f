"""Time-causal session state: admissibility, prediction log, progress snapshots."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import UnknownStep
from .recipe import Recipe

Mode = Literal["baseline", "oscar"]


@dataclass(frozen=True)
class PredictionLogEntry:
    entry_id: int
    frames: tuple[str, ...]
    scores: tuple[float, ...]
    predicted_step: int
    predicted_text: str
    completed: tuple[int, ...]
    missing: tuple[int, ...]
    remaining: tuple[int, ...]
    mode: Mode


@dataclass(frozen=True)
class ProgressSnapshot:
    current: int | None
    completed: frozenset[int]
    remaining: frozenset[int]
    missing: frozenset[int]


@dataclass
class SessionState:
    """Single-writer state machine for one cooking session.

    `completed` keeps insertion order; `current` is the highest completed step
    (the frontier) and never moves backward.  With debounce > 1, a step only
    completes after that many consecutive identical predictions.
    """

    recipe: Recipe
    debounce: int = 1
    current: int | None = None
    completed: list[int] = field(default_factory=list)
    history: list[PredictionLogEntry] = field(default_factory=list)
    streak_step: int | None = None
    streak_len: int = 0

    def __post_init__(self):
        if self.debounce < 1:
            raise ValueError("debounce must be >= 1")

    @property
    def n_steps(self) -> int:
        return self.recipe.n_steps


def admissible_steps(state: SessionState) -> set[int]:
    """All steps except completed ones strictly below the frontier.

    The current step stays admissible (a cook can dwell on it), and earlier
    steps that were never predicted remain open as gap-fills.
    """
    steps = set(range(1, state.n_steps + 1))
    if state.current is None:
        return steps
    return steps - {i for i in state.completed if i < state.current}


def _missing(completed: Sequence[int], current: int | None) -> tuple[int, ...]:
    if current is None:
        return ()
    done = set(completed)
    return tuple(i for i in range(1, current) if i not in done)


def _remaining(n_steps: int, completed: Sequence[int], current: int | None) -> tuple[int, ...]:
    done = set(completed)
    start = 1 if current is None else current + 1
    return tuple(i for i in range(start, n_steps + 1) if i not in done)


def _preview_update(state: SessionState, predicted: int) -> tuple[list[int], int | None]:
    """Completed/current as they will stand once `predicted` is applied."""
    streak = state.streak_len + 1 if predicted == state.streak_step else 1
    completed = list(state.completed)
    current = state.current
    if streak >= state.debounce:
        if predicted not in completed:
            completed.append(predicted)
        if current is None or predicted >= current:
            current = predicted
    return completed, current


def predict(
    scores: Sequence[float],
    state: SessionState,
    mode: Mode,
    frames: Sequence[str] = (),
) -> PredictionLogEntry:
    """Pick a step from the score vector and append a log entry.

    OSCAR mode takes the argmax over the admissible set; baseline mode is the
    plain argmax.  Ties break to the lowest index.  The entry's progress sets
    reflect the state after this prediction is applied (see update_state).
    """
    vector = np.asarray(scores, dtype=np.float64)
    if vector.shape != (state.n_steps,):
        raise ValueError(f"expected {state.n_steps} scores, got shape {vector.shape}")
    if not np.all(np.isfinite(vector)):
        raise ValueError("scores must be finite")

    if mode == "oscar":
        allowed = admissible_steps(state)
        masked = np.where([i + 1 in allowed for i in range(state.n_steps)], vector, -np.inf)
        predicted = int(np.argmax(masked)) + 1
    else:
        predicted = int(np.argmax(vector)) + 1

    completed, current = _preview_update(state, predicted)
    entry = PredictionLogEntry(
        entry_id=len(state.history) + 1,
        frames=tuple(frames),
        scores=tuple(float(v) for v in vector),
        predicted_step=predicted,
        predicted_text=state.recipe.step_text(predicted),
        completed=tuple(completed),
        missing=_missing(completed, current),
        remaining=_remaining(state.n_steps, completed, current),
        mode=mode,
    )
    state.history.append(entry)
    return entry


def update_state(state: SessionState, entry: PredictionLogEntry) -> SessionState:
    """Apply an entry: completion, frontier advance, gap bookkeeping.

    Gap-filling a missing earlier step does not move the frontier backward.
    """
    predicted = entry.predicted_step
    if predicted == state.streak_step:
        state.streak_len += 1
    else:
        state.streak_step = predicted
        state.streak_len = 1
    if state.streak_len >= state.debounce:
        if predicted not in state.completed:
            state.completed.append(predicted)
        if state.current is None or predicted >= state.current:
            state.current = predicted
    return state


def progress_snapshot(state: SessionState) -> ProgressSnapshot:
    return ProgressSnapshot(
        current=state.current,
        completed=frozenset(state.completed),
        remaining=frozenset(_remaining(state.n_steps, state.completed, state.current)),
        missing=frozenset(_missing(state.completed, state.current)),
    )


def query(state: SessionState, q: str):
    """Answer a structured query from the progress snapshot.

    Supported: current | completed | remaining | missing | is_done:<step>.
    """
    snapshot = progress_snapshot(state)
    if q == "current":
        return snapshot.current
    if q == "completed":
        return sorted(snapshot.completed)
    if q == "remaining":
        return sorted(snapshot.remaining)
    if q == "missing":
        return sorted(snapshot.missing)
    if q.startswith("is_done:"):
        try:
            step = int(q.split(":", 1)[1])
        except ValueError:
            raise UnknownStep(f"malformed step index in query {q!r}")
        if not 1 <= step <= state.n_steps:
            raise UnknownStep(f"step {step} outside 1..{state.n_steps}")
        return step in snapshot.completed
    raise ValueError(f"unknown query {q!r}")


def replay(recipe: Recipe, entries: Sequence[PredictionLogEntry], debounce: int = 1) -> SessionState:
    """Rebuild a session state by re-applying a serialized history."""
    state = SessionState(recipe=recipe, debounce=debounce)
    for entry in entries:
        state.history.append(entry)
        update_state(state, entry)
    return state
