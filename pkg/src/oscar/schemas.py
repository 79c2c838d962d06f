"""Versioned on-disk JSON schemas: writers, parsers, validators, round-trip checks."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Callable

from .alignment import FrameScores
from .errors import MalformedDocument
from .recipe import (
    Recipe,
    StepStatusMap,
    recipe_from_dict,
    recipe_to_dict,
    status_map_from_dict,
    status_map_to_dict,
)
from .sampling import FrameRef, StepClip
from .tracker import PredictionLogEntry, SessionState, replay

SCHEMA_VERSION = "1.0"
MODES = ("baseline", "oscar")


def dumps(document: dict) -> str:
    """Canonical serialization: stable field order, shortest float repr."""
    return json.dumps(document, indent=2, ensure_ascii=False) + "\n"


def loads(text: str) -> dict:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocument(f"document does not parse as JSON: {exc}")
    if not isinstance(document, dict):
        raise MalformedDocument("document root must be a JSON object")
    return document


def write_document(path: str | Path, document: dict) -> None:
    Path(path).write_text(dumps(document), encoding="utf-8")


def read_document(path: str | Path) -> dict:
    return loads(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# document builders / parsers


def recipe_document(recipe: Recipe) -> dict:
    return {"v": SCHEMA_VERSION, **recipe_to_dict(recipe)}


def parse_recipe(document: dict) -> Recipe:
    _require_valid(document, "recipe")
    return recipe_from_dict(document)


def status_map_document(status_map: StepStatusMap) -> dict:
    return {"v": SCHEMA_VERSION, **status_map_to_dict(status_map)}


def parse_status_map(document: dict) -> StepStatusMap:
    _require_valid(document, "status_map")
    return status_map_from_dict(document)


def manifest_document(session_id: str, frames: list[FrameRef], clips: list[StepClip]) -> dict:
    return {
        "v": SCHEMA_VERSION,
        "session_id": session_id,
        "frames": [{"index": f.index, "t": f.t, "path": f.path} for f in frames],
        "annotations": [{"step": c.step, "start": c.start, "end": c.end} for c in clips],
    }


def parse_manifest(document: dict) -> tuple[str, list[FrameRef], list[StepClip]]:
    _require_valid(document, "manifest")
    session_id = document["session_id"]
    frames = [
        FrameRef(session_id=session_id, index=f["index"], t=f["t"], path=f["path"])
        for f in document["frames"]
    ]
    clips = [StepClip(step=a["step"], start=a["start"], end=a["end"]) for a in document["annotations"]]
    return session_id, frames, clips


def history_log_document(session_id: str, mode: str, recipe: Recipe, entries: list[PredictionLogEntry]) -> dict:
    return {
        "v": SCHEMA_VERSION,
        "session_id": session_id,
        "mode": mode,
        "recipe": recipe_to_dict(recipe),
        "entries": [
            {
                "id": e.entry_id,
                "frames": list(e.frames),
                "scores": [float(s) for s in e.scores],
                "predicted_step": e.predicted_step,
                "predicted_text": e.predicted_text,
                "completed": list(e.completed),
                "missing": list(e.missing),
                "remaining": list(e.remaining),
            }
            for e in entries
        ],
    }


def parse_history_log(document: dict, debounce: int = 1) -> SessionState:
    """Rebuild the session state by replaying a serialized history log."""
    _require_valid(document, "history_log")
    recipe = recipe_from_dict(document["recipe"])
    mode = document["mode"]
    entries = [
        PredictionLogEntry(
            entry_id=e["id"],
            frames=tuple(e["frames"]),
            scores=tuple(float(s) for s in e["scores"]),
            predicted_step=e["predicted_step"],
            predicted_text=e["predicted_text"],
            completed=tuple(e["completed"]),
            missing=tuple(e["missing"]),
            remaining=tuple(e["remaining"]),
            mode=mode,
        )
        for e in document["entries"]
    ]
    return replay(recipe, entries, debounce=debounce)


def frame_scores_document(session_id: str, model_id: str, batch: list[FrameScores]) -> dict:
    return {
        "v": SCHEMA_VERSION,
        "session_id": session_id,
        "model": model_id,
        "n_steps": len(batch[0].step_scores) if batch else 0,
        "frames": [
            {
                "frame": fs.frame.path if fs.frame.path else f"{fs.frame.session_id}#{fs.frame.index}",
                "index": fs.frame.index,
                "t": fs.frame.t,
                "step_scores": [float(x) for x in fs.step_scores],
                "status_scores": [float(x) for x in fs.status_scores],
                "fused_scores": [float(x) for x in fs.fused_scores],
            }
            for fs in batch
        ],
    }


def oracle_scores_document(session_id: str, scores: dict[str, dict[str, float]]) -> dict:
    return {
        "v": SCHEMA_VERSION,
        "session_id": session_id,
        "scores": {
            frame: {query: float(value) for query, value in sorted(table.items())}
            for frame, table in sorted(scores.items())
        },
    }


def parse_oracle_scores(document: dict) -> dict[str, dict[str, float]]:
    _require_valid(document, "oracle_scores")
    return {frame: dict(table) for frame, table in document["scores"].items()}


def corpus_document(session_ids: list[str]) -> dict:
    return {"v": SCHEMA_VERSION, "sessions": list(session_ids)}


# ---------------------------------------------------------------------------
# validation


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def _is_index(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _check_version(doc: dict, out: list[str]) -> None:
    if "v" not in doc:
        out.append("v: missing schema version")
    elif doc["v"] != SCHEMA_VERSION:
        out.append(f"v: unknown schema version {doc['v']!r} (expected {SCHEMA_VERSION!r})")


def _validate_recipe(doc: dict) -> list[str]:
    out: list[str] = []
    _check_version(doc, out)
    if not isinstance(doc.get("title"), str):
        out.append("title: must be a string")
    steps = doc.get("steps")
    if not isinstance(steps, list) or not steps:
        out.append("steps: must be a non-empty list")
    else:
        for i, step in enumerate(steps):
            if not isinstance(step, str) or not step.strip():
                out.append(f"steps[{i}]: must be a non-empty string")
    ingredients = doc.get("ingredients", [])
    if not isinstance(ingredients, list):
        out.append("ingredients: must be a list")
    else:
        for i, ing in enumerate(ingredients):
            if not isinstance(ing, dict) or not isinstance(ing.get("name"), str) or not ing["name"].strip():
                out.append(f"ingredients[{i}].name: must be a non-empty string")
            elif "quantity" in ing and not isinstance(ing["quantity"], str):
                out.append(f"ingredients[{i}].quantity: must be a string when present")
    return out


def _validate_status_map(doc: dict) -> list[str]:
    out: list[str] = []
    _check_version(doc, out)
    for key, pairs in doc.items():
        if key == "v":
            continue
        if not key.isdigit() or int(key) < 1:
            out.append(f"{key}: keys must be 1-indexed step numbers")
            continue
        if not isinstance(pairs, list):
            out.append(f"{key}: must be a list of verb/noun pairs")
            continue
        for i, pair in enumerate(pairs):
            if not isinstance(pair, dict):
                out.append(f"{key}[{i}]: must be an object")
                continue
            verb = pair.get("verb")
            noun = pair.get("noun")
            if not isinstance(verb, str) or " " in verb or not verb.endswith("ing"):
                out.append(f"{key}[{i}].verb: must be a single gerund token")
            if not isinstance(noun, str) or not noun.strip():
                out.append(f"{key}[{i}].noun: must be a non-empty string")
    return out


def _validate_manifest(doc: dict) -> list[str]:
    out: list[str] = []
    _check_version(doc, out)
    if not isinstance(doc.get("session_id"), str) or not doc["session_id"]:
        out.append("session_id: must be a non-empty string")
    frames = doc.get("frames")
    if not isinstance(frames, list) or not frames:
        out.append("frames: must be a non-empty list")
        frames = []
    ordered: list[tuple[int, float]] = []
    for i, frame in enumerate(frames):
        if not isinstance(frame, dict):
            out.append(f"frames[{i}]: must be an object")
            continue
        if not _is_index(frame.get("index")) or frame["index"] < 0:
            out.append(f"frames[{i}].index: must be an integer >= 0")
        if not _is_number(frame.get("t")) or frame["t"] < 0:
            out.append(f"frames[{i}].t: must be a number >= 0")
        if not isinstance(frame.get("path"), str):
            out.append(f"frames[{i}].path: must be a string")
        if _is_index(frame.get("index")) and _is_number(frame.get("t")):
            ordered.append((frame["index"], frame["t"]))
    ordered.sort()
    for (i0, t0), (i1, t1) in zip(ordered, ordered[1:]):
        if t1 < t0:
            out.append(f"frames: timestamp decreases from index {i0} to {i1}")
            break
    annotations = doc.get("annotations")
    if not isinstance(annotations, list):
        out.append("annotations: must be a list")
        annotations = []
    for i, ann in enumerate(annotations):
        if not isinstance(ann, dict):
            out.append(f"annotations[{i}]: must be an object")
            continue
        if not _is_index(ann.get("step")) or ann["step"] < 1:
            out.append(f"annotations[{i}].step: must be an integer >= 1 (1-indexed)")
        if not (_is_number(ann.get("start")) and _is_number(ann.get("end")) and ann["start"] < ann["end"]):
            out.append(f"annotations[{i}]: needs numeric start < end")
    return out


def _validate_step_sets(prefix: str, entry: dict, n_steps: int, out: list[str]) -> None:
    sets = {}
    for name in ("completed", "missing", "remaining"):
        values = entry.get(name)
        if not isinstance(values, list) or not all(_is_index(v) and 1 <= v <= n_steps for v in values):
            out.append(f"{prefix}.{name}: must be a list of step indices in 1..{n_steps}")
            return
        sets[name] = set(values)
    if (sets["completed"] & sets["missing"]) or (sets["completed"] & sets["remaining"]) or (
        sets["missing"] & sets["remaining"]
    ):
        out.append(f"{prefix}: completed/missing/remaining must be pairwise disjoint")


def _validate_history_log(doc: dict) -> list[str]:
    out: list[str] = []
    _check_version(doc, out)
    if not isinstance(doc.get("session_id"), str) or not doc["session_id"]:
        out.append("session_id: must be a non-empty string")
    if doc.get("mode") not in MODES:
        out.append(f"mode: must be one of {MODES}")
    recipe = doc.get("recipe")
    n_steps = 0
    if not isinstance(recipe, dict):
        out.append("recipe: must be a recipe object")
    else:
        recipe_doc = {"v": SCHEMA_VERSION, **recipe}
        out.extend(f"recipe.{v}" for v in _validate_recipe(recipe_doc))
        if isinstance(recipe.get("steps"), list):
            n_steps = len(recipe["steps"])
    entries = doc.get("entries")
    if not isinstance(entries, list):
        out.append("entries: must be a list")
        entries = []
    for i, entry in enumerate(entries):
        prefix = f"entries[{i}]"
        if not isinstance(entry, dict):
            out.append(f"{prefix}: must be an object")
            continue
        if not _is_index(entry.get("id")) or entry["id"] < 1:
            out.append(f"{prefix}.id: must be an integer >= 1")
        if not isinstance(entry.get("frames"), list) or not all(isinstance(f, str) for f in entry.get("frames", [])):
            out.append(f"{prefix}.frames: must be a list of strings")
        scores = entry.get("scores")
        if not isinstance(scores, list) or not all(_is_number(s) for s in scores):
            out.append(f"{prefix}.scores: must be a list of finite numbers")
        elif n_steps and len(scores) != n_steps:
            out.append(f"{prefix}.scores: length {len(scores)} != number of steps {n_steps}")
        predicted = entry.get("predicted_step")
        if not _is_index(predicted) or predicted < 1 or (n_steps and predicted > n_steps):
            out.append(f"{prefix}.predicted_step: must be a step index in 1..{n_steps or 'N'} (1-indexed)")
        if not isinstance(entry.get("predicted_text"), str):
            out.append(f"{prefix}.predicted_text: must be a string")
        if n_steps:
            _validate_step_sets(prefix, entry, n_steps, out)
    return out


def _validate_frame_scores(doc: dict) -> list[str]:
    out: list[str] = []
    _check_version(doc, out)
    if not isinstance(doc.get("session_id"), str):
        out.append("session_id: must be a string")
    if not isinstance(doc.get("model"), str):
        out.append("model: must be a string")
    n_steps = doc.get("n_steps")
    if not _is_index(n_steps) or n_steps < 0:
        out.append("n_steps: must be an integer >= 0")
        n_steps = 0
    frames = doc.get("frames")
    if not isinstance(frames, list):
        out.append("frames: must be a list")
        frames = []
    for i, fs in enumerate(frames):
        prefix = f"frames[{i}]"
        if not isinstance(fs, dict):
            out.append(f"{prefix}: must be an object")
            continue
        for name in ("step_scores", "status_scores", "fused_scores"):
            vec = fs.get(name)
            if not isinstance(vec, list) or not all(_is_number(x) for x in vec):
                out.append(f"{prefix}.{name}: must be a list of finite numbers")
            elif n_steps and len(vec) != n_steps:
                out.append(f"{prefix}.{name}: length {len(vec)} != n_steps {n_steps}")
    return out


def _validate_report(doc: dict) -> list[str]:
    out: list[str] = []
    _check_version(doc, out)
    if not isinstance(doc.get("model"), str):
        out.append("model: must be a string")
    modes = doc.get("modes")
    if not isinstance(modes, list) or not modes or not all(m in MODES for m in modes):
        out.append(f"modes: must be a non-empty subset of {MODES}")
        modes = []
    if doc.get("sd_kind") not in ("population", "sample"):
        out.append("sd_kind: must be 'population' or 'sample'")
    videos = doc.get("videos")
    if not isinstance(videos, list) or not videos:
        out.append("videos: must be a non-empty list")
        videos = []
    for i, video in enumerate(videos):
        prefix = f"videos[{i}]"
        if not isinstance(video, dict) or not isinstance(video.get("video"), str):
            out.append(f"{prefix}.video: must be a string")
            continue
        for mode in modes:
            acc = video.get(mode)
            if not _is_number(acc) or not 0.0 <= acc <= 100.0:
                out.append(f"{prefix}.{mode}: accuracy must lie in [0, 100]")
    corpus = doc.get("corpus")
    if not isinstance(corpus, dict):
        out.append("corpus: must be an object")
    else:
        for mode in modes:
            stats = corpus.get(mode)
            if not isinstance(stats, dict) or not _is_number(stats.get("mean")) or not _is_number(stats.get("sd")):
                out.append(f"corpus.{mode}: needs numeric mean and sd")
            elif not 0.0 <= stats["mean"] <= 100.0:
                out.append(f"corpus.{mode}.mean: must lie in [0, 100]")
        if set(modes) == set(MODES):
            delta = corpus.get("delta")
            if not _is_number(delta):
                out.append("corpus.delta: required when both modes are present")
            elif isinstance(corpus.get("oscar"), dict) and isinstance(corpus.get("baseline"), dict):
                oscar_mean = corpus["oscar"].get("mean")
                baseline_mean = corpus["baseline"].get("mean")
                if _is_number(oscar_mean) and _is_number(baseline_mean):
                    if abs(delta - (oscar_mean - baseline_mean)) > 1e-9:
                        out.append("corpus.delta: must equal oscar mean - baseline mean exactly")
    return out


def _validate_oracle_scores(doc: dict) -> list[str]:
    out: list[str] = []
    _check_version(doc, out)
    if not isinstance(doc.get("session_id"), str):
        out.append("session_id: must be a string")
    scores = doc.get("scores")
    if not isinstance(scores, dict):
        out.append("scores: must be an object")
        return out
    for frame, table in scores.items():
        if not isinstance(table, dict):
            out.append(f"scores[{frame!r}]: must be an object")
            continue
        for query, value in table.items():
            if not _is_number(value):
                out.append(f"scores[{frame!r}][{query!r}]: must be a finite number")
    return out


def _validate_corpus(doc: dict) -> list[str]:
    out: list[str] = []
    _check_version(doc, out)
    sessions = doc.get("sessions")
    if not isinstance(sessions, list) or not sessions or not all(isinstance(s, str) for s in sessions):
        out.append("sessions: must be a non-empty list of session ids")
    return out


def _validate_query_answer(doc: dict) -> list[str]:
    out: list[str] = []
    _check_version(doc, out)
    if not isinstance(doc.get("query"), str):
        out.append("query: must be a string")
    if "answer" not in doc:
        out.append("answer: missing")
    return out


_VALIDATORS: dict[str, Callable[[dict], list[str]]] = {
    "recipe": _validate_recipe,
    "status_map": _validate_status_map,
    "manifest": _validate_manifest,
    "history_log": _validate_history_log,
    "frame_scores": _validate_frame_scores,
    "report": _validate_report,
    "oracle_scores": _validate_oracle_scores,
    "corpus": _validate_corpus,
    "query_answer": _validate_query_answer,
}

SCHEMA_NAMES = tuple(sorted(_VALIDATORS))


def validate(document: dict | str, schema: str) -> list[str]:
    """Return the exhaustive violation list (empty when the document is valid)."""
    if schema not in _VALIDATORS:
        raise ValueError(f"unknown schema {schema!r}; known: {SCHEMA_NAMES}")
    if isinstance(document, str):
        document = loads(document)
    return _VALIDATORS[schema](document)


def _require_valid(document: dict, schema: str) -> None:
    violations = validate(document, schema)
    if violations:
        raise MalformedDocument(f"invalid {schema} document: {violations[0]}", violations)


# ---------------------------------------------------------------------------
# round-trip


def roundtrip(value):
    """Serialize, parse, compare; returns the reparsed value or raises on drift."""
    import numpy as np

    if isinstance(value, Recipe):
        parsed = parse_recipe(loads(dumps(recipe_document(value))))
        same = parsed == value
    elif isinstance(value, StepStatusMap):
        parsed = parse_status_map(loads(dumps(status_map_document(value))))
        same = parsed == value
    elif isinstance(value, SessionState):
        mode = value.history[0].mode if value.history else "oscar"
        doc = history_log_document(value.recipe.title or "session", mode, value.recipe, value.history)
        parsed = parse_history_log(loads(dumps(doc)), debounce=value.debounce)
        same = parsed == value
    elif isinstance(value, FrameScores):
        doc = loads(dumps(frame_scores_document(value.frame.session_id, "roundtrip", [value])))
        entry = doc["frames"][0]
        parsed = FrameScores(
            frame=value.frame,
            step_scores=np.asarray(entry["step_scores"]),
            status_scores=np.asarray(entry["status_scores"]),
            fused_scores=np.asarray(entry["fused_scores"]),
        )
        same = (
            np.array_equal(parsed.step_scores, value.step_scores)
            and np.array_equal(parsed.status_scores, value.status_scores)
            and np.array_equal(parsed.fused_scores, value.fused_scores)
        )
    else:
        raise TypeError(f"no round-trip rule for {type(value).__name__}")
    if not same:
        raise MalformedDocument(f"{type(value).__name__} did not survive a serialization round-trip")
    return parsed
