"""Frame sampling: 5-segment splits, seeded random picks, blur-aware substitution."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateImage, EmptyWindow

GrayLoader = Callable[["FrameRef"], "np.ndarray | None"]


@dataclass(frozen=True)
class FrameRef:
    session_id: str
    index: int
    t: float
    path: str

    def __post_init__(self):
        if self.index < 0 or self.t < 0:
            raise ValueError("frame index and timestamp must be non-negative")


@dataclass(frozen=True)
class SegmentWindow:
    start: float
    end: float

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError("segment window needs start < end")

    def contains(self, t: float) -> bool:
        return self.start <= t < self.end


@dataclass(frozen=True)
class StepClip:
    step: int
    start: float
    end: float

    def __post_init__(self):
        if not self.start < self.end:
            raise ValueError("step clip needs start < end")


def derive_rng(seed: int, *parts: object) -> np.random.Generator:
    """Per-(video, step, trial) substream: hash of the master seed and parts.

    SHA-256 keyed so substreams are independent and stable across platforms.
    """
    key = "\x1f".join(str(p) for p in (seed, *parts))
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:16], "little"))


def segment_step(clip: StepClip, n: int) -> list[SegmentWindow]:
    """Split the clip into n contiguous equal windows covering [start, end)."""
    if n < 1:
        raise ValueError("segment count must be >= 1")
    span = clip.end - clip.start
    bounds = [clip.start + span * i / n for i in range(n + 1)]
    bounds[-1] = clip.end
    return [SegmentWindow(start=bounds[i], end=bounds[i + 1]) for i in range(n)]


def sample_frame(window: SegmentWindow, frames: list[FrameRef], rng: np.random.Generator) -> FrameRef:
    """Uniform random pick among the frames whose timestamp falls in the window."""
    candidates = [f for f in frames if window.contains(f.t)]
    if not candidates:
        raise EmptyWindow(f"no frames in [{window.start}, {window.end})")
    return candidates[int(rng.integers(len(candidates)))]


def sharpness_score(image: np.ndarray) -> float:
    """Variance of the discrete Laplacian response; higher means sharper."""
    raster = np.asarray(image, dtype=np.float64)
    if raster.ndim != 2 or raster.shape[0] < 3 or raster.shape[1] < 3:
        raise DegenerateImage(f"need at least a 3x3 grayscale raster, got {raster.shape}")
    lap = (
        raster[:-2, 1:-1]
        + raster[2:, 1:-1]
        + raster[1:-1, :-2]
        + raster[1:-1, 2:]
        - 4.0 * raster[1:-1, 1:-1]
    )
    return float(lap.var())


def load_grayscale(frame: FrameRef) -> np.ndarray | None:
    """Decode the frame's image file to a grayscale raster; None if unavailable."""
    from PIL import Image

    try:
        with Image.open(frame.path) as img:
            return np.asarray(img.convert("L"), dtype=np.float64)
    except (FileNotFoundError, OSError, ValueError):
        return None


def select_sharpest_adjacent(
    selected: FrameRef,
    frames: list[FrameRef],
    k: int,
    load: GrayLoader = load_grayscale,
) -> FrameRef:
    """Among frames within +/-k indices of the pick, return the sharpest.

    Ties break to the lowest frame index.  Frames whose image cannot be
    decoded are skipped; if nothing decodes, the original pick stands.
    """
    if k < 0:
        raise ValueError("window radius must be >= 0")
    if k == 0:
        return selected
    lo, hi = selected.index - k, selected.index + k
    best: FrameRef | None = None
    best_score = -np.inf
    for frame in sorted(frames, key=lambda f: f.index):
        if not lo <= frame.index <= hi:
            continue
        raster = load(frame)
        if raster is None:
            continue
        score = sharpness_score(raster)
        if score > best_score:
            best, best_score = frame, score
    return best if best is not None else selected
