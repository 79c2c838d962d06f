"""Embedding providers: deterministic mock, simulator oracle, remote HTTP client, file cache."""

from __future__ import annotations

import base64
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ProviderUnavailable
from .sampling import FrameRef


@dataclass(eq=False)
class EmbeddingVector:
    values: np.ndarray
    model_id: str

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("embedding must be a 1-D vector")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("embedding contains non-finite values")

    @property
    def dimension(self) -> int:
        return int(self.values.shape[0])


class EmbeddingProvider:
    """Deterministic text/image embedder; batch order is preserved."""

    model_id: str
    dimension: int

    def embed_text(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        raise NotImplementedError

    def embed_image(self, frame: FrameRef) -> EmbeddingVector:
        raise NotImplementedError

    def score_texts(self, frame: FrameRef, texts: Sequence[str]) -> list[float] | None:
        """Optional raw pairwise-score hook; None means use cosine on embeddings."""
        return None


def _frame_key(frame: FrameRef) -> str:
    return frame.path if frame.path else f"{frame.session_id}#{frame.index}"


def _hash_unit_vector(seed_key: str, dimension: int) -> np.ndarray:
    digest = hashlib.sha256(seed_key.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:16], "little"))
    vec = rng.standard_normal(dimension)
    return vec / np.linalg.norm(vec)


class MockProvider(EmbeddingProvider):
    """Embeds any string to a unit vector seeded by its hash; no weights needed."""

    def __init__(self, dimension: int = 64, model_id: str = "mock-64"):
        self.dimension = dimension
        self.model_id = model_id

    def _vector(self, key: str) -> EmbeddingVector:
        return EmbeddingVector(_hash_unit_vector(f"{self.model_id}|{key}", self.dimension), self.model_id)

    def embed_text(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        return [self._vector(f"text|{t}") for t in texts]

    def embed_image(self, frame: FrameRef) -> EmbeddingVector:
        return self._vector(f"image|{_frame_key(frame)}")


class OracleProvider(EmbeddingProvider):
    """Simulator-controlled scores: (frame, query) -> score, served via the raw hook.

    The score table is constructed so the designated ground-truth query is
    nearest; noise parameters shape the table at generation time.
    """

    def __init__(self, scores: dict[str, dict[str, float]], model_id: str = "oracle", dimension: int = 64):
        self.scores = scores
        self.model_id = model_id
        self.dimension = dimension

    def score_texts(self, frame: FrameRef, texts: Sequence[str]) -> list[float]:
        key = _frame_key(frame)
        table = self.scores.get(key)
        if table is None:
            raise ProviderUnavailable(f"oracle has no scores for frame {key}")
        try:
            return [float(table[t]) for t in texts]
        except KeyError as exc:
            raise ProviderUnavailable(f"oracle has no score for query {exc} on frame {key}")

    def _vector(self, key: str) -> EmbeddingVector:
        return EmbeddingVector(_hash_unit_vector(f"{self.model_id}|{key}", self.dimension), self.model_id)

    def embed_text(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        return [self._vector(f"text|{t}") for t in texts]

    def embed_image(self, frame: FrameRef) -> EmbeddingVector:
        return self._vector(f"image|{_frame_key(frame)}")


class RemoteProvider(EmbeddingProvider):
    """Client for the HTTP embedding wire protocol (see embed-service)."""

    def __init__(self, base_url: str, model_id: str, dimension: int | None = None, timeout: float = 30.0):
        import requests

        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self._dimension = dimension
        self.timeout = timeout
        self._session = requests.Session()

    @property
    def dimension(self) -> int:
        if self._dimension is None:
            raise ProviderUnavailable("remote dimension unknown before the first embedding call")
        return self._dimension

    def _post(self, route: str, payload: dict) -> dict:
        import requests

        try:
            response = self._session.post(f"{self.base_url}{route}", json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise ProviderUnavailable(f"embedding service unreachable at {self.base_url}: {exc}")
        if response.status_code != 200:
            detail = ""
            try:
                detail = response.json().get("error", "")
            except ValueError:
                pass
            raise ProviderUnavailable(f"{route} returned HTTP {response.status_code}: {detail}")
        return response.json()

    def _vectors_from(self, body: dict, expected: int) -> list[EmbeddingVector]:
        embeddings = body.get("embeddings")
        if not isinstance(embeddings, list) or len(embeddings) != expected:
            raise ProviderUnavailable(f"service returned {len(embeddings or [])} embeddings, wanted {expected}")
        dim = int(body.get("dim", 0))
        if self._dimension is None:
            self._dimension = dim
        elif self._dimension != dim:
            raise ProviderUnavailable(f"service dim changed from {self._dimension} to {dim}")
        return [EmbeddingVector(np.asarray(vec, dtype=np.float64), self.model_id) for vec in embeddings]

    def embed_text(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        body = self._post("/v1/embed/text", {"model": self.model_id, "texts": list(texts)})
        return self._vectors_from(body, len(texts))

    def embed_image(self, frame: FrameRef) -> EmbeddingVector:
        try:
            raw = Path(frame.path).read_bytes()
        except OSError as exc:
            raise ProviderUnavailable(f"cannot read frame image {frame.path}: {exc}")
        payload = {"model": self.model_id, "image_b64": base64.b64encode(raw).decode("ascii")}
        body = self._post("/v1/embed/image", payload)
        return self._vectors_from(body, 1)[0]

    def health(self) -> dict:
        import requests

        try:
            response = self._session.get(f"{self.base_url}/v1/health", timeout=self.timeout)
        except requests.RequestException as exc:
            raise ProviderUnavailable(f"health check failed: {exc}")
        if response.status_code != 200:
            raise ProviderUnavailable(f"service not ready: HTTP {response.status_code}")
        return response.json()


class EmbeddingCache:
    """File-backed vectors keyed by (model id, content hash); last-wins writes."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, model_id: str, kind: str, content_key: str) -> Path:
        digest = hashlib.sha256(f"{model_id}|{kind}|{content_key}".encode("utf-8")).hexdigest()
        return self.root / digest[:2] / f"{digest}.json"

    def get(self, model_id: str, kind: str, content_key: str) -> EmbeddingVector | None:
        path = self._path(model_id, kind, content_key)
        try:
            payload = json.loads(path.read_text("utf-8"))
        except (OSError, ValueError):
            return None
        return EmbeddingVector(np.asarray(payload["values"], dtype=np.float64), payload["model"])

    def put(self, model_id: str, kind: str, content_key: str, vector: EmbeddingVector) -> None:
        path = self._path(model_id, kind, content_key)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = {"model": vector.model_id, "dim": vector.dimension, "values": vector.values.tolist()}
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            json.dump(payload, handle)
        os.replace(tmp, path)


@dataclass
class CachedProvider(EmbeddingProvider):
    """Wraps a provider with an EmbeddingCache; identical keys are benign races."""

    inner: EmbeddingProvider
    cache: EmbeddingCache
    _image_keys: dict[str, str] = field(default_factory=dict)

    @property
    def model_id(self) -> str:
        return self.inner.model_id

    @property
    def dimension(self) -> int:
        return self.inner.dimension

    def _text_key(self, text: str) -> str:
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def _image_key(self, frame: FrameRef) -> str:
        key = _frame_key(frame)
        if key not in self._image_keys:
            try:
                raw = Path(frame.path).read_bytes()
                self._image_keys[key] = hashlib.sha256(raw).hexdigest()
            except OSError:
                self._image_keys[key] = hashlib.sha256(key.encode("utf-8")).hexdigest()
        return self._image_keys[key]

    def embed_text(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        out: list[EmbeddingVector | None] = []
        missing: list[str] = []
        for text in texts:
            cached = self.cache.get(self.model_id, "text", self._text_key(text))
            out.append(cached)
            if cached is None:
                missing.append(text)
        if missing:
            fresh = iter(self.inner.embed_text(missing))
            for i, text in enumerate(texts):
                if out[i] is None:
                    vector = next(fresh)
                    self.cache.put(self.model_id, "text", self._text_key(text), vector)
                    out[i] = vector
        return [v for v in out if v is not None]

    def embed_image(self, frame: FrameRef) -> EmbeddingVector:
        key = self._image_key(frame)
        cached = self.cache.get(self.model_id, "image", key)
        if cached is not None:
            return cached
        vector = self.inner.embed_image(frame)
        self.cache.put(self.model_id, "image", key, vector)
        return vector

    def score_texts(self, frame: FrameRef, texts: Sequence[str]) -> list[float] | None:
        return self.inner.score_texts(frame, texts)
