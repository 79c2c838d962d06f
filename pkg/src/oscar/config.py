"""Run configuration with flags > config file > environment > defaults precedence."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields
from pathlib import Path

PROVIDER_URL_ENV = "OSCAR_PROVIDER_URL"


@dataclass(frozen=True)
class RunConfig:
    provider: str = "mock"  # mock | oracle | remote
    remote_url: str = "http://127.0.0.1:8791"
    model: str | None = None
    fusion_weight: float = 0.5
    debounce: int = 1
    blur_radius: int = 2
    seed: int = 0
    mode: str = "both"  # baseline | oscar | both
    jobs: int = 1
    status_reduce: str = "max"
    sd_kind: str = "population"
    cache_dir: str | None = None

    def __post_init__(self):
        if not 0.0 <= self.fusion_weight <= 1.0:
            raise ValueError("fusion weight must lie in [0, 1]")
        if self.debounce < 1:
            raise ValueError("debounce must be >= 1")
        if self.blur_radius < 0:
            raise ValueError("blur radius must be >= 0")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")
        if self.provider not in ("mock", "oracle", "remote"):
            raise ValueError(f"unknown provider {self.provider!r}")
        if self.mode not in ("baseline", "oscar", "both"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.status_reduce not in ("max", "mean"):
            raise ValueError(f"status aggregation must be max or mean, got {self.status_reduce!r}")
        if self.sd_kind not in ("population", "sample"):
            raise ValueError(f"sd kind must be population or sample, got {self.sd_kind!r}")

    @property
    def modes(self) -> tuple[str, ...]:
        return ("baseline", "oscar") if self.mode == "both" else (self.mode,)


def resolve_config(flags: dict, config_path: str | None = None, env: dict | None = None) -> RunConfig:
    """Merge layers: explicit flags win over file values, file over environment."""
    env = os.environ if env is None else env
    merged: dict = {}
    if env.get(PROVIDER_URL_ENV):
        merged["remote_url"] = env[PROVIDER_URL_ENV]
    if config_path:
        document = json.loads(Path(config_path).read_text(encoding="utf-8"))
        known = {f.name for f in fields(RunConfig)}
        unknown = set(document) - known - {"v"}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        merged.update({k: v for k, v in document.items() if k in known})
    merged.update({k: v for k, v in flags.items() if v is not None})
    return RunConfig(**merged)
