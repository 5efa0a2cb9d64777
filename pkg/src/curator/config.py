"""Engine configuration, loadable from a JSON file."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import BadConfig
from .prob import DEFAULT_EPS, default_d_max


@dataclass
class EngineConfig:
    eps: float = DEFAULT_EPS
    d_max: float | None = None  # defaults to ln(1/eps)
    alpha: float = 0.5
    seed: int = 0
    class_mask: list[int] | None = None
    n_classes: int | None = None  # overrides the class count inferred from data
    per_frame_max: int = 1

    @property
    def distance_cap(self) -> float:
        return self.d_max if self.d_max is not None else default_d_max(self.eps)

    def validate(self, n_classes: int | None = None) -> "EngineConfig":
        C = n_classes or self.n_classes
        if not (isinstance(self.eps, (int, float)) and self.eps > 0):
            raise BadConfig(f"eps must be > 0, got {self.eps!r}")
        if C is not None and not self.eps < 1.0 / C:
            raise BadConfig(f"eps must be < 1/C = {1.0 / C:g}, got {self.eps!r}")
        if self.d_max is not None and not (
            isinstance(self.d_max, (int, float)) and math.isfinite(self.d_max) and self.d_max > 0
        ):
            raise BadConfig(f"d_max must be a positive number, got {self.d_max!r}")
        if not (isinstance(self.alpha, (int, float)) and 0.0 <= self.alpha <= 1.0):
            raise BadConfig(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool):
            raise BadConfig(f"seed must be an integer, got {self.seed!r}")
        if self.n_classes is not None and (not isinstance(self.n_classes, int) or self.n_classes < 2):
            raise BadConfig(f"n_classes must be an integer >= 2, got {self.n_classes!r}")
        if self.class_mask is not None and not all(isinstance(c, int) for c in self.class_mask):
            raise BadConfig("class_mask must be a list of class indices")
        if not isinstance(self.per_frame_max, int) or self.per_frame_max < 1:
            raise BadConfig(f"per_frame_max must be an integer >= 1, got {self.per_frame_max!r}")
        return self


def load_config(path: str | Path | None) -> EngineConfig:
    if path is None:
        return EngineConfig().validate()
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise BadConfig(f"{path}: invalid JSON: {e.msg}", e.lineno) from None
    if not isinstance(raw, dict):
        raise BadConfig(f"{path}: config must be a JSON object")
    known = {f.name for f in fields(EngineConfig)}
    extra = sorted(set(raw) - known)
    if extra:
        raise BadConfig(f"{path}: unknown config key(s): {', '.join(extra)}")
    return EngineConfig(**raw).validate()
