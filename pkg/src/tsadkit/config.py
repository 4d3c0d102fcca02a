"""Declarative generation config, loadable from a JSON file.

Every knob the generator draws from lives here so a config file plus a master
seed pins down an entire dataset.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path


def _default_mix() -> dict[str, float]:
    return {"spike": 1.0, "level": 1.0, "trend": 1.0, "frequency": 1.0}


@dataclass
class GenerationConfig:
    ts_length: int = 200
    anomaly_mix: dict[str, float] = field(default_factory=_default_mix)
    anomaly_free_prob: float = 0.2
    max_anomalies: int = 3
    min_gap: int = 5
    p_observable_period: float = 0.5
    amplitude_range: tuple[float, float] = (0.5, 2.0)
    trend_intensity_range: tuple[float, float] = (0.5, 2.0)
    # Noise sigma bands as fractions of the seasonal peak-to-peak.
    noise_low: tuple[float, float] = (0.005, 0.02)
    noise_high: tuple[float, float] = (0.05, 0.10)
    p_high_noise: float = 0.5
    rng_algorithm: str = "pcg64"

    def validate(self) -> None:
        if self.ts_length < 16:
            raise ValueError("ts_length must be >= 16")
        if not 0.0 <= self.anomaly_free_prob <= 1.0:
            raise ValueError("anomaly_free_prob must be in [0, 1]")
        if any(w < 0 for w in self.anomaly_mix.values()):
            raise ValueError("anomaly mix weights must be non-negative")
        for lo, hi in (self.amplitude_range, self.trend_intensity_range, self.noise_low, self.noise_high):
            if lo < 0 or hi < lo:
                raise ValueError("ranges must satisfy 0 <= lo <= hi")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GenerationConfig":
        cfg = cls()
        for key, value in d.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown generation config key {key!r}")
            current = getattr(cfg, key)
            if isinstance(current, tuple):
                value = tuple(value)
            setattr(cfg, key, value)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "GenerationConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
