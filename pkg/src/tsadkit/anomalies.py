"""Injection of the four anomaly families with exact ground-truth intervals.

Injectors are pure: they copy the input series, perturb only the labeled
region (level/trend shifts persist to the end of the window by design), and
refuse overlapping intervals rather than merging them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .generate import (
    Interval,
    LabeledSeries,
    SeriesAttributes,
    SeasonalSpec,
    TrendSpec,
    _seasonal_values,
    gen_trend,
)

ANOMALY_KINDS = ("spike", "level", "trend", "frequency")

SPIKE_SUBTYPES = (
    "upward",
    "downward",
    "continuous-upward",
    "continuous-downward",
    "upward-convex",
    "downward-convex",
    "rapid-rise-slow-decline",
    "slow-rise-rapid-decline",
)
LEVEL_SUBTYPES = (
    "sudden-increase",
    "sudden-decrease",
    "increase-after-downward-spike",
    "decrease-after-upward-spike",
    "increase-after-upward-spike",
)
TREND_SUBTYPES = ("new-trend-segment",)
FREQUENCY_SUBTYPES = ("low-frequency-perturbation",)

SUBTYPES = {
    "spike": SPIKE_SUBTYPES,
    "level": LEVEL_SUBTYPES,
    "trend": TREND_SUBTYPES,
    "frequency": FREQUENCY_SUBTYPES,
}

# Frequency scales in [0.8, 1.25] are indistinguishable from normal variation,
# so the plan sampler never emits them.
FORBIDDEN_FREQ_BAND = (0.8, 1.25)

_POINT_SPIKES = ("upward", "downward", "continuous-upward", "continuous-downward")


class InjectionConflictError(ValueError):
    """Raised when an anomaly would overlap an already-labeled interval."""


@dataclass(frozen=True)
class AnomalySpec:
    """One planned anomaly.

    magnitude is the realized additive size in series units (the plan sampler
    converts from peak-to-peak-relative draws). For frequency anomalies,
    magnitude acts as the amplitude scale of the perturbed harmonics and
    freq_scale as their frequency multiplier. trend carries the recipe for an
    inserted trend segment so injection is reproducible from the spec alone.
    """

    kind: str
    subtype: str
    start: int
    duration: int
    magnitude: float = 0.0
    freq_scale: float = 1.0
    top_k: int = 1
    crossfade: int = 3
    trend: TrendSpec | None = None

    @property
    def end(self) -> int:
        return self.start + self.duration - 1

    def validate(self, ts_length: int) -> None:
        if self.kind not in ANOMALY_KINDS:
            raise ValueError(f"unknown anomaly kind {self.kind!r}")
        if self.subtype not in SUBTYPES[self.kind]:
            raise ValueError(f"unknown {self.kind} subtype {self.subtype!r}")
        if self.start < 0 or self.duration < 1:
            raise ValueError("start must be >= 0 and duration >= 1")
        if self.start + self.duration > ts_length:
            raise ValueError(
                f"interval [{self.start}, {self.end}] out of bounds for length {ts_length}"
            )
        if self.kind in ("spike", "level", "trend") and self.magnitude == 0:
            raise ValueError(f"{self.kind} anomaly requires non-zero magnitude")
        if self.kind == "trend":
            if self.trend is None:
                raise ValueError("trend anomaly requires an inner trend recipe")
            if self.duration < 2:
                raise ValueError("trend anomaly requires duration >= 2")
        if self.kind == "frequency" and self.freq_scale <= 0:
            raise ValueError("freq_scale must be positive")

    def labeled_interval(self, ts_length: int) -> tuple[int, int]:
        """Inclusive labeled extent; level/trend shifts persist to window end."""
        if self.kind in ("level", "trend"):
            return self.start, ts_length - 1
        return self.start, self.end

    def to_dict(self) -> dict:
        d = {
            "kind": self.kind,
            "subtype": self.subtype,
            "start": self.start,
            "duration": self.duration,
            "magnitude": self.magnitude,
            "freq_scale": self.freq_scale,
            "top_k": self.top_k,
            "crossfade": self.crossfade,
        }
        if self.trend is not None:
            d["trend"] = self.trend.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AnomalySpec":
        return cls(
            kind=d["kind"],
            subtype=d["subtype"],
            start=int(d["start"]),
            duration=int(d["duration"]),
            magnitude=float(d.get("magnitude", 0.0)),
            freq_scale=float(d.get("freq_scale", 1.0)),
            top_k=int(d.get("top_k", 1)),
            crossfade=int(d.get("crossfade", 3)),
            trend=TrendSpec.from_dict(d["trend"]) if "trend" in d else None,
        )


def _spike_shape(subtype: str, duration: int) -> np.ndarray:
    """Unit spike profile with peak exactly +/-1, length `duration`."""
    d = duration
    i = np.arange(d, dtype=float)
    if subtype in ("upward", "downward"):
        apex = (d - 1) / 2.0
        shape = 1.0 - np.abs(i - apex) / (apex + 1.0)
    elif subtype in ("continuous-upward", "continuous-downward"):
        shape = np.ones(d)
    elif subtype in ("upward-convex", "downward-convex"):
        shape = np.sin(np.pi * (i + 1.0) / (d + 1.0))
    elif subtype == "rapid-rise-slow-decline":
        rise = max(1, round(d * 0.25))
        shape = np.empty(d)
        shape[:rise] = (i[:rise] + 1.0) / rise
        tail = d - rise
        if tail:
            shape[rise:] = np.exp(-3.0 * (i[:tail] + 1.0) / tail)
    elif subtype == "slow-rise-rapid-decline":
        shape = _spike_shape("rapid-rise-slow-decline", d)[::-1].copy()
    else:
        raise ValueError(f"unknown spike subtype {subtype!r}")
    shape = shape / np.max(np.abs(shape))
    if subtype in ("downward", "continuous-downward", "downward-convex"):
        shape = -shape
    return shape


def _level_offsets(subtype: str, magnitude: float, span: int) -> np.ndarray:
    """Additive offsets from the shift point to the end of the window."""
    if subtype == "sudden-increase":
        return np.full(span, magnitude)
    if subtype == "sudden-decrease":
        return np.full(span, -magnitude)
    # Spike-prefixed shifts: a short pulse before values settle on the new baseline.
    pulse_len = min(3, span)
    pulse = _spike_shape("upward", pulse_len)
    off = np.empty(span)
    if subtype == "increase-after-downward-spike":
        off[:] = magnitude
        off[:pulse_len] = -1.5 * magnitude * pulse
    elif subtype == "decrease-after-upward-spike":
        off[:] = -magnitude
        off[:pulse_len] = 1.5 * magnitude * pulse
    elif subtype == "increase-after-upward-spike":
        off[:] = magnitude
        off[:pulse_len] = 2.5 * magnitude * pulse
    else:
        raise ValueError(f"unknown level subtype {subtype!r}")
    return off


def _check_no_overlap(series: LabeledSeries, start: int, end: int) -> None:
    for iv in series.intervals:
        if start <= iv.end and iv.start <= end:
            raise InjectionConflictError(
                f"interval [{start}, {end}] overlaps existing [{iv.start}, {iv.end}]"
            )


def inject_anomaly(series: LabeledSeries, spec: AnomalySpec) -> LabeledSeries:
    """Inject a spike, level, or trend anomaly and append its ground truth."""
    if spec.kind not in ("spike", "level", "trend"):
        raise ValueError(f"inject_anomaly handles spike/level/trend, not {spec.kind!r}")
    n = len(series.values)
    spec.validate(n)
    label_start, label_end = spec.labeled_interval(n)
    _check_no_overlap(series, label_start, label_end)

    values = series.values.copy()
    if spec.kind == "spike":
        seg = slice(spec.start, spec.start + spec.duration)
        values[seg] += spec.magnitude * _spike_shape(spec.subtype, spec.duration)
    elif spec.kind == "level":
        values[spec.start:] += _level_offsets(spec.subtype, abs(spec.magnitude), n - spec.start)
    else:  # trend
        ramp = gen_trend(spec.trend, spec.duration, amplitude=1.0)
        seg_end = spec.start + spec.duration
        values[spec.start:seg_end] += ramp
        values[seg_end:] += ramp[-1]

    intervals = series.intervals + [
        Interval(start=label_start, end=label_end, kind=spec.kind, subtype=spec.subtype)
    ]
    return LabeledSeries(values=values, intervals=intervals, attributes=series.attributes)


def inject_frequency_anomaly(
    series: LabeledSeries, spec: AnomalySpec, seasonal: SeasonalSpec
) -> LabeledSeries:
    """Replace the seasonal contribution inside the interval with a perturbed one.

    The top-k strongest harmonics get their frequency multiplied by freq_scale
    and amplitude scaled by magnitude; a linear crossfade inside the labeled
    interval joins the boundaries, so locality is exact outside it.
    """
    if spec.kind != "frequency":
        raise ValueError(f"inject_frequency_anomaly requires kind 'frequency', got {spec.kind!r}")
    n = len(series.values)
    spec.validate(n)
    if series.attributes.period_class != "observable":
        raise ValueError("frequency anomalies require an observable period")
    label_start, label_end = spec.labeled_interval(n)
    _check_no_overlap(series, label_start, label_end)

    # Strongest harmonics first: amplitude decays as amplitude_series / n.
    by_strength = sorted(seasonal.harmonics, key=lambda h: seasonal.amplitude_series / h.n, reverse=True)
    chosen = [h.n for h in by_strength[: max(1, min(spec.top_k, len(by_strength)))]]
    amp_scale = spec.magnitude if spec.magnitude != 0 else 1.0

    original = _seasonal_values(seasonal, n)
    perturbed = _seasonal_values(
        seasonal,
        n,
        freq_scale_for={m: spec.freq_scale for m in chosen},
        amp_scale_for={m: amp_scale for m in chosen},
    )
    delta = perturbed[label_start:label_end + 1] - original[label_start:label_end + 1]

    width = min(spec.crossfade, spec.duration // 2, 5)
    blend = np.ones(spec.duration)
    if width > 0:
        ramp = np.arange(1, width + 1, dtype=float) / (width + 1)
        blend[:width] = ramp
        blend[-width:] = ramp[::-1]

    values = series.values.copy()
    values[label_start:label_end + 1] += blend * delta
    intervals = series.intervals + [
        Interval(start=label_start, end=label_end, kind="frequency", subtype=spec.subtype)
    ]
    return LabeledSeries(values=values, intervals=intervals, attributes=series.attributes)


def apply_plan(
    series: LabeledSeries, plan: tuple[AnomalySpec, ...], seasonal: SeasonalSpec
) -> LabeledSeries:
    """Apply every planned anomaly in order."""
    out = series
    for spec in plan:
        if spec.kind == "frequency":
            out = inject_frequency_anomaly(out, spec, seasonal)
        else:
            out = inject_anomaly(out, spec)
    return out


def _weighted_kind(rng: np.random.Generator, weights: dict[str, float]) -> str:
    kinds = [k for k in ANOMALY_KINDS if weights.get(k, 0.0) > 0]
    w = np.array([weights[k] for k in kinds], dtype=float)
    return kinds[int(rng.choice(len(kinds), p=w / w.sum()))]


def _fits(start: int, end: int, taken: list[tuple[int, int]], min_gap: int) -> bool:
    return all(end + min_gap < s or e + min_gap < start for s, e in taken)


def sample_anomaly_plan(
    rng: np.random.Generator,
    attributes: SeriesAttributes,
    mix: dict[str, float],
    max_anomalies: int = 3,
    min_gap: int = 5,
    max_tries: int = 40,
) -> list[AnomalySpec]:
    """Draw up to max_anomalies non-overlapping anomaly specs.

    Trend and frequency anomalies are only emitted for observable periods,
    since a window holding less than two cycles cannot display them. Returns
    fewer specs (possibly none) when placement keeps failing.
    """
    if any(w < 0 for w in mix.values()):
        raise ValueError("mix weights must be non-negative")
    ts_length = attributes.ts_length
    weights = {k: float(mix.get(k, 0.0)) for k in ANOMALY_KINDS}
    if attributes.period_class != "observable":
        weights["trend"] = 0.0
        weights["frequency"] = 0.0
    if sum(weights.values()) == 0:
        return []

    # Magnitudes are drawn relative to the seasonal swing, stored in series units.
    scale = attributes.amplitude if attributes.amplitude > 0 else 1.0

    n_target = int(rng.integers(1, max_anomalies + 1))
    plan: list[AnomalySpec] = []
    taken: list[tuple[int, int]] = []

    for _ in range(n_target):
        for _ in range(max_tries):
            kind = _weighted_kind(rng, weights)
            subtype = str(rng.choice(SUBTYPES[kind]))
            spec = _draw_spec(rng, kind, subtype, attributes, scale)
            if spec is None:
                continue
            lo, hi = spec.labeled_interval(ts_length)
            if _fits(lo, hi, taken, min_gap):
                plan.append(spec)
                taken.append((lo, hi))
                break
    plan.sort(key=lambda s: s.start)
    return plan


def _draw_spec(
    rng: np.random.Generator,
    kind: str,
    subtype: str,
    attributes: SeriesAttributes,
    scale: float,
) -> AnomalySpec | None:
    ts_length = attributes.ts_length
    if kind == "spike":
        if subtype in _POINT_SPIKES:
            duration = int(rng.integers(1, 4))
        else:
            duration = int(rng.integers(3, 13))
        if duration > ts_length:
            return None
        start = int(rng.integers(0, ts_length - duration + 1))
        magnitude = float(rng.uniform(0.5, 3.0)) * scale
        return AnomalySpec(kind, subtype, start, duration, magnitude=magnitude)

    if kind == "level":
        if ts_length < 20:
            return None
        start = int(rng.integers(10, ts_length - 9))
        magnitude = float(rng.uniform(0.5, 2.0)) * scale
        return AnomalySpec(kind, subtype, start, ts_length - start, magnitude=magnitude)

    if kind == "trend":
        lo = max(5, ts_length // 20)
        hi = max(lo + 1, ts_length // 3)
        duration = int(rng.integers(lo, hi + 1))
        if duration + 5 > ts_length:
            return None
        start = int(rng.integers(5, ts_length - duration + 1))
        direction = "increase" if rng.random() < 0.5 else "decrease"
        shape = str(rng.choice(("linear", "exponential", "logarithmic")))
        displacement = float(rng.uniform(0.5, 2.0)) * scale
        inner = TrendSpec(kind=direction, shape=shape, intensity=displacement)
        signed = displacement if direction == "increase" else -displacement
        return AnomalySpec(kind, subtype, start, duration, magnitude=signed, trend=inner)

    # frequency
    period = attributes.period
    duration = int(round(rng.uniform(1.5, 2.5) * period))
    duration = max(10, min(duration, ts_length))
    if duration > ts_length:
        return None
    start = int(rng.integers(0, ts_length - duration + 1))
    if rng.random() < 0.5:
        freq_scale = float(rng.uniform(FORBIDDEN_FREQ_BAND[1] + 0.05, 3.0))
    else:
        freq_scale = float(rng.uniform(1.0 / 3.0, FORBIDDEN_FREQ_BAND[0] - 0.03))
    amp_scale = float(rng.uniform(0.7, 1.6))
    top_k = int(rng.integers(1, 3))
    return AnomalySpec(
        kind,
        subtype,
        start,
        duration,
        magnitude=amp_scale,
        freq_scale=freq_scale,
        top_k=top_k,
        crossfade=min(5, duration // 4),
    )
