"""Synthesis of normal periodic series as trend + seasonal + noise components.

Every random choice is captured in a serializable spec so that a series can be
regenerated bit-identically from (seed, spec) alone, independent of worker
count or generation order.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .anomalies import AnomalySpec
    from .config import GenerationConfig

TREND_KINDS = ("increase", "decrease", "steady")
TREND_SHAPES = ("linear", "exponential", "logarithmic", "piecewise-linear")
NOISE_LEVELS = ("low", "high")

# Curvature constants for the exponential / logarithmic trend profiles.
_EXP_CURVATURE = 3.0
_LOG_CURVATURE = 9.0

# Salt mixed into a series seed to derive its noise stream.
_NOISE_SALT = 0x6E6F6973

_BIT_GENERATORS = {
    "pcg64": np.random.PCG64,
    "philox": np.random.Philox,
}


def split_seed(*parts: int) -> int:
    """Derive a stable 64-bit seed from integer parts.

    Uses SHA-256 rather than Python's hash() so results are identical across
    platforms, interpreter runs, and worker processes.
    """
    digest = hashlib.sha256("|".join(str(int(p)) for p in parts).encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


def make_rng(seed: int, algorithm: str = "pcg64") -> np.random.Generator:
    """Construct the named portable bit generator seeded with `seed`."""
    try:
        bitgen = _BIT_GENERATORS[algorithm]
    except KeyError:
        raise ValueError(f"unknown rng algorithm {algorithm!r}, expected one of {sorted(_BIT_GENERATORS)}")
    return np.random.Generator(bitgen(seed))


def period_class(period: float, ts_length: int) -> str:
    """A period is observable iff at least two full cycles fit in the window."""
    return "observable" if period <= ts_length / 2 else "sub-window"


@dataclass(frozen=True)
class TrendSpec:
    """Recipe for the trend component.

    intensity is the total displacement |last - first| as a multiple of the
    seasonal base amplitude. knots holds interior (position, level) fractions
    for the piecewise-linear shape; both coordinates live in (0, 1) and levels
    are non-decreasing so the profile stays monotone.
    """

    kind: str
    shape: str = "linear"
    intensity: float = 0.0
    knots: tuple[tuple[float, float], ...] = ()

    def validate(self) -> None:
        if self.kind not in TREND_KINDS:
            raise ValueError(f"unknown trend kind {self.kind!r}")
        if self.shape not in TREND_SHAPES:
            raise ValueError(f"unknown trend shape {self.shape!r}")
        if self.kind == "steady":
            if self.intensity != 0:
                raise ValueError("steady trend requires intensity 0")
        elif self.intensity <= 0:
            raise ValueError("non-steady trend requires intensity > 0")
        levels = [lv for _, lv in self.knots]
        if levels != sorted(levels):
            raise ValueError("piecewise knot levels must be non-decreasing")

    def displacement(self, amplitude: float = 1.0) -> float:
        """Signed total displacement over the window."""
        if self.kind == "steady":
            return 0.0
        sign = 1.0 if self.kind == "increase" else -1.0
        return sign * self.intensity * amplitude

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "shape": self.shape,
            "intensity": self.intensity,
            "knots": [list(k) for k in self.knots],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrendSpec":
        return cls(
            kind=d["kind"],
            shape=d.get("shape", "linear"),
            intensity=float(d.get("intensity", 0.0)),
            knots=tuple((float(p), float(v)) for p, v in d.get("knots", [])),
        )


@dataclass(frozen=True)
class Harmonic:
    """One sine term of the seasonal component with its amplitude perturbation."""

    n: int
    phase: float
    perturb_depth: float
    perturb_freq: float
    perturb_phase: float

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "phase": self.phase,
            "perturb_depth": self.perturb_depth,
            "perturb_freq": self.perturb_freq,
            "perturb_phase": self.perturb_phase,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Harmonic":
        return cls(
            n=int(d["n"]),
            phase=float(d["phase"]),
            perturb_depth=float(d["perturb_depth"]),
            perturb_freq=float(d["perturb_freq"]),
            perturb_phase=float(d["perturb_phase"]),
        )


@dataclass(frozen=True)
class SeasonalSpec:
    """Recipe for the seasonal component: a 1..10 harmonic sine stack.

    Harmonic n contributes amplitude_series/n times a slowly modulated
    envelope (depth <= 0.05), at frequency n/period.
    """

    period: float
    amplitude_series: float
    harmonics: tuple[Harmonic, ...]

    @property
    def num_harmonics(self) -> int:
        return len(self.harmonics)

    @property
    def base_frequency(self) -> float:
        return 1.0 / self.period

    def validate(self) -> None:
        if self.period <= 0:
            raise ValueError("period must be positive")
        if self.amplitude_series < 0:
            raise ValueError("amplitude_series must be non-negative")
        if not 1 <= len(self.harmonics) <= 10:
            raise ValueError("num_harmonics must be in [1, 10]")
        if [h.n for h in self.harmonics] != list(range(1, len(self.harmonics) + 1)):
            raise ValueError("harmonic indices must be 1..num_harmonics")
        for h in self.harmonics:
            if not 0 <= h.perturb_depth <= 0.05:
                raise ValueError("perturb_depth must be in [0, 0.05]")

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "amplitude_series": self.amplitude_series,
            "harmonics": [h.to_dict() for h in self.harmonics],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SeasonalSpec":
        return cls(
            period=float(d["period"]),
            amplitude_series=float(d["amplitude_series"]),
            harmonics=tuple(Harmonic.from_dict(h) for h in d["harmonics"]),
        )


@dataclass(frozen=True)
class NoiseSpec:
    """Additive Gaussian noise; sigma is in series units."""

    level: str
    sigma: float

    def validate(self) -> None:
        if self.level not in NOISE_LEVELS:
            raise ValueError(f"unknown noise level {self.level!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    def to_dict(self) -> dict:
        return {"level": self.level, "sigma": self.sigma}

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseSpec":
        return cls(level=d["level"], sigma=float(d["sigma"]))


@dataclass(frozen=True)
class SeriesAttributes:
    """Generation attributes carried alongside a labeled series."""

    ts_length: int
    trend_kind: str
    period: float
    period_class: str
    noise_level: str
    noise_sigma: float
    amplitude: float  # seasonal peak-to-peak of the realized signal

    def to_dict(self) -> dict:
        return {
            "ts_length": self.ts_length,
            "trend_kind": self.trend_kind,
            "period": self.period,
            "period_class": self.period_class,
            "noise_level": self.noise_level,
            "noise_sigma": self.noise_sigma,
            "amplitude": self.amplitude,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SeriesAttributes":
        return cls(
            ts_length=int(d["ts_length"]),
            trend_kind=d["trend_kind"],
            period=float(d["period"]),
            period_class=d["period_class"],
            noise_level=d["noise_level"],
            noise_sigma=float(d["noise_sigma"]),
            amplitude=float(d["amplitude"]),
        )


@dataclass(frozen=True)
class Interval:
    """Ground-truth anomaly interval, inclusive at both ends, 0-based."""

    start: int
    end: int
    kind: str
    subtype: str = ""

    def to_dict(self) -> dict:
        return {"start": self.start, "end": self.end, "kind": self.kind, "subtype": self.subtype}

    @classmethod
    def from_dict(cls, d: dict) -> "Interval":
        return cls(start=int(d["start"]), end=int(d["end"]), kind=d["kind"], subtype=d.get("subtype", ""))


@dataclass
class LabeledSeries:
    """A realized value vector plus its typed ground-truth intervals."""

    values: np.ndarray
    intervals: list[Interval]
    attributes: SeriesAttributes

    def validate(self) -> None:
        n = len(self.values)
        spans = sorted((iv.start, iv.end) for iv in self.intervals)
        for iv in self.intervals:
            if not (0 <= iv.start <= iv.end < n):
                raise ValueError(f"interval {iv} out of bounds for length {n}")
        for (_, e0), (s1, _) in zip(spans, spans[1:]):
            if s1 <= e0:
                raise ValueError("ground-truth intervals overlap")

    def label_mask(self) -> np.ndarray:
        mask = np.zeros(len(self.values), dtype=np.int8)
        for iv in self.intervals:
            mask[iv.start:iv.end + 1] = 1
        return mask


@dataclass(frozen=True)
class SeriesSpec:
    """Full stochastic recipe for one series; sufficient for bit-identical regeneration."""

    seed: int
    ts_length: int
    trend: TrendSpec
    seasonal: SeasonalSpec
    noise: NoiseSpec
    anomaly_plan: tuple["AnomalySpec", ...] = ()
    rng_algorithm: str = "pcg64"

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "ts_length": self.ts_length,
            "trend": self.trend.to_dict(),
            "seasonal": self.seasonal.to_dict(),
            "noise": self.noise.to_dict(),
            "anomaly_plan": [a.to_dict() for a in self.anomaly_plan],
            "rng_algorithm": self.rng_algorithm,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SeriesSpec":
        from .anomalies import AnomalySpec

        return cls(
            seed=int(d["seed"]),
            ts_length=int(d["ts_length"]),
            trend=TrendSpec.from_dict(d["trend"]),
            seasonal=SeasonalSpec.from_dict(d["seasonal"]),
            noise=NoiseSpec.from_dict(d["noise"]),
            anomaly_plan=tuple(AnomalySpec.from_dict(a) for a in d.get("anomaly_plan", [])),
            rng_algorithm=d.get("rng_algorithm", "pcg64"),
        )


def _unit_profile(shape: str, ts_length: int, knots: tuple[tuple[float, float], ...]) -> np.ndarray:
    """Monotone non-decreasing profile g with g[0] = 0 and g[-1] = 1."""
    u = np.arange(ts_length, dtype=float) / (ts_length - 1)
    if shape == "linear":
        return u
    if shape == "exponential":
        k = _EXP_CURVATURE
        return (np.exp(k * u) - 1.0) / (np.exp(k) - 1.0)
    if shape == "logarithmic":
        k = _LOG_CURVATURE
        return np.log1p(k * u) / np.log1p(k)
    if shape == "piecewise-linear":
        xs = [0.0] + [p for p, _ in knots] + [1.0]
        ys = [0.0] + [v for _, v in knots] + [1.0]
        return np.interp(u, xs, ys)
    raise ValueError(f"unknown trend shape {shape!r}")


def gen_trend(spec: TrendSpec, ts_length: int, amplitude: float = 1.0) -> np.ndarray:
    """Generate the trend component.

    Returns an all-zero vector for steady trends, otherwise a monotone vector
    whose total displacement is spec.intensity * amplitude, signed by kind.
    """
    if ts_length < 2:
        raise ValueError("ts_length must be >= 2")
    spec.validate()
    if spec.kind == "steady":
        return np.zeros(ts_length)
    profile = _unit_profile(spec.shape, ts_length, spec.knots)
    return spec.displacement(amplitude) * profile


def _seasonal_values(
    spec: SeasonalSpec,
    ts_length: int,
    freq_scale_for: dict[int, float] | None = None,
    amp_scale_for: dict[int, float] | None = None,
) -> np.ndarray:
    """Seasonal sine stack, optionally with per-harmonic frequency/amplitude scaling.

    The scaling hooks are how frequency anomalies regenerate a locally
    perturbed segment from the same generative recipe.
    """
    freq_scale_for = freq_scale_for or {}
    amp_scale_for = amp_scale_for or {}
    t = np.arange(ts_length, dtype=float)
    base_frequency = 1.0 / spec.period
    data = np.zeros(ts_length)
    for h in spec.harmonics:
        envelope = 1.0 + h.perturb_depth * np.sin(h.perturb_freq * np.pi * t / ts_length + h.perturb_phase)
        amp = (spec.amplitude_series / h.n) * envelope * amp_scale_for.get(h.n, 1.0)
        freq = base_frequency * h.n * freq_scale_for.get(h.n, 1.0)
        data += amp * np.sin(2.0 * np.pi * freq * t + h.phase)
    return data


def gen_seasonal(spec: SeasonalSpec, ts_length: int) -> np.ndarray:
    """Generate the seasonal component from its harmonic recipe."""
    if ts_length < 1:
        raise ValueError("ts_length must be positive")
    spec.validate()
    return _seasonal_values(spec, ts_length)


def gen_noise(spec: NoiseSpec, ts_length: int, rng_seed: int, algorithm: str = "pcg64") -> np.ndarray:
    """i.i.d. zero-mean Gaussian samples; identical seed gives identical vector."""
    if ts_length < 1:
        raise ValueError("ts_length must be positive")
    spec.validate()
    if spec.sigma == 0:
        return np.zeros(ts_length)
    return make_rng(rng_seed, algorithm).normal(0.0, spec.sigma, ts_length)


def _draw_trend_spec(rng: np.random.Generator, config: "GenerationConfig") -> TrendSpec:
    kind = str(rng.choice(TREND_KINDS))
    if kind == "steady":
        return TrendSpec(kind="steady", shape="linear", intensity=0.0)
    shape = str(rng.choice(TREND_SHAPES))
    intensity = float(rng.uniform(*config.trend_intensity_range))
    knots: tuple[tuple[float, float], ...] = ()
    if shape == "piecewise-linear":
        k = int(rng.integers(2, 5))
        positions = np.sort(rng.uniform(0.1, 0.9, k))
        levels = np.sort(rng.uniform(0.0, 1.0, k))
        knots = tuple((float(p), float(v)) for p, v in zip(positions, levels))
    return TrendSpec(kind=kind, shape=shape, intensity=intensity, knots=knots)


def _draw_seasonal_spec(rng: np.random.Generator, config: "GenerationConfig", ts_length: int) -> SeasonalSpec:
    if rng.random() < config.p_observable_period:
        period = float(rng.uniform(10.0, ts_length // 2))
    else:
        period = float(rng.uniform(ts_length // 2, 3 * ts_length))
    amplitude_series = float(rng.uniform(*config.amplitude_range))
    num_harmonics = int(rng.integers(1, 11))
    harmonics = tuple(
        Harmonic(
            n=n,
            phase=float(rng.uniform(0.0, 2.0 * np.pi)),
            perturb_depth=float(rng.uniform(0.0, 0.05)),
            perturb_freq=float(rng.uniform(1.0, 3.0)),
            perturb_phase=float(rng.uniform(0.0, 2.0 * np.pi)),
        )
        for n in range(1, num_harmonics + 1)
    )
    return SeasonalSpec(period=period, amplitude_series=amplitude_series, harmonics=harmonics)


def realize_series(spec: SeriesSpec) -> LabeledSeries:
    """Regenerate values and labels from a spec, bit-identically."""
    from .anomalies import apply_plan

    ts_length = spec.ts_length
    seasonal_values = gen_seasonal(spec.seasonal, ts_length)
    trend_values = gen_trend(spec.trend, ts_length, amplitude=spec.seasonal.amplitude_series)
    noise_values = gen_noise(
        spec.noise, ts_length, split_seed(spec.seed, _NOISE_SALT), algorithm=spec.rng_algorithm
    )
    values = trend_values + seasonal_values + noise_values
    attributes = SeriesAttributes(
        ts_length=ts_length,
        trend_kind=spec.trend.kind,
        period=spec.seasonal.period,
        period_class=period_class(spec.seasonal.period, ts_length),
        noise_level=spec.noise.level,
        noise_sigma=spec.noise.sigma,
        amplitude=float(np.ptp(seasonal_values)),
    )
    labeled = LabeledSeries(values=values, intervals=[], attributes=attributes)
    return apply_plan(labeled, spec.anomaly_plan, spec.seasonal)


def compose_series(master_seed: int, index: int, config: "GenerationConfig") -> tuple[SeriesSpec, LabeledSeries]:
    """Draw a full series recipe for item `index` and realize it.

    All parameters come from an item RNG seeded by a stable hash of
    (master_seed, index), so generation is order- and worker-independent.
    """
    from .anomalies import sample_anomaly_plan

    config.validate()
    ts_length = config.ts_length
    item_seed = split_seed(master_seed, index)
    rng = make_rng(item_seed, config.rng_algorithm)

    trend = _draw_trend_spec(rng, config)
    seasonal = _draw_seasonal_spec(rng, config, ts_length)
    seasonal_values = _seasonal_values(seasonal, ts_length)
    peak_to_peak = float(np.ptp(seasonal_values))

    level = "high" if rng.random() < config.p_high_noise else "low"
    band = config.noise_high if level == "high" else config.noise_low
    sigma = float(rng.uniform(*band)) * peak_to_peak
    noise = NoiseSpec(level=level, sigma=sigma)

    attributes = SeriesAttributes(
        ts_length=ts_length,
        trend_kind=trend.kind,
        period=seasonal.period,
        period_class=period_class(seasonal.period, ts_length),
        noise_level=level,
        noise_sigma=sigma,
        amplitude=peak_to_peak,
    )

    if rng.random() < config.anomaly_free_prob:
        plan: tuple = ()
    else:
        plan = tuple(
            sample_anomaly_plan(
                rng,
                attributes,
                config.anomaly_mix,
                max_anomalies=config.max_anomalies,
                min_gap=config.min_gap,
            )
        )

    spec = SeriesSpec(
        seed=item_seed,
        ts_length=ts_length,
        trend=trend,
        seasonal=seasonal,
        noise=noise,
        anomaly_plan=plan,
        rng_algorithm=config.rng_algorithm,
    )
    return spec, realize_series(spec)


# --- Fourier truncation sanity utilities ------------------------------------
#
# The seasonal stack leans on the fact that a few sine terms approximate a
# periodic function of bounded variation. These helpers make that claim
# numerically checkable for a continuous zigzag test wave. (A discontinuous
# ramp exhibits Gibbs overshoot and admits no uniform O(1/N) bound.)


def zigzag_wave(n_points: int) -> np.ndarray:
    """Continuous piecewise-linear wave over one period: 0 -> 1 -> -1 -> 0."""
    u = np.arange(n_points, dtype=float) / n_points
    return np.where(u < 0.25, 4.0 * u, np.where(u < 0.75, 2.0 - 4.0 * u, -4.0 + 4.0 * u))


def fourier_partial_sum(values: np.ndarray, n_terms: int) -> np.ndarray:
    """Truncate the series to harmonics |k| <= n_terms via the DFT."""
    if n_terms < 0:
        raise ValueError("n_terms must be non-negative")
    spectrum = np.fft.fft(values)
    n = len(values)
    k = np.minimum(np.arange(n), n - np.arange(n))
    spectrum[k > n_terms] = 0.0
    return np.fft.ifft(spectrum).real


def total_variation(values: np.ndarray) -> float:
    """Total variation over one period, including the wrap-around step."""
    closed = np.concatenate([values, values[:1]])
    return float(np.abs(np.diff(closed)).sum())


def truncation_bound_holds(values: np.ndarray, n_terms: int) -> bool:
    """Check max|f - S_N| < V/(pi*N) on the sampled grid (strict)."""
    err = float(np.max(np.abs(values - fourier_partial_sum(values, n_terms))))
    return err < total_variation(values) / (np.pi * n_terms)
