"""Anomaly injection tests: shapes, locality, labels, and plan sampling."""

import numpy as np
import pytest

from tsadkit.anomalies import (
    SUBTYPES,
    AnomalySpec,
    InjectionConflictError,
    apply_plan,
    inject_anomaly,
    inject_frequency_anomaly,
    sample_anomaly_plan,
)
from tsadkit.config import GenerationConfig
from tsadkit.generate import (
    Harmonic,
    LabeledSeries,
    SeasonalSpec,
    SeriesAttributes,
    TrendSpec,
    compose_series,
    gen_seasonal,
    make_rng,
)


def flat_series(length=200, period_cls="observable"):
    attrs = SeriesAttributes(
        ts_length=length, trend_kind="steady", period=25.0, period_class=period_cls,
        noise_level="low", noise_sigma=0.01, amplitude=2.0,
    )
    return LabeledSeries(values=np.zeros(length), intervals=[], attributes=attrs)


def single_harmonic_seasonal(period=25.0):
    return SeasonalSpec(
        period=period, amplitude_series=1.0,
        harmonics=(Harmonic(n=1, phase=0.0, perturb_depth=0.0, perturb_freq=2.0, perturb_phase=0.0),),
    )


class TestInjectSpike:
    def test_single_point_upward_spike_on_zero_baseline(self):
        spec = AnomalySpec("spike", "upward", start=50, duration=1, magnitude=3.0)
        out = inject_anomaly(flat_series(), spec)
        assert out.values[50] == 3.0
        assert np.all(out.values[:50] == 0) and np.all(out.values[51:] == 0)
        assert out.intervals == [out.intervals[0]]
        assert (out.intervals[0].start, out.intervals[0].end) == (50, 50)

    @pytest.mark.parametrize("subtype", SUBTYPES["spike"])
    def test_peak_reaches_magnitude_and_stays_local(self, subtype):
        duration = 1 if subtype in ("upward", "downward") else 8
        spec = AnomalySpec("spike", subtype, start=40, duration=duration, magnitude=2.5)
        out = inject_anomaly(flat_series(), spec)
        inside = out.values[40:40 + duration]
        assert abs(np.max(np.abs(inside)) - 2.5) < 1e-9
        assert np.max(np.abs(inside)) >= 0.5 * 2.5
        outside = np.concatenate([out.values[:40], out.values[40 + duration:]])
        assert np.all(np.abs(outside) < 1e-9)

    def test_downward_variants_point_down(self):
        for subtype in ("downward", "continuous-downward", "downward-convex"):
            spec = AnomalySpec("spike", subtype, start=10, duration=4, magnitude=1.0)
            out = inject_anomaly(flat_series(), spec)
            assert out.values[10:14].min() < 0
            assert out.values[10:14].max() <= 1e-12


class TestInjectLevel:
    def test_sudden_increase_steps_to_end(self):
        spec = AnomalySpec("level", "sudden-increase", start=100, duration=100, magnitude=1.0)
        out = inject_anomaly(flat_series(), spec)
        assert np.all(out.values[:100] == 0)
        assert np.all(out.values[100:] == 1.0)
        iv = out.intervals[0]
        assert (iv.start, iv.end) == (100, 199)

    def test_spike_prefixed_shift_dips_then_settles(self):
        spec = AnomalySpec("level", "increase-after-downward-spike", start=80, duration=120, magnitude=1.0)
        out = inject_anomaly(flat_series(), spec)
        assert out.values[80:83].min() < 0  # the prepended downward spike
        assert np.allclose(out.values[83:], 1.0)
        assert np.all(out.values[:80] == 0)

    def test_values_before_start_unchanged_on_noisy_baseline(self):
        base = flat_series()
        base.values = np.sin(np.arange(200) / 7.0)
        spec = AnomalySpec("level", "sudden-decrease", start=120, duration=80, magnitude=2.0)
        out = inject_anomaly(base, spec)
        assert np.array_equal(out.values[:120], base.values[:120])


class TestInjectTrend:
    def test_displacement_recomputed_from_recipe(self):
        inner = TrendSpec(kind="increase", shape="linear", intensity=1.2)
        spec = AnomalySpec("trend", "new-trend-segment", start=60, duration=40,
                           magnitude=1.2, trend=inner)
        out = inject_anomaly(flat_series(), spec)
        head = out.values[:60].mean()
        tail = out.values[100:].mean()
        assert abs((tail - head) - 1.2) < 1e-6
        iv = out.intervals[0]
        assert (iv.start, iv.end) == (60, 199)

    def test_decreasing_segment(self):
        inner = TrendSpec(kind="decrease", shape="exponential", intensity=0.8)
        spec = AnomalySpec("trend", "new-trend-segment", start=20, duration=30,
                           magnitude=-0.8, trend=inner)
        out = inject_anomaly(flat_series(), spec)
        assert abs(out.values[150:].mean() - out.values[:20].mean() + 0.8) < 1e-6


class TestInjectFrequency:
    def test_identity_perturbation_returns_input(self):
        seasonal = single_harmonic_seasonal()
        base = flat_series()
        base.values = gen_seasonal(seasonal, 200)
        spec = AnomalySpec("frequency", "low-frequency-perturbation", start=50, duration=60,
                           magnitude=1.0, freq_scale=1.0)
        out = inject_frequency_anomaly(base, spec, seasonal)
        np.testing.assert_allclose(out.values, base.values, atol=1e-12)

    def test_dominant_bin_doubles_inside_segment(self):
        # Oracle: windowed FFT of the perturbed segment vs an equal-length
        # normal segment of the input.
        seasonal = single_harmonic_seasonal(period=25.0)
        base = flat_series()
        base.values = gen_seasonal(seasonal, 200)
        duration = 50  # 2 periods
        spec = AnomalySpec("frequency", "low-frequency-perturbation", start=100,
                           duration=duration, magnitude=1.0, freq_scale=2.0, crossfade=0)
        out = inject_frequency_anomaly(base, spec, seasonal)

        def dominant(seg):
            mag = np.abs(np.fft.rfft(seg))
            mag[0] = 0
            return int(np.argmax(mag))

        normal_bin = dominant(base.values[100:150])
        anomalous_bin = dominant(out.values[100:150])
        assert anomalous_bin == 2 * normal_bin

    def test_values_outside_interval_unchanged(self):
        seasonal = single_harmonic_seasonal()
        base = flat_series()
        base.values = gen_seasonal(seasonal, 200)
        spec = AnomalySpec("frequency", "low-frequency-perturbation", start=30, duration=80,
                           magnitude=1.3, freq_scale=0.5)
        out = inject_frequency_anomaly(base, spec, seasonal)
        assert np.all(np.abs(out.values[:30] - base.values[:30]) < 1e-9)
        assert np.all(np.abs(out.values[110:] - base.values[110:]) < 1e-9)

    def test_sub_window_period_rejected(self):
        seasonal = single_harmonic_seasonal()
        base = flat_series(period_cls="sub-window")
        spec = AnomalySpec("frequency", "low-frequency-perturbation", start=30, duration=60,
                           magnitude=1.0, freq_scale=2.0)
        with pytest.raises(ValueError):
            inject_frequency_anomaly(base, spec, seasonal)


class TestInjectionErrors:
    def test_out_of_bounds_rejected(self):
        spec = AnomalySpec("spike", "upward", start=195, duration=10, magnitude=1.0)
        with pytest.raises(ValueError):
            inject_anomaly(flat_series(), spec)

    def test_overlap_raises_conflict(self):
        first = AnomalySpec("spike", "upward", start=50, duration=3, magnitude=1.0)
        second = AnomalySpec("spike", "downward", start=51, duration=3, magnitude=1.0)
        out = inject_anomaly(flat_series(), first)
        with pytest.raises(InjectionConflictError):
            inject_anomaly(out, second)

    def test_zero_magnitude_rejected(self):
        spec = AnomalySpec("spike", "upward", start=10, duration=2, magnitude=0.0)
        with pytest.raises(ValueError):
            inject_anomaly(flat_series(), spec)

    def test_wrong_kind_routed(self):
        spec = AnomalySpec("frequency", "low-frequency-perturbation", start=10, duration=20)
        with pytest.raises(ValueError):
            inject_anomaly(flat_series(), spec)


class TestSamplePlan:
    def test_sub_window_frequency_only_mix_gives_empty_plan(self):
        attrs = flat_series(period_cls="sub-window").attributes
        plan = sample_anomaly_plan(make_rng(0), attrs, {"frequency": 1.0})
        assert plan == []

    def test_all_zero_mix_gives_empty_plan(self):
        attrs = flat_series().attributes
        assert sample_anomaly_plan(make_rng(0), attrs, {k: 0.0 for k in SUBTYPES}) == []

    def test_negative_weight_rejected(self):
        attrs = flat_series().attributes
        with pytest.raises(ValueError):
            sample_anomaly_plan(make_rng(0), attrs, {"spike": -1.0})

    def test_every_subtype_appears_over_1000_draws(self):
        attrs = flat_series().attributes
        rng = make_rng(123)
        mix = {k: 1.0 for k in SUBTYPES}
        seen = set()
        for _ in range(1000):
            for spec in sample_anomaly_plan(rng, attrs, mix):
                seen.add(spec.subtype)
        expected = {s for subtypes in SUBTYPES.values() for s in subtypes}
        assert seen == expected

    def test_plans_respect_separation_and_bounds(self):
        attrs = flat_series().attributes
        rng = make_rng(5)
        mix = {k: 1.0 for k in SUBTYPES}
        for _ in range(300):
            plan = sample_anomaly_plan(rng, attrs, mix)
            assert 0 <= len(plan) <= 3
            spans = sorted(spec.labeled_interval(attrs.ts_length) for spec in plan)
            for (s, e) in spans:
                assert 0 <= s <= e < attrs.ts_length
            for (_, e0), (s1, _) in zip(spans, spans[1:]):
                assert s1 - e0 > 5


class TestLocalityAndSoundness:
    def test_random_injections_alter_only_labeled_region(self):
        cfg = GenerationConfig(anomaly_free_prob=0.0)
        checked = 0
        for i in range(200):
            spec, labeled = compose_series(314, i, cfg)
            if not spec.anomaly_plan:
                continue
            clean = LabeledSeries(
                values=realize_clean(spec), intervals=[], attributes=labeled.attributes
            )
            mask = labeled.label_mask().astype(bool)
            level_like_starts = [
                a.start for a in spec.anomaly_plan if a.kind in ("level", "trend")
            ]
            outside = ~mask
            diff = np.abs(labeled.values - clean.values)
            assert np.all(diff[outside] < 1e-9)
            for start in level_like_starts:
                assert np.all(diff[:start][outside[:start]] < 1e-9)
            labeled.validate()
            checked += 1
        assert checked > 100

    def test_reinjection_reproduces_labels(self):
        cfg = GenerationConfig(anomaly_free_prob=0.0)
        spec, labeled = compose_series(2718, 4, cfg)
        clean = LabeledSeries(values=realize_clean(spec), intervals=[], attributes=labeled.attributes)
        again = apply_plan(clean, spec.anomaly_plan, spec.seasonal)
        assert np.array_equal(again.values, labeled.values)
        assert again.intervals == labeled.intervals


def realize_clean(spec):
    """Trend + seasonal + noise with no anomalies, same streams as realize_series."""
    from tsadkit.generate import _NOISE_SALT, gen_noise, gen_trend, split_seed

    trend = gen_trend(spec.trend, spec.ts_length, amplitude=spec.seasonal.amplitude_series)
    seasonal = gen_seasonal(spec.seasonal, spec.ts_length)
    noise = gen_noise(spec.noise, spec.ts_length, split_seed(spec.seed, _NOISE_SALT),
                      algorithm=spec.rng_algorithm)
    return trend + seasonal + noise
