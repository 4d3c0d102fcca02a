"""Rendering tests: z-scoring, index rescaling, determinism, and the STFT panel."""

import io

import numpy as np
import pytest
from PIL import Image

from tsadkit.render import (
    RenderSpec,
    line_points,
    render_composite,
    render_line,
    stft_magnitude,
    zscore,
)


class TestZscore:
    def test_constant_input_maps_to_zeros(self):
        assert np.array_equal(zscore(np.array([1.0, 1, 1, 1])), np.zeros(4))

    def test_two_point_symmetry(self):
        np.testing.assert_allclose(zscore(np.array([0.0, 2.0])), [-1.0, 1.0])

    def test_moments(self):
        rng = np.random.default_rng(0)
        z = zscore(rng.normal(3.0, 7.0, 200))
        assert abs(z.mean()) < 1e-9
        assert abs(z.std() - 1.0) < 1e-9

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            zscore(np.array([1.0]))


class TestLinePoints:
    def test_rescale_factor_quarter(self):
        xs, ys = line_points(np.arange(800, dtype=float), RenderSpec())
        assert xs[0] == 0.0 and xs[1] == 0.25 and xs[4] == 1.0
        assert len(xs) == 800

    def test_identity_rescale(self):
        xs, _ = line_points(np.arange(200, dtype=float), RenderSpec())
        np.testing.assert_allclose(xs, np.arange(200, dtype=float))

    def test_y_values_are_exactly_the_zscored_input(self):
        rng = np.random.default_rng(1)
        values = rng.normal(0, 5, 377)
        _, ys = line_points(values, RenderSpec())
        assert np.array_equal(ys, zscore(values))


class TestRenderLine:
    def test_byte_identical_renders(self):
        rng = np.random.default_rng(2)
        values = np.sin(np.arange(200) / 9.0) + rng.normal(0, 0.05, 200)
        spec = RenderSpec()
        assert render_line(values, spec).data == render_line(values, spec).data

    def test_artifact_fields(self):
        art = render_line(np.arange(800, dtype=float), RenderSpec())
        assert art.source_length == 800
        assert art.canonical_length == 200
        assert abs(art.rescale_factor - 0.25) < 1e-12

    def test_png_decodable_with_expected_size(self):
        art = render_line(np.arange(100, dtype=float), RenderSpec(image_width=640, image_height=320))
        img = Image.open(io.BytesIO(art.data))
        assert img.size == (640, 320)
        img.verify()

    def test_rescale_product_invariant(self):
        for n in (16, 200, 513, 800):
            art = render_line(np.arange(n, dtype=float), RenderSpec())
            assert abs(art.rescale_factor * art.source_length - 200) < 1e-9

    def test_rejects_too_few_points(self):
        with pytest.raises(ValueError):
            render_line(np.array([1.0]), RenderSpec())


class TestStft:
    def test_pure_sine_energy_at_its_frequency(self):
        t = np.arange(200)
        values = np.sin(2 * np.pi * t / 20.0)
        freqs, centers, mag = stft_magnitude(values, window=64, hop=16)
        peak_rows = mag.argmax(axis=0)
        target = 1.0 / 20.0
        bin_width = freqs[1] - freqs[0]
        for row in peak_rows:
            assert abs(freqs[row] - target) <= bin_width + 1e-12

    def test_constant_input_concentrates_in_dc(self):
        _, _, mag = stft_magnitude(np.full(200, 3.0), window=64, hop=16)
        assert np.all(mag.argmax(axis=0) == 0)

    def test_window_longer_than_series_rejected(self):
        with pytest.raises(ValueError):
            stft_magnitude(np.zeros(32), window=64, hop=16)


class TestRenderComposite:
    def test_composite_taller_than_line(self):
        values = np.sin(np.arange(200) / 11.0)
        line = render_line(values, RenderSpec())
        comp = render_composite(values, RenderSpec(style="line+stft"))
        h_line = Image.open(io.BytesIO(line.data)).size[1]
        h_comp = Image.open(io.BytesIO(comp.data)).size[1]
        assert h_comp > h_line

    def test_requires_composite_style(self):
        with pytest.raises(ValueError):
            render_composite(np.zeros(200), RenderSpec(style="line"))

    def test_deterministic(self):
        values = np.cos(np.arange(300) / 5.0)
        spec = RenderSpec(style="line+stft")
        assert render_composite(values, spec).data == render_composite(values, spec).data


class TestRenderSpecValidation:
    def test_canonical_floor(self):
        with pytest.raises(ValueError):
            RenderSpec(canonical_length=8).validate()

    def test_hop_bounded_by_window(self):
        with pytest.raises(ValueError):
            RenderSpec(stft_window=16, stft_hop=32).validate()
