"""Deterministic chart rendering: fixed-size line charts and line+STFT composites.

Rasterization is an in-process Pillow routine drawing into palette images with
the embedded default font, so identical inputs produce byte-identical PNGs on
every platform. Index rescaling moves x positions only; y values are the
z-scored signal, never resampled.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageDraw, ImageFont

STYLES = ("line", "line+stft")

# Fixed palette: 0 white, 1 black, 2 polyline, 3 grid, 16..255 spectrogram ramp.
_WHITE, _BLACK, _LINE, _GRID = 0, 1, 2, 3
_RAMP_BASE, _RAMP_SIZE = 16, 240

_MARGIN_LEFT, _MARGIN_RIGHT, _MARGIN_TOP, _MARGIN_BOTTOM = 55, 15, 12, 30


def _palette() -> list[int]:
    pal = [255, 255, 255] * 256
    pal[_BLACK * 3:_BLACK * 3 + 3] = [0, 0, 0]
    pal[_LINE * 3:_LINE * 3 + 3] = [28, 52, 116]
    pal[_GRID * 3:_GRID * 3 + 3] = [221, 221, 221]
    for i in range(_RAMP_SIZE):
        v = 255 - round(i * 255 / (_RAMP_SIZE - 1))  # low energy white, high energy black
        idx = (_RAMP_BASE + i) * 3
        pal[idx:idx + 3] = [v, v, v]
    return pal

_PALETTE = _palette()
_FONT = ImageFont.load_default()


@dataclass(frozen=True)
class RenderSpec:
    canonical_length: int = 200
    image_width: int = 800
    image_height: int = 400
    style: str = "line"
    stft_window: int = 64
    stft_hop: int = 16

    def validate(self) -> None:
        if self.canonical_length < 16:
            raise ValueError("canonical_length must be >= 16")
        if self.image_width < 64 or self.image_height < 64:
            raise ValueError("image dimensions too small")
        if self.style not in STYLES:
            raise ValueError(f"unknown style {self.style!r}")
        if self.stft_window < 2 or self.stft_hop < 1:
            raise ValueError("stft_window must be >= 2 and stft_hop >= 1")
        if self.stft_hop > self.stft_window:
            raise ValueError("stft_hop must not exceed stft_window")

    def to_dict(self) -> dict:
        return {
            "canonical_length": self.canonical_length,
            "image_width": self.image_width,
            "image_height": self.image_height,
            "style": self.style,
            "stft_window": self.stft_window,
            "stft_hop": self.stft_hop,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RenderSpec":
        spec = cls(**d)
        spec.validate()
        return spec


@dataclass(frozen=True)
class ImageArtifact:
    data: bytes
    source_length: int
    canonical_length: int

    @property
    def rescale_factor(self) -> float:
        return self.canonical_length / self.source_length


def zscore(values: np.ndarray) -> np.ndarray:
    """Standardize to mean 0, std 1; constant input maps to all zeros."""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise ValueError("zscore requires at least 2 values")
    std = float(values.std())
    if std < 1e-12:
        return np.zeros_like(values)
    return (values - values.mean()) / std


def line_points(values: np.ndarray, spec: RenderSpec) -> tuple[np.ndarray, np.ndarray]:
    """The exact (x, y) pairs the polyline is drawn through.

    x[i] = i * canonical_length / source_length; y is the z-scored input,
    untouched. Exposed separately so the no-resampling contract is assertable
    before rasterization.
    """
    values = np.asarray(values, dtype=float)
    factor = spec.canonical_length / len(values)
    return np.arange(len(values), dtype=float) * factor, zscore(values)


def _ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    return [lo + (hi - lo) * k / (count - 1) for k in range(count)]


def _fmt_tick(v: float) -> str:
    return f"{v:.0f}" if abs(v - round(v)) < 1e-9 else f"{v:.1f}"


class _Panel:
    """Pixel mapping for one plot rectangle in shared canonical-x coordinates."""

    def __init__(self, origin_y: int, width: int, height: int, x_max: float,
                 y_lo: float, y_hi: float):
        self.left = _MARGIN_LEFT
        self.right = width - _MARGIN_RIGHT
        self.top = origin_y + _MARGIN_TOP
        self.bottom = origin_y + height - _MARGIN_BOTTOM
        self.x_max = x_max
        pad = 0.05 * (y_hi - y_lo) if y_hi > y_lo else 1.0
        self.y_lo = y_lo - pad
        self.y_hi = y_hi + pad

    def px(self, x: float) -> float:
        return self.left + (x / self.x_max) * (self.right - self.left)

    def py(self, y: float) -> float:
        frac = (y - self.y_lo) / (self.y_hi - self.y_lo)
        return self.bottom - frac * (self.bottom - self.top)

    def draw_frame(self, d: ImageDraw.ImageDraw, x_label: bool = True) -> None:
        for xv in _ticks(0.0, self.x_max):
            px = self.px(xv)
            d.line([(px, self.top), (px, self.bottom)], fill=_GRID)
            if x_label:
                d.text((px - 8, self.bottom + 4), _fmt_tick(xv), fill=_BLACK, font=_FONT)
        for yv in _ticks(self.y_lo, self.y_hi):
            py = self.py(yv)
            d.line([(self.left, py), (self.right, py)], fill=_GRID)
            d.text((4, py - 5), _fmt_tick(yv), fill=_BLACK, font=_FONT)
        d.rectangle([self.left, self.top, self.right, self.bottom], outline=_BLACK)


def _new_canvas(width: int, height: int) -> tuple[Image.Image, ImageDraw.ImageDraw]:
    img = Image.new("P", (width, height), _WHITE)
    img.putpalette(_PALETTE)
    return img, ImageDraw.Draw(img)


def _encode(img: Image.Image) -> bytes:
    buf = io.BytesIO()
    try:
        img.save(buf, format="PNG", optimize=False, compress_level=6)
    except OSError as exc:
        raise OSError(f"PNG encode failed: {exc}") from exc
    return buf.getvalue()


def _draw_line_panel(d: ImageDraw.ImageDraw, panel: _Panel, xs: np.ndarray, ys: np.ndarray) -> None:
    panel.draw_frame(d)
    pts = [(panel.px(float(x)), panel.py(float(y))) for x, y in zip(xs, ys)]
    d.line(pts, fill=_LINE, width=2)


def render_line(values: np.ndarray, spec: RenderSpec) -> ImageArtifact:
    """Render the z-scored series as a single-polyline chart."""
    spec.validate()
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise ValueError("render_line requires at least 2 values")
    xs, ys = line_points(values, spec)
    img, d = _new_canvas(spec.image_width, spec.image_height)
    panel = _Panel(0, spec.image_width, spec.image_height, float(spec.canonical_length),
                   float(ys.min()), float(ys.max()))
    _draw_line_panel(d, panel, xs, ys)
    return ImageArtifact(data=_encode(img), source_length=len(values),
                         canonical_length=spec.canonical_length)


def stft_magnitude(values: np.ndarray, window: int, hop: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Hann-tapered short-time Fourier magnitude.

    Returns (normalized frequencies, frame center indices, magnitude matrix of
    shape [n_bins, n_frames]).
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    if window > n:
        raise ValueError(f"stft window {window} longer than series of length {n}")
    if hop < 1 or hop > window:
        raise ValueError("hop must be in [1, window]")
    taper = np.hanning(window)
    offsets = np.arange(0, n - window + 1, hop)
    frames = np.stack([values[o:o + window] * taper for o in offsets])
    mag = np.abs(np.fft.rfft(frames, axis=1)).T
    freqs = np.arange(mag.shape[0], dtype=float) / window
    centers = offsets + (window - 1) / 2.0
    return freqs, centers, mag


def render_composite(values: np.ndarray, spec: RenderSpec) -> ImageArtifact:
    """Render a line chart stacked over its STFT spectrogram on a shared x axis."""
    spec.validate()
    if spec.style != "line+stft":
        raise ValueError("render_composite requires style 'line+stft'")
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        raise ValueError("render_composite requires at least 2 values")
    ys_all = zscore(values)
    _, centers, mag = stft_magnitude(ys_all, spec.stft_window, spec.stft_hop)
    xs, ys = line_points(values, spec)

    width, panel_h = spec.image_width, spec.image_height
    img, d = _new_canvas(width, 2 * panel_h)

    top = _Panel(0, width, panel_h, float(spec.canonical_length), float(ys.min()), float(ys.max()))
    _draw_line_panel(d, top, xs, ys)

    n_bins, n_frames = mag.shape
    bottom = _Panel(panel_h, width, panel_h, float(spec.canonical_length), 0.0, float(n_bins))
    peak = float(mag.max())
    factor = spec.canonical_length / len(values)
    half = spec.stft_hop / 2.0
    for k in range(n_frames):
        x0 = bottom.px(max(0.0, (centers[k] - half) * factor))
        x1 = bottom.px(min(float(spec.canonical_length), (centers[k] + half) * factor))
        for b in range(n_bins):
            level = mag[b, k] / peak if peak > 0 else 0.0
            color = _RAMP_BASE + round(level * (_RAMP_SIZE - 1))
            y0 = bottom.py(float(b + 1))
            y1 = bottom.py(float(b))
            d.rectangle([x0, y0, x1, y1], fill=color)
    bottom.draw_frame(d)

    return ImageArtifact(data=_encode(img), source_length=len(values),
                         canonical_length=spec.canonical_length)


def render(values: np.ndarray, spec: RenderSpec) -> ImageArtifact:
    """Dispatch on spec.style."""
    if spec.style == "line+stft":
        return render_composite(values, spec)
    return render_line(values, spec)
