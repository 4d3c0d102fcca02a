"""Question-answer record construction and the dataset manifest.

Stage "describe" teaches chart reading (periodicity, trend, anomalies, noise);
stage "detect" asks for anomalous intervals with a boxed{[[start, end], ...]}
answer in canonical coordinates. Templates are fixed slot-filled strings so a
rebuild from the same seed is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .evaluation import map_intervals
from .generate import Interval, LabeledSeries, SeriesAttributes, SeriesSpec
from .parsing import format_intervals
from .render import ImageArtifact

STAGES = ("describe", "detect")

DESCRIBE_QUESTION = "<image>Given the time series visualization, analyze the time series."
DETECT_QUESTION = (
    "<image>Given the time series visualization, is there any anomaly in the time series? "
    "Output the anomalous intervals.\n"
    "Output Format: boxed{[[start1, end1], [start2, end2], ...]}"
)

_SUBTYPE_PHRASES = {
    "upward": "upward spike",
    "downward": "downward spike",
    "continuous-upward": "continuous upward spike",
    "continuous-downward": "continuous downward spike",
    "upward-convex": "upward convex",
    "downward-convex": "downward convex",
    "rapid-rise-slow-decline": "rapid rise followed by slow decline",
    "slow-rise-rapid-decline": "slow rise followed by rapid decline",
    "sudden-increase": "sudden increase level shift",
    "sudden-decrease": "sudden decrease level shift",
    "increase-after-downward-spike": "increase after a downward spike level shift",
    "decrease-after-upward-spike": "decrease after an upward spike level shift",
    "increase-after-upward-spike": "increase after an upward spike level shift",
    "new-trend-segment": "new trend segment",
    "low-frequency-perturbation": "low-frequency perturbation",
}

_TREND_PHRASES = {"increase": "increasing", "decrease": "decreasing", "steady": "keeping steady"}


@dataclass
class QARecord:
    id: str
    stage: str
    image_path: str
    question: str
    answer: str
    ground_truth: list[Interval]
    attributes: SeriesAttributes
    seed: int = 0
    image: ImageArtifact | None = None  # bytes written by write_manifest when present

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "stage": self.stage,
            "image": self.image_path,
            "question": self.question,
            "answer": self.answer,
            "intervals": [iv.to_dict() for iv in self.ground_truth],
            "attributes": self.attributes.to_dict(),
            "seed": self.seed,
        }


def _fmt(x: float) -> str:
    """Render a measurement with at most one decimal, no trailing zeros."""
    s = f"{x:.1f}"
    return s[:-2] if s.endswith(".0") else s


def subtype_phrase(subtype: str) -> str:
    return _SUBTYPE_PHRASES.get(subtype, subtype.replace("-", " "))


def describe_attributes(spec: SeriesSpec, labeled: LabeledSeries) -> str:
    """Fixed four-part description: periodicity, trend, anomalies, noise."""
    attrs = labeled.attributes
    length = attrs.ts_length

    if spec.seasonal.period <= length / 2:
        periodicity = (
            "The time series shows periodicity: the amplitude of the periodic fluctuation "
            f"between point 0 and point {length} is {_fmt(attrs.amplitude)}, "
            f"the period of the fluctuation is {_fmt(spec.seasonal.period)}."
        )
    else:
        periodicity = "The time series shows no significant periodicity observable within the window."

    trend = f"From the perspective of the slope, the overall trend is {_TREND_PHRASES[spec.trend.kind]}."

    if labeled.intervals:
        clauses = [
            f"There is a {subtype_phrase(iv.subtype)} anomaly between point {iv.start} and point {iv.end}."
            for iv in labeled.intervals
        ]
        anomalies = " ".join(clauses)
    else:
        anomalies = "There are no anomalies in the time series."

    sigma = spec.noise.sigma
    if spec.noise.level == "low":
        noise = (
            f"The overall noise standard deviation is around {sigma:.2g}, very small compared "
            "to the overall change of the curve; the curve is overall smooth with weak noise."
        )
    else:
        noise = (
            f"The overall noise standard deviation is around {sigma:.2g}, large compared "
            "to the overall change of the curve; the curve is visibly rough with strong noise."
        )

    return " ".join([periodicity, trend, anomalies, noise])


def _canonical_intervals(labeled: LabeledSeries, factor: float) -> list[Interval]:
    out = []
    for iv in labeled.intervals:
        (s, e), = map_intervals([(iv.start, iv.end)], factor, "to-canonical")
        out.append(Interval(start=s, end=e, kind=iv.kind, subtype=iv.subtype))
    return out


def make_qa(
    labeled: LabeledSeries,
    image: ImageArtifact,
    stage: str,
    *,
    item_id: str,
    seed: int = 0,
    series_spec: SeriesSpec | None = None,
    image_path: str | None = None,
) -> QARecord:
    """Build one QA record for a rendered series.

    Detect-stage answers carry intervals in canonical (rescaled) coordinates;
    describe-stage answers need the series spec for its generation attributes.
    """
    if stage not in STAGES:
        raise ValueError(f"unknown stage {stage!r}")
    if image.source_length != len(labeled.values):
        raise ValueError(
            f"image rendered from {image.source_length} points but series has {len(labeled.values)}"
        )
    ground_truth = _canonical_intervals(labeled, image.rescale_factor)

    if stage == "detect":
        question = DETECT_QUESTION
        answer = "Final Answer: " + format_intervals([(iv.start, iv.end) for iv in ground_truth])
    else:
        if series_spec is None:
            raise ValueError("describe stage requires the series spec")
        question = DESCRIBE_QUESTION
        answer = describe_attributes(series_spec, labeled)

    return QARecord(
        id=item_id,
        stage=stage,
        image_path=image_path or f"{item_id}.png",
        question=question,
        answer=answer,
        ground_truth=ground_truth,
        attributes=labeled.attributes,
        seed=seed,
        image=image,
    )


@dataclass
class ManifestSummary:
    path: str
    n_records: int
    per_stage: dict[str, int] = field(default_factory=dict)
    per_kind: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "path": self.path,
            "n_records": self.n_records,
            "per_stage": self.per_stage,
            "per_kind": self.per_kind,
        }


def write_manifest(
    records: list[QARecord], out_dir: str | Path, name: str = "manifest.jsonl"
) -> ManifestSummary:
    """Write one JSONL line per record plus any carried image bytes.

    Records are written in the given order (callers order by item index), so
    rebuilds from the same seed are byte-identical regardless of how the
    records were produced.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / name
    per_stage: dict[str, int] = {}
    per_kind: dict[str, int] = {}
    try:
        with open(manifest_path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(json.dumps(rec.to_json_dict()) + "\n")
                per_stage[rec.stage] = per_stage.get(rec.stage, 0) + 1
                if rec.ground_truth:
                    for iv in rec.ground_truth:
                        per_kind[iv.kind] = per_kind.get(iv.kind, 0) + 1
                else:
                    per_kind["none"] = per_kind.get("none", 0) + 1
                if rec.image is not None:
                    image_path = out_dir / rec.image_path
                    image_path.parent.mkdir(parents=True, exist_ok=True)
                    image_path.write_bytes(rec.image.data)
    except OSError as exc:
        raise OSError(f"manifest write failed at {manifest_path}: {exc}") from exc
    return ManifestSummary(
        path=str(manifest_path),
        n_records=len(records),
        per_stage=per_stage,
        per_kind=per_kind,
    )
