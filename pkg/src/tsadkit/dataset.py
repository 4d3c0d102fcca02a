"""Dataset builds: generate labeled series with images, then derive QA files.

Items are pure functions of (master_seed, index, config), so generation can
run on any number of workers and still write identical bytes; the manifest is
always assembled in index order by a single writer.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .config import GenerationConfig
from .generate import LabeledSeries, SeriesSpec, compose_series, realize_series
from .qa import QARecord, ManifestSummary, make_qa, write_manifest
from .render import ImageArtifact, RenderSpec, render

GEN_MANIFEST = "manifest.jsonl"
IMAGES_DIR = "images"
SERIES_DIR = "series"


def item_name(index: int) -> str:
    return f"item-{index:06d}"


def _build_item(
    master_seed: int,
    index: int,
    config: GenerationConfig,
    render_spec: RenderSpec | None,
) -> tuple[int, SeriesSpec, LabeledSeries, bytes | None]:
    spec, labeled = compose_series(master_seed, index, config)
    png = render(labeled.values, render_spec).data if render_spec is not None else None
    return index, spec, labeled, png


def generate_dataset(
    config: GenerationConfig,
    master_seed: int,
    count: int,
    out_dir: str | Path,
    render_spec: RenderSpec | None = RenderSpec(),
    workers: int = 1,
    write_csv: bool = False,
) -> dict:
    """Write `count` labeled series (manifest + images + optional CSVs).

    Returns per-kind counts. Pass render_spec=None to skip images.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    config.validate()
    if render_spec is not None:
        render_spec.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if render_spec is not None:
        (out_dir / IMAGES_DIR).mkdir(exist_ok=True)
    if write_csv:
        (out_dir / SERIES_DIR).mkdir(exist_ok=True)

    indices = range(count)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            items = list(pool.map(
                lambda i: _build_item(master_seed, i, config, render_spec), indices
            ))
        items.sort(key=lambda item: item[0])
    else:
        items = [_build_item(master_seed, i, config, render_spec) for i in indices]

    per_kind: dict[str, int] = {}
    with open(out_dir / GEN_MANIFEST, "w", encoding="utf-8") as fh:
        for index, spec, labeled, png in items:
            name = item_name(index)
            if png is not None:
                (out_dir / IMAGES_DIR / f"{name}.png").write_bytes(png)
            if write_csv:
                _write_series_csv(out_dir / SERIES_DIR / f"{name}.csv", labeled)
            if labeled.intervals:
                for iv in labeled.intervals:
                    per_kind[iv.kind] = per_kind.get(iv.kind, 0) + 1
            else:
                per_kind["none"] = per_kind.get("none", 0) + 1
            record = {
                "id": name,
                "index": index,
                "seed": spec.seed,
                "spec": spec.to_dict(),
                "intervals": [iv.to_dict() for iv in labeled.intervals],
                "attributes": labeled.attributes.to_dict(),
            }
            fh.write(json.dumps(record) + "\n")

    return {"count": count, "per_kind": per_kind, "out_dir": str(out_dir)}


def _write_series_csv(path: Path, labeled: LabeledSeries) -> None:
    mask = labeled.label_mask()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("value,label\n")
        for v, lab in zip(labeled.values, mask):
            fh.write(f"{float(v)!r},{int(lab)}\n")


def read_gen_manifest(gen_dir: str | Path) -> list[dict]:
    path = Path(gen_dir) / GEN_MANIFEST
    if not path.is_file():
        raise FileNotFoundError(f"no generation manifest at {path}")
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records


def build_qa_records(
    gen_dir: str | Path,
    stage: str,
    count: int,
    render_spec: RenderSpec = RenderSpec(),
) -> list[QARecord]:
    """Derive QA records for the first `count` generated items.

    Series are regenerated from their stored specs (bit-identical by
    contract); existing PNG bytes are reused when the generation run rendered
    images, otherwise the chart is rendered here.
    """
    gen_dir = Path(gen_dir)
    entries = read_gen_manifest(gen_dir)
    if count > len(entries):
        raise ValueError(f"requested {count} items but dataset holds {len(entries)}")
    records: list[QARecord] = []
    for entry in entries[:count]:
        spec = SeriesSpec.from_dict(entry["spec"])
        labeled = realize_series(spec)
        image_rel = f"{IMAGES_DIR}/{entry['id']}.png"
        png_path = gen_dir / image_rel
        if png_path.is_file():
            image = ImageArtifact(
                data=png_path.read_bytes(),
                source_length=spec.ts_length,
                canonical_length=render_spec.canonical_length,
            )
            carry_bytes = False
        else:
            image = render(labeled.values, render_spec)
            carry_bytes = True
        record = make_qa(
            labeled,
            image,
            stage,
            item_id=f"{stage}-{entry['id']}",
            seed=spec.seed,
            series_spec=spec,
            image_path=image_rel,
        )
        if not carry_bytes:
            record.image = None  # image already on disk next to the manifest
        records.append(record)
    return records


def build_qa(
    gen_dir: str | Path,
    stage: str,
    count: int,
    render_spec: RenderSpec = RenderSpec(),
    name: str | None = None,
) -> ManifestSummary:
    records = build_qa_records(gen_dir, stage, count, render_spec)
    return write_manifest(records, gen_dir, name=name or f"qa_{stage}.jsonl")
