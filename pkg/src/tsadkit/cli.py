"""Command-line entry point: gen, qa, reward, eval, diversity, slice.

Explicit flags override config-file values; every run writes its resolved
config next to its outputs so any artifact is reproducible from its directory
alone. Progress goes to stderr, machine-readable results to files, summary
tables to stdout. Exit codes: 0 success, 1 runtime/IO, 2 usage/validation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .client import (
    ClientError,
    EndpointConfig,
    PartialResultsError,
    empty_responder,
    eval_dataset,
    load_response_log,
    oracle_responder,
)
from .config import GenerationConfig
from .dataset import build_qa, generate_dataset
from .evaluation import WindowPlan, diversity_cdf, load_dataset, load_series_csv, slice_windows
from .render import RenderSpec
from .rewards import RewardConfig, score_jsonl

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load_file_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _resolve_generation(args: argparse.Namespace, file_cfg: dict) -> GenerationConfig:
    cfg = GenerationConfig.from_dict(file_cfg.get("generation", {}))
    if args.length is not None:
        cfg.ts_length = args.length
    if getattr(args, "anomaly_free_prob", None) is not None:
        cfg.anomaly_free_prob = args.anomaly_free_prob
    cfg.validate()
    return cfg


def _resolve_render(args: argparse.Namespace, file_cfg: dict) -> RenderSpec:
    spec = RenderSpec.from_dict(file_cfg.get("render", {})) if file_cfg.get("render") else RenderSpec()
    overrides = {}
    if getattr(args, "canonical", None) is not None:
        overrides["canonical_length"] = args.canonical
    if getattr(args, "style", None) is not None:
        overrides["style"] = args.style
    if overrides:
        d = spec.to_dict()
        d.update(overrides)
        spec = RenderSpec.from_dict(d)
    return spec


def _write_snapshot(out_dir: Path, payload: dict, name: str = "resolved_config.json") -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / name, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _print_counts(title: str, counts: dict[str, int]) -> None:
    print(f"{title:<14}{'count':>8}")
    for key in sorted(counts):
        print(f"{key:<14}{counts[key]:>8d}")


def cmd_gen(args: argparse.Namespace) -> int:
    try:
        file_cfg = _load_file_config(args.config)
        gen_cfg = _resolve_generation(args, file_cfg)
        render_spec = None if args.no_images else _resolve_render(args, file_cfg)
        if args.count < 0:
            raise ValueError("--count must be non-negative")
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        _log(f"invalid configuration: {exc}")
        return EXIT_USAGE
    out_dir = Path(args.out)
    try:
        _write_snapshot(out_dir, {
            "command": "gen",
            "seed": args.seed,
            "count": args.count,
            "workers": args.workers,
            "generation": gen_cfg.to_dict(),
            "render": render_spec.to_dict() if render_spec else None,
        })
        summary = generate_dataset(
            gen_cfg, args.seed, args.count, out_dir,
            render_spec=render_spec, workers=args.workers, write_csv=args.csv,
        )
    except OSError as exc:
        _log(f"I/O failure: {exc}")
        return EXIT_RUNTIME
    _print_counts("anomaly kind", summary["per_kind"])
    _log(f"wrote {summary['count']} items to {summary['out_dir']}")
    return EXIT_OK


def cmd_qa(args: argparse.Namespace) -> int:
    try:
        file_cfg = _load_file_config(args.config)
        render_spec = _resolve_render(args, file_cfg)
        stages = ["describe", "detect"] if args.stage == "both" else [args.stage]
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        _log(f"invalid configuration: {exc}")
        return EXIT_USAGE
    summaries = []
    for stage in stages:
        try:
            summary = build_qa(args.dataset, stage, args.count, render_spec)
        except (FileNotFoundError, ValueError) as exc:
            _log(f"cannot build QA records: {exc}")
            return EXIT_USAGE
        except OSError as exc:
            _log(f"I/O failure: {exc}")
            return EXIT_RUNTIME
        summaries.append(summary)
    _write_snapshot(Path(args.dataset), {
        "command": "qa",
        "stages": stages,
        "count": args.count,
        "render": render_spec.to_dict(),
    }, name="resolved_config.qa.json")
    per_stage: dict[str, int] = {}
    per_kind: dict[str, int] = {}
    for s in summaries:
        for k, v in s.per_stage.items():
            per_stage[k] = per_stage.get(k, 0) + v
        for k, v in s.per_kind.items():
            per_kind[k] = per_kind.get(k, 0) + v
        _log(f"wrote {s.n_records} records to {s.path}")
    _print_counts("stage", per_stage)
    _print_counts("anomaly kind", per_kind)
    return EXIT_OK


def cmd_reward(args: argparse.Namespace) -> int:
    cfg = RewardConfig(negative_reward_enabled=not args.no_negative_reward)
    try:
        infile = open(args.infile, "r", encoding="utf-8")
    except OSError as exc:
        _log(f"cannot read input: {exc}")
        return EXIT_RUNTIME
    rewards = []
    try:
        with infile, open(args.out, "w", encoding="utf-8") as out:
            for components in score_jsonl(infile, cfg):
                out.write(json.dumps(components) + "\n")
                rewards.append(components["reward"])
        _write_snapshot(Path(args.out).parent, {
            "command": "reward",
            "input": str(args.infile),
            "negative_reward_enabled": cfg.negative_reward_enabled,
            "w_f1": cfg.w_f1,
            "w_format": cfg.w_format,
        }, name=Path(args.out).name + ".config.json")
    except OSError as exc:
        _log(f"I/O failure: {exc}")
        return EXIT_RUNTIME
    mean = float(np.mean(rewards)) if rewards else 0.0
    print(f"scored {len(rewards)} responses, mean reward {mean:.4f}")
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    try:
        plan = WindowPlan(
            window=args.window,
            step=args.step,
            resize_factor=args.resize_factor,
            canonical_length=args.canonical,
        )
        plan.validate()
        dataset = load_dataset(args.dataset, tail_fraction=args.test_tail)
    except (ValueError, FileNotFoundError) as exc:
        _log(f"invalid eval setup: {exc}")
        return EXIT_USAGE

    responder = None
    replay = None
    cfg = None
    if args.oracle:
        responder = oracle_responder
    elif args.always_empty:
        responder = empty_responder
    elif args.replay:
        try:
            replay = load_response_log(args.replay)
        except OSError as exc:
            _log(f"cannot read replay log: {exc}")
            return EXIT_RUNTIME
    else:
        if not args.endpoint:
            _log("one of --oracle, --always-empty, --replay, or --endpoint is required")
            return EXIT_USAGE
        cfg = EndpointConfig(
            base_url=args.endpoint,
            model_name=args.model,
            api_key_env=args.api_key_env,
            max_in_flight=args.max_in_flight,
        )

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_snapshot(out_dir, {
        "command": "eval",
        "dataset": str(args.dataset),
        "plan": {"window": plan.window, "step": plan.step,
                 "resize_factor": plan.resize_factor, "canonical": plan.canonical},
        "mode": "oracle" if args.oracle else "empty" if args.always_empty
                else "replay" if args.replay else "live",
    })
    try:
        report = eval_dataset(
            dataset, plan, cfg,
            responder=responder, replay=replay,
            log_path=out_dir / "responses.jsonl" if not args.replay else None,
            failure_budget=args.failure_budget,
        )
    except PartialResultsError as exc:
        _log(f"aborted: {exc} (partial log retained)")
        return EXIT_RUNTIME
    except ClientError as exc:
        _log(f"endpoint failure: {exc}")
        return EXIT_RUNTIME
    with open(out_dir / "report.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"{'metric':<12}{'value':>10}")
    for name, value in (("precision", report.precision), ("recall", report.recall), ("f1", report.f1)):
        print(f"{name:<12}{value:>10.4f}")
    print(f"{'threshold':<12}{report.threshold:>10d}")
    print(f"{'n_windows':<12}{report.n_windows:>10d}")
    return EXIT_OK


def cmd_diversity(args: argparse.Namespace) -> int:
    try:
        dataset = load_dataset(args.dataset)
        series = [d.values for d in dataset]
        points = diversity_cdf(series, n_pairs=args.pairs, seed=args.seed)
    except (ValueError, FileNotFoundError) as exc:
        _log(f"invalid diversity run: {exc}")
        return EXIT_USAGE
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("distance,cumulative_fraction\n")
            for dist, frac in points:
                fh.write(f"{dist!r},{frac!r}\n")
        _write_snapshot(Path(args.out).parent, {
            "command": "diversity",
            "dataset": str(args.dataset),
            "pairs": args.pairs,
            "seed": args.seed,
        }, name=Path(args.out).name + ".config.json")
    except OSError as exc:
        _log(f"I/O failure: {exc}")
        return EXIT_RUNTIME
    print(f"wrote {len(points)} CDF points to {args.out}")
    return EXIT_OK


def cmd_slice(args: argparse.Namespace) -> int:
    try:
        values, labels = load_series_csv(args.series)
        plan = WindowPlan(window=args.window, step=args.step)
        windows = slice_windows(values, labels, plan)
    except (ValueError, FileNotFoundError, OSError) as exc:
        _log(f"invalid slice run: {exc}")
        return EXIT_USAGE
    for _, window_labels, offset in windows:
        anomalous = int(np.sum(np.asarray(window_labels) > 0))
        print(json.dumps({"offset": offset, "window": plan.window, "anomalous_points": anomalous}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tsadkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate labeled series, images, and a manifest")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--length", type=int, default=None)
    p.add_argument("--out", default="dataset")
    p.add_argument("--config", default=None, help="JSON config file; flags win")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--csv", action="store_true", help="also export series as CSV")
    p.add_argument("--no-images", action="store_true")
    p.add_argument("--anomaly-free-prob", type=float, default=None)
    p.add_argument("--canonical", type=int, default=None)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("qa", help="emit stage-tagged QA JSONL from a generated dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--stage", choices=["describe", "detect", "both"], required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--canonical", type=int, default=None)
    p.set_defaults(func=cmd_qa)

    p = sub.add_parser("reward", help="score response JSONL with the verifiable reward")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-negative-reward", action="store_true",
                   help="anomaly-free windows score via plain F1 (always 0)")
    p.set_defaults(func=cmd_reward)

    p = sub.add_parser("eval", help="run the detect pipeline over a dataset directory")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", default="eval-run")
    p.add_argument("--window", type=int, default=200)
    p.add_argument("--step", type=int, default=200)
    p.add_argument("--resize-factor", type=float, default=1.0)
    p.add_argument("--canonical", type=int, default=None)
    p.add_argument("--test-tail", type=float, default=1.0,
                   help="use only the trailing fraction of each series")
    p.add_argument("--oracle", action="store_true", help="ground-truth test double")
    p.add_argument("--always-empty", action="store_true", help="never-flag test double")
    p.add_argument("--replay", default=None, help="persisted responses.jsonl to re-score")
    p.add_argument("--endpoint", default=None, help="chat-completions base URL")
    p.add_argument("--model", default="gpt-4o")
    p.add_argument("--api-key-env", default="TSADKIT_API_KEY")
    p.add_argument("--max-in-flight", type=int, default=4)
    p.add_argument("--failure-budget", type=float, default=0.01)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("diversity", help="DTW distance CDF over a dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--pairs", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="diversity_cdf.csv")
    p.set_defaults(func=cmd_diversity)

    p = sub.add_parser("slice", help="show the window plan over one series CSV")
    p.add_argument("--series", required=True)
    p.add_argument("--window", type=int, default=200)
    p.add_argument("--step", type=int, default=200)
    p.set_defaults(func=cmd_slice)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
