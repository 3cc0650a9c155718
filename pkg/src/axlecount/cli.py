"""Command line: ``axlecount {simulate,count,evaluate,plot}``.

Exit codes: 0 success, 1 usage error, 2 data or I/O error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from typing import List, Optional, Sequence, Tuple

from .association import DEFAULT_TIRE_IOU_THRESHOLD
from .detections import StreamError, iter_stream, write_stream
from .pipeline import (PipelineConfig, evaluate, merge_metrics, results_from_jsonl,
                       results_to_jsonl, run)
from .simulator import DIFFICULTIES, GroundTruth, Scenario, build_suite, generate, with_noise
from .tracker import TrackerConfig
from .trax import TraxParams

log = logging.getLogger("axlecount")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

STREAM_SUFFIX = ".stream.jsonl"
TRUTH_SUFFIX = ".truth.json"
SCENARIO_SUFFIX = ".scenario.json"
RESULTS_SUFFIX = ".results.jsonl"


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of a run. Precedence: command-line flag > config file > default."""

    c: float = TraxParams.c
    match_window: float = TraxParams.match_window
    max_gap: int = TraxParams.max_gap
    min_track_len: int = TraxParams.min_track_len
    iou_gate: float = TrackerConfig.iou_gate
    min_hits: int = TrackerConfig.min_hits
    max_age: int = TrackerConfig.max_age
    tire_iou_threshold: float = DEFAULT_TIRE_IOU_THRESHOLD
    motion_window: int = 5
    min_motion: float = 1.0
    frame_width: float = 1280.0
    frame_height: float = 720.0
    seed: int = 0

    def pipeline(self) -> PipelineConfig:
        return PipelineConfig(
            tracker=TrackerConfig(self.iou_gate, self.min_hits, self.max_age),
            trax=TraxParams(self.c, self.match_window, self.max_gap, self.min_track_len),
            tire_iou_threshold=self.tire_iou_threshold,
            motion_window=self.motion_window, min_motion=self.min_motion,
            frame_width=self.frame_width, frame_height=self.frame_height)


def load_config(path: Optional[str], overrides: dict) -> RunConfig:
    cfg = RunConfig()
    known = {f.name: f.type for f in fields(RunConfig)}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise DataError(f"{path}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from None
        if not isinstance(data, dict):
            raise DataError(f"{path}: config must be a JSON object")
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise DataError(f"{path}: unknown config keys {unknown}")
        cfg = replace(cfg, **data)
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    try:
        cfg.pipeline()
    except (TypeError, ValueError) as exc:
        raise DataError(f"invalid configuration: {exc}") from None
    return cfg


def _write_text(path: str, text: str) -> None:
    try:
        d = os.path.dirname(path)
        if d:
            os.makedirs(d, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args, cfg: RunConfig) -> int:
    if args.difficulty not in DIFFICULTIES:
        raise UsageError(f"--difficulty must be one of {', '.join(DIFFICULTIES)}")
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    noisy = args.pos_sigma or args.dropout or args.fp_rate or args.occluders
    written = []
    for i, scenario in enumerate(build_suite(args.difficulty, args.n, cfg.seed)):
        if noisy:
            scenario = with_noise(scenario, args.pos_sigma, args.dropout, args.fp_rate, args.occluders)
        frames, truth = generate(scenario)
        stem = os.path.join(args.out, f"{args.difficulty}_{i:04d}")
        _write_text(stem + SCENARIO_SUFFIX, _dump_json(scenario.to_dict()))
        _write_text(stem + STREAM_SUFFIX, write_stream(frames))
        _write_text(stem + TRUTH_SUFFIX, _dump_json(truth.to_dict()))
        written.append(stem)
    print(f"wrote {len(written)} scenario(s) to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# count


def _stem(path: str, suffix: str) -> str:
    base = os.path.basename(path)
    if base.endswith(suffix):
        return base[: -len(suffix)]
    return os.path.splitext(base)[0]


def _expand(paths: Sequence[str], suffix: str) -> List[str]:
    out = []
    for p in paths:
        if os.path.isdir(p):
            out.extend(sorted(os.path.join(p, f) for f in os.listdir(p) if f.endswith(suffix)))
        else:
            out.append(p)
    return out


def count_stream(path: str, config: PipelineConfig) -> str:
    """Run the pipeline over one stream file and return the results text."""
    try:
        with open(path, encoding="utf-8") as fh:
            results = run(iter_stream(fh), config)
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None
    except StreamError as exc:
        raise DataError(f"{path}: {exc}") from None
    return results_to_jsonl(results)


def cmd_count(args, cfg: RunConfig) -> int:
    streams = _expand(args.streams, STREAM_SUFFIX)
    if not streams:
        raise UsageError("no input streams")
    config = cfg.pipeline()
    single = len(streams) == 1 and not (args.out and os.path.isdir(args.out))

    if args.jobs > 1 and len(streams) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            texts = list(pool.map(count_stream, streams, [config] * len(streams)))
    else:
        texts = [count_stream(p, config) for p in streams]

    if single:
        if args.out:
            _write_text(args.out, texts[0])
        else:
            sys.stdout.write(texts[0])
        return EXIT_OK
    out_dir = args.out or "."
    for path, text in zip(streams, texts):
        _write_text(os.path.join(out_dir, _stem(path, STREAM_SUFFIX) + RESULTS_SUFFIX), text)
    print(f"wrote {len(texts)} result file(s) to {out_dir}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# evaluate


def _pairs(results_arg: str, truth_arg: str) -> Tuple[List[Tuple[Optional[str], str]], List[str]]:
    if os.path.isdir(truth_arg):
        truths = _expand([truth_arg], TRUTH_SUFFIX)
        if os.path.isdir(results_arg):
            by_stem = {_stem(p, RESULTS_SUFFIX): p for p in _expand([results_arg], RESULTS_SUFFIX)}
        else:
            by_stem = {_stem(results_arg, RESULTS_SUFFIX): results_arg}
        pairs = [(by_stem.pop(_stem(t, TRUTH_SUFFIX), None), t) for t in truths]
        extra = sorted(by_stem.values())
        return pairs, extra
    if os.path.isdir(results_arg):
        raise UsageError("results is a directory but truth is a single file")
    return [(results_arg, truth_arg)], []


def format_table(metrics: dict) -> str:
    lines = [f"{'Test Set':<10}{'N':>6}{'Mode':>9}{'TRAX':>9}"]
    for name, rec in list(metrics["tiers"].items()) + [("overall", metrics["overall"])]:
        lines.append(f"{name:<10}{rec['n']:>6}{rec['mode_accuracy']:>9.3f}{rec['trax_accuracy']:>9.3f}")
    return "\n".join(lines)


def cmd_evaluate(args, cfg: RunConfig) -> int:
    pairs, extra = _pairs(args.results, args.truth)
    records, warnings = [], []
    for res_path, truth_path in pairs:
        try:
            truth = GroundTruth.from_dict(json.loads(_read_text(truth_path)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{truth_path}: bad ground truth ({exc})") from None
        if res_path is None:
            warnings.append(f"{truth_path}: no results file")
            results = []
        else:
            try:
                results = results_from_jsonl(_read_text(res_path))
            except StreamError as exc:
                raise DataError(f"{res_path}: {exc}") from None
        rec = evaluate(results, truth)
        tag = _stem(truth_path, TRUTH_SUFFIX)
        for row in rec["rows"]:
            row["source"] = tag
        rec["flags"] = [f"{tag}: {f}" for f in rec["flags"]]
        records.append(rec)
    for path in extra:
        warnings.append(f"{path}: no ground truth")

    metrics = merge_metrics(records)
    metrics["flags"] = warnings + metrics["flags"]
    print(format_table(metrics))
    for w in metrics["flags"]:
        log.warning(w)
    if args.out:
        _write_text(args.out, _dump_json(metrics))
    if args.csv:
        _write_rows(args.csv, metrics["rows"])
    if args.figure:
        from .plotting import plot_accuracy
        plot_accuracy(metrics, args.figure)
    return EXIT_OK


def _write_rows(path: str, rows: List[dict]) -> None:
    cols = ["source", "vehicle_id", "difficulty", "true_axles", "track_id",
            "mode_axles", "trax_axles", "mode_correct", "trax_correct"]
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None


# ---------------------------------------------------------------------------
# plot


def cmd_plot(args, cfg: RunConfig) -> int:
    if args.track_id is None:
        raise UsageError("--track-id is required")
    if not args.out:
        raise UsageError("--out is required")
    try:
        results = results_from_jsonl(_read_text(args.results))
    except StreamError as exc:
        raise DataError(f"{args.results}: {exc}") from None
    target = None
    for r in results:
        target = r.find(args.track_id)
        if target is not None:
            break
    if target is None:
        raise DataError(f"{args.results}: no track {args.track_id}")
    from .plotting import plot_projection
    drawn = plot_projection(target, args.out)
    print(f"track {args.track_id}: {drawn['accepted']} axle track(s), "
          f"{drawn['discarded_points']} discarded point(s) -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("run configuration (overrides --config)")
    g.add_argument("--config", help="JSON file with RunConfig fields")
    g.add_argument("--c", type=float, help="inverse-transform scale")
    g.add_argument("--match-window", type=float, help="match window as a fraction of the z spread")
    g.add_argument("--max-gap", type=int, help="frames a tire track may skip")
    g.add_argument("--min-track-len", type=int, help="points needed to accept a tire track")
    g.add_argument("--iou-gate", type=float, help="vehicle tracker IoU gate")
    g.add_argument("--min-hits", type=int, help="matches before a vehicle track is confirmed")
    g.add_argument("--max-age", type=int, help="missed frames before a vehicle track ends")
    g.add_argument("--tire-iou-threshold", type=float, help="minimum tire/vehicle IoU")
    g.add_argument("--frame-width", type=float)
    g.add_argument("--frame-height", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="axlecount", description="Axle counting from vehicle and tire detections.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("simulate", help="write synthetic scenarios, streams and ground truth")
    p.add_argument("--difficulty", required=True, help="easy, medium or hard")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--pos-sigma", type=float, default=0.0)
    p.add_argument("--dropout", type=float, default=0.0)
    p.add_argument("--fp-rate", type=float, default=0.0)
    p.add_argument("--occluders", type=int, default=0)
    p.add_argument("--config", help="JSON file with RunConfig fields")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("count", help="count axles in detection streams")
    p.add_argument("streams", nargs="+", help="stream files or directories of *.stream.jsonl")
    p.add_argument("--out", help="results file (one stream) or directory")
    p.add_argument("--jobs", type=int, default=1, help="streams processed in parallel")
    _add_config_flags(p)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("evaluate", help="score results against ground truth")
    p.add_argument("results", help="results file or directory")
    p.add_argument("truth", help="truth file or directory")
    p.add_argument("--out", help="metrics JSON")
    p.add_argument("--csv", help="per-vehicle rows as CSV")
    p.add_argument("--figure", help="accuracy bar chart (SVG)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("plot", help="render the projected tire tracks of one vehicle (SVG)")
    p.add_argument("results", help="results file")
    p.add_argument("--track-id", type=int)
    p.add_argument("--out", help="output SVG")
    p.set_defaults(func=cmd_plot)
    return parser


_OVERRIDES = ("c", "match_window", "max_gap", "min_track_len", "iou_gate", "min_hits",
              "max_age", "tire_iou_threshold", "frame_width", "frame_height", "seed")


def main(argv: Sequence[str] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        overrides = {k: getattr(args, k, None) for k in _OVERRIDES}
        cfg = load_config(getattr(args, "config", None), overrides)
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"axlecount: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"axlecount: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
