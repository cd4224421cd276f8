"""Command-line entry point: ``strcf track|eval|synth|diag``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from PIL import ImageDraw

from . import config as config_mod
from . import evaluation, synth
from .errors import ConfigError, DegenerateBox, ImageDecodeError, SequenceError, StrcfError
from .tracker import TrackerConfig, UpdateMode

EXIT_OK = 0
EXIT_IO = 2
EXIT_CONFIG = 3
EXIT_INTERNAL = 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _threads(n_jobs: int) -> int:
    raw = os.environ.get("STRCF_THREADS", "0").strip() or "0"
    try:
        cap = int(raw)
    except ValueError:
        raise CliError(EXIT_CONFIG, f"STRCF_THREADS must be an integer, got {raw!r}") from None
    if cap < 0:
        raise CliError(EXIT_CONFIG, "STRCF_THREADS must be >= 0")
    if cap == 0:
        cap = os.cpu_count() or 1
    return max(1, min(cap, n_jobs))


def _map(fn, items):
    items = list(items)
    workers = _threads(len(items))
    if workers == 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _load_config(path) -> TrackerConfig:
    if path is None:
        return TrackerConfig()
    try:
        return config_mod.load(path)
    except FileNotFoundError:
        raise CliError(EXIT_CONFIG, f"config file not found: {path}") from None


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _draw_box(draw, box, color):
    x, y, w, h = box
    draw.rectangle([x, y, x + w - 1, y + h - 1], outline=color, width=2)


def _track_one(seq_dir, cfg: TrackerConfig, mode: UpdateMode, out: Path, overlay: bool):
    seq = evaluation.load_sequence(seq_dir)
    stem = f"{seq.name}_{mode.value}"
    on_frame = None
    if overlay:
        overlay_dir = out / f"{stem}_overlay"
        overlay_dir.mkdir(parents=True, exist_ok=True)

        def on_frame(k, img, box):
            im = PILImage.fromarray(img).convert("RGB")
            draw = ImageDraw.Draw(im)
            truth = seq.ground_truth[k - 1]
            if evaluation.box_is_valid(truth):
                _draw_box(draw, truth, (0, 255, 0))
            _draw_box(draw, box, (255, 0, 0))
            im.save(overlay_dir / f"{k:04d}.png")

    records, summary = evaluation.run_ope(seq, cfg, mode, on_frame=on_frame)
    doc = evaluation.result_document(
        seq.name, mode, records, summary, {"config": config_mod.to_mapping(cfg)}
    )
    json_path = out / f"{stem}.json"
    _write_text(json_path, evaluation.dumps(doc))
    _write_text(out / f"{stem}_curve.csv", evaluation.curve_csv(summary))
    return json_path, summary


def cmd_track(args) -> int:
    cfg = _load_config(args.config)
    mode = UpdateMode(args.mode)
    out = Path(args.out)
    results = _map(lambda s: _track_one(s, cfg, mode, out, args.overlay), args.seq)
    for path, summary in results:
        print(f"{path.name}: mean OP {100 * summary.mean_op_at_half:.1f}%  AUC {100 * summary.auc:.1f}%")
    return EXIT_OK


def cmd_eval(args) -> int:
    results = Path(args.results)
    if not results.is_dir():
        raise CliError(EXIT_IO, f"results directory not found: {results}")
    docs = evaluation.load_results(results)
    if not docs:
        raise CliError(EXIT_IO, f"no result files found in {results}")
    summaries = [evaluation.EvalSummary.from_dict(d["summary"]) for d in docs]
    agg = evaluation.aggregate(summaries)
    doc = {
        "sequences": [f"{d['sequence']}_{d['mode']}" for d in docs],
        "summary": agg.to_dict(),
    }
    _write_text(results / "aggregate.json", evaluation.dumps(doc))
    _write_text(results / "aggregate_curve.csv", evaluation.curve_csv(agg))
    print(
        f"sequences: {len(docs)}  mean OP: {100 * agg.mean_op_at_half:.1f}%  "
        f"AUC: {100 * agg.auc:.1f}%  FPS: {agg.fps:.1f}"
    )
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.frames < 2:
        raise CliError(EXIT_CONFIG, "--frames must be at least 2")
    frames = synth.generate(args.kind, args.frames, seed=args.seed)
    try:
        out = synth.write_sequence(frames, args.out)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write sequence: {exc}") from exc
    print(f"wrote {len(frames)} frames to {out}")
    return EXIT_OK


def _parse_mu_list(text: str) -> list[float]:
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise CliError(EXIT_CONFIG, f"--sweep-mu must be comma-separated numbers, got {text!r}") from None
    if not values or any(v < 0 for v in values):
        raise CliError(EXIT_CONFIG, "--sweep-mu needs at least one non-negative value")
    return values


def cmd_diag(args) -> int:
    cfg = _load_config(args.config)
    mus = _parse_mu_list(args.sweep_mu)
    seq = evaluation.load_sequence(args.seq)

    def one(mu):
        return evaluation.variation_series(seq, dataclasses.replace(cfg, admm=cfg.admm.replace(mu=mu)))

    series = _map(one, mus)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["frame", "mu", "variation"])
    for mu, values in zip(mus, series):
        for k, v in enumerate(values, start=1):
            writer.writerow([k, repr(mu), "nan" if np.isnan(v) else f"{v:.12e}"])
    out = Path(args.out) if args.out else Path(args.seq)
    path = out / f"{seq.name}_variation.csv"
    _write_text(path, buf.getvalue())
    for mu, values in zip(mus, series):
        tail = [v for v in values[1:] if not np.isnan(v)]
        mean = float(np.mean(tail)) if tail else float("nan")
        print(f"mu={mu:g}: mean variation {mean:.6e}")
    print(f"wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="strcf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("track", help="run one-pass evaluation on OTB-format sequences")
    p.add_argument("--seq", required=True, action="append", help="sequence directory (repeatable)")
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--mode", choices=[m.value for m in UpdateMode], default="strcf")
    p.add_argument("--overlay", action="store_true", help="write PNG frames with boxes drawn")
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="aggregate per-sequence results")
    p.add_argument("--results", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="render a synthetic OTB-format sequence")
    p.add_argument("--kind", choices=synth.KINDS, required=True)
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("diag", help="temporal filter variation with forced localisation")
    p.add_argument("--seq", required=True)
    p.add_argument("--sweep-mu", default="1,4,16,64")
    p.add_argument("--config")
    p.add_argument("--out", help="output directory (default: the sequence directory)")
    p.set_defaults(func=cmd_diag)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"strcf: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"strcf: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SequenceError, ImageDecodeError, DegenerateBox, OSError) as exc:
        print(f"strcf: {exc}", file=sys.stderr)
        return EXIT_IO
    except StrcfError as exc:
        print(f"strcf: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
