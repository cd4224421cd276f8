"""OTB-format sequence loading and one-pass evaluation (OPE) metrics."""

from __future__ import annotations

import csv
import io
import json
import math
import re
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateBox, EmptyInput, FrameCountMismatch, MissingGroundTruth, ParseError
from .features import Region, load_image
from .tracker import TrackerConfig, UpdateMode, init, step

THRESHOLDS = np.round(np.linspace(0.0, 1.0, 21), 2)
FRAME_SUFFIXES = (".jpg", ".jpeg", ".png")
GT_NAME = "groundtruth_rect.txt"
_SPLIT = re.compile(r"[,\s]+")


def iou(a, b) -> float:
    """Intersection over union of two ``(x, y, w, h)`` boxes."""
    ax, ay, aw, ah = (float(v) for v in a)
    bx, by, bw, bh = (float(v) for v in b)
    if not (aw > 0 and ah > 0 and bw > 0 and bh > 0):
        raise DegenerateBox(f"boxes need positive extent: {a}, {b}")
    iw = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    ih = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = iw * ih
    return inter / (aw * ah + bw * bh - inter)


def box_is_valid(box) -> bool:
    return all(math.isfinite(v) for v in box) and box[2] > 0 and box[3] > 0


@dataclass
class Sequence:
    """An OTB sequence; ``ground_truth`` boxes are 0-indexed ``(x, y, w, h)``."""

    name: str
    frame_paths: list[Path]
    ground_truth: list[tuple[float, float, float, float]]

    def __post_init__(self):
        if len(self.frame_paths) != len(self.ground_truth):
            raise FrameCountMismatch(
                f"{self.name}: {len(self.frame_paths)} frames but {len(self.ground_truth)} boxes"
            )

    def __len__(self):
        return len(self.frame_paths)


def parse_ground_truth(text: str, path="<string>") -> list[tuple[float, float, float, float]]:
    boxes = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = [p for p in _SPLIT.split(line) if p]
        try:
            values = tuple(float(p) for p in parts)
        except ValueError:
            raise ParseError(path, lineno, raw) from None
        if len(values) != 4:
            raise ParseError(path, lineno, raw)
        boxes.append(values)
    return boxes


def load_sequence(directory) -> Sequence:
    """Read ``img/`` frames and ``groundtruth_rect.txt`` from an OTB directory.

    Ground-truth coordinates in the file are 1-indexed and are shifted to
    0-indexed here.
    """
    directory = Path(directory)
    gt_path = directory / GT_NAME
    if not gt_path.is_file():
        raise MissingGroundTruth(f"missing ground truth file {gt_path}")
    img_dir = directory / "img"
    if not img_dir.is_dir():
        raise FileNotFoundError(f"missing frame directory {img_dir}")
    frames = sorted(p for p in img_dir.iterdir() if p.suffix.lower() in FRAME_SUFFIXES)
    boxes = parse_ground_truth(gt_path.read_text(), gt_path)
    boxes = [(x - 1, y - 1, w, h) for x, y, w, h in boxes]
    return Sequence(directory.name, frames, boxes)


@dataclass
class EvalRecord:
    frame: int  # 1-based frame number
    predicted: tuple[float, float, float, float]
    truth: tuple[float, float, float, float]
    iou: float | None  # None where the ground truth is invalid


@dataclass
class EvalSummary:
    mean_op_at_half: float
    success_curve: list[float]
    auc: float
    fps: float
    frames: int = 0  # frames scored
    step_frames: int = 0  # frames passed through step()
    step_seconds: float = 0.0

    def to_dict(self) -> dict:
        return {
            "mean_op_at_half": self.mean_op_at_half,
            "success_curve": list(self.success_curve),
            "thresholds": [float(t) for t in THRESHOLDS],
            "auc": self.auc,
            "fps": self.fps,
            "frames": self.frames,
            "step_frames": self.step_frames,
            "step_seconds": self.step_seconds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvalSummary":
        return cls(
            mean_op_at_half=float(d["mean_op_at_half"]),
            success_curve=[float(v) for v in d["success_curve"]],
            auc=float(d["auc"]),
            fps=float(d["fps"]),
            frames=int(d.get("frames", 0)),
            step_frames=int(d.get("step_frames", 0)),
            step_seconds=float(d.get("step_seconds", 0.0)),
        )


def summarize(records: list[EvalRecord], step_frames: int = 0, step_seconds: float = 0.0) -> EvalSummary:
    """Success curve with strict ``IoU > threshold`` at 21 thresholds."""
    scores = np.array([r.iou for r in records if r.iou is not None], dtype=np.float64)
    if scores.size:
        curve = [float(np.count_nonzero(scores > t)) / scores.size for t in THRESHOLDS]
    else:
        curve = [0.0] * len(THRESHOLDS)
    fps = step_frames / step_seconds if step_seconds > 0 else 0.0
    return EvalSummary(
        mean_op_at_half=curve[10],
        success_curve=curve,
        auc=float(sum(curve) / len(curve)),
        fps=fps,
        frames=int(scores.size),
        step_frames=step_frames,
        step_seconds=step_seconds,
    )


def score(predicted, truth) -> list[EvalRecord]:
    records = []
    for k, (p, t) in enumerate(zip(predicted, truth), start=1):
        value = iou(p, t) if box_is_valid(t) and box_is_valid(p) else None
        records.append(EvalRecord(k, tuple(p), tuple(t), value))
    return records


def run_ope(seq: Sequence, cfg: TrackerConfig = TrackerConfig(), mode=UpdateMode.STRCF, on_frame=None):
    """Initialise on frame 1 with the ground truth and track to the end.

    ``on_frame(index, image, predicted_box)`` is called for every frame
    (used for overlays). Returns ``(records, summary)``.
    """
    if len(seq) == 0:
        raise EmptyInput(f"sequence {seq.name} has no frames")
    first = seq.ground_truth[0]
    if not box_is_valid(first):
        raise DegenerateBox(f"{seq.name}: first-frame ground truth {first} is invalid")
    img = load_image(seq.frame_paths[0])
    state = init(img, Region.from_box(first), cfg)
    predicted = [tuple(float(v) for v in first)]
    if on_frame is not None:
        on_frame(1, img, predicted[0])

    elapsed = 0.0
    for k, path in enumerate(seq.frame_paths[1:], start=2):
        img = load_image(path)
        t0 = time.perf_counter()
        state, region = step(state, img, mode)
        elapsed += time.perf_counter() - t0
        box = tuple(float(v) for v in region.to_box())
        predicted.append(box)
        if on_frame is not None:
            on_frame(k, img, box)

    records = score(predicted, seq.ground_truth)
    return records, summarize(records, len(seq) - 1, elapsed)


def variation_series(seq: Sequence, cfg: TrackerConfig, mode=UpdateMode.STRCF) -> list[float]:
    """Temporal filter variation per frame with localisation forced to the ground truth.

    Frame 1 has no predecessor and reports NaN. Frames with invalid ground
    truth keep the previous position.
    """
    img = load_image(seq.frame_paths[0])
    state = init(img, Region.from_box(seq.ground_truth[0]), cfg)
    series = [float("nan")]
    last = Region.from_box(seq.ground_truth[0])
    for path, box in zip(seq.frame_paths[1:], seq.ground_truth[1:]):
        if box_is_valid(box):
            last = Region.from_box(box)
        state, _ = step(state, load_image(path), mode, truth=last)
        series.append(state.last_variation)
    return series


def aggregate(summaries: list[EvalSummary]) -> EvalSummary:
    """Unweighted per-sequence means; fps is total frames over total time."""
    if not summaries:
        raise EmptyInput("no summaries to aggregate")
    # fsum keeps the result independent of input order
    n = len(summaries)
    curve = [math.fsum(col) / n for col in zip(*(s.success_curve for s in summaries))]
    frames = sum(s.step_frames for s in summaries)
    seconds = math.fsum(s.step_seconds for s in summaries)
    return EvalSummary(
        mean_op_at_half=math.fsum(s.mean_op_at_half for s in summaries) / n,
        success_curve=curve,
        auc=math.fsum(s.auc for s in summaries) / n,
        fps=frames / seconds if seconds > 0 else 0.0,
        frames=sum(s.frames for s in summaries),
        step_frames=frames,
        step_seconds=seconds,
    )


# --- result files ------------------------------------------------------------


def _one_indexed(box):
    x, y, w, h = box
    return [x + 1, y + 1, w, h]


def result_document(name: str, mode, records, summary: EvalSummary, extra: dict | None = None) -> dict:
    """JSON-ready per-sequence result; boxes are written 1-indexed like OTB."""
    doc = {
        "sequence": name,
        "mode": UpdateMode(mode).value,
        "summary": summary.to_dict(),
        "records": [
            {
                "frame": r.frame,
                "predicted": _one_indexed(r.predicted),
                "truth": _one_indexed(r.truth),
                "iou": r.iou,
            }
            for r in records
        ],
    }
    if extra:
        doc.update(extra)
    return doc


def curve_csv(summary: EvalSummary) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["threshold", "value"])
    for t, v in zip(THRESHOLDS, summary.success_curve):
        writer.writerow([f"{t:.6f}", f"{v:.6f}"])
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o)}")


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


RESULT_KEYS = {"sequence", "mode", "summary", "records"}
SUMMARY_KEYS = {"mean_op_at_half", "success_curve", "thresholds", "auc", "fps"}


def validate_result(doc: dict) -> None:
    """Raise ``ValueError`` unless ``doc`` is a well-formed per-sequence result."""
    missing = RESULT_KEYS - doc.keys()
    if missing:
        raise ValueError(f"result document lacks {sorted(missing)}")
    summ = doc["summary"]
    missing = SUMMARY_KEYS - summ.keys()
    if missing:
        raise ValueError(f"summary lacks {sorted(missing)}")
    curve = summ["success_curve"]
    if len(curve) != len(THRESHOLDS) or len(summ["thresholds"]) != len(THRESHOLDS):
        raise ValueError("success curve must have 21 points")
    if any(not 0 <= v <= 1 for v in curve) or any(b > a for a, b in zip(curve, curve[1:])):
        raise ValueError("success curve must lie in [0, 1] and be non-increasing")
    if not 0 <= summ["auc"] <= 1 or summ["auc"] != sum(curve) / len(curve):
        raise ValueError("auc must equal the curve mean")
    if summ["mean_op_at_half"] != curve[10]:
        raise ValueError("mean_op_at_half must equal the curve value at 0.5")
    for rec in doc["records"]:
        if set(rec) != {"frame", "predicted", "truth", "iou"}:
            raise ValueError(f"malformed record {rec}")
        if rec["iou"] is not None and not 0 <= rec["iou"] <= 1:
            raise ValueError(f"iou out of range in {rec}")


def load_results(directory) -> list[dict]:
    """Every per-sequence result JSON in ``directory``, sorted by file name."""
    docs = []
    for path in sorted(Path(directory).glob("*.json")):
        doc = json.loads(path.read_text())
        if isinstance(doc, dict) and RESULT_KEYS <= doc.keys():
            docs.append(doc)
    return docs
