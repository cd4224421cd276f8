"""Seeded synthetic OTB-style sequences with exact ground truth."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

KINDS = ("static", "translate", "scale", "occlude")

FRAME_W = 240
FRAME_H = 160
TARGET_PX = 32
TRANSLATE_STEP = 2.0
SCALE_RATE = 1.005
OCCLUDER_W = 40


@dataclass(frozen=True)
class SynthFrame:
    image: np.ndarray  # (H, W, 3) uint8
    box: tuple[float, float, float, float]  # 0-indexed (x, y, w, h)


def _smooth_noise(rng, h, w, cell, lo, hi, channels=3):
    coarse = rng.uniform(lo, hi, size=(h // cell + 2, w // cell + 2, channels))
    im = PILImage.fromarray(coarse.astype(np.uint8), "RGB")
    im = im.resize(((w // cell + 2) * cell, (h // cell + 2) * cell), PILImage.BILINEAR)
    return np.asarray(im, dtype=np.float64)[:h, :w]


def _target_texture(rng, size):
    blocks = rng.integers(0, 2, size=(size // 4, size // 4))
    tex = np.kron(blocks, np.ones((4, 4))) * 170 + 40
    tex = tex[..., None] * np.array([1.0, 0.85, 0.7])
    tex += rng.normal(0, 6, size=tex.shape)
    tex[:2, :] = tex[-2:, :] = tex[:, :2] = tex[:, -2:] = 235
    return tex


def _paste(frame, tex, x, y, w, h):
    """Nearest-neighbour render of ``tex`` into the box ``[x, x+w) x [y, y+h)``."""
    th, tw = tex.shape[:2]
    rows = np.arange(max(0, int(np.floor(y))), min(frame.shape[0], int(np.ceil(y + h))))
    cols = np.arange(max(0, int(np.floor(x))), min(frame.shape[1], int(np.ceil(x + w))))
    if rows.size == 0 or cols.size == 0:
        return
    # pixel centres inside the box
    ry = rows[(rows + 0.5 > y) & (rows + 0.5 <= y + h)]
    cx = cols[(cols + 0.5 > x) & (cols + 0.5 <= x + w)]
    if ry.size == 0 or cx.size == 0:
        return
    ti = np.minimum(((ry + 0.5 - y) / h * th).astype(int), th - 1)
    tj = np.minimum(((cx + 0.5 - x) / w * tw).astype(int), tw - 1)
    frame[np.ix_(ry, cx)] = tex[np.ix_(ti, tj)]


def generate(kind: str, frames: int, seed: int = 0) -> list[SynthFrame]:
    """Render ``frames`` frames of a textured square on a textured background.

    ``translate`` moves the target 2 px/frame to the right, ``scale``
    grows it by a factor 1.005 per frame about its centre and ``occlude``
    sweeps an opaque bar across the target around the middle of the
    sequence while the target drifts right by 1 px/frame.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")
    if frames < 2:
        raise ValueError("need at least 2 frames")
    rng = np.random.default_rng(seed)
    background = _smooth_noise(rng, FRAME_H, FRAME_W, 8, 60, 190)
    background += rng.normal(0, 4, size=background.shape)
    tex = _target_texture(rng, TARGET_PX)
    occluder = _smooth_noise(rng, FRAME_H, OCCLUDER_W, 4, 20, 120)

    x0 = 40.0 if kind in ("translate", "occlude") else (FRAME_W - TARGET_PX) / 2
    y0 = (FRAME_H - TARGET_PX) / 2
    out = []
    for t in range(frames):
        frame = background.copy()
        size = float(TARGET_PX)
        x, y = x0, y0
        if kind == "translate":
            x = x0 + TRANSLATE_STEP * t
        elif kind == "scale":
            size = TARGET_PX * SCALE_RATE ** t
            x = x0 + (TARGET_PX - size) / 2
            y = y0 + (TARGET_PX - size) / 2
        elif kind == "occlude":
            x = x0 + 1.0 * t
        _paste(frame, tex, x, y, size, size)
        if kind == "occlude":
            # bar crosses the target centre at the middle frame
            progress = (t - frames / 2) / max(frames / 4, 1)
            bar_x = x + (size - OCCLUDER_W) / 2 + progress * (size + OCCLUDER_W)
            _paste(frame, occluder, bar_x, 0, OCCLUDER_W, FRAME_H)
        img = np.clip(np.rint(frame), 0, 255).astype(np.uint8)
        out.append(SynthFrame(img, (x, y, size, size)))
    return out


def _fmt(v: float) -> str:
    r = round(v, 6)
    return str(int(r)) if r == int(r) else f"{r:.6f}".rstrip("0")


def write_sequence(frames: list[SynthFrame], out_dir) -> Path:
    """Write ``img/NNNN.png`` and a 1-indexed ``groundtruth_rect.txt``."""
    out = Path(out_dir)
    (out / "img").mkdir(parents=True, exist_ok=True)
    lines = []
    for i, fr in enumerate(frames, start=1):
        PILImage.fromarray(fr.image, "RGB").save(out / "img" / f"{i:04d}.png", optimize=False)
        x, y, w, h = fr.box
        lines.append(",".join(_fmt(v) for v in (x + 1, y + 1, w, h)))
    (out / "groundtruth_rect.txt").write_text("\n".join(lines) + "\n")
    return out
