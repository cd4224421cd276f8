"""Image regions, patch sampling and hand-crafted feature maps.

Images are numpy arrays of shape ``(H, W)`` (gray) or ``(H, W, 3)``
(RGB), 8-bit on disk. Pixel ``(row, col)`` is centred on the continuous
coordinate ``(y=row, x=col)`` and covers ``[x - 0.5, x + 0.5]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError

from .errors import DimNotDivisible, EmptyRegion, ImageDecodeError

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])
SEARCH_AREA_FACTOR = 5.0
TRUNCATION = 0.2
_EPS = 1e-12


@dataclass(frozen=True)
class Region:
    """Axis-aligned rectangle given by its centre and extent, in pixels."""

    cx: float
    cy: float
    width: float
    height: float

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise EmptyRegion(f"region must have positive extent, got {self.width}x{self.height}")

    @classmethod
    def from_box(cls, box) -> "Region":
        """Build from a 0-indexed ``(x, y, w, h)`` box (top-left pixel)."""
        x, y, w, h = (float(v) for v in box)
        return cls(x + (w - 1) / 2, y + (h - 1) / 2, w, h)

    def to_box(self) -> tuple[float, float, float, float]:
        return (
            self.cx - (self.width - 1) / 2,
            self.cy - (self.height - 1) / 2,
            self.width,
            self.height,
        )


class FeatureKind(str, Enum):
    HOG_GRAY = "hog_gray"
    # reserved: color names


class WindowKind(str, Enum):
    COSINE = "cosine"
    NONE = "none"


@dataclass(frozen=True)
class FeatureConfig:
    cell_size: int = 4
    orientation_bins: int = 9
    include_gray: bool = True
    window: WindowKind = WindowKind.COSINE
    kind: FeatureKind = FeatureKind.HOG_GRAY

    def __post_init__(self):
        if self.cell_size < 1:
            raise ValueError("cell_size must be >= 1")
        if self.orientation_bins < 2:
            raise ValueError("orientation_bins must be >= 2")
        object.__setattr__(self, "window", WindowKind(self.window))
        object.__setattr__(self, "kind", FeatureKind(self.kind))

    @property
    def num_channels(self) -> int:
        return self.orientation_bins + int(self.include_gray)


def load_image(path) -> np.ndarray:
    """Decode a PNG/JPEG frame into a uint8 gray or RGB array."""
    path = Path(path)
    try:
        with PILImage.open(path) as im:
            if im.mode not in ("L", "RGB"):
                im = im.convert("L" if im.mode in ("1", "I", "I;16", "F", "LA") else "RGB")
            return np.asarray(im, dtype=np.uint8).copy()
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageDecodeError(f"cannot decode image {path}: {exc}") from exc


def luminance(img) -> np.ndarray:
    """Luminance plane as float64; RGB uses the 0.299/0.587/0.114 weights."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.ndim == 3 and img.shape[2] == 3:
        return img @ LUMA_WEIGHTS
    if img.ndim == 3 and img.shape[2] == 1:
        return img[..., 0]
    raise ValueError(f"unsupported image shape {img.shape}")


def search_region(target: Region) -> Region:
    """Square region with the target's centre and side ``sqrt(5 W H)``."""
    side = math.sqrt(SEARCH_AREA_FACTOR * target.width * target.height)
    return Region(target.cx, target.cy, side, side)


def sample_patch(img, region: Region, out_size) -> np.ndarray:
    """Resample ``region`` of ``img`` onto an ``out_size = (w, h)`` grid.

    Bilinear interpolation; sample coordinates falling outside the image
    are clamped to the border (replication padding). The result is a
    float64 array in the image's value range with the image's channel
    layout.
    """
    out_w, out_h = (int(v) for v in out_size)
    if out_w < 1 or out_h < 1:
        raise ValueError(f"out_size must be positive, got {out_size}")
    if round(region.width) * round(region.height) == 0:
        raise EmptyRegion(f"region {region.width}x{region.height} rounds to zero area")

    img = np.asarray(img, dtype=np.float64)
    h, w = img.shape[:2]
    xs = region.cx - region.width / 2 + (np.arange(out_w) + 0.5) * (region.width / out_w)
    ys = region.cy - region.height / 2 + (np.arange(out_h) + 0.5) * (region.height / out_h)
    xs = np.clip(xs, 0.0, w - 1)
    ys = np.clip(ys, 0.0, h - 1)

    x0 = np.minimum(np.floor(xs).astype(np.intp), max(w - 2, 0))
    y0 = np.minimum(np.floor(ys).astype(np.intp), max(h - 2, 0))
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    ax = xs - x0
    ay = ys - y0
    if img.ndim == 3:
        ax = ax[:, None]
        ay = ay[:, None, None]
    else:
        ay = ay[:, None]

    y0 = y0[:, None]
    y1 = y1[:, None]
    top = img[y0, x0] * (1 - ax) + img[y0, x1] * ax
    bottom = img[y1, x0] * (1 - ax) + img[y1, x1] * ax
    return top * (1 - ay) + bottom * ay


def _gradients(lum: np.ndarray):
    # centered differences, replicated border
    p = np.pad(lum, 1, mode="edge")
    gx = (p[1:-1, 2:] - p[1:-1, :-2]) / 2.0
    gy = (p[2:, 1:-1] - p[:-2, 1:-1]) / 2.0
    return gx, gy


def _cell_sum(a: np.ndarray, cell: int) -> np.ndarray:
    """Sum over non-overlapping ``cell x cell`` blocks of the last two axes."""
    *lead, h, w = a.shape
    return a.reshape(*lead, h // cell, cell, w // cell, cell).sum(axis=(-3, -1))


def extract_hog(patch, cfg: FeatureConfig = FeatureConfig()) -> np.ndarray:
    """Gradient-orientation histogram channels (plus optional gray channel).

    Unsigned orientations are binned into ``cfg.orientation_bins`` bins
    centred at ``k * pi / bins`` with linear interpolation between the two
    nearest bins, weighted by gradient magnitude and summed per cell.
    Each cell is then normalised by the energy of every 2x2-cell block
    containing it; each normalised copy is truncated at 0.2 and
    renormalised, and the four copies are averaged.

    Returns an array of shape ``(channels, H // cell, W // cell)``.
    """
    lum = luminance(patch)
    cell = cfg.cell_size
    h, w = lum.shape
    if h % cell or w % cell:
        raise DimNotDivisible(f"patch {h}x{w} not divisible by cell size {cell}")
    bins = cfg.orientation_bins

    gx, gy = _gradients(lum)
    mag = np.hypot(gx, gy)
    theta = np.mod(np.arctan2(gy, gx), np.pi)
    pos = theta * (bins / np.pi)
    lo = np.floor(pos).astype(np.intp)
    frac = pos - lo
    lo %= bins
    hi = (lo + 1) % bins

    ch, cw = h // cell, w // cell
    rows, cols = np.indices((h, w))
    cell_idx = (rows // cell) * cw + cols // cell
    n = bins * ch * cw
    hist = np.bincount((lo * (ch * cw) + cell_idx).ravel(), (mag * (1 - frac)).ravel(), n)
    hist += np.bincount((hi * (ch * cw) + cell_idx).ravel(), (mag * frac).ravel(), n)
    hist = hist.reshape(bins, ch, cw)

    energy = np.pad((hist ** 2).sum(axis=0), 1, mode="edge")
    out = np.zeros_like(hist)
    for di in (0, 1):
        for dj in (0, 1):
            # block whose top-left cell is offset (di-1, dj-1) from each cell
            blk = (
                energy[di:di + ch, dj:dj + cw]
                + energy[di + 1:di + 1 + ch, dj:dj + cw]
                + energy[di:di + ch, dj + 1:dj + 1 + cw]
                + energy[di + 1:di + 1 + ch, dj + 1:dj + 1 + cw]
            )
            v = np.minimum(hist / np.sqrt(blk + _EPS), TRUNCATION)
            v = v / np.sqrt((v ** 2).sum(axis=0) + _EPS)
            out += v
    out /= 4.0

    if cfg.include_gray:
        gray = _cell_sum(lum, cell) / (cell * cell) / 255.0 - 0.5
        out = np.concatenate([out, gray[np.newaxis]], axis=0)
    return out


def hann_window(m: int, n: int) -> np.ndarray:
    """Separable Hann window; a length-1 axis contributes a factor of 1."""

    def one(k):
        if k == 1:
            return np.ones(1)
        return 0.5 * (1 - np.cos(2 * np.pi * np.arange(k) / (k - 1)))

    return np.outer(one(m), one(n))


def cosine_window(f) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    return f * hann_window(*f.shape[-2:])


def extract_features(img, region: Region, template_px: int, cfg: FeatureConfig) -> np.ndarray:
    """Sample ``region`` to a square ``template_px`` patch and return windowed features."""
    # luminance and bilinear sampling commute; sampling one plane is cheaper
    patch = sample_patch(luminance(img), region, (template_px, template_px))
    feats = extract_hog(patch, cfg)
    if cfg.window is WindowKind.COSINE:
        feats = cosine_window(feats)
    return feats
