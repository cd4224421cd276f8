"""Per-frame tracking: initialisation, detection with scale search, update."""

from __future__ import annotations

import io
import json
import math
import struct
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .errors import EmptyRegion, StateFormatError
from .features import FeatureConfig, Region, extract_features, search_region
from .grid import correlate
from .solver import AdmmParams, FilterState, learn, linear_interp_update

# Peak of the response map on a frame with no usable structure stays below
# this; the trained response peaks near 1 on the training frame.
RESPONSE_FLOOR = 0.05
# Targets narrower than this (pixels) cannot be tracked meaningfully.
MIN_TARGET_PX = 2.0

STATE_MAGIC = b"STRCF1\0"


class UpdateMode(str, Enum):
    STRCF = "strcf"
    INTERP = "interp"


@dataclass(frozen=True)
class TrackerConfig:
    features: FeatureConfig = field(default_factory=FeatureConfig)
    admm: AdmmParams = field(default_factory=AdmmParams)
    template_px: int = 200
    sigma_factor: float = 1 / 16
    w_min: float = 0.1
    w_alpha: float = 3.0
    num_scales: int = 5
    scale_step: float = 1.01
    scale_lr: float = 0.025
    penalty_eps: float = 0.005
    interp_eta: float = 0.025

    def __post_init__(self):
        if self.template_px % self.features.cell_size:
            raise ValueError("template_px must be a multiple of cell_size")
        if self.template_px < self.features.cell_size:
            raise ValueError("template_px must be at least one cell")
        if not self.sigma_factor > 0:
            raise ValueError("sigma_factor must be > 0")
        if not self.w_min >= 0 or not self.w_alpha >= 0:
            raise ValueError("spatial weight constants must be >= 0")
        if self.num_scales < 1 or self.num_scales % 2 == 0:
            raise ValueError("num_scales must be a positive odd count")
        if not self.scale_step > 1:
            raise ValueError("scale_step must be > 1")
        if not 0 <= self.scale_lr <= 1:
            raise ValueError("scale_lr must lie in [0, 1]")
        if not 0 <= self.penalty_eps < 1:
            raise ValueError("penalty_eps must lie in [0, 1)")
        if not 0 <= self.interp_eta <= 1:
            raise ValueError("interp_eta must lie in [0, 1]")

    @property
    def feature_dims(self) -> tuple[int, int]:
        k = self.template_px // self.features.cell_size
        return k, k

    def scale_factors(self) -> np.ndarray:
        half = self.num_scales // 2
        return self.scale_step ** np.arange(-half, half + 1, dtype=np.float64)


@dataclass
class TrackerState:
    cx: float
    cy: float
    base_size: tuple[float, float]  # (W, H) on the first frame
    scale: float
    base_side: float  # search-region side on the first frame
    filter: FilterState
    spatial_weight: np.ndarray
    label: np.ndarray
    config: TrackerConfig
    frame_index: int = 1
    last_variation: float = float("nan")

    @property
    def target_size(self) -> tuple[float, float]:
        return self.base_size[0] * self.scale, self.base_size[1] * self.scale

    @property
    def region(self) -> Region:
        w, h = self.target_size
        return Region(self.cx, self.cy, w, h)

    def search_side(self, factor: float = 1.0) -> float:
        return self.base_side * self.scale * factor


@dataclass
class Detection:
    displacement: tuple[float, float]  # (dx, dy) in cells at the chosen scale
    scale_index: int
    response_peak: float
    pixels_per_cell: float


def gaussian_label(M: int, N: int, sigma: float) -> np.ndarray:
    """Gaussian peaked at index ``(0, 0)`` with circular distances."""
    if not sigma > 0:
        raise ValueError("sigma must be > 0")
    i = np.arange(M)
    j = np.arange(N)
    di = np.minimum(i, M - i)
    dj = np.minimum(j, N - j)
    return np.exp(-(di[:, None] ** 2 + dj[None, :] ** 2) / (2.0 * sigma ** 2))


def build_spatial_weight(feat_dims, target_cells, w_min: float = 0.1, alpha: float = 3.0) -> np.ndarray:
    """Quadratic penalty ``w_min + alpha * ((di / (m/2))^2 + (dj / (n/2))^2)``.

    Offsets are measured from the grid centre ``(M // 2, N // 2)``; ``m, n``
    is the target extent in cells.
    """
    M, N = feat_dims
    m, n = target_cells
    if not (0 < m <= M and 0 < n <= N):
        raise ValueError(f"target cells {target_cells} must lie within {feat_dims}")
    di = (np.arange(M) - M // 2) / (m / 2)
    dj = (np.arange(N) - N // 2) / (n / 2)
    return w_min + alpha * (di[:, None] ** 2 + dj[None, :] ** 2)


def _target_cells(cfg: TrackerConfig, size, side) -> tuple[float, float]:
    M, N = cfg.feature_dims
    per_cell = side / cfg.template_px * cfg.features.cell_size
    w, h = size
    return min(h / per_cell, M), min(w / per_cell, N)


def init(img, target: Region, cfg: TrackerConfig = TrackerConfig()) -> TrackerState:
    """Build the tracker state and learn the first filter from ``img``.

    The first filter has no predecessor, so it is learned with the
    temporal weight forced to zero.
    """
    if target.width < MIN_TARGET_PX or target.height < MIN_TARGET_PX:
        raise EmptyRegion(
            f"target {target.width}x{target.height} is below the {MIN_TARGET_PX:g}px minimum"
        )
    region = search_region(target)
    M, N = cfg.feature_dims
    m, n = _target_cells(cfg, (target.width, target.height), region.width)
    label = gaussian_label(M, N, cfg.sigma_factor * math.sqrt(m * n))
    weight = build_spatial_weight((M, N), (m, n), cfg.w_min, cfg.w_alpha)

    x = extract_features(img, region, cfg.template_px, cfg.features)
    zeros = np.zeros_like(x)
    f, _ = learn(x, label, weight, zeros, cfg.admm.replace(mu=0.0))
    return TrackerState(
        cx=target.cx,
        cy=target.cy,
        base_size=(float(target.width), float(target.height)),
        scale=1.0,
        base_side=region.width,
        filter=FilterState(f_prev=f.copy(), f_cur=f),
        spatial_weight=weight,
        label=label,
        config=cfg,
    )


def _subcell_offset(resp: np.ndarray, pi: int, pj: int) -> tuple[float, float]:
    """Peak offset from a least-squares quadratic over the 3x3 neighbourhood."""
    M, N = resp.shape
    rows = (pi + np.arange(-1, 2)) % M
    cols = (pj + np.arange(-1, 2)) % N
    v = resp[np.ix_(rows, cols)].ravel()
    c = _QUAD_PINV @ v  # [1, a, b, a^2, ab, b^2]
    hess = np.array([[2 * c[3], c[4]], [c[4], 2 * c[5]]])
    if hess[0, 0] < 0 and np.linalg.det(hess) > 0:
        da, db = np.linalg.solve(hess, -c[1:3])
    else:
        # not a clean maximum: per-axis parabolas
        def axis(lo, mid, hi):
            den = lo - 2 * mid + hi
            return 0.5 * (lo - hi) / den if den < 0 else 0.0

        grid = v.reshape(3, 3)
        da = axis(grid[0, 1], grid[1, 1], grid[2, 1])
        db = axis(grid[1, 0], grid[1, 1], grid[1, 2])
    return float(np.clip(da, -1, 1)), float(np.clip(db, -1, 1))


def _quad_pinv() -> np.ndarray:
    a, b = np.meshgrid(np.arange(-1, 2), np.arange(-1, 2), indexing="ij")
    a = a.ravel().astype(float)
    b = b.ravel().astype(float)
    design = np.stack([np.ones(9), a, b, a * a, a * b, b * b], axis=1)
    return np.linalg.pinv(design)


_QUAD_PINV = _quad_pinv()


def _wrap(k: int, size: int) -> int:
    return k - size if k > size // 2 else k


def detect(state: TrackerState, img) -> Detection:
    """Locate the target in ``img`` around the previous position.

    Every candidate scale is scored by the response of the current filter;
    non-identity scales are discounted by ``1 - penalty_eps * |k - k0|``
    and the best peak over all scales wins.
    """
    cfg = state.config
    factors = cfg.scale_factors()
    mid = len(factors) // 2
    best = None
    for k, s in enumerate(factors):
        side = state.search_side(s)
        z = extract_features(img, Region(state.cx, state.cy, side, side), cfg.template_px, cfg.features)
        resp = correlate(z, state.filter.f_cur) * (1 - cfg.penalty_eps * abs(k - mid))
        idx = int(np.argmax(resp))
        peak = float(resp.flat[idx])
        if best is None or peak > best[0]:
            best = (peak, k, idx, resp, side)

    peak, k, idx, resp, side = best
    M, N = resp.shape
    pi, pj = divmod(idx, N)
    da, db = _subcell_offset(resp, pi, pj)
    # a target moved by +s cells peaks at -s
    dy = float(np.clip(-(_wrap(pi, M) + da), -M / 2, M / 2))
    dx = float(np.clip(-(_wrap(pj, N) + db), -N / 2, N / 2))
    per_cell = side / cfg.template_px * cfg.features.cell_size
    return Detection((dx, dy), k, peak, per_cell)


def temporal_variation(f_new, f_old) -> float:
    """``||f_new - f_old||^2 / (||f_new||^2 + ||f_old||^2)``."""
    z = float(np.sum(f_new ** 2) + np.sum(f_old ** 2))
    if z == 0:
        return 0.0
    return float(np.sum((f_new - f_old) ** 2)) / z


def step(state: TrackerState, img, mode: UpdateMode = UpdateMode.STRCF, truth: Region | None = None):
    """Track one frame and relearn the filter at the new position.

    ``truth`` bypasses detection: the state jumps to the given region
    (used for diagnostics with forced localisation). Mutates and returns
    ``state`` together with the predicted region.
    """
    cfg = state.config
    mode = UpdateMode(mode)
    if truth is None:
        det = detect(state, img)
        dx, dy = det.displacement
        state.cx += dx * det.pixels_per_cell
        state.cy += dy * det.pixels_per_cell
        s_best = float(cfg.scale_factors()[det.scale_index])
        state.scale *= 1 + cfg.scale_lr * (s_best - 1)
    else:
        state.cx, state.cy = truth.cx, truth.cy
        state.scale = math.sqrt(truth.width * truth.height / (state.base_size[0] * state.base_size[1]))

    side = state.search_side()
    x = extract_features(img, Region(state.cx, state.cy, side, side), cfg.template_px, cfg.features)
    f_old = state.filter.f_cur
    if mode is UpdateMode.STRCF:
        f_new, _ = learn(x, state.label, state.spatial_weight, f_old, cfg.admm)
    else:
        f_fit, _ = learn(x, state.label, state.spatial_weight, f_old, cfg.admm.replace(mu=0.0))
        f_new = linear_interp_update(f_old, f_fit, cfg.interp_eta)
    state.last_variation = temporal_variation(f_new, f_old)
    state.filter = FilterState(f_prev=f_old, f_cur=f_new)
    state.frame_index += 1
    return state, state.region


# --- snapshot format -------------------------------------------------------
#
#   magic "STRCF1\0"
#   uint32 LE  header length L
#   L bytes    UTF-8 JSON: config, scalar names, array names and shapes
#   float64 LE scalars, then each array in header order (C order)

_SCALARS = ("cx", "cy", "base_w", "base_h", "scale", "base_side", "last_variation")
_ARRAYS = ("f_prev", "f_cur", "spatial_weight", "label")


def _config_dict(cfg: TrackerConfig) -> dict:
    d = asdict(cfg)
    d["features"]["window"] = cfg.features.window.value
    d["features"]["kind"] = cfg.features.kind.value
    return d


def _config_from_dict(d: dict) -> TrackerConfig:
    d = dict(d)
    features = FeatureConfig(**d.pop("features"))
    admm = AdmmParams(**d.pop("admm"))
    return TrackerConfig(features=features, admm=admm, **d)


def save_state(state: TrackerState) -> bytes:
    arrays = {
        "f_prev": state.filter.f_prev,
        "f_cur": state.filter.f_cur,
        "spatial_weight": state.spatial_weight,
        "label": state.label,
    }
    header = {
        "config": _config_dict(state.config),
        "frame_index": state.frame_index,
        "scalars": list(_SCALARS),
        "arrays": [[name, list(arrays[name].shape)] for name in _ARRAYS],
    }
    scalars = np.array(
        [state.cx, state.cy, *state.base_size, state.scale, state.base_side, state.last_variation],
        dtype="<f8",
    )
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    buf = io.BytesIO()
    buf.write(STATE_MAGIC)
    buf.write(struct.pack("<I", len(blob)))
    buf.write(blob)
    buf.write(scalars.tobytes())
    for name in _ARRAYS:
        buf.write(np.ascontiguousarray(arrays[name], dtype="<f8").tobytes())
    return buf.getvalue()


def load_state(data: bytes) -> TrackerState:
    if not data.startswith(STATE_MAGIC):
        raise StateFormatError("missing STRCF1 magic header")
    pos = len(STATE_MAGIC)
    try:
        (hlen,) = struct.unpack_from("<I", data, pos)
        pos += 4
        header = json.loads(data[pos:pos + hlen].decode("utf-8"))
        pos += hlen
        names = header["scalars"]
        scal = np.frombuffer(data, dtype="<f8", count=len(names), offset=pos)
        pos += 8 * len(names)
        values = dict(zip(names, (float(v) for v in scal)))
        arrays = {}
        for name, shape in header["arrays"]:
            count = int(np.prod(shape))
            arrays[name] = np.frombuffer(data, dtype="<f8", count=count, offset=pos).reshape(shape).astype(np.float64)
            pos += 8 * count
        cfg = _config_from_dict(header["config"])
    except (struct.error, ValueError, KeyError, TypeError) as exc:
        raise StateFormatError(f"corrupt state snapshot: {exc}") from exc
    if pos != len(data):
        raise StateFormatError(f"{len(data) - pos} trailing bytes in state snapshot")
    return TrackerState(
        cx=values["cx"],
        cy=values["cy"],
        base_size=(values["base_w"], values["base_h"]),
        scale=values["scale"],
        base_side=values["base_side"],
        filter=FilterState(f_prev=arrays["f_prev"], f_cur=arrays["f_cur"]),
        spatial_weight=arrays["spatial_weight"],
        label=arrays["label"],
        config=cfg,
        frame_index=int(header["frame_index"]),
        last_variation=values["last_variation"],
    )
