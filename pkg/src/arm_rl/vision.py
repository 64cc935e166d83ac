"""Target extraction from camera frames: channel thresholds, colour masking and a
Hough circle transform over the surviving mask."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numba
import numpy as np

R_MIN = 10
R_MAX = 40


@dataclass(frozen=True)
class HoughConfig:
    """The four detection knobs.

    accumulator_scale: coarse centre-grid step in pixels (refined at step 1).
    min_center_dist: detections closer than this to a stronger one are dropped.
    edge_threshold: number of unset 4-neighbours that makes a mask pixel an edge.
    vote_threshold: fraction of the ideal perimeter ``2*pi*r`` a circle must collect.
    """

    accumulator_scale: int = 2
    min_center_dist: float = 40.0
    edge_threshold: int = 1
    vote_threshold: float = 0.5

    def __post_init__(self):
        if self.accumulator_scale < 1 or int(self.accumulator_scale) != self.accumulator_scale:
            raise ValueError("accumulator_scale must be an integer >= 1")
        for name in ("min_center_dist", "edge_threshold", "vote_threshold"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class Detection:
    center: tuple[float, float]
    radius: float
    votes: int


DEFAULT_CUTOFFS = (200, 200, 200)


def threshold_channel(channel: np.ndarray, cutoff: int) -> np.ndarray:
    """Binary mask of pixels whose intensity is at least ``cutoff``."""
    return np.asarray(channel) >= cutoff


def isolate_target(img: np.ndarray, cutoffs=DEFAULT_CUTOFFS) -> np.ndarray:
    """Keep near-saturated red pixels that are not also near-saturated in green or blue.

    White background saturates all three channels and is removed by the green and
    blue masks; the red disc only survives the red threshold.
    """
    img = np.asarray(img)
    red = threshold_channel(img[..., 0], cutoffs[0])
    green = threshold_channel(img[..., 1], cutoffs[1])
    blue = threshold_channel(img[..., 2], cutoffs[2])
    return red & ~green & ~blue


def edge_pixels(mask: np.ndarray, edge_threshold: int = 1) -> np.ndarray:
    """Mask pixels with at least ``edge_threshold`` unset 4-neighbours.

    With the default threshold this is the mask minus its 4-neighbour erosion.
    The frame border replicates the edge row/column, so a shape cut by the frame
    gets no boundary along the cut.
    """
    m = np.pad(np.asarray(mask, dtype=bool), 1, mode="edge")
    core = m[1:-1, 1:-1]
    missing = (
        (~m[:-2, 1:-1]).astype(np.uint8)
        + ~m[2:, 1:-1]
        + ~m[1:-1, :-2]
        + ~m[1:-1, 2:]
    )
    return core & (missing >= edge_threshold)


@numba.njit(cache=True, boundscheck=False)
def _edge_coords(img, c_red, c_green, c_blue, edge_threshold):
    """Fused isolate_target + edge_pixels + nonzero over an RGB frame."""
    h, w = img.shape[0], img.shape[1]
    mask = np.zeros((h, w), dtype=np.bool_)
    n_set = 0
    for y in range(h):
        for x in range(w):
            if img[y, x, 0] >= c_red and img[y, x, 1] < c_green and img[y, x, 2] < c_blue:
                mask[y, x] = True
                n_set += 1
    ys = np.empty(n_set, dtype=np.int64)
    xs = np.empty(n_set, dtype=np.int64)
    n = 0
    if n_set == 0:
        return ys, xs
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            # out-of-frame neighbours replicate the border pixel, which is set
            missing = 0
            if y > 0 and not mask[y - 1, x]:
                missing += 1
            if y < h - 1 and not mask[y + 1, x]:
                missing += 1
            if x > 0 and not mask[y, x - 1]:
                missing += 1
            if x < w - 1 and not mask[y, x + 1]:
                missing += 1
            if missing >= edge_threshold:
                ys[n] = y
                xs[n] = x
                n += 1
    return ys[:n], xs[:n]


@lru_cache(maxsize=None)
def ring_offsets(r: int) -> np.ndarray:
    """Integer offsets ``(dy, dx)`` with ``r - 1.5 < |offset| <= r + 0.5``.

    Boundary pixels of a disc of radius ``R`` lie at distances in ``(R - 1, R]``
    from its centre, so this band collects all of them for any ``R`` that rounds
    to ``r``.
    """
    span = np.arange(-r - 1, r + 2)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    d2 = dy**2 + dx**2
    keep = (d2 > (r - 1.5) ** 2) & (d2 <= (r + 0.5) ** 2)
    return np.stack([dy[keep], dx[keep]], axis=1).astype(np.int64)


@lru_cache(maxsize=None)
def _ring_table(r_min: int, r_max: int, scale: int):
    """Ring offsets split by residue class so that votes land only on centres that
    are multiples of ``scale``.

    For an edge pixel ``(y, x)`` with ``(y % scale, x % scale) == (a, b)``, the
    offsets in class ``a * scale + b`` give coarse centres ``(y // scale - qy,
    x // scale - qx)``.  Returns ``(qy, qx, starts)`` with ``starts`` of shape
    ``(n_radii, scale**2 + 1)``.
    """
    n_cls = scale * scale
    qy_all, qx_all = [], []
    starts = np.zeros((r_max - r_min + 1, n_cls + 1), dtype=np.int64)
    pos = 0
    for ri, r in enumerate(range(r_min, r_max + 1)):
        ring = ring_offsets(r)
        cls = (ring[:, 0] % scale) * scale + ring[:, 1] % scale
        for c in range(n_cls):
            starts[ri, c] = pos
            sel = ring[cls == c]
            qy_all.append((sel[:, 0] - c // scale) // scale)
            qx_all.append((sel[:, 1] - c % scale) // scale)
            pos += len(sel)
        starts[ri, n_cls] = pos
    return np.concatenate(qy_all), np.concatenate(qx_all), starts


@numba.njit(cache=True, boundscheck=False)
def _vote(ys, xs, qy, qx, starts, scale, pad, acc):
    n_r, gh, gw = acc.shape
    flat = acc.reshape(-1)
    plane = gh * gw
    for p in range(ys.shape[0]):
        cls = (ys[p] % scale) * scale + xs[p] % scale
        base = (ys[p] // scale + pad) * gw + xs[p] // scale + pad
        for ri in range(n_r):
            b = ri * plane + base
            for j in range(starts[ri, cls], starts[ri, cls + 1]):
                flat[b - qy[j] * gw - qx[j]] += 1


@numba.njit(cache=True)
def _peaks(acc, r_min, frac):
    """Per coarse cell, the radius with the best perimeter-normalised vote, kept
    when it reaches ``frac``.  Returns an (n, 4) array of (gy, gx, r, votes)."""
    n_r, gh, gw = acc.shape
    best = np.zeros((gh, gw))
    best_ri = np.full((gh, gw), -1, dtype=np.int64)
    for ri in range(n_r):
        inv_norm = 1.0 / (2.0 * np.pi * (r_min + ri))
        for gy in range(gh):
            for gx in range(gw):
                score = acc[ri, gy, gx] * inv_norm
                if score >= frac and score > best[gy, gx]:
                    best[gy, gx] = score
                    best_ri[gy, gx] = ri
    n = 0
    for gy in range(gh):
        for gx in range(gw):
            if best_ri[gy, gx] >= 0:
                n += 1
    out = np.empty((n, 4), dtype=np.int64)
    n = 0
    for gy in range(gh):
        for gx in range(gw):
            ri = best_ri[gy, gx]
            if ri >= 0:
                out[n, 0] = gy
                out[n, 1] = gx
                out[n, 2] = r_min + ri
                out[n, 3] = acc[ri, gy, gx]
                n += 1
    return out


@numba.njit(cache=True)
def _count_support(ys, xs, cy, cx, r):
    lo = (r - 1.5) * (r - 1.5)
    hi = (r + 0.5) * (r + 0.5)
    n = 0
    for p in range(ys.shape[0]):
        dy = ys[p] - cy
        dx = xs[p] - cx
        d2 = dy * dy + dx * dx
        if d2 > lo and d2 <= hi:
            n += 1
    return n


@numba.njit(cache=True)
def _refine(ys, xs, y0, y1, x0, x1, r0, r1):
    best = -1.0
    by, bx, br, bn = 0, 0, 0, 0
    for r in range(r0, r1 + 1):
        norm = 2.0 * np.pi * r
        for cy in range(y0, y1 + 1):
            for cx in range(x0, x1 + 1):
                n = _count_support(ys, xs, cy, cx, r)
                if n / norm > best:
                    best = n / norm
                    by, bx, br, bn = cy, cx, r, n
    return by, bx, br, bn


def _support_radius(ys, xs, cy, cx, r) -> float:
    d = np.hypot(ys - cy, xs - cx)
    on_ring = d[(d > r - 1.5) & (d <= r + 0.5)]
    # boundary pixels of a disc of radius R sit at distances spread over (R - 1, R]
    return float(np.clip(on_ring.mean() + 0.5, R_MIN, R_MAX)) if on_ring.size else float(r)


def hough_circles(
    mask: np.ndarray, cfg: HoughConfig = HoughConfig(), r_min: int = R_MIN, r_max: int = R_MAX
) -> list[Detection]:
    """Detect filled circles in a binary mask, strongest first.

    Votes go to a coarse centre grid (``accumulator_scale`` pixels per cell) for
    every radius in ``[r_min, r_max]``; surviving cells are refined at one-pixel
    centre resolution, thresholded and thinned by ``min_center_dist``.
    """
    edges = edge_pixels(mask, cfg.edge_threshold)
    ys, xs = np.nonzero(edges)
    return _circles_from_edges(ys, xs, edges.shape, cfg, r_min, r_max)


def _circles_from_edges(ys, xs, shape, cfg: HoughConfig, r_min: int, r_max: int) -> list[Detection]:
    if ys.size == 0:
        return []
    h, w = shape
    s = int(cfg.accumulator_scale)
    # a centre more than r_max + 1 from every edge pixel gets no votes, so the
    # accumulator only spans the edge bounding box plus that margin
    y0 = max(int(ys.min()) - r_max - 1, 0) // s * s
    x0 = max(int(xs.min()) - r_max - 1, 0) // s * s
    y1 = min(int(ys.max()) + r_max + 1, h - 1)
    x1 = min(int(xs.max()) + r_max + 1, w - 1)
    ys = ys.astype(np.int64) - y0
    xs = xs.astype(np.int64) - x0
    qy, qx, starts = _ring_table(r_min, r_max, s)
    pad = (r_max + 1) // s + 1
    gh = (y1 - y0) // s + 1
    gw = (x1 - x0) // s + 1
    acc = np.zeros((r_max - r_min + 1, gh + 2 * pad, gw + 2 * pad), dtype=np.int32)
    _vote(ys, xs, qy, qx, starts, s, pad, acc)
    acc = acc[:, pad:-pad, pad:-pad]
    # lattice centres can sit up to s/sqrt(2) px off the true centre, so the
    # coarse pass only shortlists; the full threshold applies after refinement
    peaks = _peaks(acc, r_min, 0.5 * float(cfg.vote_threshold) if s > 1 else float(cfg.vote_threshold))
    if len(peaks) == 0:
        return []
    order = np.lexsort((np.arange(len(peaks)), -peaks[:, 3] / peaks[:, 2]))

    refined: list[Detection] = []
    visited: list[tuple[int, int]] = []
    for gy, gx, r, _ in peaks[order[:64]]:
        cy_c, cx_c = int(gy) * s, int(gx) * s
        if any(abs(cy_c - vy) <= s and abs(cx_c - vx) <= s for vy, vx in visited):
            continue
        visited.append((cy_c, cx_c))
        r = int(r)
        cy, cx, rr, n = _refine(
            ys, xs, cy_c - s, cy_c + s, cx_c - s, cx_c + s, max(r_min, r - 1), min(r_max, r + 1)
        )
        if n < cfg.vote_threshold * 2 * np.pi * rr:
            continue
        radius = _support_radius(ys, xs, cy, cx, rr)
        cy, cx = cy + y0, cx + x0
        if not (0 <= cy < h and 0 <= cx < w):
            continue
        refined.append(Detection((float(cx), float(cy)), radius, int(n)))

    refined.sort(key=lambda d: -d.votes)
    kept: list[Detection] = []
    for det in refined:
        if all(
            np.hypot(det.center[0] - k.center[0], det.center[1] - k.center[1]) >= cfg.min_center_dist
            for k in kept
        ):
            kept.append(det)
    return kept


def detect_target(
    img: np.ndarray, cutoffs=DEFAULT_CUTOFFS, cfg: HoughConfig = HoughConfig()
) -> Detection | None:
    """Strongest target circle in an RGB frame, or None when no circle is found.

    Same result as ``hough_circles(isolate_target(img, cutoffs), cfg)``, with the
    masking and edge extraction done in one compiled pass.
    """
    img = np.ascontiguousarray(img, dtype=np.uint8)
    ys, xs = _edge_coords(img, int(cutoffs[0]), int(cutoffs[1]), int(cutoffs[2]), float(cfg.edge_threshold))
    found = _circles_from_edges(ys, xs, img.shape[:2], cfg, R_MIN, R_MAX)
    return found[0] if found else None


def draw_disc(shape: tuple[int, int], center, radius: float) -> np.ndarray:
    """Boolean (H, W) mask of a filled disc, point-in-disc per pixel."""
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w]
    return (xx - center[0]) ** 2 + (yy - center[1]) ** 2 <= radius**2
