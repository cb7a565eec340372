"""Procedural clean scenes with depth, used as fixtures and demo inputs.

A scene is a sky above a horizon, a textured ground plane whose depth grows
towards the horizon, and a handful of colored boxes standing on the ground.
Nothing here is meant to be photorealistic; the scenes only need saturated
colors, edges, fine texture and a plausible depth layout.
"""

from __future__ import annotations

import colorsys

import numpy as np
from scipy import ndimage

from .imgcore import FLOAT, DepthMap, RngStream


def _smooth_noise(g: np.random.Generator, h: int, w: int, sigma: float) -> np.ndarray:
    n = ndimage.gaussian_filter(g.standard_normal((h, w)), sigma, mode="reflect")
    n -= n.mean()
    return n / (np.abs(n).max() + 1e-12)


def _hue(g: np.random.Generator, sat=(0.35, 0.9), val=(0.35, 0.9)) -> np.ndarray:
    rgb = colorsys.hsv_to_rgb(g.uniform(), g.uniform(*sat), g.uniform(*val))
    return np.array(rgb)


def procedural_scene(rng: RngStream, height: int = 120, width: int = 160, n_boxes: int = 8):
    """Return ``(clean, depth)``: an ``(H, W, 3)`` image and raw metric depth."""
    g = rng.generator()
    h, w = height, width
    rows = np.arange(h, dtype=np.float64)[:, None]
    cols = np.arange(w, dtype=np.float64)[None, :]
    horizon = int(h * g.uniform(0.3, 0.5))
    far = g.uniform(8.0, 12.0)
    near = g.uniform(0.6, 1.2)

    # ground depth ~ 1 / (distance below the horizon), capped at the far plane
    below = np.maximum(rows - horizon, 0.0) + 1.0
    ground_depth = np.minimum(near * (h - horizon) / below, far)
    depth = np.broadcast_to(np.where(rows <= horizon, far, ground_depth), (h, w)).copy()

    sky_top, sky_bottom = _hue(g, (0.05, 0.4), (0.6, 0.95)), _hue(g, (0.0, 0.2), (0.7, 1.0))
    t = np.clip(rows / max(horizon, 1), 0.0, 1.0)[:, :, None]
    img = np.broadcast_to((1 - t) * sky_top + t * sky_bottom, (h, w, 3)).copy()

    ground = _hue(g)
    tex = 0.15 * _smooth_noise(g, h, w, 1.5)[:, :, None] + 0.1 * _smooth_noise(g, h, w, 6.0)[:, :, None]
    stripes = 0.08 * np.sin(cols / g.uniform(2.0, 5.0) + rows * g.uniform(-0.3, 0.3))[:, :, None]
    # dark grain (pebbles, blade shadows): natural ground rarely lacks dark pixels
    grain = np.where(g.uniform(size=(h, w)) < 0.06, g.uniform(0.15, 0.5, size=(h, w)), 1.0)
    shade = 0.6 + 0.4 * (0.5 + 0.5 * _smooth_noise(g, h, w, 4.0))
    ground_img = (ground * (1 + tex) + stripes) * (shade * grain)[:, :, None]
    img = np.where((rows > horizon)[:, :, None], ground_img, img)

    for _ in range(n_boxes):
        base = int(g.integers(horizon + 2, h))
        d = float(ground_depth[base, 0])
        zoom = near / d  # nearer boxes are bigger
        bh = max(int(g.uniform(0.15, 0.6) * h * zoom), 3)
        bw = max(int(g.uniform(0.1, 0.4) * w * zoom), 3)
        top, left = max(base - bh, 0), int(g.integers(0, max(w - bw, 1)))
        color = _hue(g)
        patch = color * (1 + 0.2 * _smooth_noise(g, base - top, bw, 1.0)[:, :, None])
        # window grid gives the boxes fine detail
        yy, xx = np.mgrid[top:base, left : left + bw]
        grid = ((yy % 5) < 2) & ((xx % 4) < 2)
        patch[grid[: patch.shape[0], : patch.shape[1]]] *= g.uniform(0.4, 0.8)
        region = (slice(top, base), slice(left, left + bw))
        closer = depth[region] > d
        img[region][closer] = patch[: closer.shape[0], : closer.shape[1]][closer]
        depth[region][closer] = d
        # contact shadow on the ground just below the box
        shadow = (slice(base, min(base + max(bh // 6, 1), h)), slice(left, left + bw))
        img[shadow] *= np.where(depth[shadow] > d, 0.35, 1.0)[:, :, None]

    clean = np.clip(img, 0.0, 1.0).astype(FLOAT)
    return clean, DepthMap(depth.astype(FLOAT), normalized=False)
