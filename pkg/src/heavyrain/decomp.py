"""Rain-invariant guidance images and guided-filter frequency decomposition."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .imgcore import FLOAT, as_image

GUIDES = ("residue", "colored-residue", "input")
DEFAULT_KERNEL = 64
DEFAULT_EPS = 1e-2


@dataclass(frozen=True)
class FrequencyPair:
    low: np.ndarray
    high: np.ndarray  # signed, float64 so that low + high reproduces the input


def _rgb(img, name="image") -> np.ndarray:
    arr = as_image(img, name=name)
    if arr.shape[2] != 3:
        raise ValueError(f"{name} must have 3 channels, got {arr.shape[2]}")
    return arr


def residue_channel(img) -> np.ndarray:
    """Per-pixel max minus min over the color channels, as ``(H, W, 1)``.

    Adding the same amount to all three channels (gray rain) leaves it unchanged.
    """
    arr = _rgb(img)
    return (arr.max(axis=2) - arr.min(axis=2))[:, :, None]


def colored_residue(img) -> np.ndarray:
    """Each channel minus the pixel's minimum channel, ``(H, W, 3)``."""
    arr = _rgb(img)
    return arr - arr.min(axis=2, keepdims=True)


def make_guide(img, kind: str) -> np.ndarray:
    if kind == "residue":
        return residue_channel(img)
    if kind == "colored-residue":
        return colored_residue(img)
    if kind == "input":
        return as_image(img)
    raise ValueError(f"unknown guide {kind!r}; expected one of {GUIDES}")


def box_mean(x: np.ndarray, radius: int) -> np.ndarray:
    """Mean over ``(2r+1)^2`` windows clipped at the border, via integral images."""
    h, w = x.shape[:2]
    pad = [(1, 0), (1, 0)] + [(0, 0)] * (x.ndim - 2)
    sat = np.pad(np.cumsum(np.cumsum(x, axis=0), axis=1), pad)
    y0 = np.clip(np.arange(h) - radius, 0, h)
    y1 = np.clip(np.arange(h) + radius + 1, 0, h)
    x0 = np.clip(np.arange(w) - radius, 0, w)
    x1 = np.clip(np.arange(w) + radius + 1, 0, w)
    total = sat[y1][:, x1] - sat[y0][:, x1] - sat[y1][:, x0] + sat[y0][:, x0]
    count = np.outer(y1 - y0, x1 - x0)
    if x.ndim == 3:
        count = count[:, :, None]
    return total / count


def _guided_gray(p: np.ndarray, g: np.ndarray, radius: int, eps: float) -> np.ndarray:
    mean_g = box_mean(g, radius)
    mean_p = box_mean(p, radius)
    cov_gp = box_mean(g * p, radius) - mean_g * mean_p
    var_g = box_mean(g * g, radius) - mean_g * mean_g
    denom = var_g + eps
    # eps == 0 on a flat window: no slope can be fitted, fall back to the mean
    fit = denom > 1e-12
    a = np.where(fit, cov_gp / np.where(fit, denom, 1.0), 0.0)
    b = mean_p - a * mean_g
    return box_mean(a, radius) * g + box_mean(b, radius)


def guided_filter(p, guide, radius: int, eps: float = DEFAULT_EPS) -> np.ndarray:
    """Edge-preserving smoothing of ``p`` steered by ``guide``.

    A single-channel guide steers every channel of ``p``; a guide with as many
    channels as ``p`` steers them channel by channel.  ``radius`` 0 returns
    ``p`` unchanged.  Returns float64.
    """
    if radius < 0:
        raise ValueError(f"radius must be >= 0, got {radius}")
    if eps < 0:
        raise ValueError(f"eps must be >= 0, got {eps}")
    src = as_image(p, name="p").astype(np.float64)
    g = np.asarray(guide, dtype=np.float64)
    if g.ndim == 2:
        g = g[:, :, None]
    if g.shape[:2] != src.shape[:2]:
        raise ValueError(f"shape mismatch: p {src.shape[:2]} vs guide {g.shape[:2]}")
    if g.shape[2] not in (1, src.shape[2]):
        raise ValueError(f"guide has {g.shape[2]} channels, p has {src.shape[2]}")
    out = np.empty_like(src)
    for c in range(src.shape[2]):
        gc = g[:, :, c if g.shape[2] > 1 else 0]
        out[:, :, c] = _guided_gray(src[:, :, c], gc, radius, eps)
    return out


def decompose(img, guide, kernel_sizes: Sequence[int] = (DEFAULT_KERNEL,), eps: float = DEFAULT_EPS) -> FrequencyPair:
    """Split ``img`` into a smooth low band and the residual high band.

    Each kernel size ``k`` (a power of two) gives a guided-filter low band
    with radius ``k // 2``; multiple sizes are averaged uniformly.  The low
    band is clamped to ``[0, 1]`` and the high band is the exact remainder.
    """
    sizes = list(kernel_sizes)
    if not sizes:
        raise ValueError("kernel_sizes must not be empty")
    for k in sizes:
        if k < 1 or k & (k - 1):
            raise ValueError(f"kernel size {k} is not a power of two")
    src = as_image(img)
    low = np.mean([guided_filter(src, guide, k // 2, eps) for k in sizes], axis=0)
    low = np.clip(low, 0.0, 1.0).astype(FLOAT)
    high = src.astype(np.float64) - low.astype(np.float64)
    return FrequencyPair(low=low, high=high)
