"""Heavy-rain image formation: streaks, transmission veil and atmospheric light.

The full model composes a background ``J`` with additive streaks ``S`` seen
through a transmission map ``T`` and a global airlight ``A``::

    I = T * (J + S) + (1 - T) * A

All functions accept float arrays in ``[0, 1]``; transmission maps are
``(H, W)`` and broadcast over channels, atmospheric light is a 3-vector
broadcast over pixels.  Intermediate arithmetic runs in float64 and results
are clamped to ``[0, 1]`` and returned as float32.
"""

from __future__ import annotations

import warnings

import numpy as np

from .imgcore import FLOAT, DepthMap

T_MIN = 0.05


def as_transmission(t) -> np.ndarray:
    arr = np.asarray(t, dtype=FLOAT)
    if arr.ndim == 3 and arr.shape[2] == 1:
        arr = arr[:, :, 0]
    if arr.ndim != 2:
        raise ValueError(f"transmission must be HxW, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("transmission values must be finite and in [0, 1]")
    return arr


def as_atmospheric_light(a) -> np.ndarray:
    arr = np.asarray(a, dtype=np.float64).reshape(-1)
    if arr.size == 1:
        arr = np.repeat(arr, 3)
    if arr.size != 3:
        raise ValueError(f"atmospheric light needs 1 or 3 components, got {arr.size}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("atmospheric light components must be in [0, 1]")
    return arr


def as_streaks(s) -> np.ndarray:
    arr = np.asarray(s, dtype=FLOAT)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ValueError(f"streak map must be HxW or HxWx{{1,3}}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise ValueError("streak map values must be finite and nonnegative")
    return arr


def _check_spatial(*arrays):
    shapes = {a.shape[:2] for a in arrays}
    if len(shapes) != 1:
        raise ValueError(f"spatial shape mismatch: {sorted(shapes)}")


def _image(x) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    return arr[:, :, None] if arr.ndim == 2 else arr


def _airlight(a, channels: int) -> np.ndarray:
    a = as_atmospheric_light(a)
    if channels == 1:
        return a[:1]
    return a


def compose_simple(background, streaks) -> np.ndarray:
    """Streaks-only model: ``clamp(J + S)``."""
    j = _image(background)
    s = _image(as_streaks(streaks))
    _check_spatial(j, s)
    if s.shape[2] not in (1, j.shape[2]):
        raise ValueError("streak channels must be 1 or match the background")
    return np.clip(j + s, 0.0, 1.0).astype(FLOAT)


def compose_unclamped(background, streaks, trans, atm) -> np.ndarray:
    j = _image(background)
    s = _image(as_streaks(streaks))
    t = as_transmission(trans).astype(np.float64)[:, :, None]
    _check_spatial(j, s, t)
    if s.shape[2] not in (1, j.shape[2]):
        raise ValueError("streak channels must be 1 or match the background")
    a = _airlight(atm, j.shape[2])
    return t * (j + s) + (1.0 - t) * a


def compose(background, streaks, trans, atm) -> np.ndarray:
    """Full rain model ``clamp(T (J + S) + (1 - T) A)``."""
    return np.clip(compose_unclamped(background, streaks, trans, atm), 0.0, 1.0).astype(FLOAT)


def reconstruct(rain, streaks, trans, atm, t_min: float = T_MIN) -> np.ndarray:
    """Invert the rain model for the background.

    ``J = (I - (1 - T') A) / T' - S`` with ``T' = max(T, t_min)``.
    """
    if not 0 < t_min <= 1:
        raise ValueError(f"t_min must be in (0, 1], got {t_min}")
    i = _image(rain)
    s = _image(as_streaks(streaks))
    t = np.maximum(as_transmission(trans).astype(np.float64), t_min)[:, :, None]
    _check_spatial(i, s, t)
    a = _airlight(atm, i.shape[2])
    j = (i - (1.0 - t) * a) / t - s
    return np.clip(j, 0.0, 1.0).astype(FLOAT)


def transmission_from_depth(depth: DepthMap, beta: float) -> np.ndarray:
    """Exponential attenuation ``exp(-beta * d)`` over normalized depth."""
    if not depth.normalized:
        raise ValueError("depth must be normalized to [0, 1]; call normalize_depth first")
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return np.exp(-beta * depth.data.astype(np.float64)).astype(FLOAT)


def relative_depth(trans, t_min: float = T_MIN) -> DepthMap:
    """Min-max normalized ``-log T``: relative scene depth in ``[0, 1]``.

    Zero transmission is clamped to ``t_min`` before the logarithm.
    """
    t = as_transmission(trans).astype(np.float64)
    if np.any(t == 0):
        warnings.warn(f"zero transmission clamped to {t_min} before log", RuntimeWarning, stacklevel=2)
        t = np.where(t == 0, t_min, t)
    d = -np.log(t)
    lo, hi = d.min(), d.max()
    if hi <= lo:
        return DepthMap(np.zeros_like(t, dtype=FLOAT), normalized=True)
    return DepthMap(np.clip((d - lo) / (hi - lo), 0.0, 1.0), normalized=True)
