"""Stage-1 parameter estimation and physics-based deraining.

The estimators here are simple non-learned baselines (bright-pixel airlight,
dark-channel transmission, positive high-band streaks).  They exist so the
decompose -> estimate -> reconstruct pipeline runs end to end; parameter maps
from a trained network can be plugged in through :func:`load_external_params`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .decomp import DEFAULT_EPS, DEFAULT_KERNEL, decompose, make_guide
from .imgcore import FLOAT, ImageFormatError, as_image, load_image, luminance, save_image
from .rainmodel import T_MIN, as_atmospheric_light, as_streaks, as_transmission, reconstruct

BRIGHT_FRACTION = 0.01
DCP_OMEGA = 0.95
DCP_WINDOW = 15
STREAK_TAU = 0.02


@dataclass(frozen=True)
class ParamEstimate:
    streaks: np.ndarray
    trans: np.ndarray
    atm: np.ndarray
    source: str = "baseline"

    def __post_init__(self):
        if self.source not in ("baseline", "external"):
            raise ValueError(f"unknown source {self.source!r}")
        object.__setattr__(self, "streaks", as_streaks(self.streaks))
        object.__setattr__(self, "trans", as_transmission(self.trans))
        object.__setattr__(self, "atm", as_atmospheric_light(self.atm))


def estimate_atmospheric_light(low) -> np.ndarray:
    """Per-channel mean of the brightest 1% of pixels by luminance.

    Images under 100 pixels use the single brightest pixel.
    """
    img = as_image(low, name="low")
    flat = img.reshape(-1, img.shape[2]).astype(np.float64)
    lum = luminance(img).reshape(-1)
    n = lum.size
    count = max(int(n * BRIGHT_FRACTION), 1) if n >= 100 else 1
    # stable sort keeps ties deterministic
    idx = np.argsort(-lum, kind="stable")[:count]
    a = flat[idx].mean(axis=0)
    return as_atmospheric_light(np.clip(a, 0.0, 1.0))


def estimate_transmission(low, atm, omega: float = DCP_OMEGA, window: int = DCP_WINDOW, t_min: float = T_MIN) -> np.ndarray:
    """Dark-channel transmission ``1 - omega * min_{window, channel}(I / A)``."""
    img = as_image(low, name="low").astype(np.float64)
    a = as_atmospheric_light(atm)
    if np.any(a <= 0):
        raise ValueError("atmospheric light components must be positive")
    norm = img / (a[: img.shape[2]] if img.shape[2] == 3 else a[:1])
    dark = ndimage.minimum_filter(norm.min(axis=2), size=window, mode="nearest")
    return np.clip(1.0 - omega * dark, t_min, 1.0).astype(FLOAT)


def estimate_streaks(high, tau: float = STREAK_TAU) -> np.ndarray:
    """Positive high-band luminance; responses below ``tau`` are zeroed."""
    s = np.maximum(luminance(np.asarray(high, dtype=np.float64)), 0.0)
    s[s < tau] = 0.0
    return np.clip(s, 0.0, 1.0).astype(FLOAT)[:, :, None]


def estimate_params(rain, guide: str = "residue", kernel_sizes=(DEFAULT_KERNEL,), eps: float = DEFAULT_EPS, t_min: float = T_MIN) -> ParamEstimate:
    """Baseline Stage-1: decompose, then estimate S from the high band and A, T from the low band."""
    img = as_image(rain)
    bands = decompose(img, make_guide(img, guide), kernel_sizes, eps)
    atm = estimate_atmospheric_light(bands.low)
    # a black low band would make A zero; keep the division well defined
    atm = np.maximum(atm, 1e-3)
    trans = estimate_transmission(bands.low, atm, t_min=t_min)
    return ParamEstimate(estimate_streaks(bands.high), trans, atm, source="baseline")


def save_external_params(directory, params: ParamEstimate) -> Path:
    """Write ``streaks.png``, ``trans.png`` (16-bit) and ``atm.json``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_image(directory / "streaks.png", np.clip(params.streaks, 0.0, 1.0))
    save_image(directory / "trans.png", params.trans)
    (directory / "atm.json").write_text(json.dumps({"a": [float(x) for x in params.atm]}) + "\n")
    return directory


def load_external_params(directory) -> ParamEstimate:
    """Read a parameter directory produced by an external estimator."""
    directory = Path(directory)
    for name in ("streaks.png", "trans.png", "atm.json"):
        if not (directory / name).is_file():
            raise FileNotFoundError(f"missing {name} in {directory}")
    streaks = load_image(directory / "streaks.png")
    trans = load_image(directory / "trans.png")
    if trans.shape[2] != 1:
        raise ImageFormatError("trans.png must be single-channel")
    try:
        atm = json.loads((directory / "atm.json").read_text())["a"]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ValueError(f"atm.json must look like {{\"a\": [r, g, b]}}: {exc}") from exc
    if len(atm) != 3:
        raise ValueError(f"atm.json needs 3 components, got {len(atm)}")
    return ParamEstimate(streaks, trans[:, :, 0], atm, source="external")


def derain(rain, params: ParamEstimate, t_min: float = T_MIN) -> np.ndarray:
    """Physics-based restoration with the given S, T, A."""
    return reconstruct(rain, params.streaks, params.trans, params.atm, t_min)
