"""Outdoor heavy-rain rendering.

Pipeline for one clean image ``C`` with normalized depth ``D``:

1. ``C_blur``: depth-dependent Gaussian blur, ``sigma(x) = 1.5 * D(x)``
2. Gaussian noise ``N`` with ``mu ~ -U(0, 0.2) - 0.8``, ``sigma ~ U(0, 0.3) + 0.7``
3. streaks ``S``: ``N`` smeared by a motion kernel of length ``l ~ U(0, 40) + 20``
   at angle ``theta ~ U(80, 100)``
4. transmission ``T = exp(-beta * D)``, ``beta ~ U(3, 4.2)``
5. ``T_blur``: ``T`` blurred with ``sigma_T ~ N(5, 1.5)``
6. airlight ``A ~ U(0.3, 0.8)``, gray
7. ``I = T_blur * (C_blur + S) + (1 - T_blur) * A``

The noise is clamped to ``[0, 1]`` *before* motion filtering.  With a
negative mean an unclamped field blurs to a negative constant and produces
no streaks at all; clamping first keeps only the sparse positive tail.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy import ndimage

from .imgcore import FLOAT, DepthMap, RngStream, as_image
from .rainmodel import as_atmospheric_light, compose, transmission_from_depth

BLUR_SCALE = 1.5
BLUR_LEVELS = 48


@dataclass(frozen=True)
class RainParams:
    beta: float
    atm: float
    streak_len: int
    streak_angle: float
    noise_mu: float
    noise_sigma: float
    trans_blur_sigma: float
    blur_scale: float = BLUR_SCALE
    seed: int = 0

    def __post_init__(self):
        if self.streak_len < 1:
            raise ValueError(f"streak_len must be >= 1, got {self.streak_len}")
        if not 0 <= self.streak_angle < 180:
            raise ValueError(f"streak_angle must be in [0, 180), got {self.streak_angle}")
        if not self.noise_sigma > 0:
            raise ValueError(f"noise_sigma must be positive, got {self.noise_sigma}")
        if self.trans_blur_sigma < 0.1:
            raise ValueError(f"trans_blur_sigma must be >= 0.1, got {self.trans_blur_sigma}")
        if not self.beta > 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        if not 0 <= self.atm <= 1:
            raise ValueError(f"atm must be in [0, 1], got {self.atm}")
        if self.blur_scale < 0:
            raise ValueError(f"blur_scale must be >= 0, got {self.blur_scale}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RainParams":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass(frozen=True)
class RainSample:
    rain: np.ndarray
    clean: np.ndarray
    clean_blur: np.ndarray
    streaks: np.ndarray
    trans: np.ndarray
    trans_blur: np.ndarray
    atm: np.ndarray
    params: RainParams


def sample_params(rng: RngStream) -> RainParams:
    """Draw one set of rendering parameters.

    Draw order is fixed; changing it changes every dataset generated so far.
    """
    g = rng.generator()
    mu = -g.uniform(0.0, 0.2) - 0.8
    sigma = g.uniform(0.0, 0.3) + 0.7
    length = g.uniform(0.0, 40.0) + 20.0
    angle = g.uniform(80.0, 100.0)
    beta = g.uniform(3.0, 4.2)
    trans_sigma = g.normal(5.0, 1.5)
    atm = g.uniform(0.3, 0.8)
    seed = int(g.integers(0, 2**63))
    return RainParams(
        beta=float(beta),
        atm=float(atm),
        streak_len=max(int(round(length)), 1),
        streak_angle=float(angle),
        noise_mu=float(mu),
        noise_sigma=float(sigma),
        trans_blur_sigma=float(max(trans_sigma, 0.1)),
        seed=seed,
    )


def noise_map(h: int, w: int, mu: float, sigma: float, rng: RngStream) -> np.ndarray:
    """i.i.d. Gaussian noise, clamped to [0, 1], as an ``(h, w, 1)`` image."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    n = rng.generator().normal(mu, sigma, size=(h, w))
    return np.clip(n, 0.0, 1.0).astype(FLOAT)[:, :, None]


def motion_kernel(length: int, angle: float) -> np.ndarray:
    """Anti-aliased line kernel of ``length`` pixels at ``angle`` degrees.

    The angle is counter-clockwise from the horizontal axis with image rows
    pointing down.  A pixel's weight falls off linearly with its distance to
    the segment (1 px line width); the kernel is cropped to its support and
    normalized to unit sum.
    """
    length = int(length)
    if length < 1:
        raise ValueError(f"length must be >= 1, got {length}")
    if not 0 <= angle < 180:
        raise ValueError(f"angle must be in [0, 180), got {angle}")
    half = (length - 1) / 2.0
    rad = math.radians(angle)
    c, s = math.cos(rad), math.sin(rad)
    r = int(math.ceil(half)) + 1
    coords = np.arange(-r, r + 1, dtype=np.float64)
    x = coords[None, :]
    y = -coords[:, None]  # row index grows downwards
    along = np.abs(x * c + y * s)
    across = np.abs(-x * s + y * c)
    beyond = np.maximum(along - half, 0.0)
    dist = np.hypot(across, beyond)
    k = np.maximum(1.0 - dist, 0.0)
    # cos(90 deg) is ~6e-17, not 0; drop the resulting slivers
    k[k < 1e-9] = 0.0
    rows = np.flatnonzero(k.any(axis=1))
    cols = np.flatnonzero(k.any(axis=0))
    k = k[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]
    return k / k.sum()


def synthesize_streaks(noise: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Smear a single-channel noise map with ``kernel``; reflective borders."""
    n = as_image(noise, name="noise")
    if n.shape[2] != 1:
        raise ValueError("noise map must be single-channel")
    out = ndimage.convolve(n[:, :, 0].astype(np.float64), kernel, mode="reflect")
    return np.clip(out, 0.0, 1.0).astype(FLOAT)[:, :, None]


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled, unit-sum 1-D Gaussian with radius ``ceil(3 sigma)``."""
    if sigma <= 0:
        return np.ones(1)
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def blur_float64(img: np.ndarray, sigma: float) -> np.ndarray:
    """float64 separable blur over the first two axes."""
    if sigma <= 0:
        return img.copy()
    k = gaussian_kernel(sigma)
    out = ndimage.correlate1d(img, k, axis=0, mode="reflect")
    return ndimage.correlate1d(out, k, axis=1, mode="reflect")


def gaussian_blur(img, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with reflective borders; ``sigma == 0`` is identity."""
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    arr = np.asarray(img, dtype=FLOAT)
    if sigma == 0:
        return arr.copy()
    return blur_float64(arr.astype(np.float64), sigma).astype(FLOAT)


def _kernel_variance(sigma) -> np.ndarray:
    """Variance of the sampled kernel used by :func:`gaussian_kernel`.

    Linear interpolation between blur levels is done in this quantity: the
    blurred output is close to linear in the kernel's true variance even
    below ~0.5 px, where it is far from linear in ``sigma``.
    """
    sigma = np.atleast_1d(np.asarray(sigma, dtype=np.float64))
    out = np.zeros_like(sigma)
    pos = sigma > 0
    if not pos.any():
        return out
    s = sigma[pos]
    radius = int(math.ceil(3.0 * s.max()))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-(x[None, :] ** 2) / (2.0 * s[:, None] ** 2))
    w[np.abs(x)[None, :] > np.ceil(3.0 * s)[:, None]] = 0.0
    out[pos] = (w * x**2).sum(axis=1) / w.sum(axis=1)
    return out


def depth_variable_blur(clean, depth: DepthMap, scale: float = BLUR_SCALE, levels: int = BLUR_LEVELS) -> np.ndarray:
    """Blur each pixel with ``sigma(x) = scale * D(x)``.

    The image is blurred at ``levels`` values of sigma spaced uniformly over
    ``[0, scale * max D]``; each pixel interpolates linearly between its two
    bracketing levels, weighted by kernel variance.
    """
    if not depth.normalized:
        raise ValueError("depth must be normalized to [0, 1]; call normalize_depth first")
    if scale < 0:
        raise ValueError(f"scale must be >= 0, got {scale}")
    if levels < 2:
        raise ValueError(f"levels must be >= 2, got {levels}")
    img = as_image(clean, name="clean")
    if img.shape[:2] != depth.shape:
        raise ValueError(f"shape mismatch: image {img.shape[:2]} vs depth {depth.shape}")
    sigma = scale * depth.data.astype(np.float64)
    top = float(sigma.max())
    if top == 0.0:
        return img.copy()

    src = img.astype(np.float64)
    level_sigma = np.linspace(0.0, top, levels)
    level_var = _kernel_variance(level_sigma)
    pos = np.interp(_kernel_variance(sigma.ravel()), level_var, np.arange(levels)).reshape(sigma.shape)
    lower = np.clip(np.floor(pos).astype(np.intp), 0, levels - 2)
    frac = pos - lower

    out = np.zeros_like(src)
    for j, s in enumerate(level_sigma):
        weight = np.where(lower == j, 1.0 - frac, 0.0) + np.where(lower == j - 1, frac, 0.0)
        if not weight.any():
            continue
        out += weight[:, :, None] * blur_float64(src, s)
    out[sigma == 0] = src[sigma == 0]
    return out.astype(FLOAT)


def render(clean, depth: DepthMap, params: RainParams, levels: int = BLUR_LEVELS) -> RainSample:
    """Render a heavy-rain image and keep every intermediate as ground truth."""
    c = as_image(clean, name="clean")
    if not depth.normalized:
        raise ValueError("depth must be normalized to [0, 1]; call normalize_depth first")
    if c.shape[:2] != depth.shape:
        raise ValueError(f"shape mismatch: image {c.shape[:2]} vs depth {depth.shape}")
    h, w = depth.shape

    c_blur = depth_variable_blur(c, depth, params.blur_scale, levels)
    noise = noise_map(h, w, params.noise_mu, params.noise_sigma, RngStream(params.seed, 0))
    streaks = synthesize_streaks(noise, motion_kernel(params.streak_len, params.streak_angle))
    trans = transmission_from_depth(depth, params.beta)
    trans_blur = np.clip(gaussian_blur(trans, params.trans_blur_sigma), 0.0, 1.0)
    atm = as_atmospheric_light(params.atm)
    rain = compose(c_blur, streaks, trans_blur, atm)
    return RainSample(
        rain=rain,
        clean=c,
        clean_blur=c_blur,
        streaks=streaks,
        trans=trans,
        trans_blur=trans_blur,
        atm=atm,
        params=params,
    )


def rebuild(sample: RainSample) -> np.ndarray:
    """Recompose the rain image from the stored sidecars."""
    return compose(sample.clean_blur, sample.streaks, sample.trans_blur, sample.atm)
