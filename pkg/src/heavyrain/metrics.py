"""Losses and restoration quality metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .imgcore import luminance
from .rainmodel import as_atmospheric_light
from .synth import blur_float64

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
LEAKAGE_SIGMA = 4.0
STREAK_THRESHOLD = 0.1


@dataclass(frozen=True)
class PhysicsLossReport:
    l_s: float
    l_a: float
    l_t: float
    l_theta: float
    lambdas: tuple[float, float, float]


@dataclass(frozen=True)
class EvalReport:
    psnr: float
    ssim: float
    mse: float


def _pair(a, b) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def mse(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean((a - b) ** 2))


def psnr(a, b, peak: float = 1.0) -> float:
    """PSNR in dB; ``math.inf`` for identical inputs."""
    if not peak > 0:
        raise ValueError(f"peak must be positive, got {peak}")
    err = mse(a, b)
    if err == 0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def ssim_window() -> np.ndarray:
    r = SSIM_WINDOW // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    g = np.exp(-(x * x) / (2.0 * SSIM_SIGMA**2))
    return g / g.sum()


def _ssim_gray(a: np.ndarray, b: np.ndarray, data_range: float) -> float:
    g = ssim_window()
    r = SSIM_WINDOW // 2

    def filt(x):
        x = ndimage.correlate1d(x, g, axis=0, mode="constant")
        x = ndimage.correlate1d(x, g, axis=1, mode="constant")
        # keep only windows that lie fully inside the image
        return x[r : x.shape[0] - r, r : x.shape[1] - r]

    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    mu_a, mu_b = filt(a), filt(b)
    var_a = filt(a * a) - mu_a**2
    var_b = filt(b * b) - mu_b**2
    cov = filt(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def ssim(a, b, data_range: float = 1.0) -> float:
    """Mean SSIM over all 11x11 windows inside the image, averaged over channels."""
    a, b = _pair(a, b)
    if a.ndim == 2:
        a, b = a[:, :, None], b[:, :, None]
    if a.shape[0] < SSIM_WINDOW or a.shape[1] < SSIM_WINDOW:
        raise ValueError(f"image {a.shape[:2]} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")
    return float(np.mean([_ssim_gray(a[:, :, c], b[:, :, c], data_range) for c in range(a.shape[2])]))


def evaluate(a, b, peak: float = 1.0) -> EvalReport:
    return EvalReport(psnr=psnr(a, b, peak), ssim=ssim(a, b, peak), mse=mse(a, b))


def atm_light_error(atm, atm_gt) -> float:
    """Sum of absolute per-channel differences of the airlight."""
    return float(np.abs(as_atmospheric_light(atm) - as_atmospheric_light(atm_gt)).sum())


def physics_loss(est, gt, lambdas=(1.0, 1.0, 1.0)) -> PhysicsLossReport:
    """MSE on streaks, airlight and transmission, and their weighted sum.

    ``est`` is a :class:`~heavyrain.estimate.ParamEstimate`; ``gt`` a
    :class:`~heavyrain.synth.RainSample`, whose blurred transmission is the
    one the rain image was composed with.
    """
    lam_s, lam_a, lam_t = (float(x) for x in lambdas)
    l_s = mse(est.streaks, gt.streaks)
    l_a = mse(as_atmospheric_light(est.atm), as_atmospheric_light(gt.atm))
    l_t = mse(est.trans, gt.trans_blur)
    return PhysicsLossReport(
        l_s=l_s,
        l_a=l_a,
        l_t=l_t,
        l_theta=lam_s * l_s + lam_a * l_a + lam_t * l_t,
        lambdas=(lam_s, lam_a, lam_t),
    )


def streak_leakage(low, streaks_gt, threshold: float = STREAK_THRESHOLD) -> float:
    """Mean high-frequency residue of ``low`` over ground-truth streak pixels."""
    low = np.asarray(low, dtype=np.float64)
    s = np.asarray(streaks_gt, dtype=np.float64)
    if s.ndim == 3:
        s = s.max(axis=2)
    if low.shape[:2] != s.shape:
        raise ValueError(f"shape mismatch: {low.shape[:2]} vs {s.shape}")
    mask = s > threshold
    count = int(mask.sum())
    if count == 0:
        return 0.0
    detail = luminance(low - blur_float64(low, LEAKAGE_SIGMA))
    return float(np.abs(detail[mask]).sum() / count)


def streak_energy_fraction(high, rain, streaks_gt) -> float:
    """``||S * I_H|| / ||S * I||``: share of the streak-weighted signal in the high band."""
    s = np.asarray(streaks_gt, dtype=np.float64)
    if s.ndim == 2:
        s = s[:, :, None]
    hi = np.linalg.norm(s * np.asarray(high, dtype=np.float64))
    full = np.linalg.norm(s * np.asarray(rain, dtype=np.float64))
    return float(hi / full) if full > 0 else 0.0
