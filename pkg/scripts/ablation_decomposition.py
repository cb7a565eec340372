"""Compare guidance images for the frequency split on rendered samples.

For each guide, reports the median streak leakage into the low band, the
median share of streak energy in the high band, and baseline estimator
quality (airlight error, transmission correlation, streak recall).
"""

import argparse
import time

import numpy as np

from heavyrain.decomp import GUIDES, decompose, make_guide
from heavyrain.estimate import estimate_atmospheric_light, estimate_streaks, estimate_transmission
from heavyrain.imgcore import RngStream, normalize_depth, split_stream
from heavyrain.metrics import atm_light_error, streak_energy_fraction, streak_leakage
from heavyrain.scenes import procedural_scene
from heavyrain.synth import render, sample_params


def rendered(n, height, width, scene_seed, rain_seed):
    for i in range(n):
        clean, depth = procedural_scene(split_stream(RngStream(scene_seed), i), height, width)
        yield render(clean, normalize_depth(depth), sample_params(split_stream(RngStream(rain_seed), i)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=50)
    ap.add_argument("--height", type=int, default=120)
    ap.add_argument("--width", type=int, default=160)
    ap.add_argument("--kernel", type=int, default=64)
    ap.add_argument("--eps", type=float, default=1e-2)
    ap.add_argument("--scene-seed", type=int, default=11)
    ap.add_argument("--rain-seed", type=int, default=2024)
    args = ap.parse_args()

    stats = {g: {"leak": [], "frac": [], "atm": [], "tcorr": [], "recall": []} for g in GUIDES}
    raw_atm = []
    start = time.perf_counter()
    for s in rendered(args.samples, args.height, args.width, args.scene_seed, args.rain_seed):
        raw_atm.append(atm_light_error(estimate_atmospheric_light(s.rain), s.atm))
        mask = s.streaks[:, :, 0] > 0.1
        for g in GUIDES:
            bands = decompose(s.rain, make_guide(s.rain, g), (args.kernel,), args.eps)
            atm = np.maximum(estimate_atmospheric_light(bands.low), 1e-3)
            trans = estimate_transmission(bands.low, atm)
            st = stats[g]
            st["leak"].append(streak_leakage(bands.low, s.streaks))
            st["frac"].append(streak_energy_fraction(bands.high, s.rain, s.streaks))
            st["atm"].append(atm_light_error(atm, s.atm))
            st["tcorr"].append(np.corrcoef(trans.ravel(), s.trans_blur.ravel())[0, 1])
            if mask.any():
                st["recall"].append((estimate_streaks(bands.high)[:, :, 0][mask] > 0).mean())

    print(f"{args.samples} samples, {args.height}x{args.width}, k={args.kernel}, eps={args.eps}, "
          f"{time.perf_counter() - start:.1f} s")
    print(f"{'guide':<16}{'leak':>9}{'E_high':>9}{'A err':>9}{'T corr>0':>10}{'recall':>9}")
    for g, st in stats.items():
        print(f"{g:<16}{np.median(st['leak']):>9.4f}{np.median(st['frac']):>9.3f}{np.median(st['atm']):>9.3f}"
              f"{np.mean(np.array(st['tcorr']) > 0):>10.0%}{np.median(st['recall']):>9.3f}")
    print(f"{'(raw input)':<16}{'':>9}{'':>9}{np.median(raw_atm):>9.3f}")
    frac = np.array(stats["residue"]["frac"]) > np.array(stats["input"]["frac"])
    print(f"residue E_high > input E_high on {frac.mean():.0%} of samples")


if __name__ == "__main__":
    main()
