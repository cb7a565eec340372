"""Command-line interface.

Diagnostics go to stderr; machine-readable results (JSON) go to stdout.
Exit codes: 0 success, 1 validation error, 2 partial dataset failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import decomp, estimate, metrics
from .dataset import SPLITS, generate_dataset, params_record, read_pair_list, write_sample
from .imgcore import RngStream, load_depth, load_image, normalize_depth, save_image
from .rainmodel import T_MIN
from .synth import render, sample_params

log = logging.getLogger("heavyrain")

DEFAULT_SEED = 1234
COMMANDS = ("dataset", "render", "decompose", "derain", "eval")
HIGH_OFFSET = 0.5
HIGH_SCALE = 0.5


class UsageError(Exception):
    pass


@dataclass
class JobConfig:
    command: str
    inputs: dict = field(default_factory=dict)
    out: str | None = None
    seed: int = DEFAULT_SEED
    workers: int = 1
    flags: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="heavyrain", description="Heavy-rain rendering, decomposition, deraining and evaluation.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def seeded(sp):
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"root seed (default {DEFAULT_SEED})")
        sp.add_argument("--depth-scale", type=float, default=None, help="depth units per 16-bit PNG code")

    def decomp_flags(sp):
        sp.add_argument("--guide", choices=decomp.GUIDES, default=None, help="guidance image (default residue)")
        sp.add_argument("--kernel", type=int, action="append", default=None,
                        help="power-of-two kernel size; repeat to average several scales (default 64)")
        sp.add_argument("--eps", type=float, default=None, help=f"guided filter regularizer (default {decomp.DEFAULT_EPS})")

    sp = sub.add_parser("dataset", help="render a synthetic dataset from clean/depth pairs")
    sp.add_argument("--list", required=True, help="text file with one 'clean.png depth.pfm' pair per line")
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--count", type=int, default=100, help="number of samples (default 100)")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--split", choices=SPLITS, default="train", help="split label recorded in the manifest")
    seeded(sp)

    sp = sub.add_parser("render", help="render one rain sample with all sidecars")
    sp.add_argument("--image", required=True)
    sp.add_argument("--depth", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--id", default="sample")
    seeded(sp)

    sp = sub.add_parser("decompose", help="split an image into low/high frequency bands")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", required=True, help="output directory for lo.png and hi.png")
    decomp_flags(sp)

    sp = sub.add_parser("derain", help="physics-based reconstruction of the background")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out", required=True, help="output PNG")
    sp.add_argument("--params", help="directory with streaks.png, trans.png, atm.json; baseline estimators if absent")
    sp.add_argument("--save-params", help="also write the parameters used to this directory")
    sp.add_argument("--t-min", type=float, default=T_MIN)
    decomp_flags(sp)

    sp = sub.add_parser("eval", help="PSNR/SSIM/MSE between a result and a reference")
    sp.add_argument("--result", required=True)
    sp.add_argument("--reference", required=True)
    sp.add_argument("--atm", help="estimated airlight JSON ({'a': [r, g, b]} or a sample params.json)")
    sp.add_argument("--atm-ref", help="reference airlight JSON")
    sp.add_argument("--peak", type=float, default=1.0)
    return p


def config_from_args(args: argparse.Namespace) -> JobConfig:
    d = dict(vars(args))
    command = d.pop("command")
    d.pop("verbose", None)
    cfg = JobConfig(command=command, seed=d.pop("seed", DEFAULT_SEED), workers=d.pop("workers", 1), out=d.pop("out", None))
    for key in ("list", "image", "depth", "input", "params", "result", "reference", "atm", "atm_ref"):
        if key in d:
            cfg.inputs[key] = d.pop(key)
    cfg.flags = d
    return cfg


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _read_atm(path) -> list[float]:
    data = json.loads(Path(path).read_text())
    for key in ("a", "atm_rgb"):
        if key in data:
            return [float(x) for x in data[key]]
    raise UsageError(f"{path}: no airlight found (expected key 'a' or 'atm_rgb')")


def _fmt(x: float):
    return "inf" if math.isinf(x) else round(x, 6)


def _run_dataset(cfg: JobConfig) -> int:
    pairs = read_pair_list(cfg.inputs["list"])
    records, failed = generate_dataset(
        pairs, cfg.flags["count"], cfg.seed, cfg.out, cfg.workers, cfg.flags["split"], cfg.flags["depth_scale"]
    )
    _emit({"manifest": str(Path(cfg.out) / "manifest.jsonl"), "written": len(records), "failed": failed})
    return 2 if failed else 0


def _run_render(cfg: JobConfig) -> int:
    clean = load_image(cfg.inputs["image"])
    depth = normalize_depth(load_depth(cfg.inputs["depth"], cfg.flags["depth_scale"]))
    params = sample_params(RngStream(cfg.seed))
    sample = render(clean, depth, params)
    files = write_sample(cfg.out, cfg.flags["id"], sample)
    _emit({"id": cfg.flags["id"], "files": files, "params": params_record(sample)})
    return 0


def _decomp_settings(cfg: JobConfig) -> tuple[str, list[int], float]:
    guide = cfg.flags.get("guide") or "residue"
    kernels = cfg.flags.get("kernel") or [decomp.DEFAULT_KERNEL]
    eps = cfg.flags.get("eps")
    return guide, kernels, decomp.DEFAULT_EPS if eps is None else eps


def _run_decompose(cfg: JobConfig) -> int:
    img = load_image(cfg.inputs["input"])
    guide, kernels, eps = _decomp_settings(cfg)
    bands = decomp.decompose(img, decomp.make_guide(img, guide), kernels, eps)
    err = float(np.abs(bands.low.astype(np.float64) + bands.high - img).max())
    if err > 1e-6:
        raise RuntimeError(f"decomposition additivity check failed: max error {err:.3g}")
    out = Path(cfg.out)
    save_image(out / "lo.png", bands.low)
    save_image(out / "hi.png", HIGH_OFFSET + HIGH_SCALE * bands.high)
    _emit({
        "lo": str(out / "lo.png"),
        "hi": str(out / "hi.png"),
        "hi_encoding": {"offset": HIGH_OFFSET, "scale": HIGH_SCALE, "decode": "high = (png - offset) / scale"},
        "guide": guide,
        "kernels": kernels,
        "eps": eps,
        "additivity_error": err,
    })
    return 0


def _run_derain(cfg: JobConfig) -> int:
    img = load_image(cfg.inputs["input"])
    if cfg.inputs.get("params"):
        if any(cfg.flags.get(k) is not None for k in ("guide", "kernel", "eps")):
            raise UsageError("--params conflicts with --guide/--kernel/--eps (those drive the baseline estimators)")
        params = estimate.load_external_params(cfg.inputs["params"])
    else:
        guide, kernels, eps = _decomp_settings(cfg)
        params = estimate.estimate_params(img, guide, kernels, eps, cfg.flags["t_min"])
    if cfg.flags.get("save_params"):
        estimate.save_external_params(cfg.flags["save_params"], params)
    result = estimate.derain(img, params, cfg.flags["t_min"])
    save_image(cfg.out, result)
    _emit({"output": str(cfg.out), "source": params.source, "atm": [round(float(x), 6) for x in params.atm]})
    return 0


def _run_eval(cfg: JobConfig) -> int:
    a = load_image(cfg.inputs["result"])
    b = load_image(cfg.inputs["reference"])
    report = metrics.evaluate(a, b, cfg.flags["peak"])
    atm_error = None
    if bool(cfg.inputs.get("atm")) != bool(cfg.inputs.get("atm_ref")):
        raise UsageError("--atm and --atm-ref must be given together")
    if cfg.inputs.get("atm"):
        atm_error = _fmt(metrics.atm_light_error(_read_atm(cfg.inputs["atm"]), _read_atm(cfg.inputs["atm_ref"])))
    _emit({"psnr": _fmt(report.psnr), "ssim": _fmt(report.ssim), "mse": _fmt(report.mse), "atm_error": atm_error})
    return 0


RUNNERS = {
    "dataset": _run_dataset,
    "render": _run_render,
    "decompose": _run_decompose,
    "derain": _run_derain,
    "eval": _run_eval,
}


def run(cfg: JobConfig) -> int:
    if cfg.command not in RUNNERS:
        log.error("unknown command %r; expected one of %s", cfg.command, ", ".join(COMMANDS))
        return 1
    if cfg.workers < 1:
        log.error("--workers must be >= 1")
        return 1
    try:
        return RUNNERS[cfg.command](cfg)
    except (UsageError, ValueError, OSError, RuntimeError) as exc:
        log.error("%s", exc)
        return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s", stream=sys.stderr)
    return run(config_from_args(args))


if __name__ == "__main__":
    sys.exit(main())
