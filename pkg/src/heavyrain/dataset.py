"""Synthetic heavy-rain dataset generation with ground-truth sidecars.

Every sample ``i`` draws its parameters from ``split_stream(root, i)``, so the
output depends only on the input list, the root seed and the count, never on
worker scheduling.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .imgcore import RngStream, load_depth, load_image, normalize_depth, save_image, split_stream
from .synth import BLUR_LEVELS, RainSample, render, sample_params

log = logging.getLogger(__name__)

SCHEMA = 1
MANIFEST = "manifest.jsonl"
SPLITS = ("train", "val")
SIDECARS = {
    "rain": "rain.png",
    "clean": "clean.png",
    "cleanblur": "cleanblur.png",
    "streaks": "streaks.png",
    "trans": "trans.png",
    "params": "params.json",
}


@dataclass(frozen=True)
class SourcePair:
    clean: str
    depth: str


def read_pair_list(path) -> list[SourcePair]:
    """Parse a list file with one ``clean depth`` path pair per line.

    Blank lines and ``#`` comments are skipped; relative paths are resolved
    against the list file's directory.
    """
    path = Path(path)
    pairs = []
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'clean depth', got {line!r}")
        clean, depth = (str(p if Path(p).is_absolute() else path.parent / p) for p in parts)
        pairs.append(SourcePair(clean, depth))
    if not pairs:
        raise ValueError(f"{path}: no image pairs")
    return pairs


def params_record(sample: RainSample) -> dict:
    rec = sample.params.to_dict()
    rec["atm_rgb"] = [float(x) for x in sample.atm]
    return rec


def write_sample(out_dir, sample_id: str, sample: RainSample) -> dict:
    """Write one sample's images and parameter sidecar; return relative paths."""
    out_dir = Path(out_dir)
    files = {key: f"{sample_id}_{name}" for key, name in SIDECARS.items()}
    save_image(out_dir / files["rain"], sample.rain)
    save_image(out_dir / files["clean"], sample.clean)
    save_image(out_dir / files["cleanblur"], sample.clean_blur)
    save_image(out_dir / files["streaks"], sample.streaks)
    # the blurred transmission is the one the rain image was composed with
    save_image(out_dir / files["trans"], sample.trans_blur)
    (out_dir / files["params"]).write_text(json.dumps(params_record(sample), sort_keys=True, indent=2) + "\n")
    return files


def _generate_one(job) -> dict | None:
    index, pair, root_seed, out_dir, split, depth_scale, levels = job
    sample_id = f"{index:06d}"
    try:
        clean = load_image(pair.clean)
        depth = normalize_depth(load_depth(pair.depth, depth_scale))
        params = sample_params(split_stream(RngStream(root_seed), index))
        sample = render(clean, depth, params, levels)
        files = write_sample(out_dir, sample_id, sample)
    except (OSError, ValueError) as exc:
        log.error("sample %s skipped (%s, %s): %s", sample_id, pair.clean, pair.depth, exc)
        return None
    return {
        "schema": SCHEMA,
        "id": sample_id,
        "index": index,
        "split": split,
        "source": {"clean": pair.clean, "depth": pair.depth},
        "files": files,
        "params": params_record(sample),
    }


def generate_dataset(
    pairs: list[SourcePair],
    count: int,
    seed: int,
    out_dir,
    workers: int = 1,
    split: str = "train",
    depth_scale: float | None = None,
    levels: int = BLUR_LEVELS,
) -> tuple[list[dict], int]:
    """Render ``count`` samples, cycling through ``pairs``.

    Returns the manifest records and the number of failed samples.  The
    manifest is written to a temporary file and renamed into place.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    if split not in SPLITS:
        raise ValueError(f"split must be one of {SPLITS}, got {split!r}")
    if not pairs:
        raise ValueError("no image pairs given")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [(i, pairs[i % len(pairs)], seed, str(out_dir), split, depth_scale, levels) for i in range(count)]

    if workers == 1:
        results = [_generate_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_generate_one, jobs))

    records = [r for r in results if r is not None]
    tmp = out_dir / (MANIFEST + ".tmp")
    with open(tmp, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    os.replace(tmp, out_dir / MANIFEST)
    log.info("wrote %d/%d samples to %s", len(records), count, out_dir)
    return records, count - len(records)


def read_manifest(path) -> list[dict]:
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def load_sample_images(out_dir, record: dict) -> dict[str, np.ndarray]:
    out_dir = Path(out_dir)
    return {k: load_image(out_dir / v) for k, v in record["files"].items() if v.endswith(".png")}
