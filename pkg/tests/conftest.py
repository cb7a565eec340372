from functools import lru_cache

import numpy as np
import pytest

from heavyrain.imgcore import RngStream, normalize_depth, save_image, split_stream, write_pfm
from heavyrain.scenes import procedural_scene
from heavyrain.synth import render, sample_params

SCENE_SEED = 11
RAIN_SEED = 2024


@lru_cache(maxsize=None)
def rendered_samples(n, height=120, width=160):
    """``n`` rendered samples over procedural scenes; cached across tests."""
    out = []
    for i in range(n):
        clean, depth = procedural_scene(split_stream(RngStream(SCENE_SEED), i), height, width)
        params = sample_params(split_stream(RngStream(RAIN_SEED), i))
        out.append(render(clean, normalize_depth(depth), params))
    return tuple(out)


def write_scene_pairs(directory, n, height=64, width=80):
    """Write ``n`` procedural clean/depth pairs and a list file; return its path."""
    lines = []
    for i in range(n):
        clean, depth = procedural_scene(split_stream(RngStream(SCENE_SEED), i), height, width)
        save_image(directory / f"clean{i}.png", clean, bits=8)
        write_pfm(directory / f"depth{i}.pfm", depth.data)
        lines.append(f"clean{i}.png depth{i}.pfm")
    path = directory / "pairs.txt"
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def scene_list(tmp_path):
    return write_scene_pairs(tmp_path, 3)


@lru_cache(maxsize=None)
def param_draws(n, seed=RAIN_SEED):
    """``n`` parameter draws from consecutive per-sample streams."""
    root = RngStream(seed)
    return tuple(sample_params(split_stream(root, i)) for i in range(n))
