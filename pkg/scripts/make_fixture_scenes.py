"""Write procedural clean/depth pairs and a pair list usable by ``heavyrain dataset``.

    python scripts/make_fixture_scenes.py --out scenes --count 8
    heavyrain dataset --list scenes/pairs.txt --out rain_ds --count 20
"""

import argparse
from pathlib import Path

from heavyrain.imgcore import RngStream, save_image, split_stream, write_pfm
from heavyrain.scenes import procedural_scene


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True, type=Path)
    ap.add_argument("--count", type=int, default=8)
    ap.add_argument("--height", type=int, default=240)
    ap.add_argument("--width", type=int, default=320)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    root = RngStream(args.seed)
    lines = []
    for i in range(args.count):
        clean, depth = procedural_scene(split_stream(root, i), args.height, args.width)
        save_image(args.out / f"scene{i:03d}.png", clean, bits=8)
        write_pfm(args.out / f"scene{i:03d}.pfm", depth.data)
        lines.append(f"scene{i:03d}.png scene{i:03d}.pfm")
    (args.out / "pairs.txt").write_text("\n".join(lines) + "\n")
    print(f"wrote {args.count} pairs to {args.out / 'pairs.txt'}")


if __name__ == "__main__":
    main()
