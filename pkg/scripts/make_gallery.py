#!/usr/bin/env python3
"""Generate the bundled try-on gallery: demo faces with parsing maps.

Writes PNG pairs plus an index.json consumable by the frontend into the
target directory (default: frontend/public/gallery).
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np
from PIL import Image

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from synthfaces import synthetic_face  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=str(ROOT / "frontend" / "public" / "gallery"))
    parser.add_argument("--size", type=int, default=256)
    parser.add_argument("--sources", type=int, default=3)
    parser.add_argument("--references", type=int, default=4)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    index = []
    spec = [("source", i, 100 + i) for i in range(args.sources)]
    spec += [("reference", i, 500 + i) for i in range(args.references)]
    for kind, i, seed in spec:
        image, parsing = synthetic_face(seed, args.size)
        name = f"{kind}_{i}"
        Image.fromarray(((image + 1) * 127.5).astype(np.uint8)).save(out / f"{name}.png")
        Image.fromarray(parsing, mode="L").save(out / f"{name}_seg.png")
        index.append({
            "name": name,
            "image": f"{name}.png",
            "parsing": f"{name}_seg.png",
            "kind": kind,
        })
    (out / "index.json").write_text(json.dumps(index, indent=2))
    print(f"wrote {len(index)} gallery faces to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
