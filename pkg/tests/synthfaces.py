"""Procedural face images + parsing maps for tests and fixture datasets.

Nothing here is a real face; the geometry just guarantees every canonical
region exists with enough pixels for the mask and histogram machinery to be
exercised (lips/eye rings well above 500 px at 256×256).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from makeupnet import labels as L


def _ellipse(h, w, cy, cx, ry, rx):
    y, x = np.ogrid[:h, :w]
    return ((y - cy) / ry) ** 2 + ((x - cx) / rx) ** 2 <= 1.0


def synthetic_parsing(size: int, rng: np.random.Generator) -> np.ndarray:
    """Face-layout label map with every canonical region present."""
    s = size
    jit = lambda a, b: float(rng.uniform(a, b))
    par = np.zeros((s, s), dtype=np.uint8)
    par[int(0.9 * s):, :] = L.OTHER                      # clothing strip
    par[int(0.82 * s):int(0.9 * s), int(0.3 * s):int(0.7 * s)] = L.NECK
    # hair: big ellipse behind the face
    par[_ellipse(s, s, 0.42 * s, 0.5 * s, 0.40 * s, 0.36 * s)] = L.HAIR
    # face skin
    face = _ellipse(s, s, 0.48 * s, 0.5 * s, jit(0.30, 0.34) * s, jit(0.24, 0.28) * s)
    par[face] = L.FACE_SKIN
    # brows
    par[_ellipse(s, s, 0.36 * s, 0.36 * s, 0.014 * s, 0.07 * s)] = L.LEFT_BROW
    par[_ellipse(s, s, 0.36 * s, 0.64 * s, 0.014 * s, 0.07 * s)] = L.RIGHT_BROW
    # eyes
    par[_ellipse(s, s, 0.43 * s, 0.37 * s, 0.022 * s, 0.05 * s)] = L.LEFT_EYE
    par[_ellipse(s, s, 0.43 * s, 0.63 * s, 0.022 * s, 0.05 * s)] = L.RIGHT_EYE
    # nose
    par[_ellipse(s, s, 0.55 * s, 0.5 * s, 0.08 * s, 0.035 * s)] = L.NOSE
    # mouth: upper lip, inner mouth line, lower lip
    par[_ellipse(s, s, 0.665 * s, 0.5 * s, 0.022 * s, 0.085 * s)] = L.UPPER_LIP
    par[_ellipse(s, s, 0.695 * s, 0.5 * s, 0.010 * s, 0.06 * s)] = L.INNER_MOUTH
    par[_ellipse(s, s, 0.725 * s, 0.5 * s, 0.026 * s, 0.08 * s)] = L.LOWER_LIP
    return par


def synthetic_face(seed: int, size: int = 256) -> tuple[np.ndarray, np.ndarray]:
    """One (image, parsing) pair; image float32 in [-1, 1].

    Per-region base colours vary with the seed; a smooth gradient plus noise
    keeps regional histograms wide enough for stable CDF matching.
    """
    rng = np.random.default_rng(seed)
    par = synthetic_parsing(size, rng)
    img = np.zeros((size, size, 3), dtype=np.float32)
    for label in sorted(L.CANONICAL_LABELS):
        color = rng.uniform(-0.6, 0.6, size=3).astype(np.float32)
        img[par == label] = color
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float32) / size
    grad = 0.15 * (yy - 0.5)[..., None] + 0.1 * (xx - 0.5)[..., None]
    img = img + grad + rng.normal(0.0, 0.12, img.shape).astype(np.float32)
    return np.clip(img, -1.0, 1.0).astype(np.float32), par


def write_fixture_dataset(root: Path, n_pairs: int = 4, size: int = 256,
                          seed: int = 0) -> Path:
    """Materialize a dataset tree usable by MakeupDataset / the train CLI."""
    root = Path(root)
    for sub in ("images/makeup", "images/non-makeup", "segs/makeup", "segs/non-makeup"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    for i in range(n_pairs):
        for j, domain in enumerate(("non-makeup", "makeup")):
            img, par = synthetic_face(seed + 2 * i + j, size)
            name = f"{domain[:2]}_{i:03d}.png"
            Image.fromarray(((img + 1.0) * 127.5).astype(np.uint8)).save(
                root / "images" / domain / name)
            Image.fromarray(par, mode="L").save(root / "segs" / domain / name)
    return root
