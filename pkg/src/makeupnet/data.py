"""Image / parsing ingestion and training-pair sampling.

Images are H×W×3 float32 in [-1, 1]; parsing maps are H×W uint8 in the
canonical label set. Everything here is pure with respect to its inputs,
so data loading can run on any number of workers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .labels import CANONICAL_LABELS


@dataclass
class PairSample:
    source: np.ndarray
    reference: np.ndarray
    source_parsing: np.ndarray
    reference_parsing: np.ndarray
    source_id: str = ""
    reference_id: str = ""


def to_unit_range(img_u8: np.ndarray) -> np.ndarray:
    """Map 8-bit RGB to float32 [-1, 1] via v / 127.5 - 1."""
    return (img_u8.astype(np.float32) / 127.5) - 1.0


def from_unit_range(img: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_unit_range`, rounding to 8-bit."""
    return np.clip((img + 1.0) * 127.5, 0, 255).astype(np.uint8)


def check_image(img: np.ndarray) -> None:
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"image must be H×W×3, got {img.shape}")
    if img.shape[0] % 4 or img.shape[1] % 4:
        raise ValueError(f"image size {img.shape[:2]} must be a multiple of 4")
    if img.min() < -1.0 or img.max() > 1.0:
        raise ValueError("image values must lie in [-1, 1]")


def remap_labels(parsing: np.ndarray, label_map: dict[int, int] | None) -> np.ndarray:
    """Translate raw dataset labels into the canonical set.

    Raises ValueError listing any label that is neither canonical nor covered
    by the mapping table.
    """
    if label_map:
        lut = np.arange(256, dtype=np.int32)
        for raw, canon in label_map.items():
            lut[int(raw)] = int(canon)
        parsing = lut[parsing.astype(np.int32)]
    bad = np.setdiff1d(np.unique(parsing), np.array(sorted(CANONICAL_LABELS)))
    if bad.size:
        raise ValueError(
            f"parsing contains labels outside the canonical set: {bad.tolist()}"
        )
    return parsing.astype(np.uint8)


def _decode_image(source, size: int, what: str) -> np.ndarray:
    try:
        with Image.open(source) as im:
            im = im.convert("RGB").resize((size, size), Image.BILINEAR)
            return np.asarray(im, dtype=np.uint8)
    except Exception as exc:
        raise ValueError(f"cannot decode {what}: {exc}") from exc


def _decode_parsing(source, size: int, what: str) -> np.ndarray:
    try:
        with Image.open(source) as im:
            if im.mode not in ("L", "P", "I", "I;16"):
                im = im.convert("L")
            im = im.resize((size, size), Image.NEAREST)
            arr = np.asarray(im)
            if arr.ndim == 3:
                arr = arr[..., 0]
            return arr
    except Exception as exc:
        raise ValueError(f"cannot decode {what}: {exc}") from exc


def load_image(path: str | Path, size: int) -> np.ndarray:
    """Decode an RGB image, bilinear-resize to size×size, map to [-1, 1]."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    return to_unit_range(_decode_image(path, size, f"image {path}"))


def load_image_bytes(data: bytes, size: int) -> np.ndarray:
    import io

    return to_unit_range(_decode_image(io.BytesIO(data), size, "image upload"))


def load_parsing(
    path: str | Path, size: int, label_map: dict[int, int] | None = None
) -> np.ndarray:
    """Decode an indexed label image, nearest-resize, remap to canonical labels."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    return remap_labels(_decode_parsing(path, size, f"parsing map {path}"), label_map)


def load_parsing_bytes(
    data: bytes, size: int, label_map: dict[int, int] | None = None
) -> np.ndarray:
    import io

    return remap_labels(
        _decode_parsing(io.BytesIO(data), size, "parsing upload"), label_map
    )


def load_sample(
    image_path: str | Path,
    parsing_path: str | Path,
    size: int,
    label_map: dict[int, int] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Load one (image, parsing) pair at the given square size."""
    image = load_image(image_path, size)
    parsing = load_parsing(parsing_path, size, label_map)
    return image, parsing


def extract_component(image: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Keep the masked region, black out the rest.

    Masking is defined on the [0, 1] representation (masked-out pixels are
    black), then renormalized, so outside the mask the value is exactly -1.
    Inside the mask pixels are bit-identical to the input.
    """
    if image.shape[:2] != mask.shape:
        raise ValueError(f"image {image.shape[:2]} and mask {mask.shape} differ")
    return np.where(mask.astype(bool)[..., None], image,
                    np.float32(-1.0)).astype(image.dtype, copy=False)


def draw_pair(
    makeup_pool: list[str], nonmakeup_pool: list[str], rng_seed: int
) -> tuple[str, str]:
    """Uniform independent (non-makeup source, makeup reference) id draw.

    Deterministic under a fixed seed; the generator is private to the call so
    concurrent samplers never share state.
    """
    if not makeup_pool or not nonmakeup_pool:
        raise ValueError("both sample pools must be non-empty")
    rng = np.random.default_rng(rng_seed)
    source_id = nonmakeup_pool[int(rng.integers(len(nonmakeup_pool)))]
    reference_id = makeup_pool[int(rng.integers(len(makeup_pool)))]
    return source_id, reference_id


class MakeupDataset:
    """Directory-layout dataset: images/{makeup,non-makeup}, segs/{makeup,non-makeup}.

    An optional JSON mapping file translates the dataset's raw parsing labels
    into the canonical set.
    """

    IMAGE_EXTS = (".png", ".jpg", ".jpeg")

    def __init__(self, root: str | Path, size: int = 256,
                 label_map_path: str | Path | None = None):
        self.root = Path(root)
        self.size = size
        self.label_map = None
        if label_map_path is not None:
            with open(label_map_path) as fh:
                raw = json.load(fh)
            self.label_map = {int(k): int(v) for k, v in raw.items()}
        self.makeup_ids = self._scan("makeup")
        self.nonmakeup_ids = self._scan("non-makeup")

    def _scan(self, domain: str) -> list[str]:
        img_dir = self.root / "images" / domain
        if not img_dir.is_dir():
            raise FileNotFoundError(f"missing dataset directory {img_dir}")
        ids = sorted(
            p.name for p in img_dir.iterdir() if p.suffix.lower() in self.IMAGE_EXTS
        )
        return ids

    def _seg_path(self, domain: str, sample_id: str) -> Path:
        stem = Path(sample_id).stem
        seg_dir = self.root / "segs" / domain
        for ext in (".png", ".jpg", ".jpeg"):
            cand = seg_dir / (stem + ext)
            if cand.exists():
                return cand
        raise FileNotFoundError(f"no parsing map for {domain}/{sample_id} in {seg_dir}")

    def load(self, domain: str, sample_id: str) -> tuple[np.ndarray, np.ndarray]:
        img_path = self.root / "images" / domain / sample_id
        return load_sample(img_path, self._seg_path(domain, sample_id),
                           self.size, self.label_map)

    def sample_pair(self, rng_seed: int) -> PairSample:
        source_id, reference_id = draw_pair(
            self.makeup_ids, self.nonmakeup_ids, rng_seed
        )
        source, source_parsing = self.load("non-makeup", source_id)
        reference, reference_parsing = self.load("makeup", reference_id)
        return PairSample(source, reference, source_parsing, reference_parsing,
                          source_id=source_id, reference_id=reference_id)
