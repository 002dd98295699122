"""Region-constrained histogram matching.

Classical 256-bin histogram specification per RGB channel: pixels of the
source inside its mask are remapped so their empirical CDF matches that of
the reference pixels inside the reference mask. Everything outside the
source mask is left bit-identical. The composite over the three makeup
components serves as the pseudo ground truth for the makeup loss.
"""

from __future__ import annotations

import numpy as np

from .labels import COMPONENTS, component_mask

BINS = 256


def _quantize(values: np.ndarray) -> np.ndarray:
    """[-1, 1] floats to integer bins 0..255."""
    return np.clip(np.round((values + 1.0) * 0.5 * (BINS - 1)), 0, BINS - 1).astype(np.int64)


def _dequantize(bins: np.ndarray) -> np.ndarray:
    return (bins.astype(np.float32) / (BINS - 1)) * 2.0 - 1.0


def histogram_match(
    source: np.ndarray,
    reference: np.ndarray,
    src_mask: np.ndarray,
    ref_mask: np.ndarray,
) -> np.ndarray:
    """Match the source's masked-region histogram to the reference's, per channel.

    Degenerates to a plain copy of the source when either mask is empty.
    """
    if source.shape != reference.shape:
        raise ValueError(f"source {source.shape} and reference {reference.shape} differ")
    if src_mask.shape != source.shape[:2] or ref_mask.shape != reference.shape[:2]:
        raise ValueError("mask shapes must match the image spatial size")

    out = source.copy()
    src_sel = src_mask.astype(bool)
    ref_sel = ref_mask.astype(bool)
    if not src_sel.any() or not ref_sel.any():
        return out

    for c in range(source.shape[2]):
        src_bins = _quantize(source[src_sel, c])
        ref_bins = _quantize(reference[ref_sel, c])
        src_cdf = np.bincount(src_bins, minlength=BINS).cumsum()
        ref_cdf = np.bincount(ref_bins, minlength=BINS).cumsum()
        src_cdf = src_cdf / src_cdf[-1]
        ref_cdf = ref_cdf / ref_cdf[-1]
        # smallest reference bin whose CDF reaches the source bin's CDF
        lookup = np.searchsorted(ref_cdf, src_cdf, side="left")
        lookup = np.clip(lookup, 0, BINS - 1)
        out[src_sel, c] = _dequantize(lookup[src_bins])
    return out


def makeup_target(
    source: np.ndarray,
    reference: np.ndarray,
    source_parsing: np.ndarray,
    reference_parsing: np.ndarray,
) -> np.ndarray:
    """Full-frame histogram-matching target for one transfer direction.

    Applies the three per-component matches sequentially; the component masks
    are pairwise disjoint, so the order does not matter.
    """
    out = source.copy()
    for com in COMPONENTS:
        out = histogram_match(
            out,
            reference,
            component_mask(source_parsing, com),
            component_mask(reference_parsing, com),
        )
    return out
