"""Canonical face-parsing labels and component mask derivation.

Every parsing map entering the pipeline is expressed in one internal label
vocabulary; dataset-specific schemes are translated on load (see data.py).
Component masks for the three makeup regions are derived here and are
pairwise disjoint by construction.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import binary_dilation

BACKGROUND = 0
FACE_SKIN = 1
LEFT_BROW = 2
RIGHT_BROW = 3
LEFT_EYE = 4
RIGHT_EYE = 5
NOSE = 6
UPPER_LIP = 7
INNER_MOUTH = 8
LOWER_LIP = 9
HAIR = 10
NECK = 11
OTHER = 12

CANONICAL_LABELS = frozenset(range(13))

# Lips exclude the inner mouth (no lipstick on teeth); skin covers face and
# nose but not the neck. Eye makeup sits on the skin ring around each eye,
# not on the eyeball or brows.
LIPS_LABELS = (UPPER_LIP, LOWER_LIP)
SKIN_LABELS = (FACE_SKIN, NOSE)
EYE_BALL_LABELS = (LEFT_EYE, RIGHT_EYE)
EYE_EXCLUDED_LABELS = (LEFT_BROW, RIGHT_BROW, LEFT_EYE, RIGHT_EYE)

COMPONENTS = ("skin", "lips", "eyes")
SIDE_EYE_COMPONENTS = ("left_eye", "right_eye")


class UnknownComponentError(ValueError):
    pass


def validate_parsing(parsing: np.ndarray) -> None:
    """Raise ValueError if the map holds labels outside the canonical set."""
    if parsing.ndim != 2:
        raise ValueError(f"parsing map must be 2-D, got shape {parsing.shape}")
    bad = np.setdiff1d(np.unique(parsing), np.array(sorted(CANONICAL_LABELS)))
    if bad.size:
        raise ValueError(f"parsing contains non-canonical labels: {bad.tolist()}")


def eye_ring_radius(height: int, width: int) -> int:
    """Dilation radius of the eye-shadow ring for a given map size."""
    return math.ceil(min(height, width) / 16)


def _disc(radius: int) -> np.ndarray:
    y, x = np.ogrid[-radius:radius + 1, -radius:radius + 1]
    return (x * x + y * y) <= radius * radius


def _eye_ring(parsing: np.ndarray, eye_labels: tuple[int, ...]) -> np.ndarray:
    eye = np.isin(parsing, eye_labels)
    if not eye.any():
        return np.zeros(parsing.shape, dtype=np.uint8)
    radius = eye_ring_radius(*parsing.shape)
    ring = binary_dilation(eye, structure=_disc(radius))
    ring &= np.isin(parsing, SKIN_LABELS)
    ring &= ~np.isin(parsing, EYE_EXCLUDED_LABELS)
    return ring.astype(np.uint8)


def component_mask(parsing: np.ndarray, component: str) -> np.ndarray:
    """Binary H×W mask for one makeup component.

    ``eyes`` is the dilated skin ring around both eyes; ``skin`` is the
    face/nose area minus that ring, so skin/lips/eyes never overlap.
    """
    validate_parsing(parsing)
    if component == "lips":
        return np.isin(parsing, LIPS_LABELS).astype(np.uint8)
    if component == "eyes":
        return _eye_ring(parsing, EYE_BALL_LABELS)
    if component == "left_eye":
        return _eye_ring(parsing, (LEFT_EYE,))
    if component == "right_eye":
        return _eye_ring(parsing, (RIGHT_EYE,))
    if component == "skin":
        skin = np.isin(parsing, SKIN_LABELS)
        skin &= ~_eye_ring(parsing, EYE_BALL_LABELS).astype(bool)
        return skin.astype(np.uint8)
    raise UnknownComponentError(f"unknown component {component!r}")


def dilate_mask(mask: np.ndarray, radius: int) -> np.ndarray:
    """Disc dilation of a binary mask (used for locality bookkeeping)."""
    if radius <= 0:
        return mask.astype(np.uint8)
    return binary_dilation(mask.astype(bool), structure=_disc(radius)).astype(np.uint8)


def downsample_mask(mask: np.ndarray, factor: int) -> np.ndarray:
    """Nearest-neighbour downsample preserving binarity.

    Picks the top-left sample of each factor×factor cell, matching how the
    feature grid aligns with the image after two stride-2 convolutions.
    """
    h, w = mask.shape
    if h % factor or w % factor:
        raise ValueError(f"mask shape {mask.shape} not divisible by {factor}")
    return np.ascontiguousarray(mask[::factor, ::factor])
