"""Numpy <-> torch boundary helpers and seeding."""

from __future__ import annotations

import random

import numpy as np
import torch


def seed_all(seed: int) -> None:
    random.seed(seed)
    np.random.seed(seed % 2**32)
    torch.manual_seed(seed)


def image_to_tensor(image: np.ndarray, device=None) -> torch.Tensor:
    """H×W×3 float array in [-1, 1] to a 1×3×H×W tensor."""
    t = torch.from_numpy(np.ascontiguousarray(image.transpose(2, 0, 1)))
    return t.unsqueeze(0).to(device=device, dtype=torch.float32)


def tensor_to_image(t: torch.Tensor) -> np.ndarray:
    """1×3×H×W (or 3×H×W) tensor back to H×W×3 float32."""
    if t.dim() == 4:
        t = t.squeeze(0)
    return t.detach().cpu().numpy().transpose(1, 2, 0).astype(np.float32)


def mask_to_tensor(mask: np.ndarray, device=None) -> torch.Tensor:
    """H×W binary array to a 1×1×H×W float tensor."""
    t = torch.from_numpy(np.ascontiguousarray(mask)).to(device=device, dtype=torch.float32)
    return t.unsqueeze(0).unsqueeze(0)
