"""U-Net discriminators: one global plus four component-local critics.

Each discriminator scores realism per pixel; the local ones consume
component-masked full frames and their losses average over in-mask pixels
only, so empty regions contribute nothing.
"""

from __future__ import annotations

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F
from torch.nn.utils import spectral_norm

from .data import extract_component
from .labels import component_mask

LOCAL_COMPONENTS = ("skin", "lips", "left_eye", "right_eye")
DISCRIMINATOR_NAMES = ("global",) + LOCAL_COMPONENTS


class UNetDiscriminator(nn.Module):
    """Encoder-decoder critic with skip connections and spectral norm.

    Three downsampling levels at 64 base channels; the output is an
    unbounded per-pixel score map at the input resolution.
    """

    def __init__(self, in_channels: int = 3, base_channels: int = 64):
        super().__init__()
        c = base_channels

        def sn(conv):
            return spectral_norm(conv, n_power_iterations=2)

        self.conv_in = sn(nn.Conv2d(in_channels, c, 3, 1, 1))
        self.down1 = sn(nn.Conv2d(c, c * 2, 4, 2, 1))
        self.down2 = sn(nn.Conv2d(c * 2, c * 4, 4, 2, 1))
        self.down3 = sn(nn.Conv2d(c * 4, c * 8, 4, 2, 1))
        self.up3 = sn(nn.Conv2d(c * 8, c * 4, 3, 1, 1))
        self.up2 = sn(nn.Conv2d(c * 4, c * 2, 3, 1, 1))
        self.up1 = sn(nn.Conv2d(c * 2, c, 3, 1, 1))
        self.conv_tail = sn(nn.Conv2d(c, c, 3, 1, 1))
        self.conv_out = sn(nn.Conv2d(c, 1, 3, 1, 1))
        self.act = nn.LeakyReLU(0.2, inplace=True)

    @staticmethod
    def _up(x):
        return F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        f0 = self.act(self.conv_in(image))
        f1 = self.act(self.down1(f0))
        f2 = self.act(self.down2(f1))
        f3 = self.act(self.down3(f2))
        g = self.act(self.up3(self._up(f3))) + f2
        g = self.act(self.up2(self._up(g))) + f1
        g = self.act(self.up1(self._up(g))) + f0
        return self.conv_out(self.act(self.conv_tail(g)))


class DiscriminatorSet(nn.Module):
    """Five discriminators with identical architecture, separate weights."""

    def __init__(self, base_channels: int = 64):
        super().__init__()
        self.critics = nn.ModuleDict(
            {name: UNetDiscriminator(3, base_channels) for name in DISCRIMINATOR_NAMES}
        )

    def __getitem__(self, name: str) -> UNetDiscriminator:
        return self.critics[name]

    def names(self) -> tuple[str, ...]:
        return DISCRIMINATOR_NAMES


def local_input(image: np.ndarray, parsing: np.ndarray, which: str) -> np.ndarray:
    """Component-masked full frame fed to one local discriminator."""
    if which not in LOCAL_COMPONENTS:
        raise ValueError(f"unknown local discriminator component {which!r}")
    return extract_component(image, component_mask(parsing, which))


def mask_image(image_t: torch.Tensor, mask_t: torch.Tensor) -> torch.Tensor:
    """Tensor version of local_input: black out everything off-mask."""
    fill = torch.tensor(-1.0, device=image_t.device, dtype=image_t.dtype)
    return torch.where(mask_t > 0.5, image_t, fill)


def masked_lsgan_loss(
    score_map: torch.Tensor, target: float, mask: torch.Tensor | None = None
) -> torch.Tensor:
    """Least-squares GAN term, averaged over in-mask pixels only.

    With no mask the mean runs over the whole map. An empty mask yields an
    exact zero that still participates in the graph.
    """
    sq = (score_map - target).square()
    if mask is None:
        return sq.mean()
    weight = (mask > 0.5).to(sq.dtype)
    total = weight.sum()
    if total == 0:
        return sq.sum() * 0.0
    return (sq * weight).sum() / total
