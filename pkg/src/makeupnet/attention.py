"""Attention building blocks: channel/spatial gates and multi-head attention."""

from __future__ import annotations

import math

import torch
import torch.nn as nn
import torch.nn.functional as F


class ChannelAttention(nn.Module):
    """Per-channel gate learned from style statistics.

    Global-average-pools the style map and squeezes it through a
    C -> C/r -> C bottleneck, ending in a sigmoid so every weight lies in
    (0, 1). The weights scale the content features channel by channel.
    """

    def __init__(self, channels: int, reduction: int = 16):
        super().__init__()
        if channels % reduction:
            raise ValueError(f"reduction {reduction} must divide channels {channels}")
        self.fc = nn.Sequential(
            nn.Linear(channels, channels // reduction),
            nn.ReLU(inplace=True),
            nn.Linear(channels // reduction, channels),
            nn.Sigmoid(),
        )

    def forward(self, style: torch.Tensor) -> torch.Tensor:
        if style.dim() != 4:
            raise ValueError(f"expected N×C×H×W style map, got {tuple(style.shape)}")
        pooled = style.mean(dim=(2, 3))
        return self.fc(pooled)


class SpatialAttention(nn.Module):
    """Single-channel spatial gate from channelwise mean and max pooling."""

    def __init__(self):
        super().__init__()
        self.conv = nn.Conv2d(2, 1, kernel_size=1)

    def mask(self, features: torch.Tensor) -> torch.Tensor:
        mean = features.mean(dim=1, keepdim=True)
        mx = features.max(dim=1, keepdim=True).values
        return torch.sigmoid(self.conv(torch.cat([mean, mx], dim=1)))

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return features * self.mask(features)


class MultiHeadAttention(nn.Module):
    """Standard scaled dot-product attention over token sequences.

    Callers add positional encodings to the query/key inputs themselves;
    this module never touches the value path with positions.
    """

    def __init__(self, dim: int, heads: int):
        super().__init__()
        if dim % heads:
            raise ValueError(f"heads {heads} must divide dim {dim}")
        self.dim = dim
        self.heads = heads
        self.head_dim = dim // heads
        self.q_proj = nn.Linear(dim, dim)
        self.k_proj = nn.Linear(dim, dim)
        self.v_proj = nn.Linear(dim, dim)
        self.out_proj = nn.Linear(dim, dim)

    def _split(self, x: torch.Tensor) -> torch.Tensor:
        n, t, _ = x.shape
        return x.view(n, t, self.heads, self.head_dim).transpose(1, 2)

    def attention_weights(self, q_in: torch.Tensor, k_in: torch.Tensor) -> torch.Tensor:
        q = self._split(self.q_proj(q_in))
        k = self._split(self.k_proj(k_in))
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        return F.softmax(scores, dim=-1)

    def forward(
        self,
        q_in: torch.Tensor,
        k_in: torch.Tensor,
        v_in: torch.Tensor,
        return_weights: bool = False,
    ):
        if q_in.shape[-1] != self.dim or k_in.shape != v_in.shape:
            raise ValueError("query/key/value token shapes are inconsistent")
        weights = self.attention_weights(q_in, k_in)
        v = self._split(self.v_proj(v_in))
        attended = weights @ v
        n, _, t, _ = attended.shape
        out = self.out_proj(attended.transpose(1, 2).reshape(n, t, self.dim))
        if return_weights:
            return out, weights
        return out


def sinusoidal_position_grid(
    height: int, width: int, channels: int,
    device=None, dtype: torch.dtype = torch.float32,
) -> torch.Tensor:
    """2D sine/cosine position encoding, shape (1, height*width, channels).

    The channel budget is split in half: the first half encodes the row
    index, the second half the column index, each with the usual
    sin/cos frequency ladder.
    """
    if channels % 4:
        raise ValueError(f"channels {channels} must be divisible by 4")
    half = channels // 2

    def axis_encoding(length: int) -> torch.Tensor:
        pos = torch.arange(length, device=device, dtype=dtype).unsqueeze(1)
        idx = torch.arange(0, half, 2, device=device, dtype=dtype)
        div = torch.exp(-math.log(10000.0) * idx / half)
        enc = torch.zeros(length, half, device=device, dtype=dtype)
        enc[:, 0::2] = torch.sin(pos * div)
        enc[:, 1::2] = torch.cos(pos * div)
        return enc

    rows = axis_encoding(height)[:, None, :].expand(height, width, half)
    cols = axis_encoding(width)[None, :, :].expand(height, width, half)
    grid = torch.cat([rows, cols], dim=-1)
    return grid.reshape(1, height * width, channels)
