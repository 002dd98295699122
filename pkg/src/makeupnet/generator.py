"""Single-path makeup transfer generator.

Pipeline: a content encoder extracts source features; a component style
encoder extracts per-region reference style (lips/skin/eyes, from masked
reference images); a global style encoder sees the whole reference. The
component-specific transfer rewrites content features region by region
(channel attention -> spatial attention -> position-mapped blend), the
cross-attention stage adds global style, and the decoder reconstructs the
image through two skip connections.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .attention import (
    ChannelAttention,
    MultiHeadAttention,
    SpatialAttention,
    sinusoidal_position_grid,
)
from .labels import COMPONENTS, component_mask
from .tensors import image_to_tensor, mask_to_tensor, tensor_to_image

# Radius (in output pixels) within which a change to one feature-grid cell
# can influence the decoded image: 6 px of 3x3 convs in the residual blocks
# at 1/4 resolution, doubled twice by upsampling, plus the post-upsample
# 3x3 convs and the final 7x7, plus 4 px of mask-downsampling slop.
LOCALITY_RADIUS = 38


@dataclass(frozen=True)
class GeneratorConfig:
    base_channels: int = 48
    reduction_ratio: int = 16
    attention_heads: int = 8
    transfer_order: tuple[str, ...] = ("lips", "skin", "eyes")
    enabled_components: tuple[str, ...] = ("lips", "skin", "eyes")
    global_path_enabled: bool = True

    def __post_init__(self):
        if self.base_channels % self.attention_heads:
            raise ValueError("attention_heads must divide base_channels")
        if self.base_channels % self.reduction_ratio:
            raise ValueError("reduction_ratio must divide base_channels")
        if sorted(self.transfer_order) != sorted(COMPONENTS):
            raise ValueError(f"transfer_order must permute {COMPONENTS}")
        if not set(self.enabled_components) <= set(COMPONENTS):
            raise ValueError(f"enabled_components must be a subset of {COMPONENTS}")

    def to_dict(self) -> dict:
        return {
            "base_channels": self.base_channels,
            "reduction_ratio": self.reduction_ratio,
            "attention_heads": self.attention_heads,
            "transfer_order": list(self.transfer_order),
            "enabled_components": list(self.enabled_components),
            "global_path_enabled": self.global_path_enabled,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorConfig":
        return cls(
            base_channels=int(d["base_channels"]),
            reduction_ratio=int(d["reduction_ratio"]),
            attention_heads=int(d["attention_heads"]),
            transfer_order=tuple(d["transfer_order"]),
            enabled_components=tuple(d["enabled_components"]),
            global_path_enabled=bool(d["global_path_enabled"]),
        )


@dataclass
class TransferRequest:
    """One inference request: images, parsings and the per-request switches."""

    source: np.ndarray
    reference: np.ndarray
    source_parsing: np.ndarray
    reference_parsing: np.ndarray
    components: tuple[str, ...] = ("lips", "skin", "eyes")
    global_enabled: bool = True
    swap_for_removal: bool = False


class ContentFeatures(NamedTuple):
    grid: torch.Tensor     # N×C×H/4×W/4
    shallow: torch.Tensor  # N×C×H×W, first Conv-IN-ReLU output
    mid: torch.Tensor      # N×C×H/2×W/2


class StyleBundle(NamedTuple):
    lips: torch.Tensor
    skin: torch.Tensor
    eyes: torch.Tensor
    global_style: torch.Tensor | None


class ResBlock(nn.Module):
    def __init__(self, channels: int):
        super().__init__()
        self.block = nn.Sequential(
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.InstanceNorm2d(channels),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels, channels, 3, padding=1),
            nn.InstanceNorm2d(channels),
        )

    def forward(self, x):
        return x + self.block(x)


def _conv_in_relu(cin, cout, kernel, stride=1):
    return nn.Sequential(
        nn.Conv2d(cin, cout, kernel, stride=stride, padding=kernel // 2),
        nn.InstanceNorm2d(cout),
        nn.ReLU(inplace=True),
    )


class ContentEncoder(nn.Module):
    """Three Conv-IN-ReLU layers (kernels 7/4/4, strides 1/2/2) + 3 resblocks."""

    def __init__(self, channels: int = 48):
        super().__init__()
        self.layer1 = _conv_in_relu(3, channels, 7)
        self.layer2 = nn.Sequential(
            nn.Conv2d(channels, channels, 4, stride=2, padding=1),
            nn.InstanceNorm2d(channels),
            nn.ReLU(inplace=True),
        )
        self.layer3 = nn.Sequential(
            nn.Conv2d(channels, channels, 4, stride=2, padding=1),
            nn.InstanceNorm2d(channels),
            nn.ReLU(inplace=True),
        )
        self.blocks = nn.Sequential(*[ResBlock(channels) for _ in range(3)])

    def shallow_features(self, image: torch.Tensor) -> torch.Tensor:
        """First Conv-IN-ReLU output, the feature space of the content loss."""
        return self.layer1(image)

    def forward(self, image: torch.Tensor) -> ContentFeatures:
        if image.shape[-1] % 4 or image.shape[-2] % 4:
            raise ValueError(f"image size {tuple(image.shape[-2:])} must divide by 4")
        shallow = self.layer1(image)
        mid = self.layer2(shallow)
        grid = self.blocks(self.layer3(mid))
        return ContentFeatures(grid=grid, shallow=shallow, mid=mid)


class StyleEncoder(nn.Module):
    """Four Conv-ReLU layers (kernels 7/4/4/1, strides 1/2/2/1), no normalization."""

    def __init__(self, channels: int = 48):
        super().__init__()
        self.layers = nn.Sequential(
            nn.Conv2d(3, channels, 7, padding=3),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels, channels, 4, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels, channels, 4, stride=2, padding=1),
            nn.ReLU(inplace=True),
            nn.Conv2d(channels, channels, 1),
            nn.ReLU(inplace=True),
        )

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        if image.shape[-1] % 4 or image.shape[-2] % 4:
            raise ValueError(f"image size {tuple(image.shape[-2:])} must divide by 4")
        return self.layers(image)


def position_map(
    attended: torch.Tensor, passthrough: torch.Tensor, mask: torch.Tensor
) -> torch.Tensor:
    """Masked blend: attended features inside the mask, passthrough outside.

    The mask is binary, so this is implemented as a select; features outside
    the mask are bit-identical to the passthrough.
    """
    if attended.shape != passthrough.shape:
        raise ValueError("attended and passthrough shapes differ")
    if mask.shape[-2:] != attended.shape[-2:]:
        raise ValueError(
            f"mask {tuple(mask.shape[-2:])} does not match features "
            f"{tuple(attended.shape[-2:])}"
        )
    return torch.where(mask > 0.5, attended, passthrough)


class LongRangeTransfer(nn.Module):
    """Cross-attention of global reference style onto source content.

    Query: style tokens, Key/Value: content tokens; sinusoidal positions are
    added to query and key only. A two-layer MLP with a residual connection
    closes the unit.
    """

    def __init__(self, channels: int = 48, heads: int = 8, mlp_ratio: int = 4):
        super().__init__()
        self.channels = channels
        self.attention = MultiHeadAttention(channels, heads)
        self.mlp = nn.Sequential(
            nn.Linear(channels, channels * mlp_ratio),
            nn.ReLU(inplace=True),
            nn.Linear(channels * mlp_ratio, channels),
        )

    def token_inputs(self, content: torch.Tensor, style: torch.Tensor):
        """Build (query, key, value, positions); positions go to Q and K only."""
        if content.shape != style.shape:
            raise ValueError("content and style grids must share a shape")
        n, c, h, w = content.shape
        content_tokens = content.flatten(2).transpose(1, 2)
        style_tokens = style.flatten(2).transpose(1, 2)
        pos = sinusoidal_position_grid(h, w, c, device=content.device,
                                       dtype=content.dtype)
        return style_tokens + pos, content_tokens + pos, content_tokens, pos

    def forward(self, content: torch.Tensor, style: torch.Tensor) -> torch.Tensor:
        n, c, h, w = content.shape
        q, k, v, _ = self.token_inputs(content, style)
        attended = self.attention(q, k, v)
        out = attended + self.mlp(attended)
        return out.transpose(1, 2).reshape(n, c, h, w)


class Decoder(nn.Module):
    """Feature fusion, refinement and two-step upsampling back to an image."""

    def __init__(self, channels: int = 48):
        super().__init__()
        self.fuse = _conv_in_relu(2 * channels, channels, 1)
        self.blocks = nn.Sequential(*[ResBlock(channels) for _ in range(3)])
        self.up1 = _conv_in_relu(2 * channels, channels, 3)
        self.up2 = _conv_in_relu(2 * channels, channels, 3)
        self.to_image = nn.Conv2d(channels, 3, 7, padding=3)

    @staticmethod
    def _upsample(x):
        return F.interpolate(x, scale_factor=2, mode="nearest")

    def forward(
        self,
        transferred: torch.Tensor,
        global_feat: torch.Tensor,
        mid: torch.Tensor,
        shallow: torch.Tensor,
    ) -> torch.Tensor:
        x = self.fuse(torch.cat([transferred, global_feat], dim=1))
        x = self.blocks(x)
        x = self.up1(torch.cat([self._upsample(x), mid], dim=1))
        x = self.up2(torch.cat([self._upsample(x), shallow], dim=1))
        return torch.tanh(self.to_image(x))


def _init_weights(module: nn.Module) -> None:
    if isinstance(module, (nn.Conv2d, nn.Linear)):
        nn.init.normal_(module.weight, 0.0, 0.02)
        if module.bias is not None:
            nn.init.zeros_(module.bias)


class MakeupTransferNet(nn.Module):
    """The full generator; removal is the same forward with roles swapped."""

    def __init__(self, config: GeneratorConfig | None = None):
        super().__init__()
        self.config = config or GeneratorConfig()
        c = self.config.base_channels
        self.content_encoder = ContentEncoder(c)
        self.component_style_encoder = StyleEncoder(c)
        self.global_style_encoder = StyleEncoder(c)
        self.channel_attention = ChannelAttention(c, self.config.reduction_ratio)
        self.spatial_attention = SpatialAttention()
        self.long_range = LongRangeTransfer(c, self.config.attention_heads)
        self.decoder = Decoder(c)
        self.apply(_init_weights)

    # named parameter groups, used by gradient-liveness checks and FLOP counting
    def parameter_groups(self) -> dict[str, nn.Module]:
        return {
            "content_encoder": self.content_encoder,
            "component_style_encoder": self.component_style_encoder,
            "global_style_encoder": self.global_style_encoder,
            "channel_attention": self.channel_attention,
            "spatial_attention": self.spatial_attention,
            "long_range": self.long_range,
            "decoder": self.decoder,
        }

    def count_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters() if p.requires_grad)

    def encode_styles(
        self,
        reference: torch.Tensor,
        reference_masks: dict[str, torch.Tensor],
        components: tuple[str, ...],
        global_enabled: bool,
    ) -> StyleBundle:
        """Style features from masked reference components plus the global map.

        Components outside ``components`` are not encoded (their transfer step
        is skipped anyway); placeholders stay None-safe via zero grids.
        """
        feats: dict[str, torch.Tensor | None] = {c: None for c in COMPONENTS}
        for com in components:
            masked = torch.where(
                reference_masks[com] > 0.5, reference,
                torch.tensor(-1.0, device=reference.device, dtype=reference.dtype),
            )
            feats[com] = self.component_style_encoder(masked)
        global_style = self.global_style_encoder(reference) if global_enabled else None
        return StyleBundle(feats["lips"], feats["skin"], feats["eyes"], global_style)

    def component_transfer(
        self,
        content_grid: torch.Tensor,
        styles: StyleBundle,
        source_masks: dict[str, torch.Tensor],
        components: tuple[str, ...],
        order: tuple[str, ...] | None = None,
    ) -> torch.Tensor:
        """Sequential per-component transfer; skipped components are identity."""
        order = order or self.config.transfer_order
        feats = content_grid
        for com in order:
            style = getattr(styles, com if com != "global" else "global_style")
            if com not in components or style is None:
                continue
            weights = self.channel_attention(style)
            scaled = feats * weights[:, :, None, None]
            attended = self.spatial_attention(scaled)
            feats = position_map(attended, feats, source_masks[com])
        return feats

    def forward(
        self,
        source: torch.Tensor,
        reference: torch.Tensor,
        source_masks: dict[str, torch.Tensor],
        reference_masks: dict[str, torch.Tensor],
        components: tuple[str, ...] | None = None,
        global_enabled: bool | None = None,
    ) -> torch.Tensor:
        """Tensor-level transfer. Masks are full-resolution (N×1×H×W), keyed
        by component; they are downsampled to the feature grid here."""
        if source.shape != reference.shape:
            raise ValueError("source and reference must share a shape")
        components = tuple(
            self.config.enabled_components if components is None else components
        )
        if global_enabled is None:
            global_enabled = self.config.global_path_enabled

        content = self.content_encoder(source)
        styles = self.encode_styles(reference, reference_masks, components,
                                    global_enabled)
        grid_masks = {
            com: source_masks[com][..., ::4, ::4] for com in components
        }
        transferred = self.component_transfer(content.grid, styles, grid_masks,
                                              components)
        if global_enabled:
            global_feat = self.long_range(content.grid, styles.global_style)
        else:
            global_feat = torch.zeros_like(content.grid)
        return self.decoder(transferred, global_feat, content.mid, content.shallow)

    @torch.no_grad()
    def transfer(self, request: TransferRequest) -> np.ndarray:
        """Numpy-level inference for one request; handles the removal swap."""
        from .data import check_image

        src, ref = request.source, request.reference
        src_par, ref_par = request.source_parsing, request.reference_parsing
        if request.swap_for_removal:
            src, ref = ref, src
            src_par, ref_par = ref_par, src_par
        if src.shape != ref.shape:
            raise ValueError("source and reference sizes must match")
        check_image(src)
        check_image(ref)
        device = next(self.parameters()).device
        source_t = image_to_tensor(src, device)
        reference_t = image_to_tensor(ref, device)
        src_masks = masks_for(src_par, device)
        ref_masks = masks_for(ref_par, device)
        was_training = self.training
        self.eval()
        try:
            out = self(source_t, reference_t, src_masks, ref_masks,
                       components=tuple(request.components),
                       global_enabled=request.global_enabled)
        finally:
            self.train(was_training)
        return tensor_to_image(out)


def masks_for(parsing: np.ndarray, device=None) -> dict[str, torch.Tensor]:
    """Full-resolution component mask tensors for one parsing map."""
    return {
        com: mask_to_tensor(component_mask(parsing, com), device)
        for com in COMPONENTS
    }


def build_generator(config: GeneratorConfig | None = None,
                    seed: int | None = None) -> MakeupTransferNet:
    if seed is not None:
        torch.manual_seed(seed)
    return MakeupTransferNet(config)
