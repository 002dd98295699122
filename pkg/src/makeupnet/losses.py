"""Training objectives and their weighted combination.

The total generator objective is
    total = content + makeup + 0.005 * perceptual + 0.5 * adversarial
with the content term measured as mean absolute difference in the content
encoder's first-layer feature space, the makeup and perceptual terms as
mean squared errors, and least-squares adversarial terms summed over the
five discriminators.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import torch
import torch.nn.functional as F

from .discriminator import DISCRIMINATOR_NAMES, LOCAL_COMPONENTS, mask_image

LAMBDA_PERCEPTUAL = 0.005
LAMBDA_ADVERSARIAL = 0.5


@dataclass
class LossReport:
    content: float
    makeup: float
    perceptual: float
    adversarial_g: float
    adversarial_d: float
    total_g: float

    def recompose(self) -> float:
        return (self.content + self.makeup
                + LAMBDA_PERCEPTUAL * self.perceptual
                + LAMBDA_ADVERSARIAL * self.adversarial_g)

    def as_dict(self) -> dict[str, float]:
        return {
            "content": self.content,
            "makeup": self.makeup,
            "perceptual": self.perceptual,
            "adversarial_g": self.adversarial_g,
            "adversarial_d": self.adversarial_d,
            "total_g": self.total_g,
        }


def content_consistency_loss(
    source: torch.Tensor, output: torch.Tensor, content_encoder
) -> torch.Tensor:
    """Mean absolute feature difference after the first Conv-IN-ReLU layer."""
    return (content_encoder.shallow_features(source)
            - content_encoder.shallow_features(output)).abs().mean()


def makeup_loss(
    out_fwd: torch.Tensor,
    hm_fwd: torch.Tensor,
    out_rev: torch.Tensor,
    hm_rev: torch.Tensor,
) -> torch.Tensor:
    """MSE against the histogram-matched targets, both transfer directions.

    The targets are pseudo ground truth and carry no gradient.
    """
    return (F.mse_loss(out_fwd, hm_fwd.detach())
            + F.mse_loss(out_rev, hm_rev.detach()))


class IdentityExtractor(torch.nn.Module):
    """Pixels-as-features plugin; keeps the perceptual path testable offline."""

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        return images


class Vgg19Features(torch.nn.Module):
    """VGG-19 features at the fourth block's first convolution, pre-activation.

    Weights come from a local file; there is no download path. Construction
    fails fast so a missing backend is a startup error, never a mid-training
    one.
    """

    CUT = 20  # torchvision vgg19().features index just past conv4_1

    def __init__(self, weights_path: str | Path):
        super().__init__()
        from torchvision.models import vgg19

        weights_path = Path(weights_path)
        if not weights_path.exists():
            raise FileNotFoundError(
                f"VGG-19 weights not found at {weights_path}; configure "
                "plugins.vgg19_weights or use the identity extractor"
            )
        model = vgg19(weights=None)
        state = torch.load(weights_path, map_location="cpu", weights_only=True)
        model.load_state_dict(state)
        self.slice = model.features[: self.CUT]
        for p in self.slice.parameters():
            p.requires_grad_(False)
        self.register_buffer("mean", torch.tensor([0.485, 0.456, 0.406]).view(1, 3, 1, 1))
        self.register_buffer("std", torch.tensor([0.229, 0.224, 0.225]).view(1, 3, 1, 1))

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        x = (images + 1.0) * 0.5
        return self.slice((x - self.mean) / self.std)


def build_feature_extractor(vgg19_weights: str | None) -> torch.nn.Module:
    if vgg19_weights:
        return Vgg19Features(vgg19_weights)
    return IdentityExtractor()


def perceptual_loss(
    source: torch.Tensor, output: torch.Tensor, feature_extractor
) -> torch.Tensor:
    """MSE between frozen plugin features of source and output."""
    return F.mse_loss(feature_extractor(output), feature_extractor(source))


def _critic_mask(masks: dict[str, torch.Tensor], name: str) -> torch.Tensor | None:
    return None if name == "global" else masks[name]


def masked_lsgan_per_image(
    scores: torch.Tensor, target: float, masks: torch.Tensor | None
) -> torch.Tensor:
    """Per-image least-squares terms; in-mask averaging, empty masks give 0."""
    sq = (scores - target).square()
    if masks is None:
        return sq.mean(dim=(1, 2, 3))
    weight = (masks > 0.5).to(sq.dtype)
    num = (sq * weight).sum(dim=(1, 2, 3))
    den = weight.sum(dim=(1, 2, 3))
    return torch.where(den > 0, num / den.clamp(min=1.0), num * 0.0)


def _critic_batch(name, examples):
    """Stack one critic's inputs (masked where local) into a single batch."""
    images, masks = [], []
    for image, mask_dict in examples:
        mask = _critic_mask(mask_dict, name)
        images.append(image if mask is None else mask_image(image, mask))
        masks.append(mask)
    batch = torch.cat(images, dim=0)
    mask_batch = None if masks[0] is None else torch.cat(masks, dim=0)
    return batch, mask_batch


def generator_adversarial_loss(
    d_set, fakes: list[tuple[torch.Tensor, dict[str, torch.Tensor]]]
) -> tuple[torch.Tensor, dict[str, torch.Tensor]]:
    """Push every fake's realism map toward 1 on all five critics.

    ``fakes`` pairs each generated image with the component masks of its own
    geometry. Returns the five-term sum and the per-critic breakdown.
    """
    per_critic = {}
    for name in DISCRIMINATOR_NAMES:
        batch, mask_batch = _critic_batch(name, fakes)
        terms = masked_lsgan_per_image(d_set[name](batch), 1.0, mask_batch)
        per_critic[name] = terms.mean()
    total = torch.stack(list(per_critic.values())).sum()
    return total, per_critic


def discriminator_adversarial_loss(
    d_set,
    reals: list[tuple[torch.Tensor, dict[str, torch.Tensor]]],
    fakes: list[tuple[torch.Tensor, dict[str, torch.Tensor]]],
) -> tuple[torch.Tensor, dict[str, torch.Tensor]]:
    """Reals toward 1, (detached) fakes toward 0, summed over the critics."""
    fakes = [(image.detach(), masks) for image, masks in fakes]
    n_real = len(reals)
    per_critic = {}
    for name in DISCRIMINATOR_NAMES:
        batch, mask_batch = _critic_batch(name, list(reals) + list(fakes))
        scores = d_set[name](batch)
        real_terms = masked_lsgan_per_image(
            scores[:n_real], 1.0,
            None if mask_batch is None else mask_batch[:n_real])
        fake_terms = masked_lsgan_per_image(
            scores[n_real:], 0.0,
            None if mask_batch is None else mask_batch[n_real:])
        per_critic[name] = torch.cat([real_terms, fake_terms]).mean()
    total = torch.stack(list(per_critic.values())).sum()
    return total, per_critic


def adversarial_losses(
    d_set,
    out_fwd: torch.Tensor,
    out_rev: torch.Tensor,
    real_source: torch.Tensor,
    real_reference: torch.Tensor,
    source_masks: dict[str, torch.Tensor],
    reference_masks: dict[str, torch.Tensor],
) -> tuple[torch.Tensor, torch.Tensor]:
    """Generator and discriminator objectives for one training pair.

    The forward fake G(I, R) shares the source's geometry, the reverse fake
    G(R, I) the reference's; real examples are drawn from both domains.
    """
    g_loss, _ = generator_adversarial_loss(
        d_set, [(out_fwd, source_masks), (out_rev, reference_masks)]
    )
    d_loss, _ = discriminator_adversarial_loss(
        d_set,
        reals=[(real_source, source_masks), (real_reference, reference_masks)],
        fakes=[(out_fwd, source_masks), (out_rev, reference_masks)],
    )
    return g_loss, d_loss


def combine(content, makeup, perceptual, adversarial_g) -> torch.Tensor:
    return (content + makeup
            + LAMBDA_PERCEPTUAL * perceptual
            + LAMBDA_ADVERSARIAL * adversarial_g)


def local_masks_for_adversary(parsing, device=None) -> dict[str, torch.Tensor]:
    """Mask tensors for the four local critics, keyed by critic name."""
    from .labels import component_mask
    from .tensors import mask_to_tensor

    return {
        com: mask_to_tensor(component_mask(parsing, com), device)
        for com in LOCAL_COMPONENTS
    }
