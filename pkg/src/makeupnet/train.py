"""Single-path adversarial training loop.

Each step: forward both transfer directions, update the five discriminators
on reals plus detached fakes, then recompute the generator losses against
the updated critics and update the whole generator (content encoder, both
style encoders, attention modules, transformer, decoder) with one optimizer.
Non-finite losses abort the step and roll the state back.
"""

from __future__ import annotations

import copy
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from .checkpoint import load_checkpoint, restore_generator, save_checkpoint
from .data import MakeupDataset, PairSample
from .discriminator import DiscriminatorSet
from .generator import GeneratorConfig, MakeupTransferNet, masks_for
from .histmatch import makeup_target
from .losses import (
    LAMBDA_ADVERSARIAL,
    LAMBDA_PERCEPTUAL,
    IdentityExtractor,
    LossReport,
    content_consistency_loss,
    discriminator_adversarial_loss,
    generator_adversarial_loss,
    local_masks_for_adversary,
    makeup_loss,
    perceptual_loss,
)
from .tensors import image_to_tensor, seed_all

log = logging.getLogger("makeupnet.train")


class NonFiniteLossError(RuntimeError):
    pass


DEFAULT_EPOCHS = 50  # when total_steps is unset: epochs over the makeup pool


@dataclass
class TrainConfig:
    total_steps: int | None = None  # None: DEFAULT_EPOCHS * len(makeup pool)
    checkpoint_every: int = 100
    image_size: int = 256
    seed: int = 0
    learning_rate: float = 1e-4  # fixed for the whole run
    batch_size: int = 1
    adam_betas: tuple[float, float] = (0.5, 0.999)
    lambda_perceptual: float = LAMBDA_PERCEPTUAL
    lambda_adversarial: float = LAMBDA_ADVERSARIAL
    checkpoint_dir: str = "checkpoints"

    def __post_init__(self):
        if self.batch_size != 1:
            raise ValueError("training runs with batch size 1")
        if self.image_size % 4:
            raise ValueError("image_size must be a multiple of 4")
        if self.total_steps is not None and self.total_steps <= 0:
            raise ValueError("total_steps must be positive")

    def to_dict(self) -> dict:
        return {
            "total_steps": self.total_steps,
            "checkpoint_every": self.checkpoint_every,
            "image_size": self.image_size,
            "seed": self.seed,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "adam_betas": list(self.adam_betas),
            "lambda_perceptual": self.lambda_perceptual,
            "lambda_adversarial": self.lambda_adversarial,
            "checkpoint_dir": self.checkpoint_dir,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        d = dict(d)
        d["adam_betas"] = tuple(d.get("adam_betas", (0.5, 0.999)))
        return cls(**d)


@dataclass
class StepData:
    """Fully materialized training pair: tensors, masks and HM targets.

    Construction is pure, so it can run on loader workers ahead of the step.
    ``*_masks`` feed the generator (lips/skin/eyes), ``adv_*_masks`` the four
    local critics (skin/lips/left_eye/right_eye).
    """

    source: torch.Tensor
    reference: torch.Tensor
    source_masks: dict
    reference_masks: dict
    adv_source_masks: dict
    adv_reference_masks: dict
    hm_fwd: torch.Tensor
    hm_rev: torch.Tensor


def _all_finite(t: torch.Tensor) -> bool:
    return bool(torch.isfinite(t).all())


def _grads_finite(module: torch.nn.Module) -> bool:
    return all(p.grad is None or bool(torch.isfinite(p.grad).all())
               for p in module.parameters())


class Trainer:
    def __init__(
        self,
        dataset: MakeupDataset,
        generator: MakeupTransferNet | None = None,
        d_set: DiscriminatorSet | None = None,
        config: TrainConfig | None = None,
        feature_extractor=None,
        log_path: str | Path | None = None,
    ):
        self.config = config or TrainConfig()
        if self.config.total_steps is None:
            pool = len(getattr(dataset, "makeup_ids", [])) or 1
            self.config.total_steps = DEFAULT_EPOCHS * pool
        seed_all(self.config.seed)
        self.dataset = dataset
        self.generator = generator or MakeupTransferNet(GeneratorConfig())
        self.d_set = d_set or DiscriminatorSet()
        self.feature_extractor = feature_extractor or IdentityExtractor()
        self.g_opt = torch.optim.Adam(
            self.generator.parameters(),
            lr=self.config.learning_rate,
            betas=self.config.adam_betas,
        )
        self.d_opt = torch.optim.Adam(
            self.d_set.parameters(),
            lr=self.config.learning_rate,
            betas=self.config.adam_betas,
        )
        self.step = 0
        self._hm_cache: dict[tuple[str, str], tuple[np.ndarray, np.ndarray]] = {}
        self._log_fh = open(log_path, "a") if log_path else None

    # ---------------------------------------------------------------- data

    def pair_for_step(self, step: int) -> PairSample:
        """Deterministic pair for a step index; resuming replays the sequence."""
        return self.dataset.sample_pair(self.config.seed * 1_000_003 + step)

    def materialize(self, pair: PairSample) -> StepData:
        if not (np.isfinite(pair.source).all() and np.isfinite(pair.reference).all()):
            raise NonFiniteLossError("non-finite image data in training pair")
        key = (pair.source_id, pair.reference_id)
        if key[0] and key in self._hm_cache:
            hm_fwd, hm_rev = self._hm_cache[key]
        else:
            hm_fwd = makeup_target(pair.source, pair.reference,
                                   pair.source_parsing, pair.reference_parsing)
            hm_rev = makeup_target(pair.reference, pair.source,
                                   pair.reference_parsing, pair.source_parsing)
            if key[0]:
                self._hm_cache[key] = (hm_fwd, hm_rev)
        return StepData(
            source=image_to_tensor(pair.source),
            reference=image_to_tensor(pair.reference),
            source_masks=masks_for(pair.source_parsing),
            reference_masks=masks_for(pair.reference_parsing),
            adv_source_masks=local_masks_for_adversary(pair.source_parsing),
            adv_reference_masks=local_masks_for_adversary(pair.reference_parsing),
            hm_fwd=image_to_tensor(hm_fwd),
            hm_rev=image_to_tensor(hm_rev),
        )

    # --------------------------------------------------------------- steps

    def _snapshot_d(self):
        return (
            copy.deepcopy(self.d_set.state_dict()),
            copy.deepcopy(self.d_opt.state_dict()),
        )

    def _restore_d(self, snapshot) -> None:
        d_state, opt_state = snapshot
        self.d_set.load_state_dict(d_state)
        self.d_opt.load_state_dict(opt_state)

    def train_step(self, data: StepData) -> LossReport:
        """One optimization step; raises NonFiniteLossError after rollback."""
        g, d = self.generator, self.d_set
        g.train()
        d.train()

        out_fwd = g(data.source, data.reference, data.source_masks,
                    data.reference_masks)
        out_rev = g(data.reference, data.source, data.reference_masks,
                    data.source_masks)
        if not (_all_finite(out_fwd) and _all_finite(out_rev)):
            raise NonFiniteLossError("generator produced non-finite outputs")

        # -- discriminators on reals + detached fakes
        d_loss, _ = discriminator_adversarial_loss(
            d,
            reals=[(data.source, data.adv_source_masks),
                   (data.reference, data.adv_reference_masks)],
            fakes=[(out_fwd.detach(), data.adv_source_masks),
                   (out_rev.detach(), data.adv_reference_masks)],
        )
        if not _all_finite(d_loss):
            raise NonFiniteLossError("non-finite discriminator loss")
        self.d_opt.zero_grad(set_to_none=True)
        d_loss.backward()
        if not _grads_finite(d):
            self.d_opt.zero_grad(set_to_none=True)
            raise NonFiniteLossError("non-finite discriminator gradients")
        d_snapshot = self._snapshot_d()
        self.d_opt.step()

        # -- generator against the updated critics
        try:
            l_content = content_consistency_loss(data.source, out_fwd,
                                                 g.content_encoder)
            l_makeup = makeup_loss(out_fwd, data.hm_fwd, out_rev, data.hm_rev)
            l_per = perceptual_loss(data.source, out_fwd, self.feature_extractor)
            l_gadv, _ = generator_adversarial_loss(
                d, [(out_fwd, data.adv_source_masks),
                    (out_rev, data.adv_reference_masks)]
            )
            total = (l_content + l_makeup
                     + self.config.lambda_perceptual * l_per
                     + self.config.lambda_adversarial * l_gadv)
            if not _all_finite(total):
                raise NonFiniteLossError("non-finite generator loss")
            self.g_opt.zero_grad(set_to_none=True)
            total.backward()
            if not _grads_finite(g):
                self.g_opt.zero_grad(set_to_none=True)
                raise NonFiniteLossError("non-finite generator gradients")
        except NonFiniteLossError:
            self._restore_d(d_snapshot)
            raise
        self.g_opt.step()

        return LossReport(
            content=l_content.item(), makeup=l_makeup.item(),
            perceptual=l_per.item(), adversarial_g=l_gadv.item(),
            adversarial_d=d_loss.item(), total_g=total.item(),
        )

    def run(self, total_steps: int | None = None) -> list[LossReport]:
        total = total_steps if total_steps is not None else self.config.total_steps
        reports: list[LossReport] = []
        ckpt_dir = Path(self.config.checkpoint_dir)
        while self.step < total:
            t0 = time.time()
            try:
                data = self.materialize(self.pair_for_step(self.step))
                report = self.train_step(data)
            except NonFiniteLossError as exc:
                self._log_line(f"step={self.step} incident=aborted reason={exc}")
                self.step += 1
                continue
            reports.append(report)
            self.step += 1
            self._log_line(
                f"step={self.step} "
                + " ".join(f"{k}={v:.6f}" for k, v in report.as_dict().items())
                + f" time={time.time() - t0:.3f}s"
            )
            if (self.config.checkpoint_every > 0
                    and self.step % self.config.checkpoint_every == 0):
                self.save(ckpt_dir / f"step_{self.step:06d}.pt")
        return reports

    def _log_line(self, line: str) -> None:
        log.info(line)
        if self._log_fh:
            self._log_fh.write(line + "\n")
            self._log_fh.flush()

    # ---------------------------------------------------------- persistence

    def save(self, path: str | Path) -> None:
        save_checkpoint(
            path,
            self.generator,
            d_set=self.d_set,
            optimizers={"g": self.g_opt, "d": self.d_opt},
            step=self.step,
            train_meta=self.config.to_dict(),
        )

    def load(self, path: str | Path) -> None:
        payload = load_checkpoint(path)
        restore_generator(self.generator, payload)
        if "discriminators" in payload:
            self.d_set.load_state_dict(payload["discriminators"])
        if "optimizers" in payload:
            self.g_opt.load_state_dict(payload["optimizers"]["g"])
            self.d_opt.load_state_dict(payload["optimizers"]["d"])
        self.step = int(payload.get("step", 0))
        # the training config is part of the state: resuming must replay the
        # same data sequence and schedule the checkpoint recorded
        if payload.get("train_meta"):
            self.config = TrainConfig.from_dict(payload["train_meta"])


def build_trainer(dataset: MakeupDataset, config: TrainConfig,
                  feature_extractor=None,
                  log_path: str | Path | None = None) -> Trainer:
    """Seeded construction of generator, critics and trainer in one go."""
    seed_all(config.seed)
    generator = MakeupTransferNet(GeneratorConfig())
    d_set = DiscriminatorSet()
    return Trainer(dataset, generator, d_set, config,
                   feature_extractor=feature_extractor, log_path=log_path)
