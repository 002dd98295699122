"""Checkpoint archive: generator + config + (optionally) critics and optimizers.

One torch archive holds everything needed to resume training bit-exactly;
inference-only loads ignore the discriminator and optimizer entries, which
are flagged non-essential.
"""

from __future__ import annotations

import hashlib
import io
import sys
from pathlib import Path

import torch

CHECKPOINT_VERSION = 1


class CheckpointError(RuntimeError):
    pass


def _canonicalize(obj):
    """Rebuild containers and intern strings so equal states pickle to equal
    bytes. Pickle memoizes by object identity; without this, whether a
    repeated dict key is written inline or as a memo reference depends on
    string interning accidents (e.g. before vs after a load_state_dict)."""
    if isinstance(obj, str):
        return sys.intern(obj)
    if isinstance(obj, dict):
        return {_canonicalize(k): _canonicalize(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_canonicalize(v) for v in obj]
    if isinstance(obj, tuple):
        return tuple(_canonicalize(v) for v in obj)
    return obj


def save_checkpoint(
    path: str | Path,
    generator,
    d_set=None,
    optimizers: dict | None = None,
    step: int = 0,
    train_meta: dict | None = None,
) -> None:
    payload = {
        "version": CHECKPOINT_VERSION,
        "generator_config": generator.config.to_dict(),
        "generator": generator.state_dict(),
        "step": int(step),
        "train_meta": dict(train_meta or {}),
    }
    if d_set is not None:
        payload["discriminators"] = d_set.state_dict()
    if optimizers:
        payload["optimizers"] = {k: opt.state_dict() for k, opt in optimizers.items()}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # serialize through a buffer so the archive's internal name never depends
    # on the destination filename; equal states then give equal bytes
    buf = io.BytesIO()
    torch.save(_canonicalize(payload), buf)
    path.write_bytes(buf.getvalue())


def load_checkpoint(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    try:
        payload = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        raise CheckpointError(f"corrupt checkpoint archive {path}: {exc}") from exc
    if not isinstance(payload, dict) or "version" not in payload:
        raise CheckpointError(f"{path} is not a makeupnet checkpoint")
    if payload["version"] != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"checkpoint version {payload['version']} unsupported "
            f"(expected {CHECKPOINT_VERSION})"
        )
    return payload


def build_generator_from(payload: dict):
    from .generator import GeneratorConfig, MakeupTransferNet

    config = GeneratorConfig.from_dict(payload["generator_config"])
    net = MakeupTransferNet(config)
    net.load_state_dict(payload["generator"])
    net.eval()
    return net


def restore_generator(generator, payload: dict) -> None:
    """Load weights into an existing model; the configs must agree."""
    from .generator import GeneratorConfig

    stored = GeneratorConfig.from_dict(payload["generator_config"])
    if stored != generator.config:
        raise CheckpointError(
            f"checkpoint config {stored} does not match model config "
            f"{generator.config}"
        )
    generator.load_state_dict(payload["generator"])


def checkpoint_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]
