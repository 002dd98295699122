"""Structured YAML configuration for training, evaluation and the service.

Validation is exhaustive: every problem in the file is collected and
reported at once, before any work starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .train import TrainConfig

DEFAULT_PAYLOAD_LIMIT = 8 * 1024 * 1024  # 8 MiB per image


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = errors
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {e}" for e in errors))


@dataclass
class AppConfig:
    dataset_root: str | None = None
    label_map: str | None = None
    train: TrainConfig = field(default_factory=TrainConfig)
    log_path: str | None = None
    vgg19_weights: str | None = None
    arcface_weights: str | None = None
    inception_weights: str | None = None
    eval_manifest: str | None = None
    eval_output: str = "report.json"
    eval_size: int | None = None
    eval_heatmap_dir: str | None = None
    max_payload_bytes: int = DEFAULT_PAYLOAD_LIMIT


def _expect_int(raw, key, errors, minimum=None):
    if not isinstance(raw, int) or isinstance(raw, bool):
        errors.append(f"{key}: expected an integer, got {raw!r}")
        return None
    if minimum is not None and raw < minimum:
        errors.append(f"{key}: must be >= {minimum}, got {raw}")
        return None
    return raw


def load_config(path: str | Path) -> AppConfig:
    """Parse and validate a config file; raises ConfigError listing every issue."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    try:
        raw = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as exc:
        raise ConfigError([f"not valid YAML: {exc}"])
    if not isinstance(raw, dict):
        raise ConfigError(["top level must be a mapping"])

    errors: list[str] = []
    cfg = AppConfig()

    dataset = raw.get("dataset", {}) or {}
    if dataset:
        if not isinstance(dataset, dict):
            errors.append("dataset: must be a mapping")
        else:
            cfg.dataset_root = dataset.get("root")
            cfg.label_map = dataset.get("label_map")
            if cfg.dataset_root and not Path(cfg.dataset_root).is_dir():
                errors.append(f"dataset.root: directory {cfg.dataset_root} not found")
            if cfg.label_map and not Path(cfg.label_map).exists():
                errors.append(f"dataset.label_map: file {cfg.label_map} not found")

    train = raw.get("train", {}) or {}
    if not isinstance(train, dict):
        errors.append("train: must be a mapping")
        train = {}
    tc_kwargs = {}
    for key, minimum in (("total_steps", 1), ("checkpoint_every", 0),
                         ("image_size", 4), ("seed", None)):
        if key in train:
            value = _expect_int(train[key], f"train.{key}", errors,
                                minimum=minimum)
            if value is not None:
                tc_kwargs[key] = value
    if "image_size" in tc_kwargs and tc_kwargs["image_size"] % 4:
        errors.append("train.image_size: must be a multiple of 4")
        del tc_kwargs["image_size"]
    if "checkpoint_dir" in train:
        tc_kwargs["checkpoint_dir"] = str(train["checkpoint_dir"])
    if "learning_rate" in train and train["learning_rate"] != 1e-4:
        errors.append("train.learning_rate: fixed at 1e-4 for this method")
    if "batch_size" in train and train["batch_size"] != 1:
        errors.append("train.batch_size: fixed at 1 for this method")
    cfg.log_path = train.get("log_path")
    try:
        cfg.train = TrainConfig(**tc_kwargs)
    except ValueError as exc:
        errors.append(f"train: {exc}")

    plugins = raw.get("plugins", {}) or {}
    if not isinstance(plugins, dict):
        errors.append("plugins: must be a mapping")
    else:
        for attr in ("vgg19_weights", "arcface_weights", "inception_weights"):
            value = plugins.get(attr)
            setattr(cfg, attr, value)
            if value and not Path(value).exists():
                errors.append(f"plugins.{attr}: file {value} not found")

    ev = raw.get("eval", {}) or {}
    if not isinstance(ev, dict):
        errors.append("eval: must be a mapping")
    else:
        cfg.eval_manifest = ev.get("manifest")
        cfg.eval_output = ev.get("output", cfg.eval_output)
        cfg.eval_heatmap_dir = ev.get("heatmap_dir")
        if "size" in ev:
            cfg.eval_size = _expect_int(ev["size"], "eval.size", errors, minimum=4)
        if cfg.eval_manifest and not Path(cfg.eval_manifest).exists():
            errors.append(f"eval.manifest: file {cfg.eval_manifest} not found")

    service = raw.get("service", {}) or {}
    if not isinstance(service, dict):
        errors.append("service: must be a mapping")
    elif "max_payload_bytes" in service:
        value = _expect_int(service["max_payload_bytes"],
                            "service.max_payload_bytes", errors, minimum=1024)
        if value is not None:
            cfg.max_payload_bytes = value

    if errors:
        raise ConfigError(errors)
    return cfg
