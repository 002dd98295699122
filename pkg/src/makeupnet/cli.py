"""Command-line interface: transfer, train, eval, serve.

Exit codes for transfer: 0 success, 2 bad arguments, 3 missing input files,
4 checkpoint or config mismatch. All error messages go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .labels import COMPONENTS

EXIT_OK = 0
EXIT_BAD_ARGS = 2
EXIT_MISSING_FILE = 3
EXIT_CHECKPOINT_MISMATCH = 4


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def _parse_components(raw: str) -> tuple[str, ...]:
    if raw.strip() == "":
        return ()
    parts = tuple(p.strip() for p in raw.split(","))
    bad = [p for p in parts if p not in COMPONENTS]
    if bad:
        raise ValueError(f"unknown components: {', '.join(bad)} "
                         f"(choose from {', '.join(COMPONENTS)})")
    return parts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="makeupnet",
        description="Component-specific makeup transfer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    t = sub.add_parser("transfer", help="run one makeup transfer")
    t.add_argument("--source", required=True, help="source face image")
    t.add_argument("--reference", required=True, help="reference face image")
    t.add_argument("--source-seg", required=True, help="source parsing map")
    t.add_argument("--reference-seg", required=True, help="reference parsing map")
    t.add_argument("--components", default="lips,skin,eyes",
                   help="comma list from {lips,skin,eyes}; empty disables all")
    t.add_argument("--no-global", action="store_true",
                   help="disable the global transfer path")
    t.add_argument("--removal", action="store_true",
                   help="swap source and reference roles (makeup removal)")
    t.add_argument("--out", required=True, help="output PNG path")
    t.add_argument("--checkpoint", required=True, help="model checkpoint")
    t.add_argument("--size", type=int, default=256, help="working resolution")

    tr = sub.add_parser("train", help="run the training loop")
    tr.add_argument("--config", required=True, help="YAML config file")

    ev = sub.add_parser("eval", help="evaluate a checkpoint over a manifest")
    ev.add_argument("--config", required=True, help="YAML config file")
    ev.add_argument("--checkpoint", required=True, help="model checkpoint")

    sv = sub.add_parser("serve", help="start the HTTP inference service")
    sv.add_argument("--checkpoint", required=True, help="model checkpoint")
    sv.add_argument("--host", default=os.environ.get("MAKEUPNET_HOST", "127.0.0.1"))
    sv.add_argument("--port", type=int,
                    default=int(os.environ.get("MAKEUPNET_PORT", "8000")))
    sv.add_argument("--max-payload-bytes", type=int, default=None)
    return parser


# ------------------------------------------------------------------ transfer

def cmd_transfer(args) -> int:
    from PIL import Image

    from .checkpoint import CheckpointError, build_generator_from, load_checkpoint
    from .data import from_unit_range, load_image, load_parsing
    from .generator import TransferRequest

    try:
        components = _parse_components(args.components)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_BAD_ARGS
    if args.size % 4 or args.size <= 0:
        _err(f"--size must be a positive multiple of 4, got {args.size}")
        return EXIT_BAD_ARGS

    try:
        payload = load_checkpoint(args.checkpoint)
        net = build_generator_from(payload)
    except FileNotFoundError as exc:
        _err(f"missing file: {exc}")
        return EXIT_MISSING_FILE
    except CheckpointError as exc:
        _err(str(exc))
        return EXIT_CHECKPOINT_MISMATCH

    try:
        source = load_image(args.source, args.size)
        reference = load_image(args.reference, args.size)
        source_parsing = load_parsing(args.source_seg, args.size)
        reference_parsing = load_parsing(args.reference_seg, args.size)
    except FileNotFoundError as exc:
        _err(f"missing file: {exc}")
        return EXIT_MISSING_FILE
    except ValueError as exc:
        _err(str(exc))
        return EXIT_BAD_ARGS

    request = TransferRequest(
        source=source, reference=reference,
        source_parsing=source_parsing, reference_parsing=reference_parsing,
        components=components, global_enabled=not args.no_global,
        swap_for_removal=args.removal,
    )
    result = net.transfer(request)
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(from_unit_range(result)).save(out_path, format="PNG")
    print(out_path)
    return EXIT_OK


# --------------------------------------------------------------------- train

def cmd_train(args) -> int:
    from .config import ConfigError, load_config
    from .data import MakeupDataset
    from .losses import build_feature_extractor
    from .train import build_trainer

    logging.basicConfig(level=logging.INFO, format="%(message)s")
    try:
        cfg = load_config(args.config)
    except FileNotFoundError as exc:
        _err(f"missing file: {exc}")
        return EXIT_MISSING_FILE
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_BAD_ARGS
    if not cfg.dataset_root:
        _err("config must set dataset.root for training")
        return EXIT_BAD_ARGS

    dataset = MakeupDataset(cfg.dataset_root, size=cfg.train.image_size,
                            label_map_path=cfg.label_map)
    extractor = build_feature_extractor(cfg.vgg19_weights)
    trainer = build_trainer(dataset, cfg.train, feature_extractor=extractor,
                            log_path=cfg.log_path)
    trainer.run()
    final = Path(cfg.train.checkpoint_dir) / "final.pt"
    trainer.save(final)
    print(final)
    return EXIT_OK


# ---------------------------------------------------------------------- eval

def cmd_eval(args) -> int:
    from .checkpoint import CheckpointError, build_generator_from, load_checkpoint
    from .config import ConfigError, load_config
    from .data import load_sample
    from .generator import TransferRequest
    from .metrics import (
        build_embedding_provider,
        build_feature_provider,
        fid_from_features,
        flops_and_params,
        identity_similarity,
        write_report,
    )

    try:
        cfg = load_config(args.config)
    except FileNotFoundError as exc:
        _err(f"missing file: {exc}")
        return EXIT_MISSING_FILE
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_BAD_ARGS
    if not cfg.eval_manifest:
        _err("config must set eval.manifest")
        return EXIT_BAD_ARGS

    try:
        payload = load_checkpoint(args.checkpoint)
        net = build_generator_from(payload)
    except FileNotFoundError as exc:
        _err(f"missing file: {exc}")
        return EXIT_MISSING_FILE
    except CheckpointError as exc:
        _err(str(exc))
        return EXIT_CHECKPOINT_MISMATCH

    entries = json.loads(Path(cfg.eval_manifest).read_text())
    if not entries:
        _err(f"eval manifest {cfg.eval_manifest} is empty")
        return EXIT_BAD_ARGS

    size = cfg.eval_size or int(payload.get("train_meta", {}).get("image_size", 256))
    embed = build_embedding_provider(cfg.arcface_weights)
    feats = build_feature_provider(cfg.inception_weights)
    sims, src_feats, out_feats = [], [], []
    for entry in entries:
        source, source_parsing = load_sample(entry["source"], entry["source_seg"],
                                             size)
        reference, reference_parsing = load_sample(entry["reference"],
                                                   entry["reference_seg"], size)
        result = net.transfer(TransferRequest(
            source=source, reference=reference,
            source_parsing=source_parsing, reference_parsing=reference_parsing))
        sims.append(identity_similarity(source, result, embed))
        src_feats.append(feats(source))
        out_feats.append(feats(result))

    report: dict = {"pairs": len(entries),
                    "identity_similarity": float(np.mean(sims))}
    if len(entries) >= 2:
        report["fid"] = fid_from_features(np.stack(out_feats), np.stack(src_feats))
    else:
        report["fid"] = None
    flops, params = flops_and_params(net, input_size=size)
    report["flops"] = flops
    report["params"] = params

    if cfg.eval_heatmap_dir:
        from PIL import Image

        from .metrics import transfer_stage_heatmaps

        entry = entries[0]
        source, source_parsing = load_sample(entry["source"], entry["source_seg"],
                                             size)
        reference, reference_parsing = load_sample(entry["reference"],
                                                   entry["reference_seg"], size)
        heatmap_dir = Path(cfg.eval_heatmap_dir)
        heatmap_dir.mkdir(parents=True, exist_ok=True)
        maps = transfer_stage_heatmaps(net, TransferRequest(
            source=source, reference=reference,
            source_parsing=source_parsing, reference_parsing=reference_parsing))
        for stage, heat in maps.items():
            Image.fromarray((heat * 255).astype(np.uint8), mode="L").save(
                heatmap_dir / f"{stage}.png")
        report["heatmaps"] = str(heatmap_dir)

    print(write_report(report, cfg.eval_output))
    return EXIT_OK


# --------------------------------------------------------------------- serve

def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(checkpoint_path=args.checkpoint,
                     max_payload_bytes=args.max_payload_bytes)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "transfer": cmd_transfer,
        "train": cmd_train,
        "eval": cmd_eval,
        "serve": cmd_serve,
    }
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
