"""Identity-preservation and distribution metrics, compute accounting,
and feature heatmaps.

Embedding / feature backends are plugins: the package ships deterministic
stubs so every metric path runs offline; real ArcFace / Inception weights
can be dropped in through the config without code changes.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np
import torch

from .attention import MultiHeadAttention
from .data import load_image

log = logging.getLogger("makeupnet.metrics")

MAC_FLOPS = 2  # one multiply-accumulate counted as two FLOPs


# ------------------------------------------------------------------ plugins

class StubEmbeddingProvider:
    """Deterministic identity-embedding stand-in: pooled grayscale, unit norm."""

    def __init__(self, grid: int = 8):
        self.grid = grid

    def __call__(self, image: np.ndarray) -> np.ndarray:
        gray = image.mean(axis=2)
        h, w = gray.shape
        gh, gw = h // self.grid, w // self.grid
        pooled = gray[: gh * self.grid, : gw * self.grid]
        pooled = pooled.reshape(self.grid, gh, self.grid, gw).mean(axis=(1, 3))
        vec = pooled.reshape(-1).astype(np.float64)
        norm = np.linalg.norm(vec)
        if norm == 0:
            vec = np.ones_like(vec)
            norm = np.linalg.norm(vec)
        return vec / norm


class StubFeatureProvider:
    """Deterministic distribution-feature stand-in: 4×4 pooled RGB."""

    def __call__(self, image: np.ndarray) -> np.ndarray:
        h, w, _ = image.shape
        gh, gw = h // 4, w // 4
        pooled = image[: gh * 4, : gw * 4]
        pooled = pooled.reshape(4, gh, 4, gw, 3).mean(axis=(1, 3))
        return pooled.reshape(-1).astype(np.float64)


class TorchScriptProvider:
    """Real backend loaded from a TorchScript file (ArcFace / Inception style).

    The module receives a 1×3×H×W tensor in [-1, 1] and must return one
    feature vector; identity providers additionally L2-normalize, which is
    the embedding-space convention.
    """

    def __init__(self, weights_path: str | Path, normalize: bool = False):
        weights_path = Path(weights_path)
        if not weights_path.exists():
            raise FileNotFoundError(
                f"plugin weights not found at {weights_path}"
            )
        self.module = torch.jit.load(str(weights_path), map_location="cpu").eval()
        self.normalize = normalize

    def __call__(self, image: np.ndarray) -> np.ndarray:
        t = torch.from_numpy(
            np.ascontiguousarray(image.transpose(2, 0, 1))
        ).unsqueeze(0).float()
        with torch.no_grad():
            vec = self.module(t).reshape(-1).numpy().astype(np.float64)
        if self.normalize:
            norm = np.linalg.norm(vec)
            if norm > 0:
                vec = vec / norm
        return vec


def build_embedding_provider(weights_path: str | None):
    if weights_path:
        return TorchScriptProvider(weights_path, normalize=True)
    return StubEmbeddingProvider()


def build_feature_provider(weights_path: str | None):
    if weights_path:
        return TorchScriptProvider(weights_path, normalize=False)
    return StubFeatureProvider()


# ------------------------------------------------------- identity similarity

def identity_similarity(before: np.ndarray, after: np.ndarray, provider) -> float:
    """Cosine similarity of identity embeddings before/after transfer."""
    if provider is None:
        raise ValueError("no embedding provider configured")
    a = np.asarray(provider(before), dtype=np.float64)
    b = np.asarray(provider(after), dtype=np.float64)
    for v in (a, b):
        if abs(np.linalg.norm(v) - 1.0) > 1e-5:
            raise ValueError("embedding provider must return unit-norm vectors")
    return float(np.clip(np.dot(a, b), -1.0, 1.0))


def mean_identity_similarity(pairs, provider) -> float:
    values = [identity_similarity(b, a, provider) for b, a in pairs]
    if not values:
        raise ValueError("no pairs to evaluate")
    return float(np.mean(values))


# ------------------------------------------------------------------- FID

def _gaussian_stats(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = features.mean(axis=0)
    sigma = np.cov(features, rowvar=False)
    return mu, np.atleast_2d(sigma)


def _frechet(mu_a, sigma_a, mu_b, sigma_b) -> float:
    from scipy import linalg

    diff = float(np.sum((mu_a - mu_b) ** 2))
    eigvals = linalg.eigvals(sigma_a @ sigma_b)
    if np.any(eigvals.real < -1e-8) or np.any(np.abs(eigvals.imag) > 1e-6):
        log.warning("covariance product not PSD; clipping eigenvalues at 0")
    cross = float(np.sqrt(np.clip(eigvals.real, 0, None)).sum())
    return diff + float(np.trace(sigma_a) + np.trace(sigma_b)) - 2.0 * cross


def fid_from_features(features_a: np.ndarray, features_b: np.ndarray) -> float:
    """Fréchet distance between Gaussian fits of two feature sets.

    Mathematically symmetric, so the two sides are put in a canonical order
    before the numerics to make the symmetry exact.
    """
    features_a = np.atleast_2d(np.asarray(features_a, dtype=np.float64))
    features_b = np.atleast_2d(np.asarray(features_b, dtype=np.float64))
    if features_a.shape[0] < 2 or features_b.shape[0] < 2:
        raise ValueError("need at least 2 samples per set")
    stats = [_gaussian_stats(features_a), _gaussian_stats(features_b)]
    stats.sort(key=lambda s: (s[0].tobytes(), s[1].tobytes()))
    (mu_a, sig_a), (mu_b, sig_b) = stats
    return max(_frechet(mu_a, sig_a, mu_b, sig_b), 0.0)


def _dir_features(directory: str | Path, provider, size: int = 256) -> np.ndarray:
    exts = (".png", ".jpg", ".jpeg")
    paths = sorted(p for p in Path(directory).iterdir() if p.suffix.lower() in exts)
    if len(paths) < 2:
        raise ValueError(f"{directory} must hold at least 2 images")
    return np.stack([provider(load_image(p, size)) for p in paths])


def fid(set_a: str | Path, set_b: str | Path, provider, size: int = 256) -> float:
    """FID between two image directories under the given feature plugin."""
    return fid_from_features(
        _dir_features(set_a, provider, size), _dir_features(set_b, provider, size)
    )


# --------------------------------------------------------------- heatmaps

def feature_heatmap(features) -> np.ndarray:
    """Channel-mean a feature map, then min-max normalize into [0, 1]."""
    if isinstance(features, torch.Tensor):
        t = features.detach()
        if t.dim() == 4:
            t = t.squeeze(0)
        mean = t.mean(dim=0).cpu().numpy()
    else:
        mean = np.asarray(features).mean(axis=2)
    lo, hi = float(mean.min()), float(mean.max())
    if hi - lo == 0:
        return np.zeros_like(mean, dtype=np.float32)
    return ((mean - lo) / (hi - lo)).astype(np.float32)


def save_heatmap(features, path: str | Path) -> None:
    from PIL import Image

    gray = (feature_heatmap(features) * 255).astype(np.uint8)
    Image.fromarray(gray, mode="L").save(path)


def transfer_stage_heatmaps(net, request) -> dict[str, np.ndarray]:
    """Heatmaps of the feature grid after each component transfer step.

    Visualizes how the per-component correspondence edits the content grid
    region by region (content, then +lips, +skin, +eyes in the model's
    transfer order).
    """
    from .generator import masks_for
    from .tensors import image_to_tensor

    device = next(net.parameters()).device
    source_t = image_to_tensor(request.source, device)
    reference_t = image_to_tensor(request.reference, device)
    src_masks = masks_for(request.source_parsing, device)
    ref_masks = masks_for(request.reference_parsing, device)
    order = net.config.transfer_order
    with torch.no_grad():
        content = net.content_encoder(source_t)
        styles = net.encode_styles(reference_t, ref_masks, order,
                                   global_enabled=False)
        grid_masks = {c: m[..., ::4, ::4] for c, m in src_masks.items()}
        heatmaps = {"content": feature_heatmap(content.grid)}
        feats = content.grid
        for com in order:
            feats = net.component_transfer(feats, styles, grid_masks,
                                           components=(com,))
            heatmaps[f"after_{com}"] = feature_heatmap(feats)
    return heatmaps


def transfer_order_diagnostic(net, request) -> dict[str, float]:
    """Mean absolute output difference of every transfer order vs the default.

    The architecture is expected to be largely insensitive to the order;
    this reports the measured spread rather than asserting it.
    """
    import itertools
    from dataclasses import replace

    base_cfg = net.config
    results = {}
    default = net.transfer(request)
    try:
        for order in itertools.permutations(("lips", "skin", "eyes")):
            net.config = replace(base_cfg, transfer_order=order)
            out = net.transfer(request)
            results["->".join(order)] = float(np.abs(out - default).mean())
    finally:
        net.config = base_cfg
    return results


# --------------------------------------------------------- FLOPs and params

class FlopCounter:
    """Multiply-accumulate counting over convolutions, linear maps and the
    attention matmuls for one full forward (one source+reference pair).

    Normalizations and activations are excluded by convention.
    """

    def __init__(self, model: torch.nn.Module):
        self.model = model
        self.total = 0
        self._handles = []

    def _conv_hook(self, module, inputs, output):
        k_h, k_w = module.kernel_size
        cin = module.in_channels // module.groups
        n, cout, h, w = output.shape
        self.total += MAC_FLOPS * n * k_h * k_w * cin * cout * h * w

    def _linear_hook(self, module, inputs, output):
        tokens = int(np.prod(output.shape[:-1]))
        self.total += MAC_FLOPS * tokens * module.in_features * module.out_features

    def _attention_hook(self, module, inputs, output):
        q_in, k_in = inputs[0], inputs[1]
        n, tq, dim = q_in.shape
        tk = k_in.shape[1]
        # scores QK^T and the weighted sum over V
        self.total += MAC_FLOPS * n * tq * tk * dim * 2

    def __enter__(self):
        for m in self.model.modules():
            if isinstance(m, torch.nn.Conv2d):
                self._handles.append(m.register_forward_hook(self._conv_hook))
            elif isinstance(m, torch.nn.Linear):
                self._handles.append(m.register_forward_hook(self._linear_hook))
            elif isinstance(m, MultiHeadAttention):
                self._handles.append(m.register_forward_hook(self._attention_hook))
        return self

    def __exit__(self, *exc):
        for h in self._handles:
            h.remove()
        self._handles.clear()


def flops_and_params(model, input_size: int = 256) -> tuple[int, int]:
    """FLOPs for one transfer at input_size², plus the trainable param count."""
    from .generator import masks_for

    params = model.count_parameters()
    rng = np.random.default_rng(0)
    parsing = np.zeros((input_size, input_size), dtype=np.uint8)
    # blocks of each component so every path is exercised
    q = input_size // 4
    parsing[q: 2 * q, q: 2 * q] = 1        # skin
    parsing[2 * q: 3 * q, q: 2 * q] = 7    # lips
    parsing[q: 2 * q, 2 * q: 3 * q] = 4    # left eye
    parsing[2 * q: 3 * q, 2 * q: 3 * q] = 5  # right eye
    image = rng.uniform(-1, 1, (1, 3, input_size, input_size)).astype(np.float32)
    src = torch.from_numpy(image)
    ref = torch.from_numpy(image[..., ::-1, :].copy())
    masks = masks_for(parsing)
    was_training = model.training
    model.eval()
    try:
        with FlopCounter(model) as counter, torch.no_grad():
            model(src, ref, masks, masks,
                  components=("lips", "skin", "eyes"), global_enabled=True)
    finally:
        model.train(was_training)
    return counter.total, params


# ----------------------------------------------------------------- reports

def write_report(report: dict, json_path: str | Path) -> str:
    """Emit the metrics as JSON and return a human-readable table."""
    json_path = Path(json_path)
    json_path.parent.mkdir(parents=True, exist_ok=True)
    json_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    width = max(len(k) for k in report)
    lines = ["metric".ljust(width) + "  value", "-" * (width + 9)]
    for key in sorted(report):
        value = report[key]
        if isinstance(value, float):
            value = f"{value:.6g}"
        lines.append(f"{key.ljust(width)}  {value}")
    return "\n".join(lines)
