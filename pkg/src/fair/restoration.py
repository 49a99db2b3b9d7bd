"""UNet restoration network, l2 + SSIM objective, and checkpoint files.

The UNet has ``depth`` encoder stages with widths ``c * (1, 2, 4, 8, 8, ...)``
(capped at ``8c``), 2x max-pool between stages and bilinear 2x upsampling in
the decoder.  Every stage is two ``conv3x3 -> GroupNorm -> ReLU`` blocks;
GroupNorm keeps inference independent of batch composition.  The output head
is a linear 1x1 conv: restored images are clamped only for evaluation.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

CHECKPOINT_FORMAT = "fair-checkpoint/1"

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass
class NetConfig:
    base_width_c: int = 128
    in_channels: int = 3
    out_channels: int = 3
    use_skips: bool = True
    depth: int = 5

    def __post_init__(self):
        if self.out_channels != 3:
            raise ValueError("out_channels must be 3: the network restores an sRGB image")
        if self.base_width_c < 1 or self.in_channels < 1 or self.depth < 1:
            raise ValueError(f"invalid network config {self}")

    @property
    def widths(self):
        c = self.base_width_c
        return [c * min(2**i, 8) for i in range(self.depth)]

    @property
    def size_multiple(self) -> int:
        return 2 ** (self.depth - 1)


def _groups(ch: int) -> int:
    for g in (8, 4, 2):
        if ch % g == 0:
            return g
    return 1


class ConvBlock(nn.Sequential):
    def __init__(self, cin, cout):
        super().__init__(
            nn.Conv2d(cin, cout, 3, padding=1),
            nn.GroupNorm(_groups(cout), cout),
            nn.ReLU(inplace=True),
            nn.Conv2d(cout, cout, 3, padding=1),
            nn.GroupNorm(_groups(cout), cout),
            nn.ReLU(inplace=True),
        )


class UNet(nn.Module):
    def __init__(self, config: NetConfig):
        super().__init__()
        self.config = config
        w = config.widths
        self.encoders = nn.ModuleList()
        cin = config.in_channels
        for width in w:
            self.encoders.append(ConvBlock(cin, width))
            cin = width
        self.decoders = nn.ModuleList()
        for i in range(len(w) - 2, -1, -1):
            skip = w[i] if config.use_skips else 0
            self.decoders.append(ConvBlock(cin + skip, w[i]))
            cin = w[i]
        self.head = nn.Conv2d(cin, config.out_channels, 1)

    def forward(self, x):
        m = self.config.size_multiple
        if x.shape[-2] % m or x.shape[-1] % m:
            raise ValueError(f"input size {tuple(x.shape[-2:])} must be divisible by {m}")
        skips = []
        for i, enc in enumerate(self.encoders):
            if i:
                x = F.max_pool2d(x, 2)
            x = enc(x)
            skips.append(x)
        skips.pop()
        for dec in self.decoders:
            x = F.interpolate(x, scale_factor=2, mode="bilinear", align_corners=False)
            skip = skips.pop()
            if self.config.use_skips:
                x = torch.cat([x, skip], dim=1)
            x = dec(x)
        return self.head(x)


def build_model(config: NetConfig, seed: int | None = None) -> UNet:
    """Fresh model; ``seed`` pins PyTorch's default initialisation."""
    if seed is not None:
        torch.manual_seed(seed)
    return UNet(config)


def count_parameters(model: nn.Module) -> int:
    return sum(p.numel() for p in model.parameters())


def to_tensor(arr) -> torch.Tensor:
    """(H, W, C) or (B, H, W, C) array -> (B, C, H, W) float32 tensor."""
    arr = np.asarray(arr, dtype=np.float32)
    if arr.ndim == 3:
        arr = arr[None]
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(0, 3, 1, 2)))


def to_numpy(t: torch.Tensor) -> np.ndarray:
    """(B, C, H, W) tensor -> (B, H, W, C) float64 array."""
    return t.detach().cpu().double().numpy().transpose(0, 2, 3, 1)


@torch.no_grad()
def restore(model: UNet, x, clamp: bool = True) -> np.ndarray:
    """Run the network on one ``(H, W, C_in)`` input or a batch in eval mode."""
    single = np.asarray(x).ndim == 3
    model.eval()
    out = model(to_tensor(x))
    if clamp:
        out = out.clamp(0.0, 1.0)
    out = to_numpy(out)
    return out[0] if single else out


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA, dtype=torch.float32):
    x = torch.arange(size, dtype=dtype) - (size - 1) / 2.0
    g = torch.exp(-(x**2) / (2 * sigma**2))
    g = g / g.sum()
    return torch.outer(g, g)


def ssim(x: torch.Tensor, y: torch.Tensor, data_range: float = 1.0) -> torch.Tensor:
    """Mean SSIM over channels and all full-window positions (no padding)."""
    ch = x.shape[1]
    win = gaussian_window(dtype=x.dtype).to(x.device).expand(ch, 1, SSIM_WINDOW, SSIM_WINDOW)

    def filt(t):
        return F.conv2d(t, win, groups=ch)

    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    mx, my = filt(x), filt(y)
    sxx = filt(x * x) - mx * mx
    syy = filt(y * y) - my * my
    sxy = filt(x * y) - mx * my
    num = (2 * mx * my + c1) * (2 * sxy + c2)
    den = (mx * mx + my * my + c1) * (sxx + syy + c2)
    return (num / den).mean()


def loss(restored: torch.Tensor, clean: torch.Tensor):
    """``mse + (1 - SSIM)``; returns ``(total, {"l2": ..., "ssim": ...})``."""
    if restored.shape != clean.shape:
        raise ValueError(f"shape mismatch: {tuple(restored.shape)} vs {tuple(clean.shape)}")
    l2 = F.mse_loss(restored, clean)
    l_ssim = 1.0 - ssim(restored, clean)
    return l2 + l_ssim, {"l2": l2.detach(), "ssim": l_ssim.detach()}


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def save_checkpoint(path, model: UNet, extractor: dict, progress: dict | None = None,
                    optimizer_state=None, train_config: dict | None = None) -> None:
    payload = {
        "format": CHECKPOINT_FORMAT,
        "net": asdict(model.config),
        "extractor": extractor,
        "extractor_hash": config_hash(extractor),
        "config_hash": config_hash(train_config) if train_config is not None else None,
        "train_config": train_config,
        "progress": progress or {},
        "state_dict": model.state_dict(),
        "optimizer": optimizer_state,
    }
    torch.save(payload, path)


def load_checkpoint(path):
    """Load a checkpoint; returns ``(model, payload)`` with the model in eval mode."""
    payload = torch.load(path, map_location="cpu", weights_only=False)
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: unsupported checkpoint format {payload.get('format')!r}")
    if config_hash(payload["extractor"]) != payload["extractor_hash"]:
        raise ValueError(f"{path}: extractor config does not match its recorded hash")
    model = UNet(NetConfig(**payload["net"]))
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, payload
