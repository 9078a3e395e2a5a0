"""Synthesis network: encoder-decoder generator with skip connections and a
patch discriminator, plus the implicit-conditioning merge.

The generator maps a 4-channel image whose missing channels are zeroed to a
full 4-channel image. Conditioning is implicit: there is no scenario input,
the zero pattern itself carries it. ic_merge then overwrites the channels
that were present with the originals, so downstream consumers (and the
discriminator) only ever see synthesized values where data was missing.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn

from .errors import ContractError, ShapeError
from .scenarios import N_MODALITIES, ScenarioMask


@dataclass(frozen=True)
class GeneratorSpec:
    in_channels: int = N_MODALITIES
    out_channels: int = N_MODALITIES
    base_width: int = 64
    depth: int = 5

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "GeneratorSpec":
        return cls(**d)


@dataclass(frozen=True)
class DiscriminatorSpec:
    in_channels: int = N_MODALITIES
    base_width: int = 64

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DiscriminatorSpec":
        return cls(**d)


def _init_gan_weights(module: nn.Module) -> None:
    for m in module.modules():
        if isinstance(m, nn.Conv2d):
            nn.init.normal_(m.weight, 0.0, 0.02)
            if m.bias is not None:
                nn.init.zeros_(m.bias)


class _Down(nn.Module):
    """Stride-2 conv block; the first block skips normalization."""

    def __init__(self, c_in, c_out, norm=True):
        super().__init__()
        self.conv = nn.Conv2d(c_in, c_out, kernel_size=4, stride=2, padding=1)
        self.norm = nn.InstanceNorm2d(c_out) if norm else nn.Identity()
        self.act = nn.LeakyReLU(0.2, inplace=True)

    def forward(self, x):
        return self.act(self.norm(self.conv(x)))


class _Up(nn.Module):
    """Nearest-neighbor upsample followed by a 3x3 conv."""

    def __init__(self, c_in, c_out):
        super().__init__()
        self.up = nn.Upsample(scale_factor=2, mode="nearest")
        self.conv = nn.Conv2d(c_in, c_out, kernel_size=3, padding=1)
        self.norm = nn.InstanceNorm2d(c_out)
        self.act = nn.ReLU(inplace=True)

    def forward(self, x):
        return self.act(self.norm(self.conv(self.up(x))))


class Generator(nn.Module):
    def __init__(self, spec: GeneratorSpec | None = None):
        super().__init__()
        spec = spec or GeneratorSpec()
        self.spec = spec
        widths = [spec.base_width * 2 ** min(i, 3) for i in range(spec.depth)]

        enc = []
        c = spec.in_channels
        for i, w in enumerate(widths):
            # no norm on the first block (raw intensities) or the bottleneck
            # (its map can be 1x1, where instance statistics are undefined)
            enc.append(_Down(c, w, norm=0 < i < spec.depth - 1))
            c = w
        self.enc = nn.ModuleList(enc)

        dec = []
        for i in range(spec.depth - 1, 0, -1):
            dec.append(_Up(c, widths[i - 1]))
            c = 2 * widths[i - 1]  # skip concat doubles the channels
        self.dec = nn.ModuleList(dec)
        self.final_up = _Up(c, spec.base_width)
        # linear head: intensities are mean-normalized, not squashed
        self.head = nn.Conv2d(spec.base_width, spec.out_channels, kernel_size=3, padding=1)
        _init_gan_weights(self)

    def forward(self, x):
        if x.ndim != 4 or x.shape[1] != self.spec.in_channels:
            raise ShapeError(
                f"expected (N, {self.spec.in_channels}, H, W), got {tuple(x.shape)}"
            )
        stride = 2 ** self.spec.depth
        if x.shape[2] % stride or x.shape[3] % stride:
            raise ShapeError(
                f"spatial dims must be multiples of {stride}, got {tuple(x.shape[2:])}"
            )
        skips = []
        h = x
        for block in self.enc:
            h = block(h)
            skips.append(h)
        for i, block in enumerate(self.dec):
            h = block(h)
            h = torch.cat([h, skips[-2 - i]], dim=1)
        h = self.final_up(h)
        return self.head(h)


class Discriminator(nn.Module):
    """Patch discriminator: per-patch realism scores on a coarse grid."""

    def __init__(self, spec: DiscriminatorSpec | None = None):
        super().__init__()
        spec = spec or DiscriminatorSpec()
        self.spec = spec
        b = spec.base_width
        self.net = nn.Sequential(
            nn.Conv2d(spec.in_channels, b, 4, stride=2, padding=1),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(b, 2 * b, 4, stride=2, padding=1),
            nn.InstanceNorm2d(2 * b),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(2 * b, 4 * b, 4, stride=2, padding=1),
            nn.InstanceNorm2d(4 * b),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(4 * b, 8 * b, 4, stride=1, padding=1),
            nn.InstanceNorm2d(8 * b),
            nn.LeakyReLU(0.2, inplace=True),
            nn.Conv2d(8 * b, 1, 4, stride=1, padding=1),
        )
        _init_gan_weights(self)

    @staticmethod
    def score_grid_shape(h: int, w: int) -> tuple[int, int]:
        """Spatial shape of the score map for an h x w input."""
        return (h // 8 - 2, w // 8 - 2)

    def forward(self, x):
        if x.ndim != 4 or x.shape[1] != self.spec.in_channels:
            raise ShapeError(
                f"expected (N, {self.spec.in_channels}, H, W), got {tuple(x.shape)}"
            )
        h, w = int(x.shape[2]), int(x.shape[3])
        gh, gw = self.score_grid_shape(h, w)
        if h % 8 or w % 8 or gh < 1 or gw < 1:
            raise ShapeError(f"input {h}x{w} too small or not a multiple of 8")
        return self.net(x)


def _mask_list(masks, n: int) -> list[ScenarioMask]:
    if isinstance(masks, ScenarioMask):
        return [masks] * n
    masks = list(masks)
    if len(masks) != n:
        raise ShapeError(f"got {len(masks)} masks for a batch of {n}")
    return masks


def presence_tensor(masks, n: int, device=None) -> torch.Tensor:
    """(N, 4, 1, 1) boolean tensor: True where the channel is present."""
    rows = [m.bits for m in _mask_list(masks, n)]
    return torch.tensor(rows, dtype=torch.bool, device=device).view(n, N_MODALITIES, 1, 1)


def ic_merge(original: torch.Tensor, generated: torch.Tensor, masks) -> torch.Tensor:
    """Present channels bit-exact from `original`, missing from `generated`."""
    if original.shape != generated.shape:
        raise ShapeError(f"shape mismatch {tuple(original.shape)} vs {tuple(generated.shape)}")
    if original.ndim != 4 or original.shape[1] != N_MODALITIES:
        raise ShapeError(f"expected (N, {N_MODALITIES}, H, W), got {tuple(original.shape)}")
    present = presence_tensor(masks, original.shape[0], device=original.device)
    return torch.where(present, original, generated)


def generate(generator: Generator, images: torch.Tensor, masks) -> torch.Tensor:
    """Synthesize the missing channels of `images` under the given scenarios.

    Input channels marked missing are zeroed before the forward pass; the
    output keeps present channels bit-exact and takes missing ones from the
    generator. Scenarios with no present channel are rejected.
    """
    if images.ndim != 4 or images.shape[1] != N_MODALITIES:
        raise ShapeError(f"expected (N, {N_MODALITIES}, H, W), got {tuple(images.shape)}")
    mask_list = _mask_list(masks, images.shape[0])
    for m in mask_list:
        if m.present_count == 0:
            raise ContractError("scenario 0000 has no source channel to condition on")
    present = presence_tensor(mask_list, images.shape[0], device=images.device)
    zeroed = torch.where(present, images, torch.zeros((), dtype=images.dtype, device=images.device))
    out = generator(zeroed)
    return ic_merge(images, out, mask_list)
