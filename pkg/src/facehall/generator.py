"""Upsampling network: attribute-conditioned autoencoder with progressive stages.

Layout (default config, base_channels C=64, encoder_depth 2):

    encoder   conv 4x4/s2/p1 + BN + LeakyReLU(0.2):  3 -> C (16->8), C -> 2C (8->4)
    fuse      concat 12 attribute channels (value-broadcast over the 4x4
              bottleneck), 1x1 conv (2C+12) -> 2C + BN + LeakyReLU
    decoder   deconv 4x4/s2/p1 + BN + ReLU:  2C -> C (4->8), C -> C (8->16)
    stage i   deconv 4x4/s2/p1 + BN + ReLU to 32*2^(i-1), channels halved per
              stage (C, C/2, C/4, floor 8), then residual blocks (two
              3x3/s1/p1 convs + BN, identity shortcut)
    RGB i     conv 5x5/s1/p2 from the stage deconv output to 3 channels
              (linear; the additive skip recursion must not be squashed)

Each stage's merged image is its RGB map plus the bilinear 2x upsampling of
the previous stage's merged image; stage 1 adds the bilinear 2x upsampling
of the 16x16 input itself. Outputs are not clamped; [0, 1] clamping happens
only at serialization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch
import torch.nn as nn

from facehall.attributes import NUM_ATTRIBUTES
from facehall.images import upsample2x

LEAKY_SLOPE = 0.2
MAX_CHANNELS = 512
MIN_STAGE_CHANNELS = 8


@dataclass
class GeneratorConfig:
    n_attributes: int = NUM_ATTRIBUTES
    base_channels: int = 64
    encoder_depth: int = 2
    residual_blocks_per_stage: int = 2
    stage_resolutions: tuple[int, ...] = (32, 64, 128)

    def validate(self) -> None:
        if self.base_channels <= 0:
            raise ValueError(f"base_channels must be positive, got {self.base_channels}")
        if self.residual_blocks_per_stage < 1:
            raise ValueError(
                f"residual_blocks_per_stage must be >= 1, got {self.residual_blocks_per_stage}"
            )
        if self.encoder_depth < 1 or 16 % (2**self.encoder_depth) != 0:
            raise ValueError(f"encoder_depth must halve 16 cleanly, got {self.encoder_depth}")
        if tuple(self.stage_resolutions) != (32, 64, 128):
            raise ValueError(
                f"stage resolutions must double from 32 to 128, got {self.stage_resolutions}"
            )
        if self.n_attributes != NUM_ATTRIBUTES:
            raise ValueError(f"n_attributes must be {NUM_ATTRIBUTES}, got {self.n_attributes}")

    def stage_channels(self, stage: int) -> int:
        """Feature width at stage 1..3; halved per upsampling stage."""
        return max(self.base_channels // (2 ** (stage - 1)), MIN_STAGE_CHANNELS)


class ResidualBlock(nn.Module):
    """Two 3x3/s1/p1 convs with batch norm, identity shortcut."""

    def __init__(self, channels: int):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, 1, 1)
        self.bn1 = nn.BatchNorm2d(channels)
        self.conv2 = nn.Conv2d(channels, channels, 3, 1, 1)
        self.bn2 = nn.BatchNorm2d(channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        h = torch.relu(self.bn1(self.conv1(x)))
        h = self.bn2(self.conv2(h))
        return torch.relu(x + h)


class Generator(nn.Module):
    """Attribute-conditioned progressive upsampler, 16x16 -> up to 128x128."""

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        config.validate()
        self.config = config
        c = config.base_channels

        enc_layers: list[nn.Module] = []
        in_ch = 3
        for k in range(config.encoder_depth):
            out_ch = min(c * 2**k, MAX_CHANNELS)
            enc_layers += [
                nn.Conv2d(in_ch, out_ch, 4, 2, 1),
                nn.BatchNorm2d(out_ch),
                nn.LeakyReLU(LEAKY_SLOPE),
            ]
            in_ch = out_ch
        self.encoder = nn.Sequential(*enc_layers)
        bottleneck_ch = in_ch

        self.fuse = nn.Sequential(
            nn.Conv2d(bottleneck_ch + config.n_attributes, bottleneck_ch, 1, 1, 0),
            nn.BatchNorm2d(bottleneck_ch),
            nn.LeakyReLU(LEAKY_SLOPE),
        )

        dec_layers: list[nn.Module] = []
        in_ch = bottleneck_ch
        for _ in range(config.encoder_depth):
            out_ch = max(in_ch // 2, c)
            dec_layers += [
                nn.ConvTranspose2d(in_ch, out_ch, 4, 2, 1),
                nn.BatchNorm2d(out_ch),
                nn.ReLU(),
            ]
            in_ch = out_ch
        self.decoder = nn.Sequential(*dec_layers)

        self.stage_up = nn.ModuleList()
        self.stage_residual = nn.ModuleList()
        self.rgb_blocks = nn.ModuleList()
        for stage in range(1, 4):
            out_ch = config.stage_channels(stage)
            self.stage_up.append(
                nn.Sequential(
                    nn.ConvTranspose2d(in_ch, out_ch, 4, 2, 1),
                    nn.BatchNorm2d(out_ch),
                    nn.ReLU(),
                )
            )
            self.stage_residual.append(
                nn.Sequential(
                    *[ResidualBlock(out_ch) for _ in range(config.residual_blocks_per_stage)]
                )
            )
            self.rgb_blocks.append(nn.Conv2d(out_ch, 3, 5, 1, 2))
            in_ch = out_ch

        self._last_rgb: dict[int, torch.Tensor] = {}
        self._last_active_stage = 0

    def forward(
        self, lr: torch.Tensor, attrs: torch.Tensor, active_stage: int = 3
    ) -> dict[int, torch.Tensor]:
        """Run up to ``active_stage``; returns {resolution: merged image batch}.

        lr is (N, 3, 16, 16) in [0, 1]; attrs is (N, 12). The per-stage RGB
        maps from this pass are cached for ``intermediate_rgb``.
        """
        if lr.dim() != 4 or lr.shape[1:] != (3, 16, 16):
            raise ValueError(f"lr must be (N, 3, 16, 16), got {tuple(lr.shape)}")
        if attrs.dim() != 2 or attrs.shape[1] != self.config.n_attributes:
            raise ValueError(
                f"attrs must be (N, {self.config.n_attributes}), got {tuple(attrs.shape)}"
            )
        if attrs.shape[0] != lr.shape[0]:
            raise ValueError(
                f"batch mismatch: {lr.shape[0]} images vs {attrs.shape[0]} attribute rows"
            )
        if active_stage not in (1, 2, 3):
            raise ValueError(f"active_stage must be in 1..3, got {active_stage}")

        z = self.encoder(lr)
        a_map = attrs[:, :, None, None].expand(-1, -1, z.shape[2], z.shape[3])
        z = self.fuse(torch.cat([z, a_map], dim=1))
        feats = self.decoder(z)

        outputs: dict[int, torch.Tensor] = {}
        self._last_rgb = {}
        self._last_active_stage = active_stage
        merged = upsample2x(lr)  # stage-1 base: bilinear 2x of the LR input
        x = feats
        for stage in range(1, active_stage + 1):
            res = self.config.stage_resolutions[stage - 1]
            x = self.stage_up[stage - 1](x)
            rgb = self.rgb_blocks[stage - 1](x)
            x = self.stage_residual[stage - 1](x)
            if stage > 1:
                merged = upsample2x(merged)
            merged = rgb + merged
            outputs[res] = merged
            self._last_rgb[stage] = rgb
        return outputs

    def intermediate_rgb(self, stage: int) -> torch.Tensor:
        """Pre-merge RGB map for ``stage`` from the most recent forward pass."""
        if not self._last_rgb:
            raise RuntimeError("intermediate_rgb needs a completed forward pass first")
        if stage not in self._last_rgb:
            raise ValueError(
                f"stage {stage} not available; last forward ran stages 1..{self._last_active_stage}"
            )
        return self._last_rgb[stage]


def build_generator(config: GeneratorConfig, seed: int) -> Generator:
    """Construct a generator with deterministic seed-controlled initialization."""
    config.validate()
    torch.manual_seed(seed)
    return Generator(config)
