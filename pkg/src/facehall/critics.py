"""Stage-specific critics with branched heads.

One critic per stage resolution (32/64/128); the three networks share no
parameters. Each has a trunk of 4x4/s2/p1 convolutions with LeakyReLU(0.2)
reducing to 4x4 spatial, then two heads: an unbounded scalar Wasserstein
score and 12 attribute probabilities. The trunk carries no batch
normalization: the per-sample gradient penalty is ill-defined under
batch-coupled statistics.
"""

from __future__ import annotations

import torch
import torch.nn as nn

from facehall.attributes import NUM_ATTRIBUTES
from facehall.generator import LEAKY_SLOPE, MAX_CHANNELS

STAGE_RESOLUTIONS = {1: 32, 2: 64, 3: 128}


class Critic(nn.Module):
    """Wasserstein critic + attribute predictor for one stage resolution."""

    def __init__(self, stage: int, base_channels: int = 64):
        super().__init__()
        if stage not in STAGE_RESOLUTIONS:
            raise ValueError(f"stage must be in 1..3, got {stage}")
        self.stage = stage
        self.input_resolution = STAGE_RESOLUTIONS[stage]

        layers: list[nn.Module] = []
        in_ch = 3
        res = self.input_resolution
        k = 0
        while res > 4:
            out_ch = min(base_channels * 2**k, MAX_CHANNELS)
            layers += [nn.Conv2d(in_ch, out_ch, 4, 2, 1), nn.LeakyReLU(LEAKY_SLOPE)]
            in_ch = out_ch
            res //= 2
            k += 1
        self.trunk = nn.Sequential(*layers)
        flat = in_ch * 4 * 4
        self.adv_head = nn.Linear(flat, 1)
        self.attr_head = nn.Linear(flat, NUM_ATTRIBUTES)

    def forward(self, image: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """(N, 3, r, r) -> (adv scores (N,), attribute probabilities (N, 12))."""
        r = self.input_resolution
        if image.dim() != 4 or image.shape[1:] != (3, r, r):
            raise ValueError(
                f"stage-{self.stage} critic expects (N, 3, {r}, {r}), got {tuple(image.shape)}"
            )
        h = self.trunk(image).flatten(1)
        adv = self.adv_head(h).squeeze(1)
        attr = torch.sigmoid(self.attr_head(h))
        return adv, attr


def build_critic(stage: int, seed: int, base_channels: int = 64) -> Critic:
    """Construct one stage critic with deterministic seeded initialization."""
    if stage not in STAGE_RESOLUTIONS:
        raise ValueError(f"stage must be in 1..3, got {stage}")
    torch.manual_seed(seed)
    return Critic(stage, base_channels=base_channels)


def interpolate_images(real: torch.Tensor, fake: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
    """Per-sample convex combination t*real + (1-t)*fake; t in [0, 1]."""
    if real.shape != fake.shape:
        raise ValueError(f"real {tuple(real.shape)} and fake {tuple(fake.shape)} shapes differ")
    t = torch.as_tensor(t, dtype=real.dtype, device=real.device)
    if t.dim() == 0:
        t = t.expand(real.shape[0])
    if t.shape != (real.shape[0],):
        raise ValueError(f"t must be scalar or per-sample (N,), got {tuple(t.shape)}")
    if torch.any(t < 0) or torch.any(t > 1):
        raise ValueError("interpolation factor t must lie in [0, 1]")
    t = t.view(-1, 1, 1, 1)
    return t * real + (1.0 - t) * fake


def gradient_penalty(
    critic: nn.Module,
    real: torch.Tensor,
    fake: torch.Tensor,
    t: torch.Tensor,
    lam: float,
) -> torch.Tensor:
    """WGAN gradient penalty: lam * E[(||grad D_adv(interp)||_2 - 1)^2].

    The interpolate is t*real + (1-t)*fake per sample; the caller samples t
    uniformly on [0, 1]. Differentiable with respect to critic parameters.
    """
    with torch.enable_grad():
        interp = interpolate_images(real, fake, t)
        if not interp.requires_grad:
            interp.requires_grad_(True)
        adv, _ = critic(interp)
        if adv.requires_grad:
            grads = torch.autograd.grad(
                outputs=adv.sum(),
                inputs=interp,
                create_graph=True,
                retain_graph=True,
                allow_unused=True,
            )[0]
        else:  # adv is constant in the input; its gradient is identically zero
            grads = None
    if grads is None:
        norms = torch.zeros(interp.shape[0], dtype=interp.dtype, device=interp.device)
    else:
        norms = grads.flatten(1).norm(2, dim=1)
    return lam * ((norms - 1.0) ** 2).mean()


def interpolated_gradient_norm(
    critic: nn.Module, real: torch.Tensor, fake: torch.Tensor, t: torch.Tensor
) -> torch.Tensor:
    """Mean ||grad D_adv(interp)||_2 over the batch; training diagnostic."""
    interp = interpolate_images(real.detach(), fake.detach(), t)
    interp.requires_grad_(True)
    with torch.enable_grad():
        adv, _ = critic(interp)
        if not adv.requires_grad:
            return torch.zeros((), dtype=interp.dtype, device=interp.device)
        grads = torch.autograd.grad(outputs=adv.sum(), inputs=interp, allow_unused=True)[0]
    if grads is None:
        return torch.zeros((), dtype=interp.dtype, device=interp.device)
    return grads.flatten(1).norm(2, dim=1).mean().detach()
