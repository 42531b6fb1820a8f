"""Training objectives for the upsampler, the critics, and their shared utilities.

The generator minimizes, per stage: the negative mean critic score of its
randomized-attribute output, an L1 pixel term against the stage target
(weight alpha), binary cross entropy between the critic's attribute
prediction for the randomized-attribute output and the randomized vector
itself (weight beta), and, at the final stage only, a perceptual feature
distance (weight gamma). Pixel and perceptual terms use the ground-truth-
attribute output; adversarial and attribute terms use the randomized one.

Each critic minimizes the negative Wasserstein gap between real and
generated scores, attribute BCE on both real and generated images against
the real labels, and the gradient penalty (weight lambda) that drives the
interpolated input-gradient norm toward 1.

Every term is reduced by batch mean so the weights are batch-size
invariant. Component breakdowns are returned unweighted; totals apply the
weights, so zeroing one weight removes exactly that term.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch

from facehall.attributes import NUM_ATTRIBUTES
from facehall.classifier import LOG_EPS
from facehall.critics import Critic, gradient_penalty
from facehall.features import FeatureExtractor

PERCEPTUAL_STAGE = 3


@dataclass
class LossWeights:
    alpha: float = 100.0  # pixel L1
    beta: float = 10.0  # attribute BCE
    gamma: float = 0.1  # perceptual (final stage only)
    lam: float = 10.0  # gradient penalty

    def validate(self) -> None:
        for name in ("alpha", "beta", "gamma", "lam"):
            v = getattr(self, name)
            if not (v >= 0):
                raise ValueError(f"loss weight {name} must be >= 0, got {v}")


def _as_tensor(x) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x
    return torch.as_tensor(x, dtype=torch.float32)


def l1_pixel_loss(pred, target) -> torch.Tensor:
    """Mean absolute difference over all pixels and channels."""
    pred, target = _as_tensor(pred), _as_tensor(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {tuple(pred.shape)} vs {tuple(target.shape)}")
    return (pred - target).abs().mean()


def attribute_bce(pred, target) -> torch.Tensor:
    """Mean-per-attribute binary cross entropy with clamped logs.

    pred holds probabilities; target may be binary or continuous in [0, 1].
    """
    pred, target = _as_tensor(pred), _as_tensor(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {tuple(pred.shape)} vs {tuple(target.shape)}")
    if pred.shape[-1] != NUM_ATTRIBUTES:
        raise ValueError(f"expected {NUM_ATTRIBUTES} attributes, got {pred.shape[-1]}")
    if torch.any(pred < 0) or torch.any(pred > 1):
        raise ValueError("predicted probabilities must lie in [0, 1]")
    p = pred.clamp(LOG_EPS, 1.0 - LOG_EPS)
    return -(target * torch.log(p) + (1.0 - target) * torch.log(1.0 - p)).mean()


def perceptual_loss(pred, target, extractor: FeatureExtractor) -> torch.Tensor:
    """Mean squared distance between extractor feature vectors of two 128x128 batches."""
    if extractor is None:
        raise ValueError(
            "perceptual loss needs a feature extractor; configure one "
            "(kind=vggface_random|tiny_random, optional weights_path) or set gamma to 0"
        )
    pred, target = _as_tensor(pred), _as_tensor(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {tuple(pred.shape)} vs {tuple(target.shape)}")
    f_pred = extractor(pred)
    f_target = extractor(target)
    return ((f_pred - f_target) ** 2).mean()


def generator_loss(
    stage: int,
    output_gt: torch.Tensor,
    output_rand: torch.Tensor,
    target: torch.Tensor,
    a_star: torch.Tensor,
    critic: Critic,
    extractor: FeatureExtractor | None,
    weights: LossWeights,
) -> tuple[torch.Tensor, dict[str, torch.Tensor]]:
    """Stage-i generator objective.

    output_gt is the stage-i image conditioned on ground-truth attributes,
    output_rand the one conditioned on the randomized vector a_star. Returns
    (total, components) with unweighted components keyed adversarial /
    pixel_l1 / attribute / perceptual.
    """
    weights.validate()
    if getattr(critic, "stage", None) != stage:
        raise ValueError(f"critic stage {getattr(critic, 'stage', None)} != loss stage {stage}")
    zero = output_gt.new_zeros(())
    adv_scores, attr_pred = critic(output_rand)
    components = {
        "adversarial": -adv_scores.mean(),
        "pixel_l1": l1_pixel_loss(output_gt, target),
        "attribute": attribute_bce(attr_pred, a_star),
        "perceptual": zero,
    }
    if stage == PERCEPTUAL_STAGE and weights.gamma > 0:
        components["perceptual"] = perceptual_loss(output_gt, target, extractor)
    total = (
        components["adversarial"]
        + weights.alpha * components["pixel_l1"]
        + weights.beta * components["attribute"]
        + weights.gamma * components["perceptual"]
    )
    return total, components


def critic_loss(
    stage: int,
    real: torch.Tensor,
    fake: torch.Tensor,
    labels: torch.Tensor,
    critic: Critic,
    weights: LossWeights,
    t: torch.Tensor,
) -> tuple[torch.Tensor, dict[str, torch.Tensor]]:
    """Stage-i critic objective on a real batch and a detached generated batch.

    labels are the ground-truth attributes of the real batch's sources; the
    generated batch was conditioned on the same labels. t holds the per-sample
    interpolation factors for the gradient penalty. Returns (total,
    components) with unweighted components keyed wasserstein /
    attribute_real / attribute_fake / gradient_penalty.
    """
    weights.validate()
    if getattr(critic, "stage", None) != stage:
        raise ValueError(f"critic stage {getattr(critic, 'stage', None)} != loss stage {stage}")
    if real.shape != fake.shape:
        raise ValueError(f"real {tuple(real.shape)} vs fake {tuple(fake.shape)} shape mismatch")
    fake = fake.detach()
    adv_real, attr_real = critic(real)
    adv_fake, attr_fake = critic(fake)
    components = {
        "wasserstein": -(adv_real.mean() - adv_fake.mean()),
        "attribute_real": attribute_bce(attr_real, labels),
        "attribute_fake": attribute_bce(attr_fake, labels),
        "gradient_penalty": gradient_penalty(critic, real, fake, t, lam=1.0),
    }
    total = (
        components["wasserstein"]
        + components["attribute_real"]
        + components["attribute_fake"]
        + weights.lam * components["gradient_penalty"]
    )
    return total, components
