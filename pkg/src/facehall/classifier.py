"""LR attribute classifier: 16x16 face -> 12 attribute probabilities.

Removes the need for ground-truth attributes at inference: the classifier's
predictions condition the generator when a request carries no attributes.
Tiny input, tiny network: two 4x4/s2/p1 convolutions (16->8->4) and a fully
connected head with logistic outputs.
"""

from __future__ import annotations

import torch
import torch.nn as nn

from facehall.attributes import NUM_ATTRIBUTES
from facehall.generator import LEAKY_SLOPE

LOG_EPS = 1e-7
INPUT_RESOLUTION = 16


class AttributeClassifier(nn.Module):
    def __init__(self, base_channels: int = 32):
        super().__init__()
        self.input_resolution = INPUT_RESOLUTION
        self.features = nn.Sequential(
            nn.Conv2d(3, base_channels, 4, 2, 1),
            nn.BatchNorm2d(base_channels),
            nn.LeakyReLU(LEAKY_SLOPE),
            nn.Conv2d(base_channels, base_channels * 2, 4, 2, 1),
            nn.BatchNorm2d(base_channels * 2),
            nn.LeakyReLU(LEAKY_SLOPE),
        )
        self.head = nn.Linear(base_channels * 2 * 4 * 4, NUM_ATTRIBUTES)

    def forward(self, lr: torch.Tensor) -> torch.Tensor:
        """(N, 3, 16, 16) -> (N, 12) probabilities in (0, 1)."""
        r = self.input_resolution
        if lr.dim() != 4 or lr.shape[1:] != (3, r, r):
            raise ValueError(f"classifier expects (N, 3, {r}, {r}), got {tuple(lr.shape)}")
        h = self.features(lr).flatten(1)
        return torch.sigmoid(self.head(h))


def build_classifier(seed: int, base_channels: int = 32) -> AttributeClassifier:
    """Construct the classifier with deterministic seeded initialization."""
    torch.manual_seed(seed)
    return AttributeClassifier(base_channels=base_channels)


def classify(clf: AttributeClassifier, lr: torch.Tensor) -> torch.Tensor:
    """Evaluation-mode attribute prediction; deterministic for fixed weights."""
    was_training = clf.training
    clf.eval()
    try:
        with torch.no_grad():
            probs = clf(lr)
    finally:
        clf.train(was_training)
    return probs


def classifier_loss(pred: torch.Tensor, truth: torch.Tensor) -> torch.Tensor:
    """Binary cross entropy summed over the 12 attributes, averaged over the batch.

    pred holds probabilities in (0, 1); truth the binary labels. Logs are
    clamped at 1e-7 so exact 0/1 predictions stay finite.
    """
    if pred.shape != truth.shape:
        raise ValueError(f"pred {tuple(pred.shape)} and truth {tuple(truth.shape)} differ")
    if pred.shape[-1] != NUM_ATTRIBUTES:
        raise ValueError(f"expected {NUM_ATTRIBUTES} attributes, got {pred.shape[-1]}")
    if torch.any(pred < 0) or torch.any(pred > 1):
        raise ValueError("predicted probabilities must lie in [0, 1]")
    p = pred.clamp(LOG_EPS, 1.0 - LOG_EPS)
    per_attr = -(truth * torch.log(p) + (1.0 - truth) * torch.log(1.0 - p))
    return per_attr.sum(dim=-1).mean()
