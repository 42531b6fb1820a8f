"""Pluggable identity-feature extractor for the perceptual loss and cosine metric.

The reference layout mirrors a VGG-16-style face-identity network truncated
at the activation after the first convolution of the fourth block (the layer
whose features the perceptual loss compares). Pretrained face-identity
weights are an external asset: by default the layout is frozen at random
initialization, which preserves every metric property used in testing
(zero at identity, symmetry) but is NOT identity-faithful. Load real
weights via ``weights_path`` for faithful identity features.

A "tiny" variant (two strided convolutions) exists for fast desk-scale
training and tests.
"""

from __future__ import annotations

from pathlib import Path

import torch
import torch.nn as nn

FEATURE_INPUT_RESOLUTION = 128

# Convolution widths up to the compared layer; "M" is 2x2 max pooling.
_VGG_FACE_PREFIX = (64, 64, "M", 128, 128, "M", 256, 256, 256, "M", 512)


class FeatureExtractor(nn.Module):
    """Frozen image -> feature-vector map over 128x128 inputs."""

    def __init__(self, kind: str = "vggface_random", seed: int = 0):
        super().__init__()
        if kind not in ("vggface_random", "tiny_random"):
            raise ValueError(f"unknown extractor kind {kind!r}")
        self.kind = kind
        torch.manual_seed(seed)
        layers: list[nn.Module] = []
        if kind == "vggface_random":
            in_ch = 3
            for spec in _VGG_FACE_PREFIX:
                if spec == "M":
                    layers.append(nn.MaxPool2d(2, 2))
                else:
                    layers += [nn.Conv2d(in_ch, spec, 3, 1, 1), nn.ReLU()]
                    in_ch = spec
        else:
            layers = [
                nn.Conv2d(3, 8, 5, 4, 2),
                nn.ReLU(),
                nn.Conv2d(8, 16, 5, 4, 2),
                nn.ReLU(),
            ]
        self.net = nn.Sequential(*layers)
        for p in self.parameters():
            p.requires_grad_(False)
        self.eval()

    def train(self, mode: bool = True):  # noqa: ARG002 - frozen module stays in eval
        return super().train(False)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        """(N, 3, 128, 128) -> (N, D) feature vectors; gradients flow to the input."""
        r = FEATURE_INPUT_RESOLUTION
        if images.dim() != 4 or images.shape[1:] != (3, r, r):
            raise ValueError(
                f"feature extractor expects (N, 3, {r}, {r}), got {tuple(images.shape)}"
            )
        return self.net(images).flatten(1)


def build_feature_extractor(
    kind: str = "vggface_random",
    weights_path: str | Path | None = None,
    seed: int = 0,
) -> FeatureExtractor:
    """Build a frozen extractor; optionally load pretrained weights.

    Raises FileNotFoundError/RuntimeError pointing at the config when the
    weight file is missing or does not match the layout.
    """
    extractor = FeatureExtractor(kind=kind, seed=seed)
    if weights_path is not None:
        weights_path = Path(weights_path)
        if not weights_path.is_file():
            raise FileNotFoundError(
                f"feature extractor weights not found: {weights_path}; fix the "
                f"extractor weights_path setting or omit it for the random fallback"
            )
        try:
            state = torch.load(weights_path, map_location="cpu", weights_only=True)
            extractor.load_state_dict(state)
        except Exception as exc:
            raise RuntimeError(
                f"failed to load feature extractor weights from {weights_path}: {exc}"
            ) from exc
        for p in extractor.parameters():
            p.requires_grad_(False)
        extractor.eval()
    return extractor
