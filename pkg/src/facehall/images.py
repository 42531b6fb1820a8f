"""Image primitives shared across the pipeline.

The universal image format is a float32 numpy array of shape (H, W, 3) with
values in [0, 1]. Torch tensors (N, 3, H, W) are used inside the networks;
conversion helpers live here so every module agrees on the layout.
"""

from __future__ import annotations

import base64
import io
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image as PILImage

PIPELINE_SIZES = (16, 32, 64, 128)


def load_image(path: str | Path) -> np.ndarray:
    """Load an 8-bit raster file as float32 (H, W, 3) in [0, 1]."""
    with PILImage.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32)
    return arr / 255.0


def save_image(img: np.ndarray, path: str | Path) -> None:
    """Write an image to disk as 8-bit PNG, clamping to [0, 1] first."""
    PILImage.fromarray(to_uint8(img)).save(path, format="PNG")


def to_uint8(img: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1] and quantize to uint8 (round-half-away via +0.5 floor)."""
    arr = np.clip(np.asarray(img, dtype=np.float32), 0.0, 1.0)
    return (arr * 255.0 + 0.5).astype(np.uint8)


def to_tensor(img: np.ndarray) -> torch.Tensor:
    """(H, W, 3) numpy -> (1, 3, H, W) float32 tensor."""
    arr = np.asarray(img, dtype=np.float32)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {arr.shape}")
    return torch.from_numpy(np.ascontiguousarray(arr.transpose(2, 0, 1)))[None]


def from_tensor(t: torch.Tensor) -> np.ndarray:
    """(3, H, W) or (1, 3, H, W) tensor -> (H, W, 3) float32 numpy array."""
    if t.dim() == 4:
        if t.shape[0] != 1:
            raise ValueError("from_tensor expects a single image, got a batch")
        t = t[0]
    return t.detach().cpu().float().numpy().transpose(1, 2, 0)


def center_crop(img: np.ndarray, size: int) -> np.ndarray:
    """Center crop to size x size; input must be at least that large."""
    h, w = img.shape[:2]
    if h < size or w < size:
        raise ValueError(f"image {h}x{w} is smaller than crop size {size}x{size}")
    top = (h - size) // 2
    left = (w - size) // 2
    return img[top : top + size, left : left + size]


def resize_bilinear(img: np.ndarray, out_size: int) -> np.ndarray:
    """Bilinear resize (align_corners=False) to out_size x out_size."""
    t = to_tensor(img)
    out = F.interpolate(t, size=(out_size, out_size), mode="bilinear", align_corners=False)
    return from_tensor(out)


def downsample_area(img: np.ndarray, out_size: int) -> np.ndarray:
    """Area-weighted downsample by exact block averaging.

    out_size must divide both image dimensions. Preserves constants and the
    image mean exactly (up to float rounding), which one-point bilinear
    sampling does not.
    """
    h, w = img.shape[:2]
    if h != w:
        raise ValueError(f"downsample expects a square image, got {h}x{w}")
    if out_size <= 0 or h % out_size != 0:
        raise ValueError(f"output size {out_size} does not divide input size {h}")
    f = h // out_size
    arr = np.asarray(img, dtype=np.float64)
    means = arr.reshape(out_size, f, out_size, f, 3).mean(axis=(1, 3))
    return means.astype(np.float32)


def upsample_bilinear(img: np.ndarray, out_size: int) -> np.ndarray:
    """One-shot bilinear upsample (align_corners=False) to out_size x out_size."""
    h, w = img.shape[:2]
    if out_size < h or out_size < w:
        raise ValueError(f"upsample target {out_size} is smaller than input {h}x{w}")
    return resize_bilinear(img, out_size)


def upsample2x(t: torch.Tensor) -> torch.Tensor:
    """Bilinear 2x upsample of an (N, C, H, W) tensor; the RGB skip-path operator."""
    return F.interpolate(t, scale_factor=2, mode="bilinear", align_corners=False)


def encode_png_base64(img: np.ndarray) -> str:
    """Encode an image as base64 PNG for JSON transport (lossless 8-bit RGB)."""
    buf = io.BytesIO()
    PILImage.fromarray(to_uint8(img)).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_png_base64(data: str) -> np.ndarray:
    """Decode a base64 PNG payload; lossy encodings are rejected.

    Raises ValueError for undecodable payloads or non-PNG containers (JPEG
    artifacts corrupt 16x16 content disproportionately).
    """
    try:
        raw = base64.b64decode(data, validate=True)
    except Exception as exc:
        raise ValueError(f"invalid base64 image payload: {exc}") from exc
    try:
        with PILImage.open(io.BytesIO(raw)) as im:
            fmt = im.format
            if fmt != "PNG":
                raise ValueError(
                    f"image payload must be PNG (lossless); got {fmt or 'unknown'}"
                )
            arr = np.asarray(im.convert("RGB"), dtype=np.float32)
    except ValueError:
        raise
    except Exception as exc:
        raise ValueError(f"undecodable image payload: {exc}") from exc
    return arr / 255.0
