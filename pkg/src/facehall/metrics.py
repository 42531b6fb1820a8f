"""Image quality metrics and the evaluation protocol.

Conventions, declared because they shift absolute numbers by a few tenths:
PSNR is computed on RGB jointly (one MSE over all channels); SSIM is
computed on luma (ITU-R 601 weights) with an 11x11 Gaussian window
(sigma 1.5) over valid positions only (no padding).
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from facehall.classifier import classify
from facehall.data import make_training_sample, read_manifest
from facehall.features import FeatureExtractor
from facehall.images import from_tensor, to_tensor, upsample_bilinear

PSNR_CAP_DB = 100.0
LUMA_WEIGHTS = (0.299, 0.587, 0.114)
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5

CONVENTIONS = {
    "psnr": "RGB-joint MSE",
    "ssim": "luma (ITU-R 601), 11x11 Gaussian window sigma=1.5, valid positions",
}


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    if a.ndim != 3 or a.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) images, got {a.shape}")


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; capped at 100 dB when MSE is zero."""
    _check_pair(a, b)
    mse = float(np.mean((a.astype(np.float64) - b.astype(np.float64)) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    value = 10.0 * np.log10(peak * peak / mse)
    return float(min(value, PSNR_CAP_DB))


def _luma(img: np.ndarray) -> np.ndarray:
    w = np.asarray(LUMA_WEIGHTS, dtype=np.float64)
    return img.astype(np.float64) @ w


def gaussian_window(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    """Normalized 2D Gaussian window used for local SSIM statistics."""
    half = (size - 1) / 2.0
    coords = np.arange(size, dtype=np.float64) - half
    g = np.exp(-(coords**2) / (2.0 * sigma * sigma))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def _local_means(x: torch.Tensor, kernel: torch.Tensor) -> torch.Tensor:
    return F.conv2d(x, kernel)


def ssim(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """Mean local SSIM over luma; symmetric; 1.0 iff the images are identical."""
    _check_pair(a, b)
    if a.shape[0] < SSIM_WINDOW or a.shape[1] < SSIM_WINDOW:
        raise ValueError(
            f"images must be at least {SSIM_WINDOW}x{SSIM_WINDOW} for SSIM, got {a.shape[:2]}"
        )
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    x = torch.from_numpy(_luma(a))[None, None]
    y = torch.from_numpy(_luma(b))[None, None]
    kernel = torch.from_numpy(gaussian_window())[None, None]

    mu_x = _local_means(x, kernel)
    mu_y = _local_means(y, kernel)
    var_x = _local_means(x * x, kernel) - mu_x * mu_x
    var_y = _local_means(y * y, kernel) - mu_y * mu_y
    cov = _local_means(x * y, kernel) - mu_x * mu_y

    num = (2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float((num / den).mean().item())


def feature_cosine(a: np.ndarray, b: np.ndarray, extractor: FeatureExtractor) -> float:
    """Cosine similarity between extractor features of two 128x128 images."""
    _check_pair(a, b)
    with torch.no_grad():
        fa = extractor(to_tensor(a)).flatten().double()
        fb = extractor(to_tensor(b)).flatten().double()
    na = torch.linalg.vector_norm(fa)
    nb = torch.linalg.vector_norm(fb)
    if na.item() == 0.0 or nb.item() == 0.0:
        raise ValueError("feature vector has zero norm; cosine undefined")
    return float((torch.dot(fa, fb) / (na * nb)).item())


@dataclass
class EvalRow:
    id: str
    psnr_db: float
    ssim: float
    cos_lr_gt: float | None
    cos_sr_gt: float | None


@dataclass
class EvalReport:
    method: str
    attribute_source: str
    rows: list[EvalRow]
    mean_psnr_db: float = 0.0
    mean_ssim: float = 0.0
    mean_cos_lr_gt: float | None = None
    mean_cos_sr_gt: float | None = None
    conventions: dict = field(default_factory=lambda: dict(CONVENTIONS))

    @classmethod
    def from_rows(cls, method: str, attribute_source: str, rows: list[EvalRow]) -> "EvalReport":
        if not rows:
            raise ValueError("cannot build a report from zero rows")

        def mean_of(values):
            present = [v for v in values if v is not None]
            return float(np.mean(present)) if present else None

        return cls(
            method=method,
            attribute_source=attribute_source,
            rows=rows,
            mean_psnr_db=float(np.mean([r.psnr_db for r in rows])),
            mean_ssim=float(np.mean([r.ssim for r in rows])),
            mean_cos_lr_gt=mean_of([r.cos_lr_gt for r in rows]),
            mean_cos_sr_gt=mean_of([r.cos_sr_gt for r in rows]),
        )

    def to_dict(self) -> dict:
        return asdict(self)

    def save_json(self, path: str | Path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write("\n")

    def save_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["id", "psnr_db", "ssim", "cos_lr_gt", "cos_sr_gt"])
            for r in self.rows:
                writer.writerow([r.id, r.psnr_db, r.ssim, r.cos_lr_gt, r.cos_sr_gt])


def _score_pair(
    record_id: str,
    sr: np.ndarray,
    hr: np.ndarray,
    lr_up: np.ndarray,
    extractor: FeatureExtractor | None,
) -> EvalRow:
    if extractor is not None:
        cos_lr = feature_cosine(lr_up, hr, extractor)
        cos_sr = feature_cosine(sr, hr, extractor)
    else:
        cos_lr = None
        cos_sr = None
    return EvalRow(
        id=record_id,
        psnr_db=psnr(sr, hr),
        ssim=ssim(sr, hr),
        cos_lr_gt=cos_lr,
        cos_sr_gt=cos_sr,
    )


def evaluate(
    checkpoint: str | Path,
    manifest: str | Path,
    attribute_source: str = "classifier",
    split: str = "test",
    limit: int | None = None,
) -> EvalReport:
    """Score a trained model on a manifest split.

    attribute_source chooses what conditions the generator: "classifier"
    runs the LR attribute classifier, "ground_truth" (alias "gt") uses the
    manifest labels. The checkpoint must be at stage 3 since the metrics are
    defined at 128x128.
    """
    from facehall.trainer import load_checkpoint

    source = {"gt": "ground_truth"}.get(attribute_source, attribute_source)
    if source not in ("classifier", "ground_truth"):
        raise ValueError(
            f"attribute_source must be 'classifier' or 'ground_truth', got {attribute_source!r}"
        )
    state = load_checkpoint(checkpoint)
    if state.active_stage != 3:
        raise ValueError(
            f"evaluation needs a stage-3 checkpoint (128x128 outputs); got stage {state.active_stage}"
        )
    state.generator.eval()
    state.classifier.eval()

    records = read_manifest(manifest, split=split)
    if limit is not None:
        records = records[:limit]
    if not records:
        raise ValueError(f"no records in split {split!r} of {manifest}")

    rows = []
    with torch.no_grad():
        for record in records:
            sample = make_training_sample(record)
            lr_t = to_tensor(sample.lr)
            if source == "classifier":
                attrs = classify(state.classifier, lr_t)
            else:
                attrs = torch.from_numpy(sample.attributes)[None]
            sr = state.generator(lr_t, attrs, 3)[128].clamp(0.0, 1.0)
            rows.append(
                _score_pair(
                    record.id,
                    from_tensor(sr),
                    sample.targets[128],
                    upsample_bilinear(sample.lr, 128),
                    state.extractor,
                )
            )
    return EvalReport.from_rows("facehall", source, rows)


def bilinear_baseline(
    manifest: str | Path,
    split: str = "test",
    limit: int | None = None,
    extractor: FeatureExtractor | None = None,
) -> EvalReport:
    """Score plain bilinear 16->128 upsampling on a manifest split."""
    records = read_manifest(manifest, split=split)
    if limit is not None:
        records = records[:limit]
    if not records:
        raise ValueError(f"no records in split {split!r} of {manifest}")
    rows = []
    for record in records:
        sample = make_training_sample(record)
        lr_up = upsample_bilinear(sample.lr, 128)
        rows.append(_score_pair(record.id, lr_up, sample.targets[128], lr_up, extractor))
    return EvalReport.from_rows("bilinear", "none", rows)
