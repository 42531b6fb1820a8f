"""Metrics: closed forms, a loop-based SSIM oracle, and the eval protocol."""

import json
import math

import numpy as np
import pytest
import torch
import torch.nn as nn

from facehall.data import make_training_sample, read_manifest
from facehall.features import build_feature_extractor
from facehall.images import upsample_bilinear
from facehall.metrics import (
    PSNR_CAP_DB,
    SSIM_SIGMA,
    SSIM_WINDOW,
    EvalReport,
    EvalRow,
    bilinear_baseline,
    evaluate,
    feature_cosine,
    gaussian_window,
    psnr,
    ssim,
)


def _img(seed, h=32, w=32):
    return np.random.default_rng(seed).random((h, w, 3)).astype(np.float32)


# ---------------------------------------------------------------- PSNR


def test_psnr_identical_images_hit_the_cap():
    a = _img(0)
    assert psnr(a, a.copy()) == PSNR_CAP_DB


def test_psnr_uniform_offsets_match_closed_form():
    # offsets chosen to be exact in float32, so the MSE is exact too
    a = np.zeros((16, 16, 3), dtype=np.float32)
    assert abs(psnr(a, a + 0.25) - 10.0 * math.log10(16.0)) < 1e-12
    assert abs(psnr(a, a + 0.5) - 10.0 * math.log10(4.0)) < 1e-12


def test_psnr_peak_parameter():
    a = np.zeros((16, 16, 3), dtype=np.float32)
    assert abs(psnr(a, a + 0.25, peak=2.0) - 10.0 * math.log10(64.0)) < 1e-12


def test_psnr_decreases_with_noise():
    a = _img(1)
    rng = np.random.default_rng(2)
    small = np.clip(a + rng.normal(0, 0.01, a.shape), 0, 1).astype(np.float32)
    large = np.clip(a + rng.normal(0, 0.2, a.shape), 0, 1).astype(np.float32)
    assert psnr(small, a) > psnr(large, a)


def test_psnr_is_symmetric():
    a, b = _img(3), _img(4)
    assert abs(psnr(a, b) - psnr(b, a)) < 1e-12


def test_metric_input_validation():
    a = _img(0)
    with pytest.raises(ValueError, match="differ"):
        psnr(a, a[:16])
    with pytest.raises(ValueError, match="H, W, 3"):
        psnr(a[..., 0], a[..., 0])
    with pytest.raises(ValueError, match="11"):
        ssim(_img(0, 8, 8), _img(1, 8, 8))


# ---------------------------------------------------------------- SSIM


def test_gaussian_window_properties():
    k = gaussian_window()
    assert k.shape == (SSIM_WINDOW, SSIM_WINDOW)
    assert abs(k.sum() - 1.0) < 1e-12
    assert np.array_equal(k, k.T)
    assert k[5, 5] == k.max()
    # falloff matches the sigma: value one pixel off-center over the peak
    assert abs(k[5, 6] / k[5, 5] - math.exp(-1.0 / (2 * SSIM_SIGMA**2))) < 1e-12


def test_ssim_identity_is_exactly_one():
    a = _img(5)
    assert ssim(a, a.copy()) == 1.0


def test_ssim_is_symmetric_and_below_one_for_distinct_images():
    a, b = _img(6), _img(7)
    assert abs(ssim(a, b) - ssim(b, a)) < 1e-12
    assert ssim(a, b) < 1.0


def test_ssim_constant_images_closed_form():
    # zero variance and covariance leave only the luminance factor
    a = np.full((16, 16, 3), 0.2, dtype=np.float32)
    b = np.full((16, 16, 3), 0.3, dtype=np.float32)
    mx, my = 0.2, 0.3
    c1 = 0.01**2
    expected = (2 * mx * my + c1) / (mx * mx + my * my + c1)
    assert abs(ssim(a, b) - expected) < 1e-6


def test_ssim_ranks_blur_below_mild_noise():
    rng = np.random.default_rng(8)
    a = rng.random((32, 32, 3)).astype(np.float32)
    noisy = np.clip(a + rng.normal(0, 0.02, a.shape), 0, 1).astype(np.float32)
    flat = np.full_like(a, a.mean())
    assert ssim(noisy, a) > ssim(flat, a)


def _reference_ssim(a, b):
    """Straight-from-the-definition SSIM: python loops, no convolution tricks."""
    w = np.array([0.299, 0.587, 0.114], dtype=np.float64)
    x = a.astype(np.float64) @ w
    y = b.astype(np.float64) @ w
    kernel = gaussian_window()
    c1, c2 = 0.01**2, 0.03**2
    h, wd = x.shape
    k = SSIM_WINDOW
    values = []
    for i in range(h - k + 1):
        for j in range(wd - k + 1):
            px = x[i : i + k, j : j + k]
            py = y[i : i + k, j : j + k]
            mx = float((kernel * px).sum())
            my = float((kernel * py).sum())
            vx = float((kernel * px * px).sum()) - mx * mx
            vy = float((kernel * py * py).sum()) - my * my
            cov = float((kernel * px * py).sum()) - mx * my
            num = (2 * mx * my + c1) * (2 * cov + c2)
            den = (mx * mx + my * my + c1) * (vx + vy + c2)
            values.append(num / den)
    return float(np.mean(values))


def test_ssim_matches_loop_reference():
    rng = np.random.default_rng(9)
    for _ in range(3):
        a = rng.random((20, 24, 3)).astype(np.float32)
        b = np.clip(a + rng.normal(0, 0.1, a.shape), 0, 1).astype(np.float32)
        assert abs(ssim(a, b) - _reference_ssim(a, b)) < 1e-10


# ---------------------------------------------------------------- cosine


class TwoBucketExtractor(nn.Module):
    """Maps bright images to e1 and dark ones to e2; forces orthogonality."""

    def forward(self, images):
        bright = (images.mean() > 0.5).float()
        return torch.stack([bright, 1.0 - bright])[None]


def test_feature_cosine_identity_and_orthogonal():
    ext = build_feature_extractor(kind="tiny_random", seed=0)
    a = _img(10, 128, 128)
    assert abs(feature_cosine(a, a.copy(), ext) - 1.0) < 1e-12
    stub = TwoBucketExtractor()
    dark = np.full((128, 128, 3), 0.1, dtype=np.float32)
    bright = np.full((128, 128, 3), 0.9, dtype=np.float32)
    assert abs(feature_cosine(dark, bright, stub)) < 1e-12


def test_feature_cosine_zero_norm_raises():
    class ZeroExtractor(nn.Module):
        def forward(self, images):
            return torch.zeros(1, 4)

    a = _img(11, 128, 128)
    with pytest.raises(ValueError, match="zero norm"):
        feature_cosine(a, a, ZeroExtractor())


# ---------------------------------------------------------------- reports


def _rows():
    return [
        EvalRow(id="a", psnr_db=20.0, ssim=0.5, cos_lr_gt=0.8, cos_sr_gt=0.9),
        EvalRow(id="b", psnr_db=30.0, ssim=0.7, cos_lr_gt=0.6, cos_sr_gt=0.7),
    ]


def test_report_aggregates_means():
    report = EvalReport.from_rows("m", "ground_truth", _rows())
    assert report.mean_psnr_db == 25.0
    assert abs(report.mean_ssim - 0.6) < 1e-12
    assert abs(report.mean_cos_lr_gt - 0.7) < 1e-12
    assert abs(report.mean_cos_sr_gt - 0.8) < 1e-12


def test_report_handles_missing_cosines():
    rows = [EvalRow(id="a", psnr_db=20.0, ssim=0.5, cos_lr_gt=None, cos_sr_gt=None)]
    report = EvalReport.from_rows("m", "none", rows)
    assert report.mean_cos_lr_gt is None
    assert report.mean_cos_sr_gt is None


def test_report_rejects_zero_rows():
    with pytest.raises(ValueError, match="zero rows"):
        EvalReport.from_rows("m", "none", [])


def test_report_json_and_csv_outputs(tmp_path):
    report = EvalReport.from_rows("m", "ground_truth", _rows())
    jp, cp = tmp_path / "r.json", tmp_path / "r.csv"
    report.save_json(jp)
    report.save_csv(cp)
    loaded = json.loads(jp.read_text())
    assert loaded["mean_psnr_db"] == 25.0
    assert loaded["attribute_source"] == "ground_truth"
    assert "psnr" in loaded["conventions"]
    assert len(loaded["rows"]) == 2
    lines = cp.read_text().splitlines()
    assert lines[0] == "id,psnr_db,ssim,cos_lr_gt,cos_sr_gt"
    assert len(lines) == 3


# ---------------------------------------------------------------- protocols


def _fixture_manifest(fixture_checkpoint):
    return fixture_checkpoint.parent.parent / "manifest.jsonl"


def test_evaluate_is_deterministic(fixture_checkpoint):
    manifest = _fixture_manifest(fixture_checkpoint)
    a = evaluate(fixture_checkpoint, manifest, split="train", limit=4)
    b = evaluate(fixture_checkpoint, manifest, split="train", limit=4)
    assert a.to_dict() == b.to_dict()
    assert len(a.rows) == 4
    assert a.method == "facehall"
    assert all(np.isfinite(r.psnr_db) for r in a.rows)


def test_evaluate_source_selection(fixture_checkpoint):
    manifest = _fixture_manifest(fixture_checkpoint)
    gt = evaluate(fixture_checkpoint, manifest, attribute_source="gt", split="train", limit=2)
    assert gt.attribute_source == "ground_truth"
    clf = evaluate(
        fixture_checkpoint, manifest, attribute_source="classifier", split="train", limit=2
    )
    assert clf.attribute_source == "classifier"
    with pytest.raises(ValueError, match="attribute_source"):
        evaluate(fixture_checkpoint, manifest, attribute_source="oracle", split="train")


def test_evaluate_requires_stage_three(fixture_checkpoint):
    manifest = _fixture_manifest(fixture_checkpoint)
    stage1 = fixture_checkpoint.parent / "stage1_end.pt"
    with pytest.raises(ValueError, match="stage-3"):
        evaluate(stage1, manifest, split="train")


def test_evaluate_empty_split_rejected(fixture_checkpoint):
    manifest = _fixture_manifest(fixture_checkpoint)
    with pytest.raises(ValueError, match="test"):
        evaluate(fixture_checkpoint, manifest, split="test")


def test_bilinear_baseline_scores_match_direct_computation(fixture_checkpoint):
    manifest = _fixture_manifest(fixture_checkpoint)
    report = bilinear_baseline(manifest, split="train", limit=3)
    assert report.method == "bilinear"
    assert len(report.rows) == 3
    records = read_manifest(manifest, split="train")[:3]
    for row, record in zip(report.rows, records):
        sample = make_training_sample(record)
        up = upsample_bilinear(sample.lr, 128)
        assert row.id == record.id
        assert abs(row.psnr_db - psnr(up, sample.targets[128])) < 1e-12
        assert abs(row.ssim - ssim(up, sample.targets[128])) < 1e-12


def test_bilinear_baseline_with_extractor_fills_cosines(fixture_checkpoint):
    manifest = _fixture_manifest(fixture_checkpoint)
    ext = build_feature_extractor(kind="tiny_random", seed=0)
    report = bilinear_baseline(manifest, split="train", limit=2, extractor=ext)
    assert all(r.cos_sr_gt is not None for r in report.rows)
    # bilinear SR is the upsampled LR, so the two cosines coincide
    assert all(r.cos_sr_gt == r.cos_lr_gt for r in report.rows)
