"""Report emission: JSON + CSV plus matplotlib figures rendered to files."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from facehall.metrics import EvalReport


def save_report(report: EvalReport, json_path: str | Path) -> list[Path]:
    """Write report.json, a sibling CSV, and score-distribution figures.

    Returns the list of files written. Figures share the JSON file's stem:
    <stem>.csv, <stem>_scores.png, and <stem>_cosine.png (the latter only
    when feature cosines are present).
    """
    json_path = Path(json_path)
    json_path.parent.mkdir(parents=True, exist_ok=True)
    report.save_json(json_path)
    csv_path = json_path.with_suffix(".csv")
    report.save_csv(csv_path)
    written = [json_path, csv_path]

    psnrs = [r.psnr_db for r in report.rows]
    ssims = [r.ssim for r in report.rows]
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    axes[0].hist(psnrs, bins=min(30, max(5, len(psnrs) // 4)), color="#4878d0")
    axes[0].axvline(report.mean_psnr_db, color="k", linestyle="--", linewidth=1)
    axes[0].set_xlabel("PSNR (dB)")
    axes[0].set_ylabel("images")
    axes[0].set_title(f"PSNR, mean {report.mean_psnr_db:.2f} dB")
    axes[1].hist(ssims, bins=min(30, max(5, len(ssims) // 4)), color="#ee854a")
    axes[1].axvline(report.mean_ssim, color="k", linestyle="--", linewidth=1)
    axes[1].set_xlabel("SSIM")
    axes[1].set_title(f"SSIM, mean {report.mean_ssim:.4f}")
    fig.suptitle(f"{report.method} (attributes: {report.attribute_source})")
    fig.tight_layout()
    scores_path = json_path.with_name(json_path.stem + "_scores.png")
    fig.savefig(scores_path, dpi=120)
    plt.close(fig)
    written.append(scores_path)

    cos_sr = [r.cos_sr_gt for r in report.rows if r.cos_sr_gt is not None]
    cos_lr = [r.cos_lr_gt for r in report.rows if r.cos_lr_gt is not None]
    if cos_sr and cos_lr:
        fig, ax = plt.subplots(figsize=(5.5, 3.5))
        bins = min(30, max(5, len(cos_sr) // 4))
        ax.hist(cos_lr, bins=bins, alpha=0.6, label="upsampled LR vs GT", color="#d65f5f")
        ax.hist(cos_sr, bins=bins, alpha=0.6, label="SR vs GT", color="#6acc64")
        ax.set_xlabel("feature cosine similarity")
        ax.set_ylabel("images")
        ax.legend()
        fig.tight_layout()
        cosine_path = json_path.with_name(json_path.stem + "_cosine.png")
        fig.savefig(cosine_path, dpi=120)
        plt.close(fig)
        written.append(cosine_path)
    return written


def plot_training_log(log_path: str | Path, out_png: str | Path) -> Path:
    """Render loss-component curves from a train_log.jsonl file."""
    steps: list[int] = []
    series: dict[str, list[float]] = {}
    with open(log_path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            entry = json.loads(line)
            steps.append(entry["step"])
            for key in (
                "gen_total",
                "gen_pixel_l1",
                "critic_total",
                "critic_wasserstein",
                "classifier_loss",
                "critic_grad_norm",
            ):
                if key in entry:
                    series.setdefault(key, []).append(entry[key])
    if not steps:
        raise ValueError(f"training log {log_path} is empty")

    fig, axes = plt.subplots(2, 1, figsize=(8, 6), sharex=True)
    for key in ("gen_total", "gen_pixel_l1", "classifier_loss"):
        if key in series:
            axes[0].plot(steps[: len(series[key])], series[key], label=key)
    axes[0].set_ylabel("generator / classifier loss")
    axes[0].legend(fontsize=8)
    for key in ("critic_total", "critic_wasserstein", "critic_grad_norm"):
        if key in series:
            axes[1].plot(steps[: len(series[key])], series[key], label=key)
    axes[1].set_xlabel("step")
    axes[1].set_ylabel("critic")
    axes[1].legend(fontsize=8)
    fig.tight_layout()
    out_png = Path(out_png)
    out_png.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out_png, dpi=120)
    plt.close(fig)
    return out_png
