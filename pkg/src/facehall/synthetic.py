"""Procedural test data: attribute-driven face images and fixture artifacts.

Real face corpora are large and license-bound, so the test suite and demos
run on drawn faces instead: simple geometry in a 178x218 canvas whose look is
controlled by the same 12-attribute schema the real pipeline uses. The
drawings are crude on purpose; they give the networks consistent, learnable
structure per attribute without pretending to be photographs.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch

from facehall.attributes import ATTRIBUTE_NAMES, attribute_index
from facehall.images import save_image

RAW_WIDTH = 178
RAW_HEIGHT = 218
RENDER_NOISE = 0.003
WRINKLE_AMPLITUDE = 0.07

_IDX = {name: attribute_index(name) for name in ATTRIBUTE_NAMES}


def render_face(attrs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one 218x178 RGB face controlled by the 12 attributes."""
    h, w = RAW_HEIGHT, RAW_WIDTH
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float32)
    img = np.empty((h, w, 3), dtype=np.float32)
    bg = np.array(rng.uniform(0.1, 0.45, size=3), dtype=np.float32)
    img[:] = bg
    img += (yy / h)[..., None] * 0.08

    cx, cy = w / 2.0, h * 0.52
    male = attrs[_IDX["Male"]]
    young = attrs[_IDX["Young"]]
    face_rx = w * (0.27 + 0.05 * male)
    face_ry = h * 0.30
    face_r2 = ((xx - cx) / face_rx) ** 2 + ((yy - cy) / face_ry) ** 2
    face = face_r2 <= 1.0

    pale = attrs[_IDX["Pale"]]
    skin = np.array([0.85, 0.68, 0.55], dtype=np.float32)
    skin = skin + pale * np.array([0.04, 0.18, 0.25], dtype=np.float32)
    img[face] = np.clip(skin, 0.0, 1.0)

    # hair: a cap above the face unless bald; color picked by the hair bits
    bald = attrs[_IDX["Bald"]]
    hair_color = np.array([0.45, 0.32, 0.2], dtype=np.float32)
    if attrs[_IDX["Black Hair"]] > 0.5:
        hair_color = np.array([0.13, 0.12, 0.13], dtype=np.float32)
    elif attrs[_IDX["Blond Hair"]] > 0.5:
        hair_color = np.array([0.88, 0.78, 0.4], dtype=np.float32)
    elif attrs[_IDX["Brown Hair"]] > 0.5:
        hair_color = np.array([0.42, 0.26, 0.12], dtype=np.float32)
    if bald < 0.5:
        hair = (((xx - cx) / (face_rx * 1.12)) ** 2 + ((yy - cy * 0.88) / (face_ry * 1.1)) ** 2 <= 1.0) & (
            yy < cy - face_ry * 0.35
        )
        img[hair] = hair_color
    if attrs[_IDX["Bangs"]] > 0.5 and bald < 0.5:
        bangs = face & (yy < cy - face_ry * 0.45)
        img[bangs] = hair_color

    eye_y = cy - face_ry * 0.22
    eye_dx = face_rx * 0.42
    for sign in (-1.0, 1.0):
        ex = cx + sign * eye_dx
        eye = ((xx - ex) / (w * 0.035)) ** 2 + ((yy - eye_y) / (h * 0.018)) ** 2 <= 1.0
        img[eye] = np.array([0.85, 0.85, 0.87], dtype=np.float32)
        pupil = ((xx - ex) / (w * 0.012)) ** 2 + ((yy - eye_y) / (h * 0.012)) ** 2 <= 1.0
        img[pupil] = np.array([0.13, 0.17, 0.3], dtype=np.float32)

        brow_h = h * (0.008 + 0.014 * attrs[_IDX["Bushy Eyebrows"]])
        brow = (np.abs(yy - (eye_y - h * 0.045)) < brow_h) & (np.abs(xx - ex) < w * 0.05)
        img[brow] = np.array([0.18, 0.13, 0.11], dtype=np.float32)

        if attrs[_IDX["Eyeglasses"]] > 0.5:
            r = np.sqrt((xx - ex) ** 2 + (yy - eye_y) ** 2)
            ring = (r > w * 0.05) & (r < w * 0.062)
            img[ring] = np.array([0.13, 0.13, 0.13], dtype=np.float32)
    if attrs[_IDX["Eyeglasses"]] > 0.5:
        bridge = (np.abs(yy - eye_y) < h * 0.006) & (np.abs(xx - cx) < eye_dx * 0.6)
        img[bridge] = np.array([0.13, 0.13, 0.13], dtype=np.float32)

    mouth_y = cy + face_ry * 0.45
    mouth_open = attrs[_IDX["Mouth Open"]]
    mouth_ry = h * (0.008 + 0.022 * mouth_open)
    mouth = ((xx - cx) / (w * 0.09)) ** 2 + ((yy - mouth_y) / mouth_ry) ** 2 <= 1.0
    mouth_color = np.array([0.6, 0.2, 0.22], dtype=np.float32)
    if mouth_open > 0.5:
        mouth_color = np.array([0.25, 0.12, 0.12], dtype=np.float32)
    img[mouth] = mouth_color

    if attrs[_IDX["Mustache"]] > 0.5:
        tache = (np.abs(yy - (mouth_y - h * 0.045)) < h * 0.012) & (np.abs(xx - cx) < w * 0.1)
        img[tache] = np.array([0.14, 0.11, 0.1], dtype=np.float32)

    # wrinkles on older faces: a horizontal sinusoid over the skin. The raw
    # period of 7.5 rows lands on exactly 8 rows once the 120-row crop is
    # resized to 128, and a period-8 sinusoid sums to zero over any aligned
    # 8-row block, so the texture survives in every training target but
    # cancels out of the 16x16 input. Recovering it needs the attribute; the
    # input pixels carry nothing. The radial taper keeps partial rows at the
    # face boundary from breaking that balance, and eye and pale skin
    # brightness leave headroom so the wave never clips.
    if young < 0.5:
        taper = np.clip(2.0 * (1.0 - face_r2), 0.0, 1.0)
        wave = WRINKLE_AMPLITUDE * np.sin(2.0 * np.pi * yy / 7.5) * taper
        img += wave[..., None]

    img += rng.normal(0.0, RENDER_NOISE, size=img.shape).astype(np.float32)
    return np.clip(img, 0.0, 1.0)


def make_synthetic_dataset(
    out_dir: str | Path, count: int, seed: int = 0, aging_pairs: bool = False
):
    """Write `count` face PNGs plus an attribute file in the list_attr layout.

    Returns (image_dir, attr_path); feed these to ingest_manifest / the
    prepare-data CLI exactly as you would a real corpus.

    With aging_pairs, consecutive images are the same face rendered from the
    same random stream, differing only in Young and therefore in the wrinkle
    texture. Since the texture cancels out of the 16x16 input, pair members
    have matching inputs but different high-resolution targets, and only the
    attribute can tell them apart: the setup that separates conditioning
    from pixel memorization.
    """
    out_dir = Path(out_dir)
    image_dir = out_dir / "images"
    image_dir.mkdir(parents=True, exist_ok=True)
    master = np.random.default_rng(seed)
    young = _IDX["Young"]
    pair_attrs: np.ndarray | None = None
    lines = [str(count), " ".join(name.replace(" ", "_") for name in ATTRIBUTE_NAMES)]
    for i in range(count):
        if aging_pairs:
            if i % 2 == 0 or pair_attrs is None:
                pair_attrs = master.integers(0, 2, size=12).astype(np.float32)
            attrs = pair_attrs.copy()
            attrs[young] = float(1 - i % 2)
            rng = np.random.default_rng([seed, i // 2])
        else:
            attrs = master.integers(0, 2, size=12).astype(np.float32)
            rng = np.random.default_rng([seed, i])
        name = f"{i + 1:06d}.png"
        save_image(render_face(attrs, rng), image_dir / name)
        row = " ".join("1" if v > 0.5 else "-1" for v in attrs)
        lines.append(f"{name} {row}")
    attr_path = out_dir / "list_attr.txt"
    attr_path.write_text("\n".join(lines) + "\n")
    return image_dir, attr_path


def brightness_batch(attrs: torch.Tensor, rng: np.random.Generator) -> torch.Tensor:
    """16x16 images where attribute j sets the brightness of block j.

    The 16x16 canvas is tiled into a 3x4 grid of 12 blocks; block j is bright
    when attribute j is 1 and dark otherwise, plus mild noise. A direct
    sanity signal for the LR attribute classifier.
    """
    n = attrs.shape[0]
    imgs = np.full((n, 3, 16, 16), 0.2, dtype=np.float32)
    row_edges = [0, 6, 11, 16]
    col_edges = [0, 4, 8, 12, 16]
    a = attrs.numpy()
    for j in range(12):
        r, c = divmod(j, 4)
        r0, r1 = row_edges[r], row_edges[r + 1]
        c0, c1 = col_edges[c], col_edges[c + 1]
        imgs[:, :, r0:r1, c0:c1] += 0.6 * a[:, j, None, None, None]
    imgs += rng.normal(0.0, 0.02, size=imgs.shape).astype(np.float32)
    return torch.from_numpy(np.clip(imgs, 0.0, 1.0))


def make_fixture_checkpoint(out_dir: str | Path, seed: int = 0) -> Path:
    """Train a tiny model end to end and return its stage-3 checkpoint.

    Small enough to run in well under a minute on a CPU; used by service and
    UI tests that need a real (if weak) trained artifact.
    """
    from facehall.data import ingest_manifest, split_dataset, write_manifest
    from facehall.trainer import TrainConfig, run_training

    out_dir = Path(out_dir)
    image_dir, attr_path = make_synthetic_dataset(out_dir / "data", count=8, seed=seed)
    records = ingest_manifest(attr_path, image_dir)
    train, test = split_dataset(records, train_count=len(records), seed=seed)
    manifest = out_dir / "manifest.jsonl"
    write_manifest(train + test, manifest)
    config = TrainConfig(
        stage_epochs=(1, 1, 1),
        batch_size=4,
        n_critic=2,
        seed=seed,
        checkpoint_every=0,
        output_dir=str(out_dir / "run"),
        base_channels=8,
        critic_channels=8,
        classifier_channels=8,
        residual_blocks_per_stage=1,
        extractor_kind="tiny_random",
    )
    return run_training(config, manifest)
