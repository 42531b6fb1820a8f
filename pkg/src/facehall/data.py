"""Dataset ingestion and sample preparation.

Turns a CelebA-style image + attribute corpus into aligned training samples:
a 16x16 LR input, per-stage HR targets at 32/64/128, and a binary attribute
vector. HR images follow the published protocol: center crop to 120x120,
bilinear resize to 128x128, then area downsampling for the LR input and the
intermediate targets.

Sample preparation is pure: for a given record the outputs are identical
regardless of iteration order or parallelism.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from facehall.attributes import (
    ATTRIBUTE_NAMES,
    CELEBA_COLUMN_ALIASES,
    NUM_ATTRIBUTES,
    validate_attributes,
)
from facehall.images import center_crop, downsample_area, load_image, resize_bilinear

HR_SIZE = 128
CROP_SIZE = 120
LR_SIZE = 16
TARGET_SIZES = (32, 64, 128)


class DatasetError(ValueError):
    """Raised for unreadable corpora: missing files, bad headers, malformed rows."""


@dataclass
class SampleRecord:
    """One dataset entry: an image path plus its binary attribute labels."""

    id: str
    image_path: str
    attributes: np.ndarray  # length 12, values exactly 0 or 1
    split: str = "train"  # "train" | "test"

    def __post_init__(self):
        self.attributes = validate_attributes(self.attributes)
        if not np.all((self.attributes == 0.0) | (self.attributes == 1.0)):
            raise DatasetError(
                f"record {self.id}: ground-truth attributes must be exactly 0 or 1"
            )
        if self.split not in ("train", "test"):
            raise DatasetError(f"record {self.id}: split must be train|test, got {self.split!r}")


@dataclass
class TrainingSample:
    """Aligned (LR, per-stage targets, attributes) triple for one record."""

    lr: np.ndarray  # 16x16x3
    targets: dict[int, np.ndarray] = field(default_factory=dict)  # {32, 64, 128}
    attributes: np.ndarray = None


def prepare_hr(image: np.ndarray) -> np.ndarray:
    """Raw image -> 128x128 HR target: center 120x120 crop, bilinear resize.

    Input must be at least 120x120. Output values are clamped to [0, 1].
    """
    h, w = image.shape[:2]
    if h < CROP_SIZE or w < CROP_SIZE:
        raise DatasetError(
            f"input image is {h}x{w}; needs at least {CROP_SIZE}x{CROP_SIZE}"
        )
    cropped = center_crop(image, CROP_SIZE)
    resized = resize_bilinear(cropped, HR_SIZE)
    return np.clip(resized, 0.0, 1.0)


def downsample(image: np.ndarray, out_size: int) -> np.ndarray:
    """Area-weighted bilinear downsample to out_size; out_size must divide the input."""
    if out_size not in (16, 32, 64):
        raise DatasetError(f"downsample target must be one of 16/32/64, got {out_size}")
    return downsample_area(image, out_size)


def make_training_sample(record: SampleRecord) -> TrainingSample:
    """Load a record's image and build its LR input and per-stage targets.

    targets[128] is the prepared HR image itself; 32/64 are its downsamples,
    and the LR input is the 16x16 downsample of the same HR image.
    """
    hr = prepare_hr(load_image(record.image_path))
    targets = {32: downsample(hr, 32), 64: downsample(hr, 64), 128: hr}
    lr = downsample(hr, LR_SIZE)
    return TrainingSample(lr=lr, targets=targets, attributes=record.attributes.copy())


def split_dataset(
    records: list[SampleRecord], train_count: int, seed: int
) -> tuple[list[SampleRecord], list[SampleRecord]]:
    """Deterministic seeded split into (train, test); disjoint, union = input.

    Returned records carry updated ``split`` fields. Order within each part
    follows the seeded permutation.
    """
    n = len(records)
    if not 0 <= train_count <= n:
        raise DatasetError(f"train_count {train_count} out of range for {n} records")
    perm = np.random.default_rng(seed).permutation(n)
    train, test = [], []
    for pos, idx in enumerate(perm):
        rec = records[int(idx)]
        part = "train" if pos < train_count else "test"
        out = SampleRecord(rec.id, rec.image_path, rec.attributes.copy(), part)
        (train if part == "train" else test).append(out)
    return train, test


def sample_random_attributes(rng: np.random.Generator, continuous: bool = False) -> np.ndarray:
    """Randomized conditioning vector: independent Bernoulli(0.5) in {0, 1}.

    With continuous=True, draws uniform values in [0, 1) instead (config
    option, off by default).
    """
    if continuous:
        return rng.random(NUM_ATTRIBUTES, dtype=np.float32)
    return rng.integers(0, 2, size=NUM_ATTRIBUTES).astype(np.float32)


def ingest_manifest(
    attribute_file: str | Path,
    image_dir: str | Path,
    limit: int | None = None,
) -> list[SampleRecord]:
    """Parse a CelebA-style attribute file into SampleRecords.

    Accepts the ``list_attr_celeba`` text layout: optional leading count line,
    a header of attribute names, then rows of ``<image> +1/-1 ...`` mapping
    -1 -> 0 and +1 -> 1. All 12 schema attributes must be present in the
    header (fatal otherwise); every referenced image must exist (fatal, with
    the offending id); malformed rows raise with their line number.
    """
    attribute_file = Path(attribute_file)
    image_dir = Path(image_dir)
    if not attribute_file.is_file():
        raise DatasetError(f"attribute file not found: {attribute_file}")
    if not image_dir.is_dir():
        raise DatasetError(f"image directory not found: {image_dir}")

    lines = attribute_file.read_text().splitlines()
    # Skip blank lines and the optional leading record-count line.
    rows = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip()]
    if not rows:
        return []
    if len(rows[0][1].split()) == 1 and rows[0][1].split()[0].isdigit():
        rows = rows[1:]
        if not rows:
            return []

    header = rows[0][1].split()
    column_for: dict[str, int] = {}
    for name in ATTRIBUTE_NAMES:
        for alias in CELEBA_COLUMN_ALIASES[name]:
            token = alias.replace(" ", "_")
            if token in header:
                column_for[name] = header.index(token)
                break
        else:
            raise DatasetError(
                f"attribute file header is missing schema attribute {name!r} "
                f"(accepted columns: {CELEBA_COLUMN_ALIASES[name]})"
            )

    records: list[SampleRecord] = []
    seen: set[str] = set()
    for lineno, line in rows[1:]:
        parts = line.split()
        if len(parts) != len(header) + 1:
            raise DatasetError(
                f"{attribute_file.name}:{lineno}: expected {len(header) + 1} fields, "
                f"got {len(parts)}"
            )
        image_id = parts[0]
        if image_id in seen:
            raise DatasetError(f"{attribute_file.name}:{lineno}: duplicate id {image_id!r}")
        seen.add(image_id)
        values = np.zeros(NUM_ATTRIBUTES, dtype=np.float32)
        for k, name in enumerate(ATTRIBUTE_NAMES):
            raw = parts[1 + column_for[name]]
            if raw == "1":
                values[k] = 1.0
            elif raw == "-1":
                values[k] = 0.0
            else:
                raise DatasetError(
                    f"{attribute_file.name}:{lineno}: label for {name!r} must be "
                    f"+1 or -1, got {raw!r}"
                )
        path = image_dir / image_id
        if not path.is_file():
            raise DatasetError(f"image file missing for record {image_id!r}: {path}")
        records.append(SampleRecord(image_id, str(path), values))
        if limit is not None and len(records) >= limit:
            break
    return records


def write_manifest(records: list[SampleRecord], path: str | Path) -> None:
    """Write records as JSON-lines: {"id", "image_path", "attributes", "split"}."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for rec in records:
            f.write(
                json.dumps(
                    {
                        "id": rec.id,
                        "image_path": rec.image_path,
                        "attributes": [float(v) for v in rec.attributes],
                        "split": rec.split,
                    }
                )
                + "\n"
            )


def read_manifest(path: str | Path, split: str | None = None) -> list[SampleRecord]:
    """Read a JSON-lines manifest, optionally filtering by split."""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"manifest not found: {path}")
    records: list[SampleRecord] = []
    seen: set[str] = set()
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                rec = SampleRecord(
                    str(obj["id"]), str(obj["image_path"]), obj["attributes"], obj["split"]
                )
            except (KeyError, ValueError, TypeError) as exc:
                raise DatasetError(f"{path.name}:{lineno}: malformed record: {exc}") from exc
            if rec.id in seen:
                raise DatasetError(f"{path.name}:{lineno}: duplicate id {rec.id!r}")
            seen.add(rec.id)
            if split is None or rec.split == split:
                records.append(rec)
    return records
