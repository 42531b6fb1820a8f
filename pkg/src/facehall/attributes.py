"""The 12-attribute schema and attribute-vector helpers.

Attribute vectors are length-12 float arrays with values in [0, 1], in the
fixed order below. Ground-truth labels are binary {0, 1}; conditioning
vectors may be continuous.
"""

from __future__ import annotations

import numpy as np

ATTRIBUTE_NAMES: tuple[str, ...] = (
    "Bald",
    "Bangs",
    "Black Hair",
    "Blond Hair",
    "Brown Hair",
    "Bushy Eyebrows",
    "Eyeglasses",
    "Male",
    "Mouth Open",
    "Mustache",
    "Pale",
    "Young",
)

NUM_ATTRIBUTES = len(ATTRIBUTE_NAMES)

# Accepted header spellings when ingesting a CelebA-style attribute file.
# Keys are schema names, values the raw column names that map onto them.
CELEBA_COLUMN_ALIASES: dict[str, tuple[str, ...]] = {
    "Bald": ("Bald",),
    "Bangs": ("Bangs",),
    "Black Hair": ("Black_Hair", "Black Hair"),
    "Blond Hair": ("Blond_Hair", "Blond Hair"),
    "Brown Hair": ("Brown_Hair", "Brown Hair"),
    "Bushy Eyebrows": ("Bushy_Eyebrows", "Bushy Eyebrows"),
    "Eyeglasses": ("Eyeglasses",),
    "Male": ("Male",),
    "Mouth Open": ("Mouth_Slightly_Open", "Mouth_Open", "Mouth Open"),
    "Mustache": ("Mustache",),
    "Pale": ("Pale_Skin", "Pale"),
    "Young": ("Young",),
}


def validate_attributes(values) -> np.ndarray:
    """Coerce ``values`` to a float32 vector of the schema length, all in [0, 1].

    Raises ValueError on wrong length, non-finite entries, or out-of-range
    values.
    """
    arr = np.asarray(values, dtype=np.float32).reshape(-1)
    if arr.shape[0] != NUM_ATTRIBUTES:
        raise ValueError(
            f"attribute vector must have length {NUM_ATTRIBUTES}, got {arr.shape[0]}"
        )
    if not np.all(np.isfinite(arr)):
        raise ValueError("attribute vector contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(
            f"attribute values must lie in [0, 1], got range "
            f"[{arr.min():.4f}, {arr.max():.4f}]"
        )
    return arr


def random_attributes(rng: np.random.Generator) -> np.ndarray:
    """Draw a randomized conditioning vector: independent Bernoulli(0.5) in {0, 1}."""
    return rng.integers(0, 2, size=NUM_ATTRIBUTES).astype(np.float32)


def attribute_index(name: str) -> int:
    """Index of a schema attribute by name; raises with the full schema on miss."""
    try:
        return ATTRIBUTE_NAMES.index(name)
    except ValueError:
        raise KeyError(
            f"unknown attribute {name!r}; schema is {list(ATTRIBUTE_NAMES)}"
        ) from None
