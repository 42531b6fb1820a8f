"""facehall: progressive attribute-conditioned face hallucination (16x16 -> 128x128)."""

__version__ = "0.1.0"

from facehall.attributes import ATTRIBUTE_NAMES, NUM_ATTRIBUTES

__all__ = ["ATTRIBUTE_NAMES", "NUM_ATTRIBUTES", "__version__"]
