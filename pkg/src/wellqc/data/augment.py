"""Label-preserving augmentations: the three square-preserving involutions.

"hflip" mirrors columns, "vflip" mirrors rows, and "rot180" is their
composition. Each op is its own inverse and only permutes pixels, so the
multiset of pixel values is unchanged.
"""

import numpy as np

from wellqc.data.wells import LabeledExample, WellImage

AUG_NONE = "none"
AUG_OPS = ("hflip", "vflip", "rot180")


def augment_pixels(pixels: np.ndarray, op: str) -> np.ndarray:
    if op == AUG_NONE:
        return np.ascontiguousarray(pixels)
    if op == "hflip":
        return np.ascontiguousarray(pixels[:, ::-1])
    if op == "vflip":
        return np.ascontiguousarray(pixels[::-1, :])
    if op == "rot180":
        return np.ascontiguousarray(pixels[::-1, ::-1])
    raise ValueError(f"unknown augmentation {op!r}; expected one of {(AUG_NONE,) + AUG_OPS}")


def augment(example: LabeledExample, op: str) -> LabeledExample:
    """Apply one augmentation; the label is preserved."""
    image = example.image
    return LabeledExample(
        image=WellImage(
            pixels=augment_pixels(image.pixels, op),
            source_id=f"{image.source_id}+{op}" if image.source_id else op,
            row=image.row,
            col=image.col,
        ),
        label=example.label,
    )
