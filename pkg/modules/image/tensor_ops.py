"""
Normalization and the preprocessing/mask algebra applied before restoration.

ImageTensor grids are float64 arrays of shape (height, width); PixelMask grids
are uint8 arrays holding only 0 and 1.
"""

from typing import Optional

import numpy as np

from modules.seconv.data_classes import CropPolicy


def normalize(image: np.ndarray) -> np.ndarray:
    return np.asarray(image, dtype=np.float64) / 255.0


def denormalize(tensor: np.ndarray) -> np.ndarray:
    """Clamp to [0, 1], scale by 255 and round half away from zero."""
    scaled = np.clip(np.asarray(tensor, dtype=np.float64), 0.0, 1.0) * 255.0
    # values are non-negative after the clamp, so floor(x + 0.5) is half-away-from-zero
    return np.floor(scaled + 0.5).astype(np.uint8)


def preprocess(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    return np.where(a == 1.0, 0.0, a)


def nonnoisy_mask(a_tilde: np.ndarray) -> np.ndarray:
    return (np.asarray(a_tilde) != 0).astype(np.uint8)


def invert_mask(mask: np.ndarray) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.size and not np.isin(mask, (0, 1)).all():
        raise ValueError("mask must be binary")
    return (1 - mask).astype(np.uint8)


def crop(image: np.ndarray,
         size: int,
         policy: CropPolicy = CropPolicy.CENTER,
         seed: Optional[int] = None) -> np.ndarray:
    """
    Square crop of side ``size`` (clipped to the image).

    The center policy is deterministic; the random policy draws the top-left
    corner from PCG64 seeded with ``seed``.
    """
    height, width = image.shape
    ch = cw = min(size, height, width)
    if CropPolicy(policy) == CropPolicy.RANDOM:
        rng = np.random.default_rng(seed)
        top = int(rng.integers(0, height - ch + 1))
        left = int(rng.integers(0, width - cw + 1))
    else:
        top = (height - ch) // 2
        left = (width - cw) // 2
    return image[top:top + ch, left:left + cw].copy()
